from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cornerscatter.polyalg import (
    GaussianRational,
    I,
    NotDivisible,
    Poly,
    elementary_symmetric,
    format_poly,
    parity_decompose,
    parity_reconstruct,
    parse_poly,
    poly_add,
    poly_divide_exact,
    poly_divmod,
    poly_mul,
    substitute_squares,
)


def xs(n):
    return Poly.variables(n)


# -- strategies --------------------------------------------------------------

small_int = st.integers(-4, 4)
gauss = st.builds(GaussianRational, small_int, small_int)


@st.composite
def polys(draw, n=None, max_degree=4, max_terms=5):
    if n is None:
        n = draw(st.integers(1, 4))
    terms = draw(
        st.dictionaries(
            st.lists(st.integers(0, max_degree), min_size=n, max_size=n).map(tuple).filter(
                lambda e: sum(e) <= max_degree
            ),
            gauss,
            max_size=max_terms,
        )
    )
    return Poly(n, terms)


# -- GaussianRational --------------------------------------------------------

def test_gaussian_rational_canonical_and_exact():
    a = GaussianRational(Fraction(2, 4), -3)
    assert a.re == Fraction(1, 2) and a.re.denominator == 2
    assert (a * a.reciprocal()) == 1
    assert I * I == -1
    assert GaussianRational(3) == 3
    assert complex(GaussianRational(1, 2)) == 1 + 2j


def test_gaussian_rational_refuses_floats():
    with pytest.raises(TypeError):
        GaussianRational.coerce(0.5)


# -- add / mul ---------------------------------------------------------------

def test_add_examples():
    x1, x2 = xs(2)
    assert poly_add(x1, -x1).is_zero()
    assert poly_add(x1**2 + x2**2, x1**2 - x2**2) == 2 * x1**2
    s1 = elementary_symmetric(1, 3)
    assert s1 + s1 == Poly(3, {(1, 0, 0): 2, (0, 1, 0): 2, (0, 0, 1): 2})


def test_mul_examples():
    e1, e2 = xs(2)
    assert poly_mul(e1 - I * e2, e1 + I * e2) == e1**2 + e2**2
    p = e1**3 - 5 * e2
    assert Poly.constant(2, 1) * p == p
    assert (e1 + e2) ** 2 == e1**2 + 2 * e1 * e2 + e2**2


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        poly_add(xs(2)[0], xs(3)[0])
    with pytest.raises(ValueError):
        poly_mul(xs(2)[0], xs(3)[0])


def test_monomial_length_checked():
    with pytest.raises(ValueError):
        Poly(2, {(1, 0, 0): 1})


@given(polys(n=3), polys(n=3))
def test_homogeneity_preserved(a, b):
    a, b = a.homogeneous_part(2), b.homogeneous_part(3)
    assert (a + a).is_homogeneous()
    if a and b:
        assert (a * b).degrees() == {5}
    if a:
        assert substitute_squares(a).degrees() == {4}


# -- symmetric functions and squares ------------------------------------------

def test_elementary_symmetric():
    e1, e2, e3 = xs(3)
    assert elementary_symmetric(2, 2) == xs(2)[0] * xs(2)[1]
    assert elementary_symmetric(2, 3) == e1 * e2 + e1 * e3 + e2 * e3
    assert elementary_symmetric(0, 5) == 1
    assert len(elementary_symmetric(3, 6)) == 20
    with pytest.raises(ValueError):
        elementary_symmetric(4, 3)


def test_substitute_squares():
    e1, e2, e3 = xs(3)
    assert substitute_squares(elementary_symmetric(1, 2)) == xs(2)[0] ** 2 + xs(2)[1] ** 2
    assert substitute_squares(elementary_symmetric(2, 3)) == (
        e1**2 * e2**2 + e1**2 * e3**2 + e2**2 * e3**2
    )
    assert substitute_squares(Poly.constant(2, 5)) == 5


# -- parity decomposition -----------------------------------------------------

def test_parity_examples():
    e1, e2 = xs(2)
    parts = parity_decompose(e1**3 * e2 + e1)
    assert parts == {(1, 1): e1, (1, 0): Poly.constant(2, 1)}
    assert set(parity_decompose(e1**4 + 3 * e2**2)) == {(0, 0)}
    # sigma_1(eta^2) * eta_1 groups entirely under tau = (1, 0)
    r = substitute_squares(elementary_symmetric(1, 2)) * e1
    assert parity_decompose(r) == {(1, 0): e1 + e2}


@settings(max_examples=60)
@given(polys(max_degree=8, max_terms=8))
def test_parity_round_trip(r):
    assert parity_reconstruct(parity_decompose(r), r.n) == r


@settings(max_examples=40)
@given(polys(n=3, max_degree=2), polys(n=3, max_degree=3))
def test_square_divisor_divides_every_parity_part(s, c):
    if s.is_zero() or c.is_zero():
        return
    r = substitute_squares(s) * c
    for part in parity_decompose(r).values():
        poly_divide_exact(part, s)


# -- division -----------------------------------------------------------------

def test_division_examples():
    e1, e2 = xs(2)
    d = e1**2 + e2**2
    assert poly_divide_exact(d * e1 * e2, d) == e1 * e2
    with pytest.raises(NotDivisible) as info:
        poly_divide_exact(e1**2 * e2**2, d)
    assert not info.value.remainder.is_zero()
    # independent check: d vanishes at (1, i) while the dividend equals -1
    assert d.evaluate((1, I)) == 0
    assert (e1**2 * e2**2).evaluate((1, I)) == -1
    assert poly_divide_exact(Poly.zero(2), d).is_zero()
    with pytest.raises(ZeroDivisionError):
        poly_divide_exact(d, Poly.zero(2))


@settings(max_examples=60)
@given(polys(n=3), polys(n=3))
def test_division_soundness(a, b):
    if b.is_zero():
        return
    assert poly_divide_exact(a * b, b) == a


@settings(max_examples=60)
@given(polys(n=2, max_degree=5), polys(n=2, max_degree=2))
def test_division_identity(a, b):
    if b.is_zero():
        return
    q, r = poly_divmod(a, b)
    assert b * q + r == a
    lead = b.leading_term()[0]
    for e in r:
        assert not all(x >= y for x, y in zip(e, lead))


def test_not_divisible_has_evidence():
    e1, e2 = xs(2)
    d = e1 - I * e2
    target = e1**3 + e2
    with pytest.raises(NotDivisible) as info:
        poly_divide_exact(target, d)
    # divisor vanishes at (i, 1); dividend does not
    assert d.evaluate((I, 1)) == 0
    assert target.evaluate((I, 1)) != 0
    assert info.value.remainder


# -- serialization ------------------------------------------------------------

def test_format_is_deterministic_and_round_trips():
    e1, e2 = xs(2)
    p = Fraction(3, 2) * e1**2 - I * e1 * e2 + 7
    text = format_poly(p)
    assert text == "(3/2,0)*x1^2*x2^0 + (0,-1)*x1^1*x2^1 + (7,0)*x1^0*x2^0"
    assert parse_poly(text, 2) == p
    assert format_poly(Poly.zero(3)) == "0"


@given(polys())
def test_format_round_trip(p):
    assert parse_poly(format_poly(p), p.n) == p
