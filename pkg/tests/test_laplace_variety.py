import math
from fractions import Fraction

import numpy as np
import pytest

from cornerscatter.harmonic import harmonic_basis
from cornerscatter.laplace_variety import (
    CertificateSearchExhausted,
    IdentityFailure,
    NotHarmonicError,
    NotHomogeneousError,
    VarietyPoint,
    boundary_decomposition,
    branch_of,
    check_nonvanishing,
    default_tau,
    face_transform,
    laplace_transform,
    orthant_laplace_quadrature,
    random_special_form,
    stock_witness,
    tridiag_det,
    variety_candidates,
    variety_sample,
    verify_prop3,
)
from cornerscatter.polyalg import (
    GaussianRational,
    I,
    Poly,
    elementary_symmetric,
    poly_divmod,
    substitute_squares,
)


def gr(a, b=0):
    return GaussianRational(Fraction(a), Fraction(b))


# -- laplace_transform ----------------------------------------------------------

def test_transform_examples():
    x1, x2 = Poly.variables(2)
    assert laplace_transform(Poly.constant(2, 1)) == x1 * x2
    assert laplace_transform(x1) == x1**2 * x2
    assert laplace_transform(x1**2 - x2**2) == 2 * x1**3 * x2 - 2 * x1 * x2**3


def test_transform_rejects_mixed_degree():
    x1, x2 = Poly.variables(2)
    with pytest.raises(NotHomogeneousError):
        laplace_transform(x1 + x2**2)


def test_transform_linear_and_degree_shift():
    for n in (2, 3):
        for N in range(5):
            basis = harmonic_basis(n, N)
            total = Poly.zero(n)
            for j, p in enumerate(basis):
                assert laplace_transform(p).degree() == N + n
                total = total + (j + 1) * p
            expected = Poly.zero(n)
            for j, p in enumerate(basis):
                expected = expected + (j + 1) * laplace_transform(p)
            assert laplace_transform(total) == expected


# -- variety points ------------------------------------------------------------

def test_stock_witnesses():
    p2 = variety_sample(2)
    assert p2.rho == (gr(2, -1), gr(1, 2))
    assert p2.dot() == 0
    assert [r.re for r in p2.rho] == [2, 1]
    p3 = variety_sample(3)
    assert p3.rho == (gr(2, 1), gr(2, Fraction(2, 5)), gr(1, Fraction(-14, 5)))
    assert p3.dot() == 0
    for n in range(2, 8):
        w = stock_witness(n)
        assert w.dot() == 0 and w.is_cone_admissible()
        assert w.cone_ratio() >= w.tau


@pytest.mark.parametrize("t", [Fraction(1, 3), 2, 17])
def test_scaling_stays_on_variety(t):
    for n in (2, 3, 4):
        assert variety_sample(n).scaled(t).dot() == 0


def test_variety_point_validates():
    with pytest.raises(ValueError):
        VarietyPoint((gr(1), gr(1)))


def test_sample_honours_tau():
    for n in (2, 3, 4):
        tau = default_tau(n)
        p = variety_sample(n, tau=tau)
        assert p.cone_ratio() >= tau and p.dot() == 0
    with pytest.raises(ValueError):
        variety_sample(2, tau=0.9)


def test_candidates_deterministic_and_admissible():
    a = [p.rho for p in variety_candidates(3, limit=30)]
    b = [p.rho for p in variety_candidates(3, limit=30)]
    assert a == b and len(set(a)) == 30
    for p in variety_candidates(3, limit=30):
        assert p.dot() == 0 and p.is_cone_admissible()


def test_branches_n2():
    p = variety_sample(2)
    assert branch_of(p) == "rho2=+i*rho1"
    assert branch_of(p.conjugate()) == "rho2=-i*rho1"


# -- boundary decomposition ----------------------------------------------------

def test_boundary_decomposition_xy():
    e1, e2 = Poly.variables(2)
    dec = boundary_decomposition(e1 * e2)
    assert dec.Q == e1**2 * e2**2
    assert dec.P_hat == (Poly.zero(2), Poly.zero(2))
    assert dec.Q_hat == (e2**3, e1**3)
    assert dec.lhs == e1**2 * e2**2 * (e1**2 + e2**2)
    assert dec.rhs == e1 * e2 * (e1 * e2**3 + e2 * e1**3)


def test_boundary_decomposition_constant():
    e1, e2 = Poly.variables(2)
    dec = boundary_decomposition(Poly.constant(2, 1))
    assert dec.Q == e1 * e2
    assert dec.P_hat == (e2**2, e1**2)
    assert dec.lhs == dec.rhs == e1 * e2 * (e1**2 + e2**2)


def test_boundary_decomposition_zero():
    dec = boundary_decomposition(Poly.zero(3))
    assert dec.Q.is_zero() and all(p.is_zero() for p in dec.P_hat + dec.Q_hat)


def test_boundary_decomposition_requires_harmonic():
    e1, e2 = Poly.variables(2)
    with pytest.raises(NotHarmonicError):
        boundary_decomposition(e1**2 + e2**2)


@pytest.mark.parametrize("n", [2, 3])
def test_face_formula_matches_quadrature(n):
    # independent route: integrate the face pieces numerically at a point off the variety
    rng = np.random.default_rng(n)
    p = harmonic_basis(n, 3)[1]
    rho = rng.uniform(1.0, 2.0, size=n) + 1j * rng.uniform(-0.5, 0.5, size=n)
    total = 0j
    for i in range(n):
        face = p.restrict_zero(i)
        dface = p.diff(i).restrict_zero(i)
        sub = [j for j in range(n) if j != i]

        def on_face(poly):
            if poly.is_zero():
                return 0j
            reduced = Poly(n - 1, {tuple(e[j] for j in sub): c for e, c in poly.items()})
            return orthant_laplace_quadrature(reduced, rho[sub]).value

        total += rho[i] * on_face(face) + on_face(dface)
    direct = orthant_laplace_quadrature(p, rho).value
    assert total / np.dot(rho, rho) == pytest.approx(direct, rel=1e-10)


def test_face_transform_requires_independence():
    e1, e2 = Poly.variables(2)
    with pytest.raises(ValueError):
        face_transform(e1 * e2, 0)
    assert face_transform(e2**2, 0) == 2 * e2**3


# -- certificates ---------------------------------------------------------------

def test_certificate_xy():
    e1, e2 = Poly.variables(2)
    cert = check_nonvanishing(e1 * e2)
    r1, r2 = variety_sample(2).rho
    assert cert.value == (r1 * r1 * r2 * r2).reciprocal()
    assert cert.value != 0
    assert all(rem is not None for rem in cert.divisibility.values())


def test_certificate_saddle_value():
    e1, e2 = Poly.variables(2)
    cert = check_nonvanishing(e1**2 - e2**2)
    r1, r2 = cert.witness.value
    expected = 2 * (r2 * r2 - r1 * r1) / (r1**3 * r2**3)
    assert cert.value == expected != 0


def test_certificate_rejects_non_harmonic():
    e1, e2 = Poly.variables(2)
    with pytest.raises(NotHarmonicError):
        check_nonvanishing(e1**2 + e2**2)


def test_certificate_one_branch_vanishing():
    # Re(z^4)/z-type forms can vanish on one branch: (x1 + i x2)^N is harmonic
    e1, e2 = Poly.variables(2)
    p = (e1 + I * e2) ** 3
    cert = check_nonvanishing(p)
    assert cert.value != 0
    open_branches = [b for b, rem in cert.divisibility.items() if rem is not None]
    assert cert.branch in open_branches


@pytest.mark.parametrize("n,N", [(2, 4), (3, 3), (4, 2)])
def test_certificates_every_basis_element(n, N):
    for p in harmonic_basis(n, N):
        cert = check_nonvanishing(p)
        assert cert.witness.dot() == 0
        assert cert.Q.evaluate(cert.witness.eta()) == cert.value != 0


def test_certificate_with_paper_tau():
    p = harmonic_basis(3, 4)[0]
    tau = default_tau(3)
    cert = check_nonvanishing(p, tau=tau)
    assert cert.witness.cone_ratio() >= tau


def test_negative_control_divisible_products():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        sigma = substitute_squares(elementary_symmetric(n - 1, n))
        for _ in range(10):
            c = random_special_form(rng, n, 3)
            assert poly_divmod(sigma * c, sigma)[1].is_zero()


# -- special-form non-divisibility ---------------------------------------------------

def test_prop3_examples():
    s1, s2 = Poly.variables(2)
    sq = elementary_symmetric(1, 2) ** 2
    assert not poly_divmod(s1 + s2, sq)[1].is_zero()
    report = verify_prop3(3, 6, 25, seed=1)
    assert report.ok and report.special_not_divisible == 25 and report.products_detected == 25


def test_special_form_generator():
    rng = np.random.default_rng(5)
    for _ in range(20):
        t = random_special_form(rng, 3, 4)
        assert not t.is_zero()


@pytest.mark.parametrize("size,expected", [(1, 2), (2, 3), (49, 50)])
def test_tridiag_examples(size, expected):
    assert tridiag_det(size) == expected


def test_tridiag_recursion_oracle():
    d = [1, 2]
    for m in range(2, 51):
        d.append(2 * d[-1] - d[-2])
    for m in range(1, 51):
        assert tridiag_det(m) == d[m] == m + 1


# -- quadrature -------------------------------------------------------------------

def test_quadrature_examples():
    x1, x2 = Poly.variables(2)
    assert orthant_laplace_quadrature(Poly.constant(2, 1), (1, 1)).value == pytest.approx(1.0)
    r = orthant_laplace_quadrature(x1, (2, 3))
    assert r.value == pytest.approx(1 / 12, rel=1e-13)
    assert r.error < 1e-12


@pytest.mark.parametrize("t", [4, 8, 16])
def test_quadrature_on_variety(t):
    x1, x2 = Poly.variables(2)
    p = x1**2 - x2**2
    point = variety_sample(2).scaled(t)
    exact = complex(laplace_transform(p).evaluate(point.eta()))
    num = orthant_laplace_quadrature(p, point).value
    assert abs(num - exact) / abs(exact) < 1e-6
    assert abs(num) * t**4 == pytest.approx(abs(exact) * t**4, rel=1e-6)


def test_quadrature_scaling_exponent():
    x1, x2 = Poly.variables(2)
    p = x1 * x2
    base = variety_sample(2)
    ts = [4, 8, 16]
    vals = [abs(orthant_laplace_quadrature(p, base.scaled(t)).value) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(vals), 1)[0]
    assert slope == pytest.approx(-4, abs=0.05)


def test_quadrature_tail_bound():
    x1, x2 = Poly.variables(2)
    res = orthant_laplace_quadrature(x1 * x2, (3 + 1j, 2 - 1j), epsilon=2.0)
    assert 0 < res.tail_bound < math.inf
    tight = orthant_laplace_quadrature(x1 * x2, (30 + 10j, 20 - 10j), epsilon=2.0)
    assert tight.tail_bound < 1e-6


def test_quadrature_rejects_growth():
    with pytest.raises(ValueError):
        orthant_laplace_quadrature(Poly.constant(2, 1), (1, -1))


def test_identity_failure_is_assertion():
    assert issubclass(IdentityFailure, AssertionError)
    assert issubclass(CertificateSearchExhausted, RuntimeError)
