"""Exact sparse multivariate polynomials over the Gaussian rationals.

A :class:`Poly` stores ``{exponent tuple: coefficient}`` with no zero
coefficients.  Exact coefficients are :class:`GaussianRational`; complex
floats are accepted too so the same machinery serves numerically derived
polynomials (Taylor parts of plane waves).  Division is by a single divisor
under graded lexicographic order, which decides membership in the principal
ideal it generates.
"""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from numbers import Complex, Rational
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "GaussianRational",
    "Poly",
    "NotDivisible",
    "I",
    "as_coeff",
    "poly_add",
    "poly_mul",
    "elementary_symmetric",
    "substitute_squares",
    "parity_decompose",
    "parity_reconstruct",
    "poly_divmod",
    "poly_divide_exact",
    "divides",
    "grlex_key",
    "format_poly",
    "parse_poly",
]


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Rational | int | str = 0, im: Rational | int | str = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value)
        raise TypeError(f"cannot convert {value!r} to GaussianRational exactly")

    def __repr__(self) -> str:
        return f"GaussianRational({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def __hash__(self) -> int:
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, Complex):
            return complex(self) == other
        return NotImplemented

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __abs__(self) -> float:
        return abs(complex(self))

    def norm2(self) -> Fraction:
        """Squared modulus, exact."""
        return self.re * self.re + self.im * self.im

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __pos__(self) -> "GaussianRational":
        return self

    def __add__(self, other):
        if isinstance(other, (GaussianRational, int, Fraction)):
            o = GaussianRational.coerce(other)
            return GaussianRational(self.re + o.re, self.im + o.im)
        if isinstance(other, Complex):
            return complex(self) + other
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (GaussianRational, int, Fraction)):
            o = GaussianRational.coerce(other)
            return GaussianRational(self.re - o.re, self.im - o.im)
        if isinstance(other, Complex):
            return complex(self) - other
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (GaussianRational, int, Fraction)):
            o = GaussianRational.coerce(other)
            return GaussianRational(
                self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
            )
        if isinstance(other, Complex):
            return complex(self) * other
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self) -> "GaussianRational":
        d = self.norm2()
        if d == 0:
            raise ZeroDivisionError("GaussianRational division by zero")
        return GaussianRational(self.re / d, -self.im / d)

    def __truediv__(self, other):
        if isinstance(other, (GaussianRational, int, Fraction)):
            return self * GaussianRational.coerce(other).reciprocal()
        if isinstance(other, Complex):
            return complex(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.reciprocal() * other
        if isinstance(other, Complex):
            return other / complex(self)
        return NotImplemented

    def __pow__(self, k: int) -> "GaussianRational":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.reciprocal() ** (-k)
        result = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result


I = GaussianRational(0, 1)


def as_coeff(value):
    """Normalize a scalar to the coefficient ring.

    Integers, fractions and Gaussian rationals stay exact; floats and complex
    values become ``complex``.
    """
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (bool, int, Fraction)):
        return GaussianRational(value)
    if isinstance(value, Complex):
        return complex(value)
    raise TypeError(f"unsupported coefficient {value!r}")


def _is_zero(c) -> bool:
    return c == 0


def grlex_key(exponents: Sequence[int]) -> tuple:
    """Sort key for graded lexicographic order (x1 > x2 > ... within a degree)."""
    return (sum(exponents), tuple(exponents))


class Poly:
    """Sparse polynomial in ``n`` variables.

    ``terms`` maps exponent tuples of length ``n`` to nonzero coefficients.
    Instances are treated as immutable values.
    """

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Sequence[int], object] | Iterable = ()):
        if n < 1:
            raise ValueError("polynomial dimension must be at least 1")
        self.n = n
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, ...], object] = {}
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise ValueError(f"monomial {exps} has length {len(exps)}, expected {n}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = as_coeff(coeff)
            if exps in acc:
                c = acc[exps] + c
            acc[exps] = c
        self._terms = {e: c for e, c in acc.items() if not _is_zero(c)}
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "Poly":
        return cls(n)

    @classmethod
    def constant(cls, n: int, value) -> "Poly":
        return cls(n, {(0,) * n: value})

    @classmethod
    def variable(cls, n: int, i: int, power: int = 1) -> "Poly":
        """The monomial ``x_{i+1}**power`` (``i`` is zero-based)."""
        exps = [0] * n
        exps[i] = power
        return cls(n, {tuple(exps): 1})

    @classmethod
    def monomial(cls, exponents: Sequence[int], coeff=1) -> "Poly":
        return cls(len(exponents), {tuple(exponents): coeff})

    @classmethod
    def variables(cls, n: int) -> list["Poly"]:
        return [cls.variable(n, i) for i in range(n)]

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> dict[tuple[int, ...], object]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self._terms)

    def coeff(self, exponents: Sequence[int]):
        return self._terms.get(tuple(exponents), GaussianRational(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def degrees(self) -> set[int]:
        return {sum(e) for e in self._terms}

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max(self.degrees(), default=-1)

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def is_exact(self) -> bool:
        return all(isinstance(c, GaussianRational) for c in self._terms.values())

    def depends_on(self, i: int) -> bool:
        return any(e[i] for e in self._terms)

    def homogeneous_part(self, d: int) -> "Poly":
        return Poly(self.n, {e: c for e, c in self._terms.items() if sum(e) == d})

    def sorted_terms(self) -> list[tuple[tuple[int, ...], object]]:
        """Terms in decreasing graded lexicographic order."""
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    def leading_term(self) -> tuple[tuple[int, ...], object]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        e = max(self._terms, key=grlex_key)
        return e, self._terms[e]

    def max_abs_coeff(self) -> float:
        return max((abs(complex(c)) for c in self._terms.values()), default=0.0)

    # -- value semantics --------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.n == other.n and self._terms == other._terms
        if isinstance(other, (int, Fraction, GaussianRational, Complex)):
            if other == 0:
                return not self._terms
            return self._terms == {(0,) * self.n: as_coeff(other)}
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Poly({self.n}, {format_poly(self)!r})"

    def __str__(self) -> str:
        return format_poly(self)

    # -- arithmetic -------------------------------------------------------
    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.n != self.n:
                raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
            return other
        return Poly.constant(self.n, other)

    def __add__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms[e] + c if e in terms else c
        return Poly(self.n, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.n, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Poly):
            if other.n != self.n:
                raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
            acc: dict[tuple[int, ...], object] = {}
            for e1, c1 in self._terms.items():
                for e2, c2 in other._terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    c = c1 * c2
                    acc[e] = acc[e] + c if e in acc else c
            return Poly(self.n, acc)
        try:
            s = as_coeff(other)
        except TypeError:
            return NotImplemented
        return Poly(self.n, {e: c * s for e, c in self._terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = Poly.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def map_coeffs(self, fn) -> "Poly":
        return Poly(self.n, {e: fn(c) for e, c in self._terms.items()})

    def conjugate(self) -> "Poly":
        return self.map_coeffs(lambda c: c.conjugate())

    def to_complex(self) -> "Poly":
        return self.map_coeffs(complex)

    # -- calculus and substitution ----------------------------------------
    def diff(self, i: int, times: int = 1) -> "Poly":
        """Partial derivative with respect to variable ``i`` (zero-based)."""
        acc = {}
        for e, c in self._terms.items():
            if e[i] < times:
                continue
            factor = math.perm(e[i], times)
            new = list(e)
            new[i] -= times
            acc[tuple(new)] = c * factor
        return Poly(self.n, acc)

    def restrict_zero(self, i: int) -> "Poly":
        """Set variable ``i`` to zero; the result no longer depends on it."""
        return Poly(self.n, {e: c for e, c in self._terms.items() if e[i] == 0})

    def evaluate(self, point: Sequence):
        """Evaluate at ``point``; exact when point and coefficients are exact."""
        if len(point) != self.n:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.n}")
        exact = self.is_exact() and all(
            isinstance(v, (GaussianRational, int, Fraction)) for v in point
        )
        if exact:
            pts = [GaussianRational.coerce(v) for v in point]
            total = GaussianRational(0)
        else:
            pts = [complex(v) for v in point]
            total = 0j
        cache: dict[tuple[int, int], object] = {}

        def power(j, k):
            key = (j, k)
            if key not in cache:
                cache[key] = pts[j] ** k
            return cache[key]

        for e, c in self._terms.items():
            term = c if exact else complex(c)
            for j, k in enumerate(e):
                if k:
                    term = term * power(j, k)
            total = total + term
        return total

    __call__ = evaluate

    def substitute_squares(self) -> "Poly":
        return substitute_squares(self)


class NotDivisible(ArithmeticError):
    """Raised by :func:`poly_divide_exact`; carries the nonzero remainder."""

    def __init__(self, dividend: Poly, divisor: Poly, quotient: Poly, remainder: Poly):
        super().__init__(
            f"divisor does not divide dividend (remainder has {len(remainder)} terms)"
        )
        self.dividend = dividend
        self.divisor = divisor
        self.quotient = quotient
        self.remainder = remainder


def poly_add(a: Poly, b: Poly) -> Poly:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    return a + b


def poly_mul(a: Poly, b: Poly) -> Poly:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    return a * b


def elementary_symmetric(k: int, n: int) -> Poly:
    """sigma_k(x_1, ..., x_n): sum of all products of k distinct variables."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    terms = {}
    for subset in itertools.combinations(range(n), k):
        e = [0] * n
        for j in subset:
            e[j] = 1
        terms[tuple(e)] = 1
    return Poly(n, terms)


def substitute_squares(p: Poly) -> Poly:
    """P(x^2): double every exponent."""
    return Poly(p.n, {tuple(2 * a for a in e): c for e, c in p.items()})


def parity_decompose(r: Poly) -> dict[tuple[int, ...], Poly]:
    """Split R(x) = sum_tau x^tau R_tau(x^2) over tau in {0,1}^n.

    Each returned ``R_tau`` is written in the original variables and is meant
    to be evaluated at the squares, i.e. ``R_tau`` here has exponents
    ``(alpha - tau) / 2``.  Only nonzero components are returned.
    """
    out: dict[tuple[int, ...], dict] = {}
    for e, c in r.items():
        tau = tuple(a % 2 for a in e)
        half = tuple((a - t) // 2 for a, t in zip(e, tau))
        out.setdefault(tau, {})[half] = c
    return {tau: Poly(r.n, terms) for tau, terms in out.items()}


def parity_reconstruct(parts: Mapping[tuple[int, ...], Poly], n: int) -> Poly:
    """Inverse of :func:`parity_decompose`."""
    total = Poly.zero(n)
    for tau, part in parts.items():
        total = total + Poly.monomial(tau) * substitute_squares(part)
    return total


def poly_divmod(dividend: Poly, divisor: Poly) -> tuple[Poly, Poly]:
    """Multivariate division by one divisor in graded lex order.

    Returns ``(quotient, remainder)`` with ``dividend = divisor*quotient +
    remainder`` and no remainder term divisible by the divisor's leading
    monomial.  For a single divisor the remainder vanishes exactly when the
    divisor divides the dividend.
    """
    if dividend.n != divisor.n:
        raise ValueError(f"dimension mismatch: {dividend.n} vs {divisor.n}")
    if divisor.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    n = dividend.n
    lead_e, lead_c = divisor.leading_term()
    inv_lead = 1 / lead_c
    div_terms = list(divisor.items())

    work = dict(dividend.items())
    quotient: dict[tuple[int, ...], object] = {}
    remainder: dict[tuple[int, ...], object] = {}
    while work:
        e = max(work, key=grlex_key)
        c = work.pop(e)
        if all(a >= b for a, b in zip(e, lead_e)):
            shift = tuple(a - b for a, b in zip(e, lead_e))
            factor = c * inv_lead
            quotient[shift] = quotient[shift] + factor if shift in quotient else factor
            for de, dc in div_terms:
                if de == lead_e:
                    continue
                te = tuple(a + b for a, b in zip(de, shift))
                val = work[te] - factor * dc if te in work else -(factor * dc)
                if _is_zero(val):
                    work.pop(te, None)
                else:
                    work[te] = val
        else:
            remainder[e] = c
    return Poly(n, quotient), Poly(n, remainder)


def poly_divide_exact(dividend: Poly, divisor: Poly) -> Poly:
    """Exact quotient ``dividend / divisor``.

    Raises :class:`NotDivisible` (with the remainder as evidence) when the
    division leaves a nonzero remainder.
    """
    q, r = poly_divmod(dividend, divisor)
    if not r.is_zero():
        raise NotDivisible(dividend, divisor, q, r)
    return q


def divides(divisor: Poly, dividend: Poly) -> bool:
    return poly_divmod(dividend, divisor)[1].is_zero()


# -- textual serialization ---------------------------------------------------

def _fmt_coeff(c) -> str:
    if isinstance(c, GaussianRational):
        return f"({c.re},{c.im})"
    c = complex(c)
    return f"({c.real!r},{c.imag!r})"


def format_poly(p: Poly) -> str:
    """Deterministic text form: ``(re,im)*x1^a1*...*xn^an`` terms joined by `` + ``.

    Terms are listed in decreasing graded lex order; the zero polynomial is
    ``0``.
    """
    if p.is_zero():
        return "0"
    parts = []
    for e, c in p.sorted_terms():
        mono = "*".join(f"x{j + 1}^{a}" for j, a in enumerate(e))
        parts.append(f"{_fmt_coeff(c)}*{mono}")
    return " + ".join(parts)


_TERM_RE = re.compile(r"^\(([^,()]+),([^,()]+)\)\*(.+)$")


def parse_poly(text: str, n: int) -> Poly:
    """Inverse of :func:`format_poly` for exact polynomials."""
    text = text.strip()
    if text == "0":
        return Poly.zero(n)
    terms = {}
    for chunk in text.split(" + "):
        m = _TERM_RE.match(chunk.strip())
        if not m:
            raise ValueError(f"malformed term {chunk!r}")
        re_s, im_s, mono = m.groups()
        factors = mono.split("*")
        if len(factors) != n:
            raise ValueError(f"term {chunk!r} does not have {n} variables")
        exps = []
        for j, f in enumerate(factors):
            name, _, power = f.partition("^")
            if name != f"x{j + 1}":
                raise ValueError(f"unexpected variable {name!r} in {chunk!r}")
            exps.append(int(power))
        try:
            coeff = GaussianRational(Fraction(re_s), Fraction(im_s))
        except ValueError:
            coeff = complex(float(re_s), float(im_s))
        terms[tuple(exps)] = coeff
    return Poly(n, terms)
