"""Orthant Laplace transforms of polynomials on the variety rho.rho = 0.

The transform of a degree-N form ``P = sum p_a x^a`` over ``{x > 0}`` is
``Q(1/rho)`` with ``Q`` the degree ``N+n`` form whose coefficient at
``a+1`` is ``a! p_a``.  Everything here is exact except the quadrature
cross-check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np
from scipy.special import roots_laguerre

from . import _exact
from .harmonic import is_harmonic, laplacian
from .polyalg import (
    GaussianRational,
    I,
    NotDivisible,
    Poly,
    elementary_symmetric,
    poly_divide_exact,
    poly_divmod,
    substitute_squares,
)

__all__ = [
    "NotHomogeneousError",
    "NotHarmonicError",
    "IdentityFailure",
    "CertificateSearchExhausted",
    "VarietyPoint",
    "BoundaryDecomposition",
    "NonvanishingCertificate",
    "Prop3Report",
    "QuadratureResult",
    "laplace_transform",
    "face_transform",
    "default_tau",
    "stock_witness",
    "variety_candidates",
    "variety_sample",
    "branch_of",
    "boundary_decomposition",
    "check_nonvanishing",
    "random_special_form",
    "verify_prop3",
    "tridiag_det",
    "orthant_laplace_quadrature",
]


class NotHomogeneousError(ValueError):
    pass


class NotHarmonicError(ValueError):
    pass


class IdentityFailure(AssertionError):
    """The boundary-term identity failed; this is a bug, not bad input."""


class CertificateSearchExhausted(RuntimeError):
    pass


def _require_homogeneous(p: Poly) -> int:
    if not p.is_homogeneous():
        raise NotHomogeneousError(f"polynomial has mixed degrees {sorted(p.degrees())}")
    return max(p.degree(), 0)


def laplace_transform(p: Poly) -> Poly:
    """Q with P^(rho) = Q(1/rho); coefficients q_{a+1} = a! p_a."""
    _require_homogeneous(p)
    terms = {}
    for e, c in p.items():
        weight = math.prod(math.factorial(a) for a in e)
        terms[tuple(a + 1 for a in e)] = c * weight
    return Poly(p.n, terms)


def face_transform(p: Poly, i: int) -> Poly:
    """(n-1)-variable transform of a polynomial independent of variable ``i``.

    The result stays in n variables and does not depend on variable ``i``.
    """
    if p.depends_on(i):
        raise ValueError(f"polynomial depends on variable {i}")
    terms = {}
    for e, c in p.items():
        weight = math.prod(math.factorial(a) for j, a in enumerate(e) if j != i)
        terms[tuple(a + 1 if j != i else 0 for j, a in enumerate(e))] = c * weight
    return Poly(p.n, terms)


# -- points on the characteristic variety ----------------------------------

def _gr(re, im=0) -> GaussianRational:
    return GaussianRational(Fraction(re), Fraction(im))


def default_tau(n: int) -> float:
    return 1.0 / (2.0 * math.sqrt(n))


@dataclass(frozen=True)
class VarietyPoint:
    """Exact rho in C^n with rho.rho = 0, optionally scaled by ``scale > 0``.

    ``tau`` is the cone parameter this point is documented to satisfy:
    ``min_j Re rho_j >= tau |rho|``.
    """

    rho: tuple[GaussianRational, ...]
    scale: Fraction = Fraction(1)
    tau: float = 0.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(GaussianRational.coerce(r) for r in self.rho))
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.dot() != 0:
            raise ValueError(f"rho.rho = {self.dot()} != 0")
        if self.tau and self.cone_ratio() < self.tau - 1e-15:
            raise ValueError(f"cone ratio {self.cone_ratio():.6f} < tau {self.tau:.6f}")

    @property
    def n(self) -> int:
        return len(self.rho)

    @property
    def value(self) -> tuple[GaussianRational, ...]:
        return tuple(r * self.scale for r in self.rho)

    def dot(self) -> GaussianRational:
        total = GaussianRational(0)
        for r in self.value:
            total = total + r * r
        return total

    def eta(self) -> tuple[GaussianRational, ...]:
        """Componentwise reciprocal 1/rho."""
        return tuple(r.reciprocal() for r in self.value)

    def is_cone_admissible(self) -> bool:
        return all(r.re > 0 for r in self.rho)

    def cone_ratio(self) -> float:
        norm = math.sqrt(float(sum(r.norm2() for r in self.rho)))
        return min(float(r.re) for r in self.rho) / norm

    def conjugate(self) -> "VarietyPoint":
        return VarietyPoint(
            tuple(r.conjugate() for r in self.rho), self.scale, self.tau,
            (self.label + "*") if self.label else "",
        )

    def scaled(self, t) -> "VarietyPoint":
        return VarietyPoint(self.rho, self.scale * Fraction(t), self.tau, self.label)

    def to_complex(self) -> np.ndarray:
        return np.array([complex(r) for r in self.value])

    def __str__(self) -> str:
        body = ";".join(f"{r.re}{'+' if r.im >= 0 else '-'}{abs(r.im)}i" for r in self.value)
        return f"({body})"


def _block_witness(n: int) -> list[GaussianRational]:
    if n == 2:
        return [_gr(2, -1), _gr(1, 2)]
    if n == 3:
        return [_gr(2, 1), _gr(2, Fraction(2, 5)), _gr(1, Fraction(-14, 5))]
    if n % 2 == 0:
        return _block_witness(2) * (n // 2)
    return _block_witness(3) + _block_witness(2) * ((n - 3) // 2)


def stock_witness(n: int) -> VarietyPoint:
    """Shipped exact witness for dimension n.

    n=2: (2-i, 1+2i), cone ratio 1/sqrt(10) ~ 0.316.
    n=3: (2,2,1) + i(1, 2/5, -14/5), cone ratio 1/sqrt(18) ~ 0.236.
    Larger n concatenate these blocks (each block is null on its own).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rho = _block_witness(n)
    point = VarietyPoint(tuple(rho), label=f"stock{n}")
    return VarietyPoint(point.rho, tau=math.floor(point.cone_ratio() * 1000) / 1000, label=point.label)


def _cayley(skew: list[list[Fraction]]) -> list[list[Fraction]]:
    """Rational orthogonal matrix (I - K)(I + K)^-1 from a skew matrix K."""
    n = len(skew)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    plus = [[eye[i][j] + skew[i][j] for j in range(n)] for i in range(n)]
    minus = [[eye[i][j] - skew[i][j] for j in range(n)] for i in range(n)]
    # transpose of O = (I-K)(I+K)^-1 solves (I+K)^T O^T = (I-K)^T
    plus_t = [list(col) for col in zip(*plus)]
    minus_t = [list(col) for col in zip(*minus)]
    o_t = _exact.solve(plus_t, minus_t)
    return [list(col) for col in zip(*o_t)]


def _rotate(point: VarietyPoint, orth: list[list[Fraction]], label: str) -> VarietyPoint:
    rho = []
    for row in orth:
        acc = GaussianRational(0)
        for o, r in zip(row, point.rho):
            acc = acc + r * o
        rho.append(acc)
    return VarietyPoint(tuple(rho), label=label)


def _skew_sequence(n: int) -> Iterator[tuple[str, list[list[Fraction]]]]:
    pairs = list(itertools.combinations(range(n), 2))
    for q in (7, 5, 11, 3, 13, 17):
        for p in (1, -1, 2, -2):
            for idx, (a, b) in enumerate(pairs):
                k = [[Fraction(0)] * n for _ in range(n)]
                k[a][b] = Fraction(p, q)
                k[b][a] = -Fraction(p, q)
                # couple a second plane so rotations are not all planar
                c, d = pairs[(idx + 1) % len(pairs)]
                if (c, d) != (a, b):
                    k[c][d] += Fraction(1, 2 * q)
                    k[d][c] -= Fraction(1, 2 * q)
                yield f"cayley({a}{b},{p}/{q})", k


def variety_candidates(n: int, limit: int = 400) -> Iterator[VarietyPoint]:
    """Deterministic sequence of cone-admissible points on rho.rho = 0.

    Starts with the stock witness and its conjugate.  For n=2 it then runs
    rho = conj(c)*(1, i) over Gaussian rationals c with positive parts (and
    conjugates); for n>=3 it applies rational Cayley rotations to the stock
    witness.  Only points with all Re rho_j > 0 are produced.
    """
    base = stock_witness(n)
    produced = 0
    seen = set()

    def emit(p: VarietyPoint):
        key = p.rho
        if key in seen or not p.is_cone_admissible():
            return None
        seen.add(key)
        return p

    for p in (base, base.conjugate()):
        if emit(p):
            produced += 1
            yield p
    if n == 2:
        gauss = sorted(
            ((a, b) for a in range(1, 8) for b in range(1, 8) if math.gcd(a, b) == 1),
            key=lambda ab: (ab[0] + ab[1], ab),
        )
        for a, b in gauss:
            p = VarietyPoint((_gr(a, -b), _gr(b, a)), label=f"c={a}+{b}i")
            for cand in (p, p.conjugate()):
                if emit(cand):
                    produced += 1
                    yield cand
                    if produced >= limit:
                        return
        return
    for label, k in _skew_sequence(n):
        orth = _cayley(k)
        for src in (base, base.conjugate()):
            cand = emit(_rotate(src, orth, f"{src.label}:{label}"))
            if cand:
                produced += 1
                yield cand
                if produced >= limit:
                    return


def variety_sample(n: int, tau: float | None = None, conjugate: bool = False) -> VarietyPoint:
    """An exact point on rho.rho = 0 with positive real parts.

    Without ``tau`` this is the stock witness (see :func:`stock_witness` for
    its cone ratio).  With ``tau`` the first candidate whose cone ratio is at
    least ``tau`` is returned.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if tau is not None and not 0 < tau <= default_tau(n) + 1e-15:
        raise ValueError(f"tau must lie in (0, 1/(2 sqrt n)] = (0, {default_tau(n):.6f}]")
    for p in variety_candidates(n):
        if tau is None or p.cone_ratio() >= tau:
            if tau is not None:
                p = VarietyPoint(p.rho, p.scale, tau, p.label)
            return p.conjugate() if conjugate else p
    raise CertificateSearchExhausted(f"no candidate with cone ratio >= {tau}")


def branch_of(point: VarietyPoint) -> str:
    """For n=2: which line of the variety holds rho."""
    r1, r2 = point.rho
    if r2 == I * r1:
        return "rho2=+i*rho1"
    if r2 == -(I * r1):
        return "rho2=-i*rho1"
    raise ValueError("point is not on the n=2 variety")


# -- boundary-term identity ----------------------------------------------------

@dataclass(frozen=True)
class BoundaryDecomposition:
    """Pieces of Q * sigma_{n-1}(eta^2) = sigma_n(eta) * sum_i (P_i + eta_i Q_i)."""

    Q: Poly
    P_hat: tuple[Poly, ...]
    Q_hat: tuple[Poly, ...]
    lhs: Poly
    rhs: Poly


def boundary_decomposition(p: Poly) -> BoundaryDecomposition:
    """Face-by-face integration-by-parts pieces of the transform of harmonic P.

    For each face x_i = 0 the (n-1)-variable transforms of P|_{x_i=0} and of
    (dP/dx_i)|_{x_i=0} are multiplied by prod_{j != i} eta_j.  The exact
    polynomial identity tying them to Q is checked before returning.
    """
    _require_homogeneous(p)
    if not is_harmonic(p):
        raise NotHarmonicError("boundary decomposition needs a harmonic polynomial")
    n = p.n
    Q = laplace_transform(p)
    etas = Poly.variables(n)
    p_parts, q_parts = [], []
    for i in range(n):
        others = Poly.constant(n, 1)
        for j in range(n):
            if j != i:
                others = others * etas[j]
        p_parts.append(others * face_transform(p.restrict_zero(i), i))
        q_parts.append(others * face_transform(p.diff(i).restrict_zero(i), i))
    sigma_n = elementary_symmetric(n, n)
    denom = substitute_squares(elementary_symmetric(n - 1, n))
    lhs = Q * denom
    total = Poly.zero(n)
    for i in range(n):
        total = total + p_parts[i] + etas[i] * q_parts[i]
    rhs = sigma_n * total
    if lhs != rhs:
        raise IdentityFailure("Q*sigma_{n-1}(eta^2) != sigma_n(eta)*sum(P_i + eta_i Q_i)")
    for i in range(n):
        if p_parts[i].depends_on(i) or q_parts[i].depends_on(i):
            raise IdentityFailure(f"face piece {i} depends on its own variable")
    return BoundaryDecomposition(Q, tuple(p_parts), tuple(q_parts), lhs, rhs)


# -- nonvanishing certificate --------------------------------------------------

@dataclass(frozen=True)
class NonvanishingCertificate:
    P: Poly
    Q: Poly
    witness: VarietyPoint
    value: GaussianRational
    divisibility: dict = field(repr=False)
    branch: str | None = None
    candidates_tried: int = 1

    @property
    def divisible(self) -> bool:
        """False when the transform is certified not to vanish on the variety."""
        return False


def _n2_factors() -> dict[str, Poly]:
    e1, e2 = Poly.variables(2)
    # eta1 - i eta2 vanishes exactly on the branch rho2 = +i rho1
    return {"rho2=+i*rho1": e1 - I * e2, "rho2=-i*rho1": e1 + I * e2}


def check_nonvanishing(
    p: Poly, tau: float | None = None, max_candidates: int = 400
) -> NonvanishingCertificate:
    """Certify that the transform of harmonic P does not vanish on rho.rho = 0.

    Records non-divisibility of Q by sigma_{n-1}(eta^2) (n>=3) or by at least
    one linear factor eta1 -+ i eta2 (n=2), then finds an exact point on the
    variety with all Re rho_j > 0 (cone ratio >= tau when given) where Q(1/rho)
    is nonzero.  For n=2 only branches whose factor does not divide Q are
    searched; the branch holding the witness is recorded.
    """
    n = p.n
    if p.is_zero():
        raise ValueError("P must be nonzero")
    _require_homogeneous(p)
    if not p.is_exact():
        raise TypeError("certification needs exact coefficients")
    if not is_harmonic(p):
        raise NotHarmonicError(f"laplacian is {laplacian(p)}, not zero")
    Q = laplace_transform(p)
    divisibility: dict[str, object] = {}
    if n >= 3:
        denom = substitute_squares(elementary_symmetric(n - 1, n))
        try:
            poly_divide_exact(Q, denom)
        except NotDivisible as exc:
            divisibility["sigma_{n-1}(eta^2)"] = exc.remainder
        else:
            raise CertificateSearchExhausted("Q is divisible by sigma_{n-1}(eta^2)")
        open_branches = None
    else:
        open_branches = set()
        for name, factor in _n2_factors().items():
            _, rem = poly_divmod(Q, factor)
            divisibility[name] = rem if not rem.is_zero() else None
            if not rem.is_zero():
                open_branches.add(name)
        if not open_branches:
            raise CertificateSearchExhausted("Q is divisible by both eta1 - i eta2 and eta1 + i eta2")

    tried = 0
    for cand in variety_candidates(n, limit=max_candidates):
        if tau is not None and cand.cone_ratio() < tau:
            continue
        branch = None
        if n == 2:
            branch = branch_of(cand)
            if branch not in open_branches:
                continue
        tried += 1
        value = Q.evaluate(cand.eta())
        if value != 0:
            witness = cand if tau is None else VarietyPoint(cand.rho, cand.scale, tau, cand.label)
            return NonvanishingCertificate(p, Q, witness, value, divisibility, branch, tried)
    raise CertificateSearchExhausted(f"no nonvanishing witness among {tried} candidates")


# -- sigma_{n-1}(s)^2 does not divide sums of one-variable-free terms ----------

def random_special_form(rng: np.random.Generator, n: int, degree: int) -> Poly:
    """Random nonzero T = sum_i T_i with T_i independent of s_i, deg <= degree."""
    from .harmonic import monomials

    while True:
        total = Poly.zero(n)
        for i in range(n):
            terms = {}
            for d in range(degree + 1):
                for e in monomials(n, d):
                    if e[i] == 0 and rng.random() < 0.5:
                        terms[e] = int(rng.integers(-5, 6))
            total = total + Poly(n, terms)
        if not total.is_zero():
            return total


def _random_poly(rng: np.random.Generator, n: int, degree: int) -> Poly:
    from .harmonic import monomials

    while True:
        terms = {}
        for d in range(degree + 1):
            for e in monomials(n, d):
                if rng.random() < 0.5:
                    terms[e] = GaussianRational(int(rng.integers(-4, 5)), int(rng.integers(-2, 3)))
        p = Poly(n, terms)
        if not p.is_zero():
            return p


@dataclass
class Prop3Report:
    n: int
    degree: int
    trials: int
    special_not_divisible: int = 0
    counterexamples: list = field(default_factory=list)
    products_detected: int = 0
    product_misses: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples and not self.product_misses


def verify_prop3(n: int, degree: int, trials: int, seed: int = 0) -> Prop3Report:
    """Random check that sigma_{n-1}(s)^2 divides no nonzero sum of T_i(s_hat_i).

    Also runs the converse: sigma_{n-1}(s)^2 * C must be found divisible.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    sq = elementary_symmetric(n - 1, n) ** 2
    report = Prop3Report(n, degree, trials)
    for _ in range(trials):
        t = random_special_form(rng, n, degree)
        _, rem = poly_divmod(t, sq)
        if rem.is_zero():
            report.counterexamples.append(t)
        else:
            report.special_not_divisible += 1
        c = _random_poly(rng, n, max(degree - 2 * (n - 1), 0))
        try:
            quotient = poly_divide_exact(sq * c, sq)
        except NotDivisible:
            report.product_misses.append(c)
        else:
            if quotient == c:
                report.products_detected += 1
            else:
                report.product_misses.append(c)
    return report


def tridiag_det(size: int) -> int:
    """Exact determinant of the size x size matrix with 2 on the diagonal, 1 beside it."""
    if size < 1:
        raise ValueError("size must be >= 1")
    m = [[2 if i == j else 1 if abs(i - j) == 1 else 0 for j in range(size)] for i in range(size)]
    return _exact.bareiss_det(m)


# -- numerical cross-check -------------------------------------------------------

@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    tail_bound: float = 0.0


def _as_rho(rho) -> np.ndarray:
    if isinstance(rho, VarietyPoint):
        return rho.to_complex()
    return np.asarray([complex(r) for r in rho])


def _tensor_nodes(rho: np.ndarray, resolution: int):
    x, w = roots_laguerre(resolution)
    re = rho.real
    axes = [x / r for r in re]
    weights = [w * np.exp(-1j * rho[j].imag * axes[j]) / re[j] for j in range(len(rho))]
    return axes, weights


def _integrate(fn, rho: np.ndarray, resolution: int) -> complex:
    axes, weights = _tensor_nodes(rho, resolution)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wgrid = weights[0]
    for w in weights[1:]:
        wgrid = np.multiply.outer(wgrid, w)
    return complex(np.sum(wgrid.ravel() * fn(pts)))


def _poly_callable(p: Poly):
    exps = np.array(list(p.terms.keys()), dtype=int)
    coeffs = np.array([complex(c) for c in p.terms.values()])

    def fn(pts: np.ndarray) -> np.ndarray:
        if len(coeffs) == 0:
            return np.zeros(len(pts), dtype=complex)
        return np.prod(pts[:, None, :] ** exps[None, :, :], axis=2) @ coeffs

    return fn


def orthant_laplace_quadrature(
    p: Poly | None,
    rho,
    epsilon: float = math.inf,
    resolution: int = 80,
    weight=None,
) -> QuadratureResult:
    """Tensor Gauss-Laguerre value of int_{x>0} exp(-x.rho) P(x) f(x) dx.

    ``weight`` is an optional vectorized multiplier f(x) (points shaped
    ``(m, n)``).  Each axis uses the substitution x_j = y_j / Re rho_j; the
    oscillating phase exp(-i Im rho_j x_j) stays in the integrand.  The error
    estimate compares against a rule with 3/4 the nodes.  A finite
    ``epsilon`` keeps the full-orthant value and reports a bound on the part
    outside the ball of radius epsilon (for polynomial integrands).
    """
    rho = _as_rho(rho)
    if np.any(rho.real <= 0):
        raise ValueError("every Re rho_j must be positive for a decaying integrand")
    if p is None:
        fn = weight
        if fn is None:
            raise ValueError("need a polynomial or a weight function")
    else:
        if p.n != len(rho):
            raise ValueError("dimension mismatch between P and rho")
        pf = _poly_callable(p)
        fn = pf if weight is None else (lambda pts: pf(pts) * weight(pts))
    value = _integrate(fn, rho, resolution)
    coarse = _integrate(fn, rho, max(8, (3 * resolution) // 4))
    error = abs(value - coarse)
    tail = 0.0
    if math.isfinite(epsilon):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if p is not None:
            n = len(rho)
            c = float(rho.real.min())
            moment = sum(
                abs(complex(coef)) * math.prod(math.factorial(a) for a in e)
                * (2 / c) ** (sum(e) + n)
                for e, coef in p.items()
            )
            tail = math.exp(-c * epsilon / 2) * moment
    return QuadratureResult(value, error, tail)
