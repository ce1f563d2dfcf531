"""Complex geometrical optics solutions ``w = exp(-x.rho) (1 + psi)`` in 2-D.

With ``rho.rho = 0`` the correction solves ``(Delta - 2 rho.grad) psi = Q (1 + psi)``.
Solving on a periodic box with the Fourier convention ``exp(+i x.xi)`` turns
the operator into multiplication by ``P(xi) = -xi.xi - 2i rho.xi``.  The box
frequencies are shifted by half a cell, so the grid never hits ``xi = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.ndimage import distance_transform_edt
from scipy.signal import fftconvolve

from .harmonic import PlaneWaveSum
from .helmholtz2d import ContrastField, ScatterConfig, far_field_operator
from .laplace_variety import laplace_transform, orthant_laplace_quadrature, stock_witness
from .polyalg import Poly

__all__ = [
    "SeriesDiverged",
    "SymbolTooSmall",
    "NoKernelVector",
    "PeriodicGrid",
    "CgoField",
    "DyadicPartition",
    "MollifierSpec",
    "DominanceRow",
    "DominanceReport",
    "OrthogonalityResult",
    "unit_rho",
    "symbol_value",
    "raised_cosine",
    "distance_cutoff",
    "square_potential",
    "born_series_cgo",
    "lp_norm",
    "decay_fit",
    "fb_norm",
    "mollified_symbol_sup",
    "herglotz_with_leading_term",
    "corner_dominance_report",
    "orthogonality_residual",
    "kernel_density",
]


class SeriesDiverged(RuntimeError):
    """Born terms stopped shrinking; |rho| is too small for this potential."""

    def __init__(self, message: str, term_norms: Sequence[float]):
        super().__init__(message)
        self.term_norms = list(term_norms)


class SymbolTooSmall(RuntimeError):
    def __init__(self, xi: np.ndarray, value: float):
        super().__init__(f"|P(xi)| = {value:.3e} at xi = {xi}")
        self.xi = xi
        self.value = value


class NoKernelVector(RuntimeError):
    pass


# -- grids and symbols ------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicGrid:
    """``n x n`` nodes ``origin + j h`` on a square torus of side ``length``."""

    n: int
    length: float
    origin: float

    def __post_init__(self):
        if self.n < 8 or self.length <= 0:
            raise ValueError("grid needs at least 8 nodes and positive length")

    @property
    def h(self) -> float:
        return self.length / self.n

    def coords(self) -> np.ndarray:
        return self.origin + np.arange(self.n) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.coords()
        return np.meshgrid(c, c, indexing="ij")

    def shift(self) -> float:
        return math.pi / self.length

    def frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        f = 2 * np.pi * np.fft.fftfreq(self.n, d=self.h) + self.shift()
        return np.meshgrid(f, f, indexing="ij")

    def _twist(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.exp(1j * self.shift() * ((X - self.origin) + (Y - self.origin)))

    def contrast_box(self) -> tuple[float, float]:
        """Box for a :class:`ContrastField` whose cell centres are these nodes."""
        lo = self.origin - self.h / 2
        return (lo, lo + self.length)

    @classmethod
    def around(cls, lo: float, hi: float, n: int, factor: float = 4.0) -> "PeriodicGrid":
        side = factor * (hi - lo)
        return cls(n, side, 0.5 * (lo + hi) - side / 2)


def unit_rho(s: float, n: int = 2) -> np.ndarray:
    """``s`` times the stock variety point of unit Euclidean norm."""
    r = stock_witness(n).to_complex()
    return s * r / np.linalg.norm(r)


def _check_variety(rho: np.ndarray) -> None:
    if abs(np.dot(rho, rho)) > 1e-12 * np.vdot(rho, rho).real:
        raise ValueError("rho must satisfy rho.rho = 0")


def symbol_value(rho, xi) -> np.ndarray | complex:
    """``P(xi) = -xi.xi - 2i rho.xi``; ``xi`` has the coordinate on its last axis."""
    rho = np.asarray(rho, dtype=complex)
    xi = np.asarray(xi, dtype=float)
    val = -np.sum(xi * xi, axis=-1) - 2j * (xi @ rho)
    return complex(val) if np.ndim(val) == 0 else val


def _symbol_grid(rho: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    XI, ETA = grid.frequencies()
    return -(XI**2 + ETA**2) - 2j * (rho[0] * XI + rho[1] * ETA)


def raised_cosine(t: np.ndarray, lo: float, hi: float, taper: float) -> np.ndarray:
    """1 on ``[lo, hi]``, cosine roll-off to 0 over ``taper`` on each side."""
    out = np.ones_like(t, dtype=float)
    for gap in (lo - t, t - hi):
        z = np.clip(gap / taper, 0.0, 1.0)
        out *= np.where(gap > 0, 0.5 * (1 + np.cos(np.pi * z)), 1.0)
    return out


def distance_cutoff(mask: np.ndarray, h: float, taper: float) -> np.ndarray:
    """1 on ``mask``, cosine roll-off to 0 over distance ``taper`` outside it."""
    d = distance_transform_edt(~mask) * h
    z = np.clip(d / taper, 0.0, 1.0)
    return 0.5 * (1 + np.cos(np.pi * z))


def square_potential(grid: PeriodicGrid, k: float, m0: float = 0.5,
                     square: tuple[float, float] = (0.0, 1.0), margin: float = 0.25,
                     taper: float = 0.25) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``Q = -k^2 (1 - m) Phi_D`` for ``m = m0 chi_K``, ``K = square^2``.

    ``D`` is ``K`` grown by ``margin``; returns ``(Q, m, D mask)``.
    """
    a, b = square
    m = ContrastField.square(m0, grid.n, square=square, box=grid.contrast_box()).values
    X, Y = grid.mesh()
    lo, hi = a - margin, b + margin
    phi = raised_cosine(X, lo, hi, taper) * raised_cosine(Y, lo, hi, taper)
    D = (X >= lo) & (X <= hi) & (Y >= lo) & (Y <= hi)
    return -(k**2) * (1 - m) * phi, m, D


# -- Born series ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CgoField:
    rho: np.ndarray
    grid: PeriodicGrid
    psi: np.ndarray
    series_terms: int
    residual: float
    term_norms: tuple[float, ...]
    min_symbol: float

    def w(self) -> np.ndarray:
        X, Y = self.grid.mesh()
        return np.exp(-(X * self.rho[0] + Y * self.rho[1])) * (1 + self.psi)

    def sample(self, points: np.ndarray, window: tuple[float, float, float, float] | None = None) -> np.ndarray:
        """Cubic-spline values of ``psi`` at ``points`` (shape ``(m, 2)``).

        ``window = (xlo, xhi, ylo, yhi)`` restricts the spline to a sub-box.
        """
        c = self.grid.coords()
        if window is None:
            ix = iy = np.arange(len(c))
        else:
            pad = 4 * self.grid.h
            ix = np.flatnonzero((c >= window[0] - pad) & (c <= window[1] + pad))
            iy = np.flatnonzero((c >= window[2] - pad) & (c <= window[3] + pad))
        block = self.psi[np.ix_(ix, iy)]
        re = RectBivariateSpline(c[ix], c[iy], block.real)
        im = RectBivariateSpline(c[ix], c[iy], block.imag)
        pts = np.asarray(points, dtype=float)
        return re.ev(pts[:, 0], pts[:, 1]) + 1j * im.ev(pts[:, 0], pts[:, 1])


def born_series_cgo(Q: np.ndarray, rho, grid: PeriodicGrid, tol: float = 1e-10,
                    max_terms: int = 400, symbol_floor: float | None = None) -> CgoField:
    """Sum ``psi = sum_N psi^N`` with ``P psi^1 = Q`` and ``P psi^N = Q psi^(N-1)``.

    Stops once ``||psi^N|| < tol ||psi||``.  The returned residual is the
    relative size of ``P psi - Q (1 + psi)`` for the spectral operator.
    Raises :class:`SeriesDiverged` when two consecutive terms grow or the
    term budget runs out.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2,):
        raise ValueError("rho must be a complex 2-vector")
    _check_variety(rho)
    Q = np.asarray(Q)
    if Q.shape != (grid.n, grid.n):
        raise ValueError("Q must live on the grid")
    edge = np.concatenate([Q[0], Q[-1], Q[:, 0], Q[:, -1]])
    if np.any(edge != 0):
        raise ValueError("Q must vanish on the boundary of the periodic box")
    P = _symbol_grid(rho, grid)
    absP = np.abs(P)
    i_min = np.unravel_index(np.argmin(absP), absP.shape)
    min_symbol = float(absP[i_min])
    if symbol_floor is None:
        symbol_floor = 1e-8 * np.linalg.norm(rho) * 2 * math.pi / grid.length
    if min_symbol < symbol_floor:
        XI, ETA = grid.frequencies()
        raise SymbolTooSmall(np.array([XI[i_min], ETA[i_min]]), min_symbol)
    tw = grid._twist()

    def solve(g):
        return tw * np.fft.ifft2(np.fft.fft2(g / tw) / P)

    psi = np.zeros(Q.shape, dtype=complex)
    if not Q.any():
        return CgoField(rho, grid, psi, 1, 0.0, (0.0,), min_symbol)
    term = Q.astype(complex)
    norms: list[float] = []
    growth = 0
    for i in range(max_terms):
        term = solve(term if i == 0 else Q * term)
        psi += term
        norms.append(float(np.linalg.norm(term)))
        if norms[-1] < tol * np.linalg.norm(psi):
            break
        growth = growth + 1 if len(norms) > 1 and norms[-1] >= norms[-2] else 0
        if growth >= 2 or not np.isfinite(norms[-1]):
            raise SeriesDiverged(f"Born terms grow at |rho| = {np.linalg.norm(rho):.3g}", norms)
    else:
        raise SeriesDiverged("term budget exhausted", norms)
    rhs = Q * (1 + psi)
    lhs = tw * np.fft.ifft2(np.fft.fft2(psi / tw) * P)
    residual = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    return CgoField(rho, grid, psi, len(norms), residual, tuple(norms), min_symbol)


def lp_norm(values: np.ndarray, mask: np.ndarray | None, p: float, h: float) -> float:
    """Discrete ``(sum |f|^p h^2)^(1/p)`` over ``mask`` (all nodes when None)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    f = np.abs(np.asarray(values))
    if mask is not None:
        f = f[mask]
    if math.isinf(p):
        return float(f.max(initial=0.0))
    return float((np.sum(f**p) * h * h) ** (1 / p))


def decay_fit(samples: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares ``(slope, intercept)`` of log(norm) against log(|rho|)."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 4 or arr.shape[1] != 2:
        raise ValueError("need at least 4 (|rho|, norm) samples")
    if np.any(arr <= 0):
        raise ValueError("samples must be positive")
    if arr[:, 0].max() / arr[:, 0].min() < 8:
        raise ValueError("samples must span at least a factor of 8 in |rho|")
    slope, intercept = np.polyfit(np.log(arr[:, 0]), np.log(arr[:, 1]), 1)
    return float(slope), float(intercept)


# -- dyadic pieces --------------------------------------------------------------------------

def _smooth_step(t: np.ndarray) -> np.ndarray:
    # C-infinity step: 0 for t <= 0, 1 for t >= 1
    t = np.asarray(t, dtype=float)

    def g(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    a, b = g(t), g(1 - t)
    return a / (a + b)


@dataclass(frozen=True)
class DyadicPartition:
    """Radial pieces ``Phi_0 = phi0(|x|/unit)``, ``Phi_j = phi(|x|/(unit 2^j))``.

    ``phi0`` is 1 on ``[0, 1]`` and 0 beyond ``5/4``, so ``phi(s) = phi0(s) -
    phi0(2s)`` lives in ``[1/2, 5/4]`` and equals 1 on ``[5/8, 1]``.
    """

    levels: int
    unit: float = 1.0

    def phi0(self, s: np.ndarray) -> np.ndarray:
        return 1.0 - _smooth_step((np.asarray(s, dtype=float) - 1.0) * 4.0)

    def phi(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.phi0(s) - self.phi0(2 * s)

    def radii(self) -> list[float]:
        return [2.0**j for j in range(self.levels + 1)]

    def cutoffs(self, r: np.ndarray) -> list[np.ndarray]:
        s = np.asarray(r, dtype=float) / self.unit
        return [self.phi0(s)] + [self.phi(s / 2.0**j) for j in range(1, self.levels + 1)]

    @classmethod
    def covering(cls, rmax: float, unit: float = 1.0) -> "DyadicPartition":
        """Enough levels that the pieces sum to 1 for ``|x| <= rmax``."""
        levels = max(0, math.ceil(math.log2(max(rmax / unit, 1.0))))
        return cls(levels, unit)


def fb_norm(f: np.ndarray, grid: PeriodicGrid, s: int, p: float, q: float,
            unit: float = 1.0, centre: tuple[float, float] = (0.0, 0.0)) -> float:
    """``(sum_j (R_j^s ||(Phi_j f)^||_p)^q)^(1/q)`` with ``R_j = 2^j``.

    Pieces are cut in space around ``centre`` and then Fourier transformed
    (continuous normalization ``h^2 sum f exp(-i x.xi)``); ``L^p`` norms are
    taken over the frequency lattice.
    """
    if q not in (1, math.inf):
        raise ValueError("q must be 1 or inf")
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    X, Y = grid.mesh()
    r = np.hypot(X - centre[0], Y - centre[1])
    part = DyadicPartition.covering(float(r.max()), unit)
    if part.levels + 1 < 4:
        raise ValueError("grid too coarse for four dyadic shells")
    dxi = 2 * math.pi / grid.length
    terms = []
    for R, cut in zip(part.radii(), part.cutoffs(r)):
        piece = np.fft.fft2(cut * f) * grid.h**2
        norm = (np.sum(np.abs(piece) ** p) * dxi * dxi) ** (1 / p)
        terms.append(R**s * norm)
    terms = np.asarray(terms)
    return float(terms.sum() if q == 1 else terms.max())


# -- mollified symbol ------------------------------------------------------------------------

@dataclass(frozen=True)
class MollifierSpec:
    """``chi_eps(xi) = eps^-2 chi(xi / eps)`` with the unit Gaussian ``chi``."""

    epsilon: float
    profile: str = "gaussian"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.profile != "gaussian":
            raise ValueError("only the gaussian profile is built in")

    @staticmethod
    def chi(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(-(x * x + y * y) / 2) / (2 * math.pi)

    def kernel(self, spacing: float, half_width: float) -> np.ndarray:
        t = np.arange(-half_width, half_width + spacing / 2, spacing)
        X, Y = np.meshgrid(t, t, indexing="ij")
        return self.chi(X / self.epsilon, Y / self.epsilon) / self.epsilon**2

    def check(self, cells_per_eps: int = 8, reach: float = 6.0, order: int = 8) -> tuple[float, float]:
        """Unit integral and decay: returns (integral error, max |x|^order chi on the rim)."""
        K = self.kernel(self.epsilon / cells_per_eps, reach * self.epsilon)
        integral = K.sum() * (self.epsilon / cells_per_eps) ** 2
        t = reach
        rim = t**order * self.chi(np.array(t), np.array(0.0))
        return abs(integral - 1.0), float(rim)


def mollified_symbol_sup(spec: MollifierSpec, rho, cells_per_eps: int = 4,
                         window: float = 4.0, reach: float = 5.0) -> float:
    """Sup of ``|chi_eps * (1/P)|`` over frequency windows at the zeros of ``P``.

    In 2-D the symbol vanishes only at ``xi = 0`` and ``xi = 2 Im rho``; away
    from them ``|1/P|`` is below the mollified peak, so the sup is taken over
    boxes of half-width ``window * eps`` around both points.  Lattices are
    offset half a cell from each zero and have ``cells_per_eps`` cells per eps.
    """
    if cells_per_eps < 4:
        raise ValueError("epsilon must span at least 4 cells")
    rho = np.asarray(rho, dtype=complex)
    _check_variety(rho)
    eps = spec.epsilon
    if (window + reach) * eps >= 2 * np.linalg.norm(rho.imag):
        raise ValueError("epsilon too large: windows around the two zeros overlap")
    d = eps / cells_per_eps
    K = spec.kernel(d, reach * eps)
    half = K.shape[0] // 2
    best = 0.0
    for c in (np.zeros(2), 2 * rho.imag):
        m = int(round(window * eps / d)) + half
        t = (np.arange(-m, m) + 0.5) * d
        XI, ETA = np.meshgrid(c[0] + t, c[1] + t, indexing="ij")
        inv = 1.0 / (-(XI**2 + ETA**2) - 2j * (rho[0] * XI + rho[1] * ETA))
        conv = fftconvolve(inv, K, mode="valid") * d * d
        best = max(best, float(np.abs(conv).max()))
    return best


# -- corner dominance ---------------------------------------------------------------------------

def herglotz_with_leading_term(P: Poly, k: float, n_waves: int | None = None) -> PlaneWaveSum:
    """Plane-wave sum whose lowest Taylor part at 0 is the 2-D harmonic form ``P``.

    A harmonic form of degree N is ``A z^N + B conj(z)^N`` with ``z = x1 + i x2``.
    Averaging ``exp(i N t) exp(i k theta(t).x)`` over equispaced ``t`` gives
    ``(ik/2)^N z^N / N!`` plus parts of degree ``N + 2`` and higher.
    """
    if P.n != 2 or not P.is_homogeneous():
        raise ValueError("need a homogeneous form in two variables")
    N = P.degree()
    A = complex(P.to_complex().evaluate((0.5, -0.5j)))
    B = complex(P.to_complex().evaluate((0.5, 0.5j)))
    if n_waves is None:
        n_waves = 2 * N + 8
    t = 2 * np.pi * np.arange(n_waves) / n_waves
    scale = math.factorial(N) / (1j * k / 2) ** N / n_waves
    amps = scale * (A * np.exp(1j * N * t) + B * np.exp(-1j * N * t))
    dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
    return PlaneWaveSum.from_arrays(k, amps, dirs)


@dataclass(frozen=True)
class DominanceRow:
    rho_mag: float
    T1: float
    T2: float
    T3: float
    exact: float
    series_terms: int


@dataclass(frozen=True)
class DominanceReport:
    rows: tuple[DominanceRow, ...]
    degree: int
    slopes: dict

    def separation(self) -> list[float]:
        return [r.T1 / (r.T2 + r.T3) for r in self.rows]


def _slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def corner_dominance_report(P: Poly, rho_schedule: Sequence[float], k: float = 2.0,
                            epsilon: float = 0.5, n_grid: int = 1024,
                            resolution: int = 80, tol: float = 1e-10) -> DominanceReport:
    """Size of the three pieces of ``int exp(-x.rho) m w v0`` near a corner.

    The contrast is ``m = chi_K`` with ``K = [0, 1]^2`` (so ``m(0) = 1``) and
    ``v0`` is a Herglotz wave with leading Taylor term ``P``.  With a smooth
    cutoff ``c_eps`` supported in ``|x| < epsilon``:

    * ``T1 = |int exp(-x.rho) P c_eps|``, the corner term;
    * ``T2 = |int exp(-x.rho) (v0 - P) c_eps|``, the Taylor remainder;
    * ``T3 = |int exp(-x.rho) psi v0 c_eps|``, the CGO correction;
    * ``exact = |Q(1/rho)|`` from the exact Laplace transform of ``P``.
    """
    if epsilon > 1:
        raise ValueError("the cutoff must stay inside the square")
    v0 = herglotz_with_leading_term(P, k)
    Pc = P.to_complex()
    Lq = laplace_transform(P).to_complex()
    grid = PeriodicGrid.around(-0.25 - 0.25, 1.25 + 0.25, n_grid)
    Q, _, _ = square_potential(grid, k, m0=1.0)

    def cutoff(pts):
        return 1.0 - _smooth_step((np.hypot(pts[:, 0], pts[:, 1]) / epsilon - 0.5) * 2.0)

    def p_values(pts):
        return np.array([complex(Pc.evaluate(tuple(x))) for x in pts])

    rows = []
    for s in rho_schedule:
        rho = unit_rho(float(s))
        cg = born_series_cgo(Q, rho, grid, tol=tol)
        window = (0.0, epsilon, 0.0, epsilon)
        T1 = abs(orthant_laplace_quadrature(P, rho, resolution=resolution, weight=cutoff).value)
        T2 = abs(orthant_laplace_quadrature(
            None, rho, resolution=resolution,
            weight=lambda pts: (v0(pts) - p_values(pts)) * cutoff(pts)).value)

        def third(pts):
            out = np.zeros(len(pts), dtype=complex)
            inside = (pts[:, 0] < epsilon) & (pts[:, 1] < epsilon)
            if inside.any():
                sub = pts[inside]
                out[inside] = cg.sample(sub, window) * v0(sub) * cutoff(sub)
            return out

        T3 = abs(orthant_laplace_quadrature(None, rho, resolution=resolution, weight=third).value)
        exact = abs(complex(Lq.evaluate(tuple(1 / rho))))
        rows.append(DominanceRow(float(s), T1, T2, T3, exact, cg.series_terms))
    xs = [r.rho_mag for r in rows]
    slopes = {name: _slope(xs, [getattr(r, name) for r in rows]) for name in ("T1", "T2", "T3", "exact")}
    return DominanceReport(tuple(rows), P.degree(), slopes)


# -- orthogonality identity -----------------------------------------------------------------------

@dataclass(frozen=True)
class OrthogonalityResult:
    value: float
    sigma_min: float
    density: np.ndarray
    series_terms: int
    flag: str = "ok"


def kernel_density(m: ContrastField, cfg: ScatterConfig) -> tuple[np.ndarray, float]:
    """Incident density of the smallest whitened singular value and that value."""
    data = far_field_operator(m, cfg)
    Sh, W = data.whitened(cfg.whiten_cutoff)
    _, s, vh = np.linalg.svd(Sh)
    return W @ vh[-1].conj(), float(s[-1])


def orthogonality_residual(m: ContrastField, k: float, rho, cfg: ScatterConfig,
                           density: np.ndarray | None = None, kernel_threshold: float = 1e-3,
                           taper: float = 0.05, refine: int = 3, factor: float = 4.0,
                           tol: float = 1e-10) -> OrthogonalityResult:
    """Normalized ``|int w k^2 m v0| / (||w|| ||k^2 m v0||)`` over the support of ``m``.

    ``v0`` is the Herglotz wave of ``density`` (default: the smallest
    whitened singular vector of S at ``k``, which must be below
    ``kernel_threshold``).  ``w = exp(-x.rho)(1 + psi)`` solves
    ``(Delta + k^2 (1 - m)) w = 0`` on the support; its periodic grid is
    ``refine`` times finer than the contrast grid and shares its cell centres.
    """
    if refine % 2 == 0:
        raise ValueError("refine must be odd so contrast cell centres are grid nodes")
    cfg = cfg.with_k(k)
    sup = m.values != 0
    if not sup.any():
        M = cfg.n_dirs
        return OrthogonalityResult(0.0, 0.0, np.zeros(M, complex), 0, flag="empty")
    sigma = math.nan
    if density is None:
        density, sigma = kernel_density(m, cfg)
        if sigma > kernel_threshold:
            raise NoKernelVector(f"smallest whitened singular value {sigma:.3e} above threshold")
    h = m.h / refine
    cx = m.centres()
    I, J = np.nonzero(sup)
    lo_c, hi_c = cx[min(I.min(), J.min())], cx[max(I.max(), J.max())]
    span = factor * (hi_c - lo_c + 2 * taper + 2 * m.h)
    n = int(math.ceil(span / h))
    n += n % 2
    centre = 0.5 * (lo_c + hi_c)
    j0 = int(round((centre - span / 2 - cx[0]) / h))
    grid = PeriodicGrid(n, n * h, cx[0] + j0 * h)
    # piecewise-constant contrast seen through the finer grid
    g = grid.coords()
    cell = np.floor((g - m.box[0]) / m.h).astype(int)
    ok = (cell >= 0) & (cell < m.resolution)
    mg = np.zeros((n, n))
    mg[np.ix_(ok, ok)] = m.values[np.ix_(cell[ok], cell[ok])]
    Q = -(k**2) * (1 - mg) * distance_cutoff(mg != 0, h, taper)
    cg = born_series_cgo(Q, rho, grid, tol=tol)
    idx = -j0 + refine * np.arange(m.resolution)
    X, Y = m.mesh()
    w = np.exp(-(X * cg.rho[0] + Y * cg.rho[1])) * (1 + cg.psi[np.ix_(idx, idx)])
    dirs = cfg.directions()
    waves = np.exp(1j * k * (X[..., None] * np.cos(dirs) + Y[..., None] * np.sin(dirs)))
    v0 = waves @ density * (2 * np.pi / cfg.n_dirs)
    f = k * k * m.values * v0
    num = abs(np.sum(w * f))
    den = math.sqrt(np.sum(np.abs(w[sup]) ** 2) * np.sum(np.abs(f) ** 2))
    return OrthogonalityResult(num / den, sigma, density, cg.series_terms)
