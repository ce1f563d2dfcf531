"""Two-dimensional penetrable-medium scattering.

The medium has refractive index ``n^2 = 1 - m`` with ``m`` compactly
supported.  The scattered field solves the Lippmann-Schwinger equation

    u = v0 - k^2 int G_k(x - y) m(y) u(y) dy,    G_k = (i/4) H_0^(1)(k|x|),

where ``u = v0 + u_s`` is the total field.  Far-field patterns use
``u_s(r theta) ~ exp(ikr) / sqrt(ikr) * alpha(theta)``, which fixes the
constant ``C_FAR = -i / sqrt(8 pi)`` in ``alpha = C_FAR k^2 int exp(-ik theta.y) m u``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import zgecon
from scipy.optimize import minimize_scalar
from scipy.signal import fftconvolve
from scipy.special import hankel1

__all__ = [
    "DEFAULT_RESOLUTION",
    "C_FAR",
    "ResolutionError",
    "SolverBreakdown",
    "ContrastField",
    "ScatterConfig",
    "LSOperator",
    "ScatterSolution",
    "FarFieldData",
    "SweepRow",
    "ITERecord",
    "bessel_j",
    "bessel_j_orders",
    "green2d",
    "assemble_ls",
    "solve_scatter",
    "plane_waves",
    "far_field",
    "far_field_operator",
    "whitened_singular_values",
    "min_singular_sweep",
    "radial_ite_determinant",
    "radial_nsk_roots",
    "cauchy_matrix",
    "green_table",
    "sweep_wavenumbers",
    "locate_dip",
]

C_FAR = -1j / math.sqrt(8 * math.pi)
# cells per side on the unit-box grid; keeps kh < 0.5 up to k = 8
DEFAULT_RESOLUTION = 36


class ResolutionError(ValueError):
    """Grid too coarse for the wavenumber (k h must stay below 0.5)."""


class SolverBreakdown(RuntimeError):
    def __init__(self, message: str, residual: float, cond: float = math.nan):
        super().__init__(f"{message} (residual {residual:.3e}, condition {cond:.3e})")
        self.residual = residual
        self.cond = cond


# -- Bessel functions --------------------------------------------------------------

def _series_j(order: int, x: np.ndarray) -> np.ndarray:
    half = x / 2
    term = half**order / math.factorial(order)
    total = term.copy()
    q = -(half**2)
    for j in range(1, 60):
        term = term * q / (j * (j + order))
        total = total + term
    return total


def bessel_j_orders(nmax: int, x) -> np.ndarray:
    """``J_0 .. J_nmax`` at ``x >= 0``; shape ``(nmax + 1,) + x.shape``.

    Small arguments use the ascending series.  Otherwise Miller's backward
    recurrence starts well above both ``nmax`` and ``x`` and is normalized
    with ``J_0 + 2 sum J_2k = 1``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    flat = x.ravel()
    out = np.zeros((nmax + 1, flat.size))
    small = flat < 1.0
    if small.any():
        for order in range(nmax + 1):
            out[order, small] = _series_j(order, flat[small])
    big = ~small
    if big.any():
        xb = flat[big]
        start = int(max(nmax, xb.max()) + 20 + 2 * math.sqrt(max(nmax, xb.max()) * 20))
        start += start % 2
        nxt = np.zeros_like(xb)
        cur = np.full_like(xb, 1e-300)
        vals = np.zeros((nmax + 1, xb.size))
        norm = np.zeros_like(xb)
        for order in range(start, 0, -1):
            prev = 2 * order / xb * cur - nxt
            nxt, cur = cur, prev
            # cur now holds the unnormalized J_{order-1}
            if order - 1 <= nmax:
                vals[order - 1] = cur
            if (order - 1) % 2 == 0:
                norm += cur if order - 1 == 0 else 2 * cur
            scale = np.abs(cur) > 1e250
            if scale.any():
                nxt[scale] *= 1e-250
                cur[scale] *= 1e-250
                vals[:, scale] *= 1e-250
                norm[scale] *= 1e-250
        out[:, big] = vals / norm
    return out.reshape((nmax + 1,) + x.shape)


def bessel_j(order: int, x):
    """Bessel function of the first kind ``J_order(x)`` for ``x >= 0``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    vals = bessel_j_orders(order, x)[order]
    return float(vals) if np.ndim(vals) == 0 else vals


def _bessel_j_and_derivative(order: int, x) -> tuple[np.ndarray, np.ndarray]:
    table = bessel_j_orders(order + 1, x)
    j = table[order]
    dj = -table[1] if order == 0 else (table[order - 1] - table[order + 1]) / 2
    return j, dj


def green2d(k: float, r):
    """Outgoing fundamental solution ``(i/4) H_0^(1)(k r)`` of ``-(Delta + k^2)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive; the singular cell is handled by assemble_ls")
    val = 0.25j * hankel1(0, k * r)
    return complex(val) if val.ndim == 0 else val


# -- domain types -------------------------------------------------------------------

@dataclass(frozen=True)
class ContrastField:
    """Cell-averaged contrast ``m`` on a uniform ``N x N`` grid of cell centres.

    ``box`` is ``(lo, hi)`` on both axes, so ``h = (hi - lo) / N``.
    """

    values: np.ndarray
    box: tuple[float, float]
    shape: str = "custom"
    phi: str = "1"
    corner: tuple[float, float] | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("contrast values must be a square 2-D array")
        if self.box[1] <= self.box[0]:
            raise ValueError("empty box")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite contrast")
        object.__setattr__(self, "values", v)

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return (self.box[1] - self.box[0]) / self.resolution

    def centres(self) -> np.ndarray:
        lo = self.box[0]
        return lo + (np.arange(self.resolution) + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.centres()
        return np.meshgrid(c, c, indexing="ij")

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values.ravel() != 0)

    @classmethod
    def _averaged(cls, indicator, amplitude, resolution, box, supersample, **meta):
        lo, hi = box
        h = (hi - lo) / resolution
        c = lo + (np.arange(resolution) + 0.5) * h
        X, Y = np.meshgrid(c, c, indexing="ij")
        offs = ((np.arange(supersample) + 0.5) / supersample - 0.5) * h
        acc = np.zeros_like(X)
        for ox in offs:
            for oy in offs:
                xs, ys = X + ox, Y + oy
                acc += indicator(xs, ys) * amplitude(xs, ys)
        return cls(acc / supersample**2, (lo, hi), **meta)

    @classmethod
    def disk(cls, m0: float, resolution: int = DEFAULT_RESOLUTION, radius: float = 1.0,
             box: tuple[float, float] = (-1.0, 1.0), supersample: int = 8) -> "ContrastField":
        if box[0] > -radius or box[1] < radius:
            raise ValueError("disk does not fit in the box")
        return cls._averaged(
            lambda x, y: (x * x + y * y < radius * radius).astype(float),
            lambda x, y: m0, resolution, box, supersample, shape="disk",
        )

    @classmethod
    def square(cls, m0: float, resolution: int = DEFAULT_RESOLUTION, square: tuple[float, float] = (-1.0, 1.0),
               box: tuple[float, float] = (-1.0, 1.0), phi: Callable | None = None,
               phi_label: str = "1", supersample: int = 8) -> "ContrastField":
        """``m = m0 * chi_K * phi`` with ``K = square x square``.

        ``phi`` must not vanish at the corner ``(square[0], square[0])``.
        """
        a, b = square
        if not (box[0] <= a < b <= box[1]):
            raise ValueError("square must lie inside the box")
        amp = (lambda x, y: m0) if phi is None else (lambda x, y: m0 * phi(x, y))
        if phi is not None and abs(phi(np.array(a), np.array(a))) == 0:
            raise ValueError("phi must be nonzero at the corner")
        return cls._averaged(
            lambda x, y: ((x > a) & (x < b) & (y > a) & (y < b)).astype(float),
            amp, resolution, box, supersample, shape="square", phi=phi_label, corner=(a, a),
        )

    @classmethod
    def zero(cls, resolution: int, box: tuple[float, float] = (-1.0, 1.0)) -> "ContrastField":
        return cls(np.zeros((resolution, resolution)), box, shape="custom")


@dataclass(frozen=True)
class ScatterConfig:
    """Wavenumber and discretization controls for one scattering solve."""

    k: float
    n_dirs: int = 32
    tol: float = 1e-8
    cond_limit: float = 1e10
    whiten_cutoff: float = 1e-3

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if self.n_dirs < 16:
            raise ValueError("need at least 16 directions")

    def with_k(self, k: float) -> "ScatterConfig":
        return ScatterConfig(k, self.n_dirs, self.tol, self.cond_limit, self.whiten_cutoff)

    def directions(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_dirs) / self.n_dirs


# -- Lippmann-Schwinger discretization ----------------------------------------------------

def _log_cell_integral(h: float) -> float:
    # int over [-a, a]^2 of ln|x|, a = h/2
    a = h / 2
    return 4 * a * a * (math.log(a) - 1.5 + math.pi / 4 + math.log(2) / 2)


def green_table(k: float, h: float, size: int) -> np.ndarray:
    """Cell-integrated Green weights ``T[i, j] ~ int_cell G_k`` at offset ``(i h, j h)``.

    Off-diagonal cells use the midpoint rule; the self cell integrates the
    logarithmic singularity exactly.
    """
    a = np.arange(size)
    r = h * np.hypot(a[:, None], a[None, :])
    r[0, 0] = 1.0
    table = 0.25j * hankel1(0, k * r) * h * h
    table[0, 0] = (
        h * h * (0.25j - (math.log(k / 2) + np.euler_gamma) / (2 * math.pi))
        - _log_cell_integral(h) / (2 * math.pi)
    )
    return table


@dataclass
class LSOperator:
    """Dense Nystrom matrix ``A = I + k^2 G diag(m)`` restricted to supp m."""

    matrix: np.ndarray
    support: np.ndarray
    table: np.ndarray
    k: float
    _lu: tuple | None = field(default=None, repr=False)

    def factor(self):
        if self._lu is None:
            self._lu = lu_factor(self.matrix, check_finite=False)
        return self._lu

    def condition(self) -> float:
        if self.matrix.size == 0:
            return 1.0
        lu, _ = self.factor()
        anorm = np.abs(self.matrix).sum(axis=0).max()
        rcond, info = zgecon(lu, anorm, norm="1")
        return math.inf if rcond == 0 else 1.0 / rcond


def _check_resolution(m: ContrastField, cfg: ScatterConfig) -> None:
    if cfg.k * m.h >= 0.5:
        raise ResolutionError(
            f"k h = {cfg.k * m.h:.3f} >= 0.5; use at least {math.ceil(2 * cfg.k * (m.box[1] - m.box[0]))} cells"
        )


def assemble_ls(m: ContrastField, cfg: ScatterConfig) -> LSOperator:
    """Assemble ``(A u)_i = u_i + k^2 sum_j W_ij m_j u_j`` on the support of ``m``."""
    _check_resolution(m, cfg)
    n = m.resolution
    sup = m.support()
    table = green_table(cfg.k, m.h, n)
    I, J = np.divmod(sup, n)
    G = table[np.abs(I[:, None] - I[None, :]), np.abs(J[:, None] - J[None, :])]
    mv = m.values.ravel()[sup]
    A = G * (cfg.k**2 * mv)[None, :]
    A[np.diag_indices_from(A)] += 1.0
    return LSOperator(A, sup, table, cfg.k)


@dataclass(frozen=True)
class ScatterSolution:
    total: np.ndarray
    scattered: np.ndarray
    residual: float


def _convolve_green(table: np.ndarray, density: np.ndarray) -> np.ndarray:
    # sum_j T[|i - j|] density_j for every cell i (block Toeplitz product)
    n = table.shape[0]
    full = np.concatenate([table[:0:-1], table], axis=0)
    full = np.concatenate([full[:, :0:-1], full], axis=1)
    out = fftconvolve(density, full[..., None], mode="full", axes=(0, 1))
    return out[n - 1:2 * n - 1, n - 1:2 * n - 1]


def solve_scatter(A: LSOperator, m: ContrastField, cfg: ScatterConfig,
                  v0grid: np.ndarray) -> ScatterSolution:
    """Total and scattered fields on the whole grid for incident ``v0grid``.

    ``v0grid`` is ``(N, N)`` or ``(N, N, r)`` for ``r`` right-hand sides.
    """
    if abs(A.k - cfg.k) > 1e-14 * cfg.k:
        raise ValueError("operator was assembled for a different k")
    v0 = np.asarray(v0grid, dtype=complex)
    single = v0.ndim == 2
    if single:
        v0 = v0[..., None]
    n = m.resolution
    flat = v0.reshape(n * n, -1)
    sup = A.support
    rhs = flat[sup]
    dens = np.zeros_like(flat)
    if len(sup):
        u_sup = lu_solve(A.factor(), rhs, check_finite=False)
        res = np.linalg.norm(A.matrix @ u_sup - rhs) / max(np.linalg.norm(rhs), 1e-300)
        dens[sup] = m.values.ravel()[sup, None] * u_sup
    else:
        res = 0.0
    if res > cfg.tol:
        raise SolverBreakdown("dense solve lost accuracy", res)
    dens = dens.reshape(n, n, -1)
    scat = -(cfg.k**2) * _convolve_green(A.table, dens)
    total = v0 + scat
    if single:
        return ScatterSolution(total[..., 0], scat[..., 0], float(res))
    return ScatterSolution(total, scat, float(res))


def plane_waves(m: ContrastField, k: float, directions: np.ndarray) -> np.ndarray:
    """``exp(i k d.x)`` for each direction angle; shape ``(N, N, len(directions))``."""
    X, Y = m.mesh()
    d = np.asarray(directions, dtype=float)
    return np.exp(1j * k * (X[..., None] * np.cos(d) + Y[..., None] * np.sin(d)))


def far_field(u_total: np.ndarray, m: ContrastField, cfg: ScatterConfig,
              directions: np.ndarray) -> np.ndarray:
    """``alpha(theta) = C_FAR k^2 sum_j h^2 exp(-ik theta.x_j) m_j u_j``.

    ``u_total`` may carry a trailing axis of right-hand sides.
    """
    X, Y = m.mesh()
    d = np.asarray(directions, dtype=float)
    phase = np.exp(-1j * cfg.k * (np.outer(np.cos(d), X.ravel()) + np.outer(np.sin(d), Y.ravel())))
    n = m.resolution
    u = np.asarray(u_total).reshape(n * n, -1)
    dens = (m.h**2 * m.values.ravel())[:, None] * u
    out = C_FAR * cfg.k**2 * (phase @ dens)
    return out[:, 0] if np.ndim(u_total) == 2 else out


@dataclass(frozen=True)
class FarFieldData:
    """``S[i, j]``: far-field coefficient at ``theta_i`` for incidence ``theta_j``.

    ``born`` is the Born approximation of ``S / C_FAR``, a Hermitian positive
    semidefinite matrix for real non-negative contrast.
    """

    S: np.ndarray
    k: float
    directions: np.ndarray
    born: np.ndarray
    cond: float
    convention: str = "alpha=C_FAR*k^2*int(exp(-ik theta.y) m u), C_FAR=-i/sqrt(8 pi), weights 2pi/M"

    def whitening(self, cutoff: float) -> np.ndarray:
        """Columns ``V_j / sqrt(lambda_j)`` for Born eigenpairs above ``cutoff * lambda_max``."""
        H = (self.born + self.born.conj().T) / 2
        lam, vec = np.linalg.eigh(H)
        if lam.max() <= 0:
            return np.zeros((len(lam), 0), dtype=complex)
        keep = lam >= cutoff * lam.max()
        return vec[:, keep] / np.sqrt(lam[keep])

    def whitened(self, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
        W = self.whitening(cutoff)
        return W.conj().T @ self.S @ W / abs(C_FAR), W


def far_field_operator(m: ContrastField, cfg: ScatterConfig) -> FarFieldData:
    dirs = cfg.directions()
    weight = 2 * np.pi / cfg.n_dirs
    if m.support().size == 0:
        z = np.zeros((cfg.n_dirs, cfg.n_dirs), dtype=complex)
        return FarFieldData(z, cfg.k, dirs, z.copy(), 1.0)
    A = assemble_ls(m, cfg)
    cond = A.condition()
    V = plane_waves(m, cfg.k, dirs)
    if cond > cfg.cond_limit:
        raise SolverBreakdown("condition number above limit", math.nan, cond)
    sol = solve_scatter(A, m, cfg, V)
    S = far_field(sol.total, m, cfg, dirs) * weight
    born = far_field(V, m, cfg, dirs) * weight / C_FAR
    return FarFieldData(S, cfg.k, dirs, born, cond)


def whitened_singular_values(data: FarFieldData, cutoff: float = 1e-3) -> np.ndarray:
    """Singular values of S after Born whitening on the propagating modes.

    Raw singular values of S decay super-exponentially in the angular
    index, so the smallest one says nothing about a kernel.  Whitening by
    the Born operator normalizes each propagating mode to size one in the
    weak-scattering limit while leaving exact kernel vectors in the kernel.
    """
    Sh, _ = data.whitened(cutoff)
    if Sh.size == 0:
        return np.zeros(0)
    return np.linalg.svd(Sh, compute_uv=False)


@dataclass(frozen=True)
class SweepRow:
    k: float
    sigma_min: float
    sigma_max: float
    cond: float
    skipped: bool


def _sweep_point(args) -> SweepRow:
    m, cfg = args
    try:
        data = far_field_operator(m, cfg)
    except SolverBreakdown as exc:
        return SweepRow(cfg.k, math.nan, math.nan, exc.cond, True)
    if not data.S.any():
        return SweepRow(cfg.k, 0.0, 0.0, data.cond, False)
    s = whitened_singular_values(data, cfg.whiten_cutoff)
    return SweepRow(cfg.k, float(s.min()), float(s.max()), data.cond, False)


def sweep_wavenumbers(kmin: float, kmax: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be positive")
    if steps == 1:
        return np.array([kmin])
    return np.round(np.linspace(kmin, kmax, steps), 12)


def min_singular_sweep(m: ContrastField, kmin: float, kmax: float, steps: int,
                       cfg: ScatterConfig, workers: int = 1) -> list[SweepRow]:
    """Whitened ``sigma_min`` and ``sigma_max`` of S at ``steps`` equispaced k.

    Points whose Lippmann-Schwinger matrix has condition number above
    ``cfg.cond_limit`` are reported with ``skipped=True``.
    """
    if kmin <= 0 or kmax < kmin:
        raise ValueError("need 0 < kmin <= kmax")
    ks = sweep_wavenumbers(kmin, kmax, steps)
    _check_resolution(m, cfg.with_k(float(ks.max())))
    tasks = [(m, cfg.with_k(float(k))) for k in ks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        rows = [_sweep_point(t) for t in tasks]
    return sorted(rows, key=lambda r: r.k)


def locate_dip(m: ContrastField, lo: float, hi: float, cfg: ScatterConfig,
               xtol: float = 1e-8) -> tuple[float, float]:
    """Wavenumber in ``[lo, hi]`` minimizing the whitened ``sigma_min``, and that value."""
    def sigma(k):
        data = far_field_operator(m, cfg.with_k(k))
        return float(whitened_singular_values(data, cfg.whiten_cutoff).min())

    res = minimize_scalar(sigma, bounds=(lo, hi), method="bounded", options={"xatol": xtol})
    return float(res.x), float(res.fun)


# -- radial interior transmission oracle -------------------------------------------------

@dataclass(frozen=True)
class ITERecord:
    m_index: int
    k_star: float
    residual: float
    a: float
    n0: float


def _check_radial(a: float, n0: float) -> None:
    if a <= 0 or n0 <= 0 or n0 == 1:
        raise ValueError("need a > 0, n0 > 0 and n0 != 1")


def radial_ite_determinant(m_index: int, k, a: float, n0: float):
    """``D(k) = J_m(k n0 a) k J_m'(k a) - J_m(k a) k n0 J_m'(k n0 a)``.

    A zero means a Bessel mode inside the disk matches both Cauchy data of
    an entire Helmholtz solution at ``r = a``.
    """
    _check_radial(a, n0)
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    j_out, dj_out = _bessel_j_and_derivative(m_index, k * a)
    j_in, dj_in = _bessel_j_and_derivative(m_index, k * n0 * a)
    val = j_in * k * dj_out - j_out * k * n0 * dj_in
    return float(val) if val.ndim == 0 else val


def _bisect(f, lo: float, hi: float, flo: float, xtol: float = 1e-10) -> float:
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def radial_nsk_roots(a: float, n0: float, kmax: float, k_floor: float = 0.05,
                     step: float = 1e-3, m_max: int | None = None) -> list[ITERecord]:
    """All roots of ``D_m`` in ``(k_floor, kmax]`` for ``m <= m_max``.

    The default ``m_max`` is ``ceil(kmax a max(1, n0)) + 2``; beyond that
    both Bessel factors are in their monotone small-argument regime and
    ``D_m`` keeps one sign.  Roots are bracketed on a ``step`` scan and
    bisected to ``1e-10``.  Rows are sorted by ``(k_star, m_index)``.
    """
    _check_radial(a, n0)
    if kmax <= k_floor:
        return []
    if m_max is None:
        m_max = math.ceil(kmax * a * max(1.0, n0)) + 2
    ks = np.arange(k_floor, kmax + step / 2, step)
    ks = ks[ks <= kmax]
    out: list[ITERecord] = []
    for mi in range(m_max + 1):
        vals = radial_ite_determinant(mi, ks, a, n0)
        sign = np.sign(vals)
        hits = np.flatnonzero(sign[:-1] * sign[1:] < 0)
        exact = np.flatnonzero(vals == 0)
        f = lambda k, mi=mi: radial_ite_determinant(mi, k, a, n0)
        roots = {float(ks[i]) for i in exact}
        for i in hits:
            roots.add(_bisect(f, float(ks[i]), float(ks[i + 1]), float(vals[i])))
        for r in sorted(roots):
            out.append(ITERecord(mi, r, abs(f(r)), a, n0))
    return sorted(out, key=lambda r: (r.k_star, r.m_index))


def cauchy_matrix(m_index: int, k: float, a: float, n0: float) -> np.ndarray:
    """Rows ``(J, dJ/dr)`` at ``r = a`` for the inside and outside radial modes."""
    j_out, dj_out = _bessel_j_and_derivative(m_index, k * a)
    j_in, dj_in = _bessel_j_and_derivative(m_index, k * n0 * a)
    return np.array([[float(j_in), k * n0 * float(dj_in)], [float(j_out), k * float(dj_out)]])
