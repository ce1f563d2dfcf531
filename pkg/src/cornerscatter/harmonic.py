"""Homogeneous harmonic polynomials and Taylor parts of plane-wave sums."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _exact
from .polyalg import Poly, grlex_key

__all__ = [
    "HarmonicBasis",
    "PlaneWaveSum",
    "AllZeroUpToOrder",
    "monomials",
    "laplacian",
    "is_harmonic",
    "harmonic_dimension",
    "harmonic_basis",
    "taylor_parts",
    "taylor_leading_term",
    "random_plane_wave_sum",
]

TAYLOR_ZERO_RTOL = 1e-12


class AllZeroUpToOrder(ValueError):
    """Every Taylor part up to the requested order vanished numerically."""


def monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree ``degree`` in decreasing grlex order."""
    if degree < 0:
        return []
    out = []

    def rec(prefix, left, slots):
        if slots == 1:
            out.append(tuple(prefix + [left]))
            return
        for a in range(left, -1, -1):
            rec(prefix + [a], left - a, slots - 1)

    rec([], degree, n)
    return out


def laplacian(p: Poly) -> Poly:
    total = Poly.zero(p.n)
    for i in range(p.n):
        total = total + p.diff(i, 2)
    return total


def is_harmonic(p: Poly) -> bool:
    return laplacian(p).is_zero()


def harmonic_dimension(n: int, degree: int) -> int:
    """C(N+n-1, n-1) - C(N+n-3, n-1); all monomials when N < 2."""
    full = math.comb(degree + n - 1, n - 1)
    if degree < 2:
        return full
    return full - math.comb(degree + n - 3, n - 1)


@dataclass(frozen=True)
class HarmonicBasis:
    n: int
    N: int
    elements: tuple[Poly, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i: int) -> Poly:
        return self.elements[i]


def harmonic_basis(n: int, N: int) -> HarmonicBasis:
    """Exact basis of the degree-N harmonic polynomials in n variables.

    Computed as the rational nullspace of the Laplacian restricted to
    degree-N forms.  Each element is scaled to integer coefficients with a
    positive leading (grlex) coefficient.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if N < 0:
        raise ValueError("need N >= 0")
    cols = monomials(n, N)
    if N < 2:
        elements = tuple(Poly.monomial(e) for e in cols)
        return HarmonicBasis(n, N, elements)
    rows_index = {e: r for r, e in enumerate(monomials(n, N - 2))}
    matrix = [[0] * len(cols) for _ in rows_index]
    for j, e in enumerate(cols):
        lap = laplacian(Poly.monomial(e))
        for te, c in lap.items():
            matrix[rows_index[te]][j] = c.re
    elements = []
    for vec in _exact.nullspace(matrix, len(cols)):
        p = Poly(n, {e: v for e, v in zip(cols, vec) if v})
        if p.leading_term()[1].re < 0:
            p = -p
        elements.append(p)
    elements.sort(key=lambda q: grlex_key(q.leading_term()[0]), reverse=True)
    return HarmonicBasis(n, N, tuple(elements))


@dataclass(frozen=True)
class PlaneWaveSum:
    """v(x) = sum_j c_j exp(i k theta_j . x) with unit directions theta_j."""

    k: float
    amplitudes: tuple[complex, ...]
    directions: tuple[tuple[float, ...], ...]
    dim: int = field(init=False)

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("wavenumber must be positive")
        if len(self.amplitudes) != len(self.directions) or not self.directions:
            raise ValueError("need one amplitude per direction")
        dims = {len(d) for d in self.directions}
        if len(dims) != 1:
            raise ValueError("directions must share one dimension")
        for d in self.directions:
            if abs(math.fsum(t * t for t in d) - 1.0) > 1e-14 * 4:
                raise ValueError(f"direction {d} is not a unit vector")
        object.__setattr__(self, "dim", dims.pop())

    @classmethod
    def from_arrays(cls, k, amplitudes, directions) -> "PlaneWaveSum":
        dirs = np.asarray(directions, dtype=float)
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        return cls(
            float(k),
            tuple(complex(a) for a in np.asarray(amplitudes).ravel()),
            tuple(tuple(map(float, d)) for d in dirs),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phase = 1j * self.k * x @ np.asarray(self.directions).T
        return np.exp(phase) @ np.asarray(self.amplitudes)


def taylor_parts(v: PlaneWaveSum, x0: Sequence[float], max_order: int):
    """Homogeneous Taylor parts of ``v`` about ``x0`` for orders 0..max_order.

    Yields ``(order, Poly with complex coefficients, scale)`` where ``scale``
    bounds the size of the individual contributions before cancellation.
    """
    n = v.dim
    if len(x0) != n:
        raise ValueError("expansion point has the wrong dimension")
    weights = [
        c * cmath.exp(1j * v.k * math.fsum(t * x for t, x in zip(th, x0)))
        for c, th in zip(v.amplitudes, v.directions)
    ]
    for d in range(max_order + 1):
        ikd = (1j * v.k) ** d
        terms = {}
        scale = 0.0
        for alpha in monomials(n, d):
            afact = math.prod(math.factorial(a) for a in alpha)
            total = 0j
            for w, th in zip(weights, v.directions):
                contrib = w * ikd * math.prod(t**a for t, a in zip(th, alpha)) / afact
                scale = max(scale, abs(contrib))
                total += contrib
            terms[alpha] = total
        yield d, Poly(n, terms), scale


def taylor_leading_term(v: PlaneWaveSum, x0: Sequence[float], max_order: int) -> Poly:
    """Lowest-order nonzero homogeneous Taylor part of ``v`` at ``x0``.

    A part counts as zero when all its coefficients are below
    ``1e-12`` times the largest single plane-wave contribution to that order.
    Raises :class:`AllZeroUpToOrder` when nothing survives up to ``max_order``.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    for d, part, scale in taylor_parts(v, x0, max_order):
        if scale == 0.0:
            continue
        if part.max_abs_coeff() > TAYLOR_ZERO_RTOL * scale:
            cutoff = TAYLOR_ZERO_RTOL * scale
            return Poly(part.n, {e: c for e, c in part.items() if abs(c) > cutoff})
    raise AllZeroUpToOrder(f"all Taylor parts vanish up to order {max_order}")


def _moment_rows(k: float, directions: np.ndarray, order: int) -> np.ndarray:
    """Rows enforcing that the order-``order`` Taylor part at 0 vanishes."""
    n = directions.shape[1]
    rows = []
    for alpha in monomials(n, order):
        rows.append(np.prod(directions ** np.asarray(alpha), axis=1))
    return np.asarray(rows, dtype=complex)


def random_plane_wave_sum(
    rng: np.random.Generator, n: int, vanish_below: int, n_waves: int | None = None
) -> PlaneWaveSum:
    """Random plane-wave sum whose Taylor parts at 0 vanish below ``vanish_below``.

    Amplitudes are drawn from the null space of the low-order moment
    conditions so the leading term has degree >= ``vanish_below``; this makes
    the harmonicity check of the leading part non-trivial.
    """
    constraints = sum(len(monomials(n, d)) for d in range(vanish_below))
    if n_waves is None:
        n_waves = constraints + 3
    k = float(rng.uniform(0.5, 4.0))
    dirs = rng.normal(size=(n_waves, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if vanish_below == 0:
        amps = rng.normal(size=n_waves) + 1j * rng.normal(size=n_waves)
    else:
        a = np.vstack([_moment_rows(k, dirs, d) for d in range(vanish_below)])
        _, _, vh = np.linalg.svd(a)
        null = vh[a.shape[0]:].conj().T
        coef = rng.normal(size=null.shape[1]) + 1j * rng.normal(size=null.shape[1])
        amps = null @ coef
    return PlaneWaveSum.from_arrays(k, amps, dirs)
