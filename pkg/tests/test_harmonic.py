import math

import numpy as np
import pytest

from cornerscatter import _exact
from cornerscatter.harmonic import (
    AllZeroUpToOrder,
    PlaneWaveSum,
    harmonic_basis,
    harmonic_dimension,
    laplacian,
    monomials,
    random_plane_wave_sum,
    taylor_leading_term,
)
from cornerscatter.polyalg import Poly


def test_laplacian_examples():
    x1, x2 = Poly.variables(2)
    assert laplacian(x1**2 - x2**2).is_zero()
    assert laplacian(x1**2 + x2**2) == 4
    assert laplacian(x1**3) == 6 * x1


def test_basis_examples():
    b = harmonic_basis(2, 2)
    x1, x2 = Poly.variables(2)
    assert set(b) == {x1**2 - x2**2, x1 * x2}
    assert len(harmonic_basis(3, 2)) == 5
    assert list(harmonic_basis(2, 0)) == [Poly.constant(2, 1)]


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("N", range(9))
def test_basis_invariants(n, N):
    if n == 4 and N > 6:
        pytest.skip("slow and adds nothing beyond N=6 for n=4")
    basis = harmonic_basis(n, N)
    expected = math.comb(N + n - 1, n - 1) - (math.comb(N + n - 3, n - 1) if N >= 2 else 0)
    assert len(basis) == harmonic_dimension(n, N) == expected
    cols = monomials(n, N)
    rows = []
    for p in basis:
        assert p.is_homogeneous() and p.degree() == N
        assert laplacian(p).is_zero()
        rows.append([p.coeff(e).re for e in cols])
    assert _exact.rank(rows) == len(basis)


def test_taylor_single_wave():
    v = PlaneWaveSum.from_arrays(2.0, [1.0], [[0.6, 0.8]])
    assert taylor_leading_term(v, (0.0, 0.0), 4) == Poly.constant(2, 1 + 0j)


def test_taylor_odd_combination():
    k = 1.7
    v = PlaneWaveSum.from_arrays(k, [1, -1], [[1, 0], [-1, 0]])
    lead = taylor_leading_term(v, (0.0, 0.0), 4)
    assert lead.degree() == 1
    assert lead.coeff((1, 0)) == pytest.approx(2j * k, rel=1e-14)
    assert abs(lead.coeff((0, 1))) == 0


def test_taylor_four_wave_saddle():
    # 2cos(k x1) - 2cos(k x2) = k^2 (x2^2 - x1^2) + O(|x|^4)
    k = 1.3
    v = PlaneWaveSum.from_arrays(k, [1, 1, -1, -1], [[1, 0], [-1, 0], [0, 1], [0, -1]])
    lead = taylor_leading_term(v, (0.0, 0.0), 6)
    assert lead.degree() == 2
    assert lead.coeff((0, 2)) == pytest.approx(k**2, rel=1e-12)
    assert lead.coeff((2, 0)) == pytest.approx(-(k**2), rel=1e-12)
    assert len(lead) == 2


def test_taylor_matches_function_values():
    rng = np.random.default_rng(3)
    v = random_plane_wave_sum(rng, 2, 2)
    lead = taylor_leading_term(v, (0.0, 0.0), 6)
    x = np.array([[1e-3, -2e-3]])
    ratio = v(x)[0] / lead.evaluate(tuple(x[0]))
    assert ratio == pytest.approx(1.0, abs=5e-3)


def test_taylor_all_zero():
    v = PlaneWaveSum.from_arrays(1.0, [1, -1], [[1, 0], [1, 0]])
    with pytest.raises(AllZeroUpToOrder):
        taylor_leading_term(v, (0.3, 0.1), 3)


def test_plane_wave_rejects_non_unit():
    with pytest.raises(ValueError):
        PlaneWaveSum(1.0, (1.0,), ((1.0, 1.0),))


@pytest.mark.parametrize("seed", range(20))
def test_leading_term_harmonic_random(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 2
    v = random_plane_wave_sum(rng, n, vanish_below=seed % 4)
    x0 = rng.normal(size=n) * 0.0
    lead = taylor_leading_term(v, x0, 8)
    assert lead.degree() >= seed % 4
    lap = laplacian(lead)
    assert lap.max_abs_coeff() < 1e-9 * lead.max_abs_coeff()
