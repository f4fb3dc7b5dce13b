"""Discretized transfer operators, stationary densities and the spreading step."""

import math
from fractions import Fraction

import numpy as np
import pytest

import srblab as sl


def _dense(op):
    M = op.matrix
    return M.toarray() if hasattr(M, "toarray") else np.asarray(M)


class TestGridsAndDensities:
    def test_lebesgue_density_is_flat_with_unit_mass(self):
        grid = sl.Grid1D(0.0, 2.0, 8)
        leb = sl.lebesgue_density(grid)
        np.testing.assert_allclose(leb.values, 0.5)
        assert leb.mass == pytest.approx(1.0)

    def test_density_rejects_negative_values(self):
        grid = sl.Grid1D(0.0, 1.0, 4)
        with pytest.raises(sl.ArgumentError):
            sl.GridDensity(grid=grid, values=np.array([1.0, -0.1, 1.0, 1.0]),
                           provenance="external")

    def test_density_rejects_nonfinite_values(self):
        grid = sl.Grid1D(0.0, 1.0, 4)
        with pytest.raises(sl.ArgumentError):
            sl.GridDensity(grid=grid, values=np.array([1.0, np.nan, 1.0, 1.0]),
                           provenance="external")

    def test_density_rejects_unknown_provenance(self):
        grid = sl.Grid1D(0.0, 1.0, 2)
        with pytest.raises(sl.ArgumentError, match="provenance"):
            sl.GridDensity(grid=grid, values=np.ones(2), provenance="guesswork")

    def test_interval_measure_of_flat_density_is_length_fraction(self):
        leb = sl.lebesgue_density(sl.Grid1D(0.0, 1.0, 16))
        assert sl.interval_measure(leb, 0.25, 0.75) == pytest.approx(0.5)
        # partial bins are prorated
        assert sl.interval_measure(leb, 0.0, 0.03125) == pytest.approx(0.03125)

    def test_normalize_returns_unit_density_and_mass(self):
        grid = sl.Grid1D(0.0, 1.0, 4)
        d = sl.GridDensity(grid=grid, values=np.array([2.0, 2.0, 2.0, 2.0]),
                           provenance="external")
        unit, mass = sl.normalize(d)
        assert mass == pytest.approx(2.0)
        assert unit.mass == pytest.approx(1.0)

    def test_l1_distance_basics(self, mu_tent2, mu_quadratic):
        assert sl.l1_distance(mu_tent2, mu_tent2) == 0.0
        leb = sl.lebesgue_density(mu_quadratic.grid)
        d = sl.l1_distance(mu_quadratic, leb)
        assert d == sl.l1_distance(leb, mu_quadratic)
        assert 0.0 < d < 2.0

    def test_l1_distance_requires_matching_grids(self, mu_tent2, mu_quadratic):
        with pytest.raises(sl.ArgumentError, match="different grids"):
            sl.l1_distance(mu_tent2, mu_quadratic)


@pytest.fixture(scope="module")
def tower_k3():
    F = sl.doubling_first_return_exact(3)
    sl.verify_axioms(F)
    return F


class TestUlamMatrixExactOracles:
    """Transition rows of the k_max=3 exact tower, derived by hand.

    The three cells are [0, 1/4) -> tau 1, slope 2, [1/4, 3/8) -> tau 2,
    slope 4, and [3/8, 7/16) -> tau 3, slope 8; the sliver [7/16, 1/2)
    is censored.  Each branch stretches affinely onto [0, 1/2), so every
    row is computed by splitting a bin across cells and spreading each
    piece uniformly over the image bins.
    """

    def test_four_bins(self, tower_k3):
        op = sl.ulam_matrix(tower_k3, 4)
        want = np.array([
            [1 / 2, 1 / 2, 0, 0],        # bin inside the tau=1 cell
            [0, 0, 1 / 2, 1 / 2],        # second half of the tau=1 cell
            [1 / 4, 1 / 4, 1 / 4, 1 / 4],  # the tau=2 cell, exactly
            [1 / 8, 1 / 8, 1 / 8, 1 / 8],  # half tau=3 cell, half censored
        ])
        np.testing.assert_allclose(_dense(op), want, atol=1e-14)
        np.testing.assert_allclose(op.row_deficit, [0, 0, 0, 0.5], atol=1e-14)
        assert not any(op.flagged)

    def test_two_bins(self, tower_k3):
        op = sl.ulam_matrix(tower_k3, 2)
        want = np.array([[1 / 2, 1 / 2], [3 / 8, 3 / 8]])
        np.testing.assert_allclose(_dense(op), want, atol=1e-14)
        np.testing.assert_allclose(op.row_deficit, [0, 1 / 4], atol=1e-14)

    def test_one_bin(self, tower_k3):
        op = sl.ulam_matrix(tower_k3, 1)
        np.testing.assert_allclose(_dense(op), [[7 / 8]], atol=1e-14)
        np.testing.assert_allclose(op.row_deficit, [1 / 8], atol=1e-14)

    def test_eight_bins_flags_the_censored_bin(self, tower_k3):
        op = sl.ulam_matrix(tower_k3, 8)
        assert [i for i, f in enumerate(op.flagged) if f] == [7]
        assert op.row_deficit[7] == pytest.approx(1.0)

    def test_rows_are_stochastic_up_to_the_deficit(self, tower_k3):
        op = sl.ulam_matrix(tower_k3, 16)
        sums = np.asarray(_dense(op)).sum(axis=1)
        np.testing.assert_allclose(sums + op.row_deficit, 1.0, atol=1e-12)

    def test_bins_must_be_positive(self, tower_k3):
        with pytest.raises(sl.ArgumentError):
            sl.ulam_matrix(tower_k3, 0)


class TestStationaryDensity:
    def test_conditioned_density_on_the_exact_tower(self):
        # live bins carry 16/7 exactly once the censored bin is resolved
        F = sl.doubling_first_return_exact(3)
        sl.verify_axioms(F)
        mu = sl.stationary_density(sl.ulam_matrix(F, 8))
        np.testing.assert_allclose(mu.values[:7], 16 / 7, atol=1e-10)
        assert mu.values[7] == 0.0
        assert mu.mass == pytest.approx(1.0, abs=1e-12)

    def test_flagged_bins_are_recorded_as_excluded(self):
        F = sl.doubling_first_return_exact(3)
        sl.verify_axioms(F)
        mu = sl.stationary_density(sl.ulam_matrix(F, 8))
        assert list(np.asarray(mu.excluded)) == [False] * 7 + [True]

    def test_power_and_cesaro_agree(self, tower_tent2):
        op = sl.ulam_matrix(tower_tent2, 512)
        mu_p = sl.stationary_density(op, mode="power")
        mu_c = sl.stationary_density(op, mode="cesaro")
        assert sl.l1_distance(mu_p, mu_c) < 1e-8

    def test_unknown_mode_is_rejected(self, tower_tent2):
        op = sl.ulam_matrix(tower_tent2, 64)
        with pytest.raises(sl.ArgumentError):
            sl.stationary_density(op, mode="random")

    def test_iteration_budget_is_enforced(self, tower_quadratic):
        op = sl.ulam_matrix(tower_quadratic, 1024)
        with pytest.raises(sl.ConvergenceError):
            sl.stationary_density(op, tol=1e-15, max_iters=2)

    def test_uniform_is_stationary_for_tent2(self, mu_tent2):
        # the tent tower is Lebesgue preserving away from the tiny deficit
        leb = sl.lebesgue_density(mu_tent2.grid)
        assert sl.l1_distance(mu_tent2, leb) < 5e-3


class TestBoundsCheck:
    def test_two_sided_bounds_on_live_bins(self, mu_quadratic):
        bc = sl.density_bounds_check(mu_quadratic)
        assert bc.passed
        assert 0 < bc.minimum <= bc.maximum
        assert bc.maximum / bc.minimum <= bc.ratio_cap

    def test_excluded_bins_do_not_count_as_zeros(self):
        F = sl.doubling_first_return_exact(3)
        sl.verify_axioms(F)
        mu = sl.stationary_density(sl.ulam_matrix(F, 8))
        bc = sl.density_bounds_check(mu)
        assert bc.passed
        assert bc.minimum == pytest.approx(16 / 7)

    def test_cap_violation_fails(self, mu_tent2):
        spiked = np.array(mu_tent2.values, copy=True)
        spiked[0] *= 500.0
        d = sl.GridDensity(grid=mu_tent2.grid, values=spiked, provenance="normalized")
        bc = sl.density_bounds_check(d, ratio_cap=100.0)
        assert not bc.passed
        assert bc.max_index == 0

    def test_external_densities_are_not_checkable(self, mu_tent2):
        d = sl.GridDensity(grid=mu_tent2.grid, values=np.array(mu_tent2.values),
                           provenance="external")
        with pytest.raises(sl.ArgumentError, match="stationary"):
            sl.density_bounds_check(d)


class TestSpreadMeasure:
    def test_spread_mass_equals_kac_mass(self, tent2_map, tower_tent2, mu_tent2):
        spread = sl.spread_measure(tent2_map, tower_tent2, mu_tent2, 4096)
        kac = sl.kac_mass(tower_tent2, mu_tent2)
        assert spread.mass == pytest.approx(kac, abs=1e-10)

    def test_normalized_spread_of_tent2_is_nearly_flat(self, tent2_map, tower_tent2, mu_tent2):
        spread, mass = sl.normalize(sl.spread_measure(tent2_map, tower_tent2, mu_tent2, 4096))
        leb = sl.lebesgue_density(spread.grid)
        assert spread.grid.lo == 0.0 and spread.grid.hi == 1.0
        assert sl.l1_distance(spread, leb) < 2e-3

    def test_spread_covers_the_ambient_domain(self, quadratic_map, tower_quadratic, mu_quadratic):
        spread = sl.spread_measure(quadratic_map, tower_quadratic, mu_quadratic, 2048)
        assert spread.grid.lo == quadratic_map.domain.lo
        assert spread.grid.hi == quadratic_map.domain.hi
        # orbit segments reach both sides of the critical point
        half = spread.grid.n // 2
        assert spread.values[:half].sum() > 0
        assert spread.values[half:].sum() > 0


class TestOneStepUlam:
    def test_doubling_rows_split_evenly(self):
        m = sl.make_map("doubling")
        op = sl.one_step_ulam(m, 2)
        np.testing.assert_allclose(_dense(op), 0.5, atol=1e-12)

    def test_stationary_density_of_doubling_is_uniform(self):
        m = sl.make_map("doubling")
        mu = sl.stationary_density(sl.one_step_ulam(m, 256))
        np.testing.assert_allclose(mu.values, 1.0, atol=1e-9)

    def test_chebyshev_density_moments(self):
        # invariant density of x -> 2 - x^2 is the arcsine law on [-2, 2]
        m = sl.make_map("quadratic", a=2.0)
        mu = sl.stationary_density(sl.one_step_ulam(m, 2048))
        grid = mu.grid
        mids = np.linspace(grid.lo, grid.hi, grid.n, endpoint=False) + \
            (grid.hi - grid.lo) / (2 * grid.n)
        w = (grid.hi - grid.lo) / grid.n
        mean = float(np.sum(mids * mu.values) * w)
        second = float(np.sum(mids ** 2 * mu.values) * w)
        assert abs(mean) < 0.05
        assert second == pytest.approx(2.0, abs=0.05)


class TestStatisticalStability:
    def test_perturbed_family_distance_grows_with_t(self):
        mus = {}
        for t in (0.0, 0.05, 0.1):
            m = sl.make_map("circle_perturbed", t=t)
            mus[t] = sl.stationary_density(sl.one_step_ulam(m, 1024))
        d05 = sl.l1_distance(mus[0.05], mus[0.0])
        d10 = sl.l1_distance(mus[0.1], mus[0.0])
        assert 0.0 < d05 < d10 < 0.01


def _refinement_distance(F, k):
    mu_a = sl.stationary_density(sl.ulam_matrix(F, 2 ** k))
    mu_b = sl.stationary_density(sl.ulam_matrix(F, 2 ** (k + 1)))
    fine = sl.GridDensity(grid=mu_b.grid, values=np.repeat(mu_a.values, 2),
                          provenance="external")
    return sl.l1_distance(fine, mu_b)


class TestGridRefinement:
    """Successive dyadic refinements of the stationary density settle down.

    The comparison starts once the grid resolves the censored region;
    the first resolving scale can bump the distance up before the decay
    sets in.
    """

    def test_doubling_tower(self, tower_doubling12):
        ds = [_refinement_distance(tower_doubling12, k) for k in (11, 12, 13)]
        assert ds[0] > 0
        assert ds[1] <= ds[0] and ds[2] <= ds[1]

    def test_tent2_tower(self, tower_tent2):
        ds = [_refinement_distance(tower_tent2, k) for k in (9, 10, 11)]
        assert ds[1] <= ds[0] + 1e-12 and ds[2] <= ds[1] + 1e-12

    def test_tent17_tower(self, tower_tent17):
        ds = [_refinement_distance(tower_tent17, k) for k in (9, 10, 11)]
        assert ds[1] < ds[0] and ds[2] < ds[1]

    def test_trivial_tower(self, tower_circle3):
        ds = [_refinement_distance(tower_circle3, k) for k in (9, 10, 11)]
        assert max(ds) < 1e-10

    def test_quadratic_tower(self, tower_quadratic):
        ds = [_refinement_distance(tower_quadratic, k) for k in (11, 12, 13)]
        assert ds[1] < ds[0] and ds[2] < ds[1]
