"""First-return towers: construction, verification, Kac averages."""

import math
from fractions import Fraction

import numpy as np
import pytest

import srblab as sl

ROOT2 = float(np.sqrt(2.0))


class TestExactDoublingTower:
    def test_cell_layout(self):
        F = sl.doubling_first_return_exact(4)
        got = [(c.lo, c.hi, c.tau, c.slope) for c in F.cells]
        want = [
            (0.0, 0.25, 1, 2.0),
            (0.25, 0.375, 2, 4.0),
            (0.375, 0.4375, 3, 8.0),
            (0.4375, 0.46875, 4, 16.0),
        ]
        assert got == want

    def test_deficit_is_the_last_dyadic_sliver(self):
        for k in (3, 8, 12):
            F = sl.doubling_first_return_exact(k)
            assert F.deficit == 2.0 ** -(k + 1)

    def test_branches_return_via_the_base_map(self, tower_doubling12, doubling_map):
        F = tower_doubling12
        for c in F.cells[:6]:
            x = 0.5 * (c.lo + c.hi)
            y = x
            for _ in range(c.tau):
                y = doubling_map.f_scalar(y)
            fx, tau = F.apply(x)
            assert tau == c.tau
            assert fx == pytest.approx(y, abs=1e-12)

    def test_verification_constants_are_exact(self, tower_doubling12):
        rep = sl.verify_axioms(tower_doubling12)
        assert rep.kappa == 0.5
        assert rep.distortion == 0.0
        assert rep.markov_defect == 0.0
        assert rep.markov_ok and rep.expansion_ok and rep.distortion_ok
        assert rep.distortion_multiplier == 1.0
        assert rep.comparison_constant == 1.0


class TestNumericTowers:
    def test_tent2_layout(self, tower_tent2):
        # cells accumulate on the preimages of the fixed point near 1/3:
        # odd return times approach from the left, even ones from the right
        F = tower_tent2
        assert len(F.cells) == 20
        assert F.deficit == pytest.approx(2.0 ** -21, rel=1e-6)
        assert sorted(c.tau for c in F.cells) == list(range(1, 21))
        taus = [c.tau for c in F.cells]
        assert taus[:5] == [1, 3, 5, 7, 9]
        assert taus[-3:] == [6, 4, 2]

    def test_tent2_branches_are_onto(self, tower_tent2):
        F = tower_tent2
        for c in F.cells[:8]:
            ends = sorted([F.branch_value(c, c.lo), F.branch_value(c, c.hi)])
            assert ends[0] == pytest.approx(F.delta.lo, abs=1e-9)
            assert ends[1] == pytest.approx(F.delta.hi, abs=1e-9)

    def test_quadratic_tower_constants(self, tower_quadratic):
        F = tower_quadratic
        assert len(F.cells) == 144
        assert F.deficit == pytest.approx(0.08695118601762397, rel=1e-9)
        rep = sl.verify_axioms(F)
        assert rep.kappa == pytest.approx(0.653281482438189, rel=1e-9)
        assert rep.distortion == pytest.approx(0.8534418725846332, rel=1e-9)
        assert rep.markov_defect < 1e-9
        assert rep.markov_ok and rep.expansion_ok and rep.distortion_ok

    def test_comparison_constant_is_derived_from_kappa_and_distortion(self, tower_quadratic):
        rep = sl.verify_axioms(tower_quadratic)
        k1 = math.exp(rep.distortion * rep.diameter * rep.kappa / (1.0 - rep.kappa))
        assert rep.distortion_multiplier == pytest.approx(k1, rel=1e-12)
        assert rep.comparison_constant == pytest.approx(k1 * k1, rel=1e-12)

    def test_tent17_single_onto_branch(self, tower_tent17):
        F = tower_tent17
        assert len(F.cells) == 1
        (c,) = F.cells
        assert c.tau == 1
        assert F.deficit == pytest.approx(0.5 - 0.5 / 1.7)

    def test_trivial_tower_circle3(self, tower_circle3):
        F = tower_circle3
        assert len(F.cells) == 3
        assert all(c.tau == 1 for c in F.cells)
        assert F.deficit == 0.0
        rep = sl.verify_axioms(F)
        assert rep.kappa == pytest.approx(1.0 / 3.0)
        assert rep.distortion == 0.0

    def test_induction_without_full_returns_yields_nothing_to_verify(self, tent17_map):
        # an interval off the natural base never sees an onto return branch
        F = sl.first_return_map(tent17_map, sl.Interval(0.45, 0.46), tau_max=1)
        assert len(F.cells) == 0
        assert F.deficit == pytest.approx(0.01)
        with pytest.raises(sl.VerificationError, match="no cells"):
            sl.verify_axioms(F)

    def test_towers_reject_2d_maps(self, viana_map):
        with pytest.raises(sl.ConstructionError):
            sl.trivial_tower(viana_map)


class TestTowerEvaluation:
    def test_cell_index_matches_cells(self, tower_tent2, tower_doubling12):
        F = tower_tent2
        for i, c in enumerate(F.cells[:10]):
            assert F.cell_index(0.5 * (c.lo + c.hi)) == i
        # the exact doubling deficit is the sliver left of the base's right edge
        assert tower_doubling12.cell_index(0.5 - 2.0 ** -14) is None

    def test_apply_batch_matches_scalar(self, tower_quadratic):
        F = tower_quadratic
        xs = np.array([0.5 * (c.lo + c.hi) for c in F.cells[:20]])
        ys, taus, live = F.apply_batch(xs)
        assert live.all()
        for x, y, t in zip(xs, ys, taus):
            y1, t1 = F.apply(float(x))
            assert y1 == pytest.approx(y, abs=1e-12)
            assert t1 == t

    def test_apply_batch_marks_deficit_points_dead(self, tower_doubling12):
        ys, taus, live = tower_doubling12.apply_batch(np.array([0.1, 0.5 - 2.0 ** -14]))
        assert list(live) == [True, False]

    def test_apply_outside_cells_is_censored(self, tower_doubling12):
        with pytest.raises(sl.ArgumentError, match="deficit"):
            tower_doubling12.apply(0.5 - 2.0 ** -14)

    def test_log_jacobian_batch_matches_slopes(self, tower_doubling12):
        F = tower_doubling12
        for c in F.cells[:6]:
            x = np.array([0.5 * (c.lo + c.hi)])
            lj = F.branch_log_jacobian_batch(c, x)[0]
            assert lj == pytest.approx(math.log(abs(c.slope)), abs=1e-12)

    def test_branch_invert_is_a_right_inverse(self, tower_quadratic):
        F = tower_quadratic
        for c in F.cells[:10]:
            y = 0.3 * F.delta.lo + 0.7 * F.delta.hi
            x = F.branch_invert(c, y)
            assert c.lo - 1e-9 <= x <= c.hi + 1e-9
            fx, _ = F.apply(min(max(x, c.lo), c.hi))
            assert fx == pytest.approx(y, abs=1e-7)


class TestKac:
    def test_kac_mass_of_exact_tower_is_a_rational(self, tower_doubling12, mu_doubling12):
        # uniform quasi-stationary mass on the live cells gives
        # sum (k+1) 2^-(k+1) / (1 - 2^-12)
        want = Fraction(2 * 4096 - 14, 4095)
        got = sl.kac_mass(tower_doubling12, mu_doubling12)
        assert got == pytest.approx(float(want), abs=1e-10)

    def test_kac_breakdown_separates_censored_mass(self, tower_doubling12, mu_doubling12):
        covered, censored = sl.kac_breakdown(tower_doubling12, mu_doubling12)
        assert censored < 1e-10
        assert covered + censored == pytest.approx(
            sl.kac_mass(tower_doubling12, mu_doubling12))

    def test_kac_requires_matching_grid(self, tower_doubling12, mu_quadratic):
        with pytest.raises(sl.ArgumentError):
            sl.kac_mass(tower_doubling12, mu_quadratic)

    def test_kac_requires_unit_mass(self, tower_doubling12, mu_doubling12):
        heavy = sl.GridDensity(grid=mu_doubling12.grid,
                               values=2.0 * mu_doubling12.values,
                               provenance="external")
        with pytest.raises(sl.ArgumentError):
            sl.kac_mass(tower_doubling12, heavy)


class TestReturnTimeDistance:
    def test_identical_towers_are_at_distance_zero(self, tower_tent2):
        assert sl.return_time_l1_distance(tower_tent2, tower_tent2) == 0.0

    def test_truncation_depth_moves_the_return_profile(self, tent2_map, tower_tent2):
        shallow = sl.first_return_map(tent2_map, sl.Interval(0.0, 0.5), tau_max=10)
        d = sl.return_time_l1_distance(tower_tent2, shallow)
        assert 0.0 < d < 0.01


class TestVerificationFailures:
    def test_shrunken_cell_breaks_the_onto_axiom(self, tower_doubling12):
        F = tower_doubling12
        c = F.cells[0]
        bad = sl.Cell(lo=c.lo, hi=c.lo + 0.99 * (c.hi - c.lo), tau=c.tau,
                      orientation=c.orientation, slope=c.slope, intercept=c.intercept)
        mutated = sl.InducedMarkovMap(F.base, F.delta, [bad] + list(F.cells[1:]),
                                      F.tau_max, provenance="exact")
        rep = sl.verify_axioms(mutated)
        assert not rep.markov_ok
        assert rep.defect_cell == 0
        assert rep.markov_defect == pytest.approx(0.005, rel=1e-6)

    def test_overlapping_cells_are_rejected(self, tower_doubling12):
        F = tower_doubling12
        c = F.cells[0]
        wide = sl.Cell(lo=c.lo, hi=c.hi + 0.1, tau=c.tau,
                       orientation=c.orientation, slope=c.slope, intercept=c.intercept)
        with pytest.raises(sl.ConstructionError, match="overlap"):
            sl.InducedMarkovMap(F.base, F.delta, [wide] + list(F.cells[1:]),
                                F.tau_max, provenance="exact")

    def test_unverified_tower_cannot_run_the_quotient_check(self, doubling_map):
        F = sl.doubling_first_return_exact(6)  # fresh, never verified
        mu = sl.stationary_density(sl.ulam_matrix(F, 64))
        with pytest.raises(sl.UnverifiedTowerError):
            sl.lyapunov_quotient_check(doubling_map, F, mu, sample=2, n=100)
