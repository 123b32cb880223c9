"""Exact enumeration of the serial search: hand-worked fixtures, partition
invariants, and closed-form cross-checks."""

import numpy as np
import pytest

from acqroc.analytic import (
    NonCentralityProfile,
    SearchOrder,
    SearchPolicy,
    cell_pdet,
    cell_pfa,
    global_pdet_code_first,
    global_pdet_doppler_first,
    global_pdet_naive,
)
from acqroc.oracle import CellProbabilityGrid, averaged_detection, stop_distribution


class TestStopDistribution:
    def test_hand_worked_2x2_code_first(self):
        grid = CellProbabilityGrid(
            probs=np.array([[0.5, 0.25], [0.125, 0.0625]]), accepted=frozenset())
        stop, no_stop = stop_distribution(grid, SearchOrder.CODE_PHASE_FIRST)
        # visit order (b0,p0), (b0,p1), (b1,p0), (b1,p1)
        want = np.array([[0.5, 0.125], [0.046875, 0.0205078125]])
        np.testing.assert_allclose(stop, want, rtol=0, atol=0)
        assert no_stop == 0.3076171875

    def test_hand_worked_2x2_doppler_first(self):
        grid = CellProbabilityGrid(
            probs=np.array([[0.5, 0.25], [0.125, 0.0625]]), accepted=frozenset())
        stop, no_stop = stop_distribution(grid, SearchOrder.DOPPLER_FIRST)
        # visit order (b0,p0), (b1,p0), (b0,p1), (b1,p1)
        want = np.array([[0.5, 0.109375], [0.0625, 0.0205078125]])
        np.testing.assert_allclose(stop, want, rtol=0, atol=0)
        assert no_stop == 0.3076171875

    def test_single_cell(self):
        grid = CellProbabilityGrid(probs=np.array([[0.3]]), accepted=frozenset())
        for order in SearchOrder:
            stop, no_stop = stop_distribution(grid, order)
            assert stop[0, 0] == 0.3
            assert no_stop == 0.7

    def test_all_equal_probabilities_are_geometric(self):
        p = 0.2
        grid = CellProbabilityGrid(probs=np.full((3, 4), p), accepted=frozenset())
        stop, no_stop = stop_distribution(grid, SearchOrder.CODE_PHASE_FIRST)
        flat = stop.reshape(-1)
        want = p * (1.0 - p) ** np.arange(12)
        np.testing.assert_allclose(flat, want, rtol=1e-15)
        assert no_stop == pytest.approx((1.0 - p) ** 12, rel=1e-15)

    def test_outcomes_partition_unity(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            k = int(rng.integers(1, 7))
            n = int(rng.integers(1, 9))
            grid = CellProbabilityGrid(probs=rng.random((k, n)), accepted=frozenset())
            for order in SearchOrder:
                stop, no_stop = stop_distribution(grid, order)
                assert abs(stop.sum() + no_stop - 1.0) < 1e-14

    def test_no_stop_ignores_visit_order(self):
        rng = np.random.default_rng(3)
        probs = rng.random((4, 5))
        grid = CellProbabilityGrid(probs=probs, accepted=frozenset())
        _, a = stop_distribution(grid, SearchOrder.CODE_PHASE_FIRST)
        _, b = stop_distribution(grid, SearchOrder.DOPPLER_FIRST)
        shuffled = probs.reshape(-1).copy()
        rng.shuffle(shuffled)
        grid2 = CellProbabilityGrid(probs=shuffled.reshape(4, 5), accepted=frozenset())
        _, c = stop_distribution(grid2, SearchOrder.CODE_PHASE_FIRST)
        assert a == pytest.approx(b, abs=1e-16)
        assert a == pytest.approx(c, rel=1e-13)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            CellProbabilityGrid(probs=np.array([0.5, 0.5]), accepted=frozenset())
        with pytest.raises(ValueError):
            CellProbabilityGrid(probs=np.array([[1.5]]), accepted=frozenset())
        with pytest.raises(ValueError):
            CellProbabilityGrid(probs=np.array([[0.5]]), accepted=frozenset({(1, 0)}))


class TestAveragedDetection:
    def test_hand_worked_single_bin_two_phases(self):
        profile = NonCentralityProfile((12.0,))
        beta = 2.2
        p_sig = cell_pdet(12.0, beta)
        p_fa = cell_pfa(beta)
        # cp = 0: signal cell first; cp = 1: one noise cell must stay quiet
        want = 0.5 * (p_sig + (1.0 - p_fa) * p_sig)
        for order in SearchOrder:
            got = averaged_detection(profile, beta, 1, 2, 0, order)
            assert got == pytest.approx(want, abs=1e-16)

    def test_zero_profile_reduces_to_naive(self):
        # no signal energy anywhere: detection means the first crossing just
        # happens to land on the correct cell
        profile = NonCentralityProfile((0.0,))
        beta, k, n = 1.5, 3, 4
        want = global_pdet_naive(0.0, beta, n, k)
        got = averaged_detection(profile, beta, k, n, 0, SearchOrder.CODE_PHASE_FIRST)
        assert got == pytest.approx(want, rel=1e-13)

    def test_matches_refined_formulas_on_random_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(60):
            k = int(rng.integers(1, 6))
            n = int(rng.integers(1, 7))
            m = int(rng.integers(0, min(k, 3)))
            depth = int(rng.integers(1, 4))
            profile = NonCentralityProfile(tuple(rng.uniform(0.0, 30.0, depth)))
            beta = -np.log(10.0 ** rng.uniform(-6.0, np.log10(0.9)))
            cf = global_pdet_code_first(
                profile, SearchPolicy(SearchOrder.CODE_PHASE_FIRST, m, beta), n, k)
            df = global_pdet_doppler_first(
                profile, SearchPolicy(SearchOrder.DOPPLER_FIRST, m, beta), n, k)
            ocf = averaged_detection(profile, beta, k, n, m, SearchOrder.CODE_PHASE_FIRST)
            odf = averaged_detection(profile, beta, k, n, m, SearchOrder.DOPPLER_FIRST)
            assert abs(cf - ocf) < 1e-12
            assert abs(df - odf) < 1e-12

    def test_detection_grows_with_accept_width(self):
        profile = NonCentralityProfile((15.0, 6.0, 1.0))
        vals = [averaged_detection(profile, 8.0, 5, 6, m, SearchOrder.CODE_PHASE_FIRST)
                for m in range(5)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_rejects_bad_arguments(self):
        profile = NonCentralityProfile((10.0,))
        with pytest.raises(ValueError):
            averaged_detection(profile, 5.0, 0, 3, 0, SearchOrder.CODE_PHASE_FIRST)
        with pytest.raises(ValueError):
            averaged_detection(profile, 5.0, 3, 3, 3, SearchOrder.CODE_PHASE_FIRST)
