import math

import numpy as np
import pytest

from ess_sense import (
    BdeuHyper,
    Dag,
    Dataset,
    EdgeDecision,
    EmptyDataError,
    approx_log_bf,
    bdeu_graph_score,
    exact_log_bf,
    fig1_curve,
    gamma_ratio_expansion,
    large_ess_edge_preference,
    log_gamma_ratio,
    pair_counts,
    synth_skewed_independent,
)
from ess_sense.bayes_factor import exact_log_bf_table

from conftest import random_dataset

ALPHAS_DEFAULT = (1.0, 10.0, 100.0, 1000.0, 10000.0)


def skew_dataset(z, n=100):
    return synth_skewed_independent(z, n, 2)


class TestExactLogBf:
    def test_hand_value(self):
        d = Dataset.from_records([[0, 0], [1, 1]], [2, 2])
        pc = pair_counts(d, 0, 1)
        assert exact_log_bf(pc, BdeuHyper(4.0)) == pytest.approx(math.log(20 / 16), abs=1e-12)

    def test_no_data_is_zero(self):
        d = Dataset.from_records(np.empty((0, 2), dtype=int), [2, 2])
        assert exact_log_bf(pair_counts(d, 0, 1), BdeuHyper(2.0)) == 0.0

    def test_symmetric_in_pair(self):
        rng = np.random.default_rng(20)
        for _ in range(25):
            d = random_dataset(rng, n_vars=3)
            h = BdeuHyper(float(rng.uniform(0.1, 500)))
            ab = exact_log_bf(pair_counts(d, 0, 1, [2]), h)
            ba = exact_log_bf(pair_counts(d, 1, 0, [2]), h)
            assert ab == ba

    def test_equals_graph_score_difference(self):
        """The four-term value must match scoring the two graphs outright."""
        rng = np.random.default_rng(21)
        for _ in range(60):
            d = random_dataset(rng, n_vars=int(rng.integers(2, 5)))
            n = d.n_vars
            a, b = rng.choice(n, size=2, replace=False)
            others = [j for j in range(n) if j not in (a, b)]
            k = int(rng.integers(0, len(others) + 1))
            cond = tuple(int(x) for x in rng.choice(others, size=k, replace=False)) if k else ()
            h = BdeuHyper(float(rng.uniform(0.1, 100)))

            parent_sets = [()] * n
            parent_sets[int(a)] = cond
            g_minus = Dag(n, parent_sets)
            parent_sets[int(a)] = tuple(sorted(cond + (int(b),)))
            g_plus = Dag(n, parent_sets)

            diff = (
                bdeu_graph_score(d, g_plus, h).total
                - bdeu_graph_score(d, g_minus, h).total
            )
            bf = exact_log_bf(pair_counts(d, int(a), int(b), cond), h)
            assert bf == pytest.approx(diff, abs=1e-9)


class TestGammaRatioExpansion:
    def test_zero_count(self):
        assert gamma_ratio_expansion(0, 5.0) == 0.0

    def test_count_one_exact(self):
        assert gamma_ratio_expansion(1, 7.0) == pytest.approx(math.log(7.0), abs=1e-12)
        assert log_gamma_ratio(1, 7.0) == pytest.approx(math.log(7.0), abs=1e-12)

    def test_error_scale(self):
        err = abs(gamma_ratio_expansion(10, 1000.0) - log_gamma_ratio(10, 1000.0))
        assert err < 50 * 10**2 / 1000.0**2

    def test_error_bounded_quadratically(self):
        """|expansion - exact| <= C count^2 / a^2 with one stable constant."""
        per_a_worst = []
        for a in (1e4, 1e5, 1e6):
            worst = 0.0
            for count in range(2, 101):
                err = abs(gamma_ratio_expansion(count, a) - log_gamma_ratio(count, a))
                worst = max(worst, err * a**2 / count**2)
            per_a_worst.append(worst)
        assert max(per_a_worst) / min(per_a_worst) < 2.0


class TestApproxLogBf:
    def test_uniform_plugin(self):
        pc = pair_counts(skew_dataset(0.5), 0, 1)
        res = approx_log_bf(pc, BdeuHyper(1e4))
        assert res.d_f == 1
        assert res.u == pytest.approx(0.0, abs=1e-12)
        assert res.approx_log_bf == pytest.approx(-0.005, abs=1e-12)

    def test_point_mass_plugin(self):
        pc = pair_counts(skew_dataset(0), 0, 1)
        res = approx_log_bf(pc, BdeuHyper(1e4))
        assert res.u == pytest.approx(1.0, abs=1e-12)
        assert res.approx_log_bf == pytest.approx(0.495, abs=1e-12)

    def test_skewed_plugin(self):
        pc = pair_counts(skew_dataset(0.1), 0, 1)
        res = approx_log_bf(pc, BdeuHyper(1e5))
        assert res.approx_log_bf == pytest.approx(
            100 / 2e5 * (100 * 0.4096 - 1), abs=1e-9
        )
        assert res.approx_log_bf == pytest.approx(0.019980, abs=1e-6)

    def test_empty_data(self):
        d = Dataset.from_records(np.empty((0, 2), dtype=int), [2, 2])
        with pytest.raises(EmptyDataError):
            approx_log_bf(pair_counts(d, 0, 1), BdeuHyper(10.0))

    def test_quadratic_error_decay(self):
        """One decade of ESS shrinks the approximation error ~a hundredfold."""
        for z in (0, 0.1, 0.3, 0.5):
            pc = pair_counts(skew_dataset(z), 0, 1)
            errs = []
            for alpha in (1e4, 1e5):
                res = approx_log_bf(pc, BdeuHyper(alpha))
                errs.append(abs(res.exact_log_bf - res.approx_log_bf))
            assert 0.005 <= errs[1] / errs[0] <= 0.05

    def test_sign_agreement_for_huge_ess(self):
        for z in (0, 0.1, 0.2, 0.3, 0.4, 0.5):
            pc = pair_counts(skew_dataset(z), 0, 1)
            for alpha in (1e4, 1e5, 1e6):
                res = approx_log_bf(pc, BdeuHyper(alpha))
                if abs(res.n * res.u - res.d_f) >= 1.0:
                    assert math.copysign(1, res.exact_log_bf) == math.copysign(
                        1, res.approx_log_bf
                    )


class TestEdgePreference:
    def test_uniform_counts(self):
        pref = large_ess_edge_preference(pair_counts(skew_dataset(0.5), 0, 1))
        assert pref.decision is EdgeDecision.ABSENCE_FAVORED
        assert pref.margin == pytest.approx(-1.0, abs=1e-9)

    def test_point_mass_favors_edge_despite_independence(self):
        pref = large_ess_edge_preference(pair_counts(skew_dataset(0), 0, 1))
        assert pref.decision is EdgeDecision.EDGE_FAVORED
        assert pref.margin == pytest.approx(99.0, abs=1e-9)

    def test_perfect_correlation(self):
        d = Dataset.from_records([[0, 0], [1, 1]] * 50, [2, 2])
        pref = large_ess_edge_preference(pair_counts(d, 0, 1))
        assert pref.decision is EdgeDecision.EDGE_FAVORED

    def test_exact_tie_reports_absence(self):
        """A margin of exactly zero must not favour the edge.

        Counts [[3, 1], [0, 0]] over a declared 2x2 space give u = 1/4 at
        N = 4, so N*u - d_f is exactly 0 in float arithmetic.
        """
        d = Dataset.from_records([[0, 0], [0, 0], [0, 0], [0, 1]], [2, 2])
        pref = large_ess_edge_preference(pair_counts(d, 0, 1))
        assert pref.margin == 0.0
        assert pref.decision is EdgeDecision.ABSENCE_FAVORED


class TestFig1Curve:
    def test_uniform_all_negative(self):
        rows = fig1_curve(100, [0.5], ALPHAS_DEFAULT)
        assert len(rows) == 5
        assert all(r.exact_log_bf < 0 for r in rows)

    def test_point_mass_peaks_at_sample_size(self):
        rows = fig1_curve(100, [0], ALPHAS_DEFAULT)
        best = max(rows, key=lambda r: r.exact_log_bf)
        assert best.alpha == 100

    def test_monotone_in_skew(self):
        zs = [i * 0.05 for i in range(11)]
        rows = fig1_curve(100, zs, (100.0, 1000.0, 10000.0))
        for alpha in (100.0, 1000.0, 10000.0):
            curve = [r.exact_log_bf for r in rows if r.alpha == alpha]
            assert len(curve) == 11
            assert all(a >= b - 1e-12 for a, b in zip(curve, curve[1:]))

    def test_fractional_fallback_matches_dataset_route(self):
        """Where the integer dataset exists the two routes must coincide."""
        for z in (0, 0.1, 0.2, 0.3, 0.4, 0.5):
            d = skew_dataset(z)
            pc = pair_counts(d, 0, 1)
            via_table = exact_log_bf_table(pc.counts, 500.0)
            via_curve = [
                r.exact_log_bf for r in fig1_curve(100, [z], [500.0])
            ][0]
            assert via_curve == via_table

    def test_row_order_is_grid_order(self):
        rows = fig1_curve(100, [0.5, 0], (10.0, 1.0))
        assert [(r.z, r.alpha) for r in rows] == [
            (0.5, 10.0),
            (0.5, 1.0),
            (0.0, 10.0),
            (0.0, 1.0),
        ]
