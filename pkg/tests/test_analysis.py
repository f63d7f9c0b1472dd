import math

import numpy as np
import pytest

from socialoverlay.analysis import (
    CSV_HEADER,
    ExperimentConfig,
    ResultRow,
    connectivity_check,
    derive_seed,
    estimate_greedy_path_probability,
    estimate_inward_links,
    estimate_link_length_tail,
    fit_scaling,
    greedy_path_exists,
    greedy_paths,
    halving_comparison,
    inward_link_trend,
    label1_degree,
    link_tail_analytic,
    r_min,
    run_experiment,
    theoretical_bounds,
)
from socialoverlay.graph_model import (
    LONG_RANGE,
    SHORT_RANGE,
    GraphParams,
    OverlayGraph,
    ParameterError,
    build_graph,
    calibrate_gamma,
)
from socialoverlay.routing import route_many
from socialoverlay.stats import mean_ci95, wilson_interval

from conftest import greedy_oracle, quiet_params, random_small_graph, ring_graph


class TestBounds:
    def test_alpha_2_5(self):
        b = theoretical_bounds(2.5)
        assert b.delta == pytest.approx(0.9, abs=1e-12)
        assert b.non_exponent == pytest.approx(1.35, abs=1e-12)
        assert b.nbo_upper_exponent == pytest.approx(1.5, abs=1e-12)
        assert b.k_min == pytest.approx(0.5, abs=1e-12)
        assert b.r_min_star == b.delta

    @pytest.mark.parametrize("alpha", [2.0, 3.0, 1.5, 3.2])
    def test_domain(self, alpha):
        with pytest.raises(ParameterError):
            theoretical_bounds(alpha)

    def test_limits(self):
        for a in (2 + 1e-9, 3 - 1e-9):
            assert theoretical_bounds(a).delta == pytest.approx(1.0, abs=1e-8)

    def test_grid(self):
        for a in np.linspace(2.001, 2.999, 500):
            b = theoretical_bounds(a)
            assert 0 < b.delta <= 1
            assert b.non_exponent <= b.nbo_upper_exponent
            assert b.k_min == pytest.approx(a - 2)

    def test_r_min(self):
        n = 2**20
        expected = math.log(1.5 ** (-1 / 2.5)) / math.log(math.log(n)) + 0.9
        assert r_min(2.5, n) == pytest.approx(expected, rel=1e-12)
        # the correction term vanishes slowly as n grows
        assert r_min(2.5, 2**10) < r_min(2.5, 2**40) < 0.9


class TestGreedyPath:
    def test_against_enumeration(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(1000):
            n = int(rng.integers(3, 13))
            g = random_small_graph(rng, n, p=float(rng.uniform(0.1, 0.5)))
            adj = [g.neighbors(v).tolist() for v in range(n)]
            w, v = rng.choice(n, size=2, replace=False)
            assert greedy_path_exists(g, int(w), int(v)) == greedy_oracle(adj, n, int(w), int(v))
            checked += 1
        assert checked == 1000

    def test_adjacent(self):
        g = OverlayGraph.from_edges(10, [(2, 7)])
        assert greedy_path_exists(g, 2, 7) and greedy_path_exists(g, 7, 2)

    def test_ring(self):
        g = ring_graph(30)
        ws = np.arange(30)
        assert greedy_paths(g, ws, (ws + 11) % 30).all()

    def test_same_node(self):
        with pytest.raises(ValueError):
            greedy_path_exists(ring_graph(5), 2, 2)

    def test_threshold_too_large(self):
        with pytest.raises(ParameterError):
            estimate_greedy_path_probability(GraphParams(n=256, c=2, alpha=2.5), distance_threshold=128)

    def test_estimate_report(self):
        rep = estimate_greedy_path_probability(GraphParams(n=1024, c=2, alpha=2.5, seed=4), trials=300)
        assert rep.samples == 300
        assert rep.extra["distance_threshold"] == round(4 * math.log(1024))
        assert rep.ci_low <= rep.estimate <= rep.ci_high
        assert rep.estimate > 0.8


class TestInward:
    @staticmethod
    def _graph():
        ring = [(v, (v + 1) % 16) for v in range(16)]
        long = [(8, 1), (5, 0), (3, 15), (10, 12)]
        kinds = [SHORT_RANGE] * len(ring) + [LONG_RANGE] * len(long)
        return OverlayGraph.from_edges(16, ring + long, edge_kinds=kinds)

    def test_hand_built(self):
        # outer radius is 4: node 8 reaches 1 (d=1); 5 reaches 0 (d=0); 3 is too close; 10-12 stays far
        g = self._graph()
        assert estimate_inward_links(g, 0, 1) == 1
        assert estimate_inward_links(g, 0, 2) == 2
        assert estimate_inward_links(g, 0, 3) == 2

    def test_short_range_ignored(self):
        g = OverlayGraph.from_edges(16, [(8, 1)], edge_kinds=[SHORT_RANGE])
        assert estimate_inward_links(g, 0, 3) == 0

    def test_d_zero(self):
        assert estimate_inward_links(self._graph(), 0, 0) == 0

    def test_d_too_large(self):
        with pytest.raises(ParameterError):
            estimate_inward_links(self._graph(), 0, 4)

    def test_trend(self):
        rep = inward_link_trend(GraphParams(n=4096, c=1, alpha=2.5, seed=1), radii=(4, 8, 16, 32), seeds=10)
        assert rep.estimate > 0.5 and rep.extra["p_value"] < 0.01
        means = list(rep.extra["mean_by_radius"].values())
        assert means == sorted(means)


class TestLinkTail:
    def test_matches_analytic(self):
        p = GraphParams(n=4096, c=1, alpha=2.5, seed=2)
        rep = estimate_link_length_tail(p, trials=5, min_edges=20000)
        assert rep.samples >= 20000
        assert abs(rep.estimate - rep.extra["analytic"]) < 3 * rep.half_width + 1e-3

    def test_analytic_monotone(self):
        gamma = calibrate_gamma(1024, 2.5, 10)
        vals = [link_tail_analytic(1024, 2.5, 10, gamma, th) for th in (1, 10, 64, 200, 512)]
        assert vals[0] == pytest.approx(1.0)
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestStats:
    def test_wilson(self):
        lo, hi = wilson_interval(0, 50)
        assert lo == 0.0 and 0 < hi < 0.1
        lo, hi = wilson_interval(50, 50)
        assert hi == 1.0 and lo > 0.9
        assert all(math.isnan(x) for x in wilson_interval(0, 0))

    def test_mean_ci_small_sample_uses_t(self):
        _, h = mean_ci95([1.0, 2.0, 3.0])
        assert h == pytest.approx(4.302652729911275 * 1.0 / math.sqrt(3), rel=1e-9)

    def test_ci_shrinks_with_samples(self):
        p = GraphParams(n=1024, c=1, alpha=2.5, seed=9)
        small = label1_degree(p, samples=2000)
        large = label1_degree(p, samples=4000)
        assert 1.2 <= small.half_width / large.half_width <= 1.7


def test_label1_degree_is_calibrated():
    rep = label1_degree(GraphParams(n=2048, c=1, alpha=2.4, seed=3), samples=5000)
    assert rep.extra["calibration_residual"] < 1e-8
    assert abs(rep.estimate - 1.0) < 4 * rep.extra["standard_error"]


class TestConnectivity:
    def test_ring_is_connected(self):
        assert connectivity_check(build_graph(quiet_params(n=64, c=1, alpha=2.5, seed=0))).connected

    def test_isolated_node(self):
        rep = connectivity_check(OverlayGraph.from_edges(5, [(0, 1), (1, 2), (2, 3)]))
        assert not rep.connected and rep.component_sizes == [4, 1]


class TestScalingFit:
    @staticmethod
    def _rows(fn, algo="nbo"):
        return [
            ResultRow(n, 1, 2.5, 10, algo, "poisson", 100, 1.0, fn(n), 0.1, fn(n), 0.0)
            for n in (2**10, 2**12, 2**14, 2**16)
        ]

    def test_polylog_square(self):
        fit = fit_scaling(self._rows(lambda n: math.log(n) ** 2))["nbo"]
        assert fit.slope == pytest.approx(2.0, abs=1e-6)

    def test_constant(self):
        fit = fit_scaling(self._rows(lambda n: 7.0))["nbo"]
        assert fit.slope == pytest.approx(0.0, abs=1e-9)

    def test_needs_three_points(self):
        with pytest.raises(ParameterError):
            fit_scaling(self._rows(lambda n: 3.0)[:2])

    def test_unknown_model(self):
        with pytest.raises(ParameterError):
            fit_scaling(self._rows(lambda n: 3.0), model="power")


class TestExperiment:
    def _config(self, **kw):
        base = dict(n_values=[256, 512], c_values=[1, 2], alpha_values=[2.5], algorithms=["nbo", "non", "greedy"],
                    graphs_per_cell=2, pairs_per_graph=30, base_seed=11)
        base.update(kw)
        return ExperimentConfig(**base)

    def test_deterministic(self):
        a, b = run_experiment(self._config()), run_experiment(self._config())
        assert a.to_csv() == b.to_csv()
        assert a.to_csv() != run_experiment(self._config(base_seed=12)).to_csv()

    def test_paired_queries(self):
        res = run_experiment(self._config())
        for ci in range(4):
            ref = res.audit[(ci, "nbo")]
            assert np.array_equal(ref, res.audit[(ci, "non")])
            assert np.array_equal(ref, res.audit[(ci, "greedy")])
            assert ref.shape[0] == res.rows[3 * ci].trials

    def test_seed_derivation(self):
        res = run_experiment(self._config())
        assert int(res.audit[(0, "nbo")][0, 0]) == derive_seed(11, 0, 0)

    def test_csv(self):
        text = run_experiment(self._config()).to_csv()
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 1 + 4 * 3
        assert text.endswith("\n")

    def test_backtracking_always_succeeds(self):
        res = run_experiment(self._config())
        for r in res.rows:
            if r.algorithm != "greedy":
                assert r.success_rate == 1.0 and r.aborted == 0
                assert r.mean_hops == pytest.approx(r.mean_forward + r.mean_backtrack)

    def test_greedy_on_ring_only(self):
        # greedy cannot get stuck on a bare ring
        g = ring_graph(64)
        s = np.arange(64)
        b = route_many(g, s, (s + 20) % 64, "greedy")
        assert b.success.all() and (b.total_hops == 20).all()

    def test_empty_algorithms(self):
        with pytest.raises(ParameterError):
            self._config(algorithms=[])

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"n_values": [64], "c_values": [1], "alpha_values": [2.5],
                                        "algorithms": ["nbo"], "bogus": 1})

    def test_roundtrip_config(self):
        cfg = self._config()
        assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


@pytest.mark.slow
def test_halving_non_exceeds_nbo():
    rep = halving_comparison(GraphParams(n=2**16, c=1, alpha=2.5, seed=5), pairs=200)
    assert rep.extra["non_frequency"] > rep.extra["nbo_frequency"]
