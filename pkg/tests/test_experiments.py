"""
Monte Carlo, slope regression, study and manifest tests.

Tests marked ``slow`` run the studies at the scale used for the reported curves;
deselect them with ``-m "not slow"``.
"""

import math

import numpy as np
import pandas as pd
import pytest

from swgossip import __version__
from swgossip.core.config import (
    ClockSweepConfig,
    ComparisonConfig,
    EdgeListSpec,
    ExperimentConfig,
    ExplicitX0,
    FailureStudyConfig,
    GraphConfig,
    NormalX0,
    RggSpec,
    SlopeStudyConfig,
)
from swgossip.core.exceptions import AssumptionError, SlopeError, ValidationError
from swgossip.engine import run_batch
from swgossip.experiments import (
    algorithm_column,
    algorithm_comparison,
    alpha_column,
    auto_ticks,
    build_family,
    build_graph,
    build_manifest,
    build_x0,
    clock_sweep,
    consensus_bias,
    default_window,
    empirical_slope,
    failure_study,
    monte_carlo_mse,
    p_e_column,
    replicated_mse,
    require_assumptions,
    slope_vs_bound_study,
    write_manifest,
)
from swgossip.experiments import studies
from swgossip.families import broadcast_gossip_set, bwgossip_failure_set, bwgossip_set
from swgossip.graph import complete_graph, from_edge_list, is_connected
from swgossip.spectral import kappa
from swgossip.utils import blob_sha1, read_json, write_csv

CYCLE6 = EdgeListSpec(n=6, edges=[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])


def edge_spec(graph):
    return EdgeListSpec(n=graph.n, edges=graph.edges())


class TestSlope:
    def test_exact_exponential(self):
        t = np.arange(101)
        fit = empirical_slope(np.exp(-0.3 * t))
        assert fit.slope == pytest.approx(-0.3, abs=1e-9)
        assert fit.rate == pytest.approx(0.3, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0)

    def test_scale_does_not_matter(self):
        t = np.arange(200)
        a = empirical_slope(np.exp(-0.05 * t))
        b = empirical_slope(37.0 * np.exp(-0.05 * t))
        assert a.slope == pytest.approx(b.slope, abs=1e-12)
        assert b.intercept == pytest.approx(math.log(37.0), abs=1e-9)

    def test_dataframe_input(self):
        curve = pd.DataFrame({"t": np.arange(0, 50), "mse": np.exp(-0.1 * np.arange(50))})
        fit = empirical_slope(curve, window=(10, 40))
        assert fit.fit_window == (10, 40)
        assert fit.slope == pytest.approx(-0.1, abs=1e-9)

    def test_default_window_skips_transient(self):
        assert default_window(np.exp(-0.1 * np.arange(201))) == (100, 200)

    def test_default_window_stops_at_floor(self):
        # exp(-55) is the last value above 1e-24
        assert default_window(np.exp(-np.arange(101.0))) == (28, 55)

    def test_early_floor_keeps_late_half(self):
        assert default_window(np.exp(-5.0 * np.arange(101))) == (6, 11)

    def test_late_half_never_inside_transient(self):
        mse = np.exp(-0.01 * np.arange(1001))
        mse[300:] = 0.0
        assert default_window(mse) == (200, 299)

    def test_zero_in_window(self):
        mse = np.exp(-0.1 * np.arange(20))
        mse[5] = 0.0
        with pytest.raises(SlopeError):
            empirical_slope(mse, window=(0, 10))

    def test_below_floor_everywhere(self):
        with pytest.raises(SlopeError):
            empirical_slope(np.full(10, 1e-30))

    def test_window_out_of_range(self):
        with pytest.raises(SlopeError):
            empirical_slope(np.ones(10), window=(5, 10))


class TestAutoTicks:
    def test_clamped(self):
        assert auto_ticks(10.0) == 200
        assert auto_ticks(1e-6) == 20000
        assert auto_ticks(0.125) == 320

    def test_exact(self):
        assert auto_ticks(math.inf) == 200


class TestBuilders:
    def test_rgg_seed_recorded(self):
        g, record = build_graph(RggSpec(n=8, r0=2.0, seed=5), master_seed=0)
        assert record.seed == 5
        assert record.resamples == 0
        assert g.n == 8

    def test_resampling_records_rejected_seeds(self):
        g, record = build_graph(RggSpec(n=20, r0=1.0), master_seed=3, require_connected=True, max_resamples=500)
        assert is_connected(g)
        if record.rejected_seeds:
            assert record.seed == record.rejected_seeds[-1] + 1
        assert record.to_dict()["resamples"] == len(record.rejected_seeds)

    def test_resampling_gives_up(self):
        with pytest.raises(ValidationError):
            build_graph(RggSpec(n=30, r0=0.01), master_seed=0, require_connected=True, max_resamples=2)

    def test_disconnected_edge_list(self):
        with pytest.raises(ValidationError):
            build_graph(EdgeListSpec(n=4, edges=[(0, 1), (2, 3)]), 0, require_connected=True)

    def test_x0_deterministic(self):
        a = build_x0(NormalX0(), 5, master_seed=11)
        b = build_x0(NormalX0(), 5, master_seed=11)
        np.testing.assert_array_equal(a, b)

    def test_explicit_x0_length(self):
        with pytest.raises(ValidationError):
            build_x0(ExplicitX0(values=[1.0, 2.0]), 3, 0)

    def test_failures_only_for_bwgossip(self, p3):
        with pytest.raises(ValidationError):
            build_family("random_gossip", p3, p_e=0.1)

    def test_pushsum_without_graph(self):
        assert build_family("pushsum", n=7).n == 7

    def test_pushsum_rejects_incomplete_graph(self, p3):
        with pytest.raises(ValidationError):
            build_family("pushsum", p3)

    def test_pushsum_on_complete_graph(self):
        assert build_family("pushsum", complete_graph(4)).n == 4


class TestMonteCarlo:
    def test_constant_x0_has_zero_error(self):
        config = ExperimentConfig(
            version=1, graph=CYCLE6, x0=ExplicitX0(values=[2.0] * 6), replicas=3, ticks=50
        )
        result = monte_carlo_mse(config)
        assert np.all(result.curve["mse"] == 0.0)

    def test_curve_shape(self):
        config = ExperimentConfig(version=1, graph=CYCLE6, replicas=4, ticks=30, seed=2)
        curve = monte_carlo_mse(config).curve
        assert list(curve.columns) == ["t", "mse"]
        assert len(curve) == 31

    def test_converges(self):
        config = ExperimentConfig(version=1, graph=CYCLE6, replicas=10, ticks=1500, seed=1)
        mse = monte_carlo_mse(config, check_invariants=True).batch.mse
        assert mse[-1] < 1e-10 * mse[0]

    def test_rejects_disconnected(self):
        spec = EdgeListSpec(n=4, edges=[(0, 1), (2, 3)])
        with pytest.raises(ValidationError):
            monte_carlo_mse(ExperimentConfig(version=1, graph=spec, ticks=5))

    def test_reproducible(self):
        config = ExperimentConfig(version=1, graph=CYCLE6, replicas=3, ticks=100, seed=9)
        a = monte_carlo_mse(config).curve
        b = monte_carlo_mse(config).curve
        pd.testing.assert_frame_equal(a, b)

    def test_broadcast_gossip_is_biased(self):
        config = ExperimentConfig(
            version=1, graph=CYCLE6, algorithm="broadcast_gossip", replicas=8, ticks=3000, seed=4
        )
        result = monte_carlo_mse(config)
        stats = consensus_bias(result.batch.final_estimates, float(result.x0.mean()))
        assert stats["dispersion"] < 1e-8
        assert stats["bias"] > 1e-3

    def test_consensus_bias_single_run(self):
        stats = consensus_bias(np.array([1.0, 1.0, 1.0]), 0.5)
        assert stats == {"dispersion": 0.0, "bias": 0.5, "max_bias": 0.5}


class TestStudies:
    def test_exact_pair_row(self):
        config = SlopeStudyConfig(version=1, n_values=[2], algorithm="random_gossip", replicas=2)
        row = slope_vs_bound_study(config).table.iloc[0]
        assert math.isinf(row["kappa"])
        assert math.isinf(row["slope"])
        assert bool(row["exact"])

    def test_slope_study_columns(self):
        config = SlopeStudyConfig(version=1, n_values=[4, 5], replicas=5, ticks=200, seed=3)
        result = slope_vs_bound_study(config)
        assert list(result.table["n"]) == [4, 5]
        for col in ("slope", "kappa", "boyd_kappa", "kappa_gelfand", "gelfand_agrees", "graph_seed"):
            assert col in result.table.columns
        assert set(result.records) == {"4", "5"}
        assert result.table["gelfand_agrees"].all()

    def test_worker_pool_keeps_order(self):
        config = SlopeStudyConfig(version=1, n_values=[5, 3, 4], replicas=3, ticks=150, seed=1)
        serial = slope_vs_bound_study(config).table
        pooled = slope_vs_bound_study(config.model_copy(update={"workers": 3})).table
        pd.testing.assert_frame_equal(serial, pooled)

    def test_failure_study_zero_is_plain(self, connected_rgg):
        config = FailureStudyConfig(
            version=1, graph=edge_spec(connected_rgg), p_e_values=[0.0, 0.2], replicas=3, ticks=300
        )
        table = failure_study(config).table
        assert table["kappa"][0] == pytest.approx(kappa(bwgossip_set(connected_rgg)).kappa, rel=1e-12)
        assert table["kappa"][1] < table["kappa"][0]
        assert not table["moments_estimated"].any()

    def test_clock_sweep_alpha_one_is_plain(self, connected_rgg):
        config = ClockSweepConfig(
            version=1, graph=edge_spec(connected_rgg), alphas=[0.5, 1.0], replicas=4, ticks=200, seed=7
        )
        table = clock_sweep(config).table
        assert list(table.columns) == ["t", "mse_alpha0.5", "mse_alpha1"]
        x0 = build_x0(config.x0, connected_rgg.n, config.seed)
        plain = run_batch(bwgossip_set(connected_rgg), x0, replicas=4, ticks=200, seed=7)
        np.testing.assert_array_equal(table[alpha_column(1.0)].to_numpy(), plain.mse)

    def test_clock_sweep_bytes_reproducible(self, connected_rgg, tmp_path):
        config = ClockSweepConfig(
            version=1, graph=edge_spec(connected_rgg), alphas=[0.0, 1.0], replicas=2, ticks=50, seed=5
        )
        a = write_csv(tmp_path / "a", "sweep.csv", clock_sweep(config).table)
        b = write_csv(tmp_path / "b", "sweep.csv", clock_sweep(config).table)
        assert a.read_bytes() == b.read_bytes()

    def test_clock_sweep_monitors_invariants(self, connected_rgg):
        config = ClockSweepConfig(
            version=1, graph=edge_spec(connected_rgg), alphas=[0.0, 0.5], replicas=20, ticks=300, seed=2
        )
        table = clock_sweep(config, check_invariants=True).table
        for alpha in config.alphas:
            assert table[alpha_column(alpha)].iloc[-1] < table[alpha_column(alpha)].iloc[0]

    def test_failure_curves(self, connected_rgg):
        config = FailureStudyConfig(
            version=1, graph=edge_spec(connected_rgg), p_e_values=[0.0, 0.2], replicas=50, ticks=600, seed=1
        )
        result = failure_study(config)
        curves = result.curves
        assert list(curves.columns) == ["t", "mse_p0", "mse_p0.2"]
        assert len(curves) == 601
        for (_, row), p_e in zip(result.table.iterrows(), config.p_e_values):
            mse = curves[p_e_column(p_e)].to_numpy()
            start, end = int(row["t_start"]), int(row["t_end"])
            assert row["r_squared"] > 0.9
            assert mse[end] < mse[(start + end) // 2] < mse[start]

    def test_chunked_replicas_match_one_batch(self, connected_rgg, monkeypatch):
        family = bwgossip_set(connected_rgg)
        x0 = build_x0(NormalX0(), connected_rgg.n, master_seed=4)
        monkeypatch.setattr(studies, "REPLICA_CHUNK", 3)
        mse, finals = replicated_mse(family, x0, replicas=7, ticks=80, seed=4)
        batch = run_batch(family, x0, replicas=7, ticks=80, seed=4)
        np.testing.assert_allclose(mse, batch.mse, rtol=1e-12, atol=0.0)
        np.testing.assert_allclose(finals, batch.final_estimates, rtol=1e-12)


class TestComparison:
    @pytest.fixture
    def comparison(self):
        config = ComparisonConfig(version=1, graph=CYCLE6, replicas=10, ticks=300, seed=1)
        return algorithm_comparison(config)

    def test_columns(self, comparison):
        assert list(comparison.table.columns) == [
            "t",
            "mse_bwgossip",
            "mse_random_gossip",
            "mse_broadcast_gossip",
        ]
        assert comparison.curves is comparison.table

    def test_bwgossip_matches_simulation(self, comparison):
        plain = monte_carlo_mse(ExperimentConfig(version=1, graph=CYCLE6, replicas=10, ticks=300, seed=1))
        np.testing.assert_array_equal(comparison.table[algorithm_column("bwgossip")].to_numpy(), plain.batch.mse)

    def test_broadcast_gossip_stalls_on_bias(self, comparison):
        bw = comparison.table["mse_bwgossip"].to_numpy()
        bc = comparison.table["mse_broadcast_gossip"].to_numpy()
        assert bw[-1] < 1e-6 * bw[0]
        assert bw[-1] < bw[200]
        assert bc[-1] > 1e-4 * bc[0]
        assert bc[-1] == pytest.approx(bc[200], rel=1e-2)
        consensus = comparison.records["consensus"]
        assert consensus["broadcast_gossip"]["bias"] > 1e-3
        assert consensus["bwgossip"]["bias"] < 1e-4


class TestManifest:
    def test_blob_hash(self, tmp_path):
        path = tmp_path / "hello.txt"
        path.write_bytes(b"hello\n")
        assert blob_sha1(path) == "ce013625030ba8dba906f756967f9e9ca394464a"

    def test_manifest_content(self, tmp_path):
        out = tmp_path / "data.csv"
        out.write_text("t,mse\n0,1\n")
        config = GraphConfig(version=1, graph=RggSpec(n=5, r0=2.0), seed=12)
        manifest = build_manifest("gen-graph", config, {"master": 12}, [out])
        assert manifest["version"] == __version__
        assert manifest["config"]["seed"] == 12
        assert manifest["outputs"] == {"data.csv": blob_sha1(out)}

    def test_written_manifest_is_stable(self, tmp_path):
        out = tmp_path / "data.csv"
        out.write_text("x\n")
        config = GraphConfig(version=1, graph=RggSpec(n=5, r0=2.0))
        first = write_manifest(tmp_path, "gen-graph", config, {"master": 0}, [out]).read_bytes()
        second = write_manifest(tmp_path, "gen-graph", config, {"master": 0}, [out]).read_bytes()
        assert first == second
        assert read_json(tmp_path / "manifest.json")["command"] == "gen-graph"


@pytest.mark.slow
class TestAcceptanceScale:
    @pytest.mark.parametrize("algorithm", ["bwgossip", "random_gossip"])
    def test_convergence_on_rggs(self, algorithm):
        for index in range(10):
            graph, _ = build_graph(RggSpec(n=20, r0=4.0), master_seed=0, index=index, require_connected=True)
            config = ExperimentConfig(
                version=1, graph=edge_spec(graph), algorithm=algorithm, replicas=50, ticks=5000, seed=index
            )
            mse = monte_carlo_mse(config, check_invariants=True).batch.mse
            assert mse[-1] < 1e-12 * mse[0]

    def test_slope_against_kappa(self):
        config = SlopeStudyConfig(version=1, n_values=[4, 8, 12, 16], seed=0, workers=4)
        table = slope_vs_bound_study(config).table
        for _, row in table.iterrows():
            assert row["slope"] >= 0.75 * row["kappa"]
            assert abs(row["slope"] - row["kappa"]) <= 0.3 * row["kappa"]

    def test_managed_clock_not_slower(self):
        graph, _ = build_graph(RggSpec(n=20, r0=4.0), master_seed=2, require_connected=True)
        config = ClockSweepConfig(
            version=1, graph=edge_spec(graph), alphas=[0.5, 1.0], replicas=400, ticks=400, seed=2
        )
        terminal = clock_sweep(config, check_invariants=True).table.iloc[-1]
        assert terminal[alpha_column(0.5)] <= terminal[alpha_column(1.0)]

    def test_random_gossip_beats_boyd(self):
        config = SlopeStudyConfig(version=1, n_values=[4, 8, 12, 16], algorithm="random_gossip", replicas=10)
        table = slope_vs_bound_study(config).table
        finite = table[~table["exact"]]
        assert np.all(finite["kappa"] - finite["boyd_kappa"] >= -1e-9)

    def test_broadcast_bias_at_twenty_nodes(self):
        graph, _ = build_graph(RggSpec(n=20, r0=4.0), master_seed=1, require_connected=True)
        config = ExperimentConfig(
            version=1, graph=edge_spec(graph), algorithm="broadcast_gossip", replicas=20, ticks=5000, seed=1
        )
        result = monte_carlo_mse(config)
        est = result.batch.final_estimates
        spread = est.max(axis=1) - est.min(axis=1)
        bias = np.abs(est.mean(axis=1) - result.x0.mean())
        assert np.all(spread < 1e-8)
        assert np.mean(bias > 1e-3) > 0.5

    def test_link_failures(self):
        config = FailureStudyConfig(
            version=1, graph=RggSpec(n=10, r0=1.0), p_e_values=[0.0, 0.1, 0.2, 0.3], replicas=50, ticks=3000
        )
        table = failure_study(config).table
        assert np.all(np.diff(table["kappa"].to_numpy()) < 0)
        assert np.all(table["slope"] >= 0.7 * table["kappa"])
        graph, _ = build_graph(config.graph, config.seed, require_connected=True)
        plain = bwgossip_set(graph)
        zero = bwgossip_failure_set(graph, 0.0)
        np.testing.assert_array_equal(plain.matrices, zero.matrices)


def test_assumption_error_names_failure():
    with pytest.raises(AssumptionError) as excinfo:
        require_assumptions(broadcast_gossip_set(from_edge_list(3, [(0, 1), (1, 2)])))
    assert excinfo.value.assumption == "A1"
