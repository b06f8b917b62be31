"""
Parameter sweeps: empirical slope against κ over N, the link-failure sweep, the
clock-management sweep and the side-by-side algorithm comparison.

Sweep points are independent; with ``workers > 1`` they run in a process pool.
Rows are assembled in the order of the configured parameter list, never in
completion order.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from ..core import seeding
from ..core.config import (
    ClockSweepConfig,
    ComparisonConfig,
    FailureStudyConfig,
    NormalX0,
    RggSpec,
    SlopeStudyConfig,
)
from ..core.exceptions import SlopeError
from ..core.logging import log_performance
from ..engine import run_batch
from ..families import UpdateMatrixSet, bwgossip_failure_set, bwgossip_set
from ..spectral import kappa
from .monte_carlo import build_family, build_graph, build_x0, consensus_bias, require_assumptions
from .slope import empirical_slope

MIN_TICKS = 200
MAX_TICKS = 20000
# auto horizon: ln(mse) should drop by about this much
TARGET_LOG_DROP = 40.0
# replicas advanced per batch; bounds the per-tick record arrays
REPLICA_CHUNK = 1000


@dataclass
class StudyResult:
    """A study table, the per-point records for its manifest and, for sweeps, the MSE curves."""

    table: pd.DataFrame
    records: Dict[str, Any] = field(default_factory=dict)
    curves: Optional[pd.DataFrame] = None


def auto_ticks(kappa_value: float) -> int:
    """Horizon of roughly 40/κ ticks, clamped to [200, 20000]."""
    if math.isinf(kappa_value) or kappa_value <= 0:
        return MIN_TICKS
    return int(min(max(math.ceil(TARGET_LOG_DROP / kappa_value), MIN_TICKS), MAX_TICKS))


def _map_points(func: Callable, args: Sequence[tuple], workers: int) -> List[Any]:
    if workers <= 1 or len(args) <= 1:
        return [func(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as pool:
        futures = [pool.submit(func, *a) for a in args]
        return [f.result() for f in futures]


def replicated_mse(
    family: UpdateMatrixSet,
    x0: np.ndarray,
    replicas: int,
    ticks: int,
    seed: int,
    alpha: float = 1.0,
    check_invariants: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """MSE curve and final estimates of ``replicas`` runs, advanced ``REPLICA_CHUNK`` at a time.

    Chunk c runs replicas ``c·REPLICA_CHUNK ..``, so the replicas are those of one
    ``run_batch`` call with the same seed.
    """
    if replicas <= REPLICA_CHUNK:
        batch = run_batch(
            family, x0, replicas=replicas, ticks=ticks, alpha=alpha, seed=seed, check_invariants=check_invariants
        )
        return batch.mse, batch.final_estimates
    total = np.zeros(ticks + 1)
    finals = []
    for first in range(0, replicas, REPLICA_CHUNK):
        batch = run_batch(
            family,
            x0,
            replicas=min(REPLICA_CHUNK, replicas - first),
            ticks=ticks,
            alpha=alpha,
            seed=seed,
            check_invariants=check_invariants,
            first_replica=first,
        )
        total += batch.columns["se"].sum(axis=0)
        finals.append(batch.final_estimates)
    return total / replicas, np.concatenate(finals)


def _fit(mse: np.ndarray) -> Dict[str, Any]:
    try:
        fit = empirical_slope(mse)
    except SlopeError as e:
        logger.warning(f"slope fit failed: {e}")
        return {"slope": float("nan"), "r_squared": float("nan"), "t_start": -1, "t_end": -1}
    return {
        "slope": fit.rate,
        "r_squared": fit.r_squared,
        "t_start": fit.fit_window[0],
        "t_end": fit.fit_window[1],
    }


def _curves(ticks: int, columns: Sequence[str], curves: Sequence[np.ndarray]) -> pd.DataFrame:
    table = pd.DataFrame({"t": np.arange(ticks + 1)})
    for name, mse in zip(columns, curves):
        table[name] = mse
    return table


# --------------------------------------------------------------------------- slope vs κ


def _slope_point(config: SlopeStudyConfig, n: int) -> Dict[str, Any]:
    spec = RggSpec(n=n, r0=config.r0)
    graph, record = build_graph(
        spec, config.seed, index=n, require_connected=True, max_resamples=config.max_resamples
    )
    family = build_family(config.algorithm, graph)
    require_assumptions(family)
    report = kappa(family, cross_check=True)
    ticks = config.ticks or auto_ticks(report.kappa)
    row: Dict[str, Any] = {
        "n": n,
        "graph_seed": record.seed,
        "resamples": record.resamples,
        "ticks": ticks,
        "kappa": report.kappa,
        "boyd_kappa": report.boyd_kappa,
        "kappa_gelfand": report.kappa_gelfand,
        "gelfand_agrees": report.gelfand_agrees(),
        "exact": report.exact,
    }
    if report.exact:
        # one-step averaging: the MSE is zero after the first useful tick, no slope to fit
        row.update({"slope": float("inf"), "r_squared": float("nan"), "t_start": -1, "t_end": -1})
    else:
        x0 = build_x0(NormalX0(), n, config.seed, index=n)
        mse, _ = replicated_mse(
            family, x0, config.replicas, ticks, seed=seeding.derive_seed(config.seed, seeding.REPLICA, n)
        )
        row.update(_fit(mse))
    logger.info(f"slope study n={n}: |slope|={row['slope']:.4g} kappa={row['kappa']:.4g}")
    return {"row": row, "graph": record.to_dict(), "spectral": report.to_dict()}


def slope_vs_bound_study(config: SlopeStudyConfig) -> StudyResult:
    """Empirical |slope| of ln(MSE) against κ (and κ′) for RGGs of each N.

    Disconnected graphs are resampled with the seed incremented; the seeds used and
    rejected are part of the records.
    """
    started = time.perf_counter()
    points = _map_points(
        _slope_point, [(config, n) for n in config.n_values], config.workers
    )
    table = pd.DataFrame([p["row"] for p in points])
    records = {str(p["row"]["n"]): {"graph": p["graph"], "spectral": p["spectral"]} for p in points}
    log_performance("slope_vs_bound_study", time.perf_counter() - started, points=len(points))
    return StudyResult(table=table, records=records)


# --------------------------------------------------------------------------- link failures


def p_e_column(p_e: float) -> str:
    return f"mse_p{p_e:g}"


def _failure_point(config: FailureStudyConfig, graph, x0: np.ndarray, p_e: float) -> Dict[str, Any]:
    family = bwgossip_failure_set(graph, p_e, seed=seeding.derive_seed(config.seed, seeding.MOMENTS))
    require_assumptions(family)
    report = kappa(family, cross_check=True)
    mse, _ = replicated_mse(family, x0, config.replicas, config.ticks, seed=config.seed)
    row = {
        "p_e": p_e,
        "kappa": report.kappa,
        "kappa_gelfand": report.kappa_gelfand,
        "gelfand_agrees": report.gelfand_agrees(),
        "family_size": family.size if family.size is not None else -1,
        "moments_estimated": family.moments_estimated,
        **_fit(mse),
    }
    logger.info(f"failure study p_e={p_e}: |slope|={row['slope']:.4g} kappa={row['kappa']:.4g}")
    return {"row": row, "spectral": report.to_dict(), "mse": mse}


def failure_study(config: FailureStudyConfig) -> StudyResult:
    """κ of the link-failure family and the empirical |slope| for each p_e on one graph.

    All p_e points share the graph, x(0) and the replica seeds. ``curves`` holds
    ``t`` then ``mse_p{p_e}`` in the configured order.
    """
    started = time.perf_counter()
    graph, record = build_graph(config.graph, config.seed, require_connected=True)
    x0 = build_x0(config.x0, graph.n, config.seed)
    points = _map_points(
        _failure_point, [(config, graph, x0, p) for p in config.p_e_values], config.workers
    )
    table = pd.DataFrame([p["row"] for p in points])
    if table["moments_estimated"].any():
        logger.warning("some failure families use Monte Carlo moments; see moments_estimated")
    records = {
        "graph": record.to_dict(),
        "points": {repr(p["row"]["p_e"]): p["spectral"] for p in points},
    }
    curves = _curves(config.ticks, [p_e_column(p) for p in config.p_e_values], [p["mse"] for p in points])
    log_performance("failure_study", time.perf_counter() - started, points=len(points))
    return StudyResult(table=table, records=records, curves=curves)


# --------------------------------------------------------------------------- clock sweep


def _clock_point(
    config: ClockSweepConfig, family, x0: np.ndarray, alpha: float, check_invariants: bool
) -> np.ndarray:
    mse, _ = replicated_mse(
        family, x0, config.replicas, config.ticks, seed=config.seed, alpha=alpha, check_invariants=check_invariants
    )
    return mse


def alpha_column(alpha: float) -> str:
    return f"mse_alpha{alpha:g}"


def clock_sweep(config: ClockSweepConfig, check_invariants: bool = False) -> StudyResult:
    """BWGossip MSE curves for each clock coefficient α, under identical seeds.

    Columns are ``t`` then ``mse_alpha{α}`` in the configured order. With
    ``check_invariants`` every replica is monitored for mass conservation and
    ∞-norm contraction under the managed clock.
    """
    started = time.perf_counter()
    graph, record = build_graph(config.graph, config.seed, require_connected=True)
    family = bwgossip_set(graph)
    require_assumptions(family)
    x0 = build_x0(config.x0, graph.n, config.seed)
    curves = _map_points(
        _clock_point, [(config, family, x0, a, check_invariants) for a in config.alphas], config.workers
    )
    table = _curves(config.ticks, [alpha_column(a) for a in config.alphas], curves)
    for alpha, mse in zip(config.alphas, curves):
        logger.info(f"clock sweep alpha={alpha:g}: terminal mse {mse[-1]:.3e}")
    log_performance("clock_sweep", time.perf_counter() - started, points=len(curves))
    return StudyResult(table=table, records={"graph": record.to_dict()}, curves=table)


# --------------------------------------------------------------------------- algorithm comparison


def algorithm_column(algorithm: str) -> str:
    return f"mse_{algorithm}"


def _comparison_point(config: ComparisonConfig, graph, x0: np.ndarray, algorithm: str) -> Dict[str, Any]:
    family = build_family(algorithm, graph, gamma=config.gamma)
    if algorithm == "broadcast_gossip":
        logger.warning("broadcast gossip is compared without assumption checks (biased baseline)")
    else:
        require_assumptions(family)
    mse, finals = replicated_mse(family, x0, config.replicas, config.ticks, seed=config.seed)
    return {"mse": mse, "consensus": consensus_bias(finals, float(np.mean(x0)))}


def algorithm_comparison(config: ComparisonConfig) -> StudyResult:
    """MSE curves of several algorithms on one graph, from the same x(0) and replica seeds.

    The table holds ``t`` then ``mse_{algorithm}`` in the configured order; the
    records hold the consensus dispersion and bias of each algorithm's final
    estimates. Broadcast Gossip is expected to settle on a biased consensus.
    """
    started = time.perf_counter()
    graph, record = build_graph(config.graph, config.seed, require_connected=True)
    x0 = build_x0(config.x0, graph.n, config.seed)
    points = _map_points(
        _comparison_point, [(config, graph, x0, a) for a in config.algorithms], config.workers
    )
    table = _curves(config.ticks, [algorithm_column(a) for a in config.algorithms], [p["mse"] for p in points])
    consensus = {a: p["consensus"] for a, p in zip(config.algorithms, points)}
    for algorithm, point in zip(config.algorithms, points):
        logger.info(
            f"comparison {algorithm}: terminal mse {point['mse'][-1]:.3e}, "
            f"bias {point['consensus']['bias']:.3e}"
        )
    log_performance("algorithm_comparison", time.perf_counter() - started, points=len(points))
    return StudyResult(
        table=table,
        records={"graph": record.to_dict(), "x_ave": float(np.mean(x0)), "consensus": consensus},
        curves=table,
    )
