"""
Monte Carlo MSE curves.

A config is resolved into a graph, a family and x(0) with seeds derived from the
master seed, then R replicas run as one batch. x(0) is drawn once and shared by all
replicas, so the curve averages over activation randomness only.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..core import seeding
from ..core.config import EdgeListSpec, ExperimentConfig, ExplicitX0, NormalX0, RggSpec
from ..core.exceptions import AssumptionError, ValidationError
from ..engine import BatchTrace, Mode, run_batch
from ..families import (
    UpdateMatrixSet,
    broadcast_gossip_set,
    bwgossip_failure_set,
    bwgossip_set,
    check_assumptions,
    pushsum_kempe_set,
    random_gossip_set,
)
from ..graph import Graph, from_edge_list, generate_rgg, is_connected


@dataclass
class GraphRecord:
    """How a graph was obtained: the seed finally used and the rejected ones."""

    seed: Optional[int]
    rejected_seeds: List[int] = field(default_factory=list)

    @property
    def resamples(self) -> int:
        return len(self.rejected_seeds)

    def to_dict(self) -> Dict[str, Any]:
        return {"seed": self.seed, "rejected_seeds": self.rejected_seeds, "resamples": self.resamples}


def build_graph(
    spec: Union[RggSpec, EdgeListSpec],
    master_seed: int,
    index: int = 0,
    require_connected: bool = False,
    max_resamples: int = 100,
) -> Tuple[Graph, GraphRecord]:
    """Materialize a graph spec.

    An RGG without an explicit seed takes ``derive_seed(master_seed, GRAPH, index)``.
    With ``require_connected``, disconnected RGG draws are retried with the seed
    incremented by one, at most ``max_resamples`` times.
    """
    if isinstance(spec, EdgeListSpec):
        g = from_edge_list(spec.n, spec.edges)
        if require_connected and not is_connected(g):
            raise ValidationError("edge-list graph is disconnected", {"n": spec.n})
        return g, GraphRecord(seed=None)

    seed = spec.seed if spec.seed is not None else seeding.derive_seed(master_seed, seeding.GRAPH, index)
    record = GraphRecord(seed=seed)
    for _ in range(max_resamples + 1):
        g = generate_rgg(spec.n, spec.r0, seed)
        if not require_connected or is_connected(g):
            record.seed = seed
            return g, record
        logger.warning(f"rgg n={spec.n} r0={spec.r0} seed={seed} is disconnected, resampling")
        record.rejected_seeds.append(seed)
        seed += 1
    raise ValidationError(
        f"no connected rgg after {max_resamples} resamples",
        {"n": spec.n, "r0": spec.r0, "rejected_seeds": record.rejected_seeds},
    )


def build_x0(spec: Union[ExplicitX0, NormalX0], n: int, master_seed: int, index: int = 0) -> np.ndarray:
    """Initial values: the explicit vector, or i.i.d. N(0, 1) draws."""
    if isinstance(spec, ExplicitX0):
        x0 = np.array(spec.values, dtype=float)
        if len(x0) != n:
            raise ValidationError("x0 length does not match n", {"len": len(x0), "n": n})
        return x0
    rng = (
        np.random.default_rng(spec.seed)
        if spec.seed is not None
        else seeding.stream(master_seed, seeding.X0, index)
    )
    return rng.standard_normal(n)


def build_family(
    algorithm: str,
    graph: Optional[Graph] = None,
    n: Optional[int] = None,
    gamma: float = 0.5,
    p_e: Optional[float] = None,
    seed: int = 0,
    require_connected: bool = True,
) -> UpdateMatrixSet:
    """Family of ``algorithm`` on ``graph``.

    Push-sum only needs ``n``: it runs on the complete graph, so any other graph
    is rejected.
    """
    if algorithm == "pushsum":
        if graph is not None and len(graph.edges()) != graph.n * (graph.n - 1) // 2:
            raise ValidationError(
                "pushsum runs on the complete graph; give 'n' or a complete edge list",
                {"n": graph.n, "edges": len(graph.edges())},
            )
        return pushsum_kempe_set(graph.n if graph is not None else int(n))
    if graph is None:
        raise ValidationError(f"{algorithm} needs a graph")
    if algorithm == "bwgossip":
        if p_e:
            return bwgossip_failure_set(
                graph, p_e, seed=seeding.derive_seed(seed, seeding.MOMENTS), require_connected=require_connected
            )
        return bwgossip_set(graph, require_connected=require_connected)
    if p_e:
        raise ValidationError("link failures are only modelled for bwgossip", {"algorithm": algorithm})
    if algorithm == "random_gossip":
        return random_gossip_set(graph, require_connected=require_connected)
    if algorithm == "broadcast_gossip":
        return broadcast_gossip_set(graph, gamma, require_connected=require_connected)
    raise ValidationError(f"unknown algorithm {algorithm!r}")


def require_assumptions(family: UpdateMatrixSet) -> None:
    """Raise ``AssumptionError`` naming the first failing assumption."""
    report = check_assumptions(family)
    if report.failing:
        raise AssumptionError(report.failing[0], details={"family": family.name, "failing": report.failing})


def mse_frame(batch: BatchTrace) -> pd.DataFrame:
    return pd.DataFrame({"t": batch.columns["t"], "mse": batch.mse})


def consensus_bias(final_estimates: np.ndarray, x_ave: float) -> Dict[str, float]:
    """Spread of the final estimates and the distance of their mean to x_ave.

    Accepts one run (N,) or a batch (R, N); batch values are worst-case over replicas
    for the dispersion and per-replica means for the bias.
    """
    est = np.atleast_2d(np.asarray(final_estimates, dtype=float))
    dispersion = np.nanmax(est, axis=1) - np.nanmin(est, axis=1)
    bias = np.abs(np.nanmean(est, axis=1) - x_ave)
    return {
        "dispersion": float(dispersion.max()),
        "bias": float(bias.mean()),
        "max_bias": float(bias.max()),
    }


@dataclass
class MonteCarloResult:
    graph: Optional[Graph]
    graph_record: Optional[GraphRecord]
    family: UpdateMatrixSet
    x0: np.ndarray
    batch: BatchTrace

    @property
    def curve(self) -> pd.DataFrame:
        return mse_frame(self.batch)

    def seeds(self, master_seed: int) -> Dict[str, Any]:
        return {
            "master": master_seed,
            "graph": self.graph_record.to_dict() if self.graph_record else None,
            "replica_streams": f"SeedSequence({master_seed}, spawn_key=({seeding.REPLICA}, r))",
        }


def monte_carlo_mse(config: ExperimentConfig, check_invariants: bool = False) -> MonteCarloResult:
    """Average the squared error of ``config.replicas`` runs, tick by tick.

    Assumptions A1, A2 and B are enforced, except for Broadcast Gossip, which is run
    as the biased baseline it is.
    """
    graph = record = None
    if config.graph is not None:
        graph, record = build_graph(config.graph, config.seed)
    family = build_family(config.algorithm, graph, config.n, config.gamma, config.p_e, config.seed)
    if config.algorithm == "broadcast_gossip":
        logger.warning("broadcast gossip is run without assumption checks (biased baseline)")
    else:
        require_assumptions(family)
    x0 = build_x0(config.x0, family.n, config.seed)
    batch = run_batch(
        family,
        x0,
        replicas=config.replicas,
        mode=Mode(config.mode),
        ticks=config.ticks,
        alpha=config.alpha,
        seed=config.seed,
        trigger=config.trigger,
        diagnostics=config.diagnostics,
        window=config.window,
        check_invariants=check_invariants,
    )
    logger.info(
        f"{family.name}: {config.replicas} replicas x {config.ticks} ticks, "
        f"mse {batch.mse[0]:.3e} -> {batch.mse[-1]:.3e}"
    )
    return MonteCarloResult(graph=graph, graph_record=record, family=family, x0=x0, batch=batch)
