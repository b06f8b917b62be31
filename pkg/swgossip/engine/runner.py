"""
Sum-weight gossip runs.

Replicas of one configuration advance together: the state of R replicas is a
(R, 2, N) array (sums and weights) multiplied by a (R, N, N) stack of update
matrices each tick. Every replica draws from its own stream
``SeedSequence(seed, spawn_key=(REPLICA, r))``, so replica r is the same whatever
the batch size.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from ..core import seeding
from ..core.config import get_settings
from ..core.exceptions import InvariantViolationError, ValidationError
from ..core.logging import log_performance
from ..families import FamilyKind, UpdateMatrixSet, b2_window_length, check_assumptions
from ..linalg import col_sum_deviation
from .clock import pick_broadcasters
from .diagnostics import WindowDiagnostics, WindowTracker, psi_diagnostics
from .state import Mode, as_mode, init_state

BASE_COLUMNS = ["t", "se", "inf_err", "sum_s", "sum_w", "min_w"]
PSI_COLUMNS = ["psi1", "psi2"]

# tolerances of the invariant monitor
MASS_RTOL = 1e-9
CONTRACTION_RTOL = 1e-9
CONTRACTION_ATOL = 1e-12


@dataclass
class Trace:
    """Per-tick records of one run; every column has length ticks + 1."""

    columns: Dict[str, np.ndarray]
    mode: Mode
    target: float
    final_estimates: np.ndarray = field(repr=False)
    windows: Optional[WindowDiagnostics] = None

    def __len__(self) -> int:
        return len(self.columns["t"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def to_frame(self) -> pd.DataFrame:
        names = BASE_COLUMNS + [c for c in PSI_COLUMNS if c in self.columns]
        return pd.DataFrame({name: self.columns[name] for name in names})

    def to_csv(self, path: Union[str, Path]) -> Path:
        """Write ``t,se,inf_err,sum_s,sum_w,min_w[,psi1,psi2]`` with 17 significant digits."""
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        return path


@dataclass
class BatchTrace:
    """Records of R replicas; every column has shape (R, ticks + 1)."""

    columns: Dict[str, np.ndarray]
    mode: Mode
    target: float
    final_estimates: np.ndarray = field(repr=False)
    windows: Optional[List[WindowDiagnostics]] = None

    @property
    def replicas(self) -> int:
        return self.columns["se"].shape[0]

    @property
    def mse(self) -> np.ndarray:
        """Squared error averaged over replicas."""
        return self.columns["se"].mean(axis=0)

    def replica(self, r: int) -> Trace:
        cols = {name: (values if name == "t" else values[r]) for name, values in self.columns.items()}
        return Trace(
            columns=cols,
            mode=self.mode,
            target=self.target,
            final_estimates=self.final_estimates[r],
            windows=self.windows[r] if self.windows else None,
        )


class _MatrixDrawer:
    """Presampled randomness and per-tick matrix selection for a family."""

    def __init__(
        self, family: UpdateMatrixSet, alpha: float, seed: int, replicas: int, ticks: int, first_replica: int = 0
    ):
        self.family = family
        self.alpha = alpha
        self.indexed = family.broadcaster_indexed
        streams = seeding.replica_streams(seed, replicas, first_replica)
        # the clock uniforms are always drawn so that alpha never shifts the other draws
        self.u_clock = np.empty((replicas, ticks))
        self.u_pick = np.empty((replicas, ticks))
        self.draws = None
        if family.kind is FamilyKind.EXPLICIT:
            for r, rng in enumerate(streams):
                self.u_clock[r] = rng.random(ticks)
                self.u_pick[r] = rng.random(ticks)
            self._prepare_explicit()
        else:
            draws = []
            for r, rng in enumerate(streams):
                self.u_clock[r] = rng.random(ticks)
                draws.append(family.sampler.draws(rng, ticks))
            self.draws = np.stack(draws) if draws else None

    def _prepare_explicit(self) -> None:
        family = self.family
        if not self.indexed:
            cum = np.cumsum(family.probs)
            cum[-1] = 1.0
            self.cumprobs = cum
            return
        b = family.broadcasters
        starts = np.searchsorted(b, np.arange(family.n), side="left")
        ends = np.searchsorted(b, np.arange(family.n), side="right")
        keys = np.empty(len(b))
        for i in range(family.n):
            group = family.probs[starts[i] : ends[i]]
            within = np.cumsum(group) / group.sum()
            within[-1] = 1.0
            keys[starts[i] : ends[i]] = i + within
        self.keys = keys
        self.group_end = ends

    def matrices(self, t: int, weights: np.ndarray) -> np.ndarray:
        """Update matrices of tick ``t`` (0-based) for all replicas, given current weights."""
        family = self.family
        broadcasters = pick_broadcasters(weights, self.alpha, self.u_clock[:, t]) if self.indexed else None
        if family.kind is FamilyKind.EXPLICIT:
            if self.indexed:
                idx = np.searchsorted(self.keys, broadcasters + self.u_pick[:, t], side="right")
                idx = np.minimum(idx, self.group_end[broadcasters] - 1)
            else:
                idx = np.searchsorted(self.cumprobs, self.u_pick[:, t], side="right")
                idx = np.minimum(idx, len(self.cumprobs) - 1)
            return family.matrices[idx]
        sampler = family.sampler
        if self.indexed:
            return np.stack([sampler.build(d[t], b) for d, b in zip(self.draws, broadcasters)])
        return np.stack([sampler.build(d[t]) for d in self.draws])


def _validate(family: UpdateMatrixSet, mode: Mode, alpha: float, ticks: int) -> None:
    if ticks < 0:
        raise ValidationError("ticks must be >= 0", {"ticks": ticks})
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError("alpha must lie in [0, 1]", {"alpha": alpha})
    if mode is Mode.SINGLE_VARIATE:
        if family.kind is not FamilyKind.EXPLICIT:
            raise ValidationError("single-variate mode needs an explicit doubly stochastic family")
        if col_sum_deviation(family.matrices) > get_settings().stochastic_tol:
            raise ValidationError("single-variate mode needs doubly stochastic update matrices")


def run_batch(
    family: UpdateMatrixSet,
    x0,
    replicas: int = 1,
    mode: Union[Mode, str] = Mode.AVERAGE,
    ticks: int = 1000,
    alpha: float = 1.0,
    seed: int = 0,
    trigger: Optional[int] = None,
    diagnostics: bool = False,
    window: Optional[int] = None,
    check_invariants: bool = False,
    first_replica: int = 0,
) -> BatchTrace:
    """Run ``replicas`` independent sum-weight gossip processes from the same x(0).

    Args:
        family: Update-matrix family; assumption checks are the caller's business
        x0: Initial values, length N
        replicas: Number of independent replicas R
        mode: average, sum or single_variate
        ticks: Horizon T; the trace holds T + 1 records
        alpha: Clock coefficient, used by broadcaster-indexed families
        seed: Master seed
        trigger: Trigger node in sum mode
        diagnostics: Record Ψ1/Ψ2 and window statistics
        window: Window length L (default: B2 witness length)
        check_invariants: Raise at the first tick breaking mass conservation or
            ∞-norm contraction
        first_replica: Index of the first replica stream; a batch of R replicas
            starting at r0 reproduces replicas r0 .. r0 + R - 1 of a larger batch

    Returns:
        The batch trace
    """
    mode = as_mode(mode)
    _validate(family, mode, alpha, ticks)
    if replicas < 1 or first_replica < 0:
        raise ValidationError(
            "replicas must be >= 1 and first_replica >= 0", {"replicas": replicas, "first_replica": first_replica}
        )
    state0 = init_state(x0, mode, trigger)
    n = family.n
    if state0.n != n:
        raise ValidationError("x0 length does not match the family", {"len": state0.n, "n": n})

    started = time.perf_counter()
    x0 = state0.s
    target = float(x0.sum()) if mode is Mode.SUM else float(x0.mean())
    state = np.repeat(np.stack([state0.s, state0.w])[None], replicas, axis=0)
    drawer = _MatrixDrawer(family, alpha, seed, replicas, ticks, first_replica)

    psi_on = diagnostics and mode is not Mode.SUM
    if diagnostics and mode is Mode.SUM:
        logger.warning("Psi diagnostics assume w(0) = 1 and are disabled in sum mode")
    product = np.repeat(np.eye(n)[None], replicas, axis=0) if psi_on else None
    tracker = None
    if diagnostics:
        length = window if window is not None else b2_window_length(family)
        tracker = WindowTracker(n, length, check_assumptions(family).m_K, replicas)

    cols = {name: np.empty((replicas, ticks + 1)) for name in BASE_COLUMNS[1:]}
    if psi_on:
        for name in PSI_COLUMNS:
            cols[name] = np.empty((replicas, ticks + 1))

    monitor_mass = check_invariants and family.mass_conserving and mode is not Mode.SINGLE_VARIATE
    monitor_contraction = check_invariants and family.mass_conserving and mode is not Mode.SUM
    sum_s0 = float(x0.sum())
    mass_scale = max(abs(sum_s0), float(np.abs(x0).sum()), 1e-300)
    sum_w0 = float(state0.w.sum())

    def record(t: int) -> None:
        s, w = state[:, 0], state[:, 1]
        defined = w > 0
        est = np.divide(s, w, out=np.zeros_like(s), where=defined)
        err = np.where(defined, np.abs(est - target), 0.0)
        cols["se"][:, t] = np.sum(err**2, axis=1)
        cols["inf_err"][:, t] = np.max(err, axis=1)
        cols["sum_s"][:, t] = s.sum(axis=1)
        cols["sum_w"][:, t] = w.sum(axis=1)
        cols["min_w"][:, t] = w.min(axis=1)
        if psi_on:
            cols["psi1"][:, t], cols["psi2"][:, t] = psi_diagnostics(x0, product, w)
        if monitor_mass:
            ds = np.max(np.abs(cols["sum_s"][:, t] - sum_s0))
            dw = np.max(np.abs(cols["sum_w"][:, t] - sum_w0))
            if ds > MASS_RTOL * mass_scale or dw > MASS_RTOL * sum_w0:
                raise InvariantViolationError(
                    f"mass conservation broken at tick {t}",
                    {"tick": t, "sum_s_drift": float(ds), "sum_w_drift": float(dw)},
                )
        if monitor_contraction and t > 0:
            prev, cur = cols["inf_err"][:, t - 1], cols["inf_err"][:, t]
            bad = cur > prev * (1 + CONTRACTION_RTOL) + CONTRACTION_ATOL
            if np.any(bad):
                r = int(np.flatnonzero(bad)[0])
                raise InvariantViolationError(
                    f"infinity-norm error increased at tick {t} (replica {r})",
                    {"tick": t, "replica": r, "before": float(prev[r]), "after": float(cur[r])},
                )

    record(0)
    for t in range(ticks):
        k = drawer.matrices(t, state[:, 1])
        if mode is Mode.SINGLE_VARIATE:
            state[:, 0:1] = state[:, 0:1] @ k
        else:
            state = state @ k
        if product is not None:
            product = product @ k
        if tracker is not None:
            tracker.update(k, t + 1, state[:, 1])
        record(t + 1)

    cols = {"t": np.arange(ticks + 1), **cols}
    final = np.full((replicas, n), np.nan)
    np.divide(state[:, 0], state[:, 1], out=final, where=state[:, 1] > 0)
    log_performance(
        "run_batch",
        time.perf_counter() - started,
        family=family.name,
        replicas=replicas,
        ticks=ticks,
        alpha=alpha,
    )
    return BatchTrace(
        columns=cols,
        mode=mode,
        target=target,
        final_estimates=final,
        windows=tracker.results if tracker else None,
    )


def run(
    family: UpdateMatrixSet,
    x0,
    mode: Union[Mode, str] = Mode.AVERAGE,
    ticks: int = 1000,
    alpha: float = 1.0,
    seed: int = 0,
    trigger: Optional[int] = None,
    diagnostics: bool = False,
    window: Optional[int] = None,
    check_invariants: bool = False,
) -> Trace:
    """Single run; identical arguments give an identical trace (replica 0 of ``seed``)."""
    batch = run_batch(
        family,
        x0,
        replicas=1,
        mode=mode,
        ticks=ticks,
        alpha=alpha,
        seed=seed,
        trigger=trigger,
        diagnostics=diagnostics,
        window=window,
        check_invariants=check_invariants,
    )
    return batch.replica(0)
