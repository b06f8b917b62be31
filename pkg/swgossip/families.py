"""
Update-matrix families {K_i, p_i} and assumption checks.

Convention: states are row vectors updated as sᵀ ← sᵀK, so row-stochastic matrices
(K·1 = 1) conserve mass and column-stochastic ones preserve consensus.

Explicit families store every matrix with its probability. Implicit families (Kempe
Push-Sum with its N^N matrices, link-failure families too large to enumerate) only
carry a sampler plus the moments E[K] and E[K⊗K].
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger

from .core import seeding
from .core.config import get_settings
from .core.exceptions import SizeCapError, ValidationError
from .graph import Graph, is_connected
from .linalg import (
    kron_second_moment,
    min_positive_entry,
    primitivity_exponent,
    row_sum_deviation,
)


class FamilyKind(str, Enum):
    """How a family is represented."""

    EXPLICIT = "explicit"
    IMPLICIT_SYNCHRONOUS = "implicit_synchronous"

    def __str__(self) -> str:
        return self.value


# --------------------------------------------------------------------------- samplers


class KempeSampler:
    """Synchronous Push-Sum on the complete graph: K = ½I + ½·Σ_i e_i e_{j_i}ᵀ."""

    broadcaster_indexed = False
    row_stochastic = True
    positive_diagonal = True

    def __init__(self, n: int):
        self.n = n
        self.min_entry = 0.5
        self.min_prob = float(n) ** (-n)

    def draws(self, rng: np.random.Generator, ticks: int) -> np.ndarray:
        """Targets j_i for every node and tick, shape (ticks, n)."""
        return rng.integers(0, self.n, size=(ticks, self.n))

    def build(self, draw: np.ndarray, broadcaster: Optional[int] = None) -> np.ndarray:
        k = 0.5 * np.eye(self.n)
        np.add.at(k, (np.arange(self.n), draw), 0.5)
        return k

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.build(self.draws(rng, 1)[0])


class FailureSampler:
    """BWGossip where each link of the broadcaster fails independently with probability p_e.

    The broadcaster splits its pair by the live neighborhood size + 1.
    """

    broadcaster_indexed = True
    row_stochastic = True
    positive_diagonal = True

    def __init__(self, graph: Graph, p_e: float):
        self.graph = graph
        self.n = graph.n
        self.p_e = p_e
        self._neighbors = [graph.neighbors(i) for i in range(graph.n)]
        d_max = graph.max_degree
        self.min_entry = 1.0 / (d_max + 1)
        worst = min(p_e, 1.0 - p_e) if p_e > 0 else 1.0
        self.min_prob = worst ** d_max / graph.n

    def draws(self, rng: np.random.Generator, ticks: int) -> np.ndarray:
        """Uniforms deciding link survival, shape (ticks, d_max)."""
        return rng.random(size=(ticks, max(self.graph.max_degree, 1)))

    def build(self, draw: np.ndarray, broadcaster: Optional[int] = None) -> np.ndarray:
        i = int(broadcaster)
        nbrs = self._neighbors[i]
        live = nbrs[draw[: len(nbrs)] >= self.p_e]
        return _broadcast_matrix(self.n, i, live)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        broadcaster = int(rng.integers(0, self.n))
        return self.build(self.draws(rng, 1)[0], broadcaster)


# --------------------------------------------------------------------------- family type


@dataclass(frozen=True, eq=False)
class UpdateMatrixSet:
    """A family of update matrices.

    Attributes:
        kind: Explicit or implicit representation
        n: Node count
        name: Algorithm that produced the family
        mass_conserving: False only for the biased Broadcast Gossip family
        matrices: (M, N, N) stack (explicit only)
        probs: (M,) probabilities (explicit only)
        broadcasters: (M,) broadcaster of each matrix, for clock-managed sampling
        sampler: Matrix sampler (implicit only)
        closed_moments: (E[K], E[K⊗K]) for implicit families
        moments_estimated: True when closed_moments come from Monte Carlo
    """

    kind: FamilyKind
    n: int
    name: str
    mass_conserving: bool = True
    matrices: Optional[np.ndarray] = field(default=None, repr=False)
    probs: Optional[np.ndarray] = field(default=None, repr=False)
    broadcasters: Optional[np.ndarray] = field(default=None, repr=False)
    sampler: Any = field(default=None, repr=False)
    closed_moments: Optional[Tuple[np.ndarray, Optional[np.ndarray]]] = field(default=None, repr=False)
    moments_estimated: bool = False

    def __post_init__(self) -> None:
        tol = get_settings().stochastic_tol
        if self.kind is FamilyKind.EXPLICIT:
            if self.matrices is None or self.probs is None or len(self.matrices) == 0:
                raise ValidationError("explicit family needs at least one matrix")
            mats = np.array(self.matrices, dtype=float)
            probs = np.array(self.probs, dtype=float)
            if mats.ndim != 3 or mats.shape[1:] != (self.n, self.n) or probs.shape != (len(mats),):
                raise ValidationError("family shape mismatch", {"matrices": mats.shape, "probs": probs.shape})
            if not np.all(np.isfinite(mats)) or np.any(mats < 0):
                raise ValidationError("family matrices must be finite and non-negative")
            if np.any(probs <= 0) or abs(probs.sum() - 1.0) > tol:
                raise ValidationError("probabilities must be positive and sum to 1", {"sum": float(probs.sum())})
            if self.mass_conserving and row_sum_deviation(mats) > tol:
                raise ValidationError(
                    "mass-conserving family has a matrix that is not row-stochastic",
                    {"deviation": row_sum_deviation(mats)},
                )
            for arr in (mats, probs):
                arr.setflags(write=False)
            object.__setattr__(self, "matrices", mats)
            object.__setattr__(self, "probs", probs)
            if self.broadcasters is not None:
                b = np.array(self.broadcasters, dtype=np.int64)
                if b.shape != probs.shape or np.any(b < 0) or np.any(np.diff(b) < 0):
                    raise ValidationError("broadcasters must be sorted, one per matrix")
                # the activation clock assumes every node broadcasts with mass 1/N
                mass = np.bincount(b, weights=probs, minlength=self.n)
                if len(mass) != self.n or np.max(np.abs(mass - 1.0 / self.n)) > 1e-9:
                    raise ValidationError("each broadcaster must carry probability 1/n")
                b.setflags(write=False)
                object.__setattr__(self, "broadcasters", b)
        elif self.sampler is None:
            raise ValidationError("implicit family needs a sampler")

    @property
    def size(self) -> Optional[int]:
        return len(self.matrices) if self.matrices is not None else None

    @property
    def broadcaster_indexed(self) -> bool:
        if self.kind is FamilyKind.EXPLICIT:
            return self.broadcasters is not None
        return bool(getattr(self.sampler, "broadcaster_indexed", False))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one update matrix."""
        if self.kind is FamilyKind.EXPLICIT:
            return self.matrices[rng.choice(len(self.probs), p=self.probs)]
        return self.sampler.sample(rng)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the (A1), (A2), (B) checks.

    m_K is the smallest positive entry over all matrices, p_K the smallest probability.
    """

    a1_row_stochastic: bool
    a2_positive_diagonal: bool
    b_primitive: bool
    witness_exponent: Optional[int]
    m_K: float
    p_K: float

    @property
    def failing(self) -> list:
        names = []
        if not self.a1_row_stochastic:
            names.append("A1")
        if not self.a2_positive_diagonal:
            names.append("A2")
        if not self.b_primitive:
            names.append("B")
        return names

    def to_dict(self) -> Dict[str, Any]:
        return {
            "a1_row_stochastic": self.a1_row_stochastic,
            "a2_positive_diagonal": self.a2_positive_diagonal,
            "b_primitive": self.b_primitive,
            "witness_exponent": self.witness_exponent,
            "m_K": self.m_K,
            "p_K": self.p_K,
        }


# --------------------------------------------------------------------------- constructors


def _require_connected(g: Graph, algorithm: str) -> None:
    if not is_connected(g):
        raise ValidationError(
            f"{algorithm} needs a connected graph (assumption B would fail)",
            {"n": g.n, "edges": len(g.edges())},
        )


def _broadcast_matrix(n: int, i: int, receivers: np.ndarray) -> np.ndarray:
    """Identity except row i, which splits evenly over i and its receivers."""
    k = np.eye(n)
    share = 1.0 / (len(receivers) + 1)
    k[i, i] = share
    k[i, receivers] = share
    return k


def bwgossip_set(g: Graph, require_connected: bool = True) -> UpdateMatrixSet:
    """BWGossip family: K_i = I − e_i e_iᵀ (D+I)⁻¹ L, each with probability 1/N."""
    if require_connected:
        _require_connected(g, "bwgossip")
    matrices = np.stack([_broadcast_matrix(g.n, i, g.neighbors(i)) for i in range(g.n)])
    logger.debug(f"bwgossip family: {g.n} matrices")
    return UpdateMatrixSet(
        kind=FamilyKind.EXPLICIT,
        n=g.n,
        name="bwgossip",
        matrices=matrices,
        probs=np.full(g.n, 1.0 / g.n),
        broadcasters=np.arange(g.n),
    )


def random_gossip_set(g: Graph, require_connected: bool = True) -> UpdateMatrixSet:
    """Random Gossip: one pairwise ½-averaging matrix per edge, uniform over edges."""
    if require_connected:
        _require_connected(g, "random_gossip")
    edges = g.edges()
    if not edges:
        raise ValidationError("random gossip needs at least one edge")
    matrices = np.repeat(np.eye(g.n)[None], len(edges), axis=0)
    for m, (i, j) in enumerate(edges):
        matrices[m, [i, i, j, j], [i, j, i, j]] = 0.5
    return UpdateMatrixSet(
        kind=FamilyKind.EXPLICIT,
        n=g.n,
        name="random_gossip",
        matrices=matrices,
        probs=np.full(len(edges), 1.0 / len(edges)),
    )


def broadcast_gossip_set(g: Graph, gamma: float = 0.5, require_connected: bool = True) -> UpdateMatrixSet:
    """Broadcast Gossip: neighbors of the broadcaster i mix x_j ← γx_j + (1−γ)x_i.

    The matrices are column-stochastic but not row-stochastic, so the family does not
    conserve mass and its consensus is biased.
    """
    if not 0 < gamma < 1:
        raise ValidationError("gamma must lie in (0, 1)", {"gamma": gamma})
    if require_connected:
        _require_connected(g, "broadcast_gossip")
    matrices = np.repeat(np.eye(g.n)[None], g.n, axis=0)
    for i in range(g.n):
        nbrs = g.neighbors(i)
        matrices[i, i, nbrs] = 1.0 - gamma
        matrices[i, nbrs, nbrs] = gamma
    return UpdateMatrixSet(
        kind=FamilyKind.EXPLICIT,
        n=g.n,
        name="broadcast_gossip",
        mass_conserving=False,
        matrices=matrices,
        probs=np.full(g.n, 1.0 / g.n),
        broadcasters=np.arange(g.n),
    )


def kempe_moments(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Closed forms of E[K] and E[K⊗K] for synchronous Push-Sum.

    E[K] = ½I + ½J and
    E[K⊗K] = ¼I⊗I + ¼J⊗I + ¼I⊗J + ¼J⊗J + (1/4N)uuᵀ − (1/4N²)u1ᵀ, u = Σ e_i⊗e_i.
    """
    eye = np.eye(n)
    j = np.full((n, n), 1.0 / n)
    u = eye.reshape(n * n)
    ekk = 0.25 * (np.kron(eye, eye) + np.kron(j, eye) + np.kron(eye, j) + np.kron(j, j))
    ekk += np.outer(u, u) / (4 * n) - np.outer(u, np.ones(n * n)) / (4 * n * n)
    return 0.5 * eye + 0.5 * j, ekk


def pushsum_kempe_set(n: int) -> UpdateMatrixSet:
    """Kempe's synchronous Push-Sum as an implicit family (never enumerated)."""
    if n < 2:
        raise ValidationError("n must be >= 2", {"n": n})
    ek, ekk = kempe_moments(n) if n <= get_settings().kron_max_n else (0.5 * np.eye(n) + 0.5 / n, None)
    return UpdateMatrixSet(
        kind=FamilyKind.IMPLICIT_SYNCHRONOUS,
        n=n,
        name="pushsum",
        sampler=KempeSampler(n),
        closed_moments=(ek, ekk),
    )


def pushsum_kempe_enumerated(n: int, max_n: int = 3) -> UpdateMatrixSet:
    """All N^N Push-Sum matrices with probability N^−N each, for validation on tiny N."""
    if n < 2 or n > max_n:
        raise SizeCapError(f"enumerating N^N matrices is limited to 2 <= n <= {max_n}", {"n": n})
    sampler = KempeSampler(n)
    matrices = np.stack([sampler.build(np.array(js)) for js in itertools.product(range(n), repeat=n)])
    return UpdateMatrixSet(
        kind=FamilyKind.EXPLICIT,
        n=n,
        name="pushsum",
        matrices=matrices,
        probs=np.full(len(matrices), 1.0 / len(matrices)),
    )


def bwgossip_failure_set(
    g: Graph,
    p_e: float,
    max_degree: Optional[int] = None,
    seed: int = 0,
    require_connected: bool = True,
) -> UpdateMatrixSet:
    """BWGossip under i.i.d. link failures.

    Enumerates every (broadcaster i, failed subset F ⊆ 𝒩_i) with probability
    (1/N)·p_e^|F|·(1−p_e)^(d_i−|F|); the broadcaster splits over 𝒩_i minus F, so every
    matrix stays row-stochastic. Zero-probability outcomes are dropped, so p_e = 0 gives
    the plain BWGossip family. Above ``max_degree`` the family becomes implicit, with
    Monte Carlo moments drawn from ``seed``.
    """
    if not 0 <= p_e < 1:
        raise ValidationError("p_e must lie in [0, 1)", {"p_e": p_e})
    if require_connected:
        _require_connected(g, "bwgossip")
    settings = get_settings()
    threshold = settings.failure_enum_max_degree if max_degree is None else max_degree

    if g.max_degree > threshold:
        logger.warning(
            f"max degree {g.max_degree} exceeds enumeration threshold {threshold}; "
            "using Monte Carlo moments"
        )
        sampler = FailureSampler(g, p_e)
        moments = _sampled_moments(sampler, settings.failure_mc_samples, seed)
        return UpdateMatrixSet(
            kind=FamilyKind.IMPLICIT_SYNCHRONOUS,
            n=g.n,
            name="bwgossip_failure",
            sampler=sampler,
            closed_moments=moments,
            moments_estimated=True,
        )

    matrices, probs, broadcasters = [], [], []
    for i in range(g.n):
        nbrs = g.neighbors(i)
        for failed in itertools.product((False, True), repeat=len(nbrs)):
            failed = np.array(failed, dtype=bool)
            k = int(failed.sum())
            prob = p_e**k * (1.0 - p_e) ** (len(nbrs) - k) / g.n
            if prob <= 0:
                continue
            matrices.append(_broadcast_matrix(g.n, i, nbrs[~failed]))
            probs.append(prob)
            broadcasters.append(i)
    probs = np.array(probs)
    probs /= probs.sum()
    logger.debug(f"failure family p_e={p_e}: {len(matrices)} matrices")
    return UpdateMatrixSet(
        kind=FamilyKind.EXPLICIT,
        n=g.n,
        name="bwgossip_failure" if p_e > 0 else "bwgossip",
        matrices=np.stack(matrices),
        probs=probs,
        broadcasters=np.array(broadcasters),
    )


def _sampled_moments(sampler: FailureSampler, samples: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    rng = seeding.stream(seed, seeding.MOMENTS)
    n = sampler.n
    ek = np.zeros((n, n))
    ekk = np.zeros((n * n, n * n))
    chunk = 512
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        broadcasters = rng.integers(0, n, size=size)
        draws = sampler.draws(rng, size)
        batch = np.stack([sampler.build(d, b) for d, b in zip(draws, broadcasters)])
        weights = np.full(size, 1.0 / samples)
        ek += np.tensordot(weights, batch, axes=1)
        ekk += kron_second_moment(batch, weights)
        done += size
    return ek, ekk


# --------------------------------------------------------------------------- checks


def mean_matrix(family: UpdateMatrixSet) -> np.ndarray:
    """E[K] from the explicit matrices or the stored moment."""
    if family.kind is FamilyKind.EXPLICIT:
        return np.tensordot(family.probs, family.matrices, axes=1)
    return family.closed_moments[0]


def check_assumptions(family: UpdateMatrixSet) -> AssumptionReport:
    """Check (A1) row-stochasticity, (A2) positive diagonals and (B) primitivity of E[K].

    (B) holds iff the support of E[K] is strongly connected; with the self-loops of (A2)
    this is primitivity, witnessed by the smallest m <= N²−2N+2 with support^m > 0.
    Implicit families report from their sampler's known structure and E[K].
    """
    n = family.n
    tol = get_settings().stochastic_tol
    if family.kind is FamilyKind.EXPLICIT:
        if family.size == 0:
            raise ValidationError("empty family")
        mats = family.matrices
        probs_ok = bool(np.all(family.probs > 0) and abs(family.probs.sum() - 1.0) <= tol)
        a1 = probs_ok and bool(np.all(mats >= 0)) and row_sum_deviation(mats) <= tol
        a2 = bool(np.all(np.diagonal(mats, axis1=1, axis2=2) > 0))
        m_k = min_positive_entry(mats)
        p_k = float(family.probs.min())
    else:
        sampler = family.sampler
        a1 = bool(sampler.row_stochastic) and family.mass_conserving
        a2 = bool(sampler.positive_diagonal)
        m_k = float(sampler.min_entry)
        p_k = float(sampler.min_prob)

    support = mean_matrix(family) > 0
    if a2:
        support = support | np.eye(n, dtype=bool)
    witness = primitivity_exponent(support, n * n - 2 * n + 2)
    report = AssumptionReport(
        a1_row_stochastic=a1,
        a2_positive_diagonal=a2,
        b_primitive=witness is not None,
        witness_exponent=witness,
        m_K=m_k,
        p_K=p_k,
    )
    logger.debug(f"{family.name} assumptions: {report}")
    return report


def check_b3_numeric(family: UpdateMatrixSet, max_power: Optional[int] = None) -> Optional[int]:
    """Smallest k <= max_power with support(E[K⊗K])^k > 0, or None.

    Raises:
        ValidationError: For implicit families
        SizeCapError: Above the configured node cap
    """
    if family.kind is not FamilyKind.EXPLICIT:
        raise ValidationError("check_b3_numeric needs an explicit family")
    cap = get_settings().b3_max_n
    if family.n > cap:
        raise SizeCapError(
            f"E[K⊗K] support powering is limited to n <= {cap}; use check_assumptions instead",
            {"n": family.n, "cap": cap},
        )
    n2 = family.n * family.n
    if max_power is None:
        max_power = n2 * n2 - 2 * n2 + 2
    ekk = kron_second_moment(family.matrices, family.probs)
    return primitivity_exponent(ekk > 0, max_power)


def b2_window_length(family: UpdateMatrixSet, cap: Optional[int] = None) -> int:
    """Length of a product of family matrices that is elementwise positive, capped at 2N².

    Greedy path-product construction: starting from I, append the matrix whose support
    grows the product's support the most, until the product is positive. Implicit
    families, and families where no product turns positive, get the cap.
    """
    n = family.n
    cap = 2 * n * n if cap is None else cap
    if family.kind is not FamilyKind.EXPLICIT:
        return cap
    supports = (family.matrices > 0).astype(np.float64)
    current = np.eye(n)
    for length in range(1, cap + 1):
        candidates = (np.einsum("ij,mjk->mik", current, supports) > 0).astype(np.float64)
        counts = candidates.sum(axis=(1, 2))
        best = int(np.argmax(counts))
        if counts[best] <= current.sum() and not np.all(current > 0):
            return cap
        current = candidates[best]
        if np.all(current > 0):
            return length
    return cap


# --------------------------------------------------------------------------- interchange


def family_to_dict(family: UpdateMatrixSet) -> Dict[str, Any]:
    """JSON document ``{kind, n, name, matrices, probs, ...}``; matrices row-major flattened."""
    if family.kind is not FamilyKind.EXPLICIT:
        raise ValidationError("only explicit families can be exported")
    data: Dict[str, Any] = {
        "kind": family.kind.value,
        "n": family.n,
        "name": family.name,
        "mass_conserving": family.mass_conserving,
        "matrices": [m.reshape(-1).tolist() for m in family.matrices],
        "probs": family.probs.tolist(),
    }
    if family.broadcasters is not None:
        data["broadcasters"] = family.broadcasters.tolist()
    return data


def family_from_dict(data: Dict[str, Any]) -> UpdateMatrixSet:
    """Inverse of ``family_to_dict``; mass conservation is inferred when absent."""
    try:
        if data.get("kind", FamilyKind.EXPLICIT.value) != FamilyKind.EXPLICIT.value:
            raise ValidationError("only explicit families can be imported")
        n = int(data["n"])
        matrices = np.array(data["matrices"], dtype=float).reshape(-1, n, n)
        probs = np.array(data["probs"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"malformed family document: {e}")
    mass = data.get("mass_conserving")
    if mass is None:
        mass = row_sum_deviation(matrices) <= get_settings().stochastic_tol
    return UpdateMatrixSet(
        kind=FamilyKind.EXPLICIT,
        n=n,
        name=str(data.get("name", "imported")),
        mass_conserving=bool(mass),
        matrices=matrices,
        probs=probs,
        broadcasters=data.get("broadcasters"),
    )
