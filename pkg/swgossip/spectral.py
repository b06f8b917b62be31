"""
Convergence-rate machinery for sum-weight gossip.

The mean squared error of a family decays like ρ(R)^t with
R = ((I−J)⊗(I−J))·E[K⊗K], so κ = −ln ρ(R) is the per-tick exponential rate.
The deflated matrix S_v = E[K⊗K] − 1vᵀ (v the left Perron vector) gives the
older, looser bound κ′ = −ln ρ(S_v).
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from .core.config import get_settings
from .core.exceptions import AssumptionError, DegenerateFamilyError, SizeCapError, ValidationError
from .families import (
    AssumptionReport,
    FamilyKind,
    UpdateMatrixSet,
    check_assumptions,
    mean_matrix,
)
from .linalg import centering, kron_second_moment

INF = float("inf")


@dataclass(frozen=True)
class SpectralReport:
    """Spectral summary of a family.

    ``kappa`` is +inf when ρ(R) vanishes (finite-time exact averaging). ``rho_Sv``,
    ``boyd_rho`` and ``boyd_kappa`` are None when assumption B fails, since the
    Perron deflation is then undefined.
    """

    n: int
    rho_R: float
    kappa: float
    rho_Sv: Optional[float]
    boyd_rho: Optional[float]
    boyd_kappa: Optional[float]
    assumptions: AssumptionReport
    moments_estimated: bool = False
    kappa_gelfand: Optional[float] = None

    @property
    def exact(self) -> bool:
        return math.isinf(self.kappa)

    def gelfand_agrees(self, rel_tol: float = 1e-6) -> Optional[bool]:
        if self.kappa_gelfand is None:
            return None
        if self.exact or math.isinf(self.kappa_gelfand):
            return self.exact and math.isinf(self.kappa_gelfand)
        return math.isclose(self.kappa, self.kappa_gelfand, rel_tol=rel_tol, abs_tol=1e-12)

    def to_dict(self) -> Dict[str, Any]:
        """JSON form; infinities become the string ``"inf"``."""

        def enc(value: Optional[float]) -> Any:
            return "inf" if value is not None and math.isinf(value) else value

        data = {
            "n": self.n,
            "rho_R": self.rho_R,
            "kappa": enc(self.kappa),
            "rho_Sv": self.rho_Sv,
            "boyd_rho": self.boyd_rho,
            "boyd_kappa": enc(self.boyd_kappa),
            "moments_estimated": self.moments_estimated,
            "assumptions": self.assumptions.to_dict(),
        }
        if self.kappa_gelfand is not None:
            data["kappa_gelfand"] = enc(self.kappa_gelfand)
        return data


def expected_matrix(family: UpdateMatrixSet) -> np.ndarray:
    """E[K] = Σ p_i K_i, or the stored closed form."""
    return mean_matrix(family)


def expected_kron(family: UpdateMatrixSet) -> np.ndarray:
    """E[K⊗K] = Σ p_i (K_i ⊗ K_i), not E[K]⊗E[K].

    Raises:
        SizeCapError: When N exceeds ``kron_max_n`` or an implicit family has no stored moment
    """
    cap = get_settings().kron_max_n
    if family.n > cap:
        raise SizeCapError(
            f"dense E[K⊗K] is limited to n <= {cap} (SWGOSSIP_KRON_MAX_N)",
            {"n": family.n, "cap": cap},
        )
    if family.kind is FamilyKind.EXPLICIT:
        return kron_second_moment(family.matrices, family.probs)
    ekk = family.closed_moments[1] if family.closed_moments else None
    if ekk is None:
        raise SizeCapError("implicit family carries no second moment", {"n": family.n})
    return ekk


def contraction_matrix(family: UpdateMatrixSet) -> np.ndarray:
    """R = ((I−J)⊗(I−J))·E[K⊗K]."""
    ekk = expected_kron(family)
    n = family.n
    # (C⊗C)·M computed as C·M_block·C on the (i,k) index pairs
    c = centering(n)
    blocks = ekk.reshape(n, n, n * n)
    return np.einsum("ia,kb,abm->ikm", c, c, blocks).reshape(n * n, n * n)


def _check_finite(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("expected a square matrix", {"shape": m.shape})
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def spectral_radius(m: np.ndarray) -> float:
    """Largest eigenvalue modulus, from a dense non-symmetric eigensolve."""
    m = _check_finite(m)
    return float(np.max(np.abs(scipy.linalg.eigvals(m))))


def gelfand_radius(m: np.ndarray, squarings: Optional[int] = None) -> float:
    """ρ(M) as lim ‖M^(2^k)‖^(1/2^k), by normalized repeated squaring.

    The scale factor is carried in log space so neither overflow nor underflow occurs.
    Independent of the eigensolver, used to cross-check ``spectral_radius``.
    """
    m = _check_finite(m)
    squarings = get_settings().gelfand_squarings if squarings is None else squarings
    norm = np.linalg.norm(m)
    if norm == 0:
        return 0.0
    a = m / norm
    log_rho = math.log(norm)
    for k in range(1, squarings + 1):
        a = a @ a
        norm = np.linalg.norm(a)
        if norm == 0:
            return 0.0
        a /= norm
        log_rho += math.log(norm) / 2.0**k
    return math.exp(log_rho)


def _neg_log(rho: float) -> float:
    return INF if rho <= get_settings().zero_radius_tol else -math.log(rho)


def deflated_Sv(family: UpdateMatrixSet) -> Tuple[np.ndarray, float]:
    """S_v = E[K⊗K] − 1vᵀ and ρ(S_v), v the left Perron vector with vᵀ1 = 1.

    Raises:
        DegenerateFamilyError: When eigenvalue 1 is not simple within ``perron_tol``
    """
    ekk = expected_kron(family)
    tol = get_settings().perron_tol
    eigenvalues, left = scipy.linalg.eig(ekk, left=True, right=False)
    near_one = np.flatnonzero(np.abs(eigenvalues - 1.0) < tol)
    if len(near_one) != 1:
        raise DegenerateFamilyError(
            f"eigenvalue 1 of E[K⊗K] has multiplicity {len(near_one)}, expected 1",
            {"count": int(len(near_one)), "n": family.n},
        )
    v = np.real(left[:, near_one[0]])
    v = v / v.sum()
    sv = ekk - np.outer(np.ones(len(v)), v)
    return sv, spectral_radius(sv)


def kappa(family: UpdateMatrixSet, cross_check: bool = False) -> SpectralReport:
    """Assemble the spectral report of a family.

    Args:
        family: Family satisfying A1 and A2
        cross_check: Also compute κ from the Gelfand estimator

    Raises:
        AssumptionError: Naming A1 or A2 when it fails
    """
    report = check_assumptions(family)
    for name, ok in (("A1", report.a1_row_stochastic), ("A2", report.a2_positive_diagonal)):
        if not ok:
            raise AssumptionError(name, f"{family.name}: assumption {name} does not hold", {"family": family.name})

    r = contraction_matrix(family)
    rho_r = spectral_radius(r)
    rho_sv = boyd_rho = boyd_kappa = None
    if report.b_primitive:
        _, rho_sv = deflated_Sv(family)
        # κ′ deflates E[K⊗K] by the same Perron direction as S_v
        boyd_rho = rho_sv
        boyd_kappa = _neg_log(boyd_rho)
    else:
        logger.warning(f"{family.name}: assumption B fails, deflated bounds omitted")

    gelfand = _neg_log(gelfand_radius(r)) if cross_check else None
    result = SpectralReport(
        n=family.n,
        rho_R=rho_r,
        kappa=_neg_log(rho_r),
        rho_Sv=rho_sv,
        boyd_rho=boyd_rho,
        boyd_kappa=boyd_kappa,
        assumptions=report,
        moments_estimated=family.moments_estimated,
        kappa_gelfand=gelfand,
    )
    logger.info(f"{family.name} n={family.n}: rho_R={rho_r:.6g} kappa={result.kappa:.6g}")
    return result


def kempe_closed_forms(n: int) -> Dict[str, Any]:
    """Reference values for synchronous Push-Sum on N nodes.

    E[KKᵀ] = (1/2 − 1/(4N))I + (3/4)J. The one-step squared-error recursion
    coefficient and ρ(R) both equal 1/2 − 1/(4N).
    """
    if n < 2:
        raise ValidationError("n must be >= 2", {"n": n})
    factor = 0.5 - 1.0 / (4 * n)
    e_kkt = factor * np.eye(n) + 0.75 * np.full((n, n), 1.0 / n)
    return {"E_KKt": e_kkt, "rho_R": factor, "recursion_factor": factor}
