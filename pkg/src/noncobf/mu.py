"""Multi-user designs: zero-forcing pre-beamforming and stationary SLNR."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .array_channel import PhaseModel, SignatureSet, phase_correlation
from .errors import InfeasibleZFError, InvalidArgumentError
from .spectral import (RANK_TOL, Projector, canonical_phase,
                       generalized_dominant_eigvec, null_space_projector)
from .su import Beamformer, Criterion, WorstCaseOptions, stationary_bf, worst_case_bf

ZF_FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class UserChannel:
    signatures: SignatureSet
    phase_model: PhaseModel

    def __post_init__(self):
        if self.phase_model.size != self.signatures.num_paths:
            raise InvalidArgumentError("phase model size must equal the number of paths")

    @property
    def correlation(self) -> np.ndarray:
        return phase_correlation(self.phase_model, self.signatures.num_paths)


@dataclass(frozen=True)
class MultiUserScenario:
    """Users sharing one array, with per-user symbol powers and a common noise variance."""

    users: tuple[UserChannel, ...]
    symbol_powers: np.ndarray
    noise_variance: float

    def __post_init__(self):
        users = tuple(self.users)
        if len(users) < 1:
            raise InvalidArgumentError("at least one user is required")
        n = {u.signatures.num_antennas for u in users}
        if len(n) != 1:
            raise InvalidArgumentError("all users must share the antenna count")
        p = np.broadcast_to(np.asarray(self.symbol_powers, dtype=float), (len(users),)).copy()
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise InvalidArgumentError("symbol powers must be positive")
        if not (np.isfinite(self.noise_variance) and self.noise_variance > 0):
            raise InvalidArgumentError("noise variance must be positive")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "symbol_powers", p)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_antennas(self) -> int:
        return self.users[0].signatures.num_antennas

    def regularization(self, k: int) -> float:
        """Inverse SNR ``rho_k = sigma^2 / p_k``."""
        return self.noise_variance / self.symbol_powers[k]

    def _check(self, k: int):
        if not 0 <= k < self.num_users:
            raise InvalidArgumentError(f"user index {k} out of range")


def interference_matrix(scenario: MultiUserScenario, k: int) -> np.ndarray:
    """Concatenated signatures of every user except ``k`` (``N x 0`` when K=1)."""
    scenario._check(k)
    blocks = [u.signatures.signatures for i, u in enumerate(scenario.users) if i != k]
    if not blocks:
        return np.zeros((scenario.num_antennas, 0), dtype=complex)
    return np.hstack(blocks)


def interference_correlation(scenario: MultiUserScenario, k: int) -> np.ndarray:
    """Block-diagonal phase correlation of the interferers."""
    scenario._check(k)
    blocks = [u.correlation for i, u in enumerate(scenario.users) if i != k]
    if not blocks:
        return np.zeros((0, 0), dtype=complex)
    return block_diag(*blocks)


def zf_prebeamformer(scenario: MultiUserScenario, k: int, tol: float = RANK_TOL) -> Projector:
    """Projector onto the null space of the other users' signatures."""
    B = interference_matrix(scenario, k)
    if B.shape[1] == 0:
        return null_space_projector(None, dim=scenario.num_antennas)
    return null_space_projector(B, tol)


def _deflated(scenario, k, tol):
    P = zf_prebeamformer(scenario, k, tol)
    A = scenario.users[k].signatures.signatures
    PA = P.P @ A
    if np.linalg.norm(PA) <= ZF_FEASIBILITY_TOL * np.linalg.norm(A):
        raise InfeasibleZFError(k)
    return P, PA


def _lift(P: Projector, bf: Beamformer, criterion: Criterion) -> Beamformer:
    g = P.P @ bf.g
    g = canonical_phase(g / np.linalg.norm(g))
    diag = dict(bf.diagnostics, rank_deflated=P.rank_deflated)
    return Beamformer(g, criterion, bf.objective_value, diag)


def zf_stationary_bf(scenario: MultiUserScenario, k: int, tol: float = RANK_TOL) -> Beamformer:
    """Stationary beamformer on the ZF-equivalent channel ``P_k A_k``."""
    P, PA = _deflated(scenario, k, tol)
    bf = stationary_bf(PA, scenario.users[k].correlation)
    return _lift(P, bf, Criterion.ZF_STATIONARY)


def zf_worst_case_bf(scenario: MultiUserScenario, k: int, opts: WorstCaseOptions | None = None,
                     tol: float = RANK_TOL) -> Beamformer:
    """Worst-case design on the deflated signatures ``P_k a_{k,l}``.

    Columns annihilated by the projector carry no power and are dropped.
    """
    P, PA = _deflated(scenario, k, tol)
    norms = np.linalg.norm(PA, axis=0)
    keep = norms > ZF_FEASIBILITY_TOL * np.max(norms)
    bf = worst_case_bf(PA[:, keep], opts)
    return _lift(P, bf, Criterion.ZF_WORST_CASE)


def slnr_matrices(scenario: MultiUserScenario, k: int, rho: float | None = None):
    """Numerator ``A_k R_k A_k^H`` and denominator ``Ao Ro Ao^H + rho I``."""
    scenario._check(k)
    user = scenario.users[k]
    A = user.signatures.signatures
    num = A @ user.correlation @ A.conj().T
    if rho is None:
        rho = scenario.regularization(k)
    if not rho > 0:
        raise InvalidArgumentError("rho must be positive")
    B = interference_matrix(scenario, k)
    den = rho * np.eye(scenario.num_antennas, dtype=complex)
    if B.shape[1]:
        den = den + B @ interference_correlation(scenario, k) @ B.conj().T
    return (num + num.conj().T) / 2, (den + den.conj().T) / 2


def rzf_slnr_bf(scenario: MultiUserScenario, k: int, rho: float | None = None) -> Beamformer:
    """Maximize the stationary signal-to-leakage-and-noise ratio.

    ``rho`` overrides the scenario's ``sigma^2 / p_k``.  Large ``rho``
    recovers the single-user stationary design, small ``rho`` the ZF one.
    """
    num, den = slnr_matrices(scenario, k, rho)
    g = generalized_dominant_eigvec(num, den)
    slnr = np.real(np.vdot(g, num @ g)) / np.real(np.vdot(g, den @ g))
    return Beamformer(g, Criterion.RZF_STATIONARY, float(slnr),
                      {"rho": float(scenario.regularization(k) if rho is None else rho)})


def stationary_slnr(scenario: MultiUserScenario, k: int, g) -> float:
    num, den = slnr_matrices(scenario, k)
    g = np.asarray(g, dtype=complex)
    return float(np.real(np.vdot(g, num @ g)) / np.real(np.vdot(g, den @ g)))


def zf_feasibility(scenario: MultiUserScenario, tol: float = RANK_TOL) -> list[dict]:
    """Per-user ZF report: removed dimension and retained signature energy."""
    out = []
    for k, user in enumerate(scenario.users):
        P = zf_prebeamformer(scenario, k, tol)
        A = user.signatures.signatures
        ratio = float(np.linalg.norm(P.P @ A) / np.linalg.norm(A))
        out.append({"user": k, "rank_deflated": P.rank_deflated, "retained_ratio": ratio,
                    "feasible": ratio > ZF_FEASIBILITY_TOL})
    return out


def design_all(scenario: MultiUserScenario, criterion: Criterion | str,
               opts: WorstCaseOptions | None = None) -> list[Beamformer]:
    """Per-user beamformers of one multi-user criterion (stationary designs ignore interference)."""
    criterion = Criterion(criterion)
    out = []
    for k, user in enumerate(scenario.users):
        if criterion is Criterion.ZF_STATIONARY:
            out.append(zf_stationary_bf(scenario, k))
        elif criterion is Criterion.ZF_WORST_CASE:
            out.append(zf_worst_case_bf(scenario, k, opts))
        elif criterion is Criterion.RZF_STATIONARY:
            out.append(rzf_slnr_bf(scenario, k))
        elif criterion is Criterion.STATIONARY:
            out.append(stationary_bf(user.signatures, user.correlation))
        elif criterion is Criterion.WORST_CASE:
            out.append(worst_case_bf(user.signatures, opts))
        else:
            raise InvalidArgumentError(f"{criterion.value} is not a fixed multi-user design")
    return out


def infeasible_users(scenario: MultiUserScenario, tol: float = RANK_TOL) -> Sequence[int]:
    return [r["user"] for r in zf_feasibility(scenario, tol) if not r["feasible"]]
