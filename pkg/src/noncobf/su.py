"""Single-user beamformers: coherent, uniform, stationary and worst-case designs."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .array_channel import as_signature_matrix
from .errors import DegenerateChannelError, InvalidArgumentError
from .spectral import RANK_TOL, as_hermitian, canonical_phase, dominant_eigpair


class Criterion(str, enum.Enum):
    COHERENT = "coherent"
    UNIFORM = "uniform"
    STATIONARY = "stationary"
    WORST_CASE = "worstcase"
    ZF_STATIONARY = "zf-stationary"
    ZF_WORST_CASE = "zf-worstcase"
    RZF_STATIONARY = "rzf"


@dataclass
class Beamformer:
    """Unit-norm (or zero) transmit weights plus design metadata."""

    g: np.ndarray
    criterion: Criterion
    objective_value: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=complex).reshape(-1)
        if np.real(np.vdot(self.g, self.g)) > 1 + 1e-10:
            raise InvalidArgumentError("beamformer norm exceeds one")

    @property
    def num_antennas(self) -> int:
        return self.g.size


def _stationary_cov(A, R) -> np.ndarray:
    a = as_signature_matrix(A)
    R = np.asarray(R, dtype=complex)
    if R.shape != (a.shape[1], a.shape[1]):
        raise InvalidArgumentError(f"R shape {R.shape} does not match {a.shape[1]} paths")
    M = a @ R @ a.conj().T
    return as_hermitian((M + M.conj().T) / 2)


def coherent_bf(h) -> Beamformer:
    """Matched filter ``g = h / ||h||`` for a perfectly known channel."""
    h = np.asarray(h, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(h)
    if nrm == 0:
        raise DegenerateChannelError("coherent beamformer needs a nonzero channel")
    return Beamformer(h / nrm, Criterion.COHERENT, float(nrm ** 2))


def uniform_bf(num_antennas: int) -> Beamformer:
    """Channel-agnostic beamformer ``1 / sqrt(N)``."""
    if num_antennas < 1:
        raise InvalidArgumentError("num_antennas must be >= 1")
    g = np.full(num_antennas, 1 / np.sqrt(num_antennas), dtype=complex)
    return Beamformer(g, Criterion.UNIFORM, float("nan"))


def stationary_bf(A, R, criterion: Criterion = Criterion.STATIONARY) -> Beamformer:
    """Maximize the average power ``E|g^H A v|^2 = g^H A R A^H g``.

    The solution is the dominant eigenvector of ``A R A^H``; the objective is
    its largest eigenvalue.
    """
    M = _stationary_cov(A, R)
    pair = dominant_eigpair(M)
    if pair.degenerate or pair.value <= 0:
        raise DegenerateChannelError("stationary covariance A R A^H is numerically zero")
    return Beamformer(pair.vector, criterion, pair.value)


def stationary_power(g, A, R) -> float:
    """Average beamforming power ``g^H A R A^H g``."""
    a = as_signature_matrix(A)
    w = a.conj().T @ np.asarray(g, dtype=complex).reshape(-1)
    return float(np.real(np.vdot(w, np.asarray(R) @ w)))


def stationary_power_bounds(A, R, tol: float = RANK_TOL):
    """``(tr/rank, tr, rank)`` bracketing ``lambda_max(A R A^H)``."""
    M = _stationary_cov(A, R)
    w = np.linalg.eigvalsh(M)
    upper = float(np.real(np.trace(M)))
    if w[-1] <= 0:
        return 0.0, upper, 0
    rank = int(np.sum(w > tol * w[-1]))
    return upper / rank, upper, rank


# -- worst case -----------------------------------------------------------

def worst_case_power(g, A) -> float:
    """Minimum of ``|g^H A v|^2`` over independent unrestricted phases.

    With ``z_l = |g^H a_l|`` this is ``max(0, z_max - sum of the others)^2``:
    the strongest term is cancelled as far as the others can reach.
    """
    z = np.abs(as_signature_matrix(A).conj().T @ np.asarray(g, dtype=complex).reshape(-1))
    deficit = 2 * np.max(z) - np.sum(z)
    return float(max(0.0, deficit) ** 2)


def worst_case_phases(g, A) -> np.ndarray:
    """Unit-modulus phase vector attaining :func:`worst_case_power`."""
    # c_l = g^H a_l, the coefficient multiplying v_l
    c = (as_signature_matrix(A).conj().T @ np.asarray(g, dtype=complex).reshape(-1)).conj()
    z = np.abs(c)
    psi = np.angle(c)
    L = z.size
    theta = np.zeros(L)  # target angle of each term c_l v_l
    if L == 1:
        return np.exp(-1j * psi)
    order = np.argsort(-z, kind="stable")
    top, rest = order[0], order[1:]
    if z[top] >= z[rest].sum():
        theta[rest] = np.pi
    else:
        # split the others into two chains with |p - q| <= z_top <= p + q,
        # then close the triangle (z_top, p, q)
        chain = np.zeros(L, dtype=bool)
        p = q = 0.0
        for l in rest:
            if p <= q:
                p += z[l]
                chain[l] = True
            else:
                q += z[l]
        zt = z[top]
        x = (zt ** 2 + q ** 2 - p ** 2) / (2 * zt)
        y = np.sqrt(max(q ** 2 - x ** 2, 0.0))
        # z_top along +1, chain p from zt to (x+jy), chain q from (x+jy) back to 0
        theta[chain] = np.angle(complex(x - zt, y)) if p > 0 else 0.0
        theta[rest[~chain[rest]]] = np.angle(complex(-x, -y)) if q > 0 else 0.0
    return np.exp(1j * (theta - psi))


def _dc_objective(g, a_main, a_others) -> float:
    val = abs(np.vdot(a_main, g))
    if a_others.shape[1]:
        val -= np.sum(np.abs(a_others.conj().T @ g))
    return float(val)


def _surrogate(g, c, a_others) -> float:
    val = -np.real(np.vdot(c, g))
    if a_others.shape[1]:
        val += np.sum(np.abs(a_others.conj().T @ g))
    return float(val)


def _linearization(a_main, g) -> np.ndarray:
    w = np.vdot(a_main, g)  # a^H g
    if abs(w) == 0:
        return a_main.copy()
    return a_main * (w / abs(w))


def _dual_inner(c, Ao, tol=1e-12, max_iter=20_000):
    """Solve ``min_{|u_l|<=1} ||c - Ao u||`` by accelerated projected gradient.

    By minimax duality ``min_{||g||<=1} -Re(c^H g) + sum |a_l^H g|`` equals
    ``-min_u ||c - Ao u||`` and ``g = d/||d||`` with ``d = c - Ao u*``.
    Iterates in Gram coordinates with the columns scaled to unit norm
    (``w_l = ||a_l|| u_l``, so the discs keep their separable form) and stops
    once the duality gap falls below ``tol``.
    """
    G = Ao.conj().T @ Ao
    b = Ao.conj().T @ c
    cc = np.real(np.vdot(c, c))
    D = np.sqrt(np.real(np.diag(G)))
    D = np.where(D > 0, D, 1.0)
    Gs = G / np.outer(D, D)
    bs = b / D
    step = 1 / np.linalg.eigvalsh(Gs)[-1]
    w = np.zeros(b.size, dtype=complex)
    y, t = w.copy(), 1.0
    best_u, best_val, gap = None, 0.0, np.inf
    for it in range(max_iter):
        grad = Gs @ y - bs
        w_new = y - step * grad
        mag = np.abs(w_new)
        w_new = np.where(mag > D, w_new * (D / np.maximum(mag, 1e-300)), w_new)
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        # adaptive restart keeps the iteration monotone near the optimum
        if np.real(np.vdot(grad, w_new - w)) > 0:
            y, t_new = w_new.copy(), 1.0
        else:
            y = w_new + ((t - 1) / t_new) * (w_new - w)
        w, t = w_new, t_new
        if it % 10 == 0 or it == max_iter - 1:
            u = w / D
            Gu = G @ u
            nd = np.sqrt(max(cc - 2 * np.real(np.vdot(b, u)) + np.real(np.vdot(u, Gu)), 0.0))
            if nd > 0:
                val = (-(cc - np.real(np.vdot(b, u))) + np.sum(np.abs(b - Gu))) / nd
                if val < best_val:
                    best_u, best_val = u, val
            gap = best_val + nd
            if gap <= tol:
                break
    if best_u is None:
        return np.zeros_like(c), 0.0, w / D, gap
    d = c - Ao @ best_u
    g = d / np.linalg.norm(d)
    return g, _surrogate(g, c, Ao), w / D, gap


def dc_inner_solve(a_main, a_others, g_init, tol: float = 1e-12, method: str = "dual",
                   iterations: int = 2000, step0: float = 1.0) -> np.ndarray:
    """One convexified step of the worst-case DC iteration.

    Linearizes ``-|g^H a_main|`` at ``g_init`` (coefficient
    ``c = a_main * (a_main^H g) / |a_main^H g|``, or ``a_main`` at the kink)
    and minimizes ``-Re(c^H g) + sum_l |g^H a_l|`` over the unit ball.
    The result is never worse than ``g_init`` on that surrogate.

    ``method="dual"`` solves the equivalent disc-constrained least-squares
    dual to a duality gap of ``tol``; ``method="subgradient"`` runs
    ``iterations`` projected subgradient steps of length ``step0/sqrt(n)``.
    """
    a_main = np.asarray(a_main, dtype=complex).reshape(-1)
    Ao = np.asarray(a_others, dtype=complex).reshape(a_main.size, -1) if np.size(a_others) \
        else np.zeros((a_main.size, 0), dtype=complex)
    g_init = np.asarray(g_init, dtype=complex).reshape(-1)
    if np.linalg.norm(g_init) > 1 + 1e-10:
        raise InvalidArgumentError("g_init must lie in the unit ball")
    c = _linearization(a_main, g_init)
    if Ao.shape[1] == 0:
        return c / np.linalg.norm(c)
    if method == "dual":
        g, _, _, _ = _dual_inner(c, Ao, tol=tol * max(1.0, np.linalg.norm(c)))
    elif method == "subgradient":
        g = _subgradient_inner(c, Ao, g_init, iterations, step0)
    else:
        raise InvalidArgumentError(f"unknown inner method {method!r}")
    if _surrogate(g, c, Ao) > _surrogate(g_init, c, Ao):
        return g_init.copy()
    return g


def _subgradient_inner(c, Ao, g0, iterations, step0):
    g = g0.copy()
    best, best_val = g.copy(), _surrogate(g, c, Ao)
    for n in range(1, iterations + 1):
        w = Ao.conj().T @ g
        mag = np.abs(w)
        coef = np.divide(w, mag, out=np.zeros_like(w), where=mag > 0)
        s = -c + Ao @ coef
        ns = np.linalg.norm(s)
        if ns == 0:
            break
        g = g - (step0 / np.sqrt(n)) * s / ns
        nrm = np.linalg.norm(g)
        if nrm > 1:
            g /= nrm
        val = _surrogate(g, c, Ao)
        if val < best_val:
            best, best_val = g.copy(), val
    return best


@dataclass
class WorstCaseOptions:
    max_outer_iters: int = 100
    restarts: int = 4
    tol: float = 1e-8
    inner: str = "dual"
    inner_tol: float = 1e-12
    seed: int = 0


def _starts(a, l, restarts, rng):
    N, L = a.shape
    starts = [("matched", a[:, l] / np.linalg.norm(a[:, l]))]
    if restarts > 1:
        g = dominant_eigpair(a @ a.conj().T).vector
        starts.append(("stationary", g))
    if restarts > 2:
        starts.append(("uniform", np.full(N, 1 / np.sqrt(N), dtype=complex)))
    while len(starts) < restarts:
        x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        starts.append(("random", x / np.linalg.norm(x)))
    return starts[:max(1, restarts)]


def _run_dc(a, l, g0, opts: WorstCaseOptions):
    a_main = a[:, l]
    others = np.delete(a, l, axis=1)
    g = g0
    trace = [_dc_objective(g, a_main, others)]
    converged = False
    c_prev = None
    for _ in range(opts.max_outer_iters):
        c = _linearization(a_main, g)
        if c_prev is not None and np.linalg.norm(c - c_prev) <= 1e-13 * np.linalg.norm(c):
            # same convex subproblem as the previous step: fixed point reached
            trace.append(trace[-1])
            converged = True
            break
        c_prev = c
        g_new = dc_inner_solve(a_main, others, g, tol=opts.inner_tol, method=opts.inner)
        trace.append(_dc_objective(g_new, a_main, others))
        g = g_new
        if trace[-1] - trace[-2] < opts.tol:
            converged = True
            break
    return g, trace, converged


def worst_case_bf(A, opts: WorstCaseOptions | None = None,
                  criterion: Criterion = Criterion.WORST_CASE, **kwargs) -> Beamformer:
    """Maximize the worst-case power over phases by DC programming.

    For each path ``l'`` the objective ``|g^H a_l'| - sum_{l != l'} |g^H a_l|``
    is increased monotonically by repeated convexification from several
    starting points; the best ``g`` over all runs is kept.
    """
    if opts is None:
        opts = WorstCaseOptions(**kwargs)
    a = as_signature_matrix(A)
    N, L = a.shape
    if L < 1:
        raise InvalidArgumentError("at least one path is required")
    if L == 1:
        nrm = np.linalg.norm(a[:, 0])
        if nrm == 0:
            raise DegenerateChannelError("signature is zero")
        g = canonical_phase(a[:, 0] / nrm)
        return Beamformer(g, criterion, float(nrm ** 2),
                          {"runs": [], "best_path": 0, "zero_worst_case": False})
    rng = np.random.default_rng(opts.seed)
    col_norms = np.linalg.norm(a, axis=0)
    runs = []
    best = None
    # strongest paths first; a run for l' cannot exceed ||a_l'||, so weaker
    # paths are skipped once the incumbent reaches that level
    for l in np.argsort(-col_norms, kind="stable"):
        l = int(l)
        if col_norms[l] == 0 or (best is not None and col_norms[l] ** 2 <= best[0]):
            continue
        for name, g0 in _starts(a, l, opts.restarts, rng):
            g, trace, converged = _run_dc(a, l, g0, opts)
            nrm = np.linalg.norm(g)
            if nrm > 0:
                g = g / nrm
            power = worst_case_power(g, a) if nrm > 0 else 0.0
            runs.append({"path": l, "start": name, "iterations": len(trace) - 1,
                         "converged": converged, "objective": trace[-1], "trace": trace})
            if nrm == 0:
                g = g0 / np.linalg.norm(g0)
            if best is None or power > best[0]:
                best = (power, g, l)
    if best is None:
        raise DegenerateChannelError("all signatures are zero")
    power, g, l_best = best
    diag = {"runs": runs, "best_path": l_best, "zero_worst_case": power <= 0}
    return Beamformer(canonical_phase(g), criterion, power, diag)
