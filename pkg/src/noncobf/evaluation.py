"""Monte-Carlo and deterministic evaluation of beamformers.

Gains are linear powers ``|g^H h|^2``; conversion to dB maps zero power to
``-inf`` instead of failing, because an unavoidable zero worst case is a
legitimate outcome.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .array_channel import PhaseModel, as_signature_matrix, draw_phase_vector, phase_correlation
from .errors import InfeasibleZFError, InvalidArgumentError
from .mu import MultiUserScenario, design_all
from .scenario import SyntheticScenario
from .su import (Beamformer, WorstCaseOptions, stationary_bf, uniform_bf,
                 worst_case_bf, worst_case_power)

SU_DESIGNS = ("coherent", "uniform", "stationary", "worstcase")
MU_DESIGNS = ("coherent", "uniform", "stationary", "worstcase",
              "zf-stationary", "zf-worstcase", "rzf")


def to_db(x):
    """``10 log10(x)`` with ``-inf`` for zero power."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10 * np.log10(np.maximum(x, 0.0))
    return float(out) if out.ndim == 0 else out


def num_threads() -> int:
    try:
        n = int(os.environ.get("NONCOBF_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def ordered_map(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    """Apply ``fn`` to ``items`` (possibly in parallel); results keep input order."""
    threads = num_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- empirical CDF --------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalCDF:
    values: np.ndarray
    probabilities: np.ndarray

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.values, q))

    def evaluate(self, x) -> np.ndarray:
        """Fraction of samples ``<= x``."""
        return np.searchsorted(self.values, x, side="right") / self.values.size


def empirical_cdf(samples: Iterable[float]) -> EmpiricalCDF:
    """Sorted samples with probabilities ``i / n``, ``i = 1..n``."""
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float)
    x = x.reshape(-1)
    if x.size == 0:
        raise InvalidArgumentError("empirical_cdf needs at least one sample")
    if np.any(np.isnan(x)) or np.any(x == np.inf):
        raise InvalidArgumentError("samples must be finite (or -inf for zero power in dB)")
    x = np.sort(x, kind="stable")
    return EmpiricalCDF(x, np.arange(1, x.size + 1) / x.size)


# -- single user ----------------------------------------------------------

@dataclass
class SURecord:
    stationary_gain: float
    worst_case_gain: float | None
    samples: np.ndarray = field(repr=False)

    @property
    def mean_gain(self) -> float:
        return float(np.mean(self.samples)) if self.samples.size else float("nan")


def evaluate_su(g, A, model: PhaseModel, num_draws: int = 0, rng=None) -> SURecord:
    """Analytic stationary and worst-case power plus ``num_draws`` sampled powers."""
    if isinstance(g, Beamformer):
        g = g.g
    g = np.asarray(g, dtype=complex).reshape(-1)
    a = as_signature_matrix(A)
    if g.size != a.shape[0]:
        raise InvalidArgumentError("beamformer and signatures disagree on N")
    R = phase_correlation(model, a.shape[1])
    w = (a.conj().T @ g).conj()  # w_l = g^H a_l
    stat = float(np.real(np.vdot(w.conj(), R @ w.conj())))
    samples = np.empty(0)
    if num_draws > 0:
        V = draw_phase_vector(model, rng, num_draws)
        samples = np.abs(V @ w) ** 2
    return SURecord(stat, worst_case_power(g, a), samples)


def evaluate_coherent_su(A, model: PhaseModel, num_draws: int = 0, rng=None) -> SURecord:
    """Coherent baseline: per-draw ``||A v||^2``; stationary value ``tr(A R A^H)``."""
    a = as_signature_matrix(A)
    R = phase_correlation(model, a.shape[1])
    stat = float(np.real(np.trace(a @ R @ a.conj().T)))
    samples = np.empty(0)
    if num_draws > 0:
        V = draw_phase_vector(model, rng, num_draws)
        samples = np.sum(np.abs(V @ a.T) ** 2, axis=1)
    return SURecord(stat, None, samples)


def design_su(name: str, A, R, opts: WorstCaseOptions | None = None) -> Beamformer:
    """Fixed (phase-agnostic) single-user design by name."""
    a = as_signature_matrix(A)
    if name == "uniform":
        return uniform_bf(a.shape[0])
    if name == "stationary":
        return stationary_bf(a, R)
    if name == "worstcase":
        return worst_case_bf(a, opts)
    raise InvalidArgumentError(f"{name!r} is not a fixed single-user design")


# -- multi user -----------------------------------------------------------

@dataclass
class MURecord:
    user: int
    stationary_sinr: float
    sinr: np.ndarray = field(repr=False)
    interference: np.ndarray = field(repr=False)
    signal: np.ndarray = field(repr=False)


def _sinr_from_gains(Y: np.ndarray, powers: np.ndarray, noise: float):
    """``Y[j, k, i] = |g_j^H h_{k,i}|^2``; returns signal, interference, SINR per (k, i)."""
    K = Y.shape[0]
    P = powers[:, None, None] * Y
    signal = P[np.arange(K), np.arange(K)]
    interference = P.sum(axis=0) - signal
    return signal, interference, signal / (interference + noise)


def evaluate_mu(scenario: MultiUserScenario, beamformers: Sequence, num_draws: int,
                rng=None) -> list[MURecord]:
    """Per-draw SINR with independent phase draws per user, plus analytic stationary SINR."""
    K = scenario.num_users
    if len(beamformers) != K:
        raise InvalidArgumentError("need one beamformer per user")
    G = np.stack([np.asarray(b.g if isinstance(b, Beamformer) else b, dtype=complex).reshape(-1)
                  for b in beamformers], axis=1)
    if G.shape[0] != scenario.num_antennas:
        raise InvalidArgumentError("beamformer length does not match the array")
    streams = np.random.SeedSequence(np.random.default_rng(rng).integers(2 ** 63)).spawn(K)
    p, s2 = scenario.symbol_powers, scenario.noise_variance
    Y = np.empty((K, K, num_draws))
    stat = np.empty((K, K))
    for k, user in enumerate(scenario.users):
        A = user.signatures.signatures
        W = G.conj().T @ A  # W[j, l] = g_j^H a_{k,l}
        stat[:, k] = np.real(np.einsum("jl,lm,jm->j", W, user.correlation, W.conj()))
        if num_draws:
            V = draw_phase_vector(user.phase_model, np.random.default_rng(streams[k]), num_draws)
            Y[:, k, :] = np.abs(W @ V.T) ** 2
    sig_s, int_s, sinr_s = _sinr_from_gains(stat[:, :, None], p, s2)
    out = []
    if num_draws:
        sig, intf, sinr = _sinr_from_gains(Y, p, s2)
    for k in range(K):
        if num_draws:
            out.append(MURecord(k, float(sinr_s[k, 0]), sinr[k], intf[k], sig[k]))
        else:
            e = np.empty(0)
            out.append(MURecord(k, float(sinr_s[k, 0]), e, e, e))
    return out


def coherent_slnr_beamformers(H: np.ndarray, rho) -> np.ndarray:
    """Per-realization coherent SLNR (regularized ZF) weights; ``H`` is ``N x K``."""
    N, K = H.shape
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (K,))
    G = np.empty_like(H)
    for k in range(K):
        others = np.delete(H, k, axis=1)
        den = others @ others.conj().T + rho[k] * np.eye(N)
        g = np.linalg.solve(den, H[:, k])
        G[:, k] = g / np.linalg.norm(g)
    return G


def mu_sinr(H: np.ndarray, G: np.ndarray, powers, noise: float) -> np.ndarray:
    """SINR of each user for channels ``H`` and weights ``G`` (both ``N x K``)."""
    Y = np.abs(G.conj().T @ H) ** 2  # Y[j, k] = |g_j^H h_k|^2
    _, _, sinr = _sinr_from_gains(Y[:, :, None], np.asarray(powers, float), noise)
    return sinr[:, 0]


# -- frequency sweeps and studies -----------------------------------------

def _fixed_designs(scenario: SyntheticScenario, k: int, f: float, names, opts):
    A = scenario.signatures(k, f)
    R = phase_correlation(scenario.phase_model(k, f))
    out = {}
    for name in names:
        if name != "coherent":
            out[name] = design_su(name, A, R, opts)
    return out


def su_gains(scenario: SyntheticScenario, k: int, designs: Sequence[str],
             frequencies: np.ndarray, opts: WorstCaseOptions | None = None,
             recompute: bool | None = None) -> dict[str, np.ndarray]:
    """Linear gain ``|g^H h_k(f)|^2`` of each design at each frequency.

    Non-coherent designs are built once at the carrier frequency unless
    ``recompute`` (default: ``config.recompute_per_frequency``) is set.
    """
    if recompute is None:
        recompute = scenario.config.recompute_per_frequency
    fc = scenario.config.carrier_frequency
    fixed = None if recompute else _fixed_designs(scenario, k, fc, designs, opts)
    out = {d: np.empty(len(frequencies)) for d in designs}
    for i, f in enumerate(frequencies):
        h = scenario.channel(k, f)
        bfs = _fixed_designs(scenario, k, f, designs, opts) if recompute else fixed
        for d in designs:
            if d == "coherent":
                out[d][i] = np.real(np.vdot(h, h))
            else:
                out[d][i] = abs(np.vdot(bfs[d].g, h)) ** 2
    return out


def frequency_sweep(scenario: SyntheticScenario, designs: Sequence[str], n_points: int,
                    user: int = 0, opts: WorstCaseOptions | None = None,
                    recompute: bool | None = None) -> list[tuple[str, float, float]]:
    """Rows ``(design, frequency_hz, gain_db)`` across the configured band."""
    if n_points < 2:
        raise InvalidArgumentError("n_points must be >= 2")
    for d in designs:
        if d not in SU_DESIGNS:
            raise InvalidArgumentError(f"unknown single-user design {d!r}")
    freqs = scenario.config.frequencies(n_points)
    gains = su_gains(scenario, user, designs, freqs, opts, recompute)
    return [(d, float(f), to_db(gains[d][i])) for d in designs for i, f in enumerate(freqs)]


def mu_design_at(scenario: SyntheticScenario, name: str, frequency: float,
                 opts: WorstCaseOptions | None = None) -> np.ndarray:
    """``N x K`` weights of a fixed multi-user design built from statistics at ``frequency``."""
    mus = scenario.at_frequency(frequency)
    if name == "uniform":
        g = uniform_bf(mus.num_antennas).g
        return np.tile(g[:, None], (1, mus.num_users))
    return np.stack([b.g for b in design_all(mus, name, opts)], axis=1)


def mu_sinrs(scenario: SyntheticScenario, designs: Sequence[str], frequencies: np.ndarray,
             opts: WorstCaseOptions | None = None,
             recompute: bool | None = None) -> dict[str, np.ndarray]:
    """SINR (linear) per design, shape ``(n_freq, K)``, on the actual channels."""
    if recompute is None:
        recompute = scenario.config.recompute_per_frequency
    fc = scenario.config.carrier_frequency
    K = scenario.num_users
    noise, powers = scenario.config.noise_and_powers(K)
    fixed = {} if recompute else {d: mu_design_at(scenario, d, fc, opts)
                                  for d in designs if d != "coherent"}
    out = {d: np.empty((len(frequencies), K)) for d in designs}
    for i, f in enumerate(frequencies):
        H = np.stack([scenario.channel(k, f) for k in range(K)], axis=1)
        for d in designs:
            if d == "coherent":
                G = coherent_slnr_beamformers(H, noise / powers)
            elif recompute:
                G = mu_design_at(scenario, d, f, opts)
            else:
                G = fixed[d]
            out[d][i] = mu_sinr(H, G, powers, noise)
    return out


@dataclass
class StudyResult:
    """Samples of one metric per design: ``rows[design] = [(user, linear_value), ...]``."""

    metric: str
    rows: dict[str, list[tuple[int, float]]]
    infeasible: list[dict] = field(default_factory=list)

    def cdf(self, design: str) -> EmpiricalCDF:
        return empirical_cdf(to_db(np.array([v for _, v in self.rows[design]])))

    def median_db(self, design: str) -> float:
        return float(np.median(to_db(np.array([v for _, v in self.rows[design]]))))


def su_cdf_study(pool: SyntheticScenario, designs: Sequence[str], n_freq: int,
                 opts: WorstCaseOptions | None = None, threads: int | None = None) -> StudyResult:
    """Gain samples over every location and frequency point."""
    freqs = pool.config.frequencies(n_freq)

    def work(k):
        return su_gains(pool, k, designs, freqs, opts)

    results = ordered_map(work, list(range(pool.num_users)), threads)
    rows = {d: [(k, float(v)) for k, res in enumerate(results) for v in res[d]] for d in designs}
    return StudyResult("gain", rows)


def select_users(num_locations: int, num_users: int, num_selections: int, seed: int) -> list:
    """Seeded random user subsets (without replacement inside a subset)."""
    if num_users > num_locations:
        raise InvalidArgumentError("num_users exceeds num_locations")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    return [sorted(rng.choice(num_locations, num_users, replace=False).tolist())
            for _ in range(num_selections)]


def mu_cdf_study(pool: SyntheticScenario, designs: Sequence[str], n_freq: int,
                 opts: WorstCaseOptions | None = None, threads: int | None = None) -> StudyResult:
    """SINR samples over random user selections, users and frequency points.

    Selections where a ZF design is infeasible are skipped for that design
    and listed in ``infeasible``.
    """
    cfg = pool.config
    freqs = cfg.frequencies(n_freq)
    selections = select_users(pool.num_users, cfg.num_users, cfg.num_selections, cfg.seed)

    def work(sel):
        sub = pool.subset(sel)
        res, bad = {}, []
        for d in designs:
            try:
                res[d] = mu_sinrs(sub, [d], freqs, opts)[d]
            except InfeasibleZFError as exc:
                bad.append({"design": d, "selection": sel, "user": sel[exc.user]})
        return res, bad

    results = ordered_map(work, selections, threads)
    rows = {d: [] for d in designs}
    infeasible = []
    for sel, (res, bad) in zip(selections, results):
        infeasible.extend(bad)
        for d, arr in res.items():
            for i in range(arr.shape[0]):
                for j, loc in enumerate(sel):
                    rows[d].append((loc, float(arr[i, j])))
    return StudyResult("sinr", rows, infeasible)
