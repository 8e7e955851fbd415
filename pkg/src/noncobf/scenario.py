"""Scenario configuration and a synthetic multipath generator.

The generator produces two qualitative regimes: ``nlos`` (many comparable
paths with an exponential power profile) and ``los`` (one dominant
line-of-sight path plus weaker scatter).  Every user draws from its own
seed stream, so user ``i`` is the same whatever the pool size.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .array_channel import (SPEED_OF_LIGHT, ArrayGeometry, IIDUniform, Known, PathComponent,
                            WrappedGaussian, path_mean_phases, synthesize_signatures)
from .errors import InvalidArgumentError
from .mu import MultiUserScenario, UserChannel


@dataclass
class ArrayConfig:
    n_horizontal: int = 16
    n_vertical: int = 8
    spacing_in_wavelengths: float = 0.5


@dataclass
class PhaseModelConfig:
    kind: str = "iid"  # iid | known | wrapped_gaussian
    spread: float = 0.0  # radians, wrapped_gaussian only


@dataclass
class ScenarioConfig:
    seed: int = 0
    num_users: int = 5
    paths_per_user: Any = 20  # int or [lo, hi]
    num_locations: int = 100
    num_selections: int = 100
    cell_radius: float = 200.0
    min_distance: float = 10.0
    bs_height: float = 20.0
    ue_height: float = 1.5
    array: ArrayConfig = field(default_factory=ArrayConfig)
    carrier_frequency: float = 2.0e9
    bandwidth: float = 10.0e6
    num_subcarriers: int = 51
    los_mode: str = "nlos"
    rician_factor_db: float = 10.0
    power_decay_db: float = 20.0
    max_delay: float = 1.0e-6
    elevation_spread: float = np.pi / 4
    snr_db: Any = 10.0  # float or per-user list
    phase_model: PhaseModelConfig = field(default_factory=PhaseModelConfig)
    recompute_per_frequency: bool = False
    users: list | None = None  # explicit [{"paths": [{...PathComponent fields}]}]

    def __post_init__(self):
        if isinstance(self.array, dict):
            self.array = _from_dict(ArrayConfig, self.array, "array")
        if isinstance(self.phase_model, dict):
            self.phase_model = _from_dict(PhaseModelConfig, self.phase_model, "phase_model")
        self.validate()

    def validate(self):
        def bad(msg):
            raise InvalidArgumentError(f"invalid config: {msg}")
        if self.num_users < 1:
            bad("num_users must be >= 1")
        lo, hi = self.path_range
        if lo < 1 or hi < lo:
            bad("paths_per_user must be >= 1")
        if self.bandwidth <= 0:
            bad("bandwidth must be positive")
        if self.num_subcarriers < 1:
            bad("num_subcarriers must be >= 1")
        if self.carrier_frequency <= 0:
            bad("carrier_frequency must be positive")
        if self.cell_radius <= self.min_distance or self.min_distance < 0:
            bad("need 0 <= min_distance < cell_radius")
        if self.los_mode not in ("los", "nlos"):
            bad("los_mode must be 'los' or 'nlos'")
        if self.array.n_horizontal < 1 or self.array.n_vertical < 1 \
                or self.array.spacing_in_wavelengths <= 0:
            bad("array dimensions and spacing must be positive")
        if self.phase_model.kind not in ("iid", "known", "wrapped_gaussian"):
            bad("phase_model.kind must be iid, known or wrapped_gaussian")
        if self.phase_model.spread < 0:
            bad("phase_model.spread must be >= 0")
        if self.num_locations < 1 or self.num_selections < 1:
            bad("num_locations and num_selections must be >= 1")
        if self.max_delay < 0:
            bad("max_delay must be >= 0")
        snr = np.atleast_1d(np.asarray(self.snr_db, dtype=float))
        if snr.size not in (1, self.num_users) or not np.all(np.isfinite(snr)):
            bad("snr_db must be a number or one value per user")
        if self.users is not None:
            if not isinstance(self.users, list) or not self.users:
                bad("users must be a non-empty list")
            if len(self.users) != self.num_users:
                bad("num_users must equal the number of explicit users")

    @property
    def path_range(self) -> tuple[int, int]:
        L = self.paths_per_user
        if isinstance(L, (list, tuple)):
            if len(L) != 2:
                raise InvalidArgumentError("paths_per_user range must be [lo, hi]")
            return int(L[0]), int(L[1])
        return int(L), int(L)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def geometry(self) -> ArrayGeometry:
        lam = self.wavelength
        return ArrayGeometry.rectangular(self.array.n_horizontal, self.array.n_vertical, lam,
                                         self.array.spacing_in_wavelengths * lam)

    def frequencies(self, n_points: int | None = None) -> np.ndarray:
        n = self.num_subcarriers if n_points is None else n_points
        if n == 1:
            return np.array([self.carrier_frequency])
        half = self.bandwidth / 2
        return np.linspace(self.carrier_frequency - half, self.carrier_frequency + half, n)

    def noise_and_powers(self, num_users: int) -> tuple[float, np.ndarray]:
        """Noise-normalized powers: ``sigma^2 = 1`` and ``p_k = 10^(snr_k / 10)``."""
        snr = np.atleast_1d(np.asarray(self.snr_db, dtype=float))
        if snr.size == 1:
            snr = np.full(num_users, snr[0])
        elif snr.size != num_users:
            raise InvalidArgumentError(f"snr_db has {snr.size} entries for {num_users} users")
        return 1.0, 10 ** (snr / 10)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        return _from_dict(cls, data, "config")

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _from_dict(cls, data, where):
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"{where} must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise InvalidArgumentError(f"unknown {where} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise InvalidArgumentError(f"invalid {where}: {exc}") from exc


@dataclass
class SyntheticUser:
    paths: tuple[PathComponent, ...]
    position: np.ndarray
    phase_offsets: np.ndarray  # BS-side error of the believed mean phases


@dataclass
class SyntheticScenario:
    """Path-level users plus geometry; realizes channels at any frequency."""

    config: ScenarioConfig
    geometry: ArrayGeometry
    users: list[SyntheticUser]

    @property
    def num_users(self) -> int:
        return len(self.users)

    def subset(self, indices: Sequence[int]) -> "SyntheticScenario":
        return SyntheticScenario(self.config, self.geometry, [self.users[i] for i in indices])

    def signatures(self, k: int, frequency: float):
        return synthesize_signatures(self.users[k].paths, self.geometry, frequency)

    def true_phases(self, k: int, frequency: float) -> np.ndarray:
        return np.exp(1j * path_mean_phases(self.users[k].paths, frequency))

    def channel(self, k: int, frequency: float) -> np.ndarray:
        """Actual channel ``h_k(f) = A_k(f) v_k(f)`` of the generated paths."""
        return self.signatures(k, frequency).signatures @ self.true_phases(k, frequency)

    def phase_model(self, k: int, frequency: float):
        user = self.users[k]
        kind = self.config.phase_model.kind
        L = len(user.paths)
        if kind == "iid":
            return IIDUniform(L)
        mu = path_mean_phases(user.paths, frequency) + user.phase_offsets
        if kind == "known":
            return Known(mu)
        return WrappedGaussian(mu, [p.phase_spread for p in user.paths])

    def at_frequency(self, frequency: float | None = None) -> MultiUserScenario:
        f = self.config.carrier_frequency if frequency is None else frequency
        users = tuple(UserChannel(self.signatures(k, f), self.phase_model(k, f))
                      for k in range(self.num_users))
        noise, powers = self.config.noise_and_powers(self.num_users)
        return MultiUserScenario(users, powers, noise)


def _power_profile(n: int, decay_db: float) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    return 10 ** (-decay_db / 10 * np.arange(n) / (n - 1))


def _draw_user(cfg: ScenarioConfig, rng: np.random.Generator) -> SyntheticUser:
    lo, hi = cfg.path_range
    L = int(rng.integers(lo, hi + 1))
    # uniform in the annulus [min_distance, cell_radius]
    r = np.sqrt(rng.uniform(cfg.min_distance ** 2, cfg.cell_radius ** 2))
    psi = rng.uniform(-np.pi, np.pi)
    position = np.array([r * np.cos(psi), r * np.sin(psi), cfg.ue_height])
    el_los = -np.arctan2(cfg.bs_height - cfg.ue_height, r)

    azimuth = rng.uniform(-np.pi, np.pi, L)
    elevation = rng.uniform(-cfg.elevation_spread, cfg.elevation_spread, L)
    delays = rng.uniform(0, cfg.max_delay, L)
    phases = rng.uniform(0, 2 * np.pi, L)
    if cfg.los_mode == "los":
        kr = 10 ** (cfg.rician_factor_db / 10)
        power = np.empty(L)
        power[0] = kr / (1 + kr) if L > 1 else 1.0
        if L > 1:
            prof = _power_profile(L - 1, cfg.power_decay_db)
            power[1:] = prof / prof.sum() / (1 + kr)
        azimuth[0], elevation[0] = psi, el_los
    else:
        power = _power_profile(L, cfg.power_decay_db)
    gains = np.sqrt(power / power.sum())
    spread = cfg.phase_model.spread if cfg.phase_model.kind == "wrapped_gaussian" else 0.0
    offsets = spread * rng.standard_normal(L) if spread > 0 else np.zeros(L)
    paths = tuple(PathComponent(float(gains[l]), float(delays[l]), 0.0, float(azimuth[l]),
                                float(elevation[l]), float(phases[l]), spread)
                  for l in range(L))
    return SyntheticUser(paths, position, offsets)


def _explicit_user(entry: dict, cfg: ScenarioConfig) -> SyntheticUser:
    if not isinstance(entry, dict) or "paths" not in entry:
        raise InvalidArgumentError("explicit user needs a 'paths' list")
    try:
        paths = tuple(PathComponent(**p) for p in entry["paths"])
    except TypeError as exc:
        raise InvalidArgumentError(f"invalid path: {exc}") from exc
    if not paths:
        raise InvalidArgumentError("explicit user needs at least one path")
    pos = np.asarray(entry.get("position", [0.0, 0.0, cfg.ue_height]), dtype=float)
    return SyntheticUser(paths, pos, np.zeros(len(paths)))


def generate_user_pool(config: ScenarioConfig, count: int) -> SyntheticScenario:
    """``count`` independent user locations (explicit users when configured)."""
    geometry = config.geometry()
    if config.users is not None:
        users = [_explicit_user(u, config) for u in config.users]
        return SyntheticScenario(config, geometry, users[:count])
    streams = np.random.SeedSequence(config.seed).spawn(count)
    users = [_draw_user(config, np.random.default_rng(s)) for s in streams]
    return SyntheticScenario(config, geometry, users)


def generate_scenario(config: ScenarioConfig) -> SyntheticScenario:
    """The first ``num_users`` users of the seeded pool."""
    return generate_user_pool(config, config.num_users)
