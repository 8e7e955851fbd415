"""Array geometry, spatial signatures, phase models and channel realizations.

A user's narrowband channel is ``h = A v`` where the columns of ``A`` are the
per-path spatial signatures (gain magnitude times steering vector) and ``v``
stacks the unit-modulus per-path phase terms ``exp(j eps_l)``.  All
deterministic phase (gain argument, delay, Doppler) lives in the mean of
``eps_l``; the signatures carry only power and direction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidArgumentError, UnsupportedSamplingError

SPEED_OF_LIGHT = 299_792_458.0

_R_TOL = 1e-8


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions (meters, shape ``(N, 3)``) of the base-station array."""

    element_positions: np.ndarray
    reference_wavelength: float

    def __post_init__(self):
        pos = np.array(self.element_positions, dtype=float)
        if pos.ndim == 1 and pos.size == 3:
            pos = pos[None, :]
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise InvalidArgumentError("element_positions must have shape (N, 3) with N >= 1")
        if not np.all(np.isfinite(pos)):
            raise InvalidArgumentError("element positions must be finite")
        if np.unique(pos, axis=0).shape[0] != pos.shape[0]:
            raise InvalidArgumentError("two array elements share the same position")
        if not (np.isfinite(self.reference_wavelength) and self.reference_wavelength > 0):
            raise InvalidArgumentError("reference_wavelength must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "element_positions", pos)

    @property
    def num_elements(self) -> int:
        return self.element_positions.shape[0]

    @classmethod
    def rectangular(cls, n_horizontal: int, n_vertical: int, wavelength: float,
                    spacing: float | None = None) -> "ArrayGeometry":
        """Planar ``n_horizontal x n_vertical`` grid in the y-z plane, boresight along +x.

        :param spacing: element spacing in meters, half a wavelength by default
        """
        if n_horizontal < 1 or n_vertical < 1:
            raise InvalidArgumentError("array dimensions must be >= 1")
        if spacing is None:
            spacing = wavelength / 2
        if not spacing > 0:
            raise InvalidArgumentError("spacing must be positive")
        iy, iz = np.meshgrid(np.arange(n_horizontal), np.arange(n_vertical), indexing="ij")
        pos = np.zeros((n_horizontal * n_vertical, 3))
        pos[:, 1] = iy.ravel() * spacing
        pos[:, 2] = iz.ravel() * spacing
        return cls(pos, wavelength)

    @classmethod
    def linear(cls, n_elements: int, wavelength: float, spacing: float | None = None,
               axis: int = 0) -> "ArrayGeometry":
        """Uniform linear array along coordinate ``axis`` (0=x, 1=y, 2=z)."""
        if n_elements < 1:
            raise InvalidArgumentError("n_elements must be >= 1")
        if spacing is None:
            spacing = wavelength / 2
        pos = np.zeros((n_elements, 3))
        pos[:, axis] = np.arange(n_elements) * spacing
        return cls(pos, wavelength)


def direction_vector(azimuth: float, elevation: float) -> np.ndarray:
    """Unit vector ``(cos el cos az, cos el sin az, sin el)``."""
    ce = np.cos(elevation)
    return np.array([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)])


def steering_vector(geometry: ArrayGeometry, azimuth: float, elevation: float,
                    frequency: float) -> np.ndarray:
    """Far-field steering vector of isotropic elements.

    Entry ``n`` is ``exp(-j 2 pi f/c <u, p_n>)`` with ``u`` the direction of
    ``(azimuth, elevation)``; every entry has unit modulus.
    """
    if not (np.isfinite(azimuth) and np.isfinite(elevation)):
        raise InvalidArgumentError("angles must be finite")
    if not (np.isfinite(frequency) and frequency > 0):
        raise InvalidArgumentError("frequency must be positive")
    u = direction_vector(azimuth, elevation)
    phase = 2 * np.pi * frequency / SPEED_OF_LIGHT * (geometry.element_positions @ u)
    return np.exp(-1j * phase)


@dataclass(frozen=True)
class PathComponent:
    """One multipath component.

    ``nominal_phase`` is the argument of the complex path gain; the phase seen
    at frequency ``f`` and time ``t`` adds ``-2 pi f delay + 2 pi t doppler``
    (see :func:`path_mean_phases`).  ``phase_spread`` is the standard
    deviation of the residual phase uncertainty around that mean.
    """

    gain_magnitude: float
    delay: float = 0.0
    doppler: float = 0.0
    azimuth: float = 0.0
    elevation: float = 0.0
    nominal_phase: float = 0.0
    phase_spread: float = 0.0

    def __post_init__(self):
        vals = (self.gain_magnitude, self.delay, self.doppler, self.azimuth,
                self.elevation, self.nominal_phase, self.phase_spread)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidArgumentError("path parameters must be finite")
        if self.gain_magnitude < 0:
            raise InvalidArgumentError("gain_magnitude must be >= 0")
        if self.phase_spread < 0:
            raise InvalidArgumentError("phase_spread must be >= 0")


@dataclass(frozen=True)
class SignatureSet:
    """Spatial signatures of one user, columns of an ``N x L`` matrix.

    ``nominal_phases`` (optional) are the per-path mean phases at
    ``carrier_frequency``, so that ``signatures @ exp(1j * nominal_phases)``
    is the noiseless channel.
    """

    signatures: np.ndarray
    carrier_frequency: float
    nominal_phases: np.ndarray | None = None

    def __post_init__(self):
        a = np.array(self.signatures, dtype=complex)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[1] < 1 or a.shape[0] < 1:
            raise InvalidArgumentError("signatures must be an N x L matrix with L >= 1")
        if not np.all(np.isfinite(a)):
            raise InvalidArgumentError("signatures must be finite")
        if np.any(np.linalg.norm(a, axis=0) <= 0):
            raise InvalidArgumentError("every signature column must be nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "signatures", a)
        if self.nominal_phases is not None:
            mu = np.array(self.nominal_phases, dtype=float).reshape(-1)
            if mu.shape != (a.shape[1],):
                raise InvalidArgumentError("nominal_phases must have one entry per path")
            mu.setflags(write=False)
            object.__setattr__(self, "nominal_phases", mu)

    @property
    def num_antennas(self) -> int:
        return self.signatures.shape[0]

    @property
    def num_paths(self) -> int:
        return self.signatures.shape[1]

    def deflate(self, projector: np.ndarray) -> np.ndarray:
        """Projected signature matrix ``P A`` (may contain zero columns)."""
        return projector @ self.signatures


def as_signature_matrix(A) -> np.ndarray:
    """Accept a :class:`SignatureSet` or a raw matrix and return an ``N x L`` array."""
    if isinstance(A, SignatureSet):
        return A.signatures
    a = np.asarray(A, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidArgumentError("signature matrix must be 2-D")
    return a


def path_mean_phases(paths: Sequence[PathComponent], frequency: float,
                     time: float = 0.0) -> np.ndarray:
    """Mean phase of each path: ``arg(alpha) - 2 pi f tau + 2 pi t nu``."""
    return np.array([p.nominal_phase - 2 * np.pi * frequency * p.delay
                     + 2 * np.pi * time * p.doppler for p in paths])


def synthesize_signatures(paths: Sequence[PathComponent], geometry: ArrayGeometry,
                          frequency: float, time: float = 0.0) -> SignatureSet:
    """Build ``A`` with column ``l`` equal to ``|alpha_l| a(az_l, el_l, f)``."""
    if len(paths) == 0:
        raise InvalidArgumentError("at least one path is required")
    if not any(p.gain_magnitude > 0 for p in paths):
        raise InvalidArgumentError("at least one path must have positive gain")
    cols = [p.gain_magnitude * steering_vector(geometry, p.azimuth, p.elevation, frequency)
            for p in paths]
    return SignatureSet(np.stack(cols, axis=1), frequency,
                        path_mean_phases(paths, frequency, time))


# -- phase models ----------------------------------------------------------

@dataclass(frozen=True)
class IIDUniform:
    """Independent phases uniform on ``[0, 2 pi)``; ``R = I``."""

    num_paths: int

    def __post_init__(self):
        if self.num_paths < 1:
            raise InvalidArgumentError("num_paths must be >= 1")

    @property
    def size(self) -> int:
        return self.num_paths

    def correlation(self) -> np.ndarray:
        return np.eye(self.num_paths, dtype=complex)

    def sample(self, rng, size=None) -> np.ndarray:
        shape = (self.num_paths,) if size is None else (size, self.num_paths)
        return np.exp(1j * _as_rng(rng).uniform(0, 2 * np.pi, shape))


@dataclass(frozen=True)
class Known:
    """Perfectly known phases; ``R = v0 v0^H`` (rank one)."""

    phases: np.ndarray

    def __post_init__(self):
        mu = np.array(self.phases, dtype=float).reshape(-1)
        if mu.size < 1 or not np.all(np.isfinite(mu)):
            raise InvalidArgumentError("phases must be finite and non-empty")
        object.__setattr__(self, "phases", mu)

    @property
    def size(self) -> int:
        return self.phases.size

    def vector(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def correlation(self) -> np.ndarray:
        v0 = self.vector()
        return np.outer(v0, v0.conj())

    def sample(self, rng, size=None) -> np.ndarray:
        v0 = self.vector()
        return v0.copy() if size is None else np.tile(v0, (size, 1))


@dataclass(frozen=True)
class WrappedGaussian:
    """Independent Gaussian phase errors ``eps_l ~ N(means_l, spreads_l^2)``."""

    means: np.ndarray
    spreads: np.ndarray

    def __post_init__(self):
        mu = np.array(self.means, dtype=float).reshape(-1)
        sd = np.broadcast_to(np.array(self.spreads, dtype=float), mu.shape).copy()
        if mu.size < 1 or not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sd))):
            raise InvalidArgumentError("means and spreads must be finite and non-empty")
        if np.any(sd < 0):
            raise InvalidArgumentError("spreads must be >= 0")
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "spreads", sd)

    @property
    def size(self) -> int:
        return self.means.size

    def correlation(self) -> np.ndarray:
        # E[exp(j(e_l - e_m))] from the Gaussian characteristic function
        v0 = np.exp(1j * self.means)
        damp = np.exp(-self.spreads ** 2 / 2)
        R = np.outer(v0 * damp, (v0 * damp).conj())
        np.fill_diagonal(R, 1.0)
        return R

    def sample(self, rng, size=None) -> np.ndarray:
        shape = (self.size,) if size is None else (size, self.size)
        eps = self.means + self.spreads * _as_rng(rng).standard_normal(shape)
        return np.exp(1j * eps)


@dataclass(frozen=True)
class ExplicitR:
    """User-supplied phase correlation matrix (design only, no sampling)."""

    R: np.ndarray = field(repr=False)

    def __post_init__(self):
        R = np.array(self.R, dtype=complex)
        validate_correlation(R)
        object.__setattr__(self, "R", R)

    @property
    def size(self) -> int:
        return self.R.shape[0]

    def correlation(self) -> np.ndarray:
        return self.R.copy()

    def sample(self, rng, size=None):
        raise UnsupportedSamplingError("ExplicitR defines no joint phase distribution to sample")


PhaseModel = Union[IIDUniform, Known, WrappedGaussian, ExplicitR]


def validate_correlation(R: np.ndarray, tol: float = _R_TOL) -> None:
    """Raise unless ``R`` is square, Hermitian, PSD and unit-diagonal within ``tol``."""
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] < 1:
        raise InvalidArgumentError("R must be a non-empty square matrix")
    if not np.all(np.isfinite(R)):
        raise InvalidArgumentError("R must be finite")
    if np.max(np.abs(R - R.conj().T)) > tol:
        raise InvalidArgumentError("R is not Hermitian")
    if np.max(np.abs(np.diag(R) - 1)) > tol:
        raise InvalidArgumentError("R must have a unit diagonal")
    if np.linalg.eigvalsh((R + R.conj().T) / 2)[0] < -tol:
        raise InvalidArgumentError("R is not positive semidefinite")


def phase_correlation(model: PhaseModel, num_paths: int | None = None) -> np.ndarray:
    """Phase correlation matrix ``R = E[v v^H]`` of a phase model."""
    if num_paths is not None and model.size != num_paths:
        raise InvalidArgumentError(f"phase model has {model.size} paths, expected {num_paths}")
    return model.correlation()


def draw_phase_vector(model: PhaseModel, rng=None, size: int | None = None) -> np.ndarray:
    """Sample unit-modulus phase vector(s); shape ``(L,)`` or ``(size, L)``."""
    return model.sample(rng, size)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    v: np.ndarray


def realize_channel(A, v) -> ChannelRealization:
    """Instantaneous channel ``h = A v``."""
    a = as_signature_matrix(A)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"phase vector length {v.shape[0]} != number of paths {a.shape[1]}")
    return ChannelRealization(a @ v, v)
