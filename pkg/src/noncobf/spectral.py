"""Complex linear-algebra kernels: dominant eigenpairs and null-space projectors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .errors import InvalidArgumentError

DENSE_EIG_MAX_N = 256
RANK_TOL = 1e-10


class EigPair(NamedTuple):
    value: float
    vector: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector ``P`` and the dimension it removes."""

    P: np.ndarray
    rank_deflated: int

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    def __matmul__(self, other):
        return self.P @ other


def as_hermitian(M, rtol: float = 1e-10) -> np.ndarray:
    """Validate Hermitian symmetry and return the exactly symmetrized matrix."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError("matrix must be square")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("matrix must be finite")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.conj().T), initial=0.0) > rtol * scale:
        raise InvalidArgumentError("matrix is not Hermitian")
    return (M + M.conj().T) / 2


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its first largest-modulus entry is real and non-negative."""
    i = int(np.argmax(np.abs(v)))
    if v[i] == 0:
        return v
    out = v * (np.abs(v[i]) / v[i])
    out[i] = np.abs(v[i])
    return out


def _power_iteration(M: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000):
    n = M.shape[0]
    # shift by the Gershgorin bound so the spectrum is non-negative
    shift = max(0.0, -np.min(np.real(np.diag(M)) - (np.sum(np.abs(M), axis=1) - np.abs(np.diag(M)))))
    B = M + shift * np.eye(n)
    x = np.ones(n, dtype=complex) / np.sqrt(n) + 1e-3 * np.exp(1j * np.arange(n))
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = B @ x
        lam = np.real(np.vdot(x, y))
        ny = np.linalg.norm(y)
        if ny == 0:
            break
        x_new = y / ny
        if np.linalg.norm(y - lam * x) <= tol * max(abs(lam), 1e-300):
            x = x_new
            break
        x = x_new
    lam = np.real(np.vdot(x, M @ x))
    return lam, x


def dominant_eigpair(M, method: str = "auto") -> EigPair:
    """Largest eigenvalue and unit eigenvector of a Hermitian PSD matrix.

    Dense decomposition for ``N <= 256``, shifted power iteration otherwise
    (``method`` may force ``"dense"`` or ``"power"``).  The eigenvector phase
    is fixed by :func:`canonical_phase`.  The zero matrix returns ``(0, e1)``
    flagged degenerate.
    """
    M = as_hermitian(M)
    n = M.shape[0]
    if n == 0:
        raise InvalidArgumentError("empty matrix")
    scale = np.max(np.abs(M))
    if scale == 0:
        e1 = np.zeros(n, dtype=complex)
        e1[0] = 1
        return EigPair(0.0, e1, True)
    if method == "auto":
        method = "dense" if n <= DENSE_EIG_MAX_N else "power"
    if method == "dense":
        w, V = np.linalg.eigh(M)
        lam, v = float(w[-1]), V[:, -1]
    elif method == "power":
        lam, v = _power_iteration(M)
        lam = float(lam)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    v = canonical_phase(v / np.linalg.norm(v))
    return EigPair(lam, v, lam <= 0)


def null_space_projector(B, tol: float = RANK_TOL, dim: int | None = None) -> Projector:
    """Orthogonal projector onto the orthogonal complement of ``range(B)``.

    Singular values ``<= tol * sigma_max`` count as zero.  An ``N x 0`` input
    (or ``B=None`` with ``dim``) gives the identity.
    """
    if B is None:
        if dim is None:
            raise InvalidArgumentError("dim required when B is None")
        return Projector(np.eye(dim, dtype=complex), 0)
    B = np.asarray(B, dtype=complex)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] < 1:
        raise InvalidArgumentError("B must be an N x M matrix with N >= 1")
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    n = B.shape[0]
    if B.shape[1] == 0 or not np.any(B):
        return Projector(np.eye(n, dtype=complex), 0)
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    r = int(np.sum(s > tol * s[0]))
    U1 = U[:, :r]
    P = np.eye(n, dtype=complex) - U1 @ U1.conj().T
    return Projector((P + P.conj().T) / 2, r)


def range_basis(B, tol: float = RANK_TOL):
    """Left singular vectors and singular values of the numerical range of ``B``."""
    U, s, _ = np.linalg.svd(np.asarray(B, dtype=complex), full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0], s[:0]
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r], s[:r]


def generalized_dominant_eigvec(num, den) -> np.ndarray:
    """Unit vector maximizing ``(g^H num g) / (g^H den g)``.

    ``den`` must be Hermitian positive definite; the pair is reduced to a
    standard problem through the Cholesky factor ``den = C C^H``.
    """
    num = as_hermitian(num)
    den = as_hermitian(den)
    if num.shape != den.shape:
        raise InvalidArgumentError("num and den must have the same shape")
    w = np.linalg.eigvalsh(den)
    if not (w[-1] > 0 and w[0] >= 1e-12 * w[-1]):
        raise InvalidArgumentError("denominator matrix is not positive definite")
    C = linalg.cholesky(den, lower=True)
    X = linalg.solve_triangular(C, num, lower=True)
    W = linalg.solve_triangular(C, X.conj().T, lower=True)  # C^-1 num C^-H
    y = dominant_eigpair((W + W.conj().T) / 2, method="dense").vector
    g = linalg.solve_triangular(C.conj().T, y, lower=False)
    return canonical_phase(g / np.linalg.norm(g))


def rayleigh_quotient(M: np.ndarray, g: np.ndarray, den: np.ndarray | None = None) -> float:
    num = np.real(np.vdot(g, M @ g))
    if den is None:
        return num / np.real(np.vdot(g, g))
    return num / np.real(np.vdot(g, den @ g))
