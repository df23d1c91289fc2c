"""Seedable linear-algebra primitives used by the channel and metric code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

__all__ = [
    "NumericError",
    "SpectralDecomposition",
    "haar_unitary",
    "weak_coupling_unitary",
    "hermitian_spectrum",
    "regularized_inverse",
    "as_rng",
]


class NumericError(ArithmeticError):
    """Raised when a matrix operation receives non-finite input."""


def as_rng(seed) -> np.random.Generator:
    """Return a Generator for an int seed, SeedSequence or existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    return int(dim)


def _check_finite(M: np.ndarray) -> None:
    if not np.all(np.isfinite(M)):
        raise NumericError("matrix has non-finite entries")


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """Draw a Haar-distributed unitary matrix.

    QR decomposition of an i.i.d. complex Gaussian matrix, with the phases of
    ``diag(R)`` moved into ``Q`` so the result is exactly Haar (Mezzadri 2007).

    Parameters
    ----------
    dim : int
        Matrix dimension, ``dim >= 1``.
    seed : int, SeedSequence or Generator, optional
        Source of randomness. Integer seeds give bit-identical output.

    Returns
    -------
    ndarray, shape (dim, dim), complex128
    """
    dim = _check_dim(dim)
    rng = as_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def weak_coupling_unitary(dim: int, kappa: float, seed=None) -> np.ndarray:
    """Unitary ``exp(S)`` for a random skew-Hermitian generator ``S``.

    Every independent entry of ``S`` (upper triangle complex, diagonal purely
    imaginary) has standard deviation ``kappa``. ``kappa = 0`` gives the
    identity; large ``kappa`` approaches Haar statistics.
    """
    dim = _check_dim(dim)
    if not kappa >= 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa!r}")
    rng = as_rng(seed)
    if kappa == 0:
        return np.eye(dim, dtype=complex)
    upper = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    upper = np.triu(upper, k=1) * kappa
    diag = 1j * kappa * rng.standard_normal(dim)
    gen = upper - upper.conj().T + np.diag(diag)
    u = expm(gen)
    # expm accumulates ~1e-14 drift for large kappa; a polar-style cleanup keeps
    # the unitarity contract at 1e-12
    w, _, vh = np.linalg.svd(u)
    return w @ vh


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (descending) and column eigenvectors of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T


def hermitian_spectrum(M: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with descending eigenvalues.

    The input is symmetrized as ``(M + M^H) / 2`` before decomposition. A
    stack of matrices (``shape (..., n, n)``) is accepted and decomposed
    along the last two axes.
    """
    M = np.asarray(M, dtype=complex)
    _check_finite(M)
    herm = 0.5 * (M + np.swapaxes(M, -1, -2).conj())
    w, q = np.linalg.eigh(herm)
    return SpectralDecomposition(eigenvalues=w[..., ::-1], eigenvectors=q[..., ::-1])


def regularized_inverse(M: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Inverse of ``M`` that degrades gracefully near singularity.

    When the condition number permits (smallest singular value above
    ``eps * s_max``) the exact inverse is returned. Otherwise the Tikhonov
    solution ``(M^H M + eps^2 s_max^2 I)^-1 M^H`` is used. Stacks of
    matrices are handled element-wise along the leading axes.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    M = np.asarray(M, dtype=complex)
    _check_finite(M)
    u, s, vh = np.linalg.svd(M)
    s_max = s[..., :1]
    s_max = np.where(s_max == 0, 1.0, s_max)
    well = np.all(s > eps * s_max, axis=-1, keepdims=True)
    tik = s / (s**2 + (eps * s_max) ** 2)
    with np.errstate(divide="ignore"):
        exact = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    inv_s = np.where(well, exact, tik)
    vh_h = np.swapaxes(vh, -1, -2).conj()
    u_h = np.swapaxes(u, -1, -2).conj()
    return (vh_h * inv_s[..., None, :]) @ u_h
