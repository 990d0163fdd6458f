"""Deterministic numerical primitives.

Everything stochastic in the toolkit flows through :class:`RngStream`, a
counter-based Philox generator keyed by (master seed, stream index): the same
key always reproduces the same draws, bit for bit, independent of call order,
so experiment replicates can be regenerated or reordered freely.

The linear-algebra helpers wrap LAPACK (via numpy) with the conventions the
rest of the package relies on: descending eigenvalue order, a deterministic
SVD sign convention, and clamped positive-semidefinite square roots.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SYM_TOL",
    "RngStream",
    "SvdTriplet",
    "check_symmetric",
    "sym_eig",
    "psd_sqrt",
    "svd_full",
    "haar_orthogonal",
    "random_orthogonal",
]

# Relative Frobenius asymmetry above which a matrix is rejected as not
# symmetric.
SYM_TOL = 1e-10

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream: Philox keyed by (master_seed, index).

    Streams with distinct (seed, index) pairs are statistically independent;
    equal pairs reproduce draws exactly. ``generator()`` returns a fresh
    generator positioned at the start of the stream every time.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if self.master_seed < 0 or self.stream_index < 0:
            raise ValueError("seed and stream index must be nonnegative")

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.master_seed & _MASK64, self.stream_index & _MASK64],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SvdTriplet:
    """SVD A = U diag(s) V^T with s descending and deterministic signs."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def _as_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must have finite entries")
    return a


def check_symmetric(s: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    """Validate symmetry up to relative Frobenius tolerance ``tol``."""
    s = _as_square(s, "matrix")
    scale = np.linalg.norm(s)
    if scale > 0.0:
        asym = np.linalg.norm(s - s.T) / scale
        if asym > tol:
            raise ValueError(f"matrix is not symmetric (relative asymmetry {asym:.3e})")
    return s


def sym_eig(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns ``(w, v)`` with ``w`` decreasing and ``v``'s columns the matching
    orthonormal eigenvectors (each determined up to sign).
    """
    s = check_symmetric(s)
    w, v = np.linalg.eigh(s)
    return w[::-1].copy(), v[:, ::-1].copy()


def psd_sqrt(s: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root, clamping small negative eigenvalues.

    Eigenvalues below ``-tau`` with ``tau = p * ulp(max |eig|)`` raise; those
    in ``[-tau, 0)`` are treated as roundoff and clamped to zero.
    """
    s = check_symmetric(s)
    w, v = np.linalg.eigh(s)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    tau = s.shape[0] * np.spacing(scale) if scale > 0.0 else 0.0
    if w[0] < -tau:
        raise ValueError(f"matrix is indefinite (eigenvalue {w[0]:.3e} < -{tau:.3e})")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return (root + root.T) / 2.0


def svd_full(a: np.ndarray) -> SvdTriplet:
    """Full SVD of a square matrix with a deterministic sign convention.

    Singular values come back descending. For each triplet the entry of u
    with the largest magnitude is made positive (ties broken by lowest row
    index, which argmax already does), flipping u and v together so
    ``u s v^T`` still reconstructs the input.
    """
    a = _as_square(a, "matrix")
    u, s, vh = np.linalg.svd(a)
    v = vh.T.copy()
    u = u.copy()
    for j in range(s.size):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0.0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    return SvdTriplet(u=u, s=s, v=v)


def haar_orthogonal(p: int, generator: np.random.Generator) -> np.ndarray:
    """Haar-distributed p x p orthogonal matrix from a positioned generator.

    QR of a standard Gaussian matrix with the R diagonal forced positive,
    which makes the factorization unique and the law exactly Haar.  Advances
    ``generator``, so callers can keep drawing from the same stream.
    """
    if p < 1:
        raise ValueError("dimension must be positive")
    g = generator.standard_normal((p, p))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r).copy()
    d[d == 0.0] = 1.0
    return q * np.sign(d)


def random_orthogonal(p: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed p x p orthogonal matrix keyed by an RngStream."""
    return haar_orthogonal(p, rng.generator())
