"""Covariance eigenstructure estimators.

Two fits of the same population eigenstructure from mean-zero data:

* classical PCA, the eigendecomposition of the sample second-moment matrix;
* product PCA, which splits the sample into two halves, multiplies the PSD
  square roots of the two half-sample covariances, and reads eigenvalue and
  eigenvector estimates off the SVD of that product.  Left and right singular
  vectors estimate the same population eigenvector, so they are fused by
  normalized averaging.

Also provides high-dimensional bias corrections for isolated spiked
eigenvalues of both fits, a threshold rank estimator, and a subspace
similarity score.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkernel import RngStream, SvdTriplet, svd_full, sym_eig

__all__ = [
    "FUSION_NORM_TOL",
    "ORTHONORMAL_TOL",
    "PCAFit",
    "PPCAFit",
    "sample_cov",
    "pca_fit",
    "ppca_fit",
    "debias_ppca",
    "debias_pca",
    "estimate_rank",
    "similarity_xi",
]

# Below this norm the sum of paired singular vectors is treated as
# pathologically anti-aligned and fusion falls back to the left vector.
FUSION_NORM_TOL = 1e-8

# Max-norm deviation of a column Gram matrix from the identity above which
# an input claimed orthonormal is rejected.
ORTHONORMAL_TOL = 1e-6


@dataclass(frozen=True)
class PCAFit:
    """Classical PCA fit: eigenpairs of the sample covariance.

    ``eigenvalues`` are descending and clipped at zero (the matrix is PSD up
    to roundoff); column j of ``eigenvectors`` pairs with ``eigenvalues[j]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class PPCAFit:
    """Product PCA fit from one random half-split of the sample.

    ``singular_values`` are the descending singular values of the product of
    half-sample covariance square roots.  Columns j of ``left_vectors`` /
    ``right_vectors`` are the sign-fixed singular vector pair, and
    ``fused_vectors[:, j]`` is their normalized sum, the eigenvector
    estimate.  ``partition`` holds the two disjoint row-index halves.
    ``fallback_columns`` lists columns where the pair was so anti-aligned
    that fusion fell back to the left vector alone.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    fused_vectors: np.ndarray
    partition: tuple[np.ndarray, np.ndarray]
    fallback_columns: tuple[int, ...] = ()


def _check_data(x: np.ndarray, min_rows: int = 1) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"data must be a 2-d samples-by-features array, got shape {x.shape}")
    if x.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} samples, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must have finite entries")
    return x


def sample_cov(x: np.ndarray) -> np.ndarray:
    """Sample second-moment matrix X^T X / n (no mean subtraction)."""
    x = _check_data(x)
    return x.T @ x / x.shape[0]


def pca_fit(x: np.ndarray) -> PCAFit:
    """Eigendecomposition of the sample covariance, eigenvalues descending."""
    x = _check_data(x)
    w, v = sym_eig(sample_cov(x))
    return PCAFit(eigenvalues=np.maximum(w, 0.0), eigenvectors=v)


def _half_sqrt(xh: np.ndarray) -> np.ndarray:
    """PSD square root of one half's sample covariance.

    Built from the thin SVD of the scaled data, which costs
    O(min(n,p)^2 max(n,p)) instead of an order-p eigendecomposition when the
    half has fewer rows than columns.
    """
    scaled = xh / np.sqrt(xh.shape[0])
    _, s, vh = np.linalg.svd(scaled, full_matrices=False)
    root = (vh.T * s) @ vh
    return (root + root.T) / 2.0


def _fuse(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """Column-wise normalized sums of paired singular vectors.

    Columns whose sum has norm below FUSION_NORM_TOL (anti-aligned pairs,
    which only occur in the zero-singular-value block) fall back to the left
    vector; their indices are reported.
    """
    sums = u + v
    norms = np.linalg.norm(sums, axis=0)
    fallback = np.flatnonzero(norms < FUSION_NORM_TOL)
    safe = np.where(norms < FUSION_NORM_TOL, 1.0, norms)
    fused = sums / safe
    if fallback.size:
        fused[:, fallback] = u[:, fallback]
    return fused, tuple(int(j) for j in fallback)


def _check_partition(
    first: np.ndarray, second: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray]:
    first = np.asarray(first, dtype=int)
    second = np.asarray(second, dtype=int)
    merged = np.sort(np.concatenate([first, second]))
    if merged.size != n or np.any(merged != np.arange(n)):
        raise ValueError("partition halves must split range(n) exactly")
    if abs(first.size - second.size) > 1:
        raise ValueError("partition halves must differ in size by at most one")
    return first, second


def ppca_fit(
    x: np.ndarray,
    rng: RngStream,
    partition: tuple[np.ndarray, np.ndarray] | None = None,
) -> PPCAFit:
    """Product PCA: SVD of the product of half-covariance square roots.

    The sample is split into two near-equal halves (random equal split drawn
    from ``rng`` unless an explicit ``partition`` is given), each half's
    covariance square root is formed, and the square product matrix is
    decomposed with the deterministic-sign SVD.  Requires n >= 4 so each
    half has at least two rows.
    """
    x = _check_data(x, min_rows=4)
    n = x.shape[0]
    if partition is None:
        perm = rng.generator().permutation(n)
        half = n // 2
        first = np.sort(perm[:half])
        second = np.sort(perm[half:])
    else:
        first, second = _check_partition(partition[0], partition[1], n)
    product = _half_sqrt(x[first]) @ _half_sqrt(x[second])
    trip: SvdTriplet = svd_full(product)
    fused, fallback = _fuse(trip.u, trip.v)
    return PPCAFit(
        singular_values=trip.s,
        left_vectors=trip.u,
        right_vectors=trip.v,
        fused_vectors=fused,
        partition=(first, second),
        fallback_columns=fallback,
    )


def _check_spike_args(values: np.ndarray, c: float, j: int) -> tuple[np.ndarray, int]:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("need a 1-d spectrum with at least two entries")
    if np.any(np.diff(values) > 0.0):
        raise ValueError("spectrum must be sorted descending")
    if not np.isfinite(c) or c <= 0.0:
        raise ValueError(f"aspect ratio must be positive, got {c}")
    p = values.size
    if not 1 <= j < p:
        raise ValueError(f"spike index must satisfy 1 <= j < {p}, got {j}")
    return values, p


def debias_ppca(singular_values: np.ndarray, c: float, j: int) -> float:
    """Bias-corrected j-th product-PCA spike (1-based index).

    Inverts the spike-forward map using the trailing singular values as a
    plug-in for the limiting law: with z = s_j^2 and the tail average
    s(z) = mean of 1/(s_l^2 - z) over l > j, the companion value
    2c s(z) + (2c - 1)/z evaluated at the spike gives the corrected
    eigenvalue -1 / (companion * s_j).  Here c should be the realized p/n.
    """
    values, _ = _check_spike_args(singular_values, c, j)
    top = values[j - 1]
    z = top * top
    tail = values[j:] ** 2
    if np.any(tail == z):
        raise ValueError("spike coincides with a trailing singular value (pole)")
    if top <= 0.0:
        raise ValueError("spike must be positive")
    s_tail = float(np.mean(1.0 / (tail - z)))
    companion = 2.0 * c * s_tail + (2.0 * c - 1.0) / z
    return -1.0 / (companion * top)


def debias_pca(eigenvalues: np.ndarray, c: float, j: int) -> float:
    """Bias-corrected j-th classical-PCA spike (1-based index).

    Same construction as :func:`debias_ppca` in eigenvalue scale: with
    z = lam_j and m(z) = mean of 1/(lam_l - z) over l > j, returns
    -1 / (c m(z) + (c - 1)/z).
    """
    values, _ = _check_spike_args(eigenvalues, c, j)
    z = values[j - 1]
    tail = values[j:]
    if np.any(tail == z):
        raise ValueError("spike coincides with a trailing eigenvalue (pole)")
    if z <= 0.0:
        raise ValueError("spike must be positive")
    m_tail = float(np.mean(1.0 / (tail - z)))
    companion = c * m_tail + (c - 1.0) / z
    return -1.0 / companion


def estimate_rank(eigenvalues: np.ndarray, edge: float) -> int:
    """Number of eigenvalues strictly above the bulk edge."""
    values = np.asarray(eigenvalues, dtype=float)
    if values.ndim != 1:
        raise ValueError("need a 1-d spectrum")
    if not np.isfinite(edge) or edge < 0.0:
        raise ValueError(f"edge must be a nonnegative real, got {edge}")
    return int(np.count_nonzero(values > edge))


def _check_orthonormal(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < mat.shape[1] or mat.shape[1] < 1:
        raise ValueError(f"{name} must be a tall p-by-k matrix, got shape {mat.shape}")
    gram = mat.T @ mat
    dev = float(np.max(np.abs(gram - np.eye(mat.shape[1]))))
    if dev > ORTHONORMAL_TOL:
        raise ValueError(f"{name} columns are not orthonormal (deviation {dev:.3e})")
    return mat


def similarity_xi(basis: np.ndarray, targets: np.ndarray) -> float:
    """Mean singular value of basis^T targets: subspace capture in [0, 1].

    ``basis`` is a p-by-q orthonormal frame (the estimate), ``targets`` a
    p-by-r orthonormal frame with q >= r (the directions to capture).  Value
    1 means span(targets) lies inside span(basis); 0 means orthogonality.
    """
    basis = _check_orthonormal(basis, "basis")
    targets = _check_orthonormal(targets, "targets")
    if basis.shape[0] != targets.shape[0]:
        raise ValueError("basis and targets must share the ambient dimension")
    if basis.shape[1] < targets.shape[1]:
        raise ValueError("basis must have at least as many columns as targets")
    sing = np.linalg.svd(basis.T @ targets, compute_uv=False)
    return float(min(1.0, np.mean(sing)))
