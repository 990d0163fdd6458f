"""Analytic outlier-contamination model for spiked covariances.

A fraction ``epsilon`` of observations is replaced by outliers along K fixed
directions orthogonal to the signal, with effect sizes ``etas``.  The
contaminated population covariance is

    (1 - K eps) * Sigma + eps * sum_k eta_k nu_k nu_k^T

for classical PCA.  Product PCA splits the sample in half, so each half sees
its own outliers at doubled proportion: K1 of them land in half one and
K2 = K - K1 in half two.  Everything here is population-level algebra: exact
perturbed spectra for both estimators, predicates for when an outlier
direction turns into a spurious spike or overtakes the signal in the
eigenvalue ordering, the resulting target ranks, and the comparative
conditions under which product PCA is the more outlier-tolerant method.

The single signal spike has unit noise level (sigma2 = 1), matching the
regime the closed-form comparisons are derived in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numkernel import RngStream, random_orthogonal

__all__ = [
    "PerturbationScenario",
    "PerturbedSpectrum",
    "build_perturbed_sigma",
    "build_perturbed_half_sigmas",
    "pca_perturbed_spectrum",
    "ppca_perturbed_spectrum",
    "noise_is_spiked",
    "ordering_breaks",
    "target_rank",
    "comparative_conditions",
]


@dataclass(frozen=True)
class PerturbationScenario:
    """One contamination configuration.

    ``epsilon`` is the contamination proportion, ``etas`` the K positive
    outlier effect sizes, ``k1`` how many of the K outlier directions fall in
    the first half of a half-split (the rest fall in the second), ``lambda1``
    the lone signal spike, and ``c`` the aspect ratio.  ``lambda1`` must be a
    distant spike for both estimators, i.e. above the product-PCA threshold
    sqrt(1 + c + sqrt(c^2 + 4c)) (which dominates the classical one).
    """

    epsilon: float
    etas: tuple[float, ...]
    k1: int
    lambda1: float
    c: float
    sigma2: float = field(default=1.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "etas", tuple(float(v) for v in self.etas))
        eps = self.epsilon
        if not (np.isfinite(eps) and 0.0 < eps < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
        if any(not np.isfinite(v) or v <= 0.0 for v in self.etas):
            raise ValueError("every outlier effect size must be positive and finite")
        k = len(self.etas)
        if not 0 <= self.k1 <= k:
            raise ValueError(f"k1 must lie in [0, {k}], got {self.k1}")
        if k * eps >= 1.0:
            raise ValueError("contamination K*epsilon must stay below 1")
        if 2.0 * max(self.k1, k - self.k1) * eps >= 1.0:
            raise ValueError("per-half contamination 2*max(K1,K2)*epsilon must stay below 1")
        if not (np.isfinite(self.c) and self.c > 0.0):
            raise ValueError(f"aspect ratio must be positive, got {self.c}")
        if self.sigma2 != 1.0:
            raise ValueError("the analytic model is derived at unit noise (sigma2 = 1)")
        floor = math.sqrt(1.0 + self.c + math.sqrt(self.c * self.c + 4.0 * self.c))
        if not (np.isfinite(self.lambda1) and self.lambda1 > floor):
            raise ValueError(
                f"lambda1 must exceed the product-PCA spike threshold {floor:.6g}, got {self.lambda1}"
            )

    @property
    def k(self) -> int:
        return len(self.etas)

    @property
    def k2(self) -> int:
        return self.k - self.k1


@dataclass(frozen=True)
class PerturbedSpectrum:
    """Exact population spectrum after contamination.

    ``signal_eigenvalue`` sits on the signal direction,
    ``noise_eigenvalues`` pairs each outlier index k (1-based) with its
    eigenvalue, and ``bulk_level`` is the common level of all remaining
    directions.
    """

    signal_eigenvalue: float
    noise_eigenvalues: tuple[tuple[int, float], ...]
    bulk_level: float


def _check_assignment(s: PerturbationScenario, assignment) -> frozenset[int]:
    if assignment is None:
        raise ValueError("product-PCA results need an outlier-to-half assignment")
    half_one = frozenset(int(k) for k in assignment)
    if len(half_one) != len(tuple(assignment)):
        raise ValueError("assignment indices must be distinct")
    if not all(1 <= k <= s.k for k in half_one):
        raise ValueError(f"assignment indices must lie in 1..{s.k}")
    if len(half_one) != s.k1:
        raise ValueError(f"assignment must put exactly k1={s.k1} outliers in half one")
    return half_one


def _check_index(s: PerturbationScenario, k: int) -> int:
    if not 1 <= k <= s.k:
        raise ValueError(f"outlier index must lie in 1..{s.k}, got {k}")
    return int(k)


def _check_method(method: str) -> str:
    if method not in ("pca", "ppca"):
        raise ValueError(f"method must be 'pca' or 'ppca', got {method!r}")
    return method


def build_perturbed_sigma(
    s: PerturbationScenario, p: int, rng: RngStream
) -> np.ndarray:
    """Materialize the contaminated covariance as a p x p matrix.

    The signal direction and the K outlier directions are taken as exactly
    orthonormal columns of a Haar orthogonal matrix, so the returned matrix's
    eigenvalues equal :func:`pca_perturbed_spectrum` exactly.
    """
    if p <= s.k:
        raise ValueError(f"need p >= K + 1 = {s.k + 1}, got p = {p}")
    q = random_orthogonal(p, rng)
    gamma = q[:, 0]
    shrink = 1.0 - s.k * s.epsilon
    sigma = shrink * (np.eye(p) + (s.lambda1 - 1.0) * np.outer(gamma, gamma))
    for idx, eta in enumerate(s.etas, start=1):
        nu = q[:, idx]
        sigma += s.epsilon * eta * np.outer(nu, nu)
    return (sigma + sigma.T) / 2.0


def build_perturbed_half_sigmas(
    s: PerturbationScenario, p: int, rng: RngStream, assignment
) -> tuple[np.ndarray, np.ndarray]:
    """Materialize both half-sample contaminated covariances.

    Each half sees only its own outliers at doubled proportion; both share
    the same exactly-orthonormal direction frame, so the singular values of
    sqrt(first) @ sqrt(second) equal :func:`ppca_perturbed_spectrum` exactly.
    """
    if p <= s.k:
        raise ValueError(f"need p >= K + 1 = {s.k + 1}, got p = {p}")
    half_one = _check_assignment(s, assignment)
    q = random_orthogonal(p, rng)
    gamma = q[:, 0]
    base = np.eye(p) + (s.lambda1 - 1.0) * np.outer(gamma, gamma)
    k1, k2 = s.k1, s.k2
    first = (1.0 - 2.0 * k1 * s.epsilon) * base
    second = (1.0 - 2.0 * k2 * s.epsilon) * base
    for idx, eta in enumerate(s.etas, start=1):
        bump = 2.0 * s.epsilon * eta * np.outer(q[:, idx], q[:, idx])
        if idx in half_one:
            first += bump
        else:
            second += bump
    return (first + first.T) / 2.0, (second + second.T) / 2.0


def pca_perturbed_spectrum(s: PerturbationScenario) -> PerturbedSpectrum:
    """Population spectrum of the contaminated covariance (classical PCA)."""
    shrink = 1.0 - s.k * s.epsilon
    noise = tuple(
        (idx, shrink + s.epsilon * eta) for idx, eta in enumerate(s.etas, start=1)
    )
    return PerturbedSpectrum(
        signal_eigenvalue=shrink * s.lambda1,
        noise_eigenvalues=noise,
        bulk_level=shrink,
    )


def ppca_perturbed_spectrum(
    s: PerturbationScenario, assignment
) -> PerturbedSpectrum:
    """Population singular values of the half-split covariance product.

    ``assignment`` lists the 1-based outlier indices landing in half one
    (exactly k1 of them).
    """
    half_one = _check_assignment(s, assignment)
    shrink1 = 1.0 - 2.0 * s.k1 * s.epsilon
    shrink2 = 1.0 - 2.0 * s.k2 * s.epsilon
    noise = []
    for idx, eta in enumerate(s.etas, start=1):
        if idx in half_one:
            val = math.sqrt(shrink2 * (shrink1 + 2.0 * s.epsilon * eta))
        else:
            val = math.sqrt(shrink1 * (shrink2 + 2.0 * s.epsilon * eta))
        noise.append((idx, val))
    bulk = math.sqrt(shrink1 * shrink2)
    return PerturbedSpectrum(
        signal_eigenvalue=bulk * s.lambda1,
        noise_eigenvalues=tuple(noise),
        bulk_level=bulk,
    )


def _block_shrink(s: PerturbationScenario, k: int, half_one: frozenset[int]) -> float:
    """1 - 2 K_l eps for the half that outlier k lands in."""
    block = s.k1 if k in half_one else s.k2
    return 1.0 - 2.0 * block * s.epsilon


def noise_is_spiked(
    s: PerturbationScenario, k: int, method: str, assignment=None
) -> bool:
    """Whether outlier k's sample eigenvalue separates from the bulk.

    The contaminated bulk has its own phase-transition threshold; an outlier
    direction becomes a spurious (distant) spike once eta_k clears it:
    eta_k > ((1 - K eps)/eps) sqrt(c) for classical PCA, and
    eta_k > ((1 - 2 K_l eps)/eps) (c + sqrt(c^2 + 4c))/2 for product PCA,
    where K_l counts the outliers sharing k's half.
    """
    k = _check_index(s, k)
    method = _check_method(method)
    eta = s.etas[k - 1]
    if method == "pca":
        bound = (1.0 - s.k * s.epsilon) / s.epsilon * math.sqrt(s.c)
        return eta > bound
    half_one = _check_assignment(s, assignment)
    shrink = _block_shrink(s, k, half_one)
    bound = shrink / s.epsilon * (s.c + math.sqrt(s.c * s.c + 4.0 * s.c)) / 2.0
    return eta > bound


def ordering_breaks(
    s: PerturbationScenario, k: int, method: str, assignment=None
) -> bool:
    """Whether outlier k's eigenvalue overtakes the signal eigenvalue.

    Classical PCA loses the ordering once
    eta_k > ((1 - K eps)/eps) (lambda1 - 1); product PCA only once
    eta_k > ((1 - 2 K_l eps)/(2 eps)) (lambda1^2 - 1), a quadratically
    larger bound for distant signals.
    """
    k = _check_index(s, k)
    method = _check_method(method)
    eta = s.etas[k - 1]
    if method == "pca":
        bound = (1.0 - s.k * s.epsilon) / s.epsilon * (s.lambda1 - 1.0)
        return eta > bound
    half_one = _check_assignment(s, assignment)
    shrink = _block_shrink(s, k, half_one)
    bound = shrink / (2.0 * s.epsilon) * (s.lambda1 * s.lambda1 - 1.0)
    return eta > bound


def target_rank(s: PerturbationScenario, method: str, assignment=None) -> int:
    """Apparent number of distant spikes: 1 signal plus spiked outliers."""
    method = _check_method(method)
    extra = sum(
        noise_is_spiked(s, k, method, assignment) for k in range(1, s.k + 1)
    )
    return 1 + int(extra)


def comparative_conditions(s: PerturbationScenario, assignment=None) -> dict[str, bool]:
    """The three product-PCA-advantage conditions for a scenario.

    ``eta_win``: the product-PCA spurious-spike threshold exceeds the
    classical one, i.e. ((1 - 2 K1 eps)/(1 - K eps)) (sqrt(c) + sqrt(c+4))/2
    is above 1.  ``a_win``: the signal stays on top of the contaminated
    product bulk ordering, lambda1 > (1 - 2 K2 eps)/(1 - 2 K1 eps).
    ``worst_case_ok``: both conditions at the most lopsided allocation
    K1 = K, which requires 2 K eps < 1 to be admissible at all.
    """
    if assignment is not None:
        _check_assignment(s, assignment)
    eps, k, k1, k2 = s.epsilon, s.k, s.k1, s.k2
    ratio = (math.sqrt(s.c) + math.sqrt(s.c + 4.0)) / 2.0
    eta_win = (1.0 - 2.0 * k1 * eps) / (1.0 - k * eps) * ratio > 1.0
    a_win = s.lambda1 > (1.0 - 2.0 * k2 * eps) / (1.0 - 2.0 * k1 * eps)
    worst_admissible = 2.0 * k * eps < 1.0
    worst_case_ok = (
        worst_admissible
        and (1.0 - 2.0 * k * eps) / (1.0 - k * eps) * ratio > 1.0
        and s.lambda1 > 1.0 / (1.0 - 2.0 * k * eps)
    )
    return {"eta_win": eta_win, "a_win": a_win, "worst_case_ok": worst_case_ok}
