"""Limiting spectral theory for spiked sample covariances and their products.

Two families of limiting laws are computed from a discrete population bulk
law H (a :class:`~spikedcov.spectra.PopulationSpectrum`; its spikes are
finite-rank and never affect limits) and an aspect ratio c = lim p/n:

- the classical sample-covariance law, written F throughout, whose Stieltjes
  transform m solves the standard fixed-point (Silverstein) equation; and
- the law G of the singular values of the split-sample product estimator,
  which is a composition: G(t) = F_outer(t^2), where the outer law has
  aspect ratio 2c and its bulk is itself the law F_{2c, H^2}.

Real-axis work uses the change of variables lam = -1/m_comp, where m_comp is
the companion transform of the dual Gram matrix (m_comp = c*m + (c-1)/z).
In that coordinate the inverse of the fixed-point equation is explicit:

    z(lam) = psi(lam) = lam * (1 + c * sum_k w_k * t_k / (lam - t_k)),

and psi'(lam) = 1 - q(lam) with q(lam) = c * sum_k w_k * (t_k/(t_k-lam))^2.
Outside the support psi is monotone; its critical points (q = 1) yield the
support edges (as psi values) and the phase-transition thresholds for spiked
eigenvalues. Derivatives of transforms are always obtained by implicit
differentiation, never by finite differences.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .spectra import PopulationSpectrum, make_spectrum, square_spectrum

__all__ = [
    "SOLVER_TOL",
    "FP_DAMPING",
    "FP_MAX_ITER",
    "NEWTON_MAX_ITER",
    "INNER_ATOMS",
    "CDF_GATE",
    "SolverError",
    "StieltjesEval",
    "SpikedLimit",
    "Threshold",
    "SsmParams",
    "SsmConstants",
    "BiasReport",
    "stieltjes",
    "stieltjes_real",
    "mp_density",
    "mass_at_zero",
    "support_edges",
    "psi",
    "ppca_psi",
    "pca_threshold",
    "ppca_threshold",
    "pca_limit",
    "ppca_limit",
    "ppca_support_edges",
    "ppca_mass_at_zero",
    "ppca_lsd_cdf",
    "ppca_lsd_pdf",
    "ssm_spectrum",
    "ssm_closed_forms",
    "ssm_g_pdf",
    "ssm_f_pdf",
    "ssm_g_cdf",
    "ssm_f_cdf",
    "bias_report",
    "rho",
]

# Fixed-point / Newton schedule for the complex solver.
FP_DAMPING = 0.5
FP_MAX_ITER = 500
NEWTON_MAX_ITER = 40
SOLVER_TOL = 1e-10
_FP_TARGET = 1e-6
# Newton keeps polishing below the acceptance gate so the companion identity
# m_under = c*m + (c-1)/z holds to ~1e-12 and not just to SOLVER_TOL.
_NEWTON_TARGET = 1e-14
_LADDER_STEPS = 48

# Quantile atoms used when the inner product law becomes an outer bulk, and
# the convergence gate the doubling test must satisfy.
INNER_ATOMS = 512
CDF_GATE = 1e-3
_CDF_PANELS = 2048

_RTOL = 4.0 * np.finfo(float).eps
_XTOL = 1e-14


class SolverError(RuntimeError):
    """Numerical failure in the spectral solver (non-convergence, bracket)."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class StieltjesEval:
    """One solve of the fixed-point equation at a complex point z.

    m is the Stieltjes transform of the sample law, m_under the companion
    transform of the dual Gram law; residual is the absolute defect of the
    fixed-point equation at the returned root.
    """

    z: complex
    m: complex
    m_under: complex
    residual: float


@dataclass(frozen=True)
class Threshold:
    """Phase-transition threshold and the matching bulk upper edge.

    A population spike strictly above ``threshold`` separates from the bulk;
    at or below it, the sample counterpart sticks to ``bulk_edge``.
    """

    threshold: float
    bulk_edge: float


@dataclass(frozen=True)
class SpikedLimit:
    """Limit of a sample spike: distant (separated) or stuck at the edge."""

    tag: str
    value: float

    @classmethod
    def distant(cls, value: float) -> "SpikedLimit":
        return cls(tag="distant", value=float(value))

    @classmethod
    def stuck(cls, value: float) -> "SpikedLimit":
        return cls(tag="stuck", value=float(value))

    @property
    def is_distant(self) -> bool:
        return self.tag == "distant"


@dataclass(frozen=True)
class SsmParams:
    """Single-atom bulk: every bulk eigenvalue equals sigma2."""

    c: float
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.c) and self.c > 0.0):
            raise ValueError("aspect ratio c must be positive and finite")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0.0):
            raise ValueError("sigma2 must be positive and finite")


@dataclass(frozen=True)
class SsmConstants:
    """All single-atom closed-form constants for one (c, sigma2).

    lambda_star / lambda_prime are the product / classical spike thresholds;
    (a, b) the product-law support edges in singular-value scale with
    (alpha, beta) their squared-scale counterparts (alpha may be negative,
    in which case the continuous support reaches down to zero); (a_prime,
    b_prime) the classical-law edges; mass0_* the point masses at zero.
    """

    c: float
    sigma2: float
    lambda_star: float
    lambda_prime: float
    a: float
    b: float
    a_prime: float
    b_prime: float
    alpha: float
    beta: float
    mass0_ppca: float
    mass0_pca: float


@dataclass(frozen=True)
class BiasReport:
    """Limits of one distant spike under both estimators.

    ppca/pca are the respective sample-spike limits; gap = pca - ppca is the
    excess upward bias of classical PCA.
    """

    spike: float
    ppca: float
    pca: float
    gap: float


def _bulk(h: PopulationSpectrum) -> tuple[np.ndarray, np.ndarray]:
    return h.values, h.weights


def _check_ratio(c: float) -> float:
    c = float(c)
    if not (np.isfinite(c) and c > 0.0):
        raise ValueError("aspect ratio c must be positive and finite")
    return c


# ---------------------------------------------------------------------------
# psi / q machinery on real branches (lam = -1/m_comp coordinates)
# ---------------------------------------------------------------------------


def _psi_raw(c: float, t: np.ndarray, w: np.ndarray, lam):
    """lam*(1 + c*sum w t/(lam-t)); vectorized over lam, no domain checks."""
    lam = np.asarray(lam, dtype=float)
    diff = lam[..., None] - t
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(t == 0.0, 0.0, w * t / diff)
    return lam * (1.0 + c * terms.sum(axis=-1))


def _q_raw(c: float, t: np.ndarray, w: np.ndarray, lam):
    """c*sum w (t/(t-lam))^2; vectorized over lam, no domain checks."""
    lam = np.asarray(lam, dtype=float)
    diff = t - lam[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(t == 0.0, 0.0, w * (t / diff) ** 2)
    return c * terms.sum(axis=-1)


def _upper_critical(c: float, t: np.ndarray, w: np.ndarray) -> float:
    """Root of q = 1 above the largest bulk atom."""
    u = float(t[-1])
    if u <= 0.0:
        raise SolverError("bulk law has no positive atoms")
    lo = u * (1.0 + 1e-12)
    hi = u * (1.0 + np.sqrt(c)) * 10.0
    for _ in range(300):
        if _q_raw(c, t, w, hi) < 1.0:
            break
        hi *= 2.0
    else:
        raise SolverError(f"no upper critical point in ({lo:.3e}, {hi:.3e}]")
    return brentq(lambda x: _q_raw(c, t, w, x) - 1.0, lo, hi, xtol=_XTOL, rtol=_RTOL)


def _lower_critical(c: float, t: np.ndarray, w: np.ndarray) -> float | None:
    """Root of q = 1 below the bulk, or None when the lower edge is 0.

    For effective ratio c*(1-w0) < 1 (w0 the weight at zero) the root sits
    in (0, t_min+); for > 1 it sits on the negative axis; at exactly 1 the
    continuous support touches zero and there is no root.
    """
    w0 = float(w[t == 0.0].sum())
    c_pos = c * (1.0 - w0)
    pos = t[t > 0.0]
    if pos.size == 0:
        return None
    tmin = float(pos[0])
    if c_pos < 1.0 - 1e-12:
        lo = tmin * 1e-12
        hi = tmin * (1.0 - 1e-12)
        return brentq(lambda x: _q_raw(c, t, w, x) - 1.0, lo, hi, xtol=_XTOL, rtol=_RTOL)
    if c_pos > 1.0 + 1e-12:
        hi = -tmin * 1e-12
        lo = -max(float(t[-1]), 1.0)
        for _ in range(300):
            if _q_raw(c, t, w, lo) < 1.0:
                break
            lo *= 2.0
        else:
            raise SolverError(f"no lower critical point in [{lo:.3e}, {hi:.3e})")
        return brentq(lambda x: _q_raw(c, t, w, x) - 1.0, lo, hi, xtol=_XTOL, rtol=_RTOL)
    return None


class _BulkLaw:
    """Real-branch solver for one (c, bulk) pair.

    Precomputes the critical points and support edges, then inverts
    psi(lam) = x on the monotone branch matching x's position relative to
    the support, yielding the real transforms and their derivatives.
    """

    def __init__(self, c: float, t: np.ndarray, w: np.ndarray):
        self.c = float(c)
        self.t = np.asarray(t, dtype=float)
        self.w = np.asarray(w, dtype=float)
        self.upper_critical = _upper_critical(c, self.t, self.w)
        self.lower_critical = _lower_critical(c, self.t, self.w)
        self.upper_edge = float(_psi_raw(c, self.t, self.w, self.upper_critical))
        if self.lower_critical is None:
            self.lower_edge = 0.0
        else:
            self.lower_edge = max(
                float(_psi_raw(c, self.t, self.w, self.lower_critical)), 0.0
            )

    def psi_at(self, lam) -> float:
        return _psi_raw(self.c, self.t, self.w, lam)

    def q_at(self, lam) -> float:
        return _q_raw(self.c, self.t, self.w, lam)

    def lam_above(self, x: float) -> float:
        """Invert psi on the increasing branch above the upper critical point."""
        if x <= self.upper_edge:
            raise ValueError(f"x={x!r} is not above the support edge {self.upper_edge!r}")
        lo = self.upper_critical
        hi = max(2.0 * lo, 2.0 * x)
        for _ in range(300):
            if self.psi_at(hi) > x:
                break
            hi *= 2.0
        else:
            raise SolverError(f"cannot bracket psi = {x!r} above the bulk")
        return brentq(lambda y: self.psi_at(y) - x, lo, hi, xtol=_XTOL, rtol=_RTOL)

    def lam_below(self, x: float) -> float:
        """Invert psi on the increasing branch below the support.

        Covers 0 < x < lower_edge (the gap above zero) and x < 0. x = 0 is
        excluded (lam degenerates there).
        """
        if x == 0.0 or x >= self.lower_edge:
            raise ValueError(f"x={x!r} is not below the support (edge {self.lower_edge!r})")
        lc = self.lower_critical
        if lc is not None and lc > 0.0:
            # gap (0, lower_edge) reached from lam in (0, lc); no branch for x<0
            # exists on this side, but with an effective ratio below one the
            # negative axis is free of critical points and handles x < 0.
            if x > 0.0:
                return brentq(lambda y: self.psi_at(y) - x, 0.0, lc, xtol=_XTOL, rtol=_RTOL)
            hi = -abs(x) * 1e-12
        elif lc is not None:
            # effective ratio above one: one increasing branch on (-inf, lc)
            # covers everything below the lower edge, gap included.
            hi = lc
        else:
            hi = -min(abs(x), 1.0) * 1e-12
        lo = min(hi * 2.0, -max(float(self.t[-1]), 1.0, abs(x)))
        for _ in range(300):
            if self.psi_at(lo) < x:
                break
            lo *= 2.0
        else:
            raise SolverError(f"cannot bracket psi = {x!r} below the bulk")
        return brentq(lambda y: self.psi_at(y) - x, lo, hi, xtol=_XTOL, rtol=_RTOL)

    def real_transforms(self, x: float) -> tuple[float, float, float, float]:
        """(m, m', m_comp, m_comp') at real x outside the support.

        m_comp comes from lam; its derivative from implicit differentiation,
        m_comp' = 1/(lam^2 (1 - q(lam))); m and m' via the exact companion
        relations, arranged to avoid cancellation in m (see _m_from_comp).
        """
        lam = self.lam_above(x) if x > self.upper_edge else self.lam_below(x)
        m_comp = -1.0 / lam
        q = self.q_at(lam)
        m_comp_prime = 1.0 / (lam * lam * (1.0 - q))
        m = _m_from_comp(self.c, self.t, self.w, x, m_comp)
        m_prime = (m_comp_prime + (self.c - 1.0) / x**2) / self.c
        return float(m), float(m_prime), float(m_comp), float(m_comp_prime)


def _m_from_comp(c: float, t: np.ndarray, w: np.ndarray, z, m_comp):
    """Sample-law transform from the companion one, cancellation-free.

    Writing S = sum w t/(1 + t m_comp), the fixed point gives
    m = (z + (1-c) S) / (z (c S - z)), which stays accurate as c -> 0
    (the naive (m_comp - (c-1)/z)/c loses digits there).
    """
    s = (w * t / (1.0 + np.multiply.outer(m_comp, t))).sum(axis=-1)
    return (z + (1.0 - c) * s) / (z * (c * s - z))


# ---------------------------------------------------------------------------
# complex solver
# ---------------------------------------------------------------------------


def _companion_residual(c, t, w, m, z):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = (w * t / (1.0 + np.multiply.outer(m, t))).sum(axis=-1)
        r = np.abs(-1.0 / m + c * s - z)
    return np.where(np.isfinite(r), r, np.inf)


def _ladder_solve(c, t, w, z: complex) -> complex:
    """Continuation fallback: walk Im z down from O(1) with Newton tracking."""
    x, y = z.real, z.imag
    y0 = max(y, 0.5 * (1.0 + abs(x)))
    heights = np.geomspace(y0, y, _LADDER_STEPS)
    wt = w * t

    def residual_at(m: complex, zz: complex) -> complex:
        s = (wt / (1.0 + m * t)).sum()
        return -1.0 / m + c * s - zz

    m = -1.0 / complex(x, y0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for h in heights:
            zz = complex(x, h)
            # damped fixed point: slow but reliable on the upper half-plane
            for _ in range(300):
                s = (wt / (1.0 + m * t)).sum()
                m_new = (1.0 - FP_DAMPING) * m + FP_DAMPING / (c * s - zz)
                if not (np.isfinite(m_new) and m_new.imag > 0.0):
                    m_new = -1.0 / zz
                if abs(m_new - m) <= 1e-14 * max(1.0, abs(m)):
                    m = m_new
                    break
                m = m_new
            # Newton polish, accepting only residual-decreasing steps
            for _ in range(NEWTON_MAX_ITER):
                denom = 1.0 + m * t
                r = residual_at(m, zz)
                if abs(r) <= SOLVER_TOL * 0.1:
                    break
                rp = 1.0 / (m * m) - c * (wt * t / denom**2).sum()
                step = -r / rp
                if not np.isfinite(step):
                    break
                accepted = False
                for _ in range(60):
                    cand = m + step
                    if (
                        np.isfinite(cand)
                        and cand.imag > 0.0
                        and abs(residual_at(cand, zz)) < abs(r)
                    ):
                        accepted = True
                        break
                    step *= 0.5
                if not accepted:
                    break
                m = cand
    return m


def _solve_companion_grid(c: float, t: np.ndarray, w: np.ndarray, z: np.ndarray):
    """Companion transform on an array of complex z with Im z > 0.

    Damped fixed point (freezing converged entries), Newton polish, then a
    per-point continuation ladder for any stragglers; raises SolverError if
    a point still misses the residual tolerance.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    m = -1.0 / flat
    wt = w * t
    active = np.ones(flat.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(FP_MAX_ITER):
            if not active.any():
                break
            ma = m[active]
            za = flat[active]
            s = (wt / (1.0 + np.multiply.outer(ma, t))).sum(axis=-1)
            resid = np.abs(-1.0 / ma + c * s - za)
            done = resid <= _FP_TARGET
            phi = 1.0 / (c * s - za)
            m_new = (1.0 - FP_DAMPING) * ma + FP_DAMPING * phi
            m_new = np.where(np.isfinite(m_new), m_new, -1.0 / za)
            m[active] = np.where(done, ma, m_new)
            idx = np.flatnonzero(active)
            active[idx[done]] = False

        resid = _companion_residual(c, t, w, m, flat)
        polish = resid > _NEWTON_TARGET
        for _ in range(NEWTON_MAX_ITER):
            act = polish & (resid > _NEWTON_TARGET)
            if not act.any():
                break
            ma = m[act]
            za = flat[act]
            denom = 1.0 + np.multiply.outer(ma, t)
            s = (wt / denom).sum(axis=-1)
            r = -1.0 / ma + c * s - za
            rp = 1.0 / (ma * ma) - c * (wt * t / denom**2).sum(axis=-1)
            step = -r / rp
            cand = ma + step
            for _ in range(60):
                bad = ~np.isfinite(cand) | (cand.imag <= 0.0)
                if not bad.any():
                    break
                step = np.where(bad, 0.5 * step, step)
                cand = ma + step
            # a candidate that never became admissible keeps the old iterate
            keep = ~np.isfinite(cand) | (cand.imag <= 0.0)
            cand = np.where(keep, ma, cand)
            new_resid = _companion_residual(c, t, w, cand, za)
            # non-improving points have hit roundoff: keep the better iterate
            # and stop polishing them
            better = new_resid < resid[act]
            cand = np.where(better, cand, ma)
            new_resid = np.where(better, new_resid, resid[act])
            m[act] = cand
            resid[act] = new_resid
            idx = np.flatnonzero(act)
            polish[idx[~better]] = False

    for i in np.flatnonzero(resid > SOLVER_TOL):
        m[i] = _ladder_solve(c, t, w, complex(flat[i]))
        resid[i] = float(_companion_residual(c, t, w, m[i : i + 1], flat[i : i + 1])[0])
    worst = float(resid.max()) if resid.size else 0.0
    if worst > SOLVER_TOL:
        raise SolverError("fixed-point solve did not converge", residual=worst)
    return m.reshape(z.shape), resid.reshape(z.shape)


def stieltjes(c: float, h: PopulationSpectrum, z: complex) -> StieltjesEval:
    """Solve the fixed-point equation at one complex z with Im z > 0."""
    c = _check_ratio(c)
    z = complex(z)
    if not z.imag > 0.0:
        raise ValueError("stieltjes requires Im z > 0")
    t, w = _bulk(h)
    m_comp, resid = _solve_companion_grid(c, t, w, np.array([z]))
    m_comp = complex(m_comp[0])
    m = complex(_m_from_comp(c, t, w, z, m_comp))
    return StieltjesEval(z=z, m=m, m_under=m_comp, residual=float(resid[0]))


def stieltjes_real(
    c: float, h: PopulationSpectrum, x: float, side: str = "above"
) -> tuple[float, float]:
    """Real transform (m, m') at real x outside the support.

    side="above" requires x above the upper support edge; side="below"
    accepts points in the gap below the continuous support (or negative x).
    Derivatives come from implicit differentiation of the fixed point.
    """
    c = _check_ratio(c)
    x = float(x)
    law = _BulkLaw(c, *_bulk(h))
    if side == "above":
        if x <= law.upper_edge:
            raise ValueError(
                f"x={x!r} is inside or below the support (upper edge {law.upper_edge!r})"
            )
    elif side == "below":
        if x >= law.lower_edge or x == 0.0:
            raise ValueError(
                f"x={x!r} is not below the support (lower edge {law.lower_edge!r})"
            )
    else:
        raise ValueError(f"unknown side {side!r}")
    m, m_prime, _, _ = law.real_transforms(x)
    return m, m_prime


def _density_atoms(c: float, t: np.ndarray, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Continuous density at positive points x via the imaginary part.

    Evaluates at heights eta and eta/2 with eta = max(1e-9, 1e-6 x) and
    Richardson-extrapolates toward the real axis; the linear-in-eta error
    cancels, which also suppresses leakage from any point mass at zero.
    """
    x = np.asarray(x, dtype=float)
    eta = np.maximum(1e-9, 1e-6 * x)
    z = np.concatenate([x + 1j * eta, x + 1j * eta / 2.0])
    m_comp, _ = _solve_companion_grid(c, t, w, z)
    m = _m_from_comp(c, t, w, z, m_comp)
    n = x.size
    f = (2.0 * m.imag[n:] - m.imag[:n]) / np.pi
    return np.clip(f, 0.0, None)


def mp_density(c: float, h: PopulationSpectrum, t) -> float | np.ndarray:
    """Density of the classical sample-covariance law at t > 0."""
    c = _check_ratio(c)
    pts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(pts <= 0.0):
        raise ValueError("mp_density requires t > 0")
    out = _density_atoms(c, *_bulk(h), pts)
    return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out


def mass_at_zero(c: float, h: PopulationSpectrum) -> float:
    """Point mass at zero of the classical law: max(1 - 1/c, H({0}), 0)."""
    c = _check_ratio(c)
    t, w = _bulk(h)
    w0 = float(w[t == 0.0].sum())
    return max(1.0 - 1.0 / c, w0, 0.0)


def support_edges(c: float, h: PopulationSpectrum) -> tuple[float, float]:
    """Outermost edges of the continuous support of the classical law."""
    c = _check_ratio(c)
    law = _BulkLaw(c, *_bulk(h))
    return law.lower_edge, law.upper_edge


def psi(c: float, h: PopulationSpectrum, lam) -> float | np.ndarray:
    """Spike-forward map of the classical law at lam above the bulk."""
    if c < 0.0 or not np.isfinite(c):
        raise ValueError("aspect ratio c must be nonnegative and finite")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= h.bulk_upper):
        raise ValueError(f"psi requires lam above the bulk upper edge {h.bulk_upper!r}")
    out = _psi_raw(c, *_bulk(h), lam_arr)
    return float(out[0]) if np.ndim(lam) == 0 else out


def ppca_psi(c: float, h: PopulationSpectrum, lam) -> float | np.ndarray:
    """Spike-forward map of the product law: psi of the squared system over lam.

    Equals psi_{2c, H^2}(lam^2)/lam, defined for lam above the bulk.
    """
    if c < 0.0 or not np.isfinite(c):
        raise ValueError("aspect ratio c must be nonnegative and finite")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= h.bulk_upper):
        raise ValueError(f"ppca_psi requires lam above the bulk upper edge {h.bulk_upper!r}")
    h2 = square_spectrum(h)
    out = _psi_raw(2.0 * c, *_bulk(h2), lam_arr**2) / lam_arr
    return float(out[0]) if np.ndim(lam) == 0 else out


def pca_threshold(c: float, h: PopulationSpectrum) -> Threshold:
    """Classical spike threshold and bulk upper edge."""
    c = _check_ratio(c)
    t, w = _bulk(h)
    crit = _upper_critical(c, t, w)
    return Threshold(threshold=float(crit), bulk_edge=float(_psi_raw(c, t, w, crit)))


def _ppca_threshold_parts(c: float, h: PopulationSpectrum):
    """Threshold solve for the product law.

    Returns (lambda_star, y_star, x_star, inner law) where y_star =
    lambda_star^2 is the inner-spike threshold and x_star its image under
    the inner spike-forward map; the derivative criterion for the outer law
    (aspect ratio 2c, bulk = inner law) is evaluated through the inner real
    transforms via q_outer(x) = 2c (1 + 2 x m(x) + x^2 m'(x)).
    """
    c = _check_ratio(c)
    c2 = 2.0 * c
    inner = _BulkLaw(c2, *_bulk(square_spectrum(h)))

    def q_outer(x: float) -> float:
        m, m_prime, _, _ = inner.real_transforms(x)
        return c2 * (1.0 + 2.0 * x * m + x * x * m_prime)

    lo = inner.upper_edge * (1.0 + 1e-9)
    hi = max(2.0 * inner.upper_edge, inner.upper_edge + 1.0)
    for _ in range(300):
        if q_outer(hi) < 1.0:
            break
        hi *= 2.0
    else:
        raise SolverError(f"no outer critical point above {inner.upper_edge!r}")
    x_star = brentq(lambda x: q_outer(x) - 1.0, lo, hi, xtol=_XTOL, rtol=_RTOL)
    y_star = inner.lam_above(x_star)
    return float(np.sqrt(y_star)), y_star, x_star, inner


def ppca_threshold(c: float, h: PopulationSpectrum) -> Threshold:
    """Product-law spike threshold and bulk upper edge."""
    lambda_star, _, x_star, _ = _ppca_threshold_parts(c, h)
    return Threshold(threshold=lambda_star, bulk_edge=float(x_star / lambda_star))


def pca_limit(c: float, h: PopulationSpectrum, lam: float) -> SpikedLimit:
    """Limit of the sample eigenvalue for a population spike lam (classical)."""
    lam = float(lam)
    if lam <= h.bulk_upper:
        raise ValueError("spike must exceed the bulk upper edge")
    thr = pca_threshold(c, h)
    if lam > thr.threshold:
        return SpikedLimit.distant(psi(c, h, lam))
    return SpikedLimit.stuck(thr.bulk_edge)


def ppca_limit(c: float, h: PopulationSpectrum, lam: float) -> SpikedLimit:
    """Limit of the sample singular value for a population spike lam (product)."""
    lam = float(lam)
    if lam <= h.bulk_upper:
        raise ValueError("spike must exceed the bulk upper edge")
    thr = ppca_threshold(c, h)
    if lam > thr.threshold:
        return SpikedLimit.distant(ppca_psi(c, h, lam))
    return SpikedLimit.stuck(thr.bulk_edge)


def ppca_mass_at_zero(c: float, h: PopulationSpectrum) -> float:
    """Point mass at zero of the product law: max(1 - 1/(2c), H({0}), 0)."""
    c = _check_ratio(c)
    t, w = _bulk(h)
    w0 = float(w[t == 0.0].sum())
    return max(1.0 - 1.0 / (2.0 * c), w0, 0.0)


def ppca_support_edges(c: float, h: PopulationSpectrum) -> tuple[float, float]:
    """Edges of the continuous support of the product law (singular scale).

    The upper edge is x*^2/y* from the threshold solve (an exact identity:
    the outer spike-forward map composed with the inner one is explicit).
    The lower edge solves the outer derivative criterion on the gap branch
    when 2c < 1; for 2c >= 1 the outer q tends to 1 at zero from below, so
    the continuous support reaches zero exactly.
    """
    c = _check_ratio(c)
    c2 = 2.0 * c
    _, y_star, x_star, inner = _ppca_threshold_parts(c, h)
    upper = float(np.sqrt(x_star * x_star / y_star))
    if c2 >= 1.0 - 1e-12:
        return 0.0, upper

    def q_outer(x: float) -> float:
        m, m_prime, _, _ = inner.real_transforms(x)
        return c2 * (1.0 + 2.0 * x * m + x * x * m_prime)

    a_in = inner.lower_edge
    lo = a_in * 1e-8
    hi = a_in * (1.0 - 1e-12)
    x_left = brentq(lambda x: q_outer(x) - 1.0, lo, hi, xtol=_XTOL, rtol=_RTOL)
    m_left, _, _, _ = inner.real_transforms(x_left)
    a_out = x_left * (1.0 - c2 * (1.0 + x_left * m_left))
    return float(np.sqrt(max(a_out, 0.0))), upper


# ---------------------------------------------------------------------------
# product law CDF / density via the composed (nested) solve
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=16)
def _inner_quantile_bulk(c: float, atoms: tuple, n_atoms: int):
    """Discretize the inner squared-scale law into quantile atoms.

    The continuous part of F_{2c,H^2} becomes n_atoms equal-weight atoms at
    quantile midpoints (computed from a dense trapezoid CDF of the solver
    density); a zero atom carries the point mass when present.
    """
    c2 = 2.0 * c
    h2 = square_spectrum(PopulationSpectrum(atoms=atoms))
    t2, w2 = _bulk(h2)
    law = _BulkLaw(c2, t2, w2)
    mass0 = mass_at_zero(c2, h2)
    cont = 1.0 - mass0
    grid = np.linspace(law.lower_edge, law.upper_edge, 4 * n_atoms + 1)
    mids = 0.5 * (grid[:-1] + grid[1:])
    dens = _density_atoms(c2, t2, w2, mids)
    spacing = grid[1] - grid[0]
    cum = np.concatenate([[0.0], np.cumsum(dens) * spacing])
    if cum[-1] <= 0.0:
        raise SolverError("inner law density integrated to zero")
    cum *= cont / cum[-1]
    levels = (np.arange(n_atoms) + 0.5) / n_atoms * cont
    pos = np.interp(levels, cum, grid)
    wq = np.full(n_atoms, cont / n_atoms)
    if mass0 > 0.0:
        pos = np.concatenate([[0.0], pos])
        wq = np.concatenate([[mass0], wq])
    return pos, wq


@functools.lru_cache(maxsize=16)
def _ppca_cdf_table(c: float, atoms: tuple, n_atoms: int):
    """Monotone interpolation table for the product-law CDF.

    Integrates the outer-law density in singular-value scale t (where the
    integrand 2 t f_outer(t^2) is bounded) by the midpoint rule on panels
    between the exact support edges, then renormalizes the continuous mass
    so the CDF reaches exactly 1 at the upper edge.
    """
    h = PopulationSpectrum(atoms=atoms)
    tq, wq = _inner_quantile_bulk(c, atoms, n_atoms)
    lower, upper = ppca_support_edges(c, h)
    mass0 = ppca_mass_at_zero(c, h)
    nodes = np.linspace(lower, upper, _CDF_PANELS + 1)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    dens = 2.0 * mids * _density_atoms(2.0 * c, tq, wq, mids * mids)
    spacing = nodes[1] - nodes[0]
    cum = np.concatenate([[0.0], np.cumsum(dens) * spacing])
    if cum[-1] <= 0.0:
        raise SolverError("outer law density integrated to zero")
    cum *= (1.0 - mass0) / cum[-1]
    interp = PchipInterpolator(nodes, mass0 + cum, extrapolate=False)
    return interp, lower, upper, mass0


def ppca_lsd_cdf(
    c: float, h: PopulationSpectrum, t, n_atoms: int = INNER_ATOMS
) -> float | np.ndarray:
    """CDF of the product law at t >= 0 (composed two-level solve)."""
    c = _check_ratio(c)
    pts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(pts < 0.0):
        raise ValueError("ppca_lsd_cdf requires t >= 0")
    interp, lower, upper, mass0 = _ppca_cdf_table(c, h.atoms, n_atoms)
    out = np.empty(pts.shape)
    below = pts <= lower
    above = pts >= upper
    mid = ~below & ~above
    out[below] = mass0
    out[above] = 1.0
    if mid.any():
        out[mid] = interp(pts[mid])
    return float(out[0]) if np.ndim(t) == 0 else out


def ppca_lsd_pdf(
    c: float, h: PopulationSpectrum, t, n_atoms: int = INNER_ATOMS
) -> float | np.ndarray:
    """Continuous density of the product law at t > 0: 2 t f_outer(t^2)."""
    c = _check_ratio(c)
    pts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(pts <= 0.0):
        raise ValueError("ppca_lsd_pdf requires t > 0")
    tq, wq = _inner_quantile_bulk(c, h.atoms, n_atoms)
    out = 2.0 * pts * _density_atoms(2.0 * c, tq, wq, pts * pts)
    return float(out[0]) if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# single-atom (SSM) closed forms
# ---------------------------------------------------------------------------


def ssm_spectrum(params: SsmParams, spikes=()) -> PopulationSpectrum:
    """Single-atom bulk at sigma2, with optional spikes."""
    return make_spectrum([(params.sigma2, 1.0)], spikes)


@functools.lru_cache(maxsize=256)
def ssm_closed_forms(params: SsmParams) -> SsmConstants:
    """All closed-form constants for a single-atom bulk."""
    c = params.c
    s2 = params.sigma2
    root = np.sqrt(c * c + 4.0 * c)
    lambda_star = s2 * np.sqrt(1.0 + c + root)
    lambda_prime = s2 * (1.0 + np.sqrt(c))
    alpha = 0.5 * (2.0 + 10.0 * c - c * c - np.sqrt(c * (c + 4.0) ** 3)) * s2 * s2
    beta = 0.5 * (2.0 + 10.0 * c - c * c + np.sqrt(c * (c + 4.0) ** 3)) * s2 * s2
    if c < 0.5:
        a = s2 * np.sqrt(1.0 + c - root) * (1.0 - 0.5 * (root + c))
    else:
        a = 0.0
    b = s2 * np.sqrt(1.0 + c + root) * (1.0 + 0.5 * (root - c))
    a_prime = s2 * (1.0 - np.sqrt(c)) ** 2
    b_prime = s2 * (1.0 + np.sqrt(c)) ** 2
    return SsmConstants(
        c=c,
        sigma2=s2,
        lambda_star=float(lambda_star),
        lambda_prime=float(lambda_prime),
        a=float(a),
        b=float(b),
        a_prime=float(a_prime),
        b_prime=float(b_prime),
        alpha=float(alpha),
        beta=float(beta),
        mass0_ppca=max(0.0, 1.0 - 0.5 / c),
        mass0_pca=max(0.0, 1.0 - 1.0 / c),
    )


def _cbrt_sq(x: np.ndarray) -> np.ndarray:
    """Real signed cube root squared: x^(2/3) with cbrt taken on the reals."""
    return np.cbrt(x) ** 2


def ssm_g_pdf(params: SsmParams, t) -> float | np.ndarray:
    """Closed-form density of the product law for a single-atom bulk."""
    c = params.c
    s2 = params.sigma2
    consts = ssm_closed_forms(params)
    pts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(pts <= 0.0):
        raise ValueError("ssm_g_pdf requires t > 0")
    x = pts * pts
    inside = (x >= consts.alpha) & (x <= consts.beta)
    prod = np.clip((x - consts.alpha) * (consts.beta - x), 0.0, None)
    disc = pts * np.sqrt(prod)
    shift = (9.0 * (c + 1.0) * s2 * x + (2.0 * c - 1.0) ** 3 * s2**3) / (3.0 * np.sqrt(3.0))
    kappa = (
        _cbrt_sq(disc + shift)
        + _cbrt_sq(disc - shift)
        + (3.0 * x + (2.0 * c - 1.0) ** 2 * s2 * s2) / 3.0
    )
    if np.any(kappa[inside] <= 0.0):
        raise SolverError("cube-root branch failure: kappa <= 0 inside the support")
    out = np.where(inside, np.sqrt(prod) / (kappa * np.pi * c * s2), 0.0)
    return float(out[0]) if np.ndim(t) == 0 else out


def ssm_f_pdf(params: SsmParams, t) -> float | np.ndarray:
    """Closed-form density of the classical law for a single-atom bulk."""
    c = params.c
    s2 = params.sigma2
    consts = ssm_closed_forms(params)
    pts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(pts <= 0.0):
        raise ValueError("ssm_f_pdf requires t > 0")
    inside = (pts >= consts.a_prime) & (pts <= consts.b_prime)
    prod = np.clip((pts - consts.a_prime) * (consts.b_prime - pts), 0.0, None)
    out = np.where(inside, np.sqrt(prod) / (2.0 * np.pi * c * s2 * pts), 0.0)
    return float(out[0]) if np.ndim(t) == 0 else out


def _cdf_from_pdf(pdf, lower: float, upper: float, mass0: float, t) -> float | np.ndarray:
    """mass0 + integral of pdf from lower to min(t, upper), segment-cached."""
    pts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(pts < 0.0):
        raise ValueError("cdf requires t >= 0")
    clipped = np.clip(pts, lower, upper)
    order = np.argsort(clipped)
    cum = np.empty(pts.shape)
    prev_x = lower
    prev_val = mass0
    for i in order:
        x = clipped[i]
        if x > prev_x:
            seg, _ = quad(pdf, prev_x, x, epsabs=1e-11, epsrel=1e-11, limit=200)
            prev_val += seg
            prev_x = x
        cum[i] = prev_val
    cum = np.clip(cum, 0.0, 1.0)
    cum[pts >= upper] = 1.0
    return float(cum[0]) if np.ndim(t) == 0 else cum


def ssm_g_cdf(params: SsmParams, t) -> float | np.ndarray:
    """Closed-form CDF of the product law (point mass at zero included)."""
    consts = ssm_closed_forms(params)
    return _cdf_from_pdf(
        lambda x: ssm_g_pdf(params, x) if x > 0.0 else 0.0,
        consts.a,
        consts.b,
        consts.mass0_ppca,
        t,
    )


def ssm_f_cdf(params: SsmParams, t) -> float | np.ndarray:
    """Closed-form CDF of the classical law (point mass at zero included)."""
    consts = ssm_closed_forms(params)
    return _cdf_from_pdf(
        lambda x: ssm_f_pdf(params, x) if x > 0.0 else 0.0,
        consts.a_prime,
        consts.b_prime,
        consts.mass0_pca,
        t,
    )


# ---------------------------------------------------------------------------
# bias comparison and the efficiency-of-separation curve
# ---------------------------------------------------------------------------


def bias_report(c: float, h: PopulationSpectrum, lam: float) -> BiasReport:
    """Limits of one spike under both estimators, plus the bias gap.

    Requires the spike to be distant for both methods (above the product
    threshold, which dominates the classical one).
    """
    lam = float(lam)
    ppca_thr = ppca_threshold(c, h)
    pca_thr = pca_threshold(c, h)
    if lam <= ppca_thr.threshold or lam <= pca_thr.threshold:
        raise ValueError(
            f"spike {lam!r} is not distant for both methods "
            f"(thresholds {ppca_thr.threshold!r}, {pca_thr.threshold!r})"
        )
    ppca_val = float(ppca_psi(c, h, lam))
    pca_val = float(psi(c, h, lam))
    return BiasReport(spike=lam, ppca=ppca_val, pca=pca_val, gap=pca_val - ppca_val)


def rho(c) -> float | np.ndarray:
    """Edge-separation efficiency of the product estimator vs the classical one.

    Equals ((1+sqrt(c))/sqrt(2)) * ((2+c+sqrt(c^2+4c))/(1+c+sqrt(c^2+4c)))^(1/2);
    equals 1 at c=0 and increases with c.
    """
    arr = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("rho requires c >= 0")
    root = np.sqrt(arr * arr + 4.0 * arr)
    out = ((1.0 + np.sqrt(arr)) / np.sqrt(2.0)) * np.sqrt(
        (2.0 + arr + root) / (1.0 + arr + root)
    )
    return float(out[0]) if np.ndim(c) == 0 else out
