"""Shared fixtures and independent closed-form oracles.

The flat-bulk Stieltjes transform has an explicit quadratic-formula solution;
it is coded here from scratch (not via the package's solver) so solver tests
compare against an independent implementation.
"""
from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from spikedcov import spectra


def mp_stieltjes_oracle(c: float, sigma2: float, z: complex) -> tuple[complex, complex]:
    """Companion and plain Stieltjes transform of the flat-bulk sample law.

    Solves the quadratic z*s2*mu^2 + (z + s2*(1-c))*mu + 1 = 0 for the
    companion transform mu and picks the upper-half-plane root; the plain
    transform follows from mu = c*m + (c-1)/z.
    """
    s2 = sigma2
    a = z * s2
    b = z + s2 * (1.0 - c)
    disc = cmath.sqrt(b * b - 4.0 * a)
    mu1 = (-b + disc) / (2.0 * a)
    mu2 = (-b - disc) / (2.0 * a)
    mu = mu1 if mu1.imag > 0 else mu2
    m = (mu - (c - 1.0) / z) / c
    return mu, m


def mp_density_oracle(c: float, sigma2: float, t: float) -> float:
    """Flat-bulk sample eigenvalue density from its explicit formula."""
    lo = sigma2 * (1.0 - math.sqrt(c)) ** 2
    hi = sigma2 * (1.0 + math.sqrt(c)) ** 2
    if t <= lo or t >= hi:
        return 0.0
    return math.sqrt((t - lo) * (hi - t)) / (2.0 * math.pi * c * sigma2 * t)


def random_bulk(rng: np.random.Generator, n_atoms: int) -> spectra.PopulationSpectrum:
    """Random discrete bulk law with distinct positive atoms."""
    vals = np.sort(rng.uniform(0.2, 3.0, size=n_atoms))
    while np.any(np.diff(vals) < 1e-3):
        vals = np.sort(rng.uniform(0.2, 3.0, size=n_atoms))
    wts = rng.dirichlet(np.ones(n_atoms))
    while np.any(wts < 0.05):
        wts = rng.dirichlet(np.ones(n_atoms))
    return spectra.make_spectrum(atoms=list(zip(vals, wts)))


@pytest.fixture
def flat_bulk() -> spectra.PopulationSpectrum:
    return spectra.make_spectrum(atoms=[(1.0, 1.0)])


@pytest.fixture
def two_atom_bulk() -> spectra.PopulationSpectrum:
    return spectra.make_spectrum(atoms=[(0.5, 0.4), (1.5, 0.6)])
