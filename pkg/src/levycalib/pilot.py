"""First-stage plug-in estimators.

The mean is estimated by the sample mean of the increments.  The Fourier
transform of nu_sigma is estimated spectrally from ratios of empirical CF
derivatives,

    Fnu_tilde(u) = [ (phi_hat'(u)/phi_hat(u))^2 - phi_hat''(u)/phi_hat(u) ]
                   * 1{ |phi_hat(u)| >= kappa n^(-1/2) },

which is the plug-in of F nu_sigma = (phi'/phi)^2 - phi''/phi with the ratio
zeroed wherever the empirical CF falls below the noise-level threshold.  At
u = 0 this is the sample variance.  The pilot measure is obtained by weighted
linear least squares matching a GridMeasure's Fourier transform to the
spectral estimate over the frequency grid; its atom is fixed to zero, so near
a true Gaussian component the pilot density is forced to pile up next to the
origin (the second-stage fit recovers the atom).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .charfn import FrequencyGrid, SampleSet, empirical_cf_triple
from .measure import GridMeasure, GridShape

__all__ = [
    "PilotConfig",
    "pilot_mean",
    "pilot_fnu",
    "project_fnu_values",
    "project_pilot",
]

_RIDGE = 1e-8


@dataclass(frozen=True)
class PilotConfig:
    """Threshold constant, frequency grid, and target measure geometry."""

    kappa: float = 1.0
    freq_grid: FrequencyGrid = field(default_factory=FrequencyGrid)
    target: GridShape = GridShape(-10.0, 10.0, 16)

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ValueError("kappa must be > 0")


def pilot_mean(samples: SampleSet) -> float:
    """Sample mean of the increments, i.e. X_n / n."""
    return float(samples.increments.mean())


def _fnu_from_triple(e0, e1, e2, n: int, kappa: float):
    """Spectral estimate and indicator mask from an empirical CF triple."""
    mask = np.abs(e0) >= kappa / np.sqrt(n)
    safe = np.where(mask, e0, 1.0)
    ratio1 = e1 / safe
    fnu = (ratio1 ** 2 - e2 / safe) * mask
    return fnu, mask


def pilot_fnu(samples: SampleSet, cfg: PilotConfig, u):
    """Thresholded spectral estimate of F nu_sigma at u (0 where cut off)."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    triple = empirical_cf_triple(samples, u_arr)
    fnu, _ = _fnu_from_triple(*triple, samples.n, cfg.kappa)
    if np.isscalar(u) or np.ndim(u) == 0:
        return complex(fnu[0])
    return fnu


def project_fnu_values(fnu: np.ndarray, mask: np.ndarray, cfg: PilotConfig) -> GridMeasure:
    """Project spectral values onto a GridMeasure by weighted least squares.

    Minimizes sum_u w(u)^2 1{mask} |F[measure](u) - fnu(u)|^2 over the bin
    values (the atom is fixed at zero), then clips negative bins at zero.
    Singular normal equations fall back to a ridge term and warn.
    """
    lo, hi, n_bins = cfg.target
    nodes = cfg.freq_grid.nodes
    w = cfg.freq_grid.weights * mask
    width = (hi - lo) / n_bins
    centers = lo + width * (np.arange(n_bins) + 0.5)
    # bin-indicator Fourier basis
    basis = width * np.sinc(0.5 * width * nodes[:, None] / np.pi) \
        * np.exp(1j * np.multiply.outer(nodes, centers))
    aw = basis * w[:, None]
    yw = np.asarray(fnu, dtype=complex) * w
    a_real = np.vstack([aw.real, aw.imag])
    y_real = np.concatenate([yw.real, yw.imag])
    values, _, rank, _ = np.linalg.lstsq(a_real, y_real, rcond=None)
    if rank < n_bins:
        warnings.warn("pilot projection: singular normal equations, using ridge",
                      stacklevel=2)
        gram = a_real.T @ a_real + _RIDGE * np.eye(n_bins)
        values = np.linalg.solve(gram, a_real.T @ y_real)
    return GridMeasure(0.0, lo, hi, np.clip(values, 0.0, None))


def project_pilot(samples: SampleSet, cfg: PilotConfig) -> tuple[float, GridMeasure]:
    """Two-component pilot: (sample mean, projected spectral measure)."""
    triple = empirical_cf_triple(samples, cfg.freq_grid.nodes)
    fnu, mask = _fnu_from_triple(*triple, samples.n, cfg.kappa)
    return pilot_mean(samples), project_fnu_values(fnu, mask, cfg)
