"""Energy and observability gating for weighted least-squares samples.

A sample's weight is ``w = g_E * g_obs * E``: a logistic energy gate keeps
the noise floor from steering fits, and the observability gate
``m^2 / (m^2 + lambda_obs)`` removes harmonic samples that carry no motion
information (exactly zero at m = 0).  The realized gate extremes are
recorded with the samples because the concentration bounds need the gate
ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpectralConfig, UnobservableError

__all__ = ["WeightedSamples", "energy_gate", "obs_gate", "compute_weights",
           "build_samples"]


@dataclass(frozen=True)
class WeightedSamples:
    """Design rows, targets, energies and gated weights for one WLS fit.

    ``rows`` has the unified layout ``[omega_x, omega_y, m, nu, 1]``; slices
    zero out the columns they do not use.  ``g_lo``/``g_hi`` bound the gate
    factor over every carried sample (``w = g * E`` with ``g`` in
    ``[g_lo, g_hi]``).
    """

    rows: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    energies: np.ndarray
    g_lo: float
    g_hi: float

    def __post_init__(self):
        n = len(self.targets)
        if self.rows.shape != (n, 5) or len(self.weights) != n \
                or len(self.energies) != n:
            raise ValueError("sample arrays must have matching lengths")

    @property
    def n(self) -> int:
        return len(self.targets)


def energy_gate(energies: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    """Logistic gate sigmoid(f * (E/E_max - tau_E)); E_max must be > 0."""
    e_max = float(np.max(energies))
    if e_max <= 0.0:
        raise UnobservableError("all-zero energies: nothing to gate")
    z = cfg.energy_gate_sharpness * (energies / e_max - cfg.energy_gate_threshold)
    return 1.0 / (1.0 + np.exp(-z))


def obs_gate(harmonic_index: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    """m^2 / (m^2 + lambda_obs); zero at m = 0, approaching 1 for large m."""
    m2 = np.asarray(harmonic_index, dtype=np.float64) ** 2
    return m2 / (m2 + cfg.obs_gate)


def compute_weights(energies: np.ndarray, harmonic_index, cfg: SpectralConfig):
    """Gated weights plus the realized gate bounds ``(g_lo, g_hi)``.

    ``harmonic_index`` is the per-sample m (or nu) for rotation/scaling
    samples, or None for translation samples (observability gate 1).
    Bounds are taken over samples with a nonzero gate so the ratio
    ``g_hi/g_lo`` that feeds the band-capture bound is finite.
    """
    energies = np.asarray(energies, dtype=np.float64)
    g = energy_gate(energies, cfg)
    if harmonic_index is not None:
        g = g * obs_gate(harmonic_index, cfg)
    w = g * energies
    positive = g > 0.0
    if not np.any(positive):
        raise UnobservableError("observability gate removed every sample")
    return w, float(g[positive].min()), float(g[positive].max())


def build_samples(omega_x, omega_y, m, nu, omega_t, energies,
                  harmonic_index, cfg: SpectralConfig) -> WeightedSamples:
    """Assemble a WeightedSamples block in the unified row layout."""
    energies = np.asarray(energies, dtype=np.float64).ravel()
    n = energies.size
    cols = []
    for c in (omega_x, omega_y, m, nu):
        c = np.asarray(c, dtype=np.float64).ravel()
        cols.append(np.broadcast_to(c, (n,)) if c.size in (1, n) else c)
    rows = np.column_stack(cols + [np.ones(n)])
    targets = -np.asarray(omega_t, dtype=np.float64).ravel()
    w, g_lo, g_hi = compute_weights(energies, harmonic_index, cfg)
    return WeightedSamples(rows, targets, w, energies, g_lo, g_hi)
