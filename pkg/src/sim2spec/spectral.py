"""Windowed 3D DFT, low-pass cube truncation and the retained-energy model.

Transform layout: per-frame 2D spatial DFT, then a temporal DFT of the
window-weighted frame spectra.  All axes are stored in shifted order with
signed integer bin grids centered at zero.  The forward transform is
unnormalized, so Parseval reads ``sum |X|^2 == N * sum |x|^2`` with
``N = T*H*W`` (rect window).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, DegenerateInputError, SpectralConfig, VideoWindow

__all__ = [
    "Spectrum3D",
    "EnergyGrid",
    "EtaParams",
    "temporal_window",
    "signed_bins",
    "keep_count",
    "keep_mask_1d",
    "spatial_transform",
    "spectral_transform",
    "lowpass_cube",
    "crop_to_cube",
    "eta_retention",
    "measured_retention",
]


def temporal_window(frames_t: int, kind: str) -> np.ndarray:
    """Temporal taper h[t]; Hann uses the symmetric T-1 denominator."""
    if kind == "rect" or frames_t == 1:
        return np.ones(frames_t)
    if kind == "hann":
        t = np.arange(frames_t)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * t / (frames_t - 1)))
    raise ConfigError(f"unknown window kind {kind!r}")


def signed_bins(n: int) -> np.ndarray:
    """Signed integer frequency bins in shifted order, zero at the center."""
    return np.fft.fftshift(np.fft.fftfreq(n) * n).astype(np.int64)


@dataclass(frozen=True)
class Spectrum3D:
    """Complex DFT coefficients indexed ``(axis0, omega_y, omega_x)``.

    ``axis0`` is the temporal-frequency axis for the full transform and the
    frame index for per-frame spatial spectra; ``freq_t`` is the signed bin
    grid in the former case and plain frame indices in the latter
    (``temporal_axis_is_time`` tells them apart).
    """

    coeffs: np.ndarray
    freq_t: np.ndarray
    freq_y: np.ndarray
    freq_x: np.ndarray
    temporal_axis_is_time: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 3:
            raise ConfigError("spectrum must be 3D")
        if (len(self.freq_t), len(self.freq_y), len(self.freq_x)) != c.shape:
            raise ConfigError("frequency grids do not match coefficient shape")

    @property
    def shape(self):
        return self.coeffs.shape

    def energy(self) -> "EnergyGrid":
        return EnergyGrid(np.abs(self.coeffs) ** 2, self.freq_t, self.freq_y,
                          self.freq_x, self.temporal_axis_is_time)


@dataclass(frozen=True)
class EnergyGrid:
    """Nonnegative ``|coeff|^2`` values on the same grid as a Spectrum3D."""

    energy: np.ndarray
    freq_t: np.ndarray
    freq_y: np.ndarray
    freq_x: np.ndarray
    temporal_axis_is_time: bool = False

    def __post_init__(self):
        e = np.asarray(self.energy)
        if np.any(e < 0) or not np.all(np.isfinite(e)):
            raise ConfigError("energies must be finite and nonnegative")


def spatial_transform(v: VideoWindow) -> Spectrum3D:
    """Per-frame 2D spatial DFT, shifted, frame index kept on axis 0.

    The spatial phase origin is the frame center ``(H//2, W//2)``: in-plane
    rotation and scaling act about the image center, and only with a
    centered origin do they rotate/dilate the complex spectrum without an
    extra position-dependent phase.  Translation fits are unaffected (the
    recentering is a fixed per-bin phase).
    """
    centered = np.fft.ifftshift(v.data, axes=(1, 2))
    spec = np.fft.fftshift(np.fft.fft2(centered, axes=(1, 2)), axes=(1, 2))
    return Spectrum3D(spec, np.arange(v.frames_t),
                      signed_bins(v.height), signed_bins(v.width),
                      temporal_axis_is_time=True)


def spectral_transform(v: VideoWindow, cfg: SpectralConfig) -> Spectrum3D:
    """Full spatiotemporal transform of a (mean-shifted) window.

    T == 1 degenerates to the identity temporal transform; that is not an
    error, the spectrum simply has a single temporal bin.
    """
    frames = spatial_transform(v)
    h = temporal_window(v.frames_t, cfg.window_kind)
    weighted = frames.coeffs * h[:, None, None]
    spec = np.fft.fftshift(np.fft.fft(weighted, axis=0), axes=0)
    return Spectrum3D(spec, signed_bins(v.frames_t), frames.freq_y, frames.freq_x)


def keep_count(n: int, ratio: float) -> int:
    """Bins retained along one dimension: floor(ratio*(n-1)) + 1, min 2."""
    if not (0.0 < ratio <= 1.0):
        raise ConfigError("lowpass ratio must be in (0, 1]")
    return min(n, max(2, int(math.floor(ratio * (n - 1))) + 1))


def keep_mask_1d(n: int, ratio: float) -> np.ndarray:
    """Boolean keep-mask over the shifted bin grid of one dimension.

    Bins are admitted in the order 0, +1, -1, +2, -2, ... until the
    per-dimension count is reached, so the kept set is a centered window
    (one extra positive bin when the count is even).
    """
    idx = signed_bins(n)
    order = np.lexsort((idx < 0, np.abs(idx)))
    mask = np.zeros(n, dtype=bool)
    mask[order[:keep_count(n, ratio)]] = True
    return mask


def lowpass_cube(s: Spectrum3D, ratio: float) -> Spectrum3D:
    """Zero all coefficients outside the centered low-frequency cube."""
    mt = keep_mask_1d(len(s.freq_t), ratio) if not s.temporal_axis_is_time \
        else np.ones(len(s.freq_t), dtype=bool)
    my = keep_mask_1d(len(s.freq_y), ratio)
    mx = keep_mask_1d(len(s.freq_x), ratio)
    mask = mt[:, None, None] & my[None, :, None] & mx[None, None, :]
    return Spectrum3D(np.where(mask, s.coeffs, 0.0), s.freq_t, s.freq_y,
                      s.freq_x, s.temporal_axis_is_time)


def crop_to_cube(s: Spectrum3D, ratio: float) -> Spectrum3D:
    """Like lowpass_cube but drops the zeroed bins instead of masking them.

    Signed bin values of the retained coefficients are preserved, so sample
    coordinates are unchanged; only the array gets smaller.  The frame axis
    of per-frame spectra is never cropped.
    """
    if s.temporal_axis_is_time:
        mt = np.ones(len(s.freq_t), dtype=bool)
    else:
        mt = keep_mask_1d(len(s.freq_t), ratio)
    my = keep_mask_1d(len(s.freq_y), ratio)
    mx = keep_mask_1d(len(s.freq_x), ratio)
    coeffs = s.coeffs[np.ix_(mt, my, mx)]
    return Spectrum3D(coeffs, s.freq_t[mt], s.freq_y[my], s.freq_x[mx],
                      s.temporal_axis_is_time)


@dataclass(frozen=True)
class EtaParams:
    """Radial power-law model of video spectra on the dimensionless grid."""

    kappa: float
    max_radius: float = math.sqrt(3.0)
    min_radius: float = 1e-3

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigError("spectral exponent must be positive")
        if not (0.0 < self.min_radius < self.max_radius):
            raise ConfigError("need 0 < min_radius < max_radius")

    @classmethod
    def for_grid(cls, frames_t: int, height: int, width: int,
                 kappa: float = 1.8) -> "EtaParams":
        eps = min(1.0 / (frames_t - 1), 1.0 / (height - 1), 1.0 / (width - 1))
        return cls(kappa=kappa, min_radius=eps)


def _eta_ball(ratio: float, p: EtaParams) -> float:
    """Energy fraction of the power-law model inside the ball of radius
    ratio * max_radius, with the logarithmic branch at kappa = 3/2."""
    if ratio >= 1.0:
        return 1.0
    r_lo, r_hi = p.min_radius, p.max_radius
    cut = max(ratio * r_hi, r_lo)
    expo = 3.0 - 2.0 * p.kappa
    if abs(expo) < 1e-12:
        return math.log(cut / r_lo) / math.log(r_hi / r_lo)
    return (cut ** expo - r_lo ** expo) / (r_hi ** expo - r_lo ** expo)


def eta_retention(ratio: float, p: EtaParams) -> dict:
    """Model-predicted retained-energy fractions for the low-pass cube.

    Returns the closed-form ball fraction at the cube's inscribed radius and
    the geometric two-sided bounds for the cube itself
    (``eta_ball(r) <= eta_cube(r) <= eta_ball(min(1, sqrt(3) r))``).
    """
    if not (0.0 < ratio <= 1.0):
        raise ConfigError("ratio must be in (0, 1]")
    lo = _eta_ball(ratio, p)
    hi = _eta_ball(min(1.0, math.sqrt(3.0) * ratio), p)
    return {"eta_ball": lo, "eta_cube_lo": lo, "eta_cube_hi": hi}


def measured_retention(s: Spectrum3D, ratio: float) -> float:
    """Fraction of spectral energy inside the low-pass cube."""
    e = np.abs(s.coeffs) ** 2
    total = e.sum()
    if total <= 0.0:
        raise DegenerateInputError("zero total energy; retention undefined")
    mt = keep_mask_1d(len(s.freq_t), ratio)
    my = keep_mask_1d(len(s.freq_y), ratio)
    mx = keep_mask_1d(len(s.freq_x), ratio)
    inside = e[np.ix_(mt, my, mx)].sum()
    return float(inside / total)
