"""Welch PSD per channel, ANPSD construction and peak screening."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.integrate import trapezoid

from .core import AcquisitionRecord

DEFAULT_SEGMENT = 2**13
DEFAULT_OVERLAP = 0.5


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    frequencies: np.ndarray
    values: np.ndarray  # (n_channels, n_freqs), (m/s^2)^2/Hz
    channel_ids: tuple[str, ...]
    segment_length: int
    overlap: float
    window: str = "hann"

    @property
    def df(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


@dataclass(frozen=True, eq=False)
class AnpsdEstimate:
    frequencies: np.ndarray
    values: np.ndarray
    normalisation: str = "integral"


def welch_psd(
    record: AcquisitionRecord,
    segment_length: int = DEFAULT_SEGMENT,
    overlap: float = DEFAULT_OVERLAP,
    window: str = "hann",
) -> PsdEstimate:
    """One-sided Welch density for every channel of ``record``.

    Each segment has its mean removed. The window is energy-normalised so the
    integral of the density equals the channel variance.
    """
    segment_length = int(segment_length)
    n = record.n_samples
    if segment_length < 2:
        raise ValueError("segment_length must be at least 2 samples")
    if segment_length > n:
        raise ValueError(
            f"segment_length {segment_length} exceeds record length {n}"
        )
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must lie in [0, 1), got {overlap}")
    noverlap = int(round(overlap * segment_length))
    step = segment_length - noverlap
    n_segments = 1 + (n - segment_length) // step
    if n_segments < 2:
        raise ValueError(
            f"only {n_segments} segment fits in {n} samples; use a shorter segment_length"
        )
    freqs, pxx = signal.welch(
        record.samples,
        fs=record.sample_rate,
        window=window,
        nperseg=segment_length,
        noverlap=noverlap,
        detrend="constant",
        return_onesided=True,
        scaling="density",
        axis=-1,
    )
    return PsdEstimate(
        freqs, np.maximum(pxx, 0.0), tuple(record.sensor_ids), segment_length, overlap, window
    )


def anpsd(psd: PsdEstimate, normalisation: str = "integral") -> AnpsdEstimate:
    """Normalise every channel PSD, then average across channels.

    ``normalisation="integral"`` divides by the trapezoidal integral over the
    grid so the result is a unit-area density; ``"max"`` divides by the peak.
    """
    values = np.atleast_2d(psd.values)
    if values.shape[0] < 1:
        raise ValueError("anpsd needs at least one channel")
    if normalisation == "integral":
        scale = trapezoid(values, psd.frequencies, axis=-1)
    elif normalisation == "max":
        scale = values.max(axis=-1)
    else:
        raise ValueError(f"unknown normalisation {normalisation!r}")
    for i, s in enumerate(scale):
        if not s > 0:
            name = psd.channel_ids[i] if i < len(psd.channel_ids) else str(i)
            raise ValueError(f"channel {name!r} has an identically zero PSD")
    normed = values / scale[:, None]
    return AnpsdEstimate(psd.frequencies, normed.mean(axis=0), normalisation)


def peak_screen(anpsd_est: AnpsdEstimate, band=(0.0, 30.0), min_prominence: float = 0.01):
    """Frequencies of prominent local maxima inside ``band``.

    A maximum is kept when its prominence exceeds ``min_prominence`` times the
    global maximum of the spectrum. Two peaks closer than the grid spacing
    cannot be separated.
    """
    f = anpsd_est.frequencies
    lo, hi = band
    if not lo < hi:
        raise ValueError(f"empty band {band}")
    if lo < f[0] - 1e-12 or hi > f[-1] + 1e-12:
        raise ValueError(f"band {band} outside grid [{f[0]}, {f[-1]}]")
    inside = (f >= lo) & (f <= hi)
    if not inside.any():
        raise ValueError(f"no grid points inside band {band}")
    v = anpsd_est.values
    vmax = v.max()
    if vmax <= 0:
        return []
    idx, _ = signal.find_peaks(v, prominence=min_prominence * vmax)
    return [float(f[i]) for i in idx if inside[i]]
