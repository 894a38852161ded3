"""Natural Excitation Technique: output correlations and their half-spectra.

Under broadband excitation the positive-lag cross-correlations between
response channels decay like free responses of the structure, so they stand
in for impulse responses during identification.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .core import AcquisitionRecord

DEFAULT_MAX_LAG = 10.0


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    reference_channel: str
    lags: np.ndarray  # seconds, starts at 0, spacing 1/sample_rate
    values: np.ndarray  # (n_channels, n_lags)
    channel_ids: tuple[str, ...]
    sample_rate: float

    @property
    def max_lag(self) -> float:
        return float(self.lags[-1])


@dataclass(frozen=True)
class Taper:
    """Window applied to correlation traces before the transform.

    ``kind="exponential"`` multiplies by ``exp(-decay * tau)``; this shifts every
    pole left by ``decay`` rad/s, which identification must undo.
    """

    kind: str = "none"
    decay: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "exponential"):
            raise ValueError(f"unknown taper kind {self.kind!r}")
        if self.decay < 0:
            raise ValueError("taper decay must be non-negative")

    @property
    def pole_shift(self) -> float:
        return self.decay if self.kind == "exponential" else 0.0

    def weights(self, lags: np.ndarray) -> np.ndarray:
        if self.kind == "exponential":
            return np.exp(-self.decay * lags)
        return np.ones_like(lags)

    @classmethod
    def for_lag(cls, max_lag: float, end_weight: float = 0.01) -> "Taper":
        """Exponential taper that falls to ``end_weight`` at ``max_lag``.

        Truncating a slowly decaying correlation at ``max_lag`` adds ripple
        with period ``1 / max_lag`` to its transform, which the realization
        happily models as extra poles. Forcing the trace to (almost) zero at
        the cut removes the ripple while keeping the data exactly rational.
        """
        if max_lag <= 0 or not 0 < end_weight < 1:
            raise ValueError("need max_lag > 0 and 0 < end_weight < 1")
        return cls("exponential", float(-np.log(end_weight) / max_lag))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "decay": self.decay}


@dataclass(frozen=True, eq=False)
class HalfSpectrumSet:
    frequencies: np.ndarray  # Hz
    values: np.ndarray  # (n_freqs, n_channels) complex
    channel_ids: tuple[str, ...]
    taper: Taper
    reference_channel: str = ""

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


def next_correlations(
    record: AcquisitionRecord, reference: str | None = None, max_lag: float = DEFAULT_MAX_LAG
) -> CorrelationSet:
    """Unbiased positive-lag cross-correlations against one reference channel.

    ``R[p, m] = sum_n y_p[n + m] y_ref[n] / (N - m)`` on mean-removed channels.
    The default reference is the channel farthest along the span.
    """
    if reference is None:
        reference = default_reference(record)
    ref = record.channel_index(reference)
    n = record.n_samples
    n_lags = int(round(max_lag * record.sample_rate)) + 1
    if max_lag <= 0:
        raise ValueError("max_lag must be positive")
    if max_lag > record.duration / 4 + 0.5 / record.sample_rate:
        raise ValueError(
            f"max_lag {max_lag} s exceeds a quarter of the record ({record.duration:.3f} s)"
        )
    y = record.samples - record.samples.mean(axis=1, keepdims=True)
    nfft = sp_fft.next_fast_len(n + n_lags)
    Y = sp_fft.rfft(y, nfft, axis=-1)
    cross = sp_fft.irfft(Y * np.conj(Y[ref]), nfft, axis=-1)[:, :n_lags]
    cross /= (n - np.arange(n_lags))
    # direct sum for the zero lag keeps R_ref(0) equal to the variance to rounding
    cross[:, 0] = y @ y[ref] / n
    lags = np.arange(n_lags) / record.sample_rate
    return CorrelationSet(reference, lags, cross, tuple(record.sensor_ids), record.sample_rate)


def default_reference(record: AcquisitionRecord) -> str:
    positions = [s.span_position for s in record.sensors]
    return record.sensors[int(np.argmax(positions))].id


def half_spectra(
    corrs: CorrelationSet, taper: Taper | None = None, refinement: int = 4
) -> HalfSpectrumSet:
    """One-sided DFT of the tapered positive-lag traces.

    Traces are zero-padded so the grid spacing is ``1 / (refinement * max_lag)``.
    Values are scaled by the lag step so they approximate the continuous
    transform.
    """
    taper = taper or Taper()
    if corrs.values.size == 0:
        raise ValueError("empty correlation set")
    if refinement < 4:
        raise ValueError("refinement must be at least 4")
    n_lags = corrs.values.shape[1]
    traces = corrs.values * taper.weights(corrs.lags)
    nfft = refinement * n_lags
    spec = sp_fft.rfft(traces, nfft, axis=-1) / corrs.sample_rate
    freqs = sp_fft.rfftfreq(nfft, 1.0 / corrs.sample_rate)
    return HalfSpectrumSet(freqs, spec.T, corrs.channel_ids, taper, corrs.reference_channel)
