"""Estimator-style wrappers around the processing chain.

The classes follow the scikit-learn conventions: hyper-parameters are set in
``__init__`` and exposed through ``get_params``/``set_params``, ``fit``
returns ``self``, and learned state ends in an underscore. Time series are
passed either as :class:`~pvtmodal.core.AcquisitionRecord` or as arrays of
shape ``(n_times, n_channels)``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_record, check_shapes
from .metrics import optimize_placement
from .pipeline import PipelineConfig, identify
from .spectral import DEFAULT_OVERLAP, DEFAULT_SEGMENT, anpsd, welch_psd
from .stabilisation import StabConfig


class WelchANPSD(TransformerMixin, BaseEstimator):
    """Welch PSD per channel followed by the averaged-normalised spectrum.

    ``transform`` returns the ANPSD values on ``frequencies_``; the whole
    record is one observation, so the output is 1-D.

    Parameters
    ----------
    sample_rate : float
        Used only when ``X`` is a bare array.
    segment_length, overlap, window
        Welch settings.
    normalisation : {"integral", "max"}
    """

    def __init__(self, sample_rate=1066.0, segment_length=DEFAULT_SEGMENT,
                 overlap=DEFAULT_OVERLAP, window="hann", normalisation="integral"):
        self.sample_rate = sample_rate
        self.segment_length = segment_length
        self.overlap = overlap
        self.window = window
        self.normalisation = normalisation

    def _estimate(self, X):
        record = as_record(X, self.sample_rate)
        psd = welch_psd(record, self.segment_length, self.overlap, self.window)
        return psd, anpsd(psd, self.normalisation)

    def fit(self, X, y=None):
        self.psd_, self.anpsd_ = self._estimate(X)
        self.frequencies_ = self.psd_.frequencies
        self.n_features_in_ = self.psd_.values.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "frequencies_")
        psd, est = self._estimate(X)
        if psd.values.shape[0] != self.n_features_in_:
            raise ValueError(
                f"X has {psd.values.shape[0]} channels, expected {self.n_features_in_}"
            )
        if not np.array_equal(est.frequencies, self.frequencies_):
            raise ValueError("frequency grid differs from the fitted one; check sample_rate")
        return est.values


class OutputOnlyModalIdentifier(BaseEstimator):
    """Correlation-driven Loewner identification with a stabilisation sweep.

    Parameters
    ----------
    sample_rate : float
        Used only when ``X`` is a bare array.
    sensor_positions : array-like, optional
        Span stations of the array columns; decide the default reference.
    reference : str, optional
        Reference channel id (default: the sensor farthest along the span).
    max_lag : float
        Correlation length in seconds.
    taper : {"auto", "none", "exponential"}
    taper_decay, taper_end_weight : float
        See :class:`~pvtmodal.pipeline.PipelineConfig`.
    orders : tuple of int
        ``(k_min, k_step, k_max)``.
    damping_range, freq_range : tuple of float
        Hard screens.
    freq_tol, damp_tol, mac_tol : float
        Soft stability tolerances (relative, relative, minimum MAC).
    min_cluster_size : int
    n_jobs : int
        Threads used for the per-order realizations.

    Attributes
    ----------
    modes_ : ModeSet
    diagram_ : StabilisationDiagram
    spectra_ : HalfSpectrumSet
    correlations_ : CorrelationSet
    """

    def __init__(self, sample_rate=1066.0, sensor_positions=None, reference=None,
                 max_lag=10.0, taper="auto", taper_decay=0.0, taper_end_weight=0.01,
                 refinement=4, orders=(32, 2, 60), damping_range=(0.005, 0.03),
                 freq_range=(0.0, 30.0), freq_tol=0.01, damp_tol=0.05, mac_tol=0.95,
                 min_cluster_size=5, n_jobs=1):
        self.sample_rate = sample_rate
        self.sensor_positions = sensor_positions
        self.reference = reference
        self.max_lag = max_lag
        self.taper = taper
        self.taper_decay = taper_decay
        self.taper_end_weight = taper_end_weight
        self.refinement = refinement
        self.orders = orders
        self.damping_range = damping_range
        self.freq_range = freq_range
        self.freq_tol = freq_tol
        self.damp_tol = damp_tol
        self.mac_tol = mac_tol
        self.min_cluster_size = min_cluster_size
        self.n_jobs = n_jobs

    def pipeline_config(self) -> PipelineConfig:
        k_min, k_step, k_max = self.orders
        stab = StabConfig(k_min, k_max, k_step, tuple(self.damping_range),
                          tuple(self.freq_range), self.freq_tol, self.damp_tol,
                          self.mac_tol, self.min_cluster_size)
        return PipelineConfig(reference=self.reference, max_lag=self.max_lag,
                              taper=self.taper, taper_decay=self.taper_decay,
                              taper_end_weight=self.taper_end_weight,
                              refinement=self.refinement, n_jobs=self.n_jobs, stab=stab)

    def fit(self, X, y=None):
        record = as_record(X, self.sample_rate, self.sensor_positions)
        result = identify(record, self.pipeline_config())
        self.correlations_ = result.correlations
        self.spectra_ = result.spectra
        self.diagram_ = result.diagram
        self.modes_ = result.modes
        self.n_features_in_ = record.n_channels
        return self

    @property
    def frequencies_(self) -> np.ndarray:
        check_is_fitted(self, "modes_")
        return self.modes_.frequencies

    @property
    def damping_ratios_(self) -> np.ndarray:
        check_is_fitted(self, "modes_")
        return self.modes_.damping_ratios

    def predict(self, frequencies):
        """Modal synthesis of the half-spectra at ``frequencies`` (Hz).

        Each identified mode contributes ``phi / (s - lambda)`` plus its
        conjugate, with ``phi`` the unit-peak shape; the result has shape
        ``(n_frequencies, n_channels)`` and is meant for overlay plots of
        the fitted poles, not for absolute amplitudes.
        """
        check_is_fitted(self, "modes_")
        s = 2j * np.pi * np.asarray(frequencies, dtype=float)[:, None]
        out = np.zeros((s.shape[0], self.n_features_in_), dtype=complex)
        for m in self.modes_:
            w = 2 * np.pi * m.frequency_hz
            lam = w * (-m.damping_ratio + 1j * np.sqrt(1 - m.damping_ratio**2))
            out += m.shape[None, :] / (s - lam) + m.shape.conj()[None, :] / (s - lam.conjugate())
        return out


class AutoMACPlacement(BaseEstimator):
    """Pick sensor stations minimising the off-diagonal AutoMAC sum.

    ``fit(shapes, positions)`` takes mode shapes sampled at every candidate,
    shape ``(n_candidates, n_modes)``; ``transform`` keeps the chosen rows.
    """

    def __init__(self, n_sensors=7, method="auto", required=()):
        self.n_sensors = n_sensors
        self.method = method
        self.required = required

    def fit(self, shapes, positions=None):
        Phi = check_shapes(shapes)
        if positions is None:
            positions = np.arange(Phi.shape[0], dtype=float)
        res = optimize_placement(positions, Phi, self.n_sensors, self.method, self.required)
        self.result_ = res
        self.positions_ = np.array(res.positions)
        self.indices_ = np.array(res.indices)
        self.objective_ = res.objective
        self.search_ = res.search
        self.n_features_in_ = Phi.shape[1]
        return self

    def transform(self, shapes):
        check_is_fitted(self, "indices_")
        return check_shapes(shapes)[self.indices_]
