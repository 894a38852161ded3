"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .core import AcquisitionRecord, SensorSpec


def as_record(X, sample_rate: float, sensor_positions=None, sensor_ids=None,
              case_label: str = "") -> AcquisitionRecord:
    """Coerce ``X`` into an :class:`AcquisitionRecord`.

    Records pass through unchanged. Arrays follow the estimator convention
    of shape ``(n_times, n_channels)``; positions default to channel order
    (so the last column is treated as the tip) and ids to ``ch1..chN``.
    """
    if isinstance(X, AcquisitionRecord):
        return X
    arr = check_array(X, dtype=np.float64, ensure_min_samples=2)
    n_ch = arr.shape[1]
    if sensor_positions is None:
        sensor_positions = np.arange(n_ch, dtype=float)
    sensor_positions = np.asarray(sensor_positions, dtype=float).ravel()
    if sensor_positions.size != n_ch:
        raise ValueError(f"{sensor_positions.size} sensor positions for {n_ch} channels")
    if sensor_ids is None:
        sensor_ids = [f"ch{i + 1}" for i in range(n_ch)]
    if len(sensor_ids) != n_ch:
        raise ValueError(f"{len(sensor_ids)} sensor ids for {n_ch} channels")
    sensors = tuple(SensorSpec(str(i), float(p)) for i, p in zip(sensor_ids, sensor_positions))
    return AcquisitionRecord(sensors, sample_rate, arr.T, case_label)


def check_shapes(shapes) -> np.ndarray:
    """Mode-shape samples as a 2-D complex array ``(n_points, n_modes)``."""
    arr = np.asarray(shapes)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("shapes must be a non-empty (n_points, n_modes) array")
    arr = arr.astype(complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("shapes contain non-finite values")
    return arr
