"""Domain data model, campaign configuration and file I/O."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MODESET_SCHEMA_VERSION = 1


class RecordFormatError(ValueError):
    """A record file or record array violates the record contract."""


class ModeSetFormatError(ValueError):
    """A mode-set file cannot be read back into a valid ModeSet."""


@dataclass(frozen=True)
class SensorSpec:
    id: str
    span_position: float
    sensitivity: float = 0.1  # V/g, metadata only
    axis: str = "flapwise"

    def __post_init__(self):
        if not self.id or any(c.isspace() for c in self.id):
            raise ValueError(f"sensor id must be a non-empty token, got {self.id!r}")
        if not math.isfinite(self.span_position) or self.span_position < 0:
            raise ValueError(f"sensor {self.id}: span_position must be >= 0")
        if self.axis != "flapwise":
            raise ValueError(f"sensor {self.id}: unsupported axis {self.axis!r}")


@dataclass(frozen=True, eq=False)
class AcquisitionRecord:
    """Multichannel acceleration record.

    ``samples`` is channel-major, shape ``(n_channels, n_times)``, in m/s^2.
    The array is copied and frozen on construction.
    """

    sensors: tuple[SensorSpec, ...]
    sample_rate: float
    samples: np.ndarray
    case_label: str = ""
    config: dict | None = None

    def __post_init__(self):
        sensors = tuple(self.sensors)
        object.__setattr__(self, "sensors", sensors)
        data = np.array(self.samples, dtype=float, copy=True)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise RecordFormatError("samples must be a 2-D channel-major array")
        if data.shape[0] != len(sensors):
            raise RecordFormatError(
                f"{data.shape[0]} sample rows for {len(sensors)} sensors"
            )
        ids = [s.id for s in sensors]
        if len(set(ids)) != len(ids):
            raise RecordFormatError(f"duplicate sensor ids in {ids}")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise RecordFormatError(f"sample_rate must be positive, got {self.sample_rate}")
        bad = ~np.isfinite(data)
        if bad.any():
            ch, col = np.argwhere(bad)[0]
            raise RecordFormatError(
                f"non-finite sample in channel {ids[ch]!r} at time step {col}"
            )
        data.flags.writeable = False
        object.__setattr__(self, "samples", data)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def sensor_ids(self) -> list[str]:
        return [s.id for s in self.sensors]

    def channel_index(self, sensor_id: str) -> int:
        try:
            return self.sensor_ids.index(sensor_id)
        except ValueError:
            raise KeyError(f"unknown sensor id {sensor_id!r}; have {self.sensor_ids}") from None

    def scaled(self, factors) -> "AcquisitionRecord":
        """Copy of the record with each channel multiplied by its factor."""
        factors = np.asarray(factors, dtype=float).reshape(-1, 1)
        return AcquisitionRecord(
            self.sensors, self.sample_rate, self.samples * factors, self.case_label, self.config
        )


@dataclass(frozen=True)
class CaseDescriptor:
    """One row of a test matrix: motor condition, throttle and duration."""

    label: str
    motor: str  # off | constant | sweep
    duration: float
    throttle: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "throttle", tuple(float(x) for x in self.throttle))
        if self.motor not in ("off", "constant", "sweep"):
            raise ValueError(f"case {self.label}: motor must be off, constant or sweep")
        if self.duration <= 0:
            raise ValueError(f"case {self.label}: duration must be positive")
        if any(not 0.0 <= x <= 1.0 for x in self.throttle):
            raise ValueError(f"case {self.label}: throttle fractions must lie in [0, 1]")
        expected = {"off": 0, "constant": 1, "sweep": 2}[self.motor]
        if len(self.throttle) != expected:
            raise ValueError(
                f"case {self.label}: {self.motor} needs {expected} throttle value(s)"
            )
        if self.motor == "sweep" and not self.throttle[0] < self.throttle[1]:
            raise ValueError(f"case {self.label}: sweep needs start < end")


@dataclass(frozen=True)
class CampaignConfig:
    """Test matrix plus acquisition settings.

    ``shape_perturbation`` maps a case label to ``{mode_index: relative_rms}``
    and is handed to the simulator for that case only.
    """

    cases: tuple[CaseDescriptor, ...]
    sample_rate: float = 1066.0
    noise_rms: float = 1e-3
    seed: int = 0
    shape_perturbation: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.noise_rms < 0:
            raise ValueError("noise_rms must be non-negative")
        labels = {c.label for c in self.cases}
        missing = set(self.shape_perturbation) - labels
        if missing:
            raise ValueError(f"shape_perturbation names unknown cases {sorted(missing)}")

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        cases = tuple(
            CaseDescriptor(
                label=str(c["label"]),
                motor=c["motor"],
                duration=float(c["duration"]),
                throttle=tuple(c.get("throttle", ())),
            )
            for c in d["cases"]
        )
        labels = [c.label for c in cases]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate case labels {labels}")
        return cls(
            cases=cases,
            sample_rate=float(d.get("sample_rate", 1066.0)),
            noise_rms=float(d.get("noise_rms", 1e-3)),
            seed=int(d.get("seed", 0)),
            shape_perturbation={
                str(label): {int(k): float(v) for k, v in pert.items()}
                for label, pert in d.get("shape_perturbation", {}).items()
            },
        )

    def to_dict(self) -> dict:
        return {
            "sample_rate": self.sample_rate,
            "noise_rms": self.noise_rms,
            "seed": self.seed,
            "shape_perturbation": {
                label: {str(k): v for k, v in sorted(pert.items())}
                for label, pert in sorted(self.shape_perturbation.items())
            },
            "cases": [
                {"label": c.label, "motor": c.motor, "duration": c.duration,
                 "throttle": list(c.throttle)}
                for c in self.cases
            ],
        }


def default_campaign(sample_rate: float = 1066.0) -> CampaignConfig:
    """The seven-case test matrix: motor off, five constant throttles, one sweep."""
    cases = [CaseDescriptor("i", "off", 120.0)]
    for label, thr in zip(("ii", "iii", "iv", "v", "vi"), (0.25, 0.375, 0.5, 0.625, 0.75)):
        cases.append(CaseDescriptor(label, "constant", 300.0, (thr,)))
    cases.append(CaseDescriptor("vii", "sweep", 600.0, (0.125, 0.775)))
    return CampaignConfig(tuple(cases), sample_rate=sample_rate)


@dataclass(frozen=True)
class Mode:
    frequency_hz: float
    damping_ratio: float
    shape: np.ndarray
    cluster_size: int = 0

    def __post_init__(self):
        shape = np.array(self.shape, dtype=complex, copy=True).ravel()
        shape.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        if not (self.frequency_hz > 0 and math.isfinite(self.frequency_hz)):
            raise ValueError(f"frequency_hz must be positive, got {self.frequency_hz}")
        if not 0.0 < self.damping_ratio < 1.0:
            raise ValueError(f"damping_ratio must lie in (0, 1), got {self.damping_ratio}")
        if self.cluster_size < 0:
            raise ValueError("cluster_size must be non-negative")


@dataclass(frozen=True)
class ModeSet:
    modes: tuple[Mode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        modes = tuple(sorted(self.modes, key=lambda m: m.frequency_hz))
        object.__setattr__(self, "modes", modes)
        lengths = {m.shape.size for m in modes}
        if len(lengths) > 1:
            raise ValueError(f"mode shapes have differing lengths {sorted(lengths)}")

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i):
        return self.modes[i]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency_hz for m in self.modes])

    @property
    def damping_ratios(self) -> np.ndarray:
        return np.array([m.damping_ratio for m in self.modes])

    @property
    def shapes(self) -> np.ndarray:
        """Shapes as columns, ``(n_channels, n_modes)``."""
        if not self.modes:
            return np.zeros((0, 0), dtype=complex)
        return np.column_stack([m.shape for m in self.modes])


# --------------------------------------------------------------------- record I/O


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise RecordFormatError(f"line {lineno}: bad {what} {token!r}") from None


def load_record(path) -> AcquisitionRecord:
    """Read a column-text record file.

    Header lines are ``#rate_hz``, ``#case``, one ``#sensor <id> <pos_m>
    <sens_mV_per_g>`` per channel and an optional ``#config <json>``; the body
    holds one time step per row and one column per channel.
    """
    path = Path(path)
    rate = None
    case = ""
    config = None
    sensors: list[SensorSpec] = []
    rows: list[str] = []
    first_body_line = None
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if first_body_line is not None:
                    raise RecordFormatError(f"line {lineno}: header line after data")
                key, _, rest = line[1:].partition(" ")
                rest = rest.strip()
                if key == "rate_hz":
                    rate = _parse_float(rest, lineno, "sample rate")
                elif key == "case":
                    case = rest
                elif key == "sensor":
                    parts = rest.split()
                    if len(parts) != 3:
                        raise RecordFormatError(
                            f"line {lineno}: '#sensor' needs id, position and sensitivity"
                        )
                    try:
                        sensors.append(
                            SensorSpec(
                                parts[0],
                                _parse_float(parts[1], lineno, "sensor position"),
                                _parse_float(parts[2], lineno, "sensitivity") / 1000.0,
                            )
                        )
                    except ValueError as exc:
                        raise RecordFormatError(f"line {lineno}: {exc}") from None
                elif key == "config":
                    try:
                        config = json.loads(rest)
                    except json.JSONDecodeError as exc:
                        raise RecordFormatError(f"line {lineno}: bad config json: {exc}") from None
                else:
                    raise RecordFormatError(f"line {lineno}: unknown header key {key!r}")
                continue
            if first_body_line is None:
                first_body_line = lineno
            rows.append(line)

    if rate is None:
        raise RecordFormatError(f"{path}: missing '#rate_hz' header")
    if not sensors:
        raise RecordFormatError(f"{path}: no '#sensor' header lines")
    n = len(sensors)
    data = np.empty((len(rows), n))
    for i, row in enumerate(rows):
        parts = row.split()
        lineno = first_body_line + i
        if len(parts) != n:
            raise RecordFormatError(
                f"line {lineno}: {len(parts)} columns, header declares {n} channels"
            )
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise RecordFormatError(f"line {lineno}: non-numeric sample in {row!r}") from None
        if not all(map(math.isfinite, values)):
            raise RecordFormatError(f"line {lineno}: non-finite sample in {row!r}")
        data[i] = values
    return AcquisitionRecord(tuple(sensors), rate, data.T, case, config)


def save_record(record: AcquisitionRecord, path) -> None:
    path = Path(path)
    lines = [f"#rate_hz {record.sample_rate!r}", f"#case {record.case_label}"]
    for s in record.sensors:
        lines.append(f"#sensor {s.id} {s.span_position!r} {s.sensitivity * 1000.0!r}")
    if record.config is not None:
        lines.append("#config " + json.dumps(record.config, sort_keys=True))
    with path.open("w") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, record.samples.T, fmt="%.10e")


# ------------------------------------------------------------------- modeset I/O


def modeset_to_dict(modes: ModeSet, config: dict | None = None) -> dict:
    out = {
        "schema_version": MODESET_SCHEMA_VERSION,
        "modes": [
            {
                "frequency_hz": m.frequency_hz,
                "damping_ratio": m.damping_ratio,
                "shape": [[float(z.real), float(z.imag)] for z in m.shape],
                "cluster_size": int(m.cluster_size),
            }
            for m in modes
        ],
    }
    if config is not None:
        out["config"] = config
    return out


def modeset_from_dict(d: dict) -> ModeSet:
    version = d.get("schema_version")
    if version != MODESET_SCHEMA_VERSION:
        raise ModeSetFormatError(
            f"schema_version {version!r} not supported (expected {MODESET_SCHEMA_VERSION})"
        )
    modes = []
    for i, m in enumerate(d.get("modes", [])):
        try:
            shape = np.array([complex(re, im) for re, im in m["shape"]])
            modes.append(
                Mode(
                    float(m["frequency_hz"]),
                    float(m["damping_ratio"]),
                    shape,
                    int(m["cluster_size"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModeSetFormatError(f"mode {i}: {exc}") from None
    return ModeSet(tuple(modes))


def save_modeset(modes: ModeSet, path, config: dict | None = None) -> None:
    Path(path).write_text(json.dumps(modeset_to_dict(modes, config), indent=2) + "\n")


def load_modeset(path) -> ModeSet:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModeSetFormatError(f"{path}: {exc}") from None
    return modeset_from_dict(d)
