"""Declarative processing configuration and the record -> ModeSet chain."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

from .core import AcquisitionRecord, ModeSet
from .next import (
    DEFAULT_MAX_LAG,
    CorrelationSet,
    HalfSpectrumSet,
    Taper,
    half_spectra,
    next_correlations,
)
from .spectral import DEFAULT_OVERLAP, DEFAULT_SEGMENT
from .stabilisation import StabConfig, StabilisationDiagram, cluster_modes, run_sweep

logger = logging.getLogger(__name__)

TAPER_KINDS = ("auto", "none", "exponential")


@dataclass(frozen=True)
class PipelineConfig:
    """Every processing parameter of one spectra/identify run.

    ``taper="auto"`` applies an exponential window that reaches
    ``taper_end_weight`` at ``max_lag``; ``"exponential"`` uses the explicit
    ``taper_decay`` (1/s); ``"none"`` leaves the traces untouched.
    ``fit_band`` (Hz) limits the Loewner data and defaults to the
    stabilisation frequency screen.
    """

    segment_length: int = DEFAULT_SEGMENT
    overlap: float = DEFAULT_OVERLAP
    peak_band: tuple[float, float] = (0.0, 30.0)
    min_prominence: float = 0.01
    reference: str | None = None
    max_lag: float = DEFAULT_MAX_LAG
    taper: str = "auto"
    taper_decay: float = 0.0
    taper_end_weight: float = 0.01
    refinement: int = 4
    fit_band: tuple[float, float] | None = None
    partition: str = "interleaved"
    n_jobs: int = 1
    stab: StabConfig = field(default_factory=StabConfig)
    baseline: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "peak_band", tuple(float(x) for x in self.peak_band))
        if self.fit_band is not None:
            object.__setattr__(self, "fit_band", tuple(float(x) for x in self.fit_band))
        if self.taper not in TAPER_KINDS:
            raise ValueError(f"taper must be one of {TAPER_KINDS}, got {self.taper!r}")
        if self.taper_decay < 0:
            raise ValueError("taper_decay must be non-negative")
        if not 0 < self.taper_end_weight < 1:
            raise ValueError("taper_end_weight must lie in (0, 1)")
        if self.max_lag <= 0:
            raise ValueError("max_lag must be positive")
        if not 0 <= self.overlap < 1:
            raise ValueError("overlap must lie in [0, 1)")
        if self.segment_length < 2:
            raise ValueError("segment_length must be at least 2")
        if self.partition not in ("interleaved", "contiguous"):
            raise ValueError(f"unknown partition {self.partition!r}")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be at least 1")

    def make_taper(self) -> Taper:
        if self.taper == "auto":
            return Taper.for_lag(self.max_lag, self.taper_end_weight)
        if self.taper == "exponential":
            return Taper("exponential", self.taper_decay)
        return Taper()

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, StabConfig):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown pipeline keys: {sorted(unknown)}")
        if "stab" in d and not isinstance(d["stab"], StabConfig):
            d["stab"] = StabConfig.from_dict(d["stab"])
        for key in ("peak_band", "fit_band"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(eq=False)
class IdentificationResult:
    correlations: CorrelationSet
    spectra: HalfSpectrumSet
    diagram: StabilisationDiagram
    modes: ModeSet


def identify(record: AcquisitionRecord, cfg: PipelineConfig = PipelineConfig()) -> IdentificationResult:
    """Correlations, half-spectra, order sweep and clustering for one record."""
    corrs = next_correlations(record, cfg.reference, cfg.max_lag)
    spectra = half_spectra(corrs, cfg.make_taper(), cfg.refinement)
    diagram = run_sweep(spectra, cfg.stab, cfg.fit_band, cfg.partition, cfg.n_jobs)
    modes = cluster_modes(diagram, cfg.stab)
    logger.info("%s: %d modes from %d stable poles", record.case_label or "record",
                len(modes), len(diagram.stable_poles()))
    return IdentificationResult(corrs, spectra, diagram, modes)
