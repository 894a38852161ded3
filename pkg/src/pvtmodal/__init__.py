"""Output-only modal analysis for propeller-excited structures.

Spectral screening, correlation-driven Loewner identification, stabilisation
diagrams, MAC-based validation and a synthetic cantilever test rig.
"""
from .core import (
    AcquisitionRecord,
    CampaignConfig,
    CaseDescriptor,
    Mode,
    ModeSet,
    SensorSpec,
    load_modeset,
    load_record,
    save_modeset,
    save_record,
)
from .estimators import AutoMACPlacement, OutputOnlyModalIdentifier, WelchANPSD
from .pipeline import PipelineConfig, identify

__version__ = "0.1.0"

__all__ = [
    "AcquisitionRecord", "CampaignConfig", "CaseDescriptor", "Mode", "ModeSet", "SensorSpec",
    "load_modeset", "load_record", "save_modeset", "save_record",
    "AutoMACPlacement", "OutputOnlyModalIdentifier", "WelchANPSD",
    "PipelineConfig", "identify", "__version__",
]
