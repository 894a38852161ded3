"""Order-sweep stabilisation diagram and pole clustering."""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Mode, ModeSet
from .loewner import (
    LoewnerPencil,
    LoewnerRankWarning,
    PoleEstimate,
    SingularPencilError,
    build_loewner_data,
    extract_poles,
)
from .metrics import mac
from .next import HalfSpectrumSet

logger = logging.getLogger(__name__)


class SweepError(RuntimeError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class StabConfig:
    """Order grid, hard screens and soft stability tolerances.

    ``freq_tol`` and ``damp_tol`` are relative tolerances; ``mac_tol`` is the
    minimum MAC between a pole and its predecessor.
    """

    k_min: int = 32
    k_max: int = 60
    k_step: int = 2
    damping_range: tuple[float, float] = (0.005, 0.03)
    freq_range: tuple[float, float] = (0.0, 30.0)
    freq_tol: float = 0.01
    damp_tol: float = 0.05
    mac_tol: float = 0.95
    min_cluster_size: int = 5

    def __post_init__(self):
        object.__setattr__(self, "damping_range", tuple(float(x) for x in self.damping_range))
        object.__setattr__(self, "freq_range", tuple(float(x) for x in self.freq_range))
        if not 0 < self.k_min <= self.k_max:
            raise ValueError("need 0 < k_min <= k_max")
        if self.k_step <= 0 or self.k_step % 2 or self.k_min % 2:
            raise ValueError("k_min and k_step must be positive and even")
        zmin, zmax = self.damping_range
        if not 0.0 <= zmin < zmax < 1.0:
            raise ValueError("damping range must satisfy 0 <= min < max < 1")
        if not self.freq_range[0] < self.freq_range[1]:
            raise ValueError("frequency range must satisfy min < max")
        if not 0.0 < self.mac_tol <= 1.0:
            raise ValueError("mac_tol must lie in (0, 1]")
        if self.freq_tol < 0 or self.damp_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be at least 1")

    @property
    def orders(self) -> list[int]:
        return list(range(self.k_min, self.k_max + 1, self.k_step))

    def to_dict(self) -> dict:
        return {
            "k_min": self.k_min, "k_max": self.k_max, "k_step": self.k_step,
            "damping_range": list(self.damping_range), "freq_range": list(self.freq_range),
            "freq_tol": self.freq_tol, "damp_tol": self.damp_tol, "mac_tol": self.mac_tol,
            "min_cluster_size": self.min_cluster_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StabConfig":
        d = dict(d)
        for key in ("damping_range", "freq_range"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class StabPole:
    order: int
    estimate: PoleEstimate
    hard_pass: bool
    freq_stable: bool = False
    damp_stable: bool = False
    shape_stable: bool = False

    @property
    def fully_stable(self) -> bool:
        return self.freq_stable and self.damp_stable and self.shape_stable

    @property
    def frequency_hz(self) -> float:
        return self.estimate.frequency_hz

    @property
    def damping_ratio(self) -> float:
        return self.estimate.damping_ratio

    @property
    def shape(self) -> np.ndarray:
        return self.estimate.shape


@dataclass(eq=False)
class StabilisationDiagram:
    orders: list[int]
    poles: dict[int, list[StabPole]] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)
    clusters: list[list[StabPole]] = field(default_factory=list)

    def all_poles(self) -> list[StabPole]:
        return [p for k in self.orders for p in self.poles.get(k, [])]

    def stable_poles(self) -> list[StabPole]:
        return [p for p in self.all_poles() if p.fully_stable]

    def rows(self) -> list[tuple]:
        """(order, frequency_hz, damping, hard, freq, damp, shape, full) per pole."""
        return [
            (p.order, p.frequency_hz, p.damping_ratio, int(p.hard_pass), int(p.freq_stable),
             int(p.damp_stable), int(p.shape_stable), int(p.fully_stable))
            for p in self.all_poles()
        ]

    def to_text(self) -> str:
        lines = ["# order frequency_hz damping hard_pass freq_stable damp_stable shape_stable fully_stable"]
        for k, reason in sorted(self.failures.items()):
            lines.append(f"# order {k} skipped: {reason}")
        for r in self.rows():
            lines.append(f"{r[0]} {r[1]:.10e} {r[2]:.10e} " + " ".join(str(x) for x in r[3:]))
        return "\n".join(lines) + "\n"


def hard_screen(est: PoleEstimate, cfg: StabConfig) -> bool:
    zmin, zmax = cfg.damping_range
    fmin, fmax = cfg.freq_range
    return zmin <= est.damping_ratio <= zmax and fmin <= est.frequency_hz <= fmax


def _soft_flags(p: StabPole, previous: list[StabPole], cfg: StabConfig) -> StabPole:
    if not p.hard_pass or not previous:
        return p
    f = p.frequency_hz
    gaps = np.array([abs(q.frequency_hz - f) for q in previous])
    nearest = np.flatnonzero(gaps == gaps.min())
    if nearest.size > 1:
        macs = [mac(p.shape, previous[i].shape) for i in nearest]
        prev = previous[nearest[int(np.argmax(macs))]]
    else:
        prev = previous[nearest[0]]
    fs = abs(f - prev.frequency_hz) / prev.frequency_hz <= cfg.freq_tol
    ds = abs(p.damping_ratio - prev.damping_ratio) / prev.damping_ratio <= cfg.damp_tol
    ss = mac(p.shape, prev.shape) >= cfg.mac_tol
    return StabPole(p.order, p.estimate, True, fs, ds, ss)


def _realize_poles(pencil: LoewnerPencil, k: int):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LoewnerRankWarning)
        model = pencil.realize(k)
    return extract_poles(model)


def run_sweep(
    spectra: HalfSpectrumSet,
    cfg: StabConfig = StabConfig(),
    fit_band=None,
    partition: str = "interleaved",
    n_jobs: int = 1,
) -> StabilisationDiagram:
    """Realize every order in the grid, screen the poles and flag stability.

    The Loewner data cover ``fit_band`` (default: the frequency screen). An
    exponential taper recorded on ``spectra`` is undone by shifting each pole
    back along the real axis before screening. Soft flags compare each
    hard-passing pole with the nearest-frequency hard-passing pole of the
    previous order.
    """
    band = tuple(fit_band) if fit_band is not None else cfg.freq_range
    data = build_loewner_data(spectra, band, max_order=cfg.k_max, partition=partition)
    pencil = LoewnerPencil(data)
    shift = spectra.taper.pole_shift
    orders = cfg.orders

    def job(k):
        try:
            return k, _realize_poles(pencil, k), None
        except (SingularPencilError, ValueError, np.linalg.LinAlgError) as exc:
            return k, None, str(exc)

    # the SVDs are shared; compute them before fanning out
    pencil.singular_values
    pencil._col_svd
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            results = list(pool.map(job, orders))
    else:
        results = [job(k) for k in orders]

    diagram = StabilisationDiagram(orders)
    previous: list[StabPole] = []
    for k, poles, err in results:
        if err is not None:
            logger.warning("order %d skipped: %s", k, err)
            diagram.failures[k] = err
            diagram.poles[k] = []
            previous = []
            continue
        current = []
        for est in poles:
            if shift:
                est = est.shifted(shift)
            p = StabPole(k, est, hard_screen(est, cfg))
            current.append(_soft_flags(p, previous, cfg))
        diagram.poles[k] = current
        previous = [p for p in current if p.hard_pass]
    if len(diagram.failures) == len(orders):
        raise SweepError("realization failed at every order", dict(diagram.failures))
    diagram.clusters = find_clusters(diagram, cfg)
    return diagram


def find_clusters(diagram: StabilisationDiagram, cfg: StabConfig) -> list[list[StabPole]]:
    """Greedy grouping of fully stable poles by ascending frequency.

    A pole joins the closest cluster whose median frequency is within
    ``freq_tol`` (relative), whose representative (highest-order member) has
    MAC at least ``mac_tol`` with it, and which holds no pole of the same
    order yet.
    """
    stable = sorted(diagram.stable_poles(), key=lambda p: (p.frequency_hz, p.order))
    clusters: list[list[StabPole]] = []
    for p in stable:
        best = None
        for c in clusters:
            if any(q.order == p.order for q in c):
                continue
            med = float(np.median([q.frequency_hz for q in c]))
            gap = abs(p.frequency_hz - med) / med
            if gap > cfg.freq_tol:
                continue
            rep = max(c, key=lambda q: q.order)
            if mac(p.shape, rep.shape) < cfg.mac_tol:
                continue
            if best is None or gap < best[0]:
                best = (gap, c)
        if best is None:
            clusters.append([p])
        else:
            best[1].append(p)
    return clusters


def cluster_modes(diagram: StabilisationDiagram, cfg: StabConfig = StabConfig()) -> ModeSet:
    """Modes from clusters with at least ``min_cluster_size`` members.

    Frequency and damping are cluster medians; the shape comes from the
    highest-order member.
    """
    clusters = find_clusters(diagram, cfg)
    modes = []
    for c in clusters:
        if len(c) < cfg.min_cluster_size:
            continue
        top = max(c, key=lambda q: q.order)
        modes.append(Mode(
            float(np.median([q.frequency_hz for q in c])),
            float(np.median([q.damping_ratio for q in c])),
            top.shape,
            len(c),
        ))
    if not modes:
        warnings.warn("no cluster reached min_cluster_size; ModeSet is empty",
                      RuntimeWarning, stacklevel=2)
    return ModeSet(tuple(modes))
