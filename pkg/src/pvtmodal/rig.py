"""Synthetic test rig: stepped cantilever spar with an outboard motor.

The spar is an Euler-Bernoulli beam (deflection and rotation per node)
clamped at the root, with the motor and bracket lumped as a point mass and
rotary inertia.
Responses are built by modal superposition, each modal coordinate integrated
with an exact zero-order-hold discretisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import signal

from .core import AcquisitionRecord, CaseDescriptor, SensorSpec


@dataclass(frozen=True)
class MaterialSpec:
    density: float = 2810.0
    young_modulus: float = 71.7e9
    shear_modulus: float = 26.9e9  # carried for completeness, bending-only model
    poisson: float = 0.33

    def __post_init__(self):
        if min(self.density, self.young_modulus, self.shear_modulus) <= 0:
            raise ValueError("material constants must be positive")
        if not 0.0 < self.poisson < 0.5:
            raise ValueError("poisson ratio must lie in (0, 0.5)")


AL7075_T6 = MaterialSpec()


@dataclass(frozen=True)
class Section:
    start: float
    end: float
    height: float


@dataclass(frozen=True)
class SparGeometry:
    """Stepped spar of constant thickness.

    ``bending="flat"`` bends through the thickness (second moment
    ``height * thickness**3 / 12``), the flapwise case for a plate spar;
    ``bending="depth"`` bends about the other axis (``thickness * height**3 / 12``).
    """

    free_length: float = 0.8
    thickness: float = 0.0023
    sections: tuple[Section, ...] = ()
    motor_station: float = 0.48
    motor_mass: float = 0.0
    motor_inertia: float = 0.0  # kg m^2 about the bending axis
    bending: str = "flat"

    def __post_init__(self):
        secs = tuple(Section(*s) if not isinstance(s, Section) else s for s in self.sections)
        if not secs:
            secs = (Section(0.0, self.free_length, 0.01),)
        object.__setattr__(self, "sections", secs)
        if self.free_length <= 0 or self.thickness <= 0:
            raise ValueError("free_length and thickness must be positive")
        if abs(secs[0].start) > 1e-12 or abs(secs[-1].end - self.free_length) > 1e-12:
            raise ValueError("sections must cover [0, free_length]")
        for a, b in zip(secs, secs[1:]):
            if abs(a.end - b.start) > 1e-12:
                raise ValueError(f"sections not contiguous at {a.end} / {b.start}")
        for s in secs:
            if s.height <= 0 or s.end <= s.start:
                raise ValueError(f"bad section {s}")
        if not 0.0 < self.motor_station < self.free_length:
            raise ValueError("motor_station must lie strictly inside the span")
        if self.bending not in ("flat", "depth"):
            raise ValueError(f"bending must be 'flat' or 'depth', got {self.bending!r}")
        if self.motor_mass < 0 or self.motor_inertia < 0:
            raise ValueError("motor_mass and motor_inertia must be non-negative")

    def height_at(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ends = np.array([s.end for s in self.sections[:-1]])
        idx = np.searchsorted(ends, x, side="right")
        return np.array([s.height for s in self.sections])[idx]


# Artifact constants, not measured data. Section heights are set by hand
# (falling root to tip); motor mass and rotary inertia (the bracket holds the
# motor off the spar axis) are fitted to the target frequencies by
# scripts/calibrate_spar.py, landing within 7% of each.
DEFAULT_GEOMETRY = SparGeometry(
    free_length=0.8,
    thickness=0.0023,
    sections=(
        Section(0.00, 0.04, 0.060),
        Section(0.04, 0.12, 0.050),
        Section(0.12, 0.24, 0.045),
        Section(0.24, 0.80, 0.040),
    ),
    motor_station=0.48,
    motor_mass=0.059,
    motor_inertia=5.1e-3,
)

TARGET_FREQUENCIES = (2.48, 13.37, 24.10)
DEFAULT_DAMPING = (0.008, 0.012, 0.028)
HIGHER_MODE_DAMPING = 0.02
# AutoMAC-optimal 7-sensor layout on a 4 cm grid with the tip sensor required
DEFAULT_SENSOR_POSITIONS = (0.28, 0.32, 0.36, 0.52, 0.56, 0.60, 0.80)
DEFAULT_HAMMER_STATION = 0.78


@dataclass(frozen=True, eq=False)
class FEModel:
    K: np.ndarray
    M: np.ndarray
    nodes: np.ndarray  # node x positions including the clamped root
    geometry: SparGeometry

    @property
    def n_dof(self) -> int:
        return self.K.shape[0]

    def dof(self, station: float, rotation: bool = False) -> int:
        """Free-DOF index of the node at ``station`` (the root node is removed)."""
        i = int(np.argmin(np.abs(self.nodes - station)))
        if abs(self.nodes[i] - station) > 1e-9:
            raise ValueError(f"station {station} is not a node")
        if i == 0:
            raise ValueError("the root node is clamped")
        return 2 * (i - 1) + int(rotation)


def _element_matrices(EI: float, rhoA: float, le: float):
    k = EI / le**3 * np.array([
        [12, 6 * le, -12, 6 * le],
        [6 * le, 4 * le**2, -6 * le, 2 * le**2],
        [-12, -6 * le, 12, -6 * le],
        [6 * le, 2 * le**2, -6 * le, 4 * le**2],
    ])
    m = rhoA * le / 420 * np.array([
        [156, 22 * le, 54, -13 * le],
        [22 * le, 4 * le**2, 13 * le, -3 * le**2],
        [54, 13 * le, 156, -22 * le],
        [-13 * le, -3 * le**2, -22 * le, 4 * le**2],
    ])
    return k, m


def assemble_fe(
    geometry: SparGeometry = DEFAULT_GEOMETRY,
    material: MaterialSpec = AL7075_T6,
    n_elements: int = 80,
) -> FEModel:
    """Clamped-free stiffness and consistent mass matrices.

    Elements are of equal length and their edges must fall on every section
    boundary and on the motor station.
    """
    if n_elements < 4:
        raise ValueError("need at least 4 elements")
    le = geometry.free_length / n_elements
    for x in [s.start for s in geometry.sections[1:]] + [geometry.motor_station]:
        r = x / le
        if abs(r - round(r)) > 1e-6:
            raise ValueError(
                f"station {x} m does not fall on an element edge with {n_elements} elements"
            )
    nodes = np.linspace(0.0, geometry.free_length, n_elements + 1)
    n = 2 * (n_elements + 1)
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    heights = geometry.height_at(mids)
    t = geometry.thickness
    for e, h in enumerate(heights):
        if geometry.bending == "flat":
            EI = material.young_modulus * h * t**3 / 12.0
        else:
            EI = material.young_modulus * t * h**3 / 12.0
        rhoA = material.density * t * h
        ke, me = _element_matrices(EI, rhoA, le)
        sl = slice(2 * e, 2 * e + 4)
        K[sl, sl] += ke
        M[sl, sl] += me
    K, M = K[2:, 2:], M[2:, 2:]
    model = FEModel(K, M, nodes, geometry)
    if geometry.motor_mass > 0:
        i = model.dof(geometry.motor_station)
        M[i, i] += geometry.motor_mass
    if geometry.motor_inertia > 0:
        i = model.dof(geometry.motor_station, rotation=True)
        M[i, i] += geometry.motor_inertia
    return model


@dataclass(frozen=True, eq=False)
class GroundTruth:
    frequencies: np.ndarray  # Hz, ascending
    damping: np.ndarray
    modes: np.ndarray  # (n_dof, n_modes), mass-normalised
    fe: FEModel

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    @property
    def omegas(self) -> np.ndarray:
        return 2 * np.pi * self.frequencies

    def shapes_at(self, stations) -> np.ndarray:
        """Deflection of every mode at ``stations``, ``(n_stations, n_modes)``.

        Uses the cubic Hermite interpolation of the element the station falls in.
        """
        stations = np.atleast_1d(np.asarray(stations, dtype=float))
        nodes = self.fe.nodes
        L = nodes[-1]
        if stations.min() < 0 or stations.max() > L + 1e-12:
            raise ValueError("stations must lie within the span")
        full = np.vstack([np.zeros((2, self.n_modes)), self.modes])
        le = nodes[1] - nodes[0]
        e = np.clip(((stations / le) + 1e-9).astype(int), 0, len(nodes) - 2)
        xi = (stations - nodes[e]) / le
        N = np.column_stack([
            1 - 3 * xi**2 + 2 * xi**3,
            le * (xi - 2 * xi**2 + xi**3),
            3 * xi**2 - 2 * xi**3,
            le * (-xi**2 + xi**3),
        ])
        out = np.empty((stations.size, self.n_modes))
        for i, (ei, Ni) in enumerate(zip(e, N)):
            out[i] = Ni @ full[2 * ei: 2 * ei + 4]
        return out


def modal_solve(fe: FEModel, n_modes: int = 6, damping=None) -> GroundTruth:
    """Lowest ``n_modes`` of the generalized eigenproblem with mass-normalised shapes.

    ``damping`` lists modal damping ratios; missing trailing entries take
    ``HIGHER_MODE_DAMPING`` and the default starts from ``DEFAULT_DAMPING``.
    """
    if not 1 <= n_modes <= fe.n_dof:
        raise ValueError(f"n_modes must lie in [1, {fe.n_dof}]")
    for mat, name in ((fe.M, "mass"), (fe.K, "stiffness")):
        try:
            sla.cholesky(mat)
        except sla.LinAlgError:
            raise ValueError(f"{name} matrix is not positive definite") from None
    # Solved as M phi = (1/w^2) K phi: the stiff root steps make K badly
    # conditioned and the direct form loses the low modes to rounding.
    n = fe.n_dof
    mu, phi = sla.eigh(fe.M, fe.K, subset_by_index=[n - n_modes, n - 1])
    mu, phi = mu[::-1], phi[:, ::-1]
    phi = phi / np.sqrt(np.einsum("ij,ik,kj->j", phi, fe.M, phi))
    w2 = 1.0 / mu
    if damping is None:
        damping = DEFAULT_DAMPING
    damping = list(damping)[:n_modes]
    damping += [HIGHER_MODE_DAMPING] * (n_modes - len(damping))
    damping = np.array(damping, dtype=float)
    if np.any((damping < 0) | (damping >= 1)):
        raise ValueError("modal damping ratios must lie in [0, 1)")
    # sign convention: positive tip deflection
    tip = fe.dof(fe.nodes[-1])
    phi = phi * np.where(phi[tip] < 0, -1.0, 1.0)
    return GroundTruth(np.sqrt(np.maximum(w2, 0.0)) / (2 * np.pi), damping, phi, fe)


def default_truth(n_modes: int = 6, damping=None) -> GroundTruth:
    return modal_solve(assemble_fe(), n_modes, damping)


# ----------------------------------------------------------------- excitation


@dataclass(frozen=True)
class ShaftMap:
    """Affine throttle to shaft-rotation-rate map (Hz)."""

    intercept: float = 1.0
    slope: float = 80.0

    def __call__(self, throttle):
        return self.intercept + self.slope * np.asarray(throttle, dtype=float)


@dataclass(frozen=True)
class ExcitationCase:
    """Forcing description for one simulated run.

    ``kind`` is ``impulse``, ``constant_throttle``, ``sweep`` or ``none``.
    ``harmonics`` maps multiples of the shaft rate to relative amplitudes.
    Forces are in newtons.
    """

    kind: str
    label: str = ""
    hit_times: tuple[float, ...] = (1.0, 61.0)
    hit_station: float = DEFAULT_HAMMER_STATION
    peak_force: float = 5.0
    pulse_width: float = 0.003
    throttle: float = 0.0
    sweep_min: float = 0.125
    sweep_max: float = 0.775
    sweep_period: float = 600.0
    broadband_level: float = 0.0
    harmonic_force: float = 0.0
    harmonics: tuple[tuple[int, float], ...] = ((2, 1.0), (3, 0.6), (4, 0.4))
    shaft_map: ShaftMap = field(default_factory=ShaftMap)

    def __post_init__(self):
        if self.kind not in ("impulse", "constant_throttle", "sweep", "none"):
            raise ValueError(f"unknown excitation kind {self.kind!r}")
        for thr in (self.throttle, self.sweep_min, self.sweep_max):
            if not 0.0 <= thr <= 1.0:
                raise ValueError("throttle fractions must lie in [0, 1]")
        if self.pulse_width <= 0:
            raise ValueError("pulse_width must be positive")
        if any(a < 0 for _, a in self.harmonics):
            raise ValueError("harmonic amplitudes must be non-negative")
        if self.kind == "sweep" and not self.sweep_min < self.sweep_max:
            raise ValueError("sweep needs sweep_min < sweep_max")
        if self.broadband_level < 0 or self.harmonic_force < 0:
            raise ValueError("force levels must be non-negative")

    @property
    def station(self) -> float | None:
        return self.hit_station if self.kind == "impulse" else None


# Propeller forcing constants. Broadband and tonal levels grow with throttle.
PROP_BROADBAND_PER_THROTTLE = 0.4  # N rms per unit throttle
PROP_TONE_PER_THROTTLE = 0.3  # N amplitude of the strongest harmonic per unit throttle


def case_from_descriptor(desc: CaseDescriptor) -> ExcitationCase:
    """Excitation matching one test-matrix row."""
    if desc.motor == "off":
        hits = (1.0, 1.0 + desc.duration / 2)
        return ExcitationCase("impulse", label=desc.label, hit_times=hits)
    if desc.motor == "constant":
        thr = desc.throttle[0]
        return ExcitationCase(
            "constant_throttle", label=desc.label, throttle=thr,
            broadband_level=PROP_BROADBAND_PER_THROTTLE * thr,
            harmonic_force=PROP_TONE_PER_THROTTLE * thr,
        )
    lo, hi = desc.throttle
    mid = 0.5 * (lo + hi)
    return ExcitationCase(
        "sweep", label=desc.label, sweep_min=lo, sweep_max=hi, sweep_period=desc.duration,
        broadband_level=PROP_BROADBAND_PER_THROTTLE * mid,
        harmonic_force=PROP_TONE_PER_THROTTLE * mid,
    )


def throttle_profile(case: ExcitationCase, t):
    """Throttle fraction at time(s) ``t``.

    A sweep is a triangle wave starting at ``sweep_min`` with its apex at
    ``sweep_max`` half-way through each period.
    """
    t = np.asarray(t, dtype=float)
    if case.kind == "sweep":
        phase = np.mod(t / case.sweep_period, 1.0)
        tri = 1.0 - np.abs(2.0 * phase - 1.0)
        # exact endpoint at whole periods
        tri = np.where(np.isclose(phase, 0.0, atol=1e-12), 0.0, tri)
        out = case.sweep_min + (case.sweep_max - case.sweep_min) * tri
    elif case.kind == "constant_throttle":
        out = np.full_like(t, case.throttle)
    else:
        out = np.zeros_like(t)
    return out if out.ndim else float(out)


def forcing(case: ExcitationCase, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Force history (N) on the time grid ``t``."""
    f = np.zeros_like(t)
    if case.kind == "impulse":
        for t0 in case.hit_times:
            inside = (t >= t0) & (t < t0 + case.pulse_width)
            f[inside] += case.peak_force * np.sin(np.pi * (t[inside] - t0) / case.pulse_width)
    elif case.kind in ("constant_throttle", "sweep"):
        if case.broadband_level > 0:
            f += case.broadband_level * rng.standard_normal(t.size)
        if case.harmonic_force > 0 and case.harmonics:
            shaft = case.shaft_map(throttle_profile(case, t))
            dt = t[1] - t[0] if t.size > 1 else 0.0
            phase = 2 * np.pi * np.cumsum(shaft) * dt
            phase -= phase[0]
            offsets = rng.uniform(0, 2 * np.pi, len(case.harmonics))
            for (mult, amp), ph0 in zip(case.harmonics, offsets):
                f += case.harmonic_force * amp * np.sin(mult * phase + ph0)
    return f


def _zoh_modal_filter(omega: float, zeta: float, dt: float):
    """Discrete transfer functions from force to (q, qdot, qddot) under ZOH.

    State ``[q, qdot]``, input the modal force; acceleration keeps the
    direct feedthrough term.
    """
    Ac = np.array([[0.0, 1.0], [-omega**2, -2 * zeta * omega]])
    Bc = np.array([[0.0], [1.0]])
    C = np.array([[1.0, 0.0], [0.0, 1.0], [-omega**2, -2 * zeta * omega]])
    D = np.array([[0.0], [0.0], [1.0]])
    Ad, Bd, Cd, Dd, _ = signal.cont2discrete((Ac, Bc, C, D), dt, method="zoh")
    return Ad, Bd, Cd, Dd


def modal_response(omega: float, zeta: float, force: np.ndarray, dt: float, output: str = "acc"):
    """Response of one unit-mass modal oscillator to ``force`` (ZOH-exact)."""
    Ad, Bd, Cd, Dd = _zoh_modal_filter(omega, zeta, dt)
    row = {"disp": 0, "vel": 1, "acc": 2}[output]
    num, den = signal.ss2tf(Ad, Bd, Cd[row:row + 1], Dd[row:row + 1])
    return signal.lfilter(num[0], den, force)


def simulate(
    truth: GroundTruth,
    case: ExcitationCase,
    sensors=DEFAULT_SENSOR_POSITIONS,
    sample_rate: float = 1066.0,
    duration: float = 120.0,
    noise_rms: float = 1e-3,
    seed: int = 0,
    shape_perturbation: dict | None = None,
    sensor_ids=None,
) -> AcquisitionRecord:
    """Acceleration record at ``sensors`` for one excitation case.

    ``shape_perturbation`` maps a zero-based mode index to a relative rms
    perturbation of that mode's sensor-sampled shape; it emulates couplings
    the bending model lacks and is off by default.
    """
    sensors = np.asarray(sensors, dtype=float)
    L = truth.fe.geometry.free_length
    if sensors.min() < 0 or sensors.max() > L + 1e-12:
        raise ValueError("sensor stations must lie within the span")
    if sample_rate <= 0 or duration <= 0:
        raise ValueError("sample_rate and duration must be positive")
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    dt = 1.0 / sample_rate
    t = np.arange(n) * dt
    f = forcing(case, t, rng)
    station = case.station if case.station is not None else truth.fe.geometry.motor_station
    phi_force = truth.shapes_at([station])[0]
    phi_sens = truth.shapes_at(sensors)
    if shape_perturbation:
        prng = np.random.default_rng([seed, 7])
        for j, rel in sorted(shape_perturbation.items()):
            col = phi_sens[:, j]
            delta = prng.standard_normal(col.size)
            phi_sens[:, j] = col + rel * np.sqrt(np.mean(col**2)) * delta
    y = np.zeros((sensors.size, n))
    if np.any(f):
        for j in range(truth.n_modes):
            acc = modal_response(truth.omegas[j], truth.damping[j], phi_force[j] * f, dt)
            y += np.outer(phi_sens[:, j], acc)
    if noise_rms > 0:
        y += noise_rms * rng.standard_normal(y.shape)
    if sensor_ids is None:
        sensor_ids = [f"A{i + 1}" for i in range(sensors.size)]
    # tip sensors are the low-sensitivity units
    specs = tuple(
        SensorSpec(sid, float(x), 0.01 if x >= L - 0.05 else 0.1)
        for sid, x in zip(sensor_ids, sensors)
    )
    return AcquisitionRecord(specs, sample_rate, y, case.label or case.kind)
