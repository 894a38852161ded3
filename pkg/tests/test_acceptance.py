"""Acceptance criteria, one test each, at their stated tolerances.

Every test reports through the ``acceptance`` fixture, which prints a
``criterion N: PASS/FAIL`` line and collects a summary at the end of the run.
"""
import filecmp
import itertools
import time
import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid

from pvtmodal.cli import EXIT_OK, main
from pvtmodal.core import CaseDescriptor, Mode, ModeSet, default_campaign
from pvtmodal.loewner import LoewnerPencil, build_loewner_data, modal_to_pole, pole_to_modal
from pvtmodal.metrics import automac, compare_runs, mac, optimize_placement, placement_objective
from pvtmodal.pipeline import PipelineConfig, identify
from pvtmodal.rig import DEFAULT_SENSOR_POSITIONS, case_from_descriptor, simulate
from pvtmodal.spectral import anpsd, welch_psd
from pvtmodal.stabilisation import StabConfig
from _systems import evaluate, random_modal_system, spectra_from_system
from conftest import make_record

TRUE_DAMPING = (0.008, 0.012, 0.028)


def _identify(record):
    cfg = PipelineConfig()
    assert cfg.stab == StabConfig(32, 60, 2, (0.005, 0.03), (0.0, 30.0), 0.01, 0.05, 0.95)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return identify(record, cfg)


def _match(modes, truth_freqs):
    """Identified mode nearest to each true frequency (``None`` if absent)."""
    out = []
    for f in truth_freqs:
        near = min(modes, key=lambda m: abs(m.frequency_hz - f), default=None)
        out.append(near if near is not None and abs(near.frequency_hz - f) < 0.1 * f else None)
    return out


def _campaign_case(label):
    return {c.label: c for c in default_campaign().cases}[label]


def test_criterion_01_impulse_identification(truth, acceptance):
    desc = _campaign_case("i")
    t0 = time.perf_counter()
    rec = simulate(truth, case_from_descriptor(desc), duration=desc.duration,
                   sample_rate=1066.0, seed=101)
    result = _identify(rec)
    elapsed = time.perf_counter() - t0
    analytic = truth.shapes_at(DEFAULT_SENSOR_POSITIONS)
    matched = _match(result.modes, truth.frequencies[:3])
    ok = len(result.modes) == 3 and all(m is not None for m in matched) and elapsed <= 120
    parts = []
    for j, m in enumerate(matched):
        if m is None:
            parts.append(f"mode {j + 1} missing")
            continue
        fe = abs(m.frequency_hz / truth.frequencies[j] - 1)
        ze = abs(m.damping_ratio / TRUE_DAMPING[j] - 1)
        mv = mac(m.shape, analytic[:, j])
        ok &= fe <= 0.01 and ze <= 0.25 and mv >= 0.99
        parts.append(f"m{j + 1} df={fe:.2%} dz={ze:.1%} MAC={mv:.4f}")
    acceptance(1, ok, f"{len(result.modes)} modes; " + ", ".join(parts) + f"; {elapsed:.1f} s")


def test_criterion_02_sweep_identification(truth, acceptance):
    desc = _campaign_case("vii")
    assert desc.duration == 600 and desc.throttle == (0.125, 0.775)
    rec = simulate(truth, case_from_descriptor(desc), duration=desc.duration, seed=102)
    result = _identify(rec)
    analytic = truth.shapes_at(DEFAULT_SENSOR_POSITIONS)
    matched = _match(result.modes, truth.frequencies[:3])
    ok = all(m is not None for m in matched)
    parts = []
    for j, m in enumerate(matched):
        if m is None:
            parts.append(f"mode {j + 1} missing")
            continue
        fe = abs(m.frequency_hz / truth.frequencies[j] - 1)
        mv = mac(m.shape, analytic[:, j])
        ok &= fe <= 0.02 and (j == 2 or mv >= 0.95)
        parts.append(f"m{j + 1} df={fe:.2%} MAC={mv:.4f}")
    acceptance(2, ok, f"{len(result.modes)} modes; " + ", ".join(parts))


def test_criterion_03_harmonic_rejection(truth, acceptance):
    case = case_from_descriptor(CaseDescriptor("tone", "constant", 300.0, (0.1,)))
    tones = [k * case.shaft_map(case.throttle) for k in (2, 3)]
    assert all(0 < f < 30 for f in tones)
    rec = simulate(truth, case, duration=300.0, seed=103)
    result = _identify(rec)
    diagram = result.diagram
    n_orders = len(diagram.orders)
    details, ok = [], n_orders == 15
    for f in tones:
        low, passed = 0, 0
        for k in diagram.orders:
            near = [p for p in diagram.poles.get(k, []) if abs(p.frequency_hz - f) < 0.05]
            if not near:
                continue
            p = min(near, key=lambda p: abs(p.frequency_hz - f))
            low += p.damping_ratio < 0.005
            passed += p.hard_pass
        survivors = [m for m in result.modes if abs(m.frequency_hz - f) < 0.05]
        ok &= low >= 14 and passed == 0 and not survivors
        details.append(f"{f:.0f} Hz tone: zeta<0.005 in {low}/{n_orders} orders, "
                       f"{passed} hard-pass")
    acceptance(3, ok, "; ".join(details))


def test_criterion_04_loewner_exactness(acceptance):
    failures, worst = 0, 0.0
    for seed in range(100):
        poles, res = random_modal_system(np.random.default_rng(seed))
        data = build_loewner_data(spectra_from_system(poles, res), (0.0, 30.0))
        model = LoewnerPencil(data).realize(6)
        s = np.concatenate([data.left_points, data.right_points])
        H = evaluate(poles, res, s)
        err = np.max(np.abs(model.transfer(s) - H) / np.abs(H).max(axis=1, keepdims=True))
        worst = max(worst, err)
        failures += not err <= 1e-8
    acceptance(4, failures == 0, f"{failures}/100 failures, worst relative error {worst:.1e}")


def test_criterion_05_pole_round_trip(acceptance):
    worst = 0.0
    for f, z in ((2.48, 0.008), (13.37, 0.012), (24.10, 0.028)):
        f2, z2 = pole_to_modal(modal_to_pole(f, z))
        worst = max(worst, abs(f2 - f) / f, abs(z2 - z) / z)
    acceptance(5, worst <= 1e-12, f"worst relative round-trip error {worst:.1e}")


def test_criterion_06_comparison_fixture(acceptance):
    def ms(freqs, damp):
        return ModeSet(tuple(Mode(f, z, np.eye(3, 7)[i]) for i, (f, z) in
                             enumerate(zip(freqs, damp))))

    rep = compare_runs(ms((2.48, 13.37, 24.10), (0.008, 0.012, 0.028)),
                       ms((2.45, 13.30, 22.84), (0.014, 0.015, 0.031)))
    df = [round(p.frequency_difference_pct, 2) for p in rep.pairs]
    dz = [round(p.damping_difference_pct, 2) for p in rep.pairs]
    ok = df == [-1.21, -0.52, -5.23] and dz == [75.00, 25.00, 10.71]
    acceptance(6, ok, f"frequency {df} %, damping {dz} %")


def test_criterion_07_mac_properties(acceptance):
    rng = np.random.default_rng(7)
    worst_inv, worst_diag, worst_sym = 0.0, 0.0, 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        alpha = rng.uniform(1e-3, 1e3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        beta = rng.uniform(1e-3, 1e3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        worst_inv = max(worst_inv, abs(mac(alpha * a, beta * b) - mac(a, b)))
        M = automac(np.column_stack([a, b, a + b])).values
        worst_diag = max(worst_diag, np.max(np.abs(np.diag(M) - 1)))
        worst_sym = max(worst_sym, np.max(np.abs(M - M.T)))
    ok = worst_inv <= 1e-12 and worst_diag <= 1e-12 and worst_sym <= 1e-12
    acceptance(7, ok, f"invariance {worst_inv:.1e}, diagonal {worst_diag:.1e}, "
                      f"symmetry {worst_sym:.1e}")


def test_criterion_08_placement_brute_force(acceptance):
    mismatches = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        pos = np.sort(rng.uniform(0, 1, 10))
        Phi = rng.standard_normal((10, 3))
        res = optimize_placement(pos, Phi, 3, method="exhaustive")
        best = min(placement_objective(Phi, c) for c in itertools.combinations(range(10), 3))
        mismatches += not (res.search == "exhaustive" and res.objective == best)
    acceptance(8, mismatches == 0, f"{20 - mismatches}/20 instances match brute force")


def test_criterion_09_anpsd_invariants(truth, acceptance):
    rng = np.random.default_rng(9)
    noise = make_record(rng.standard_normal((4, 60 * 1066)) * np.array([[1], [3], [0.2], [10]]))
    rig = simulate(truth, case_from_descriptor(CaseDescriptor("ii", "constant", 60.0, (0.25,))),
                   duration=60.0, seed=9)
    worst_int, worst_scale, worst_parseval = 0.0, 0.0, 0.0
    for rec in (noise, rig):
        psd = welch_psd(rec)
        est = anpsd(psd)
        worst_int = max(worst_int, abs(trapezoid(est.values, est.frequencies) - 1))
        scaled = anpsd(welch_psd(rec.scaled(rng.uniform(0.01, 100, rec.n_channels))))
        worst_scale = max(worst_scale, np.max(np.abs(scaled.values - est.values)
                                              / est.values.max()))
        power = trapezoid(psd.values, psd.frequencies, axis=1)
        var = rec.samples.var(axis=1)
        worst_parseval = max(worst_parseval, np.max(np.abs(power / var - 1)))
    ok = worst_int <= 1e-9 and worst_scale <= 1e-12 and worst_parseval <= 0.02
    acceptance(9, ok, f"integral {worst_int:.1e}, scale {worst_scale:.1e}, "
                      f"Parseval {worst_parseval:.2%}")


@pytest.mark.slow
def test_criterion_10_campaign_determinism(tmp_path, acceptance):
    trees = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["campaign", "--seed", "2024", "--out-dir", str(out)]) == EXIT_OK
        trees.append(out)
    files = sorted(p.relative_to(trees[0]) for p in trees[0].rglob("*") if p.is_file())
    other = sorted(p.relative_to(trees[1]) for p in trees[1].rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(trees[0], trees[1], [str(f) for f in files],
                                           shallow=False)
    ok = files == other and len(files) > 0 and not mismatch and not errors
    acceptance(10, ok, f"{len(files)} files, {len(mismatch)} differ")
