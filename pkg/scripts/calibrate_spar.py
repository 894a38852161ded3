"""Fit the default spar constants and derive the default sensor layout.

Section heights are fixed by hand; the motor mass and rotary inertia are
fitted by least squares on the log frequency ratios of the first three
bending modes. The sensor layout is then the AutoMAC-optimal choice of seven
stations on a 4 cm grid over the flexible span, with the tip sensor required.

    python scripts/calibrate_spar.py
"""
from dataclasses import replace

import numpy as np
from scipy.optimize import least_squares

from pvtmodal.metrics import automac, optimize_placement
from pvtmodal.rig import DEFAULT_GEOMETRY, TARGET_FREQUENCIES, assemble_fe, modal_solve


def build(p):
    inertia, mass = p
    return replace(DEFAULT_GEOMETRY, motor_mass=float(mass), motor_inertia=float(inertia))


def residual(p):
    freqs = modal_solve(assemble_fe(build(p)), 3).frequencies
    return np.log(freqs / np.array(TARGET_FREQUENCIES))


def main():
    r = least_squares(residual, [5e-3, 0.06], bounds=([1e-6, 0.02], [2e-2, 0.3]))
    rounded = [round(r.x[0], 4), round(r.x[1], 3)]
    print("motor inertia, motor mass:", rounded)
    truth = modal_solve(assemble_fe(build(rounded)), 3)
    print("frequencies:", truth.frequencies)
    print("relative error:", truth.frequencies / np.array(TARGET_FREQUENCIES) - 1)

    candidates = np.round(np.arange(0.24, 0.801, 0.04), 2)
    tip = int(np.argmax(candidates))
    layout = optimize_placement(candidates, truth.shapes_at(candidates), 7, required=(tip,))
    print("layout:", layout.positions, "objective:", layout.objective)
    print(automac(truth.shapes_at(layout.positions)).values.round(3))


if __name__ == "__main__":
    main()
