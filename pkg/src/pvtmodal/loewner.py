"""Loewner-framework realization from half-spectrum samples.

Samples on the imaginary axis are split into left and right interpolation
sets. With a single correlation reference acting as the input, right data are
full channel vectors and left data are scalar projections onto one channel at
a time. The Loewner and shifted Loewner matrices are rotated to real form,
compressed by SVD to order ``k``, and the resulting descriptor model gives the
poles and shapes.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .next import HalfSpectrumSet

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12
REGULARITY_TOL = 1e-10
REALNESS_TOL = 1e-10


class SingularPencilError(RuntimeError):
    """The reduced pencil (A, E) is singular at the requested order."""


class LoewnerRankWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LoewnerData:
    """Left/right interpolation data, stored in conjugate pairs ``[x, conj(x), ...]``.

    ``left_channels[i]`` is the channel picked by the i-th left direction,
    ``left_values[i]`` the scalar sample seen through it, and
    ``right_values[:, j]`` the full channel vector at right point ``j``.
    """

    left_points: np.ndarray
    right_points: np.ndarray
    left_channels: np.ndarray
    left_values: np.ndarray
    right_values: np.ndarray
    n_channels: int
    band: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for pts, name in ((self.left_points, "left"), (self.right_points, "right")):
            if len(pts) % 2:
                raise ValueError(f"{name} points are not conjugate-closed")
            if not np.array_equal(pts[1::2], np.conj(pts[0::2])):
                raise ValueError(f"{name} points are not stored as conjugate pairs")
        if np.intersect1d(self.left_points, self.right_points).size:
            raise ValueError("left and right point sets overlap")
        if self.right_values.shape != (self.n_channels, len(self.right_points)):
            raise ValueError("right_values must be (n_channels, n_right)")
        if self.left_values.shape != (len(self.left_points),):
            raise ValueError("left_values must have one entry per left point")

    @property
    def n_left(self) -> int:
        return len(self.left_points)

    @property
    def n_right(self) -> int:
        return len(self.right_points)

    @property
    def max_order(self) -> int:
        return min(self.n_left, self.n_right)


@dataclass(frozen=True, eq=False)
class RealizedModel:
    order: int
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    band: tuple[float, float] = (0.0, 0.0)
    n_left: int = 0
    n_right: int = 0
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def transfer(self, s) -> np.ndarray:
        """``C (sE - A)^-1 B`` at each point in ``s``; shape ``(len(s), n_channels)``."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.empty((s.size, self.C.shape[0]), dtype=complex)
        b = self.B[:, 0]
        for i, si in enumerate(s):
            out[i] = self.C @ np.linalg.solve(si * self.E - self.A, b)
        return out


@dataclass(frozen=True, eq=False)
class PoleEstimate:
    pole: complex  # rad/s
    shape: np.ndarray

    @property
    def frequency_hz(self) -> float:
        return abs(self.pole) / (2 * math.pi)

    @property
    def damping_ratio(self) -> float:
        return -self.pole.real / abs(self.pole)

    @classmethod
    def from_modal(cls, frequency_hz: float, damping_ratio: float, shape=()) -> "PoleEstimate":
        return cls(modal_to_pole(frequency_hz, damping_ratio), np.asarray(shape, dtype=complex))

    def shifted(self, delta: float) -> "PoleEstimate":
        """Same shape, pole moved by ``delta`` along the real axis."""
        return PoleEstimate(complex(self.pole.real + delta, self.pole.imag), self.shape)


def modal_to_pole(frequency_hz: float, damping_ratio: float) -> complex:
    wn = 2 * math.pi * frequency_hz
    return complex(-damping_ratio * wn, wn * math.sqrt(1.0 - damping_ratio**2))


def pole_to_modal(pole: complex) -> tuple[float, float]:
    pole = complex(pole)
    mag = abs(pole)
    return mag / (2 * math.pi), -pole.real / mag


# ---------------------------------------------------------------------- data


def build_loewner_data(
    spectra: HalfSpectrumSet,
    band=(0.0, 30.0),
    max_order: int | None = None,
    partition: str = "interleaved",
) -> LoewnerData:
    """Split the in-band (strictly positive) frequency samples into left/right sets.

    ``partition="interleaved"`` alternates samples starting with the left set;
    ``"contiguous"`` puts the lower half on the left. Every point is followed by
    its conjugate, whose sample is the conjugate value.
    """
    f = spectra.frequencies
    lo, hi = band
    if not lo < hi:
        raise ValueError(f"empty band {band}")
    if lo < f[0] - 1e-9 or hi > f[-1] + 1e-9:
        raise ValueError(f"band {band} outside spectrum grid [{f[0]}, {f[-1]}]")
    sel = np.flatnonzero((f >= lo) & (f <= hi) & (f > 0))
    if max_order is not None and sel.size < 2 * max_order:
        raise ValueError(
            f"{sel.size} samples in band {band}; order {max_order} needs at least {2 * max_order}"
        )
    if sel.size < 2:
        raise ValueError(f"{sel.size} samples in band {band}; need at least 2")
    if partition == "interleaved":
        left_idx, right_idx = sel[0::2], sel[1::2]
    elif partition == "contiguous":
        half = (sel.size + 1) // 2
        left_idx, right_idx = sel[:half], sel[half:]
    else:
        raise ValueError(f"unknown partition {partition!r}")

    p = spectra.n_channels
    H = spectra.values
    s_left = 2j * np.pi * f[left_idx]
    s_right = 2j * np.pi * f[right_idx]
    chans = np.arange(left_idx.size) % p
    v = H[left_idx, chans]
    w = H[right_idx].T  # (p, n_right)

    def pair(x):
        out = np.empty(2 * x.shape[-1], dtype=complex) if x.ndim == 1 else np.empty(
            (x.shape[0], 2 * x.shape[1]), dtype=complex)
        out[..., 0::2] = x
        out[..., 1::2] = np.conj(x)
        return out

    return LoewnerData(
        left_points=pair(s_left),
        right_points=pair(s_right),
        left_channels=np.repeat(chans, 2),
        left_values=pair(v),
        right_values=pair(w),
        n_channels=p,
        band=(float(lo), float(hi)),
    )


# ---------------------------------------------------------------- realization


def _pair_rotation(n: int) -> np.ndarray:
    """Block-diagonal unitary mapping conjugate-pair coordinates to real ones."""
    blk = np.array([[1.0, -1j], [1.0, 1j]]) / math.sqrt(2.0)
    return np.kron(np.eye(n // 2), blk)


def _real_part_checked(x: np.ndarray, what: str) -> np.ndarray:
    scale = max(np.abs(x).max(), 1e-300)
    resid = np.abs(x.imag).max() / scale if x.size else 0.0
    if resid > REALNESS_TOL:
        raise AssertionError(f"{what}: imaginary residue {resid:.2e} after real transformation")
    return np.ascontiguousarray(x.real)


class LoewnerPencil:
    """Real-form Loewner pencil for one data set.

    The SVDs do not depend on the order, so they are computed once and shared
    by every :meth:`realize` call.
    """

    def __init__(self, data: LoewnerData):
        self.data = data
        mu = data.left_points
        lam = data.right_points
        v = data.left_values
        W = data.right_values
        # l_i^T w_j for a unit selector l_i
        lw = W[data.left_channels, :]
        denom = mu[:, None] - lam[None, :]
        L = (v[:, None] - lw) / denom
        Ls = (mu[:, None] * v[:, None] - lam[None, :] * lw) / denom
        Jl = _pair_rotation(data.n_left)
        Jr = _pair_rotation(data.n_right)
        self.L = _real_part_checked(Jl.conj().T @ L @ Jr, "Loewner matrix")
        self.Ls = _real_part_checked(Jl.conj().T @ Ls @ Jr, "shifted Loewner matrix")
        self.V = _real_part_checked((Jl.conj().T @ v)[:, None], "left data")
        self.W = _real_part_checked(W @ Jr, "right data")

    @cached_property
    def _row_svd(self):
        U, s, _ = sla.svd(np.hstack([self.L, self.Ls]), full_matrices=False)
        return U, s

    @cached_property
    def _col_svd(self):
        _, s, Vt = sla.svd(np.vstack([self.L, self.Ls]), full_matrices=False)
        return Vt, s

    @property
    def singular_values(self) -> np.ndarray:
        return self._row_svd[1]

    def realize(self, k: int) -> RealizedModel:
        k = int(k)
        if k <= 0 or k % 2:
            raise ValueError(f"order must be a positive even integer, got {k}")
        if k > self.data.max_order:
            raise ValueError(f"order {k} exceeds available data ({self.data.max_order})")
        U, s = self._row_svd
        Vt, _ = self._col_svd
        if s.size == 0 or s[0] == 0.0:
            raise SingularPencilError("Loewner pencil is identically zero")
        if s[k - 1] / s[0] < RANK_TOL:
            warnings.warn(
                f"order {k} exceeds numerical rank (sigma_k/sigma_1 = {s[k - 1] / s[0]:.1e})",
                LoewnerRankWarning,
                stacklevel=2,
            )
        Y = U[:, :k]
        X = Vt[:k].T
        E = -Y.T @ self.L @ X
        A = -Y.T @ self.Ls @ X
        B = Y.T @ self.V
        C = self.W @ X
        # a common null vector of E and A, judged against the weakest
        # retained direction so that over-rank orders still yield a model
        sv = sla.svd(np.vstack([E, A]), compute_uv=False)
        if sv[0] == 0.0 or sv[-1] < REGULARITY_TOL * s[k - 1]:
            raise SingularPencilError(f"pencil (A, E) singular at order {k}")
        return RealizedModel(
            order=k, E=E, A=A, B=B, C=C, band=self.data.band,
            n_left=self.data.n_left, n_right=self.data.n_right, singular_values=s,
        )


def realize(data: LoewnerData, k: int) -> RealizedModel:
    """Order-``k`` real descriptor model ``(E, A, B, C)`` interpolating ``data``."""
    return LoewnerPencil(data).realize(k)


def extract_poles(model: RealizedModel) -> list[PoleEstimate]:
    """Upper-half-plane generalized eigenvalues of ``(A, E)`` with their shapes.

    The shape is ``C`` times the right eigenvector, scaled so its largest
    entry is real and equal to one. Results are sorted by frequency.
    """
    vals, vecs = sla.eig(model.A, model.E)
    out = []
    for lam, x in zip(vals, vecs.T):
        if not np.isfinite(lam) or lam.imag <= 0:
            continue
        shape = model.C @ x
        imax = int(np.argmax(np.abs(shape)))
        if abs(shape[imax]) > 0:
            shape = shape / shape[imax]
        out.append(PoleEstimate(complex(lam), shape))
    out.sort(key=lambda p: p.frequency_hz)
    return out
