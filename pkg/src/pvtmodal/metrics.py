"""Modal Assurance Criterion algebra, run comparison and sensor placement."""
from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ModeSet

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 10**6
_CHUNK = 20000


def mac(a, b) -> float:
    """Complex MAC ``|a^H b|^2 / ((a^H a)(b^H b))``."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise ValueError(f"shape vectors differ in length: {a.size} vs {b.size}")
    na = np.vdot(a, a).real
    nb = np.vdot(b, b).real
    if na == 0 or nb == 0:
        raise ValueError("MAC is undefined for a zero vector")
    val = abs(np.vdot(a, b)) ** 2 / (na * nb)
    return float(min(max(val, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class MacMatrix:
    values: np.ndarray
    row_labels: tuple = ()
    col_labels: tuple = ()

    def off_diagonal_sum(self) -> float:
        """Sum of the strictly upper-triangular entries."""
        return float(np.triu(self.values, 1).sum())


def mac_matrix(shapes_a, shapes_b) -> np.ndarray:
    """MAC between every column of ``shapes_a`` and every column of ``shapes_b``."""
    A = np.asarray(shapes_a, dtype=complex)
    B = np.asarray(shapes_b, dtype=complex)
    A = A[:, None] if A.ndim == 1 else A
    B = B[:, None] if B.ndim == 1 else B
    if A.shape[0] != B.shape[0]:
        raise ValueError("shape matrices must have the same number of rows")
    na = np.einsum("ij,ij->j", A.conj(), A).real
    nb = np.einsum("ij,ij->j", B.conj(), B).real
    if np.any(na == 0) or np.any(nb == 0):
        raise ValueError("MAC is undefined for a zero vector")
    cross = np.abs(A.conj().T @ B) ** 2
    return np.clip(cross / np.outer(na, nb), 0.0, 1.0)


def automac(shapes) -> MacMatrix:
    """AutoMAC of a list of shape vectors (or the columns of a matrix)."""
    if isinstance(shapes, np.ndarray) and shapes.ndim == 2:
        cols = shapes
    else:
        vecs = [np.asarray(s, dtype=complex).ravel() for s in shapes]
        if not vecs:
            raise ValueError("automac needs at least one shape")
        if len({v.size for v in vecs}) > 1:
            raise ValueError("all shapes must have the same length")
        cols = np.column_stack(vecs)
    M = mac_matrix(cols, cols)
    M = 0.5 * (M + M.T)
    np.fill_diagonal(M, 1.0)
    labels = tuple(range(1, M.shape[0] + 1))
    return MacMatrix(M, labels, labels)


# ------------------------------------------------------------------ comparison


@dataclass(frozen=True)
class ModePair:
    index_a: int
    index_b: int
    frequency_a: float
    frequency_b: float
    damping_a: float
    damping_b: float
    mac: float

    @property
    def frequency_difference_pct(self) -> float:
        return 100.0 * (self.frequency_b - self.frequency_a) / self.frequency_a

    @property
    def damping_difference_pct(self) -> float:
        return 100.0 * (self.damping_b - self.damping_a) / self.damping_a


@dataclass(frozen=True)
class ComparisonReport:
    pairs: tuple[ModePair, ...]
    unpaired_a: tuple[int, ...] = ()
    unpaired_b: tuple[int, ...] = ()
    config: dict | None = field(default=None, compare=False)

    def to_text(self) -> str:
        lines = []
        if self.config is not None:
            import json

            lines.append("# config " + json.dumps(self.config, sort_keys=True))
        lines.append(
            f"{'mode':>4} {'f_ref[Hz]':>10} {'f_case[Hz]':>10} {'df[%]':>8} "
            f"{'z_ref':>8} {'z_case':>8} {'dz[%]':>8} {'MAC':>6}"
        )
        for n, p in enumerate(self.pairs, start=1):
            lines.append(
                f"{n:>4} {p.frequency_a:>10.2f} {p.frequency_b:>10.2f} "
                f"{p.frequency_difference_pct:>+8.2f} {p.damping_a:>8.3f} {p.damping_b:>8.3f} "
                f"{p.damping_difference_pct:>+8.2f} {p.mac:>6.3f}"
            )
        if self.unpaired_a:
            lines.append("# unpaired reference modes: " + " ".join(str(i + 1) for i in self.unpaired_a))
        if self.unpaired_b:
            lines.append("# unpaired case modes: " + " ".join(str(i + 1) for i in self.unpaired_b))
        return "\n".join(lines) + "\n"


def compare_runs(a: ModeSet, b: ModeSet, max_rel_gap: float = 0.2) -> ComparisonReport:
    """Pair modes of ``a`` and ``b`` greedily in frequency order.

    Walking ``a`` by ascending frequency, each mode takes the nearest unused
    mode of ``b`` whose relative frequency gap is within ``max_rel_gap``.
    Differences are ``(b - a) / a``.
    """
    fb = b.frequencies
    used = set()
    pairs = []
    unpaired_a = []
    for i, ma in enumerate(a.modes):
        best = None
        for j in range(len(b)):
            if j in used:
                continue
            gap = abs(fb[j] - ma.frequency_hz) / ma.frequency_hz
            if gap <= max_rel_gap and (best is None or gap < best[0]):
                best = (gap, j)
        if best is None:
            unpaired_a.append(i)
            continue
        j = best[1]
        used.add(j)
        mb = b.modes[j]
        shape_mac = mac(ma.shape, mb.shape) if ma.shape.size == mb.shape.size and ma.shape.any() and mb.shape.any() else float("nan")
        pairs.append(ModePair(i, j, ma.frequency_hz, mb.frequency_hz,
                              ma.damping_ratio, mb.damping_ratio, shape_mac))
    unpaired_b = tuple(j for j in range(len(b)) if j not in used)
    return ComparisonReport(tuple(pairs), tuple(unpaired_a), unpaired_b)


# ------------------------------------------------------------------- placement


@dataclass(frozen=True)
class PlacementResult:
    positions: tuple[float, ...]
    indices: tuple[int, ...]
    objective: float
    search: str  # exhaustive | greedy


def placement_objective(shapes_at_candidates, indices) -> float:
    """Upper-triangular off-diagonal AutoMAC sum for the chosen rows."""
    sub = np.asarray(shapes_at_candidates)[list(indices)]
    return automac(sub).off_diagonal_sum()


def _batch_objective(Phi: np.ndarray, combos: np.ndarray) -> np.ndarray:
    # Phi (n_cand, n_modes); combos (n_batch, n_sensors)
    sub = Phi[combos]  # (batch, sensors, modes)
    G = np.einsum("bsi,bsj->bij", sub.conj(), sub)
    d = np.einsum("bii->bi", G).real
    with np.errstate(divide="ignore", invalid="ignore"):
        M = np.abs(G) ** 2 / (d[:, :, None] * d[:, None, :])
    iu = np.triu_indices(Phi.shape[1], 1)
    vals = M[:, iu[0], iu[1]].sum(axis=1)
    # a mode invisible to the subset has no defined MAC
    vals[np.any(d == 0, axis=1)] = np.inf
    return vals


def optimize_placement(candidate_positions, shapes_at_candidates, n_sensors: int,
                       method: str = "auto", required=()) -> PlacementResult:
    """Choose ``n_sensors`` candidates minimising the AutoMAC off-diagonal sum.

    Exhaustive enumeration is used when the number of subsets is at most
    ``EXHAUSTIVE_LIMIT`` (or ``method="exhaustive"``); otherwise greedy
    backward elimination drops, one at a time, the sensor whose removal
    gives the lowest objective. Ties go to the lexicographically smallest
    sorted position tuple. Candidates listed by index in ``required`` are
    always kept.
    """
    pos = np.asarray(candidate_positions, dtype=float)
    Phi = np.asarray(shapes_at_candidates)
    if Phi.ndim == 1:
        Phi = Phi[:, None]
    if Phi.shape[0] != pos.size:
        raise ValueError("shapes must be sampled at every candidate position")
    n_cand, n_modes = Phi.shape
    if not 1 <= n_sensors <= n_cand:
        raise ValueError(f"n_sensors must lie in [1, {n_cand}]")
    if np.any(np.linalg.norm(Phi, axis=0) == 0):
        raise ValueError("a mode shape is zero at every candidate")
    if n_sensors < n_modes:
        warnings.warn(
            f"{n_sensors} sensors for {n_modes} modes: AutoMAC may be rank deficient",
            RuntimeWarning, stacklevel=2,
        )
    required = tuple(sorted({int(i) for i in required}))
    if len(required) > n_sensors or any(not 0 <= i < n_cand for i in required):
        raise ValueError("required sensors must be valid indices, at most n_sensors of them")
    n_free = n_cand - len(required)
    if method == "auto":
        method = ("exhaustive" if math.comb(n_free, n_sensors - len(required)) <= EXHAUSTIVE_LIMIT
                  else "greedy")
    if method == "exhaustive":
        idx = _exhaustive(pos, Phi, n_sensors, required)
    elif method == "greedy":
        idx = _greedy(pos, Phi, n_sensors, required)
    else:
        raise ValueError(f"unknown method {method!r}")
    idx = tuple(sorted(idx, key=lambda i: (pos[i], i)))
    return PlacementResult(
        tuple(float(pos[i]) for i in idx), idx, placement_objective(Phi, idx), method
    )


def _key(pos, idx):
    return tuple(sorted(pos[list(idx)]))


def _exhaustive(pos, Phi, n_sensors, required=()):
    best_val = math.inf
    best = None
    free = [i for i in range(pos.size) if i not in required]
    combos = (
        tuple(sorted(required + c))
        for c in itertools.combinations(free, n_sensors - len(required))
    )
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=int)
        if chunk.size == 0:
            break
        chunk = chunk.reshape(-1, n_sensors)
        vals = _batch_objective(Phi, chunk)
        m = vals.min()
        if m > best_val:
            continue
        for row in chunk[vals == m]:
            if m < best_val or _key(pos, row) < _key(pos, best):
                best_val, best = m, tuple(row)
    return best


def _greedy(pos, Phi, n_sensors, required=()):
    chosen = list(range(pos.size))
    while len(chosen) > n_sensors:
        droppable = [c for c in chosen if c not in required]
        trials = np.array([[c for c in chosen if c != drop] for drop in droppable], dtype=int)
        vals = _batch_objective(Phi, trials)
        m = vals.min()
        cands = [tuple(t) for t in trials[vals == m]]
        chosen = list(min(cands, key=lambda t: _key(pos, t)))
    return tuple(chosen)
