"""Histogram plug-in entropy estimators and transfer entropy.

All quantities are in bits. Series are discretised with equal-width bins per
channel; probabilities are empirical frequencies over the realised codes, so
empty cells never appear in any sum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadBinCount,
    LengthMismatch,
    SeriesTooShort,
    UnnormalizedDistribution,
    ValidationError,
)
from .signals import SignalMatrix

NEG_TOL = 1e-12
DEGENERATE_WIDTH = 1e-9


@dataclass(frozen=True, eq=False)
class BinnedSeries:
    codes: np.ndarray
    bin_count: int
    bin_edges: np.ndarray

    def __len__(self):
        return len(self.codes)


@dataclass(eq=False)
class TEMatrix:
    """values[i, j] is the transfer entropy from channel j (cause) to channel i (effect)."""

    values: np.ndarray
    history: tuple[int, int] = (1, 1)
    bin_count: int = 8
    channels: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TEMatrix):
            return NotImplemented
        return (
            tuple(self.history) == tuple(other.history)
            and self.bin_count == other.bin_count
            and np.array_equal(self.values, other.values)
        )


def bin_series(series, D: int) -> BinnedSeries:
    """Equal-width binning over [min, max]; bins are left-closed, the top bin is closed."""
    if D < 2:
        raise BadBinCount(f"bin count must be >= 2, got {D}")
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise SeriesTooShort("need a 1-D series of length >= 2")
    lo, hi = float(x.min()), float(x.max())
    if hi - lo <= 0:
        edges = np.linspace(lo, lo + DEGENERATE_WIDTH, D + 1)
        return BinnedSeries(np.zeros(len(x), dtype=np.int64), D, edges)
    edges = np.linspace(lo, hi, D + 1)
    codes = np.searchsorted(edges[1:-1], x, side="right").astype(np.int64)
    return BinnedSeries(codes, D, edges)


def shannon_entropy(dist) -> float:
    p = np.asarray(dist, dtype=float).ravel()
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise UnnormalizedDistribution(f"probabilities sum to {p.sum()!r}")
    p = p[p > 0]
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def _entropy_from_counts(counts: np.ndarray) -> float:
    counts = counts[counts > 0].astype(float)
    total = counts.sum()
    return float(np.log2(total) - np.dot(counts, np.log2(counts)) / total)


def _joint_codes(*columns: np.ndarray) -> np.ndarray:
    """Collapse aligned integer columns into one label per row."""
    cols = [np.asarray(c, dtype=np.int64) for c in columns]
    base = int(max(c.max() for c in cols)) + 1
    if base ** len(cols) < 2**62:
        label = np.zeros_like(cols[0])
        for c in cols:
            label = label * base + c
        _, inverse = np.unique(label, return_inverse=True)
    else:
        _, inverse = np.unique(np.stack(cols, axis=1), axis=0, return_inverse=True)
    return inverse.ravel()


def _entropy_of(*columns: np.ndarray) -> float:
    if len(columns) == 1:
        _, counts = np.unique(np.asarray(columns[0]), return_counts=True)
    else:
        counts = np.bincount(_joint_codes(*columns))
    return _entropy_from_counts(counts)


def _check_aligned(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"sequences of length {len(a)} and {len(b)}")
    return a, b


def joint_entropy(codes_a, codes_b) -> float:
    a, b = _check_aligned(codes_a, codes_b)
    return _entropy_of(a, b)


def conditional_entropy(codes_target, codes_given) -> float:
    """H(target | given) via the chain rule H(target, given) - H(given)."""
    a, b = _check_aligned(codes_target, codes_given)
    return _entropy_of(a, b) - _entropy_of(b)


def _codes(x) -> np.ndarray:
    return x.codes if isinstance(x, BinnedSeries) else np.asarray(x, dtype=np.int64)


def _lagged(codes: np.ndarray, lags: int, start: int) -> list[np.ndarray]:
    # column k holds codes[tau - 1 - k] for tau in [start, len)
    return [codes[start - 1 - k: len(codes) - 1 - k] for k in range(lags)]


def transfer_entropy_raw(source, target, q: int = 1, o: int = 1) -> float:
    """Unclamped plug-in TE from ``source`` to ``target``."""
    src, tgt = _codes(source), _codes(target)
    if src.shape != tgt.shape:
        raise LengthMismatch(f"source length {len(src)} != target length {len(tgt)}")
    if q < 1 or o < 1:
        raise ValidationError("history lengths must be >= 1")
    m = max(q, o)
    if len(tgt) <= m + 1:
        raise SeriesTooShort(f"length {len(tgt)} too short for histories q={q}, o={o}")
    nxt = tgt[m:]
    tgt_hist = _lagged(tgt, q, m)
    src_hist = _lagged(src, o, m)
    # Sum p(x,y,z) log p(x|y,z)/p(x|y) over realised triples from integer
    # counts, so a target fixed by its own past gives log2(1) = 0 exactly.
    xyz = _joint_codes(nxt, *tgt_hist, *src_hist)
    per_row = [np.bincount(c)[c] for c in (
        xyz, _joint_codes(*tgt_hist, *src_hist), _joint_codes(nxt, *tgt_hist), _joint_codes(*tgt_hist))]
    _, first = np.unique(xyz, return_index=True)
    c_xyz, c_yz, c_xy, c_y = (a[first].astype(float) for a in per_row)
    return float(np.dot(c_xyz, np.log2((c_xyz * c_y) / (c_yz * c_xy))) / len(nxt))


def transfer_entropy(source, target, q: int = 1, o: int = 1) -> float:
    """T(source -> target) = H(next | target history) - H(next | target history, source history).

    Accepts ``BinnedSeries`` or raw integer code arrays. Rounding noise in
    (-1e-12, 0) is clamped to 0.
    """
    te = transfer_entropy_raw(source, target, q, o)
    if -NEG_TOL < te < 0:
        return 0.0
    return te


def te_matrix(signals: SignalMatrix, D: int = 8, q: int = 1, o: int = 1) -> TEMatrix:
    binned = [bin_series(row, D) for row in signals.values]
    n = len(binned)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            try:
                values[i, j] = transfer_entropy(binned[j], binned[i], q, o)
            except ValidationError as exc:
                raise type(exc)(f"TE {j}->{i}: {exc}") from exc
    return TEMatrix(values, (q, o), D, signals.channels)


def save_te_csv(te: TEMatrix, path) -> None:
    """Rows are effect channels, columns are cause channels, 12 significant digits."""
    names = list(te.channels) if te.channels else [f"ch{k}" for k in range(te.n)]
    with open(path, "w") as fh:
        fh.write("effect\\cause," + ",".join(names) + "\n")
        for name, row in zip(names, te.values):
            fh.write(name + "," + ",".join(f"{x:.12g}" for x in row) + "\n")


def load_te_csv(path, history=(1, 1), bin_count=8) -> TEMatrix:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    names = tuple(lines[0].split(",")[1:])
    rows = [[float(x) for x in ln.split(",")[1:]] for ln in lines[1:]]
    return TEMatrix(np.array(rows), tuple(history), bin_count, names)
