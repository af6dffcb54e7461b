"""Multivariate time-series containers, CSV ingestion, VAR(1) synthesis and splitting."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .errors import (
    BadDims,
    MissingFile,
    NonNumericCell,
    RaggedRows,
    SingleClassDataset,
    TooFewSamples,
    TooFewTimesteps,
    UnstableCoupling,
    ValidationError,
)

MIN_TIMESTEPS = 4
BURN_IN = 100
TEST_FRACTION = 0.20
VAL_FRACTION = 0.15
SPLITS = ("train", "val", "test")


@dataclass(frozen=True, eq=False)
class SignalMatrix:
    """n channels x t samples of one recording."""

    channels: tuple[str, ...]
    values: np.ndarray
    sample_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise BadDims(f"values must be 2-D, got shape {values.shape}")
        n, t = values.shape
        if n < 2:
            raise BadDims(f"need at least 2 channels, got {n}")
        if t < MIN_TIMESTEPS:
            raise TooFewTimesteps(f"need at least {MIN_TIMESTEPS} timesteps, got {t}")
        if len(self.channels) != n:
            raise BadDims(f"{len(self.channels)} channel names for {n} rows")
        if not np.all(np.isfinite(values)):
            raise ValidationError("signal values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channels", tuple(str(c) for c in self.channels))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SignalMatrix):
            return NotImplemented
        return (
            self.channels == other.channels
            and self.sample_id == other.sample_id
            and np.array_equal(self.values, other.values)
        )


@dataclass
class LabeledDataset:
    """Labelled samples plus optional split tags.

    ``samples`` holds ``(item, label)`` pairs; the item is usually a
    ``SignalMatrix`` but the pipeline reuses this container for graphs.
    """

    samples: list[tuple[Any, int]]
    split_tags: list[str] | None = None

    def __post_init__(self):
        for idx, (_, label) in enumerate(self.samples):
            if label not in (0, 1) or isinstance(label, bool):
                raise ValidationError(f"sample {idx}: label must be 0 or 1, got {label!r}")
        if self.split_tags is not None:
            if len(self.split_tags) != len(self.samples):
                raise ValidationError("split_tags length differs from samples")
            bad = set(self.split_tags) - set(SPLITS)
            if bad:
                raise ValidationError(f"unknown split tags {sorted(bad)}")

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self) -> list[int]:
        return [label for _, label in self.samples]

    def indices(self, tag: str) -> list[int]:
        if self.split_tags is None:
            raise ValidationError("dataset has not been split")
        return [i for i, s in enumerate(self.split_tags) if s == tag]

    def subset(self, tag: str) -> list[tuple[Any, int]]:
        return [self.samples[i] for i in self.indices(tag)]

    def map_items(self, fn) -> "LabeledDataset":
        """Same labels and tags, items replaced by ``fn(item)``."""
        return LabeledDataset([(fn(item), y) for item, y in self.samples], self.split_tags)


# --------------------------------------------------------------------------- I/O


def load_signals(path, format: str = "csv") -> SignalMatrix:
    if format != "csv":
        raise ValidationError(f"unsupported signal format {format!r}")
    if not os.path.isfile(path):
        raise MissingFile(f"no such signals file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    expected = len(header) - 1
    channels, values = [], []
    for r, row in enumerate(body):
        if len(row) - 1 != expected:
            raise RaggedRows(r, expected, len(row) - 1)
        channels.append(row[0])
        parsed = []
        for c, cell in enumerate(row[1:], start=1):
            try:
                x = float(cell)
            except ValueError:
                raise NonNumericCell(r, c, cell) from None
            if not math.isfinite(x):
                raise NonNumericCell(r, c, cell)
            parsed.append(x)
        values.append(parsed)
    if expected < MIN_TIMESTEPS:
        raise TooFewTimesteps(f"{path}: {expected} timesteps, need {MIN_TIMESTEPS}")
    sample_id = os.path.splitext(os.path.basename(path))[0]
    return SignalMatrix(tuple(channels), np.array(values, dtype=float), sample_id)


def save_signals(signals: SignalMatrix, path) -> None:
    # repr() round-trips float64 exactly
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["channel"] + [f"t{k}" for k in range(signals.t)])
        for name, row in zip(signals.channels, signals.values):
            w.writerow([name] + [repr(float(x)) for x in row])


def load_manifest(path) -> tuple[LabeledDataset, int | None]:
    """Read a JSON manifest ``{"seed": int, "samples": [{"signals_path", "label"}]}``.

    Paths are resolved relative to the manifest's directory.
    """
    if not os.path.isfile(path):
        raise MissingFile(f"no such manifest: {path}")
    with open(path) as fh:
        doc = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    samples = []
    for rec in doc.get("samples", []):
        sig = load_signals(os.path.join(base, rec["signals_path"]))
        samples.append((sig, int(rec["label"])))
    return LabeledDataset(samples), doc.get("seed")


def save_manifest(path, records: Sequence[tuple[str, int]], seed: int | None = None) -> None:
    doc = {"seed": seed, "samples": [{"signals_path": p, "label": y} for p, y in records]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


# --------------------------------------------------------------------- synthesis


@dataclass
class SynthSpec:
    n: int
    t: int
    coupling_per_class: Sequence[np.ndarray]
    noise_std: float = 1.0
    seed: int = 0
    n_samples: int = 40
    class_count: int = 2


def spectral_radius(m: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def chain_coupling(n: int, strength: float = 0.8, self_weight: float = 0.5) -> np.ndarray:
    """0 -> 1 -> ... -> n-1 with ``C[k+1, k] = strength``."""
    c = np.eye(n) * self_weight
    for k in range(n - 1):
        c[k + 1, k] = strength
    return c


def hub_coupling(n: int, strength: float = 0.8, self_weight: float = 0.5, hub: int = 0) -> np.ndarray:
    """Channel ``hub`` drives every other channel."""
    c = np.eye(n) * self_weight
    for k in range(n):
        if k != hub:
            c[k, hub] = strength
    return c


def simulate_var1(coupling: np.ndarray, t: int, noise_std: float, rng: np.random.Generator) -> np.ndarray:
    n = coupling.shape[0]
    total = BURN_IN + t
    noise = rng.normal(0.0, 1.0, size=(total, n)) * noise_std
    out = np.empty((n, total))
    v = np.zeros(n)
    for tau in range(total):
        v = coupling @ v + noise[tau]
        out[:, tau] = v
    return out[:, BURN_IN:]


def generate_synthetic(spec: SynthSpec) -> LabeledDataset:
    """Balanced labelled dataset of VAR(1) recordings, one coupling matrix per class."""
    if spec.class_count != 2 or len(spec.coupling_per_class) != spec.class_count:
        raise BadDims("exactly two classes with one coupling matrix each are supported")
    if spec.n < 2 or spec.t < MIN_TIMESTEPS:
        raise BadDims(f"need n >= 2 and t >= {MIN_TIMESTEPS}, got n={spec.n}, t={spec.t}")
    if spec.n_samples < 2 or spec.n_samples % 2:
        raise BadDims(f"n_samples must be even and >= 2 for balanced labels, got {spec.n_samples}")
    if spec.noise_std < 0:
        raise BadDims(f"noise_std must be non-negative, got {spec.noise_std}")
    couplings = []
    for k, c in enumerate(spec.coupling_per_class):
        c = np.asarray(c, dtype=float)
        if c.shape != (spec.n, spec.n):
            raise BadDims(f"class {k} coupling has shape {c.shape}, expected {(spec.n, spec.n)}")
        rho = spectral_radius(c)
        if rho >= 1:
            raise UnstableCoupling(f"class {k} coupling has spectral radius {rho:.4f} >= 1")
        couplings.append(c)

    rng = np.random.default_rng(spec.seed)
    channels = tuple(f"ch{k}" for k in range(spec.n))
    samples = []
    for idx in range(spec.n_samples):
        label = idx % 2
        values = simulate_var1(couplings[label], spec.t, spec.noise_std, rng)
        samples.append((SignalMatrix(channels, values, f"s{idx:04d}"), label))
    return LabeledDataset(samples)


# ----------------------------------------------------------------------- splits


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _allocate(per_class: dict[int, int], total: int) -> dict[int, int]:
    """Split ``total`` across classes proportionally (largest remainder)."""
    size = sum(per_class.values())
    quotas = {k: total * v / size for k, v in per_class.items()}
    alloc = {k: int(math.floor(q)) for k, q in quotas.items()}
    leftover = total - sum(alloc.values())
    for k in sorted(quotas, key=lambda k: (-(quotas[k] - alloc[k]), k))[:leftover]:
        alloc[k] += 1
    return alloc


def split_dataset(ds: LabeledDataset, seed: int) -> LabeledDataset:
    """Stratified 80/20 train+val/test split, then 85/15 train/val."""
    n = len(ds)
    if n < 10:
        raise TooFewSamples(f"need at least 10 samples to split, got {n}")
    labels = ds.labels
    by_class = {k: [i for i, y in enumerate(labels) if y == k] for k in (0, 1)}
    if not by_class[0] or not by_class[1]:
        raise SingleClassDataset("both labels must be present")

    n_test = _round_half_up(TEST_FRACTION * n)
    n_val = _round_half_up(VAL_FRACTION * (n - n_test))
    test_alloc = _allocate({k: len(v) for k, v in by_class.items()}, n_test)
    remaining = {k: len(v) - test_alloc[k] for k, v in by_class.items()}
    val_alloc = _allocate(remaining, n_val)

    rng = np.random.default_rng(seed)
    tags = [""] * n
    for k in (0, 1):
        order = [by_class[k][i] for i in rng.permutation(len(by_class[k]))]
        cut1 = test_alloc[k]
        cut2 = cut1 + val_alloc[k]
        for pos, idx in enumerate(order):
            tags[idx] = "test" if pos < cut1 else "val" if pos < cut2 else "train"
    return replace(ds, split_tags=tags)
