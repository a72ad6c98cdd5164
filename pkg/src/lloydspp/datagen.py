"""Instance distributions and the deterministic randomness behind them.

Randomness comes from a counter-based generator: the value in slot ``t`` of
sample ``i`` under ``seed`` is

    u(seed, i, t) = (mix(mix(mix(seed) ^ i) ^ t) >> 11) * 2**-53

where ``mix`` is the SplitMix64 step (add 0x9E3779B97F4A7C15, then the
xor-shift-multiply finalizer), all arithmetic modulo 2**64. Slots are split into
streams by their top bits, ``t = (stream << 40) | j``: stream 0 holds the seed
vector Z, stream 1 everything used to build the instance. No state is carried
between calls, so any (seed, i) reproduces on its own.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ClusteringInstance
from .seeding import SeedVector

STREAM_Z = 0
STREAM_INSTANCE = 1
_STREAM_SHIFT = 40

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


class DatasetFormatError(ValueError):
    """Malformed labeled-dataset CSV; the message names the offending line."""


def _mix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _C1
        z = (z ^ (z >> np.uint64(27))) * _C2
        return z ^ (z >> np.uint64(31))


def _u64(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(int(v) & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))


def rng_bits(seed: int, i: int, t) -> np.ndarray:
    slots = np.asarray(t, dtype=np.uint64)
    h = _mix(_mix(_u64(seed)) ^ _u64(i))
    return _mix(h ^ slots)


def rng_uniform(seed: int, i: int, t):
    """Uniform in [0, 1) with 53-bit resolution; depends only on (seed, i, t)."""
    out = (rng_bits(seed, i, t) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return float(out[0]) if np.ndim(t) == 0 else out


def stream_uniforms(seed: int, i: int, stream: int, count: int, start: int = 0) -> np.ndarray:
    t = (np.uint64(stream) << np.uint64(_STREAM_SHIFT)) + np.arange(start, start + count, dtype=np.uint64)
    return rng_uniform(seed, i, t)


def seed_vector(seed: int, i: int, k: int) -> SeedVector:
    return SeedVector(stream_uniforms(seed, i, STREAM_Z, k))


class _Stream:
    """Sequential reader over one (seed, i, stream) slot range."""

    def __init__(self, seed, i, stream=STREAM_INSTANCE):
        self.seed, self.i, self.stream, self.pos = seed, i, stream, 0

    def take(self, count: int) -> np.ndarray:
        out = stream_uniforms(self.seed, self.i, self.stream, count, self.pos)
        self.pos += count
        return out

    def choose(self, population: Sequence, count: int) -> list:
        """``count`` items without replacement (partial Fisher-Yates)."""
        pool = list(population)
        u = self.take(count)
        for j in range(count):
            r = j + min(int(u[j] * (len(pool) - j)), len(pool) - j - 1)
            pool[j], pool[r] = pool[r], pool[j]
        return pool[:count]


def _sizes(k: int, N: int, n: Optional[int]) -> list[int]:
    if n is None:
        return [N] * k
    return [n // k + (1 if j < n % k else 0) for j in range(k)]


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: tuple
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != len(self.labels):
            raise DatasetFormatError("features and labels disagree in length")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", tuple(self.labels))

    def label_values(self) -> list:
        """Distinct labels in order of first appearance."""
        return list(dict.fromkeys(self.labels))


@dataclass(frozen=True)
class DistributionConfig:
    """Where instances come from.

    ``gaussian_grid``: ``k`` of the ``side x side`` unit-variance Gaussians on a
    grid with spacing ``stride``, ``N`` points each. ``label_subset``: ``k``
    random labels of ``dataset`` with ``N`` rows each. Setting ``n`` overrides
    ``k * N`` with near-equal group sizes summing to ``n``.
    """

    kind: str = "gaussian_grid"
    k: int = 4
    N: int = 120
    side: int = 3
    stride: float = 5.0
    n: Optional[int] = None
    dataset: Optional[LabeledDataset] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("gaussian_grid", "label_subset"):
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.k < 1 or (self.n is None and self.N < 1):
            raise ValueError("k and N must be positive")
        if self.n is not None and self.n < self.k:
            raise ValueError("n must be at least k")
        if self.kind == "gaussian_grid" and self.k > self.side ** 2:
            raise ValueError(f"gaussian grid has only {self.side ** 2} components")
        if self.kind == "label_subset" and self.dataset is None:
            raise ValueError("label_subset needs a dataset")

    def instance(self, seed: int, i: int) -> ClusteringInstance:
        if self.kind == "gaussian_grid":
            return gaussian_grid_instance(self, seed, i)
        return label_subset_instance(self.dataset, self.k, self.N, seed, i, n=self.n)

    def sample(self, seed: int, i: int) -> tuple[ClusteringInstance, SeedVector]:
        return self.instance(seed, i), seed_vector(seed, i, self.k)

    def describe(self) -> dict:
        d = {"kind": self.kind, "k": self.k, "N": self.N, "n": self.n}
        if self.kind == "gaussian_grid":
            d.update(side=self.side, stride=self.stride)
        else:
            d["dataset"] = self.dataset.name
        return d


def grid_means(side: int = 3, stride: float = 5.0) -> np.ndarray:
    """Component means; component ``c`` sits at column ``c % side``, row ``c // side``."""
    c = np.arange(side * side)
    return np.stack([(c % side) * stride, (c // side) * stride], axis=1).astype(float)


def gaussian_grid_instance(config: DistributionConfig, seed: int, i: int) -> ClusteringInstance:
    rs = _Stream(seed, i)
    comps = rs.choose(range(config.side ** 2), config.k)
    means = grid_means(config.side, config.stride)
    sizes = _sizes(config.k, config.N, config.n)
    pts, tgt = [], []
    for label, (c, size) in enumerate(zip(comps, sizes)):
        u = rs.take(2 * size).reshape(size, 2)
        # Box-Muller; 1 - u keeps the log argument in (0, 1]
        r = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        theta = 2.0 * math.pi * u[:, 1]
        xy = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        pts.append(means[c] + xy)
        tgt.append(np.full(size, label))
    return ClusteringInstance(np.concatenate(pts), config.k, np.concatenate(tgt))


def label_subset_instance(dataset: LabeledDataset, k: int, N: int, seed: int, i: int,
                          n: Optional[int] = None) -> ClusteringInstance:
    labels = dataset.label_values()
    if len(labels) < k:
        raise ValueError(f"dataset has {len(labels)} labels, need {k}")
    sizes = _sizes(k, N, n)
    lab = np.asarray([labels.index(v) for v in dataset.labels]) if dataset.labels else np.zeros(0, int)
    rs = _Stream(seed, i)
    chosen = rs.choose(range(len(labels)), k)
    rows, tgt = [], []
    for pos, (li, size) in enumerate(zip(chosen, sizes)):
        members = np.flatnonzero(lab == li)
        if members.size < size:
            raise ValueError(f"label {labels[li]!r} has {members.size} rows, need {size}")
        rows.extend(rs.choose(members.tolist(), size))
        tgt.extend([pos] * size)
    return ClusteringInstance(dataset.features[rows], k, np.asarray(tgt))


def draw_sample(distribution: DistributionConfig, m: int, seed: int, start: int = 0):
    """``m`` i.i.d. (instance, Z) pairs, reproducible from ``seed``."""
    if m < 1:
        raise ValueError("sample size m must be at least 1")
    return [distribution.sample(seed, i) for i in range(start, start + m)]


def load_labeled_csv(path) -> LabeledDataset:
    """Read ``f0,...,f{d-1},label`` rows. Errors name the offending line."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: line 1: empty file") from None
        d = len(header) - 1
        expected = [f"f{j}" for j in range(d)] + ["label"]
        if d < 1 or header != expected:
            raise DatasetFormatError(f"{path}: line 1: unknown header {header!r}")
        feats, labels = [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != d + 1:
                raise DatasetFormatError(f"{path}: line {line}: expected {d + 1} columns, got {len(row)}")
            try:
                feats.append([float(x) for x in row[:d]])
            except ValueError:
                raise DatasetFormatError(f"{path}: line {line}: non-numeric feature") from None
            labels.append(row[d])
    if not feats:
        raise DatasetFormatError(f"{path}: no data rows")
    return LabeledDataset(np.asarray(feats), tuple(labels), path.stem)


def write_labeled_csv(path, features, labels) -> None:
    features = np.asarray(features, dtype=np.float64)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{j}" for j in range(features.shape[1])] + ["label"])
        for x, lab in zip(features, labels):
            w.writerow([repr(float(v)) for v in x] + [lab])


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_instance(path, instance: ClusteringInstance, seed: Optional[int] = None,
                   i: Optional[int] = None) -> None:
    """Instance as a labeled CSV plus a JSON sidecar ``{k, metric, seed, i}``."""
    write_labeled_csv(path, instance.points, [str(t) for t in instance.target])
    meta = {"k": instance.k, "metric": instance.metric, "seed": seed, "i": i}
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def read_instance(path, k: Optional[int] = None) -> tuple[ClusteringInstance, dict]:
    """Inverse of ``write_instance``; labels map to targets by first appearance."""
    ds = load_labeled_csv(path)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    k = k if k is not None else meta.get("k")
    values = ds.label_values()
    if k is None:
        k = len(values)
    target = np.asarray([values.index(v) for v in ds.labels])
    return ClusteringInstance(ds.features, int(k), target, meta.get("metric", "euclidean")), meta
