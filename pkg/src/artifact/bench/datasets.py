"""fvecs/ivecs files, brute-force ground truth and synthetic mixtures.

Record layout for both formats: a little-endian int32 dimension n followed
by n little-endian float32 (fvecs) or int32 (ivecs) values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .. import seeding
from ..metric import EUCLIDEAN, check, to_cost


class FormatError(ValueError):
    pass


def _read_vecs(path, dtype) -> np.ndarray:
    raw = np.fromfile(path, dtype="<i4")
    if raw.size == 0:
        return np.zeros((0, 0), dtype=dtype)
    dim = int(raw[0])
    if dim <= 0:
        raise FormatError(f"{path}: bad dimension {dim}")
    if raw.size % (dim + 1):
        raise FormatError(f"{path}: truncated record")
    rows = raw.reshape(-1, dim + 1)
    if (rows[:, 0] != dim).any():
        raise FormatError(f"{path}: inconsistent dimension")
    return rows[:, 1:].copy().view(dtype)


def load_fvecs(path) -> np.ndarray:
    return _read_vecs(path, np.dtype("<f4"))


def load_ivecs(path) -> np.ndarray:
    return _read_vecs(path, np.dtype("<i4"))


def _write_vecs(path, data, dtype) -> None:
    data = np.atleast_2d(np.asarray(data)).astype(dtype)
    n, dim = data.shape
    out = np.empty((n, dim + 1), dtype="<i4")
    out[:, 0] = dim
    out[:, 1:] = data.view("<i4")
    out.tofile(path)


def write_fvecs(path, data) -> None:
    _write_vecs(path, data, np.dtype("<f4"))


def write_ivecs(path, data) -> None:
    _write_vecs(path, data, np.dtype("<i4"))


def ground_truth(base: np.ndarray, queries: np.ndarray, k: int, metric: str = EUCLIDEAN,
                 chunk: int = 256) -> np.ndarray:
    """Exact top-k ids per query; equal scores go to the lower id."""
    check(metric)
    base = np.asarray(base, dtype=np.float64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if k > len(base):
        raise ValueError(f"k={k} exceeds the {len(base)} base vectors")
    norms = np.einsum("ij,ij->i", base, base)
    out = np.empty((len(queries), k), dtype=np.int32)
    for lo in range(0, len(queries), chunk):
        q = queries[lo:lo + chunk]
        dots = q @ base.T
        if metric == EUCLIDEAN:
            value = np.einsum("ij,ij->i", q, q)[:, None] - 2 * dots + norms[None, :]
        else:
            value = dots
        out[lo:lo + chunk] = np.argsort(to_cost(value, metric), axis=1, kind="stable")[:, :k]
    return out


@dataclass
class Dataset:
    name: str
    base: np.ndarray
    queries: np.ndarray
    train: np.ndarray
    metric: str = EUCLIDEAN
    truth: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.base.shape[1]

    def ground_truth(self, k: int = 10) -> np.ndarray:
        if self.truth is None or self.truth.shape[1] < k:
            self.truth = ground_truth(self.base, self.queries, k, self.metric)
        return self.truth[:, :k]


def synth_dataset(seed: int, n: int, d: int, clusters: int, n_queries: int = 100,
                  separation: float = 8.0, metric: str = EUCLIDEAN, name: str = "synthetic") -> Dataset:
    """SIFT-like Gaussian mixture: non-negative integer features in [0, 255].

    Cluster centres are uniform in the cube. ``separation`` is the ratio of
    the expected centre-to-centre distance to the expected point-to-centre
    distance, so larger values give tighter clusters. Queries come from the
    same mixture.
    """
    check(metric)
    if clusters > n:
        raise ValueError("more clusters than points")
    rng = seeding.stream(seed, seeding.DATA)
    centers = rng.uniform(0.0, 255.0, size=(clusters, d))
    spread = 255.0 / (separation * np.sqrt(6.0)) if np.isfinite(separation) else 0.0

    def draw(count):
        which = rng.integers(0, clusters, size=count)
        x = centers[which] + rng.normal(0.0, spread, size=(count, d))
        return np.clip(np.rint(x), 0, 255).astype(np.float32)

    base = draw(n)
    queries = draw(n_queries)
    return Dataset(name, base, queries, base, metric)


@dataclass
class DatasetSpec:
    """Where a dataset comes from: fvecs/ivecs paths or generator parameters."""

    name: str = "synthetic"
    metric: str = EUCLIDEAN
    d: int = 128
    base_path: str | None = None
    query_path: str | None = None
    train_path: str | None = None
    truth_path: str | None = None
    n_base: int = 10_000
    n_queries: int = 100
    clusters: int = 100
    separation: float = 8.0
    seed: int = 0
    scale: float = 1.0

    def __post_init__(self):
        check(self.metric)
        if self.base_path is None and self.clusters > self.n_base:
            raise ValueError("more clusters than points")

    @property
    def synthetic(self) -> bool:
        return self.base_path is None

    def load(self) -> Dataset:
        ds = self._load()
        if self.scale != 1.0:
            # ground truth is scale invariant for both metrics, so it is kept
            base = ds.base * self.scale
            ds = replace(ds, base=base, queries=ds.queries * self.scale,
                         train=base if ds.train is ds.base else ds.train * self.scale)
        return ds

    def _load(self) -> Dataset:
        if self.synthetic:
            return synth_dataset(self.seed, self.n_base, self.d, self.clusters, self.n_queries,
                                 self.separation, self.metric, self.name)
        for p in (self.base_path, self.query_path, self.train_path, self.truth_path):
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(p)
        if self.query_path is None:
            raise ValueError("file datasets need a query file")
        base = load_fvecs(self.base_path)
        queries = load_fvecs(self.query_path)
        train = load_fvecs(self.train_path) if self.train_path else base
        truth = load_ivecs(self.truth_path) if self.truth_path else None
        return Dataset(self.name, base, queries, train, self.metric, truth)
