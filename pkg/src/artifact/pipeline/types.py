from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import metric as metric_mod


@dataclass
class Codebook:
    """Per-subspace centroids, shape (n_s, N_C, d_s). Client-side only."""

    centroids: np.ndarray
    metric: str = metric_mod.EUCLIDEAN

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 3:
            raise ValueError(f"codebook must be (n_s, N_C, d_s), got {self.centroids.shape}")
        if not np.all(np.isfinite(self.centroids)):
            raise ValueError("codebook has non-finite values")
        metric_mod.check(self.metric)

    @property
    def n_s(self) -> int:
        return self.centroids.shape[0]

    @property
    def n_c(self) -> int:
        return self.centroids.shape[1]

    @property
    def d_s(self) -> int:
        return self.centroids.shape[2]


@dataclass
class EncodedDatabase:
    codes: np.ndarray
    ids: np.ndarray | None = None

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.int64)
        if self.codes.ndim != 2:
            raise ValueError("codes must be (N_B, n_s)")
        if self.ids is None:
            self.ids = np.arange(len(self.codes), dtype=np.int64)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.ids.shape != (len(self.codes),):
            raise ValueError("need one id per code row")

    def __len__(self) -> int:
        return len(self.codes)

    def validate(self, n_c: int) -> None:
        if self.codes.size and (self.codes.min() < 0 or self.codes.max() >= n_c):
            raise ValueError(f"code index outside [0, {n_c})")


@dataclass
class InterCodeTables:
    """tables[s, i, j] = distance (or inner product) between codes i and j of subspace s."""

    tables: np.ndarray
    metric: str = metric_mod.EUCLIDEAN

    def __post_init__(self):
        self.tables = np.asarray(self.tables, dtype=np.float64)
        if self.tables.ndim != 3 or self.tables.shape[1] != self.tables.shape[2]:
            raise ValueError(f"tables must be (n_s, N_C, N_C), got {self.tables.shape}")
        metric_mod.check(self.metric)

    @property
    def cost(self) -> np.ndarray:
        return metric_mod.to_cost(self.tables, self.metric)


@dataclass
class IVFIndex:
    centers: np.ndarray                 # (N_I, n_s) center PQ codes
    assignments: np.ndarray             # (N_B, n_nb) center ids per datum, nearest first
    n_nb: int
    posting_lists: list = field(default_factory=list)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.int64)
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        if not self.posting_lists:
            self.posting_lists = posting_lists(self.assignments, len(self.centers))

    @property
    def n_centers(self) -> int:
        return len(self.centers)


def posting_lists(assignments: np.ndarray, n_centers: int) -> list:
    """Datum ids per center, ascending."""
    n_b, n_nb = assignments.shape
    owners = np.repeat(np.arange(n_b, dtype=np.int64), n_nb)
    flat = assignments.reshape(-1)
    order = np.lexsort((owners, flat))
    counts = np.bincount(flat, minlength=n_centers)
    return np.split(owners[order], np.cumsum(counts)[:-1])
