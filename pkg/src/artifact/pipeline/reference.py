"""Plaintext IVF-PQ written without any ciphertext machinery.

Shares only the named seed streams with the encrypted pipeline. Distances
are computed directly from vectors, so agreement with the encrypted path
is evidence that the packing, reduction and protocol plumbing are right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import seeding
from ..metric import EUCLIDEAN, INNER_PRODUCT


def split_blocks(x: np.ndarray, n_s: int) -> np.ndarray:
    """(N, d) -> (N, n_s, ceil(d/n_s)); longer blocks at the tail, zero fill at block ends."""
    n, d = x.shape
    d_s = -(-d // n_s)
    base, extra = divmod(d, n_s)
    out = np.zeros((n, n_s, d_s))
    pos = 0
    for s in range(n_s):
        width = base + (1 if s >= n_s - extra else 0)
        out[:, s, :width] = x[:, pos:pos + width]
        pos += width
    return out


def pair_values(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    """(n, d_s) x (m, d_s) -> (n, m) squared distances or inner products."""
    if metric == INNER_PRODUCT:
        return (a[:, None, :] * b[None, :, :]).sum(-1)
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)


def kmeans(samples: np.ndarray, init: np.ndarray, n_k: int):
    """Returns (centroids, executed iterations). Same loop and repair rules as the protocol."""
    n_c = len(init)
    centroids = samples[init].copy()
    prev = np.zeros(len(samples), dtype=np.int64)
    cur = np.ones(len(samples), dtype=np.int64)
    rounds = 0
    for _ in range(n_k):
        if np.array_equal(prev, cur):
            break
        prev = cur
        dist = pair_values(samples, centroids, EUCLIDEAN)
        labels = dist.argmin(axis=1)
        for empty in range(n_c):
            sizes = np.bincount(labels, minlength=n_c)
            if sizes[empty] == 0:
                big = sizes.argmax()
                idx = np.where(labels == big)[0]
                labels[idx[dist[idx, big].argmax()]] = empty
        centroids = np.stack([samples[labels == k].mean(axis=0) for k in range(n_c)])
        cur = labels
        rounds += 1
    return centroids, rounds


@dataclass
class PlainIVFPQ:
    n_s: int
    n_c: int
    metric: str = EUCLIDEAN
    n_rs: int = 1000
    n_k: int = 100
    n_i: int = 64
    n_nb: int = 3
    pq_iters: int = 20
    seed: int = 0

    def train(self, train: np.ndarray) -> np.ndarray:
        rows = seeding.training_sample(self.seed, len(train), self.n_rs)
        blocks = split_blocks(np.asarray(train, dtype=np.float64)[rows], self.n_s)
        books = []
        self.kmeans_rounds = []
        for s in range(self.n_s):
            init = seeding.kmeans_init(self.seed, s, self.n_rs, self.n_c)
            c, rounds = kmeans(blocks[:, s, :], init, self.n_k)
            books.append(c)
            self.kmeans_rounds.append(rounds)
        self.codebook = np.stack(books)
        return self.codebook

    def tables_for(self, x: np.ndarray) -> np.ndarray:
        """(N, d) -> (N, n_s, N_C) query/datum-to-centroid values."""
        blocks = split_blocks(np.atleast_2d(np.asarray(x, dtype=np.float64)), self.n_s)
        return np.stack([pair_values(blocks[:, s, :], self.codebook[s], self.metric)
                         for s in range(self.n_s)], axis=1)

    def _cost(self, v):
        return -v if self.metric == INNER_PRODUCT else v

    def encode(self, base: np.ndarray) -> np.ndarray:
        self.codes = self._cost(self.tables_for(base)).argmin(axis=2)
        return self.codes

    def inter_code(self) -> np.ndarray:
        self.inter = np.stack([pair_values(c, c, self.metric) for c in self.codebook])
        return self.inter

    def _center_cost(self, codes, centers):
        cost = self._cost(self.inter)
        total = np.zeros((len(codes), len(centers)))
        for s in range(self.n_s):
            total += cost[s][np.ix_(codes[:, s], centers[:, s])]
        return total

    def build_index(self):
        codes = self.codes
        centers = codes[seeding.pqkmeans_init(self.seed, len(codes), self.n_i)].copy()
        cost = self._cost(self.inter)
        labels = None
        for _ in range(self.pq_iters):
            new = self._center_cost(codes, centers).argmin(axis=1)
            if labels is not None and (new == labels).all():
                break
            labels = new
            for k in range(self.n_i):
                members = codes[labels == k]
                if len(members) == 0:
                    continue
                for s in range(self.n_s):
                    counts = np.bincount(members[:, s], minlength=self.n_c).astype(np.float64)
                    centers[k, s] = (counts @ cost[s]).argmin()
        self.centers = centers
        dist = self._center_cost(codes, centers)
        self.assignments = np.argsort(dist, axis=1, kind="stable")[:, :self.n_nb]
        self.lists = [np.sort(np.where((self.assignments == c).any(axis=1))[0]) for c in range(self.n_i)]
        return self.centers, self.assignments

    def _adc(self, table, codes):
        total = np.zeros(len(codes))
        for s in range(self.n_s):
            total = total + table[s][codes[:, s]]
        return total

    def search(self, queries: np.ndarray, l: int = 10, l_c: int = 3) -> list:
        out = []
        for table in self._cost(self.tables_for(queries)):
            probe = np.argsort(self._adc(table, self.centers), kind="stable")[:l_c]
            cand = np.unique(np.concatenate([self.lists[c] for c in probe]))
            scores = self._adc(table, self.codes[cand])
            out.append(cand[np.argsort(scores, kind="stable")[:l]])
        return out

    def fit(self, train, base):
        self.train(train)
        self.encode(base)
        self.inter_code()
        self.build_index()
        return self
