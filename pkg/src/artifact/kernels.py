"""Plaintext hot loops over PQ codes.

Each kernel has an ``@njit`` version and a numpy version that accumulate in
the same order (subspace by subspace, code by code), so both paths give
bit-identical floats. ``ARTIFACT_NUMBA=0`` selects numpy.
"""

from __future__ import annotations

import numpy as np

from ._jit import njit, pick


@njit(cache=True)
def _adc_scores_numba(codes, table):
    m, n_s = codes.shape
    out = np.empty(m)
    for i in range(m):
        acc = 0.0
        for s in range(n_s):
            acc += table[s, codes[i, s]]
        out[i] = acc
    return out


def _adc_scores_numpy(codes, table):
    out = np.zeros(codes.shape[0])
    for s in range(codes.shape[1]):
        out += table[s, codes[:, s]]
    return out


@njit(cache=True)
def _code_distances_numba(codes, centers, tables):
    m, n_s = codes.shape
    k = centers.shape[0]
    out = np.empty((m, k))
    for i in range(m):
        for j in range(k):
            acc = 0.0
            for s in range(n_s):
                acc += tables[s, codes[i, s], centers[j, s]]
            out[i, j] = acc
    return out


def _code_distances_numpy(codes, centers, tables):
    out = np.zeros((codes.shape[0], centers.shape[0]))
    for s in range(codes.shape[1]):
        out += tables[s][codes[:, s][:, None], centers[:, s][None, :]]
    return out


@njit(cache=True)
def _nearest_numba(codes, centers, tables):
    m, n_s = codes.shape
    k = centers.shape[0]
    best = np.empty(m, dtype=np.int64)
    best_d = np.empty(m)
    for i in range(m):
        bi = 0
        bd = np.inf
        for j in range(k):
            acc = 0.0
            for s in range(n_s):
                acc += tables[s, codes[i, s], centers[j, s]]
            if acc < bd:
                bd = acc
                bi = j
        best[i] = bi
        best_d[i] = bd
    return best, best_d


def _nearest_numpy(codes, centers, tables, chunk=4096):
    m = codes.shape[0]
    best = np.empty(m, dtype=np.int64)
    best_d = np.empty(m)
    for lo in range(0, m, chunk):
        dist = _code_distances_numpy(codes[lo:lo + chunk], centers, tables)
        idx = np.argmin(dist, axis=1)
        best[lo:lo + chunk] = idx
        best_d[lo:lo + chunk] = dist[np.arange(len(idx)), idx]
    return best, best_d


@njit(cache=True)
def _vote_numba(codes, labels, n_clusters, tables):
    m, n_s = codes.shape
    n_c = tables.shape[1]
    hist = np.zeros((n_clusters, n_s, n_c))
    for i in range(m):
        for s in range(n_s):
            hist[labels[i], s, codes[i, s]] += 1.0
    cost = np.zeros((n_clusters, n_s, n_c))
    for c in range(n_c):
        for k in range(n_clusters):
            for s in range(n_s):
                h = hist[k, s, c]
                for j in range(n_c):
                    cost[k, s, j] += h * tables[s, c, j]
    return hist, cost


def _vote_numpy(codes, labels, n_clusters, tables):
    m, n_s = codes.shape
    n_c = tables.shape[1]
    hist = np.zeros((n_clusters, n_s, n_c))
    for s in range(n_s):
        np.add.at(hist[:, s, :], (labels, codes[:, s]), 1.0)
    cost = np.zeros((n_clusters, n_s, n_c))
    for c in range(n_c):
        cost += hist[:, :, c, None] * tables[None, :, c, :]
    return hist, cost


def _prep(codes, table):
    return np.ascontiguousarray(codes, dtype=np.int64), np.ascontiguousarray(table, dtype=np.float64)


def adc_scores(codes: np.ndarray, table: np.ndarray, *, numba: bool | None = None) -> np.ndarray:
    """Sum over subspaces of ``table[s, code_s]`` for each code row."""
    codes, table = _prep(codes, table)
    fn = pick(_adc_scores_numba, _adc_scores_numpy) if numba is None else (
        _adc_scores_numba if numba else _adc_scores_numpy)
    return fn(codes.reshape(-1, table.shape[0]), table)


def code_distances(codes: np.ndarray, centers: np.ndarray, tables: np.ndarray, *,
                   numba: bool | None = None) -> np.ndarray:
    """(M, K) symmetric code-to-code distances through per-subspace tables."""
    codes, tables = _prep(codes, tables)
    centers = np.ascontiguousarray(centers, dtype=np.int64)
    fn = pick(_code_distances_numba, _code_distances_numpy) if numba is None else (
        _code_distances_numba if numba else _code_distances_numpy)
    return fn(codes, centers, tables)


def nearest_centers(codes, centers, tables, *, numba: bool | None = None):
    """Index (lowest on ties) and distance of the closest center per code row."""
    codes, tables = _prep(codes, tables)
    centers = np.ascontiguousarray(centers, dtype=np.int64)
    fn = pick(_nearest_numba, _nearest_numpy) if numba is None else (
        _nearest_numba if numba else _nearest_numpy)
    return fn(codes, centers, tables)


def vote(codes, labels, n_clusters: int, tables, *, numba: bool | None = None):
    """Per-cluster code histograms and the summed table cost of every candidate code.

    ``cost[k, s, j] = sum over members of tables[s, member_s, j]``.
    """
    codes, tables = _prep(codes, tables)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    fn = pick(_vote_numba, _vote_numpy) if numba is None else (_vote_numba if numba else _vote_numpy)
    return fn(codes, labels, int(n_clusters), tables)
