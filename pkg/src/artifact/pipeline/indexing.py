"""IVF construction over PQ codes: inter-code tables, PQk-means, n_nb-way registration."""

from __future__ import annotations

import numpy as np

from .. import kernels, packing, secdist, seeding
from ..he.base import Ciphertext, Evaluator, SecretContext
from ..packing import PQLayout
from .types import EncodedDatabase, InterCodeTables, IVFIndex


def server_code_distances(ev: Evaluator, wop: list, wrp_by_code: list, d_s: int, metric: str) -> list:
    """N_C x N_WOP ciphertexts: code-major, each WRP code row against the WOP codebook."""
    kernel = secdist.distance_kernel(metric)
    return [kernel(ev, op, rp, d_s) for rps in wrp_by_code for op, rp in zip(wop, rps)]


def decrypt_inter_code(ctx: SecretContext, cts: list[Ciphertext], layout: PQLayout) -> np.ndarray:
    """Client: code-major reduced ciphertexts -> (n_s, N_C, N_C) tables."""
    n_wop = layout.n_wop
    out = np.empty((layout.n_s, layout.n_c, layout.n_c))
    for j in range(layout.n_c):
        vecs = np.stack([ctx.decrypt(c) for c in cts[j * n_wop:(j + 1) * n_wop]])
        out[:, :, j] = packing.block_table(vecs, layout)
    return out


def pqkmeans(encoded: EncodedDatabase, tables: InterCodeTables, n_i: int, iters: int = 20, seed: int = 0):
    """k-means whose points and centers are PQ codes.

    Assignment uses the summed table cost; each center coordinate is then
    the code minimising the summed cost to its members (histogram vote).
    An empty cluster keeps its previous center. Returns (centers, labels).
    """
    codes = encoded.codes
    if n_i > len(codes):
        raise ValueError(f"N_I={n_i} exceeds database size {len(codes)}")
    cost = tables.cost
    centers = codes[seeding.pqkmeans_init(seed, len(codes), n_i)].copy()
    labels = None
    for _ in range(iters):
        new_labels, _ = kernels.nearest_centers(codes, centers, cost)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        hist, votes = kernels.vote(codes, labels, n_i, cost)
        occupied = hist[:, 0, :].sum(axis=1) > 0
        centers[occupied] = np.argmin(votes[occupied], axis=2)
    labels, _ = kernels.nearest_centers(codes, centers, cost)
    return centers, labels


def nearest_k(codes: np.ndarray, centers: np.ndarray, cost: np.ndarray, k: int, chunk: int = 8192) -> np.ndarray:
    """(N, k) center ids sorted by cost, lowest index first on ties."""
    out = np.empty((len(codes), k), dtype=np.int64)
    for lo in range(0, len(codes), chunk):
        dist = kernels.code_distances(codes[lo:lo + chunk], centers, cost)
        out[lo:lo + chunk] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return out


def build_ivf(encoded: EncodedDatabase, centers: np.ndarray, tables: InterCodeTables, n_nb: int) -> IVFIndex:
    if not 1 <= n_nb <= len(centers):
        raise ValueError(f"need 1 <= n_nb <= N_I, got n_nb={n_nb}, N_I={len(centers)}")
    assignments = nearest_k(encoded.codes, np.asarray(centers, dtype=np.int64), tables.cost, n_nb)
    return IVFIndex(centers, assignments, n_nb)
