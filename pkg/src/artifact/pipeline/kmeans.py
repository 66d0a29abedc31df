"""Secure k-means halves.

The server only ever computes encrypted SDOP x SDRP distances and learns
labels. The client decrypts the distances, assigns labels, recomputes the
centroids in the clear and re-encrypts them as SDRP.
"""

from __future__ import annotations

import numpy as np

from .. import packing, secdist
from ..he.base import Ciphertext, Evaluator, Packing, SecretContext
from ..packing import PQLayout


def server_distances(ev: Evaluator, sdop: list, sdrp: list, d_s: int) -> list:
    """All N_SDOP x N_SDRP squared-distance ciphertexts, SDOP-major."""
    return [secdist.he_sq_euclidean(ev, op, rp, d_s) for op in sdop for rp in sdrp]


def labels_settled(previous: np.ndarray, current: np.ndarray) -> bool:
    return np.array_equal(previous, current)


def encrypt_sdop(ctx: SecretContext, samples: np.ndarray, layout: PQLayout) -> list:
    return [ctx.encrypt(v, Packing.SDOP) for v in packing.pack_sdop(samples, layout)]


def encrypt_sdrp(ctx: SecretContext, centroids: np.ndarray, layout: PQLayout) -> list:
    return [ctx.encrypt(packing.pack_sdrp(c, layout), Packing.SDRP) for c in centroids]


def decrypt_distances(ctx: SecretContext, cts: list[Ciphertext], layout: PQLayout, n_rs: int, n_c: int) -> np.ndarray:
    """SDOP-major distance ciphertexts -> (N_RS, N_C) plaintext matrix."""
    n_sdop = len(cts) // n_c
    out = np.empty((n_sdop * layout.n_pd, n_c))
    for i in range(n_sdop):
        for j in range(n_c):
            vals = packing.extract_block_values(ctx.decrypt(cts[i * n_c + j]), layout)
            out[i * layout.n_pd:(i + 1) * layout.n_pd, j] = vals
    return out[:n_rs]


def assign(dist: np.ndarray) -> np.ndarray:
    return np.argmin(dist, axis=1)


def repair_empty(labels: np.ndarray, dist: np.ndarray, n_c: int) -> np.ndarray:
    """Move the farthest member of the largest cluster into each empty cluster."""
    labels = labels.copy()
    for empty in range(n_c):
        counts = np.bincount(labels, minlength=n_c)
        if counts[empty]:
            continue
        donor = int(np.argmax(counts))
        members = np.flatnonzero(labels == donor)
        far = members[int(np.argmax(dist[members, donor]))]
        labels[far] = empty
    return labels


def update_centroids(samples: np.ndarray, labels: np.ndarray, n_c: int) -> np.ndarray:
    return np.stack([samples[labels == k].mean(axis=0) for k in range(n_c)])


def client_step(dist: np.ndarray, samples: np.ndarray, n_c: int):
    """One client iteration: labels (after empty-cluster repair) and new centroids."""
    labels = repair_empty(assign(dist), dist, n_c)
    return labels, update_centroids(samples, labels, n_c)


def initial_labels(n_rs: int):
    """Alg. 2 start state: previous all 0, current all 1 (so the first check never settles)."""
    return np.zeros(n_rs, dtype=np.int64), np.ones(n_rs, dtype=np.int64)
