"""Database encoding: WRP datum against WOP codebook, one distance table per datum."""

from __future__ import annotations

import numpy as np

from .. import metric as metric_mod
from .. import packing, secdist
from ..he.base import Ciphertext, Evaluator, Packing, SecretContext
from ..packing import PQLayout
from .types import Codebook, EncodedDatabase


def encrypt_wrp(ctx: SecretContext, x: np.ndarray, layout: PQLayout) -> list:
    """Client: subdivide one vector and encrypt it as N_WOP WRP ciphertexts."""
    return [ctx.encrypt(v, Packing.WRP) for v in packing.pack_wrp(packing.subdivide(x, layout), layout)]


def server_table_distances(ev: Evaluator, wrp: list, wop: list, d_s: int, metric: str) -> list:
    """N_WOP distance ciphertexts between one WRP vector set and the WOP codebook."""
    kernel = secdist.distance_kernel(metric)
    return [kernel(ev, op, rp, d_s) for op, rp in zip(wop, wrp)]


def decrypt_table(ctx: SecretContext, cts: list[Ciphertext], layout: PQLayout) -> np.ndarray:
    """Client: N_WOP reduced ciphertexts -> strided (n_s, N_C) table."""
    return packing.block_table(np.stack([ctx.decrypt(c) for c in cts]), layout)


def assign_code(table: np.ndarray, metric: str) -> np.ndarray:
    """Best code per subspace (argmin distance / argmax inner product)."""
    return metric_mod.best(table, metric, axis=-1)


def reconstruct(codes: np.ndarray, codebook: Codebook, layout: PQLayout) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    blocks = codebook.centroids[np.arange(layout.n_s), codes]  # (..., n_s, d_s)
    return packing.merge(blocks, layout)


def mse(encoded: EncodedDatabase, codebook: Codebook, originals: np.ndarray, layout: PQLayout,
        per_dimension: bool = False) -> float:
    """Mean over data of the squared reconstruction error ||x_hat - x||^2.

    ``per_dimension`` divides by d as well.
    """
    if len(encoded) == 0:
        return 0.0
    err = reconstruct(encoded.codes, codebook, layout) - np.asarray(originals, dtype=np.float64)
    per_vector = np.einsum("ij,ij->i", err, err)
    value = float(per_vector.mean())
    return value / layout.d if per_dimension else value
