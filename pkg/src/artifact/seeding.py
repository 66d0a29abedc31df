"""Named random streams.

Every stochastic choice draws from its own generator keyed by (seed, purpose,
...), so the encrypted pipeline and the plaintext reference pick the same
samples and initial centers without sharing any state.
"""

import numpy as np

SAMPLES = 0
KMEANS_INIT = 1
PQKMEANS_INIT = 2
KEYS = 3
DATA = 4


def stream(seed: int, purpose: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), purpose, *map(int, extra)])


def training_sample(seed: int, n_train: int, n_rs: int) -> np.ndarray:
    if n_rs > n_train:
        raise ValueError(f"cannot sample {n_rs} rows from {n_train}")
    return np.sort(stream(seed, SAMPLES).choice(n_train, n_rs, replace=False))


def kmeans_init(seed: int, subspace: int, n_rs: int, n_c: int) -> np.ndarray:
    if n_rs < n_c:
        raise ValueError(f"need at least N_C={n_c} samples, have {n_rs}")
    return stream(seed, KMEANS_INIT, subspace).choice(n_rs, n_c, replace=False)


def pqkmeans_init(seed: int, n_b: int, n_i: int) -> np.ndarray:
    if n_i > n_b:
        raise ValueError(f"N_I={n_i} exceeds database size {n_b}")
    return stream(seed, PQKMEANS_INIT).choice(n_b, n_i, replace=False)
