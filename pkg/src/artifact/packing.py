"""Subspace division and the four slot layouts.

Order packing (OP) lays distinct blocks back to back; repeated packing (RP)
repeats one block as many times as the matching OP vector holds blocks.
The subdimension-wise variants (SDOP, SDRP) hold one subspace at a time and
are used only while training the codebook. The whole variants (WOP, WRP)
hold every subspace, subspace-major, and are aligned block for block so a
single slot-wise subtraction pairs each code with the matching sub-vector.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class PQLayout:
    ring_dimension: int
    d: int
    n_s: int
    n_c: int
    n_rs: int
    d_s: int
    d_prime: int
    n_pd: int
    n_sdop: int
    n_sdrp: int
    n_wop: int
    n_wrp: int

    @property
    def n_slots(self) -> int:
        return self.ring_dimension // 2

    @property
    def n_blocks(self) -> int:
        """Occupied (code, subspace) blocks across all WOP vectors."""
        return self.n_s * self.n_c

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "PQLayout":
        return layout_counts(doc["ring_dimension"], doc["d"], doc["n_s"], doc["n_c"], doc["n_rs"])


def layout_counts(ring_dimension: int, d: int, n_s: int, n_c: int, n_rs: int = 1000) -> PQLayout:
    if not 1 <= n_s <= d:
        raise ValueError(f"need 1 <= n_s <= d, got n_s={n_s}, d={d}")
    if n_c < 1:
        raise ValueError("codebook size must be >= 1")
    if n_rs < 0:
        raise ValueError("sample count must be >= 0")
    n_p = ring_dimension // 2
    d_s = -(-d // n_s)
    if d_s > n_p:
        raise ValueError(f"sub-dimension {d_s} does not fit in {n_p} slots")
    # floor: the ceiling form would overfill the slots whenever d_s does not divide n_p
    n_pd = n_p // d_s
    n_wop = -(-n_s * n_c // n_pd)
    return PQLayout(
        ring_dimension=ring_dimension, d=d, n_s=n_s, n_c=n_c, n_rs=n_rs,
        d_s=d_s, d_prime=n_s * d_s, n_pd=n_pd,
        n_sdop=-(-n_rs // n_pd), n_sdrp=n_c, n_wop=n_wop, n_wrp=n_c * n_wop,
    )


def block_lengths(d: int, n_s: int) -> np.ndarray:
    """Real (unpadded) length of each block.

    Short blocks come first and the longer ones at the tail. When d mod n_s
    is 0 or 1 this is exactly "floor(d/n_s) each, remainder in the last
    block"; for larger remainders the extra elements are spread over the
    last d mod n_s blocks so no block exceeds ceil(d/n_s).
    """
    base, extra = divmod(d, n_s)
    lengths = np.full(n_s, base, dtype=np.int64)
    if extra:
        lengths[n_s - extra:] += 1
    return lengths


def _gather_index(layout: PQLayout) -> np.ndarray:
    """(n_s, d_s) source positions into x, or d (the zero pad) for fill slots."""
    lengths = block_lengths(layout.d, layout.n_s)
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    cols = np.arange(layout.d_s)
    idx = starts[:, None] + cols[None, :]
    return np.where(cols[None, :] < lengths[:, None], idx, layout.d)


def subdivide(x: np.ndarray, layout: PQLayout) -> np.ndarray:
    """Split vectors into zero-filled blocks.

    ``x`` is (d,) or (N, d); the result is (n_s, d_s) or (N, n_s, d_s).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layout.d:
        raise ValueError(f"expected dimension {layout.d}, got {x.shape[-1]}")
    padded = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
    return padded[..., _gather_index(layout)]


def merge(blocks: np.ndarray, layout: PQLayout) -> np.ndarray:
    """Inverse of :func:`subdivide` (drops the fill)."""
    blocks = np.asarray(blocks, dtype=np.float64)
    idx = _gather_index(layout)
    keep = idx < layout.d
    out = np.zeros(blocks.shape[:-2] + (layout.d,))
    out[..., idx[keep]] = blocks[..., keep]
    return out


def _chunk(flat_blocks: np.ndarray, layout: PQLayout, n_vectors: int) -> np.ndarray:
    """Lay (n, d_s) blocks into ``n_vectors`` slot vectors of n_pd blocks each."""
    n_p, per = layout.n_slots, layout.n_pd * layout.d_s
    out = np.zeros((n_vectors, n_p))
    flat = flat_blocks.reshape(-1)
    for i in range(n_vectors):
        part = flat[i * per:(i + 1) * per]
        out[i, :part.size] = part
    return out


def pack_sdop(points: np.ndarray, layout: PQLayout) -> np.ndarray:
    """(N, d_s) blocks -> ceil(N / n_pd) order-packed slot vectors."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, layout.d_s)
    return _chunk(points, layout, -(-len(points) // layout.n_pd))


def pack_sdrp(code: np.ndarray, layout: PQLayout) -> np.ndarray:
    """One d_s block repeated n_pd times."""
    code = np.asarray(code, dtype=np.float64).reshape(layout.d_s)
    return _chunk(np.tile(code, layout.n_pd), layout, 1)[0]


def pack_wop(codebook: np.ndarray, layout: PQLayout) -> np.ndarray:
    """(n_s, N_C, d_s) codebook -> N_WOP subspace-major slot vectors."""
    codebook = np.asarray(codebook, dtype=np.float64)
    if codebook.shape != (layout.n_s, layout.n_c, layout.d_s):
        raise ValueError(f"codebook shape {codebook.shape} != {(layout.n_s, layout.n_c, layout.d_s)}")
    return _chunk(codebook, layout, layout.n_wop)


def pack_wrp(blocks: np.ndarray, layout: PQLayout) -> np.ndarray:
    """(n_s, d_s) subdivided vector -> N_WOP vectors aligned with :func:`pack_wop`."""
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.shape != (layout.n_s, layout.d_s):
        raise ValueError(f"blocks shape {blocks.shape} != {(layout.n_s, layout.d_s)}")
    repeated = np.broadcast_to(blocks[:, None, :], (layout.n_s, layout.n_c, layout.d_s))
    return _chunk(repeated, layout, layout.n_wop)


def pack_codebook_wrp(codebook: np.ndarray, layout: PQLayout) -> np.ndarray:
    """WRP vectors of every code row: (N_C, N_WOP, n_p), N_WRP vectors in total."""
    codebook = np.asarray(codebook, dtype=np.float64)
    return np.stack([pack_wrp(codebook[:, j, :], layout) for j in range(layout.n_c)])


def extract_block_values(v: np.ndarray, layout: PQLayout, n_blocks: int | None = None) -> np.ndarray:
    """Read block-start slots; every other slot is cross-block garbage."""
    v = np.asarray(v)
    cap = layout.n_pd if n_blocks is None else min(n_blocks, layout.n_pd)
    return v[..., 0:cap * layout.d_s:layout.d_s]


def unpack_op(vectors: np.ndarray, layout: PQLayout, n_blocks: int) -> np.ndarray:
    """Order-packed vectors -> (n_blocks, d_s)."""
    vectors = np.asarray(vectors).reshape(-1, layout.n_slots)
    per = layout.n_pd * layout.d_s
    flat = vectors[:, :per].reshape(-1)
    return flat[:n_blocks * layout.d_s].reshape(n_blocks, layout.d_s)


def unpack_wop(vectors: np.ndarray, layout: PQLayout) -> np.ndarray:
    return unpack_op(vectors, layout, layout.n_blocks).reshape(layout.n_s, layout.n_c, layout.d_s)


def block_table(vectors: np.ndarray, layout: PQLayout) -> np.ndarray:
    """Block-start values of N_WOP reduced vectors -> (n_s, N_C) table."""
    vals = extract_block_values(np.asarray(vectors).reshape(-1, layout.n_slots), layout)
    return vals.reshape(-1)[:layout.n_blocks].reshape(layout.n_s, layout.n_c)


def wop_block_slot(layout: PQLayout, code: int, subspace: int) -> tuple[int, int]:
    """(vector index, first slot) of block (code, subspace) in WOP/WRP order."""
    b = subspace * layout.n_c + code
    return b // layout.n_pd, (b % layout.n_pd) * layout.d_s


def approx_wop_bound(layout: PQLayout) -> int:
    """Closed-form approximation ceil(2 d' N_C / N_r) + 1 used as a sanity bound."""
    return math.ceil(2 * layout.d_prime * layout.n_c / layout.ring_dimension) + 1
