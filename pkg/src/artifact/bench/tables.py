"""Published parameter tables used as fixed reference values."""

from __future__ import annotations

from dataclasses import dataclass

from ..he.base import MIB
from ..packing import layout_counts
from ..secdist import rotation_count

RING_DIMENSION = 16384


@dataclass(frozen=True)
class LayoutRow:
    dataset: str
    d: int
    n_s: int
    n_c: int
    d_prime: int
    n_wop: int
    n_rot: int
    profile: str
    # per-query ciphertext traffic in MiB as published
    query_mib: float


TABLE4 = (
    LayoutRow("SIFT", 128, 8, 256, 128, 4, 4, "sift", 6.0),
    LayoutRow("SIFT", 128, 64, 32, 128, 1, 1, "sift", 1.5),
    LayoutRow("GIST", 960, 80, 16, 960, 2, 4, "gist", 2.0),
    LayoutRow("GIST", 960, 320, 8, 960, 1, 2, "gist", 1.0),
    LayoutRow("GloVe-25d", 25, 12, 192, 36, 1, 2, "glove", 1.0),
    LayoutRow("GloVe-25d", 25, 25, 256, 25, 1, 0, "glove", 1.0),
    LayoutRow("GloVe-50d", 50, 5, 128, 50, 1, 4, "glove", 1.0),
    LayoutRow("GloVe-50d", 50, 25, 128, 50, 1, 1, "glove", 1.0),
    LayoutRow("GloVe-100d", 100, 10, 64, 100, 1, 4, "glove", 1.0),
    LayoutRow("GloVe-100d", 100, 50, 64, 100, 1, 1, "glove", 1.0),
    LayoutRow("GloVe-200d", 200, 50, 32, 200, 1, 2, "glove", 1.0),
    LayoutRow("GloVe-200d", 200, 100, 32, 200, 1, 1, "glove", 1.0),
)

# subspace sweep on 200-d data with 32 centroids per subspace
ABLATION_D = 200
ABLATION_N_C = 32
ABLATION_N_S = (2, 5, 10, 20, 25, 50, 100)
ABLATION_N_ROT = (8, 6, 5, 4, 3, 2, 1)


@dataclass(frozen=True)
class LayoutDiff:
    row: LayoutRow
    d_prime: int
    n_wop: int
    n_rot: int

    @property
    def ok(self) -> bool:
        r = self.row
        return (self.d_prime, self.n_wop, self.n_rot) == (r.d_prime, r.n_wop, r.n_rot)

    def line(self) -> str:
        r = self.row
        return (f"{'ok  ' if self.ok else 'DIFF'} {r.dataset:<11} n_s={r.n_s:<4} N_C={r.n_c:<4} "
                f"d'={self.d_prime:<4} N_WOP={self.n_wop} n_rot={self.n_rot}"
                + ("" if self.ok else f"  (published d'={r.d_prime} N_WOP={r.n_wop} n_rot={r.n_rot})"))


def table4(ring_dimension: int = RING_DIMENSION) -> list[LayoutDiff]:
    out = []
    for row in TABLE4:
        lay = layout_counts(ring_dimension, row.d, row.n_s, row.n_c)
        out.append(LayoutDiff(row, lay.d_prime, lay.n_wop, rotation_count(lay.d_s)))
    return out


def per_query_mib(n_wop: int, ciphertext_bytes: int) -> float:
    return 2 * n_wop * ciphertext_bytes / MIB

