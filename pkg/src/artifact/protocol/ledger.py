"""Per-step traffic accounting and the closed-form traffic checks.

``ciphertext_bytes`` uses the evaluator's ``size_bytes`` (the configured B_C
on the simulator, the real serialised length on toy CKKS). Plaintext
replies and key material are tracked separately and never count towards
ciphertext traffic.
"""

from __future__ import annotations

import threading
from dataclasses import asdict, dataclass

from ..packing import PQLayout


@dataclass
class StepTraffic:
    messages: int = 0
    ciphertexts_sent: int = 0
    ciphertexts_received: int = 0
    ciphertext_bytes: int = 0
    plaintext_bytes: int = 0
    key_bytes: int = 0
    wire_bytes: int = 0

    @property
    def ciphertexts(self) -> int:
        return self.ciphertexts_sent + self.ciphertexts_received


class TrafficLedger:
    def __init__(self):
        self._steps: dict[str, StepTraffic] = {}
        self._lock = threading.Lock()

    def record(self, bucket: str, *, sent: bool, n_ciphertexts: int, ciphertext_bytes: int,
               plaintext_bytes: int, key_bytes: int, wire_bytes: int) -> None:
        with self._lock:
            t = self._steps.setdefault(bucket, StepTraffic())
            t.messages += 1
            if sent:
                t.ciphertexts_sent += n_ciphertexts
            else:
                t.ciphertexts_received += n_ciphertexts
            t.ciphertext_bytes += ciphertext_bytes
            t.plaintext_bytes += plaintext_bytes
            t.key_bytes += key_bytes
            t.wire_bytes += wire_bytes

    def __getitem__(self, bucket: str) -> StepTraffic:
        with self._lock:
            return StepTraffic(**asdict(self._steps.get(bucket, StepTraffic())))

    def buckets(self) -> list[str]:
        with self._lock:
            return sorted(self._steps)

    def as_dict(self) -> dict:
        with self._lock:
            return {k: asdict(v) for k, v in sorted(self._steps.items())}

    def ciphertext_bytes(self, *buckets: str) -> int:
        return sum(self[b].ciphertext_bytes for b in buckets)

    def ciphertext_count(self, *buckets: str) -> int:
        return sum(self[b].ciphertexts for b in buckets)

    def same_traffic(self, other: "TrafficLedger") -> bool:
        """Counts and byte totals equal, ignoring which side sent what."""
        def norm(d):
            return {k: (v["messages"], v["ciphertexts_sent"] + v["ciphertexts_received"], v["ciphertext_bytes"],
                        v["plaintext_bytes"], v["key_bytes"], v["wire_bytes"]) for k, v in d.items()}
        return norm(self.as_dict()) == norm(other.as_dict())


# Buckets that make up each closed-form row.
CODEBOOK = ("KMeansDistances",)
ENCODING = ("EncodeCiphertexts", "EncodeDistances")
# WRP codebook upload (the N_C * N_WOP operand ciphertexts) plus the distance ciphertexts
INDEXING = ("ConvertReply.wrp", "IndexDistances")
SEARCH = ("QueryCiphertexts", "QueryDistances")


@dataclass
class TrafficCheck:
    name: str
    measured_ciphertexts: int
    expected_ciphertexts: int
    measured_bytes: int
    # None when ciphertext sizes vary (real backends): counts only
    expected_bytes: int | None
    upper_bound: bool = False

    @property
    def ok(self) -> bool:
        cmp = (lambda a, b: a <= b) if self.upper_bound else (lambda a, b: a == b)
        if not cmp(self.measured_ciphertexts, self.expected_ciphertexts):
            return False
        return self.expected_bytes is None or cmp(self.measured_bytes, self.expected_bytes)

    def line(self) -> str:
        rel = "<=" if self.upper_bound else "=="
        expected = f"{self.expected_ciphertexts} ct"
        if self.expected_bytes is not None:
            expected += f" / {self.expected_bytes} B"
        return (f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.measured_ciphertexts} ct / "
                f"{self.measured_bytes} B {rel} {expected}")


def assert_traffic(ledger: TrafficLedger, layout: PQLayout, ciphertext_bytes: int | None, *, n_data: int = 0,
                   n_queries: int = 0, n_k: int = 0, indexed: bool = False) -> list[TrafficCheck]:
    """Measured ciphertext traffic against the closed forms.

    Codebook generation is an upper bound (training can stop early); the
    other rows are exact. ``ciphertext_bytes`` is B_C; pass None to check
    counts only, for backends whose ciphertext size depends on the level.
    """
    def nbytes(count):
        return None if ciphertext_bytes is None else count * ciphertext_bytes

    L = layout
    checks = []
    if n_k:
        bound = L.n_s * n_k * L.n_sdop * L.n_sdrp
        checks.append(TrafficCheck("codebook generation", ledger.ciphertext_count(*CODEBOOK), bound,
                                   ledger.ciphertext_bytes(*CODEBOOK), nbytes(bound), upper_bound=True))
    checks.append(TrafficCheck("database encoding", ledger.ciphertext_count(*ENCODING), 2 * L.n_wop * n_data,
                               ledger.ciphertext_bytes(*ENCODING), nbytes(2 * L.n_wop * n_data)))
    if indexed:
        n = 2 * L.n_c * L.n_wop
        checks.append(TrafficCheck("database indexing", ledger.ciphertext_count(*INDEXING), n,
                                   ledger.ciphertext_bytes(*INDEXING), nbytes(n)))
    checks.append(TrafficCheck("search", ledger.ciphertext_count(*SEARCH), 2 * L.n_wop * n_queries,
                               ledger.ciphertext_bytes(*SEARCH), nbytes(2 * L.n_wop * n_queries)))
    return checks
