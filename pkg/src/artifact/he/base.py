"""Backend-neutral slotted homomorphic vector interface.

Two roles, two types. A :class:`SecretContext` lives with the data owner:
it holds the secret key and can encrypt and decrypt. An :class:`Evaluator`
is what the server gets: slot-wise add/sub/mul, rotations, byte sizes and
(de)serialisation. Evaluators have no decrypt method and hold no secret
material, which is how the server role is kept blind.
"""

from __future__ import annotations

import enum
import struct
import threading
from abc import ABC, abstractmethod
from functools import cached_property
from dataclasses import dataclass, field
from typing import Any

import numpy as np

KIB = 1024
MIB = 1024 * KIB


class HEError(Exception):
    pass


class DepthExhaustedError(HEError):
    """Multiplication requested with no multiplicative depth left."""


class BackendMismatchError(HEError):
    pass


class RotationKeyError(HEError):
    pass


class UnknownKeyError(HEError):
    pass


class Packing(enum.IntEnum):
    RAW = 0
    SDOP = 1
    SDRP = 2
    WOP = 3
    WRP = 4


@dataclass(frozen=True)
class SchemeParams:
    ring_dimension: int
    mult_depth: int
    ciphertext_bytes: int
    security_label: str = ""

    def __post_init__(self):
        n = self.ring_dimension
        if n < 2 or n & (n - 1):
            raise ValueError(f"ring dimension must be a power of two, got {n}")
        if self.mult_depth not in (1, 2):
            raise ValueError(f"mult_depth must be 1 or 2, got {self.mult_depth}")
        if self.ciphertext_bytes <= 0:
            raise ValueError("ciphertext_bytes must be positive")

    @property
    def n_slots(self) -> int:
        return self.ring_dimension // 2


# CKKS parameter sets of the reference deployment (OpenFHE, 192-bit keys).
PROFILES = {
    "sift": SchemeParams(16384, 2, 768 * KIB, "192bit"),
    "gist": SchemeParams(16384, 1, 512 * KIB, "192bit"),
    "glove": SchemeParams(16384, 1, 512 * KIB, "192bit"),
}


def profile(name: str) -> SchemeParams:
    try:
        return PROFILES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; known: {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class KeyHandle:
    key_id: str


@dataclass(frozen=True, eq=False)
class Ciphertext:
    """Immutable handle; ``payload`` is owned by the backend that made it."""

    backend_id: str
    n_slots: int
    depth: int
    tag: Packing
    payload: Any

    def retag(self, tag: Packing) -> "Ciphertext":
        return Ciphertext(self.backend_id, self.n_slots, self.depth, Packing(tag), self.payload)


_COUNTER_FIELDS = ("n_add", "n_mul", "n_rotate", "n_encrypt", "n_decrypt")
_OP_FIELD = {"add": "n_add", "sub": "n_add", "mul": "n_mul", "mul_plain": "n_mul",
             "rotate": "n_rotate", "encrypt": "n_encrypt", "decrypt": "n_decrypt"}


@dataclass
class OpCounters:
    n_add: int = 0
    n_mul: int = 0
    n_rotate: int = 0
    n_encrypt: int = 0
    n_decrypt: int = 0
    bytes_produced: int = 0
    log: list | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, op: str, nbytes: int = 0) -> None:
        name = _OP_FIELD[op]
        with self._lock:
            setattr(self, name, getattr(self, name) + 1)
            self.bytes_produced += nbytes
            if self.log is not None:
                self.log.append((op, nbytes))

    @classmethod
    def replay(cls, log) -> "OpCounters":
        c = cls()
        for op, nbytes in log:
            c.record(op, nbytes)
        return c

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _COUNTER_FIELDS}
        d["bytes_produced"] = self.bytes_produced
        return d

    def same_counts(self, other: "OpCounters") -> bool:
        return self.as_dict() == other.as_dict()


class Evaluator(ABC):
    """Server-side view of a scheme instance: no secret key, no decrypt."""

    backend: str
    params: SchemeParams
    counters: OpCounters

    @property
    def n_slots(self) -> int:
        return self.params.n_slots

    @cached_property
    def backend_id(self) -> str:
        return f"{self.backend}/{self.key_id}"

    key_id: str

    def check(self, *cts: Ciphertext) -> None:
        for ct in cts:
            if ct.backend_id != self.backend_id:
                raise BackendMismatchError(f"ciphertext from {ct.backend_id}, evaluator is {self.backend_id}")
            if ct.n_slots != self.n_slots:
                raise BackendMismatchError(f"slot count {ct.n_slots} != {self.n_slots}")

    @abstractmethod
    def add(self, a: Ciphertext, b: Ciphertext) -> Ciphertext: ...

    @abstractmethod
    def sub(self, a: Ciphertext, b: Ciphertext) -> Ciphertext: ...

    @abstractmethod
    def mul(self, a: Ciphertext, b: Ciphertext) -> Ciphertext: ...

    @abstractmethod
    def mul_plain(self, a: Ciphertext, v: np.ndarray) -> Ciphertext:
        """Slot-wise product with a public vector; costs one level like ``mul``."""

    @abstractmethod
    def rotate(self, a: Ciphertext, k: int) -> Ciphertext:
        """Left rotation: slot j of the result is slot (j + k) mod n_p of ``a``."""

    @abstractmethod
    def size_bytes(self, a: Ciphertext) -> int: ...

    @abstractmethod
    def serialize(self, a: Ciphertext) -> bytes:
        """Ciphertext payload bytes (without the length prefix)."""

    @abstractmethod
    def deserialize(self, payload: bytes) -> Ciphertext: ...

    @abstractmethod
    def export_public(self) -> bytes:
        """Everything the server needs to rebuild this evaluator."""

    def _check_rotation(self, k: int) -> None:
        if not 0 <= k < self.n_slots:
            raise ValueError(f"rotation amount {k} outside [0, {self.n_slots})")


class SecretContext(ABC):
    """Data-owner side: holds the secret key."""

    backend: str
    params: SchemeParams
    counters: OpCounters

    @property
    def n_slots(self) -> int:
        return self.params.n_slots

    @property
    @abstractmethod
    def key(self) -> KeyHandle: ...

    @abstractmethod
    def encrypt(self, v, tag: Packing = Packing.RAW, key: KeyHandle | None = None) -> Ciphertext: ...

    @abstractmethod
    def decrypt(self, ct: Ciphertext) -> np.ndarray: ...

    @abstractmethod
    def evaluator(self) -> Evaluator:
        """A fresh public evaluator bound to this key (with its own counters)."""

    def _slot_vector(self, v) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != self.n_slots:
            raise ValueError(f"slot vector must have length {self.n_slots}, got shape {arr.shape}")
        return arr

    def _check_key(self, key: KeyHandle | None) -> None:
        if key is not None and key != self.key:
            raise UnknownKeyError(f"unknown key {key.key_id!r}")


def frame(payload: bytes) -> bytes:
    """4-byte little-endian length prefix + payload."""
    return struct.pack("<I", len(payload)) + payload


def unframe(buf: bytes, offset: int = 0) -> tuple[bytes, int]:
    if len(buf) - offset < 4:
        raise ValueError("truncated frame header")
    (n,) = struct.unpack_from("<I", buf, offset)
    start = offset + 4
    if len(buf) - start < n:
        raise ValueError("truncated frame payload")
    return bytes(buf[start:start + n]), start + n
