"""Slot-exact plaintext simulator.

Ciphertexts carry their slot vectors in the clear. Every operation is the
corresponding float64 numpy operation, so decrypting gives exactly what the
same sequence of operations would give on plaintext vectors. The depth
budget and rotation-key set are enforced like a real scheme, and every
ciphertext is billed at the configured byte size for traffic accounting.
There is no security here, by construction.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .base import (
    Ciphertext,
    DepthExhaustedError,
    Evaluator,
    KeyHandle,
    OpCounters,
    Packing,
    RotationKeyError,
    SchemeParams,
    SecretContext,
    UnknownKeyError,
)

BACKEND = "sim"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class SimulatorEvaluator(Evaluator):
    backend = BACKEND

    def __init__(self, params: SchemeParams, key_id: str, rotation_steps=None, counters=None):
        self.params = params
        self.key_id = key_id
        self.rotation_steps = None if rotation_steps is None else frozenset(int(k) for k in rotation_steps)
        self.counters = counters if counters is not None else OpCounters()

    def _make(self, values, depth, tag, op) -> Ciphertext:
        ct = Ciphertext(self.backend_id, self.n_slots, depth, tag, _frozen(values))
        self.counters.record(op, self.params.ciphertext_bytes)
        return ct

    def add(self, a, b):
        self.check(a, b)
        return self._make(a.payload + b.payload, min(a.depth, b.depth), a.tag, "add")

    def sub(self, a, b):
        self.check(a, b)
        return self._make(a.payload - b.payload, min(a.depth, b.depth), a.tag, "sub")

    def mul(self, a, b):
        self.check(a, b)
        if a.depth < 1 or b.depth < 1:
            raise DepthExhaustedError(f"multiply needs depth >= 1 (have {a.depth}, {b.depth})")
        return self._make(a.payload * b.payload, min(a.depth, b.depth) - 1, a.tag, "mul")

    def mul_plain(self, a, v):
        self.check(a)
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_slots,):
            raise ValueError(f"plaintext must have {self.n_slots} slots")
        if a.depth < 1:
            raise DepthExhaustedError("multiply needs depth >= 1")
        return self._make(a.payload * v, a.depth - 1, a.tag, "mul_plain")

    def rotate(self, a, k):
        self.check(a)
        k = int(k)
        self._check_rotation(k)
        if k and self.rotation_steps is not None and k not in self.rotation_steps:
            raise RotationKeyError(f"no rotation key for step {k}")
        p = a.payload
        return self._make(np.concatenate((p[k:], p[:k])), a.depth, a.tag, "rotate")

    def size_bytes(self, a):
        return self.params.ciphertext_bytes

    def serialize(self, a):
        self.check(a)
        return struct.pack("<BB", int(a.tag), a.depth) + a.payload.astype("<f8").tobytes()

    def deserialize(self, payload):
        if len(payload) != 2 + 8 * self.n_slots:
            raise ValueError(f"simulator payload must be {2 + 8 * self.n_slots} bytes, got {len(payload)}")
        tag, depth = struct.unpack_from("<BB", payload, 0)
        values = np.frombuffer(payload, dtype="<f8", offset=2).astype(np.float64)
        return Ciphertext(self.backend_id, self.n_slots, depth, Packing(tag), _frozen(values))

    def export_public(self):
        doc = {
            "backend": BACKEND,
            "key_id": self.key_id,
            "params": [self.params.ring_dimension, self.params.mult_depth,
                       self.params.ciphertext_bytes, self.params.security_label],
            "rotation_steps": None if self.rotation_steps is None else sorted(self.rotation_steps),
        }
        return json.dumps(doc).encode()

    @classmethod
    def from_public(cls, blob: bytes) -> "SimulatorEvaluator":
        doc = json.loads(blob.decode())
        if doc.get("backend") != BACKEND:
            raise ValueError("not a simulator key blob")
        return cls(SchemeParams(*doc["params"]), doc["key_id"], doc["rotation_steps"])


class SimulatorContext(SecretContext):
    backend = BACKEND

    def __init__(self, params: SchemeParams, seed: int = 0, rotation_steps=None):
        self.params = params
        self.rotation_steps = rotation_steps
        self._key = KeyHandle(hashlib.sha256(f"sim-{seed}".encode()).hexdigest()[:16])
        self.counters = OpCounters()

    @property
    def key(self):
        return self._key

    @property
    def backend_id(self):
        return f"{BACKEND}/{self._key.key_id}"

    def encrypt(self, v, tag=Packing.RAW, key=None):
        self._check_key(key)
        arr = self._slot_vector(v)
        self.counters.record("encrypt", self.params.ciphertext_bytes)
        return Ciphertext(self.backend_id, self.n_slots, self.params.mult_depth, Packing(tag), _frozen(arr.copy()))

    def decrypt(self, ct):
        if ct.backend_id != self.backend_id:
            raise UnknownKeyError(f"ciphertext is under {ct.backend_id}, not {self.backend_id}")
        self.counters.record("decrypt")
        return np.array(ct.payload, dtype=np.float64)

    def evaluator(self):
        return SimulatorEvaluator(self.params, self._key.key_id, self.rotation_steps)
