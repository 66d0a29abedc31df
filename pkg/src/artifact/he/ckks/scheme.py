"""Toy RLWE CKKS over Z[X]/(X^N + 1).

Good enough for depth-1/2 packed distance kernels at desk scale and nothing
else: parameters are picked for speed and correctness, not security.

Layout of the modulus chain (all primes = 1 mod 2N, below 2**31)::

    base primes  b0, b1      level-0 modulus, ~62 bits, holds value * scale
    rescale primes q1..qL    ~scale each, one dropped per multiply
    special prime P          key switching only

A ciphertext at level l keeps residues for ``base + q1..ql``; its
``depth`` is l. Polynomials are stored in NTT (evaluation) form as int64
arrays of shape ``(2, rows, N)``.

Key switching is the per-prime digit variant with one special prime: digit
i is the residue row mod q_i, the key for digit i carries ``P * s'`` in row
i only, and the result is divided by P at the end.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..base import (
    Ciphertext,
    DepthExhaustedError,
    Evaluator,
    HEError,
    KeyHandle,
    OpCounters,
    Packing,
    RotationKeyError,
    SchemeParams,
    SecretContext,
    UnknownKeyError,
)
from . import ntt
from .encoding import SlotEncoder

BACKEND = "ckks-toy"
_CT_MAGIC = b"C"
_KEY_MAGIC = b"K"


class ScaleOverflowError(HEError, OverflowError):
    """Value * scale would wrap the level-0 modulus."""


@dataclass(frozen=True)
class ToyParams:
    ring_dimension: int = 4096
    mult_depth: int = 1
    scale_bits: int = 30
    error_stddev: float = 3.2
    base_primes: tuple = ()
    rescale_primes: tuple = ()
    special_prime: int = 0

    def __post_init__(self):
        n = self.ring_dimension
        if n < 4 or n & (n - 1):
            raise ValueError(f"ring dimension must be a power of two >= 4, got {n}")
        if self.mult_depth < 1:
            raise ValueError("mult_depth must be >= 1")
        if not self.base_primes:
            base = tuple(ntt.find_primes(n, 31, 2))
            special = ntt.find_primes(n, 31, 1, exclude=base)[0]
            used = set(base) | {special}
            rescale = []
            for _ in range(self.mult_depth):
                q = ntt.find_prime_near(n, 1 << self.scale_bits, exclude=used)
                used.add(q)
                rescale.append(q)
            object.__setattr__(self, "base_primes", base)
            object.__setattr__(self, "rescale_primes", tuple(rescale))
            object.__setattr__(self, "special_prime", special)
        if len(self.rescale_primes) != self.mult_depth:
            raise ValueError("need exactly one rescale prime per multiplicative level")
        if not 1 <= len(self.base_primes) <= 2:
            raise ValueError("base modulus must have one or two primes")
        primes = self.all_primes
        if len(set(primes)) != len(primes):
            raise ValueError("modulus chain primes must be distinct")
        for q in primes:
            if not ntt.ntt_friendly(int(q), n):
                raise ValueError(f"{q} is not an NTT-friendly prime for N={n} (need prime, q = 1 mod {2 * n}, q < 2**31)")
        if self.scale >= self.base_modulus / 4:
            raise ScaleOverflowError("scale leaves no headroom in the base modulus")

    @property
    def scale(self) -> float:
        return float(1 << self.scale_bits)

    @property
    def modulus_chain(self) -> tuple:
        return tuple(self.base_primes) + tuple(self.rescale_primes)

    @property
    def all_primes(self) -> tuple:
        return self.modulus_chain + (self.special_prime,)

    @property
    def base_modulus(self) -> int:
        return math.prod(self.base_primes)

    @property
    def n_slots(self) -> int:
        return self.ring_dimension // 2

    def to_json(self) -> dict:
        return {
            "ring_dimension": self.ring_dimension,
            "mult_depth": self.mult_depth,
            "scale_bits": self.scale_bits,
            "error_stddev": self.error_stddev,
            "base_primes": list(self.base_primes),
            "rescale_primes": list(self.rescale_primes),
            "special_prime": self.special_prime,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ToyParams":
        doc = dict(doc)
        doc["base_primes"] = tuple(doc["base_primes"])
        doc["rescale_primes"] = tuple(doc["rescale_primes"])
        return cls(**doc)

    def scheme_params(self) -> SchemeParams:
        fresh = _payload_size(len(self.modulus_chain), self.ring_dimension)
        return SchemeParams(self.ring_dimension, self.mult_depth, fresh, "toy (NOT secure)")


def _payload_size(rows: int, n: int) -> int:
    # header + two polynomials of uint32 residues
    return _HEADER.size + 2 * rows * n * 4


_HEADER = struct.Struct("<cBBBBdd")  # magic, tag, depth, rows, log2 N, scale, bound


@dataclass(frozen=True, eq=False)
class CkksPayload:
    polys: np.ndarray  # (2, rows, N) int64, NTT form
    scale: float
    bound: float       # upper bound on max |slot|, tracked for overflow checks

    @property
    def rows(self) -> int:
        return self.polys.shape[1]


@dataclass
class _Ring:
    """Per-parameter-set precomputation shared by secret and public sides."""

    params: ToyParams
    tables: ntt.NTTTables = field(init=False)
    moduli: np.ndarray = field(init=False)
    encoder: SlotEncoder = field(init=False)

    def __post_init__(self):
        p = self.params
        self.n = p.ring_dimension
        self.moduli = np.array(p.all_primes, dtype=np.int64)
        self.tables = ntt.NTTTables.build(p.all_primes, self.n)
        self.encoder = SlotEncoder(self.n)
        self.nb = len(p.base_primes)
        self.special_row = len(p.all_primes) - 1
        self._take_cache = {}
        self._auto_cache = {}
        self._perm_cache = {}

    def rows_for_level(self, level: int) -> list:
        return list(range(self.nb + level))

    def take(self, rows) -> ntt.NTTTables:
        key = tuple(rows)
        t = self._take_cache.get(key)
        if t is None:
            t = self._take_cache[key] = self.tables.take(list(key))
        return t

    def fwd(self, a, rows):
        """Forward NTT of a (..., len(rows), N) residue stack."""
        shape = a.shape
        flat = a.reshape(-1, self.n)
        reps = flat.shape[0] // len(rows)
        return ntt.forward(flat, self.take(list(rows) * reps)).reshape(shape)

    def inv(self, a, rows):
        shape = a.shape
        flat = a.reshape(-1, self.n)
        reps = flat.shape[0] // len(rows)
        return ntt.inverse(flat, self.take(list(rows) * reps)).reshape(shape)

    def lift(self, coeffs: np.ndarray, rows) -> np.ndarray:
        """Signed integer coefficients (N,) -> residues (len(rows), N)."""
        return np.mod(coeffs[None, :], self.moduli[rows][:, None])

    def centered(self, residues: np.ndarray, q: int) -> np.ndarray:
        return np.where(residues > q // 2, residues - q, residues)

    def automorphism_map(self, galois: int):
        hit = self._auto_cache.get(galois)
        if hit is None:
            idx = np.arange(self.n, dtype=np.int64) * galois % (2 * self.n)
            neg = idx >= self.n
            hit = self._auto_cache[galois] = (np.where(neg, idx - self.n, idx), neg)
        return hit

    def automorphism(self, a: np.ndarray, rows, galois: int) -> np.ndarray:
        """X -> X^galois on coefficient-form residues (..., len(rows), N)."""
        dest, neg = self.automorphism_map(galois)
        q = self.moduli[rows][:, None]
        vals = np.where(neg, (q - a) % q, a)
        out = np.empty_like(a)
        out[..., dest] = vals
        return out

    def slot_permutation(self, galois: int) -> np.ndarray:
        """Index map applying X -> X^galois directly to NTT-form residues.

        The evaluation points are odd powers of a 2N-th root in bit-reversed
        order for every prime, so one permutation serves all rows.
        """
        hit = self._perm_cache.get(galois)
        if hit is None:
            rev = ntt.bit_reverse(self.n)
            exps = 2 * rev + 1
            where = np.empty(2 * self.n, dtype=np.int64)
            where[exps] = np.arange(self.n)
            hit = self._perm_cache[galois] = where[exps * galois % (2 * self.n)]
        return hit

    def mod_down(self, x: np.ndarray, rows) -> np.ndarray:
        """(..., rows + special, N) NTT form -> divide by P, rows only."""
        p = self.params.special_prime
        sr = [self.special_row]
        tail = self.inv(x[..., -1:, :], sr)
        r = self.centered(tail, p)
        q = self.moduli[rows][:, None]
        r_rows = self.fwd(np.mod(r, q), rows)
        p_inv = np.array([pow(p, -1, int(qi)) for qi in self.moduli[rows]], dtype=np.int64)
        return ntt.sub_mul(x[..., :-1, :], r_rows, p_inv, self.moduli[rows])

    def rescale(self, polys: np.ndarray, rows) -> np.ndarray:
        """Divide by the last prime of ``rows`` and drop it."""
        last = rows[-1]
        keep = rows[:-1]
        ql = int(self.moduli[last])
        tail = self.inv(polys[..., -1:, :], [last])
        r = self.centered(tail, ql)
        q = self.moduli[keep][:, None]
        r_rows = self.fwd(np.mod(r, q), keep)
        ql_inv = np.array([pow(ql, -1, int(qi)) for qi in self.moduli[keep]], dtype=np.int64)
        return ntt.sub_mul(polys[..., :-1, :], r_rows, ql_inv, self.moduli[keep])

    def key_switch(self, d_coeff: np.ndarray, rows, key: np.ndarray) -> np.ndarray:
        """Digit-decompose coefficient-form ``d`` and apply a switching key.

        ``key`` has shape (digits, 2, all_rows, N). Returns (2, rows, N) in
        NTT form encrypting ``d * s'`` under ``s``.
        """
        rows = list(rows)
        ext = rows + [self.special_row]
        q_ext = self.moduli[ext][:, None]
        q_rows = self.moduli[rows][:, None]
        digits = np.where(d_coeff[rows] > q_rows // 2, d_coeff[rows] - q_rows, d_coeff[rows])
        lifted = self.fwd(np.mod(digits[:, None, :], q_ext[None]), ext)
        acc = ntt.dot_digits(lifted, key[rows][:, :, ext, :], self.moduli[ext])
        return self.mod_down(acc, rows)

    def crt_base(self, residues: np.ndarray) -> np.ndarray:
        """Base-prime residues (nb, N) -> centered int64 coefficients."""
        if self.nb == 1:
            q = int(self.moduli[0])
            return self.centered(residues[0], q)
        qa, qb = int(self.moduli[0]), int(self.moduli[1])
        a, b = residues[0], residues[1]
        qa_inv = pow(qa, -1, qb)
        t = (b - a) % qb * qa_inv % qb
        x = a + qa * t
        big = qa * qb
        return np.where(x > big // 2, x - big, x)


def _digest(arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


class CkksEvaluator(Evaluator):
    backend = BACKEND

    def __init__(self, params: ToyParams, key_id: str, relin_key: np.ndarray, galois_keys: dict,
                 ring: _Ring | None = None):
        self.toy = params
        self.params = params.scheme_params()
        self.key_id = key_id
        self.ring = ring if ring is not None else _Ring(params)
        self.relin_key = relin_key
        self.galois_keys = dict(galois_keys)
        self.counters = OpCounters()

    @property
    def rotation_steps(self):
        return frozenset(self.galois_keys)

    def _wrap(self, polys, scale, bound, tag, op) -> Ciphertext:
        level = polys.shape[1] - self.ring.nb
        if bound * scale >= self.toy.base_modulus / 4:
            raise ScaleOverflowError(
                f"slot bound {bound:.3g} at scale {scale:.3g} exceeds the base-modulus headroom")
        ct = Ciphertext(self.backend_id, self.n_slots, level, Packing(tag), CkksPayload(polys, scale, bound))
        self.counters.record(op, _payload_size(polys.shape[1], self.ring.n))
        return ct

    def _align(self, a: Ciphertext, b: Ciphertext, same_scale: bool = True):
        pa, pb = a.payload, b.payload
        ra, rb = pa.rows, pb.rows
        rows = min(ra, rb)
        # products track their scale exactly; only sums need equal scales
        if same_scale and not math.isclose(pa.scale, pb.scale, rel_tol=1e-9):
            raise HEError(f"scale mismatch {pa.scale} vs {pb.scale}")
        return pa.polys[:, :rows], pb.polys[:, :rows], rows

    def _addsub(self, a, b, sign, op):
        self.check(a, b)
        x, y, rows = self._align(a, b)
        q = self.ring.moduli[:rows][:, None]
        polys = (x + y) % q if sign > 0 else (x - y) % q
        return self._wrap(polys, a.payload.scale, a.payload.bound + b.payload.bound, a.tag, op)

    def add(self, a, b):
        return self._addsub(a, b, 1, "add")

    def sub(self, a, b):
        return self._addsub(a, b, -1, "sub")

    def mul(self, a, b):
        self.check(a, b)
        if a.depth < 1 or b.depth < 1:
            raise DepthExhaustedError(f"multiply needs depth >= 1 (have {a.depth}, {b.depth})")
        x, y, n_rows = self._align(a, b, same_scale=False)
        rows = list(range(n_rows))
        q = self.ring.moduli[rows][:, None]
        scale = a.payload.scale * b.payload.scale
        bound = a.payload.bound * b.payload.bound
        if bound * scale >= math.prod(int(m) for m in self.ring.moduli[rows]) / 4:
            raise ScaleOverflowError("product would wrap the current modulus")
        d0 = x[0] * y[0] % q
        d1 = (x[0] * y[1] % q + x[1] * y[0] % q) % q
        d2 = x[1] * y[1] % q
        ks = self.ring.key_switch(self.ring.inv(d2, rows), rows, self.relin_key)
        polys = np.stack([(d0 + ks[0]) % q, (d1 + ks[1]) % q])
        polys = self.ring.rescale(polys, rows)
        return self._wrap(polys, scale / self.toy.rescale_primes[n_rows - self.ring.nb - 1], bound, a.tag, "mul")

    def mul_plain(self, a, v):
        self.check(a)
        if a.depth < 1:
            raise DepthExhaustedError("multiply needs depth >= 1")
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_slots,):
            raise ValueError(f"plaintext must have {self.n_slots} slots")
        pa = a.payload
        rows = list(range(pa.rows))
        q = self.ring.moduli[rows][:, None]
        m = self.ring.fwd(self.ring.lift(self.ring.encoder.encode(v, self.toy.scale), rows), rows)
        polys = self.ring.rescale(pa.polys * m[None] % q, rows)
        scale = pa.scale * self.toy.scale / self.toy.rescale_primes[pa.rows - self.ring.nb - 1]
        return self._wrap(polys, scale, pa.bound * float(np.max(np.abs(v), initial=0.0)), a.tag, "mul_plain")

    def rotate(self, a, k):
        self.check(a)
        k = int(k)
        self._check_rotation(k)
        pa = a.payload
        if k == 0:
            return self._wrap(pa.polys, pa.scale, pa.bound, a.tag, "rotate")
        key = self.galois_keys.get(k)
        if key is None:
            raise RotationKeyError(f"no rotation key for step {k}")
        rows = list(range(pa.rows))
        galois = pow(5, k, 2 * self.ring.n)
        c0 = pa.polys[0][:, self.ring.slot_permutation(galois)]
        moved = self.ring.automorphism(self.ring.inv(pa.polys[1], rows), rows, galois)
        ks = self.ring.key_switch(moved, rows, key)
        q = self.ring.moduli[rows][:, None]
        polys = np.stack([(c0 + ks[0]) % q, ks[1]])
        return self._wrap(polys, pa.scale, pa.bound, a.tag, "rotate")

    def size_bytes(self, a):
        return _payload_size(a.payload.rows, self.ring.n)

    def serialize(self, a):
        self.check(a)
        pa = a.payload
        head = _HEADER.pack(_CT_MAGIC, int(a.tag), a.depth, pa.rows, self.ring.n.bit_length() - 1,
                            pa.scale, pa.bound)
        return head + pa.polys.astype("<u4").tobytes()

    def deserialize(self, payload):
        if len(payload) < _HEADER.size:
            raise ValueError("truncated ckks payload")
        magic, tag, depth, rows, logn, scale, bound = _HEADER.unpack_from(payload, 0)
        if magic != _CT_MAGIC:
            raise ValueError("not a ckks-toy ciphertext payload")
        n = 1 << logn
        if n != self.ring.n:
            raise ValueError(f"ring dimension {n} != {self.ring.n}")
        body = np.frombuffer(payload, dtype="<u4", offset=_HEADER.size)
        if body.size != 2 * rows * n:
            raise ValueError("ckks payload length does not match header")
        polys = body.astype(np.int64).reshape(2, rows, n)
        return Ciphertext(self.backend_id, self.n_slots, depth, Packing(tag), CkksPayload(polys, scale, bound))

    def export_public(self):
        steps = sorted(self.galois_keys)
        doc = json.dumps({"params": self.toy.to_json(), "key_id": self.key_id, "steps": steps}).encode()
        parts = [_KEY_MAGIC, struct.pack("<I", len(doc)), doc, self.relin_key.astype("<u4").tobytes()]
        parts += [self.galois_keys[s].astype("<u4").tobytes() for s in steps]
        return b"".join(parts)

    @classmethod
    def from_public(cls, blob: bytes) -> "CkksEvaluator":
        if blob[:1] != _KEY_MAGIC:
            raise ValueError("not a ckks-toy key blob")
        (n_doc,) = struct.unpack_from("<I", blob, 1)
        doc = json.loads(blob[5:5 + n_doc].decode())
        params = ToyParams.from_json(doc["params"])
        k = len(params.all_primes)
        shape = (len(params.modulus_chain), 2, k, params.ring_dimension)
        size = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<u4", offset=5 + n_doc).astype(np.int64)
        if arr.size != size * (1 + len(doc["steps"])):
            raise ValueError("ckks key blob length mismatch")
        relin = arr[:size].reshape(shape)
        galois = {s: arr[size * (i + 1):size * (i + 2)].reshape(shape) for i, s in enumerate(doc["steps"])}
        return cls(params, doc["key_id"], relin, galois)


class CkksContext(SecretContext):
    """Key owner for the toy scheme. Emits a loud warning: this is not secure."""

    backend = BACKEND

    def __init__(self, params: ToyParams | None = None, rotation_steps=(), seed: int = 0):
        warnings.warn("ckks-toy parameters are NOT secure; use for testing and measurement only",
                      RuntimeWarning, stacklevel=2)
        self.toy = params if params is not None else ToyParams()
        self.params = self.toy.scheme_params()
        self.ring = _Ring(self.toy)
        self.rng = np.random.default_rng(seed)
        self.counters = OpCounters()
        n = self.ring.n
        chain = list(range(len(self.toy.modulus_chain)))
        everything = chain + [self.ring.special_row]

        self._s = self.rng.integers(-1, 2, size=n).astype(np.int64)
        self._s_ntt = self.ring.fwd(self.ring.lift(self._s, everything), everything)

        q = self.ring.moduli[everything][:, None]
        s2 = self._s_ntt * self._s_ntt % q
        self._relin = self._switch_key(s2)
        self._galois = {}
        for step in sorted({int(k) for k in rotation_steps if int(k) % self.n_slots}):
            g = pow(5, step, 2 * n)
            s_g = self.ring.automorphism(self.ring.lift(self._s, everything), everything, g)
            self._galois[step] = self._switch_key(self.ring.fwd(s_g, everything))
        self._key = KeyHandle(_digest([self._relin[0, 1, 0]]))

    def _uniform(self, rows) -> np.ndarray:
        q = self.ring.moduli[rows][:, None]
        return self.rng.integers(0, q, size=(len(rows), self.ring.n), dtype=np.int64)

    def _gaussian(self) -> np.ndarray:
        return np.rint(self.rng.normal(0.0, self.toy.error_stddev, self.ring.n)).astype(np.int64)

    def _switch_key(self, target_ntt: np.ndarray) -> np.ndarray:
        """Key taking ``d * target`` (digit-wise) to something decryptable under s."""
        ring = self.ring
        everything = list(range(len(ring.moduli)))
        q = ring.moduli[:, None]
        p = self.toy.special_prime
        digits = len(self.toy.modulus_chain)
        key = np.empty((digits, 2, len(everything), ring.n), dtype=np.int64)
        for i in range(digits):
            a = self._uniform(everything)
            e = ring.fwd(ring.lift(self._gaussian(), everything), everything)
            b = (-(a * self._s_ntt % q) + e) % q
            qi = int(ring.moduli[i])
            b[i] = (b[i] + (p % qi) * target_ntt[i] % qi) % qi
            key[i, 0] = b
            key[i, 1] = a
        return key

    @property
    def key(self):
        return self._key

    @property
    def backend_id(self):
        return f"{BACKEND}/{self._key.key_id}"

    @property
    def rotation_steps(self):
        return frozenset(self._galois)

    def encode_roundtrip(self, v) -> np.ndarray:
        """decode(encode(v)) without encryption, for precision checks."""
        arr = self._slot_vector(v)
        self._check_headroom(arr)
        return self.ring.encoder.decode(self.ring.encoder.encode(arr, self.toy.scale).astype(np.float64),
                                        self.toy.scale)

    def _check_headroom(self, arr):
        bound = float(np.max(np.abs(arr), initial=0.0))
        if bound * self.toy.scale >= self.toy.base_modulus / 4:
            raise ScaleOverflowError(f"|v| <= {bound:.3g} at scale 2**{self.toy.scale_bits} overflows the modulus")
        return bound

    def encrypt(self, v, tag=Packing.RAW, key=None):
        self._check_key(key)
        arr = self._slot_vector(v)
        bound = self._check_headroom(arr)
        ring = self.ring
        rows = ring.rows_for_level(self.toy.mult_depth)
        q = ring.moduli[rows][:, None]
        m = ring.fwd(ring.lift(ring.encoder.encode(arr, self.toy.scale), rows), rows)
        # secret-key encryption: the data owner always holds s, and the noise
        # is a single Gaussian rather than u*e + e0 + e1*s
        a = self._uniform(rows)
        e = ring.fwd(ring.lift(self._gaussian(), rows), rows)
        c0 = (-(a * self._s_ntt[rows] % q) + e + m) % q
        c1 = a
        polys = np.stack([c0, c1])
        self.counters.record("encrypt", _payload_size(len(rows), ring.n))
        # a little slack over the exact max keeps the headroom check honest under noise
        return Ciphertext(self.backend_id, self.n_slots, self.toy.mult_depth, Packing(tag),
                          CkksPayload(polys, self.toy.scale, bound * (1 + 1e-6) + 1e-3))

    def decrypt(self, ct):
        if ct.backend_id != self.backend_id:
            raise UnknownKeyError(f"ciphertext is under {ct.backend_id}, not {self.backend_id}")
        ring = self.ring
        pa = ct.payload
        base = list(range(ring.nb))
        q = ring.moduli[base][:, None]
        m = (pa.polys[0, :ring.nb] + pa.polys[1, :ring.nb] * self._s_ntt[:ring.nb] % q) % q
        coeffs = ring.crt_base(ring.inv(m, base))
        self.counters.record("decrypt")
        return ring.encoder.decode(coeffs.astype(np.float64), pa.scale)

    def evaluator(self):
        return CkksEvaluator(self.toy, self._key.key_id, self._relin, self._galois, ring=self.ring)
