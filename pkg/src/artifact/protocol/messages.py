"""Message schema and wire format.

A message is a 14-byte header (8-byte magic, version byte, step byte,
4-byte LE frame count) followed by frames. Each frame is a 4-byte LE length
and a payload whose first byte says what it holds:

    0 ciphertext   backend serialisation (see the evaluator)
    1 ndarray      dtype string, shape, raw little-endian data
    2 meta         UTF-8 JSON object (always the first frame; carries session_id)
    3 blob         opaque bytes (public evaluation keys)
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..he.base import Evaluator, frame, unframe

MAGIC = b"ARTIFACT"
VERSION = 1
HEADER = struct.Struct("<8sBBI")

CIPHERTEXT, ARRAY, META, BLOB = 0, 1, 2, 3


class Step(enum.IntEnum):
    SessionInit = 0
    KMeansInit = 1
    KMeansDistances = 2
    KMeansUpdate = 3
    KMeansDone = 4
    ConvertRequest = 5
    ConvertReply = 6
    EncodeCiphertexts = 7
    EncodeDistances = 8
    EncodeTableReply = 9
    IndexDistances = 10
    IndexTableReply = 11
    QueryCiphertexts = 12
    QueryDistances = 13
    QueryTableReply = 14
    QueryResult = 15
    Abort = 16


class ProtocolError(Exception):
    pass


class VersionMismatch(ProtocolError):
    pass


@dataclass
class Message:
    step: Step
    session_id: str
    meta: dict = field(default_factory=dict)
    ciphertexts: list = field(default_factory=list)
    arrays: list = field(default_factory=list)
    blobs: list = field(default_factory=list)
    # ledger bucket; defaults to the step name
    account: str | None = None
    # byte totals filled in by decode()
    stats: "Encoded | None" = field(default=None, compare=False, repr=False)

    @property
    def bucket(self) -> str:
        return self.account or self.step.name


def _encode_array(a: np.ndarray) -> bytes:
    # ascontiguousarray would promote 0-d arrays to 1-d
    a = np.asarray(a, order="C")
    le = a.astype(a.dtype.newbyteorder("<"), copy=False)
    dt = le.dtype.str.encode()
    head = struct.pack("<B", len(dt)) + dt + struct.pack("<B", a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + le.tobytes()


def _decode_array(buf: bytes) -> np.ndarray:
    n_dt = buf[0]
    dt = np.dtype(buf[1:1 + n_dt].decode())
    pos = 1 + n_dt
    ndim = buf[pos]
    pos += 1
    shape = struct.unpack_from(f"<{ndim}Q", buf, pos)
    pos += 8 * ndim
    count = int(np.prod(shape, dtype=np.int64))
    if len(buf) - pos != count * dt.itemsize:
        raise ProtocolError("array frame length does not match its shape")
    return np.frombuffer(buf, dtype=dt, count=count, offset=pos).reshape(shape).copy()


@dataclass
class Encoded:
    """Wire bytes plus the per-kind byte totals the ledger needs."""

    data: bytes
    ciphertext_frames: int
    ciphertext_payload_bytes: int
    plaintext_bytes: int
    blob_bytes: int


def encode(msg: Message, ev: Evaluator | None = None) -> Encoded:
    meta = dict(msg.meta)
    meta["session_id"] = msg.session_id
    if msg.account:
        meta["account"] = msg.account
    meta_bytes = json.dumps(meta, sort_keys=True).encode()
    frames = [frame(bytes([META]) + meta_bytes)]
    plain = len(meta_bytes)
    blob_total = 0
    for b in msg.blobs:
        frames.append(frame(bytes([BLOB]) + b))
        blob_total += len(b)
    for a in msg.arrays:
        body = _encode_array(np.asarray(a))
        frames.append(frame(bytes([ARRAY]) + body))
        plain += len(body)
    ct_bytes = 0
    if msg.ciphertexts and ev is None:
        raise ProtocolError("an evaluator is needed to serialise ciphertexts")
    for ct in msg.ciphertexts:
        body = ev.serialize(ct)
        frames.append(frame(bytes([CIPHERTEXT]) + body))
        ct_bytes += len(body)
    head = HEADER.pack(MAGIC, VERSION, int(msg.step), len(frames))
    return Encoded(head + b"".join(frames), len(msg.ciphertexts), ct_bytes, plain, blob_total)


def decode(data: bytes, ev: Evaluator | None = None) -> Message:
    if len(data) < HEADER.size:
        raise ProtocolError("truncated message header")
    magic, version, step, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"wire version {version}, expected {VERSION}")
    try:
        step = Step(step)
    except ValueError:
        raise ProtocolError(f"unknown step {step}") from None
    pos = HEADER.size
    meta, cts, arrays, blobs = None, [], [], []
    plain = blob_total = ct_bytes = 0
    for _ in range(count):
        try:
            payload, pos = unframe(data, pos)
        except ValueError as exc:
            raise ProtocolError(str(exc)) from None
        if not payload:
            raise ProtocolError("empty frame")
        kind, body = payload[0], payload[1:]
        if kind == META:
            meta = json.loads(body.decode())
            meta_len = len(body)
        elif kind == BLOB:
            blobs.append(body)
            blob_total += len(body)
        elif kind == ARRAY:
            arrays.append(_decode_array(body))
            plain += len(body)
        elif kind == CIPHERTEXT:
            if ev is None:
                raise ProtocolError("ciphertext frame received before keys were set up")
            cts.append(ev.deserialize(body))
            ct_bytes += len(body)
        else:
            raise ProtocolError(f"unknown frame kind {kind}")
    if pos != len(data):
        raise ProtocolError("trailing bytes after last frame")
    if meta is None:
        raise ProtocolError("message has no meta frame")
    session_id = meta.pop("session_id")
    account = meta.pop("account", None)
    stats = Encoded(bytes(data), len(cts), ct_bytes, plain + meta_len, blob_total)
    return Message(step, session_id, meta, cts, arrays, blobs, account, stats)


def read_message(read_exact) -> bytes:
    """Pull one whole message off a byte stream. ``read_exact(n)`` must return n bytes."""
    head = read_exact(HEADER.size)
    magic, version, _, count = HEADER.unpack(head)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"wire version {version}, expected {VERSION}")
    parts = [head]
    for _ in range(count):
        n_raw = read_exact(4)
        (n,) = struct.unpack("<I", n_raw)
        parts += [n_raw, read_exact(n)]
    return b"".join(parts)
