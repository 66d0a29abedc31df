"""Versioned binary files for pipeline artefacts plus a JSON manifest.

File layout: 4-byte magic ``PPQ1``, 1-byte kind, 2-byte LE format version,
4-byte LE header length, UTF-8 JSON header (metadata and array specs),
then the arrays as raw little-endian bytes in header order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .types import Codebook, EncodedDatabase, InterCodeTables, IVFIndex

MAGIC = b"PPQ1"
VERSION = 1
KINDS = {"codebook": 1, "encoded": 2, "tables": 3, "ivf": 4}
_PREFIX = struct.Struct("<4sBHI")


def _dump(path, kind: str, meta: dict, arrays: dict) -> None:
    specs = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        specs.append({"name": name, "dtype": le.dtype.str, "shape": list(arr.shape)})
        blobs.append(le.tobytes())
    header = json.dumps({"meta": meta, "arrays": specs}).encode()
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, KINDS[kind], VERSION, len(header)))
        fh.write(header)
        for b in blobs:
            fh.write(b)


def _load(path, kind: str):
    buf = Path(path).read_bytes()
    if len(buf) < _PREFIX.size:
        raise ValueError(f"{path}: truncated header")
    magic, k, version, n_header = _PREFIX.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    if k != KINDS[kind]:
        raise ValueError(f"{path}: expected a {kind} file")
    header = json.loads(buf[_PREFIX.size:_PREFIX.size + n_header])
    pos = _PREFIX.size + n_header
    arrays = {}
    for spec in header["arrays"]:
        dt = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"], dtype=np.int64))
        end = pos + count * dt.itemsize
        if end > len(buf):
            raise ValueError(f"{path}: truncated array {spec['name']}")
        arrays[spec["name"]] = np.frombuffer(buf, dtype=dt, count=count, offset=pos).reshape(spec["shape"]).copy()
        pos = end
    return header["meta"], arrays


def save_codebook(path, cb: Codebook) -> None:
    _dump(path, "codebook", {"metric": cb.metric}, {"centroids": cb.centroids})


def load_codebook(path) -> Codebook:
    meta, a = _load(path, "codebook")
    return Codebook(a["centroids"], meta["metric"])


def save_encoded(path, db: EncodedDatabase) -> None:
    _dump(path, "encoded", {}, {"codes": db.codes, "ids": db.ids})


def load_encoded(path) -> EncodedDatabase:
    _, a = _load(path, "encoded")
    return EncodedDatabase(a["codes"], a["ids"])


def save_tables(path, t: InterCodeTables) -> None:
    _dump(path, "tables", {"metric": t.metric}, {"tables": t.tables})


def load_tables(path) -> InterCodeTables:
    meta, a = _load(path, "tables")
    return InterCodeTables(a["tables"], meta["metric"])


def save_ivf(path, index: IVFIndex) -> None:
    _dump(path, "ivf", {"n_nb": index.n_nb}, {"centers": index.centers, "assignments": index.assignments})


def load_ivf(path) -> IVFIndex:
    meta, a = _load(path, "ivf")
    return IVFIndex(a["centers"], a["assignments"], meta["n_nb"])


def write_manifest(path, layout: dict, seed: int, files: dict, **extra) -> None:
    doc = {"format_version": VERSION, "layout": layout, "seed": seed, "files": files, **extra}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != VERSION:
        raise ValueError(f"{path}: unsupported manifest version {doc.get('format_version')}")
    return doc
