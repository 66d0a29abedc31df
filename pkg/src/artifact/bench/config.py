"""Flat ``key = value`` benchmark configuration with command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..he.base import PROFILES
from ..metric import EUCLIDEAN, check
from .datasets import DatasetSpec


@dataclass
class BenchConfig:
    # backend: "sim" (plaintext simulator) or "ckks-toy"
    backend: str = "sim"
    # named parameter profile (sift, gist, glove) or empty for the explicit values below
    profile: str = ""
    ring_dimension: int = 4096
    mult_depth: int = 1
    # simulator ciphertext size B_C in bytes
    ciphertext_bytes: int = 786432
    key_seed: int = 0

    dataset: str = "synthetic"
    metric: str = EUCLIDEAN
    base: str = ""
    queries: str = ""
    train: str = ""
    groundtruth: str = ""
    d: int = 128
    n_base: int = 10_000
    n_queries: int = 100
    clusters: int = 100
    separation: float = 8.0
    data_seed: int = 0
    # multiplies every input vector before the protocol sees it
    input_scale: float = 1.0

    n_s: int = 16
    n_c: int = 16
    n_rs: int = 1000
    n_k: int = 100
    n_i: int = 64
    n_nb: int = 3
    pq_iters: int = 20
    l: int = 10
    l_c: list = field(default_factory=lambda: [3])
    k: int = 10

    transport: str = "loopback"
    workers: int = 1
    batch: int = 64
    seed: int = 0
    oracle: bool = True
    report: str = ""

    def __post_init__(self):
        if self.profile:
            p = PROFILES[self.profile]
            self.ring_dimension = p.ring_dimension
            self.mult_depth = p.mult_depth
            self.ciphertext_bytes = p.ciphertext_bytes
        check(self.metric)
        if self.backend not in ("sim", "ckks-toy"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.transport not in ("loopback", "tcp"):
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.l < self.k:
            raise ValueError(f"search length l={self.l} is shorter than k={self.k}")

    def dataset_spec(self) -> DatasetSpec:
        return DatasetSpec(
            name=self.dataset, metric=self.metric, d=self.d,
            base_path=self.base or None, query_path=self.queries or None,
            train_path=self.train or None, truth_path=self.groundtruth or None,
            n_base=self.n_base, n_queries=self.n_queries, clusters=self.clusters,
            separation=self.separation, seed=self.data_seed, scale=self.input_scale,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(BenchConfig)}


def _coerce(name: str, raw: str):
    default = BenchConfig.__dataclass_fields__[name]
    kind = type(default.default_factory()) if default.default_factory is not dataclasses.MISSING \
        else type(default.default)
    raw = raw.strip()
    if kind is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if kind is list:
        return [int(x) for x in raw.replace(",", " ").split()]
    return kind(raw)


def parse_pairs(lines) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ValueError(f"line {n}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path=None, overrides=()) -> BenchConfig:
    """File values first, then ``key=value`` overrides in order."""
    values = parse_pairs(Path(path).read_text().splitlines()) if path else {}
    values.update(parse_pairs(overrides))
    return BenchConfig(**values)


def dump_config(cfg: BenchConfig) -> str:
    lines = []
    for name, value in cfg.as_dict().items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
