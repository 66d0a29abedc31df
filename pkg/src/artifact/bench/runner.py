"""Experiment orchestration: one session through all four stages, then a report."""

from __future__ import annotations

import contextlib
import json
import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..he import SchemeParams, SimulatorContext
from ..packing import PQLayout, layout_counts
from ..pipeline import PlainIVFPQ, mse
from ..protocol import Session, SessionConfig, assert_traffic
from ..protocol.ledger import ENCODING, INDEXING, SEARCH
from ..search import SearchParams, recall_at_k
from ..secdist import rotation_count, rotation_steps
from .config import BenchConfig
from .datasets import Dataset

STAGES = ("setup", "codebook", "encode", "index", "search")


class StageError(RuntimeError):
    def __init__(self, stage: str, error: BaseException):
        super().__init__(f"stage {stage!r} failed: {error}")
        self.stage = stage
        self.error = error


@contextlib.contextmanager
def stage(name: str, wall: dict):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        wall[name] = wall.get(name, 0.0) + time.perf_counter() - t0


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass
class Report:
    config: dict
    dataset: dict
    layout: dict
    seed: int
    # recall@k in [0, 1], keyed by l_c
    recall: dict
    recall_k: int
    mse: float
    mse_per_dimension: float
    kmeans_rounds: list
    server_seconds: dict
    client_seconds: dict
    wall_seconds: dict
    counters: dict
    traffic: dict
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["recall"] = {str(k): v for k, v in self.recall.items()}
        doc["passed"] = self.passed
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def make_context(cfg: BenchConfig, layout: PQLayout):
    steps = rotation_steps([layout.d_s])
    if cfg.backend == "sim":
        params = SchemeParams(cfg.ring_dimension, cfg.mult_depth, cfg.ciphertext_bytes)
        return SimulatorContext(params, seed=cfg.key_seed, rotation_steps=steps)
    from ..he.ckks import CkksContext, ToyParams

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return CkksContext(ToyParams(cfg.ring_dimension, cfg.mult_depth), rotation_steps=steps, seed=cfg.key_seed)


@dataclass
class Artifacts:
    """In-memory outputs of a run, for callers that want more than the report."""

    dataset: Dataset
    layout: PQLayout
    codebook: object = None
    encoded: object = None
    index: object = None
    results: dict = field(default_factory=dict)
    session: Session | None = None


def run_stages(cfg: BenchConfig, until: str = "search", dataset: Dataset | None = None):
    """Run the protocol up to and including ``until``; returns (artifacts, wall seconds)."""
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    wall: dict = {}
    stop = STAGES.index(until)
    with stage("setup", wall):
        ds = dataset if dataset is not None else cfg.dataset_spec().load()
        layout = layout_counts(cfg.ring_dimension, ds.d, cfg.n_s, cfg.n_c, cfg.n_rs)
        if cfg.n_rs > len(ds.train):
            raise ValueError(f"n_rs={cfg.n_rs} exceeds the {len(ds.train)} training vectors")
        ctx = make_context(cfg, layout)
        session = Session(ctx, layout, ds.metric, SessionConfig(transport=cfg.transport, workers=cfg.workers))
        session.open()
    art = Artifacts(ds, layout, session=session)
    try:
        if stop >= 1:
            with stage("codebook", wall):
                art.codebook = session.train_codebook(ds.train, cfg.n_k, cfg.seed)
        if stop >= 2:
            with stage("encode", wall):
                art.encoded = session.encode(ds.base, cfg.batch)
        if stop >= 3:
            with stage("index", wall):
                art.index = session.index(cfg.n_i, cfg.n_nb, cfg.pq_iters, cfg.seed)
        if stop >= 4:
            with stage("search", wall):
                for l_c in cfg.l_c:
                    art.results[l_c] = session.search(ds.queries, SearchParams(cfg.l, l_c))
    finally:
        session.close()
    return art, wall


def oracle_checks(cfg: BenchConfig, art: Artifacts) -> list[Check]:
    """Plaintext IVF-PQ seeded identically must agree bit for bit."""
    ds = art.dataset
    ref = PlainIVFPQ(cfg.n_s, cfg.n_c, ds.metric, n_rs=cfg.n_rs, n_k=cfg.n_k, n_i=cfg.n_i, n_nb=cfg.n_nb,
                     pq_iters=cfg.pq_iters, seed=cfg.seed).fit(ds.train, ds.base)
    truth = ds.ground_truth(cfg.k)
    checks = [
        Check("oracle codebook", np.array_equal(ref.codebook, art.codebook.centroids)),
        Check("oracle PQ codes", np.array_equal(ref.codes, art.encoded.codes),
              f"{int((ref.codes == art.encoded.codes).all(axis=1).sum())}/{len(ref.codes)} equal"),
        Check("oracle IVF centers", np.array_equal(ref.centers, art.index.centers)),
        Check("oracle IVF assignments", np.array_equal(ref.assignments, art.index.assignments)),
    ]
    for l_c, results in art.results.items():
        expected = ref.search(ds.queries, cfg.l, l_c)
        same = all(np.array_equal(a, r.ids) for a, r in zip(expected, results))
        rec_ref = recall_at_k(expected, truth, cfg.k)
        rec = recall_at_k(results, truth, cfg.k)
        checks.append(Check(f"oracle results l_c={l_c}", same and rec == rec_ref,
                            f"recall {rec:.4f} vs {rec_ref:.4f}"))
    return checks


def traffic_report(cfg: BenchConfig, art: Artifacts) -> tuple[dict, list[Check]]:
    ledger = art.session.server_ledger
    L = art.layout
    n_queries = len(art.dataset.queries) * len(art.results)
    n_data = len(art.dataset.base)
    b_c = cfg.ciphertext_bytes if cfg.backend == "sim" else None
    checks = assert_traffic(ledger, L, b_c, n_data=n_data, n_queries=n_queries, n_k=cfg.n_k,
                            indexed=art.index is not None)
    traffic = {
        "ledger": ledger.as_dict(),
        "per_datum_ciphertext_bytes": ledger.ciphertext_bytes(*ENCODING) / n_data if n_data else 0.0,
        "indexing_ciphertext_bytes": ledger.ciphertext_bytes(*INDEXING),
        "per_query_ciphertext_bytes": ledger.ciphertext_bytes(*SEARCH) / n_queries if n_queries else 0.0,
    }
    return traffic, [Check(f"traffic {c.name}", c.ok, c.line().split(": ", 1)[1]) for c in checks]


def run_benchmark(cfg: BenchConfig, dataset: Dataset | None = None) -> Report:
    art, wall = run_stages(cfg, "search", dataset)
    ds = art.dataset
    truth = ds.ground_truth(cfg.k)
    recall = {l_c: recall_at_k(res, truth, cfg.k) for l_c, res in art.results.items()}
    traffic, checks = traffic_report(cfg, art)
    if cfg.backend == "sim" and cfg.oracle:
        with stage("oracle", wall):
            checks += oracle_checks(cfg, art)
    session = art.session
    return Report(
        config=cfg.as_dict(),
        dataset={"name": ds.name, "n_base": len(ds.base), "n_queries": len(ds.queries), "d": ds.d,
                 "metric": ds.metric},
        layout=art.layout.to_json(),
        seed=cfg.seed,
        recall=recall,
        recall_k=cfg.k,
        mse=mse(art.encoded, art.codebook, ds.base, art.layout),
        mse_per_dimension=mse(art.encoded, art.codebook, ds.base, art.layout, per_dimension=True),
        kmeans_rounds=list(session.server.kmeans_rounds),
        server_seconds=dict(session.server.busy_seconds),
        client_seconds=dict(session.client.busy_seconds),
        wall_seconds=wall,
        counters={"server": session.server.evaluator.counters.as_dict(),
                  "client": session.client.endpoint.evaluator.counters.as_dict()},
        traffic=traffic,
        checks=checks,
    )


@dataclass
class AblationRow:
    n_s: int
    n_c: int
    n_rot: int
    mse: float
    recall: float
    query_bytes: float
    search_seconds: float


def run_ablation(cfg: BenchConfig, n_s_values, dataset: Dataset | None = None) -> list[AblationRow]:
    """Sweep the subspace count on one dataset; every run uses the same data and seed."""
    ds = dataset if dataset is not None else cfg.dataset_spec().load()
    rows = []
    for n_s in n_s_values:
        rep = run_benchmark(replace(cfg, n_s=n_s, oracle=False), ds)
        l_c = cfg.l_c[-1]
        rows.append(AblationRow(n_s, cfg.n_c, rotation_count(rep.layout["d_s"]), rep.mse_per_dimension,
                                rep.recall[l_c], rep.traffic["per_query_ciphertext_bytes"],
                                rep.server_seconds.get("serve_queries", 0.0)))
    return rows
