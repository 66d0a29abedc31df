"""Command-line entry point.

Every subcommand reads the same flat config (``-c FILE``) with ``--set
key=value`` overrides. Staged subcommands run one in-process session up to
their stage and write that stage's artifacts to ``--out``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..he.base import MIB
from ..pipeline import store
from ..search import recall_at_k
from . import tables
from .config import load_config
from .datasets import write_ivecs
from .runner import StageError, run_ablation, run_benchmark, run_stages


def _config(args):
    overrides = list(args.set or [])
    for key in ("backend", "seed", "transport"):
        value = getattr(args, key, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    return load_config(args.config, overrides)


def _save(out: Path, cfg, art, until: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if art.codebook is not None:
        store.save_codebook(out / "codebook.ppq", art.codebook)
        files["codebook"] = "codebook.ppq"
    if art.encoded is not None:
        store.save_encoded(out / "encoded.ppq", art.encoded)
        files["encoded"] = "encoded.ppq"
    if art.index is not None:
        store.save_tables(out / "tables.ppq", art.session.server.tables)
        store.save_ivf(out / "ivf.ppq", art.index)
        files.update(tables="tables.ppq", ivf="ivf.ppq")
    recall = {}
    for l_c, results in art.results.items():
        name = f"results_lc{l_c}.ivecs"
        write_ivecs(out / name, np.stack([r.ids[:cfg.l] for r in results]))
        files[f"results_lc{l_c}"] = name
        # one line per query: [[id, score], ...] best first
        jsonl = f"results_lc{l_c}.jsonl"
        with open(out / jsonl, "w") as fh:
            for r in results:
                fh.write(json.dumps(r.pairs()) + "\n")
        files[f"results_lc{l_c}_pairs"] = jsonl
        recall[str(l_c)] = recall_at_k(results, art.dataset.ground_truth(cfg.k), cfg.k)
    extra = {"stage": until, "backend": cfg.backend, "ledger": art.session.server_ledger.as_dict()}
    if recall:
        extra[f"recall@{cfg.k}"] = recall
    store.write_manifest(out / "manifest.json", art.layout.to_json(), cfg.seed, files, **extra)


def cmd_stage(args, until: str) -> int:
    cfg = _config(args)
    art, wall = run_stages(cfg, until)
    _save(Path(args.out), cfg, art, until)
    print(f"{until}: done in {sum(wall.values()):.2f}s, artifacts in {args.out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    report = run_benchmark(cfg)
    for c in report.checks:
        print(c.line())
    for l_c, r in report.recall.items():
        print(f"recall@{report.recall_k} (l_c={l_c}, fraction in [0,1]): {r:.4f}")
    print(f"MSE per vector {report.mse:.4f}, per dimension {report.mse_per_dimension:.4f}")
    print(f"per-query ciphertext traffic: {report.traffic['per_query_ciphertext_bytes'] / MIB:.3f} MiB")
    path = args.report or cfg.report
    if path:
        Path(path).write_text(report.dumps() + "\n")
    return 0 if report.passed else 1


def cmd_table4(args) -> int:
    diffs = tables.table4(args.ring_dimension)
    for d in diffs:
        print(d.line())
    bad = sum(not d.ok for d in diffs)
    print(f"{bad} diffs against the published table")
    return 0 if bad == 0 else 1


def cmd_ablate(args) -> int:
    cfg = _config(args)
    values = [int(v) for v in args.n_s.split(",")] if args.n_s else list(tables.ABLATION_N_S)
    rows = run_ablation(cfg, values)
    print(f"{'n_s':>4} {'N_C':>4} {'n_rot':>5} {'MSE/dim':>10} {f'recall@{cfg.k}':>10} {'MiB/query':>10}")
    for r in rows:
        print(f"{r.n_s:>4} {r.n_c:>4} {r.n_rot:>5} {r.mse:>10.3f} {r.recall:>10.4f} {r.query_bytes / MIB:>10.3f}")
    ok = True
    if values == list(tables.ABLATION_N_S) and cfg.d == tables.ABLATION_D and cfg.n_c == tables.ABLATION_N_C:
        got = tuple(r.n_rot for r in rows)
        ok = got == tables.ABLATION_N_ROT
        print(f"{'PASS' if ok else 'FAIL'} n_rot column {got} vs published {tables.ABLATION_N_ROT}")
    recalls = [r.recall for r in rows]
    mono = all(b >= a for a, b in zip(recalls, recalls[1:]))
    print(f"{'PASS' if mono else 'FAIL'} recall non-decreasing in n_s")
    if args.json:
        Path(args.json).write_text(json.dumps([r.__dict__ for r in rows], indent=2) + "\n")
    return 0 if ok and mono else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    common.add_argument("--backend", choices=("sim", "ckks-toy"))
    common.add_argument("--transport", choices=("loopback", "tcp"))
    common.add_argument("--seed", type=int)

    p = argparse.ArgumentParser(prog="artifact-bench", description="Privacy-preserving PQ ANN benchmark harness.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, until in (("gen-codebook", "codebook"), ("encode", "encode"), ("index", "index"),
                        ("search", "search")):
        sp = sub.add_parser(name, parents=[common], help=f"run the protocol through the {until} stage")
        sp.add_argument("--out", required=True, help="artifact directory")
        sp.set_defaults(func=lambda a, u=until: cmd_stage(a, u))
    sp = sub.add_parser("bench", parents=[common], help="full run with traffic and oracle checks")
    sp.add_argument("--report", help="write the JSON report here")
    sp.set_defaults(func=cmd_bench)
    sp = sub.add_parser("table4", help="layout table against the published values")
    sp.add_argument("--ring-dimension", type=int, default=tables.RING_DIMENSION)
    sp.set_defaults(func=cmd_table4)
    sp = sub.add_parser("ablate", parents=[common], help="subspace-count sweep")
    sp.add_argument("--n-s", help="comma-separated subspace counts (default: the published sweep)")
    sp.add_argument("--json", help="write the rows as JSON here")
    sp.set_defaults(func=cmd_ablate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
