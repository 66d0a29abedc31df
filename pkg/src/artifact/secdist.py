"""Block-wise rotation summation and packed distance kernels.

After a reduction every block-start slot holds the sum of the d_s slots
that begin there. Slots in between hold partial sums that spill across
blocks; they are never read, so no masking multiply is spent on them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .he.base import Ciphertext, Evaluator

RUNNING = "running"
ORIGINAL = "original"


def _floor_log2(n: int) -> int:
    return n.bit_length() - 1


@dataclass(frozen=True)
class Step:
    source: str   # "running", "original" or "memo[k]"
    amount: int

    def to_json(self) -> dict:
        return {"op": "rotate_add", "step": self.amount, "source": self.source}


@dataclass(frozen=True)
class ReductionPlan:
    d_s: int
    steps: tuple = field(default_factory=tuple)
    memo_slots: int = 0

    @property
    def n_rot(self) -> int:
        return len(self.steps)

    @property
    def rotation_steps(self) -> frozenset:
        return frozenset(s.amount for s in self.steps)

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"d_s": self.d_s, **s.to_json()}) + "\n" for s in self.steps)


def plan(d_s: int) -> ReductionPlan:
    """Memoised doubling then power-of-two chunk reuse; an odd tail comes from the input."""
    if d_s < 1:
        raise ValueError("d_s must be >= 1")
    if d_s == 1:
        return ReductionPlan(1)
    steps = []
    levels = _floor_log2(d_s)
    for i in range(levels):
        # r_m[i] is the running sum right after this step
        steps.append(Step(RUNNING, 1 << i))
    offset = 1 << levels
    done = 0
    while d_s - offset - done >= 2:
        k = _floor_log2(d_s - offset - done)
        steps.append(Step(f"memo[{k - 1}]", offset + done))
        done += 1 << k
    if d_s % 2 == 1:
        steps.append(Step(ORIGINAL, offset + done))
    return ReductionPlan(d_s, tuple(steps), levels)


def plan_conventional(d_s: int) -> ReductionPlan:
    """Doubling up to the largest power of two, then one rotation per leftover slot."""
    if d_s < 1:
        raise ValueError("d_s must be >= 1")
    levels = _floor_log2(d_s)
    steps = [Step(RUNNING, 1 << i) for i in range(levels)]
    steps += [Step(ORIGINAL, t) for t in range(1 << levels, d_s)]
    return ReductionPlan(d_s, tuple(steps), 0)


def rotation_count(d_s: int) -> int:
    return plan(d_s).n_rot


def conventional_count(d_s: int) -> int:
    levels = _floor_log2(d_s)
    return levels + d_s - (1 << levels)


def rotation_steps(d_s_values) -> frozenset:
    """Union of rotation amounts needed for the given block lengths (Galois key set)."""
    out = set()
    for d_s in d_s_values:
        out |= plan(d_s).rotation_steps
    return frozenset(out)


def execute(ev: Evaluator, c: Ciphertext, reduction: ReductionPlan, trace: list | None = None,
            memo_peak: list | None = None) -> Ciphertext:
    """Replay a plan on a ciphertext. ``memo_peak`` receives the largest memo size seen."""
    r = c
    memo = []
    for step in reduction.steps:
        if step.source == RUNNING:
            src = r
        elif step.source == ORIGINAL:
            src = c
        else:
            src = memo[int(step.source[5:-1])]
        r = ev.add(r, ev.rotate(src, step.amount))
        if step.source == RUNNING and len(memo) < reduction.memo_slots:
            memo.append(r)
        if trace is not None:
            trace.append({"d_s": reduction.d_s, **step.to_json()})
    if memo_peak is not None:
        memo_peak.append(len(memo))
    return r


def rot_sum(ev: Evaluator, c: Ciphertext, d_s: int, trace: list | None = None) -> Ciphertext:
    return execute(ev, c, plan(d_s), trace)


def rot_sum_conventional(ev: Evaluator, c: Ciphertext, d_s: int, trace: list | None = None) -> Ciphertext:
    return execute(ev, c, plan_conventional(d_s), trace)


def he_sq_euclidean(ev: Evaluator, op_ct: Ciphertext, rp_ct: Ciphertext, d_s: int,
                    trace: list | None = None) -> Ciphertext:
    diff = ev.sub(op_ct, rp_ct)
    return rot_sum(ev, ev.mul(diff, diff), d_s, trace)


def he_inner_product(ev: Evaluator, op_ct: Ciphertext, rp_ct: Ciphertext, d_s: int,
                     trace: list | None = None) -> Ciphertext:
    return rot_sum(ev, ev.mul(op_ct, rp_ct), d_s, trace)


KERNELS = {"euclidean": he_sq_euclidean, "inner_product": he_inner_product}


def distance_kernel(metric: str):
    try:
        return KERNELS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; known: {sorted(KERNELS)}") from None


def write_trace(path, trace: list) -> None:
    with open(path, "w") as fh:
        for row in trace:
            fh.write(json.dumps(row) + "\n")
