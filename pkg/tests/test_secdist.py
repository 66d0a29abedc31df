import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.secdist import (conventional_count, distance_kernel, execute, he_inner_product, he_sq_euclidean,
                              plan, plan_conventional, rot_sum, rot_sum_conventional, rotation_count,
                              rotation_steps, write_trace)

from conftest import sim_context


def block_sums(v, d_s):
    n = len(v) // d_s
    return v[:n * d_s].reshape(n, d_s).sum(axis=1)


def plain_replay(v, reduction):
    """Replay a plan with np.roll as the rotation."""
    r, memo = v.copy(), []
    for step in reduction.steps:
        src = r if step.source == "running" else v if step.source == "original" else memo[int(step.source[5:-1])]
        r = r + np.roll(src, -step.amount)
        if step.source == "running" and len(memo) < reduction.memo_slots:
            memo.append(r)
    return r


def test_rotation_counts():
    assert {d: rotation_count(d) for d in (1, 2, 10, 12, 64)} == {1: 0, 2: 1, 10: 4, 12: 4, 64: 6}
    assert conventional_count(64) == 6
    assert (rotation_count(100), conventional_count(100)) == (8, 42)
    assert sorted(plan(100).rotation_steps) == [1, 2, 4, 8, 16, 32, 64, 96]
    assert plan_conventional(100).n_rot == 42
    with pytest.raises(ValueError):
        plan(0)


def test_small_plans_use_the_original_for_odd_tails():
    assert [(s.source, s.amount) for s in plan(3).steps] == [("running", 1), ("original", 2)]
    assert [(s.source, s.amount) for s in plan(5).steps] == [("running", 1), ("running", 2), ("original", 4)]


def test_count_bounds():
    for d_s in range(2, 4097):
        n = rotation_count(d_s)
        assert n < 2 * math.log2(d_s) and n <= conventional_count(d_s)
        assert plan(d_s).memo_slots <= int(math.log2(d_s))


@given(st.integers(1, 64), st.integers(0, 6))
def test_count_growth_is_logarithmic(m, k):
    assert rotation_count(2**k * m) - rotation_count(m) <= k + int(math.log2(m)) + 1


@given(st.integers(1, 300), st.integers(0, 2**32 - 1))
def test_plain_replay_gives_block_sums(d_s, seed):
    n = d_s * (1 + 1024 // d_s)
    v = np.random.default_rng(seed).integers(-50, 50, n).astype(float)
    want = block_sums(v, d_s)
    for reduction in (plan(d_s), plan_conventional(d_s)):
        got = plain_replay(v, reduction)[::d_s][:len(want)]
        assert np.array_equal(got, want)


@pytest.mark.parametrize("d_s", [1, 2, 3, 5, 7, 16, 31, 100])
def test_rot_sum_on_simulator(d_s):
    ctx = sim_context(256, rotation_steps=rotation_steps([d_s]) | plan_conventional(d_s).rotation_steps)
    ev = ctx.evaluator()
    rng = np.random.default_rng(d_s)
    for _ in range(5):
        v = rng.normal(size=128)
        want = block_sums(v, d_s)
        peak = []
        fast = execute(ev, ctx.encrypt(v), plan(d_s), memo_peak=peak)
        slow = rot_sum_conventional(ev, ctx.encrypt(v), d_s)
        got = ctx.decrypt(fast)[::d_s][:len(want)]
        assert np.allclose(got, want, rtol=0, atol=1e-12)
        assert np.allclose(got, ctx.decrypt(slow)[::d_s][:len(want)], rtol=0, atol=1e-12)
        assert peak[0] <= max(0, int(math.log2(d_s)))


def test_kernel_examples(sim):
    ctx, ev = sim
    op = ctx.encrypt([1, 2, 3, 4, 0, 0, 0, 0])
    rp = ctx.encrypt([1, 1, 1, 1, 0, 0, 0, 0])
    assert list(ctx.decrypt(he_sq_euclidean(ev, op, rp, 2))[[0, 2]]) == [1, 13]
    assert list(ctx.decrypt(he_inner_product(ev, op, rp, 2))[[0, 2]]) == [3, 7]
    slots = ctx.encrypt([1, 2, 3, 4, 5, 6, 0, 0])
    assert list(ctx.decrypt(rot_sum(ev, slots, 3))[[0, 3]]) == [6, 15]
    assert distance_kernel("euclidean") is he_sq_euclidean
    with pytest.raises(ValueError):
        distance_kernel("cosine")


def test_kernel_spends_one_level(sim):
    ctx, ev = sim
    out = he_sq_euclidean(ev, ctx.encrypt(np.ones(8)), ctx.encrypt(np.zeros(8)), 4)
    assert out.depth == ctx.params.mult_depth - 1


def test_trace_is_jsonl(tmp_path, sim):
    ctx, ev = sim
    trace = []
    rot_sum(ev, ctx.encrypt(np.arange(8.0)), 5, trace)
    path = tmp_path / "trace.jsonl"
    write_trace(path, trace)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["step"] for r in rows] == [1, 2, 4]
    assert plan(5).to_jsonl().count("\n") == 3
