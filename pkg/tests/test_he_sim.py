import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.he import (BackendMismatchError, DepthExhaustedError, OpCounters, Packing, RotationKeyError,
                         SchemeParams, UnknownKeyError, evaluator_from_public)
from artifact.he.base import KIB, PROFILES, frame, profile, unframe

from conftest import sim_context


def pad(values, n=8):
    out = np.zeros(n)
    out[:len(values)] = values
    return out


def test_zero_vector_round_trip_is_exact(sim):
    ctx, _ = sim
    assert np.array_equal(ctx.decrypt(ctx.encrypt(np.zeros(8))), np.zeros(8))


def test_round_trip_is_exact(sim):
    ctx, _ = sim
    v = np.arange(1.0, 9.0)
    ct = ctx.encrypt(v)
    assert ct.depth == 1 and ct.n_slots == 8
    assert np.array_equal(ctx.decrypt(ct), v)


def test_wrong_length_and_unknown_key(sim):
    ctx, _ = sim
    with pytest.raises(ValueError):
        ctx.encrypt(np.zeros(7))
    other = sim_context(seed=9)
    with pytest.raises(UnknownKeyError):
        ctx.encrypt(np.zeros(8), key=other.key)
    with pytest.raises(UnknownKeyError):
        ctx.decrypt(other.encrypt(np.zeros(8)))


def test_add_sub_mul(sim):
    ctx, ev = sim
    a, b = ctx.encrypt(pad([1, 2])), ctx.encrypt(pad([3, 4]))
    assert np.array_equal(ctx.decrypt(ev.add(a, b))[:2], [4, 6])
    assert np.array_equal(ctx.decrypt(ev.add(a, ctx.encrypt(np.zeros(8)))), pad([1, 2]))
    assert np.array_equal(ctx.decrypt(ev.sub(b, a))[:2], [2, 2])
    prod = ev.mul(ctx.encrypt(pad([2, 3])), ctx.encrypt(pad([4, 5])))
    assert np.array_equal(ctx.decrypt(prod)[:2], [8, 15])
    assert prod.depth == 0


def test_depth_budget():
    ctx = sim_context()
    ev = ctx.evaluator()
    a = ctx.encrypt(np.ones(8))
    with pytest.raises(DepthExhaustedError):
        ev.mul(ev.mul(a, a), a)
    with pytest.raises(DepthExhaustedError):
        ev.mul_plain(ev.mul(a, a), np.ones(8))
    deep = sim_context(mult_depth=2)
    ev2 = deep.evaluator()
    b = deep.encrypt(np.full(8, 2.0))
    twice = ev2.mul(ev2.mul(b, b), b)
    assert twice.depth == 0 and np.array_equal(deep.decrypt(twice), np.full(8, 8.0))
    with pytest.raises(DepthExhaustedError):
        ev2.mul(twice, b)


def test_sift_profile_allows_two_multiplies():
    p = profile("sift")
    ctx = sim_context(p.ring_dimension, p.mult_depth, p.ciphertext_bytes)
    ev = ctx.evaluator()
    a = ctx.encrypt(np.ones(ctx.n_slots))
    ev.mul(ev.mul(a, a), a)
    with pytest.raises(DepthExhaustedError):
        ev.mul(ev.mul(ev.mul(a, a), a), a)


def test_rotation_is_left(sim):
    ctx, ev = sim
    c = sim_context(ring_dimension=8)
    e = c.evaluator()
    assert np.array_equal(c.decrypt(e.rotate(c.encrypt([1, 2, 3, 4]), 1)), [2, 3, 4, 1])
    v = np.arange(8.0)
    ct = ctx.encrypt(v)
    assert np.array_equal(ctx.decrypt(ev.rotate(ct, 0)), v)
    for k in (-1, 8):
        with pytest.raises(ValueError):
            ev.rotate(ct, k)


def test_missing_rotation_key():
    ctx = sim_context(rotation_steps={1, 2})
    ev = ctx.evaluator()
    ct = ctx.encrypt(np.arange(8.0))
    ev.rotate(ct, 2)
    with pytest.raises(RotationKeyError):
        ev.rotate(ct, 3)


def test_backend_mismatch():
    a, b = sim_context(seed=1), sim_context(seed=2)
    with pytest.raises(BackendMismatchError):
        a.evaluator().add(a.encrypt(np.zeros(8)), b.encrypt(np.zeros(8)))


def test_profiles_and_sizes():
    assert PROFILES["gist"].ciphertext_bytes == 512 * KIB
    assert PROFILES["sift"].ciphertext_bytes == 768 * KIB
    assert PROFILES["glove"].ciphertext_bytes == 512 * KIB
    for p in PROFILES.values():
        assert p.n_slots == p.ring_dimension // 2
    ctx = sim_context(ciphertext_bytes=512 * KIB)
    assert ctx.evaluator().size_bytes(ctx.encrypt(np.zeros(8))) == 512 * KIB


def test_scheme_params_validation():
    with pytest.raises(ValueError):
        SchemeParams(12, 1, 10)
    with pytest.raises(ValueError):
        SchemeParams(16, 3, 10)
    with pytest.raises(ValueError):
        SchemeParams(16, 1, 0)
    with pytest.raises(ValueError):
        profile("nope")


def test_serialisation_and_public_rebuild(sim):
    ctx, ev = sim
    ct = ctx.encrypt(np.arange(8.0), Packing.WOP)
    payload = ev.serialize(ct)
    assert payload[0] == int(Packing.WOP) and payload[1] == 1 and len(payload) == 2 + 8 * 8
    server = evaluator_from_public("sim", ev.export_public())
    back = server.deserialize(payload)
    assert back.tag == Packing.WOP and np.array_equal(ctx.decrypt(back), np.arange(8.0))
    assert not hasattr(server, "decrypt")
    buf = frame(payload)
    assert unframe(buf) == (payload, len(buf))
    with pytest.raises(ValueError):
        unframe(buf[:-1])


def test_counters_replay():
    ctx = sim_context()
    ev = ctx.evaluator()
    ev.counters.log = []
    a = ctx.encrypt(np.ones(8))
    ev.rotate(ev.add(ev.mul(a, a), a), 1)
    assert (ev.counters.n_add, ev.counters.n_mul, ev.counters.n_rotate) == (1, 1, 1)
    assert OpCounters.replay(ev.counters.log).same_counts(ev.counters)
    assert ev.counters.bytes_produced == 3 * 1024


ops = st.lists(st.tuples(st.sampled_from(["add", "sub", "mul", "rot"]), st.integers(0, 7), st.integers(0, 7)),
               max_size=12)


@given(ops, st.integers(0, 2**32 - 1))
def test_simulator_matches_plaintext_bit_exactly(program, seed):
    rng = np.random.default_rng(seed)
    ctx = sim_context(mult_depth=2)
    ev = ctx.evaluator()
    plain = [rng.uniform(-10, 10, 8) for _ in range(3)]
    cts = [ctx.encrypt(p) for p in plain]
    for op, i, k in program:
        i %= len(plain)
        j = (i + 1) % len(plain)
        if op == "add":
            plain.append(plain[i] + plain[j])
            cts.append(ev.add(cts[i], cts[j]))
        elif op == "sub":
            plain.append(plain[i] - plain[j])
            cts.append(ev.sub(cts[i], cts[j]))
        elif op == "mul":
            if cts[i].depth < 1 or cts[j].depth < 1:
                continue
            plain.append(plain[i] * plain[j])
            cts.append(ev.mul(cts[i], cts[j]))
            assert cts[-1].depth == min(cts[i].depth, cts[j].depth) - 1
        else:
            plain.append(np.roll(plain[i], -k))
            cts.append(ev.rotate(cts[i], k))
            assert cts[-1].depth == cts[i].depth
    for p, c in zip(plain, cts):
        assert np.array_equal(ctx.decrypt(c), p)
