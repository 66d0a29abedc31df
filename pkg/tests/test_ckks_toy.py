import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.he import DepthExhaustedError, Packing, RotationKeyError, evaluator_from_public
from artifact.he.ckks import CkksContext, ScaleOverflowError, ToyParams
from artifact.he.ckks import ntt
from artifact.he.ckks.encoding import SlotEncoder
from artifact.secdist import he_inner_product, he_sq_euclidean


def small_context(n=64, depth=1, steps=(), seed=0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return CkksContext(ToyParams(n, depth), rotation_steps=steps, seed=seed)


def negacyclic_product(a, b, q):
    n = len(a)
    out = [0] * n
    for i in range(n):
        for j in range(n):
            k = i + j
            term = int(a[i]) * int(b[j])
            if k >= n:
                out[k - n] -= term
            else:
                out[k] += term
    return np.array([x % q for x in out], dtype=np.int64)


def test_construction_warns():
    with pytest.warns(RuntimeWarning, match="NOT secure"):
        CkksContext(ToyParams(16, 1))


def test_modulus_chain_is_ntt_friendly():
    for depth in (1, 2):
        p = ToyParams(1024, depth)
        assert len(p.rescale_primes) == depth and len(p.base_primes) == 2
        assert len(set(p.all_primes)) == len(p.all_primes)
        for q in p.all_primes:
            assert ntt.is_prime(q) and q % 2048 == 1 and q < 2**31
        for q in p.rescale_primes:
            assert abs(q - 2**30) < 2**22


def test_bad_params():
    with pytest.raises(ValueError):
        ToyParams(100, 1)
    with pytest.raises(ValueError):
        ToyParams(64, 0)
    with pytest.raises(ValueError):
        ToyParams(64, 1, base_primes=(7,), rescale_primes=(11,), special_prime=13)


@pytest.mark.parametrize("n", [8, 16, 64])
def test_ntt_multiplies_negacyclically(n):
    q = ntt.find_primes(n, 31, 1)[0]
    tables = ntt.NTTTables.build([q], n)
    rng = np.random.default_rng(n)
    a = rng.integers(0, q, (1, n))
    b = rng.integers(0, q, (1, n))
    fa, fb = ntt.forward(a, tables), ntt.forward(b, tables)
    assert np.array_equal(ntt.inverse(fa, tables), a)
    prod = ntt.inverse(fa * fb % q, tables)
    assert np.array_equal(prod[0], negacyclic_product(a[0], b[0], q))


@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=32))
def test_encode_round_trip(values):
    enc = SlotEncoder(64)
    v = np.zeros(32)
    v[:len(values)] = values
    back = enc.decode(enc.encode(v, 2.0**30).astype(np.float64), 2.0**30)
    assert np.max(np.abs(back - v)) <= 1e-6 * max(1.0, np.max(np.abs(v)))


def test_round_trip_and_add(ckks, rng):
    ctx, ev = ckks
    a, b = rng.uniform(-1, 1, ctx.n_slots), rng.uniform(-1, 1, ctx.n_slots)
    ca, cb = ctx.encrypt(a), ctx.encrypt(b)
    err_a = np.max(np.abs(ctx.decrypt(ca) - a))
    err_b = np.max(np.abs(ctx.decrypt(cb) - b))
    assert err_a <= 1e-4 and err_b <= 1e-4
    err_sum = np.max(np.abs(ctx.decrypt(ev.add(ca, cb)) - (a + b)))
    assert err_sum <= 2 * max(err_a, err_b) * (1 + 1e-9) + 1e-12
    assert np.max(np.abs(ctx.decrypt(ev.sub(ca, cb)) - (a - b))) <= 2 * max(err_a, err_b) + 1e-12


def test_zero_encrypts_to_near_zero(ckks):
    ctx, _ = ckks
    assert np.max(np.abs(ctx.decrypt(ctx.encrypt(np.zeros(ctx.n_slots))))) < 1e-5


def test_mul_and_mul_plain(ckks, rng):
    ctx, ev = ckks
    a, b = rng.uniform(-4, 4, ctx.n_slots), rng.uniform(-4, 4, ctx.n_slots)
    ca, cb = ctx.encrypt(a), ctx.encrypt(b)
    prod = ev.mul(ca, cb)
    assert prod.depth == 0
    assert np.max(np.abs(ctx.decrypt(prod) - a * b)) < 1e-3
    assert np.max(np.abs(ctx.decrypt(ev.mul_plain(ca, b)) - a * b)) < 1e-3
    with pytest.raises(DepthExhaustedError):
        ev.mul(prod, prod)


def test_depth_two_chain():
    ctx = small_context(64, 2)
    ev = ctx.evaluator()
    v = np.linspace(-2, 2, 32)
    c = ctx.encrypt(v)
    sq = ev.mul(c, c)
    cube = ev.mul(sq, c)
    assert (sq.depth, cube.depth) == (1, 0)
    assert np.max(np.abs(ctx.decrypt(cube) - v**3)) < 1e-3
    with pytest.raises(DepthExhaustedError):
        ev.mul(cube, c)


def test_overflow_is_an_error():
    ctx = small_context()
    with pytest.raises(ScaleOverflowError):
        ctx.encrypt(np.full(32, 1e12))
    ev = ctx.evaluator()
    big = ctx.encrypt(np.full(32, 3e6))
    with pytest.raises(ScaleOverflowError):
        ev.mul(big, big)


def test_rotation(ckks, rng):
    ctx, ev = ckks
    v = rng.uniform(-1, 1, ctx.n_slots)
    c = ctx.encrypt(v)
    for k in (1, 5, 32):
        assert np.max(np.abs(ctx.decrypt(ev.rotate(c, k)) - np.roll(v, -k))) < 1e-4
    twice = ev.rotate(ev.rotate(c, 3), 7)
    once = ev.rotate(c, 10)
    assert np.max(np.abs(ctx.decrypt(twice) - ctx.decrypt(once))) < 1e-4
    assert np.max(np.abs(ctx.decrypt(ev.rotate(c, 0)) - v)) < 1e-4
    with pytest.raises(RotationKeyError):
        ev.rotate(c, 100)


def test_serialisation_and_public_evaluator(ckks, rng):
    ctx, ev = ckks
    v = rng.uniform(-1, 1, ctx.n_slots)
    c = ctx.encrypt(v, Packing.WRP)
    payload = ev.serialize(c)
    rows = len(ctx.toy.modulus_chain)
    assert len(payload) == ev.size_bytes(c) and ev.size_bytes(c) > 2 * rows * ctx.ring.n * 4
    server = evaluator_from_public("ckks-toy", ev.export_public())
    assert not hasattr(server, "decrypt") and not hasattr(server, "_s")
    back = server.deserialize(payload)
    assert back.tag == Packing.WRP
    moved = server.rotate(server.mul(back, back), 2)
    assert np.max(np.abs(ctx.decrypt(moved) - np.roll(v * v, -2))) < 1e-3
    assert ev.size_bytes(moved) < ev.size_bytes(c)


def test_distance_kernels_on_ckks(ckks):
    ctx, ev = ckks
    op = np.zeros(ctx.n_slots)
    rp = np.zeros(ctx.n_slots)
    op[:4] = [1, 2, 3, 4]
    rp[:4] = [1, 1, 1, 1]
    sq = ctx.decrypt(he_sq_euclidean(ev, ctx.encrypt(op), ctx.encrypt(rp), 2))
    ip = ctx.decrypt(he_inner_product(ev, ctx.encrypt(op), ctx.encrypt(rp), 2))
    assert np.allclose(sq[[0, 2]], [1, 13], atol=1e-3)
    assert np.allclose(ip[[0, 2]], [3, 7], atol=1e-3)


def test_small_ring_random_blocks():
    ctx = small_context(64, 1, steps=range(1, 32), seed=5)
    ev = ctx.evaluator()
    rng = np.random.default_rng(0)
    for d_s in (1, 3, 8, 16):
        n_blocks = 32 // d_s
        a = np.zeros(32)
        b = np.zeros(32)
        a[:n_blocks * d_s] = rng.uniform(0, 255, n_blocks * d_s)
        b[:n_blocks * d_s] = rng.uniform(0, 255, n_blocks * d_s)
        out = ctx.decrypt(he_sq_euclidean(ev, ctx.encrypt(a), ctx.encrypt(b), d_s))
        want = ((a - b)[:n_blocks * d_s].reshape(n_blocks, d_s) ** 2).sum(axis=1)
        got = out[np.arange(n_blocks) * d_s]
        assert np.all(np.abs(got - want) <= 1e-3 * np.maximum(1.0, want))
