import inspect

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.he import Evaluator, Packing, SecretContext
from artifact.packing import layout_counts
from artifact.pipeline import PlainIVFPQ
from artifact.protocol import (Endpoint, KeyMisuseError, LoopbackChannel, Message, ProtocolError, ReplayChannel,
                               ServerRole, Session, SessionConfig, Step, StepFailed, VersionMismatch, assert_traffic,
                               decode, encode, run_step)
from artifact.protocol.messages import HEADER, MAGIC
from artifact.search import SearchParams
from artifact.secdist import rotation_steps

from conftest import sim_context

RING = 256
B_C = 4096


def small_data(seed=0, n=120, d=10, n_q=6):
    rng = np.random.default_rng(seed)
    centres = rng.integers(0, 200, (6, d))
    base = (centres[rng.integers(0, 6, n)] + rng.integers(-8, 9, (n, d))).astype(float)
    queries = (centres[rng.integers(0, 6, n_q)] + rng.integers(-8, 9, (n_q, d))).astype(float)
    return base, queries


def run_session(transport="loopback", record_path=None, metric="euclidean", seed=3):
    base, queries = small_data()
    layout = layout_counts(RING, 10, 3, 4, n_rs=60)
    ctx = sim_context(RING, 1, B_C, rotation_steps([layout.d_s]), seed=seed)
    with Session(ctx, layout, metric, SessionConfig(transport, timeout=30, record_path=record_path),
                 session_id="fixed") as s:
        s.open()
        codebook = s.train_codebook(base, n_k=10, seed=seed)
        encoded = s.encode(base, batch=32)
        index = s.index(n_i=5, n_nb=2, seed=seed)
        results = s.search(queries, SearchParams(l=5, l_c=2))
    return dict(session=s, layout=layout, codebook=codebook, encoded=encoded, index=index, results=results,
                base=base, queries=queries)


@pytest.fixture(scope="module")
def loopback_run():
    return run_session()


def test_session_matches_plain_reference(loopback_run):
    r = loopback_run
    ref = PlainIVFPQ(3, 4, n_rs=60, n_k=10, n_i=5, n_nb=2, seed=3).fit(r["base"], r["base"])
    assert np.array_equal(r["codebook"].centroids, ref.codebook)
    assert np.array_equal(r["encoded"].codes, ref.codes)
    assert np.array_equal(r["index"].centers, ref.centers)
    assert np.array_equal(r["index"].assignments, ref.assignments)
    want = ref.search(r["queries"], l=5, l_c=2)
    assert all(np.array_equal(a.ids, b) for a, b in zip(r["results"], want))
    assert r["session"].step_log == ["session-init", "codebook-generation", "database-encoding",
                                     "database-indexing", "search"]


def test_traffic_closed_forms(loopback_run):
    r = loopback_run
    L = r["layout"]
    ledger = r["session"].client_ledger
    checks = assert_traffic(ledger, L, B_C, n_data=len(r["base"]), n_queries=len(r["queries"]), n_k=10,
                            indexed=True)
    assert all(c.ok for c in checks), [c.line() for c in checks]
    assert ledger["EncodeCiphertexts"].ciphertext_bytes == L.n_wop * B_C * len(r["base"])
    # conversion: SDRP codebooks up, WOP and WRP codebooks back
    converted = (ledger["ConvertRequest"].ciphertexts + ledger["ConvertReply"].ciphertexts
                 + ledger["ConvertReply.wrp"].ciphertexts)
    assert converted == L.n_sdrp * L.n_s + L.n_wop + L.n_wrp
    assert ledger["QueryTableReply"].ciphertexts == 0 and ledger["QueryTableReply"].plaintext_bytes > 0
    assert r["session"].client_ledger.same_traffic(r["session"].server_ledger)


def test_tcp_matches_loopback(loopback_run):
    tcp = run_session("tcp")
    assert tcp["session"].client_ledger.same_traffic(loopback_run["session"].client_ledger)
    assert np.array_equal(tcp["encoded"].codes, loopback_run["encoded"].codes)


def test_replay_reproduces_server_outputs(tmp_path, loopback_run):
    path = tmp_path / "server.log"
    live = run_session(record_path=str(path))
    server = ServerRole(Endpoint(ReplayChannel(path), "fixed"))
    server.accept()
    server.train_codebook(10)
    encoded = server.encode(len(live["base"]))
    index = server.build_index(5, 2, seed=3)
    results = server.serve_queries(len(live["queries"]), SearchParams(l=5, l_c=2))
    assert server.endpoint.channel.exhausted
    assert np.array_equal(encoded.codes, live["encoded"].codes)
    assert np.array_equal(index.assignments, live["index"].assignments)
    assert all(np.array_equal(a.ids, b.ids) for a, b in zip(results, live["results"]))


def test_inner_product_session_runs():
    r = run_session(metric="inner_product")
    ref = PlainIVFPQ(3, 4, "inner_product", n_rs=60, n_k=10, n_i=5, n_nb=2, seed=3).fit(r["base"], r["base"])
    assert np.array_equal(r["encoded"].codes, ref.codes)


def test_server_role_has_no_decryption():
    for cls in (ServerRole, Evaluator):
        names = {n for n, _ in inspect.getmembers(cls)}
        assert not names & {"decrypt", "secret_key", "_s"}
    ctx = sim_context()
    with pytest.raises(KeyMisuseError):
        ServerRole(ctx)
    ep = Endpoint(LoopbackChannel.pair()[0], "x")
    ep.evaluator = ctx
    with pytest.raises(KeyMisuseError):
        ServerRole(ep)
    assert not isinstance(ctx.evaluator(), SecretContext)


ascii_text = st.text(st.characters(min_codepoint=32, max_codepoint=126), max_size=20)
arrays = st.builds(lambda shape, seed, kind: np.random.default_rng(seed).normal(size=shape).astype(kind),
                   st.lists(st.integers(0, 4), max_size=3), st.integers(0, 99), st.sampled_from(["f8", "f4", "i8"]))


@given(st.sampled_from(list(Step)), ascii_text, st.dictionaries(ascii_text, st.integers(-5, 5), max_size=3),
       st.lists(arrays, max_size=3), st.lists(st.binary(max_size=40), max_size=2),
       st.lists(st.lists(st.floats(-1e6, 1e6), min_size=8, max_size=8), max_size=3))
def test_message_round_trip(step, session_id, meta, arrs, blobs, cts):
    ctx = sim_context()
    ev = ctx.evaluator()
    meta = {k: v for k, v in meta.items() if k not in ("session_id", "account")}
    cipher = [ctx.encrypt(v, Packing.WOP) for v in cts]
    msg = Message(step, session_id, meta, cipher, arrs, blobs)
    enc = encode(msg, ev)
    back = decode(enc.data, ev)
    assert (back.step, back.session_id, back.meta, back.blobs) == (step, session_id, meta, blobs)
    assert all(np.array_equal(a, b) and a.dtype == b.dtype for a, b in zip(arrs, back.arrays))
    assert [ctx.decrypt(c).tolist() for c in back.ciphertexts] == [ctx.decrypt(c).tolist() for c in cipher]
    assert back.stats.ciphertext_frames == len(cts)


def test_malformed_messages():
    ev = sim_context().evaluator()
    data = encode(Message(Step.SessionInit, "s"), ev).data
    with pytest.raises(ProtocolError):
        decode(data[:5])
    with pytest.raises(ProtocolError):
        decode(b"X" * 8 + data[8:])
    with pytest.raises(VersionMismatch):
        decode(MAGIC + bytes([99]) + data[9:])
    with pytest.raises(ProtocolError):
        decode(data + b"\x00")
    with pytest.raises(ProtocolError):
        decode(HEADER.pack(MAGIC, 1, 0, 0))
    with pytest.raises(ProtocolError):
        encode(Message(Step.QueryCiphertexts, "s", ciphertexts=[sim_context().encrypt(np.zeros(8))]))


def test_step_failure_is_tagged_and_unblocks():
    a, b = LoopbackChannel.pair(timeout=5)

    def server():
        b.recv()

    def client():
        raise RuntimeError("boom")

    with pytest.raises(StepFailed) as info:
        run_step("search", client, server, (a, b))
    assert info.value.step == "search" and info.value.side == "client"


def test_session_id_is_checked():
    a, b = LoopbackChannel.pair(timeout=5)
    ev = sim_context().evaluator()
    sender, receiver = Endpoint(a, "one"), Endpoint(b, "two")
    sender.evaluator = receiver.evaluator = ev
    sender.send(Step.QueryResult)
    with pytest.raises(ProtocolError):
        receiver.recv()
