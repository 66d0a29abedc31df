"""Client and server roles.

The client owns the :class:`SecretContext` and the raw vectors. The server
is built from an endpoint alone and reconstructs an :class:`Evaluator` from
the public material sent in ``SessionInit``; it never holds anything that
can decrypt. Each role method is one side of a protocol step and is meant
to run concurrently with the matching method of the other role.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import packing, seeding
from ..he import Evaluator, SecretContext, evaluator_from_public
from ..he.base import Packing
from ..packing import PQLayout
from ..pipeline import encoding, indexing, kmeans
from ..pipeline.types import Codebook, EncodedDatabase, InterCodeTables
from ..search import SearchParams, SearchResult, SubDistanceTable, ivf_search
from . import messages
from .ledger import TrafficLedger
from .messages import Message, ProtocolError, Step
from .transport import Channel


class KeyMisuseError(TypeError):
    """Secret key material handed to the server role."""


class Endpoint:
    """Channel + codec + ledger for one side of a session."""

    def __init__(self, channel: Channel, session_id: str, ledger: TrafficLedger | None = None):
        self.channel = channel
        self.session_id = session_id
        self.ledger = ledger if ledger is not None else TrafficLedger()
        self.evaluator: Evaluator | None = None
        self.wait_seconds = 0.0

    def send(self, step: Step, *, meta=None, ciphertexts=(), arrays=(), blobs=(), account=None) -> None:
        msg = Message(step, self.session_id, dict(meta or {}), list(ciphertexts), list(arrays), list(blobs), account)
        enc = messages.encode(msg, self.evaluator)
        self.channel.send(enc.data)
        self._account(msg, enc, sent=True)

    def _account(self, msg: Message, enc: messages.Encoded, sent: bool) -> None:
        ct_bytes = sum(self.evaluator.size_bytes(c) for c in msg.ciphertexts) if msg.ciphertexts else 0
        self.ledger.record(msg.bucket, sent=sent, n_ciphertexts=len(msg.ciphertexts), ciphertext_bytes=ct_bytes,
                           plaintext_bytes=enc.plaintext_bytes, key_bytes=enc.blob_bytes, wire_bytes=len(enc.data))

    def recv(self, *expected: Step) -> Message:
        t0 = time.perf_counter()
        data = self.channel.recv()
        self.wait_seconds += time.perf_counter() - t0
        msg = messages.decode(data, self.evaluator)
        if msg.session_id != self.session_id:
            raise ProtocolError(f"message for session {msg.session_id!r}, expected {self.session_id!r}")
        if msg.step == Step.Abort:
            raise ProtocolError(f"peer aborted: {msg.meta.get('reason', '')}")
        if expected and msg.step not in expected:
            raise ProtocolError(f"expected {[s.name for s in expected]}, got {msg.step.name}")
        self._account(msg, msg.stats, sent=False)
        return msg

    def abort(self, reason: str) -> None:
        try:
            self.send(Step.Abort, meta={"reason": reason})
        except Exception:
            pass


def _timed(method):
    def wrapper(self, *args, **kwargs):
        t0 = time.perf_counter()
        w0 = self.endpoint.wait_seconds
        try:
            return method(self, *args, **kwargs)
        finally:
            busy = time.perf_counter() - t0 - (self.endpoint.wait_seconds - w0)
            self.busy_seconds[method.__name__] = self.busy_seconds.get(method.__name__, 0.0) + busy
    wrapper.__name__ = method.__name__
    wrapper.__doc__ = method.__doc__
    return wrapper


class ClientRole:
    def __init__(self, ctx: SecretContext, endpoint: Endpoint, layout: PQLayout, metric: str = "euclidean"):
        self.ctx = ctx
        self.endpoint = endpoint
        self.layout = layout
        self.metric = metric
        self.codebook: Codebook | None = None
        self.busy_seconds: dict[str, float] = {}
        endpoint.evaluator = ctx.evaluator()

    @_timed
    def open(self) -> None:
        ev = self.endpoint.evaluator
        self.endpoint.send(Step.SessionInit, meta={"backend": ev.backend, "layout": self.layout.to_json(),
                                                    "metric": self.metric}, blobs=[ev.export_public()])

    @_timed
    def train_codebook(self, train: np.ndarray, seed: int = 0) -> Codebook:
        L = self.layout
        ep = self.endpoint
        rows = seeding.training_sample(seed, len(train), L.n_rs)
        blocks = packing.subdivide(np.asarray(train)[rows], L)
        for s in range(L.n_s):
            samples = blocks[:, s, :]
            init = samples[seeding.kmeans_init(seed, s, L.n_rs, L.n_c)]
            ep.send(Step.KMeansInit, meta={"subspace": s},
                    ciphertexts=kmeans.encrypt_sdop(self.ctx, samples, L) + kmeans.encrypt_sdrp(self.ctx, init, L))
            while True:
                msg = ep.recv(Step.KMeansDistances, Step.KMeansDone)
                if msg.step == Step.KMeansDone:
                    break
                dist = kmeans.decrypt_distances(self.ctx, msg.ciphertexts, L, L.n_rs, L.n_c)
                labels, centroids = kmeans.client_step(dist, samples, L.n_c)
                ep.send(Step.KMeansUpdate, meta={"subspace": s},
                        ciphertexts=kmeans.encrypt_sdrp(self.ctx, centroids, L), arrays=[labels])
        return self._convert()

    def _convert(self) -> Codebook:
        """Decrypt the trained SDRP codebooks and send them back as WOP and WRP."""
        L = self.layout
        msg = self.endpoint.recv(Step.ConvertRequest)
        if len(msg.ciphertexts) != L.n_s * L.n_c:
            raise ProtocolError("ConvertRequest carries the wrong number of ciphertexts")
        cents = np.stack([self.ctx.decrypt(c)[:L.d_s] for c in msg.ciphertexts]).reshape(L.n_s, L.n_c, L.d_s)
        self.codebook = Codebook(cents, self.metric)
        wop = [self.ctx.encrypt(v, Packing.WOP) for v in packing.pack_wop(cents, L)]
        wrp = [self.ctx.encrypt(v, Packing.WRP) for v in packing.pack_codebook_wrp(cents, L).reshape(-1, L.n_slots)]
        self.endpoint.send(Step.ConvertReply, meta={"part": "wop"}, ciphertexts=wop)
        self.endpoint.send(Step.ConvertReply, meta={"part": "wrp"}, ciphertexts=wrp, account="ConvertReply.wrp")
        return self.codebook

    @_timed
    def encode(self, data: np.ndarray, batch: int = 64) -> None:
        data = np.asarray(data, dtype=np.float64)
        L = self.layout
        for lo in range(0, len(data), batch):
            chunk = data[lo:lo + batch]
            cts = [ct for x in chunk for ct in encoding.encrypt_wrp(self.ctx, x, L)]
            self.endpoint.send(Step.EncodeCiphertexts, meta={"count": len(chunk)}, ciphertexts=cts)
            msg = self.endpoint.recv(Step.EncodeDistances)
            tables = np.stack([encoding.decrypt_table(self.ctx, msg.ciphertexts[i * L.n_wop:(i + 1) * L.n_wop], L)
                               for i in range(len(chunk))])
            self.endpoint.send(Step.EncodeTableReply, arrays=[tables])

    @_timed
    def index(self) -> None:
        msg = self.endpoint.recv(Step.IndexDistances)
        tables = indexing.decrypt_inter_code(self.ctx, msg.ciphertexts, self.layout)
        self.endpoint.send(Step.IndexTableReply, arrays=[tables])

    @_timed
    def query(self, q: np.ndarray) -> SearchResult:
        L = self.layout
        self.endpoint.send(Step.QueryCiphertexts, ciphertexts=encoding.encrypt_wrp(self.ctx, q, L))
        msg = self.endpoint.recv(Step.QueryDistances)
        table = encoding.decrypt_table(self.ctx, msg.ciphertexts, L)
        self.endpoint.send(Step.QueryTableReply, arrays=[table])
        res = self.endpoint.recv(Step.QueryResult)
        return SearchResult(res.arrays[0], res.arrays[1], bool(res.meta["short"]))

    def query_many(self, queries) -> list:
        return [self.query(q) for q in np.asarray(queries, dtype=np.float64)]


class ServerRole:
    """Blind side: ciphertext arithmetic, labels, codes and the IVF index only."""

    def __init__(self, endpoint: Endpoint, workers: int = 1):
        if isinstance(endpoint, SecretContext) or isinstance(getattr(endpoint, "evaluator", None), SecretContext):
            raise KeyMisuseError("the server role must not be given secret key material")
        self.endpoint = endpoint
        self.workers = workers
        self.layout: PQLayout | None = None
        self.metric = "euclidean"
        self.kmeans_rounds: list[int] = []
        self.sdrp: list = []
        self.wop: list = []
        self.wrp_by_code: list = []
        self.encoded: EncodedDatabase | None = None
        self.tables: InterCodeTables | None = None
        self.index_ = None
        self.busy_seconds: dict[str, float] = {}

    @property
    def evaluator(self) -> Evaluator:
        return self.endpoint.evaluator

    @_timed
    def accept(self) -> None:
        msg = self.endpoint.recv(Step.SessionInit)
        ev = evaluator_from_public(msg.meta["backend"], msg.blobs[0])
        if isinstance(ev, SecretContext) or hasattr(ev, "decrypt"):
            raise KeyMisuseError("public material unexpectedly carries a decryptor")
        self.endpoint.evaluator = ev
        self.layout = PQLayout.from_json(msg.meta["layout"])
        self.metric = msg.meta["metric"]

    def _map(self, fn, items):
        if self.workers <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.workers) as pool:
            return list(pool.map(fn, items))

    @_timed
    def train_codebook(self, n_k: int) -> None:
        L, ep, ev = self.layout, self.endpoint, self.evaluator
        self.kmeans_rounds = []
        self.sdrp = []
        for s in range(L.n_s):
            msg = ep.recv(Step.KMeansInit)
            sdop, sdrp = msg.ciphertexts[:L.n_sdop], msg.ciphertexts[L.n_sdop:]
            previous, current = kmeans.initial_labels(L.n_rs)
            rounds = 0
            for _ in range(n_k):
                if kmeans.labels_settled(previous, current):
                    break
                previous = current
                dist = kmeans.server_distances(ev, sdop, sdrp, L.d_s)
                ep.send(Step.KMeansDistances, meta={"subspace": s}, ciphertexts=dist)
                upd = ep.recv(Step.KMeansUpdate)
                sdrp, current = upd.ciphertexts, upd.arrays[0]
                rounds += 1
            ep.send(Step.KMeansDone, meta={"subspace": s, "rounds": rounds})
            self.kmeans_rounds.append(rounds)
            self.sdrp.extend(sdrp)
        ep.send(Step.ConvertRequest, ciphertexts=self.sdrp)
        self.wop = ep.recv(Step.ConvertReply).ciphertexts
        wrp = ep.recv(Step.ConvertReply).ciphertexts
        self.wrp_by_code = [wrp[j * L.n_wop:(j + 1) * L.n_wop] for j in range(L.n_c)]

    @_timed
    def encode(self, n_data: int) -> EncodedDatabase:
        L, ep, ev = self.layout, self.endpoint, self.evaluator
        codes = []
        while sum(len(c) for c in codes) < n_data:
            msg = ep.recv(Step.EncodeCiphertexts)
            count = msg.meta["count"]
            per = [msg.ciphertexts[i * L.n_wop:(i + 1) * L.n_wop] for i in range(count)]
            dist = self._map(lambda wrp: encoding.server_table_distances(ev, wrp, self.wop, L.d_s, self.metric), per)
            ep.send(Step.EncodeDistances, ciphertexts=[c for d in dist for c in d])
            tables = ep.recv(Step.EncodeTableReply).arrays[0]
            codes.append(encoding.assign_code(tables, self.metric))
        self.encoded = EncodedDatabase(np.concatenate(codes) if codes else np.zeros((0, L.n_s), dtype=np.int64))
        return self.encoded

    @_timed
    def build_index(self, n_i: int, n_nb: int, iters: int = 20, seed: int = 0):
        L, ep, ev = self.layout, self.endpoint, self.evaluator
        dist = indexing.server_code_distances(ev, self.wop, self.wrp_by_code, L.d_s, self.metric)
        ep.send(Step.IndexDistances, ciphertexts=dist)
        self.tables = InterCodeTables(ep.recv(Step.IndexTableReply).arrays[0], self.metric)
        centers, _ = indexing.pqkmeans(self.encoded, self.tables, n_i, iters, seed)
        self.index_ = indexing.build_ivf(self.encoded, centers, self.tables, n_nb)
        return self.index_

    @_timed
    def serve_queries(self, n_queries: int, params: SearchParams) -> list:
        L, ep, ev = self.layout, self.endpoint, self.evaluator
        out = []
        for _ in range(n_queries):
            msg = ep.recv(Step.QueryCiphertexts)
            dist = encoding.server_table_distances(ev, msg.ciphertexts, self.wop, L.d_s, self.metric)
            ep.send(Step.QueryDistances, ciphertexts=dist)
            table = SubDistanceTable(ep.recv(Step.QueryTableReply).arrays[0], self.metric)
            res = ivf_search(table, self.index_, self.encoded, params)
            ep.send(Step.QueryResult, meta={"short": res.short}, arrays=[res.ids, res.scores])
            out.append(res)
        return out
