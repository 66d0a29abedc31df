"""Two-role session driver.

Every step runs the server half on a worker thread and the client half on
the calling thread, over a loopback queue pair or a real localhost TCP
socket. If either half raises, both channel ends are closed so the other
half unblocks, and the first error is re-raised tagged with the step name.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass

import numpy as np

from ..he import SecretContext
from ..packing import PQLayout
from ..search import SearchParams
from .ledger import TrafficLedger
from .roles import ClientRole, Endpoint, ServerRole
from .transport import LoopbackChannel, RecordingChannel, socket_pair


class StepFailed(RuntimeError):
    def __init__(self, step: str, side: str, error: BaseException):
        super().__init__(f"{step} failed on the {side} side: {error!r}")
        self.step = step
        self.side = side
        self.error = error


def run_step(name: str, client_call, server_call, channels=()):
    """Run both halves concurrently; returns (client_result, server_result)."""
    out = {}
    errors = []

    def server():
        try:
            out["server"] = server_call()
        except BaseException as exc:  # noqa: BLE001 - re-raised on the caller's thread
            errors.append(("server", exc))
            for ch in channels:
                ch.close()

    t = threading.Thread(target=server, name=f"server-{name}", daemon=True)
    t.start()
    try:
        out["client"] = client_call()
    except BaseException as exc:  # noqa: BLE001
        errors.append(("client", exc))
        for ch in channels:
            ch.close()
    t.join()
    if errors:
        # the first failure is the cause; the other side usually just saw the channel close
        side, exc = errors[0]
        raise StepFailed(name, side, exc) from exc
    return out.get("client"), out.get("server")


@dataclass
class SessionConfig:
    transport: str = "loopback"   # or "tcp"
    timeout: float | None = 600.0
    workers: int = 1
    record_path: str | None = None


class Session:
    """One client, one server, one ordered message stream."""

    def __init__(self, ctx: SecretContext, layout: PQLayout, metric: str = "euclidean",
                 config: SessionConfig | None = None, session_id: str | None = None):
        self.config = config or SessionConfig()
        self.session_id = session_id or uuid.uuid4().hex
        if self.config.transport == "loopback":
            c_ch, s_ch = LoopbackChannel.pair(self.config.timeout)
        elif self.config.transport == "tcp":
            c_ch, s_ch = socket_pair(self.config.timeout)
        else:
            raise ValueError(f"unknown transport {self.config.transport!r}")
        if self.config.record_path:
            s_ch = RecordingChannel(s_ch, self.config.record_path)
        self.channels = (c_ch, s_ch)
        self.client = ClientRole(ctx, Endpoint(c_ch, self.session_id), layout, metric)
        self.server = ServerRole(Endpoint(s_ch, self.session_id), workers=self.config.workers)
        self.layout = layout
        self.step_log: list[str] = []

    @property
    def client_ledger(self) -> TrafficLedger:
        return self.client.endpoint.ledger

    @property
    def server_ledger(self) -> TrafficLedger:
        return self.server.endpoint.ledger

    def _run(self, name, client_call, server_call):
        self.step_log.append(name)
        return run_step(name, client_call, server_call, self.channels)

    def open(self) -> None:
        self._run("session-init", self.client.open, self.server.accept)

    def train_codebook(self, train: np.ndarray, n_k: int, seed: int = 0):
        codebook, _ = self._run("codebook-generation", lambda: self.client.train_codebook(train, seed),
                                lambda: self.server.train_codebook(n_k))
        return codebook

    def encode(self, base: np.ndarray, batch: int = 64):
        _, encoded = self._run("database-encoding", lambda: self.client.encode(base, batch),
                               lambda: self.server.encode(len(base)))
        return encoded

    def index(self, n_i: int, n_nb: int, iters: int = 20, seed: int = 0):
        _, index = self._run("database-indexing", self.client.index,
                             lambda: self.server.build_index(n_i, n_nb, iters, seed))
        return index

    def search(self, queries: np.ndarray, params: SearchParams):
        client_res, _ = self._run("search", lambda: self.client.query_many(queries),
                                  lambda: self.server.serve_queries(len(queries), params))
        return client_res

    def close(self) -> None:
        for ch in self.channels:
            ch.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
