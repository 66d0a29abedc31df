"""Client/server message passing for every pipeline step, with traffic accounting."""

from .ledger import TrafficCheck, TrafficLedger, assert_traffic
from .messages import Message, ProtocolError, Step, VersionMismatch, decode, encode
from .roles import ClientRole, Endpoint, KeyMisuseError, ServerRole
from .session import Session, SessionConfig, StepFailed, run_step
from .transport import (
    Channel,
    ChannelClosed,
    Listener,
    LoopbackChannel,
    RecordingChannel,
    ReplayChannel,
    SocketChannel,
    TransportError,
    socket_pair,
)

__all__ = [
    "Channel", "ChannelClosed", "ClientRole", "Endpoint", "KeyMisuseError", "Listener", "LoopbackChannel",
    "Message", "ProtocolError", "RecordingChannel", "ReplayChannel", "ServerRole", "Session", "SessionConfig",
    "SocketChannel", "Step", "StepFailed", "TrafficCheck", "TrafficLedger", "TransportError", "VersionMismatch",
    "assert_traffic", "decode", "encode", "run_step", "socket_pair",
]
