"""Slotted homomorphic vector backends: an exact simulator and a toy CKKS."""

from .base import (
    KIB,
    MIB,
    PROFILES,
    BackendMismatchError,
    Ciphertext,
    DepthExhaustedError,
    Evaluator,
    HEError,
    KeyHandle,
    OpCounters,
    Packing,
    RotationKeyError,
    SchemeParams,
    SecretContext,
    UnknownKeyError,
    frame,
    profile,
    unframe,
)
from .simulator import SimulatorContext, SimulatorEvaluator

__all__ = [
    "KIB", "MIB", "PROFILES", "BackendMismatchError", "Ciphertext", "DepthExhaustedError",
    "Evaluator", "HEError", "KeyHandle", "OpCounters", "Packing", "RotationKeyError",
    "SchemeParams", "SecretContext", "UnknownKeyError", "frame", "profile", "unframe",
    "SimulatorContext", "SimulatorEvaluator", "evaluator_from_public",
]


def evaluator_from_public(backend: str, blob: bytes) -> Evaluator:
    """Rebuild a server-side evaluator from exported public material."""
    if backend == "sim":
        return SimulatorEvaluator.from_public(blob)
    if backend == "ckks-toy":
        from .ckks import CkksEvaluator

        return CkksEvaluator.from_public(blob)
    raise ValueError(f"unknown backend {backend!r}")
