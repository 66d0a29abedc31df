"""Codebook generation, database encoding and IVF indexing building blocks.

The functions here are the two halves of each protocol step (server-side
ciphertext work, client-side decrypt/assign/pack) plus the plaintext parts.
:mod:`artifact.protocol` wires them into message exchanges.
"""

from .encoding import assign_code, mse, reconstruct
from .indexing import build_ivf, pqkmeans
from .reference import PlainIVFPQ
from .types import Codebook, EncodedDatabase, InterCodeTables, IVFIndex

__all__ = [
    "Codebook", "EncodedDatabase", "InterCodeTables", "IVFIndex", "PlainIVFPQ",
    "assign_code", "build_ivf", "mse", "pqkmeans", "reconstruct",
]
