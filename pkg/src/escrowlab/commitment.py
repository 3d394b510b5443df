"""Hash commitments over a single choice bit.

A commitment is ``SHA-256(choice_byte || nonce)`` with a 32-byte nonce.
Nonces are drawn from a seeded :class:`random.Random` so that every
scenario is reproducible.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .errors import InvalidChoice

NONCE_SIZE = 32


@dataclass(frozen=True)
class Commitment:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("commitment digest must be 32 bytes")

    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def fromhex(cls, text: str) -> Commitment:
        return cls(bytes.fromhex(text))


def new_nonce(rng: random.Random) -> bytes:
    return rng.randbytes(NONCE_SIZE)


def encode(choice: int, nonce: bytes) -> bytes:
    if choice not in (0, 1) or isinstance(choice, bool):
        raise InvalidChoice(f"choice must be 0 or 1, got {choice!r}")
    if len(nonce) != NONCE_SIZE:
        raise ValueError(f"nonce must be {NONCE_SIZE} bytes")
    return bytes([choice]) + bytes(nonce)


def commit(choice: int, nonce: bytes) -> Commitment:
    """Commit to ``choice`` under ``nonce``.

    Raises:
        InvalidChoice: if ``choice`` is not 0 or 1.
    """
    return Commitment(hashlib.sha256(encode(choice, nonce)).digest())


def verify(choice: int, nonce: bytes, c: Commitment) -> bool:
    """True iff ``(choice, nonce)`` opens ``c``. Malformed openings never verify."""
    try:
        return commit(choice, nonce) == c
    except (InvalidChoice, ValueError, TypeError):
        return False
