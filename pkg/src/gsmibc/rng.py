"""Deterministic randomness for reproducible runs.

Every entity, scenario, and CLI command draws from a ``DetRng``: a SHA-256
counter-mode byte stream.  Same seed, same bytes, on any platform — which is
what makes transcripts and attack reports byte-identical across runs.
"""

from __future__ import annotations

import hashlib


def _canonical_seed(seed: bytes | str | int) -> bytes:
    if isinstance(seed, bytes):
        return seed
    if isinstance(seed, str):
        return seed.encode("utf-8")
    if isinstance(seed, int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        return b"i:" + seed.to_bytes((seed.bit_length() + 7) // 8 or 1, "big")
    raise TypeError(f"unsupported seed type: {type(seed)!r}")


class DetRng:
    """SHA-256 counter-mode deterministic byte generator."""

    def __init__(self, seed: bytes | str | int):
        self._key = hashlib.sha256(b"GSMIBC-RNG" + _canonical_seed(seed)).digest()
        self._counter = 0
        self._buffer = b""

    def take(self, n: int) -> bytes:
        """Return the next ``n`` bytes of the stream."""
        if n < 0:
            raise ValueError("n must be non-negative")
        while len(self._buffer) < n:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def uniform_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        nbits = bound.bit_length()
        nbytes = (nbits + 7) // 8
        mask = (1 << nbits) - 1
        while True:
            candidate = int.from_bytes(self.take(nbytes), "big") & mask
            if candidate < bound:
                return candidate

    def scalar(self, q: int) -> int:
        """Uniform integer in [1, q-1]."""
        if q < 2:
            raise ValueError("q must be at least 2")
        return 1 + self.uniform_below(q - 1)

    def coin(self) -> int:
        """Fair bit."""
        return self.take(1)[0] & 1

    def fork(self, label: str) -> "DetRng":
        """Independent child stream; does not disturb this stream."""
        return DetRng(self._key + b"/" + label.encode("utf-8"))
