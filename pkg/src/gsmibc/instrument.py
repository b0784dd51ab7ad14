"""Operation counters for the cost claims about each entity.

The handshake promises that the mobile side performs exactly one scalar
multiplication and no pairing or encryption work.  Primitives report into
whatever counter is active on the current context, so an entity can meter
its own handler bodies without threading a counter through every call.
"""

from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass


@dataclass
class OpCounters:
    scalar_mul: int = 0
    pairing: int = 0
    ibe: int = 0
    ibs: int = 0
    map_to_point: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "scalar_mul": self.scalar_mul,
            "pairing": self.pairing,
            "ibe": self.ibe,
            "ibs": self.ibs,
            "map_to_point": self.map_to_point,
        }


_active: ContextVar[OpCounters | None] = ContextVar("gsmibc_op_counters", default=None)


def bump(op: str) -> None:
    counters = _active.get()
    if counters is not None:
        setattr(counters, op, getattr(counters, op) + 1)


@contextmanager
def counting(counters: OpCounters):
    """Route primitive-operation bumps into ``counters`` for the body."""
    token = _active.set(counters)
    try:
        yield counters
    finally:
        _active.reset(token)
