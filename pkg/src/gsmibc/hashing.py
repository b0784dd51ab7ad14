"""Hash primitives: map-to-point, scalar hashing, masks, and the session KDF.

The protocol overloads one hash symbol for several jobs; here each job gets
its own function with an explicit type:

* ``map_to_point``   -- identities onto the order-q curve subgroup
  (try-and-increment, then cofactor clearing).
* ``hash_to_scalar`` -- nonces onto multipliers in [1, q-1].
* ``hash_point`` / ``base_hash`` -- values onto 32-byte digests.
* ``h2_mask``        -- pairing outputs onto XOR masks for encryption.
* ``kdf_session``    -- the agreed curve point onto a 32-byte traffic key.

``base_hash`` is bit-exactly SHA-256; all length prefixes are big-endian.
"""

from __future__ import annotations

import hashlib

from .algebra import CurveProfile, Point, PointOrInf, legendre, sqrt_mod
from .errors import DegenerateKeyError, MapToPointError
from .instrument import bump
from .pairing import GtElement, encode_gt

DIGEST_LEN = 32
_MAP_TO_POINT_MAX_TRIES = 256
_SESSION_KEY_LABEL = b"GSM-IBC-SK"


def base_hash(msg: bytes) -> bytes:
    """SHA-256 of ``msg``."""
    return hashlib.sha256(msg).digest()


def _be32(value: int) -> bytes:
    return value.to_bytes(4, "big")


def map_to_point(profile: CurveProfile, msg: bytes) -> PointOrInf:
    """Hash an arbitrary byte string onto the order-q subgroup.

    Try-and-increment: for i = 1, 2, ... derive a digest of i || msg, read a
    candidate x (and a selector bit b, which the published algorithm then
    overrides with the larger-root rule, so it is computed and dropped), and
    stop at the first x whose curve RHS is a quadratic residue.  The larger
    square root is taken and the point is multiplied by the cofactor, which
    can land on the identity when the candidate lay entirely in the cofactor
    component.
    """
    bump("map_to_point")
    p = profile.p
    for i in range(1, _MAP_TO_POINT_MAX_TRIES + 1):
        digest = base_hash(_be32(i) + msg)
        x = int.from_bytes(digest, "big") % p
        _selector = digest[-1] & 1  # consumed per the algorithm, unused by step 3
        rhs = profile.curve_rhs(x)
        if legendre(rhs, p) != 1:
            continue
        y = max(sqrt_mod(rhs, p))
        return profile.mul(profile.cofactor, Point(x, y))
    raise MapToPointError(
        f"no curve point found for input after {_MAP_TO_POINT_MAX_TRIES} attempts"
    )


def hash_to_scalar(msg: bytes, q: int) -> int:
    """Digest ``msg`` into a multiplier in [1, q-1]; zero escapes to 1."""
    if q < 2:
        raise ValueError("q must be at least 2")
    s = int.from_bytes(base_hash(msg), "big") % q
    return s if s != 0 else 1


def hash_point(profile: CurveProfile, point: PointOrInf) -> bytes:
    """Digest of the canonical point encoding (identity hashes its marker)."""
    return base_hash(profile.encode_point(point))


def keystream(seed: bytes, out_len: int) -> bytes:
    """Counter-mode SHA-256 expansion of ``seed`` to ``out_len`` bytes."""
    if out_len < 0:
        raise ValueError("out_len must be non-negative")
    blocks = []
    counter = 0
    produced = 0
    while produced < out_len:
        block = base_hash(seed + _be32(counter))
        blocks.append(block)
        produced += len(block)
        counter += 1
    return b"".join(blocks)[:out_len]


def h2_mask(profile: CurveProfile, z: GtElement, out_len: int) -> bytes:
    """XOR mask derived from a pairing value (the encryption mask hash)."""
    return keystream(encode_gt(profile, z), out_len)


def kdf_session(profile: CurveProfile, session_point: PointOrInf) -> bytes:
    """32-byte session key from the agreed curve point; rejects the identity."""
    if session_point is None:
        raise DegenerateKeyError("session point degenerated to the identity")
    return base_hash(_SESSION_KEY_LABEL + profile.encode_point(session_point))
