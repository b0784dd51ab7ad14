"""Identity-based primitives: key extraction, encryption, and signatures.

The key authority holds a master scalar k and publishes p_pub = k*G.  An
identity's public point is q_id = map_to_point(id); its private key is the
point d_id = k*q_id, so extracted keys satisfy the publicly checkable
relation e(d_id, G) = e(q_id, p_pub).

Encryption is the basic pairing-based scheme: U = r*G and an XOR mask from
e(q_id, p_pub)^r, which the key holder recovers as e(d_id, U).  It is CPA
only and malleable by construction; that is a documented property here, not
an oversight.

Signatures are point-keyed (the private key is a curve point, matching the
extraction above): U = r*q_id, V = (r + h)*d_id with h = H(m || U), verified
by e(V, G) == e(U + h*q_id, p_pub).
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import CurveProfile, PointOrInf
from .errors import PointValidationError, SubgroupError, WireFormatError
from .hashing import h2_mask, hash_to_scalar, map_to_point
from .instrument import bump
from .pairing import gt_pow, pairing
from .rng import DetRng


@dataclass(frozen=True)
class MasterKey:
    """Authority secret ``k`` and the published commitment p_pub = k*G."""

    k: int
    p_pub: PointOrInf


@dataclass(frozen=True)
class IdentityKey:
    """Extracted key for one identity: (id, q_id, d_id = k*q_id)."""

    identity: bytes
    q_id: PointOrInf
    d_id: PointOrInf


@dataclass(frozen=True)
class IbeCiphertext:
    u: PointOrInf
    v: bytes


@dataclass(frozen=True)
class IbsSignature:
    u: PointOrInf
    v: PointOrInf


def setup(profile: CurveProfile, rng: DetRng) -> MasterKey:
    """Draw the master scalar uniformly from [1, q-1] and publish k*G."""
    k = rng.scalar(profile.q)
    return MasterKey(k=k, p_pub=profile.mul(k, profile.generator))


def extract(profile: CurveProfile, master: MasterKey, identity: bytes) -> IdentityKey:
    """Derive the identity's key pair from the master scalar."""
    if not identity:
        raise ValueError("identity must be non-empty")
    q_id = map_to_point(profile, identity)
    return IdentityKey(identity=identity, q_id=q_id, d_id=profile.mul(master.k, q_id))


def ibe_encrypt(
    profile: CurveProfile,
    p_pub: PointOrInf,
    recipient_id: bytes,
    message: bytes,
    rng: DetRng,
) -> IbeCiphertext:
    """Encrypt to an identity under the published authority point."""
    if not message:
        raise ValueError("message must be non-empty")
    bump("ibe")
    r = rng.scalar(profile.q)
    u = profile.mul(r, profile.generator)
    shared = gt_pow(profile, pairing(profile, map_to_point(profile, recipient_id), p_pub), r)
    mask = h2_mask(profile, shared, len(message))
    return IbeCiphertext(u=u, v=bytes(m ^ k for m, k in zip(message, mask)))


def ibe_decrypt(profile: CurveProfile, sk: IdentityKey, ct: IbeCiphertext) -> bytes:
    """Invert ``ibe_encrypt`` with the extracted identity key."""
    bump("ibe")
    if ct.u is None:
        raise PointValidationError("ciphertext point must not be the identity")
    profile.require_on_curve(ct.u)
    if profile.mul(profile.q, ct.u) is not None:
        raise SubgroupError("ciphertext point is outside the order-q subgroup")
    shared = pairing(profile, sk.d_id, ct.u)
    mask = h2_mask(profile, shared, len(ct.v))
    return bytes(c ^ k for c, k in zip(ct.v, mask))


def ibs_sign(profile: CurveProfile, sk: IdentityKey, message: bytes, rng: DetRng) -> IbsSignature:
    """Sign with the point-shaped identity key."""
    if not message:
        raise ValueError("message must be non-empty")
    bump("ibs")
    r = rng.scalar(profile.q)
    u = profile.mul(r, sk.q_id)
    h = hash_to_scalar(message + profile.encode_point(u), profile.q)
    v = profile.mul((r + h) % profile.q, sk.d_id)
    return IbsSignature(u=u, v=v)


def ibs_verify(
    profile: CurveProfile,
    p_pub: PointOrInf,
    signer_id: bytes,
    message: bytes,
    sig: IbsSignature,
) -> bool:
    """Accept iff e(V, G) == e(U + h*q_id, p_pub) with h = H(m || U).

    Points off the curve raise; on-curve points outside the prime-order
    subgroup are simply invalid signatures.
    """
    bump("ibs")
    profile.require_on_curve(sig.u)
    profile.require_on_curve(sig.v)
    if profile.mul(profile.q, sig.u) is not None:
        return False
    if profile.mul(profile.q, sig.v) is not None:
        return False
    q_id = map_to_point(profile, signer_id)
    h = hash_to_scalar(message + profile.encode_point(sig.u), profile.q)
    lhs = pairing(profile, sig.v, profile.generator)
    rhs = pairing(profile, profile.add(sig.u, profile.mul(h, q_id)), p_pub)
    return lhs == rhs


# ---------------------------------------------------------------------------
# Wire encodings


def encode_ciphertext(profile: CurveProfile, ct: IbeCiphertext) -> bytes:
    """encode(U) || be32(len(V)) || V."""
    return profile.encode_point(ct.u) + len(ct.v).to_bytes(4, "big") + ct.v


def decode_ciphertext(profile: CurveProfile, data: bytes) -> IbeCiphertext:
    if not data:
        raise WireFormatError("empty ciphertext")
    plen = profile.point_encoding_len(data[0])
    if len(data) < plen + 4:
        raise WireFormatError("truncated ciphertext")
    u = profile.decode_point(data[:plen])
    vlen = int.from_bytes(data[plen : plen + 4], "big")
    v = data[plen + 4 :]
    if len(v) != vlen:
        raise WireFormatError("ciphertext length field mismatch")
    return IbeCiphertext(u=u, v=v)


def encode_signature(profile: CurveProfile, sig: IbsSignature) -> bytes:
    """encode(U) || encode(V)."""
    return profile.encode_point(sig.u) + profile.encode_point(sig.v)


def decode_signature(profile: CurveProfile, data: bytes) -> IbsSignature:
    if not data:
        raise WireFormatError("empty signature")
    ulen = profile.point_encoding_len(data[0])
    if len(data) <= ulen:
        raise WireFormatError("truncated signature")
    u = profile.decode_point(data[:ulen])
    rest = data[ulen:]
    vlen = profile.point_encoding_len(rest[0])
    if len(rest) != vlen:
        raise WireFormatError("signature length mismatch")
    v = profile.decode_point(rest)
    return IbsSignature(u=u, v=v)
