"""Byte-exact wire format for the handshake and baseline messages.

Every message is ``b"GI" || version 0x01 || msg_type u8 || session_id u32be
|| payload``; every payload field is ``tag u8 || len u16be || bytes`` in a
fixed order per message type.  Decoding is strict: unknown types, unknown or
reordered tags, wrong fixed lengths, and trailing bytes all reject.

Cryptographic sub-objects (ciphertexts, signatures) travel as opaque byte
fields and are decoded semantically by the receiving entity, so a flipped
point byte surfaces as that entity's own failure, not as a framing error.

Types 1-6 are the identity-based handshake; types 7-9 carry the classic
triplet baseline over the same channels.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import ClassVar, NamedTuple

from .errors import WireFormatError

MAGIC = b"GI"
WIRE_VERSION = 1
HEADER_LEN = 2 + 1 + 1 + 4

RAND_LEN = 16
DIGEST_LEN = 32
SRES_LEN = 4
KC_LEN = 8
TRIPLET_LEN = RAND_LEN + SRES_LEN + KC_LEN

MSG_TMSI = 1
MSG_CHALLENGE = 2
MSG_RESPONSE = 3
MSG_TO_HLR = 4
MSG_FROM_HLR = 5
MSG_CONFIRM = 6
MSG_B_IMSI_REQ = 7
MSG_B_TRIPLETS = 8
MSG_B_SRES = 9

F_TMSI = 0x01
F_RAND = 0x02
F_HK = 0x03
F_RAND2 = 0x04
F_CT = 0x05
F_SIG = 0x06
F_HM = 0x07
F_VLR_ID = 0x08
F_KEYCT = 0x09
F_IMSI = 0x0A
F_TRIPLET = 0x0B
F_SRES = 0x0C


class Triplet(NamedTuple):
    """Classic authentication triplet (challenge, signed response, cipher key)."""

    rand: bytes
    sres: bytes
    kc: bytes


@dataclass(frozen=True)
class M1Tmsi:
    """MS -> VLR: temporary identity only."""

    session_id: int
    tmsi: bytes
    TYPE: ClassVar[int] = MSG_TMSI


@dataclass(frozen=True)
class M2Challenge:
    """VLR -> MS: 16-byte nonce challenge."""

    session_id: int
    rand: bytes
    TYPE: ClassVar[int] = MSG_CHALLENGE


@dataclass(frozen=True)
class M3Response:
    """MS -> VLR: hash of the session point, TMSI, and the mixed nonce."""

    session_id: int
    hk: bytes
    tmsi: bytes
    rand2: bytes
    TYPE: ClassVar[int] = MSG_RESPONSE


@dataclass(frozen=True)
class M4ToHlr:
    """VLR -> HLR: identity-encrypted forward of the subscriber response."""

    session_id: int
    ciphertext: bytes
    TYPE: ClassVar[int] = MSG_TO_HLR


@dataclass(frozen=True)
class M5FromHlr:
    """HLR -> VLR: signature, binding digest, and the wrapped session point."""

    session_id: int
    signature: bytes
    hm: bytes
    key_ciphertext: bytes
    TYPE: ClassVar[int] = MSG_FROM_HLR


@dataclass(frozen=True)
class M6Confirm:
    """VLR -> MS: binding digest relayed from HLR plus the VLR identity."""

    session_id: int
    hm: bytes
    vlr_id: bytes
    TYPE: ClassVar[int] = MSG_CONFIRM


@dataclass(frozen=True)
class BImsiRequest:
    """Baseline VLR -> HLR: resolved permanent identity, in the clear."""

    session_id: int
    imsi: bytes
    TYPE: ClassVar[int] = MSG_B_IMSI_REQ


@dataclass(frozen=True)
class BTriplets:
    """Baseline HLR -> VLR: batch of authentication triplets."""

    session_id: int
    triplets: tuple[Triplet, ...]
    TYPE: ClassVar[int] = MSG_B_TRIPLETS


@dataclass(frozen=True)
class BSres:
    """Baseline MS -> VLR: signed response to the challenge."""

    session_id: int
    sres: bytes
    TYPE: ClassVar[int] = MSG_B_SRES


Message = (
    M1Tmsi
    | M2Challenge
    | M3Response
    | M4ToHlr
    | M5FromHlr
    | M6Confirm
    | BImsiRequest
    | BTriplets
    | BSres
)

# (tag, attribute, fixed length or None) per field, in wire order.
_FIELD_SPECS: dict[int, tuple[tuple[int, str, int | None], ...]] = {
    MSG_TMSI: ((F_TMSI, "tmsi", None),),
    MSG_CHALLENGE: ((F_RAND, "rand", RAND_LEN),),
    MSG_RESPONSE: (
        (F_HK, "hk", DIGEST_LEN),
        (F_TMSI, "tmsi", None),
        (F_RAND2, "rand2", RAND_LEN),
    ),
    MSG_TO_HLR: ((F_CT, "ciphertext", None),),
    MSG_FROM_HLR: (
        (F_SIG, "signature", None),
        (F_HM, "hm", DIGEST_LEN),
        (F_KEYCT, "key_ciphertext", None),
    ),
    MSG_CONFIRM: ((F_HM, "hm", DIGEST_LEN), (F_VLR_ID, "vlr_id", None)),
    MSG_B_IMSI_REQ: ((F_IMSI, "imsi", None),),
    MSG_B_SRES: ((F_SRES, "sres", SRES_LEN),),
}

_CLASS_BY_TYPE: dict[int, type] = {
    cls.TYPE: cls
    for cls in (
        M1Tmsi, M2Challenge, M3Response, M4ToHlr, M5FromHlr,
        M6Confirm, BImsiRequest, BTriplets, BSres,
    )
}


def encode_field(tag: int, value: bytes) -> bytes:
    if len(value) > 0xFFFF:
        raise WireFormatError("field too long for u16 length")
    return bytes([tag]) + len(value).to_bytes(2, "big") + value


def encode_message(msg: Message) -> bytes:
    """Serialize; raises WireFormatError on contract violations."""
    if not 0 <= msg.session_id <= 0xFFFFFFFF:
        raise WireFormatError("session id out of u32 range")
    header = MAGIC + bytes([WIRE_VERSION, msg.TYPE]) + msg.session_id.to_bytes(4, "big")
    if isinstance(msg, BTriplets):
        if not msg.triplets:
            raise WireFormatError("triplet batch must be non-empty")
        payload = b"".join(
            encode_field(F_TRIPLET, t.rand + t.sres + t.kc) for t in msg.triplets
        )
        return header + payload
    parts = []
    for tag, attr, fixed in _FIELD_SPECS[msg.TYPE]:
        value = getattr(msg, attr)
        if fixed is not None and len(value) != fixed:
            raise WireFormatError(f"field {attr} must be {fixed} bytes")
        if fixed is None and not value:
            raise WireFormatError(f"field {attr} must be non-empty")
        parts.append(encode_field(tag, value))
    return header + b"".join(parts)


def split_fields(payload: bytes) -> list[tuple[int, bytes]]:
    out = []
    offset = 0
    while offset < len(payload):
        if offset + 3 > len(payload):
            raise WireFormatError("truncated field header")
        tag = payload[offset]
        length = int.from_bytes(payload[offset + 1 : offset + 3], "big")
        start = offset + 3
        if start + length > len(payload):
            raise WireFormatError("field overruns payload")
        out.append((tag, payload[start : start + length]))
        offset = start + length
    return out


def peek_header(raw: bytes) -> tuple[int, int]:
    """(msg_type, session_id) without decoding the payload."""
    if len(raw) < HEADER_LEN or raw[:2] != MAGIC:
        raise WireFormatError("bad magic or truncated header")
    if raw[2] != WIRE_VERSION:
        raise WireFormatError("unsupported wire version")
    msg_type = raw[3]
    if msg_type not in _CLASS_BY_TYPE:
        raise WireFormatError(f"unknown message type {msg_type}")
    return msg_type, int.from_bytes(raw[4:8], "big")


def decode_message(raw: bytes) -> Message:
    """Strictly parse a wire message."""
    msg_type, session_id = peek_header(raw)
    parsed = split_fields(raw[HEADER_LEN:])
    if msg_type == MSG_B_TRIPLETS:
        if not parsed:
            raise WireFormatError("triplet batch must be non-empty")
        triplets = []
        for tag, value in parsed:
            if tag != F_TRIPLET or len(value) != TRIPLET_LEN:
                raise WireFormatError("malformed triplet field")
            triplets.append(
                Triplet(
                    rand=value[:RAND_LEN],
                    sres=value[RAND_LEN : RAND_LEN + SRES_LEN],
                    kc=value[RAND_LEN + SRES_LEN :],
                )
            )
        return BTriplets(session_id=session_id, triplets=tuple(triplets))
    spec = _FIELD_SPECS[msg_type]
    if len(parsed) != len(spec):
        raise WireFormatError("wrong field count")
    kwargs: dict[str, bytes] = {}
    for (tag, value), (want_tag, attr, fixed) in zip(parsed, spec):
        if tag != want_tag:
            raise WireFormatError(f"unexpected tag {tag:#x}, wanted {want_tag:#x}")
        if fixed is not None and len(value) != fixed:
            raise WireFormatError(f"field {attr} must be {fixed} bytes")
        if fixed is None and not value:
            raise WireFormatError(f"field {attr} must be non-empty")
        kwargs[attr] = value
    return _CLASS_BY_TYPE[msg_type](session_id=session_id, **kwargs)


def iter_payload_fields(raw: bytes) -> list[tuple[int, int, int]]:
    """(tag, value_start, value_end) absolute spans, for transcript scanners."""
    peek_header(raw)
    spans = []
    offset = HEADER_LEN
    while offset < len(raw):
        if offset + 3 > len(raw):
            raise WireFormatError("truncated field header")
        tag = raw[offset]
        length = int.from_bytes(raw[offset + 1 : offset + 3], "big")
        start = offset + 3
        if start + length > len(raw):
            raise WireFormatError("field overruns payload")
        spans.append((tag, start, start + length))
        offset = start + length
    return spans


_TYPE_NAMES = {
    MSG_TMSI: "M1-tmsi",
    MSG_CHALLENGE: "M2-challenge",
    MSG_RESPONSE: "M3-response",
    MSG_TO_HLR: "M4-to-hlr",
    MSG_FROM_HLR: "M5-from-hlr",
    MSG_CONFIRM: "M6-confirm",
    MSG_B_IMSI_REQ: "B-imsi-request",
    MSG_B_TRIPLETS: "B-triplets",
    MSG_B_SRES: "B-sres",
}


def summarize(raw: bytes) -> str:
    """Short human-readable line for transcripts; never raises."""
    try:
        msg_type, session_id = peek_header(raw)
    except WireFormatError:
        return f"unparseable ({len(raw)} bytes)"
    name = _TYPE_NAMES[msg_type]
    try:
        msg = decode_message(raw)
    except WireFormatError:
        return f"{name} sid={session_id} (malformed payload)"
    details = []
    for fld in fields(msg):
        value = getattr(msg, fld.name)
        if fld.name == "session_id":
            continue
        if isinstance(value, bytes):
            shown = value.hex() if len(value) <= 8 else value[:8].hex() + ".."
            details.append(f"{fld.name}={shown}")
        elif isinstance(value, tuple):
            details.append(f"{fld.name}[{len(value)}]")
    return f"{name} sid={session_id} " + " ".join(details)
