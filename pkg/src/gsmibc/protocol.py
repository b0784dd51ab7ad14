"""MS, VLR, and HLR state machines for the identity-based handshake,
the classic triplet baseline, and post-handshake traffic protection.

Handshake shape (six on-wire messages; the other two steps are local):

    MS  -> VLR : TMSI
    VLR -> MS  : RAND                      (strictly increasing per VLR)
    MS  -> VLR : H(K'') || TMSI || RAND''  (RAND'' = RAND xor RAND')
    VLR -> HLR : IBE{ IMSI || H(K'') || VLR_ID || RAND'' }
    HLR -> VLR : SIGN{hm}, hm, IBE_vlr{K''}   with hm = H(IMSI || K'' || VLR_ID)
    VLR -> MS  : hm, VLR_ID

K'' = hash_to_scalar(RAND'') * K' is derived independently by MS and HLR;
the session key is a KDF of that point.  The mobile side performs exactly
one scalar multiplication per session and never pairs or encrypts, which
the per-session operation counters make checkable.

Every error path parks the session in a terminal "aborted" state carrying
the terminating error code; no partial key ever leaves an entity.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import hmac as hmac_mod
import hashlib

from .algebra import CurveProfile, PointOrInf
from .errors import (
    DegenerateKeyError,
    GsmIbcError,
    MsAuthFailure,
    NetworkAuthFailure,
    PointValidationError,
    ReplayError,
    SessionStateError,
    SignatureInvalidError,
    SubgroupError,
    UnknownImsiError,
    UnknownSubscriberError,
    VlrAuthFailure,
    WireFormatError,
)
from .hashing import base_hash, hash_point, hash_to_scalar, kdf_session, keystream
from .ibc import (
    IdentityKey,
    MasterKey,
    decode_ciphertext,
    decode_signature,
    encode_ciphertext,
    encode_signature,
    extract,
    ibe_decrypt,
    ibe_encrypt,
    ibs_sign,
    ibs_verify,
    setup,
)
from .instrument import OpCounters, counting
from .messages import (
    BImsiRequest,
    BSres,
    BTriplets,
    F_HK,
    F_IMSI,
    F_RAND2,
    F_VLR_ID,
    M1Tmsi,
    M2Challenge,
    M3Response,
    M4ToHlr,
    M5FromHlr,
    M6Confirm,
    RAND_LEN,
    Triplet,
    encode_field,
    split_fields,
)
from .rng import DetRng

# Session-key derivation modes: the default hashes the mixed nonce into a
# multiplier; the alternate reading uses the nonce integer directly.
DERIVE_HASHED = "hashed"
DERIVE_RAW = "raw"

# Terminal / intermediate session states.
STARTED = "started"
RESPONDED = "responded"
CHALLENGED = "challenged"
FORWARDED = "forwarded"
ESTABLISHED = "established"
ABORTED = "aborted"
COMPLETED = "completed"
REJECTED = "rejected"


def _xor(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError("xor operands must have equal length")
    return bytes(x ^ y for x, y in zip(a, b))


def derive_session_point(
    profile: CurveProfile,
    key_point: PointOrInf,
    rand2: bytes,
    mode: str = DERIVE_HASHED,
) -> PointOrInf:
    """Session point from the subscriber key point and the mixed nonce."""
    if mode == DERIVE_HASHED:
        multiplier = hash_to_scalar(rand2, profile.q)
    elif mode == DERIVE_RAW:
        multiplier = int.from_bytes(rand2, "big") % profile.q or 1
    else:
        raise ValueError(f"unknown key-derivation mode {mode!r}")
    return profile.mul(multiplier, key_point)


@dataclass(frozen=True)
class SessionResult:
    """Outcome of a completed handshake at one entity."""

    session_key: bytes
    peer_authenticated: bool
    session_point: PointOrInf


@dataclass
class SimCard:
    """Subscriber identity module contents."""

    imsi: bytes
    tmsi: bytes
    key_point: PointOrInf  # identity key point installed at registration
    last_rand: bytes | None = None


def _error_code(err: GsmIbcError) -> str:
    return getattr(err, "code", None) or type(err).__name__


@dataclass
class _MsSession:
    session_id: int
    state: str = STARTED
    counters: OpCounters = dc_field(default_factory=OpCounters)
    session_point: PointOrInf = None
    error: str | None = None
    result: SessionResult | None = None


class MobileStation:
    """Subscriber side; does hashing, XOR, and one scalar multiplication."""

    def __init__(
        self,
        profile: CurveProfile,
        sim: SimCard,
        rng: DetRng,
        key_derivation: str = DERIVE_HASHED,
        leak_imsi: bool = False,
    ):
        self.profile = profile
        self.sim = sim
        self.rng = rng
        self.key_derivation = key_derivation
        self.leak_imsi = leak_imsi  # deliberately broken build for scanner tests
        self.sessions: dict[int, _MsSession] = {}

    def _session(self, session_id: int, expect: str) -> _MsSession:
        record = self.sessions.get(session_id)
        if record is None or record.state != expect:
            raise SessionStateError(
                f"MS session {session_id} not in state {expect!r}"
            )
        return record

    def _abort(self, record: _MsSession, err: GsmIbcError) -> None:
        record.state = ABORTED
        record.error = _error_code(err)
        record.session_point = None

    def start(self, session_id: int) -> M1Tmsi:
        """Open a session by announcing the temporary identity only."""
        if session_id in self.sessions:
            raise SessionStateError(f"MS session {session_id} already exists")
        record = _MsSession(session_id=session_id)
        self.sessions[session_id] = record
        with counting(record.counters):
            identity = self.sim.imsi if self.leak_imsi else self.sim.tmsi
            return M1Tmsi(session_id=session_id, tmsi=identity)

    def respond(self, m2: M2Challenge) -> M3Response:
        """Mix nonces, derive the session point, answer with its hash."""
        record = self._session(m2.session_id, STARTED)
        try:
            with counting(record.counters):
                if self.sim.last_rand is not None:
                    current = int.from_bytes(m2.rand, "big")
                    previous = int.from_bytes(self.sim.last_rand, "big")
                    if current <= previous:
                        raise ReplayError("challenge nonce is not strictly increasing")
                rand_ms = self.rng.take(RAND_LEN)  # never transmitted
                rand2 = _xor(m2.rand, rand_ms)
                session_point = derive_session_point(
                    self.profile, self.sim.key_point, rand2, self.key_derivation
                )
                if session_point is None:
                    raise DegenerateKeyError("session point degenerated to the identity")
                self.sim.last_rand = m2.rand
                record.session_point = session_point
                record.state = RESPONDED
                return M3Response(
                    session_id=m2.session_id,
                    hk=hash_point(self.profile, session_point),
                    tmsi=self.sim.tmsi,
                    rand2=rand2,
                )
        except GsmIbcError as err:
            self._abort(record, err)
            raise

    def finalize(self, m6: M6Confirm) -> SessionResult:
        """Check the network's binding digest; only then release the key."""
        record = self._session(m6.session_id, RESPONDED)
        try:
            with counting(record.counters):
                expected = base_hash(
                    self.sim.imsi
                    + self.profile.encode_point(record.session_point)
                    + m6.vlr_id
                )
                if not hmac_mod.compare_digest(expected, m6.hm):
                    raise NetworkAuthFailure("binding digest mismatch")
                result = SessionResult(
                    session_key=kdf_session(self.profile, record.session_point),
                    peer_authenticated=True,
                    session_point=record.session_point,
                )
                record.result = result
                record.state = ESTABLISHED
                return result
        except GsmIbcError as err:
            self._abort(record, err)
            raise

    def counters(self, session_id: int) -> OpCounters:
        return self.sessions[session_id].counters


@dataclass
class _VlrSession:
    session_id: int
    state: str
    tmsi: bytes | None = None
    rand: bytes | None = None
    error: str | None = None
    result: SessionResult | None = None


class Vlr:
    """Visited-network agent: challenges, relays, verifies, confirms."""

    def __init__(
        self,
        profile: CurveProfile,
        vlr_id: bytes,
        hlr_id: bytes,
        p_pub: PointOrInf,
        vlr_key: IdentityKey,
        rng: DetRng,
    ):
        self.profile = profile
        self.vlr_id = vlr_id
        self.hlr_id = hlr_id
        self.p_pub = p_pub
        self.vlr_key = vlr_key
        self.rng = rng
        self.tmsi_table: dict[bytes, bytes] = {}
        self.replay_cache: set[tuple[bytes, bytes]] = set()
        self.rand_issued: dict[int, bytes] = {}
        self._rand_counter = 0
        self.sessions: dict[int, _VlrSession] = {}

    def _abort(self, record: _VlrSession, err: GsmIbcError) -> None:
        record.state = ABORTED
        record.error = _error_code(err)

    def _session(self, session_id: int, expect: str) -> _VlrSession:
        record = self.sessions.get(session_id)
        if record is None or record.state != expect:
            raise SessionStateError(
                f"VLR session {session_id} not in state {expect!r}"
            )
        return record

    def _fresh_rand(self) -> bytes:
        # Monotone counter in the high bytes keeps challenges strictly
        # increasing as big-endian integers; the low bytes stay unpredictable.
        self._rand_counter += 1
        return self._rand_counter.to_bytes(8, "big") + self.rng.take(8)

    def challenge(self, m1: M1Tmsi) -> M2Challenge:
        """Answer a session request with a fresh nonce."""
        if m1.session_id in self.sessions:
            raise SessionStateError(f"VLR session {m1.session_id} already exists")
        record = _VlrSession(session_id=m1.session_id, state=STARTED, tmsi=m1.tmsi)
        self.sessions[m1.session_id] = record
        try:
            if m1.tmsi not in self.tmsi_table:
                raise UnknownSubscriberError("unknown temporary identity")
            rand = self._fresh_rand()
            record.rand = rand
            self.rand_issued[m1.session_id] = rand
            record.state = CHALLENGED
            return M2Challenge(session_id=m1.session_id, rand=rand)
        except GsmIbcError as err:
            self._abort(record, err)
            raise

    def forward(self, m3: M3Response) -> M4ToHlr:
        """Resolve the subscriber and relay the response to HLR encrypted."""
        record = self._session(m3.session_id, CHALLENGED)
        try:
            if record.tmsi != m3.tmsi:
                raise SessionStateError("response TMSI does not match the session")
            if (m3.tmsi, m3.rand2) in self.replay_cache:
                raise ReplayError("response nonce already seen for this subscriber")
            imsi = self.tmsi_table.get(m3.tmsi)
            if imsi is None:
                raise UnknownSubscriberError("unknown temporary identity")
            self.replay_cache.add((m3.tmsi, m3.rand2))
            plaintext = (
                encode_field(F_IMSI, imsi)
                + encode_field(F_HK, m3.hk)
                + encode_field(F_VLR_ID, self.vlr_id)
                + encode_field(F_RAND2, m3.rand2)
            )
            ct = ibe_encrypt(self.profile, self.p_pub, self.hlr_id, plaintext, self.rng)
            record.state = FORWARDED
            return M4ToHlr(
                session_id=m3.session_id,
                ciphertext=encode_ciphertext(self.profile, ct),
            )
        except GsmIbcError as err:
            self._abort(record, err)
            raise

    def finish(self, m5: M5FromHlr) -> tuple[M6Confirm, SessionResult]:
        """Verify HLR's signature, unwrap the session point, confirm to MS."""
        record = self._session(m5.session_id, FORWARDED)
        try:
            try:
                sig = decode_signature(self.profile, m5.signature)
                valid = ibs_verify(self.profile, self.p_pub, self.hlr_id, m5.hm, sig)
            except (WireFormatError, PointValidationError, SubgroupError):
                valid = False
            if not valid:
                raise SignatureInvalidError("HLR signature did not verify")
            key_ct = decode_ciphertext(self.profile, m5.key_ciphertext)
            session_point = self.profile.decode_point(
                ibe_decrypt(self.profile, self.vlr_key, key_ct)
            )
            result = SessionResult(
                session_key=kdf_session(self.profile, session_point),
                peer_authenticated=True,
                session_point=session_point,
            )
            record.result = result
            record.state = ESTABLISHED
            return (
                M6Confirm(session_id=m5.session_id, hm=m5.hm, vlr_id=self.vlr_id),
                result,
            )
        except GsmIbcError as err:
            self._abort(record, err)
            raise


@dataclass
class _HlrSession:
    session_id: int
    state: str
    error: str | None = None
    result: SessionResult | None = None


class Hlr:
    """Home register: key authority, subscriber database, session arbiter."""

    def __init__(
        self,
        profile: CurveProfile,
        hlr_id: bytes,
        rng: DetRng,
        master: MasterKey | None = None,
        key_derivation: str = DERIVE_HASHED,
    ):
        self.profile = profile
        self.hlr_id = hlr_id
        self.rng = rng
        self.master = master if master is not None else setup(profile, rng.fork("setup"))
        self.hlr_key = extract(profile, self.master, hlr_id)
        self.key_derivation = key_derivation
        self.subscriber_db: dict[bytes, PointOrInf] = {}
        self.vlr_registry: set[bytes] = set()
        self.sessions: dict[int, _HlrSession] = {}

    @property
    def p_pub(self) -> PointOrInf:
        return self.master.p_pub

    def register_subscriber(self, imsi: bytes, tmsi: bytes) -> SimCard:
        """Extract the subscriber key, keep a copy, return the loaded SIM."""
        if not imsi:
            raise ValueError("imsi must be non-empty")
        if imsi in self.subscriber_db:
            raise ValueError(f"imsi {imsi!r} already registered")
        key = extract(self.profile, self.master, imsi)
        self.subscriber_db[imsi] = key.d_id
        return SimCard(imsi=imsi, tmsi=tmsi, key_point=key.d_id)

    def provision_vlr(self, vlr_id: bytes) -> IdentityKey:
        """Register a visited-network agent and issue its identity key."""
        if not vlr_id:
            raise ValueError("vlr_id must be non-empty")
        self.vlr_registry.add(vlr_id)
        return extract(self.profile, self.master, vlr_id)

    def process(self, m4: M4ToHlr) -> M5FromHlr:
        """Authenticate subscriber and VLR, then emit the signed confirmation."""
        if m4.session_id in self.sessions:
            raise SessionStateError(f"HLR session {m4.session_id} already exists")
        record = _HlrSession(session_id=m4.session_id, state=STARTED)
        self.sessions[m4.session_id] = record
        try:
            ct = decode_ciphertext(self.profile, m4.ciphertext)
            plaintext = ibe_decrypt(self.profile, self.hlr_key, ct)
            try:
                parsed = split_fields(plaintext)
            except WireFormatError as err:
                raise WireFormatError("forward payload did not decrypt cleanly") from err
            if [tag for tag, _ in parsed] != [F_IMSI, F_HK, F_VLR_ID, F_RAND2]:
                raise WireFormatError("forward payload has unexpected shape")
            imsi, hk, vlr_id, rand2 = (value for _, value in parsed)
            if len(rand2) != RAND_LEN:
                raise WireFormatError("mixed nonce has wrong length")
            key_point = self.subscriber_db.get(imsi)
            if key_point is None:
                raise UnknownImsiError("no such subscriber")
            session_point = derive_session_point(
                self.profile, key_point, rand2, self.key_derivation
            )
            if not hmac_mod.compare_digest(hash_point(self.profile, session_point), hk):
                raise MsAuthFailure("subscriber response hash mismatch")
            if vlr_id not in self.vlr_registry:
                raise VlrAuthFailure("VLR identity is not registered")
            hm = base_hash(imsi + self.profile.encode_point(session_point) + vlr_id)
            signature = ibs_sign(self.profile, self.hlr_key, hm, self.rng)
            wrapped = ibe_encrypt(
                self.profile,
                self.p_pub,
                vlr_id,
                self.profile.encode_point(session_point),
                self.rng,
            )
            record.result = SessionResult(
                session_key=kdf_session(self.profile, session_point),
                peer_authenticated=True,
                session_point=session_point,
            )
            record.state = ESTABLISHED
            return M5FromHlr(
                session_id=m4.session_id,
                signature=encode_signature(self.profile, signature),
                hm=hm,
                key_ciphertext=encode_ciphertext(self.profile, wrapped),
            )
        except GsmIbcError as err:
            record.state = ABORTED
            record.error = _error_code(err)
            raise


# ---------------------------------------------------------------------------
# Classic GSM baseline (one-way authentication with triplets)


def a3_sres(ki: bytes, rand: bytes) -> bytes:
    """Mocked A3: first 4 bytes of a keyed MAC over the challenge."""
    return hmac_mod.new(ki, b"A3" + rand, hashlib.sha256).digest()[:4]


def a8_kc(ki: bytes, rand: bytes) -> bytes:
    """Mocked A8: 8-byte cipher key with the 10 low bits forced to zero."""
    raw = hmac_mod.new(ki, b"A8" + rand, hashlib.sha256).digest()[:8]
    value = int.from_bytes(raw, "big") & ~0x3FF
    return value.to_bytes(8, "big")


def gen_triplets(ki: bytes, rng: DetRng, count: int = 5) -> tuple[Triplet, ...]:
    """Authentication triplets (RAND, SRES, Kc); five per request by default."""
    if len(ki) != 16:
        raise ValueError("ki must be 16 bytes")
    out = []
    for _ in range(count):
        rand = rng.take(RAND_LEN)
        out.append(Triplet(rand=rand, sres=a3_sres(ki, rand), kc=a8_kc(ki, rand)))
    return tuple(out)


def baseline_authenticate(ms_ki: bytes, triplet: Triplet) -> bool:
    """Network-side check: accept iff the subscriber's response matches."""
    return a3_sres(ms_ki, triplet.rand) == triplet.sres


class BaselineMs:
    """Classic subscriber: answers any challenge; verifies nothing back."""

    def __init__(self, imsi: bytes, tmsi: bytes, ki: bytes):
        self.imsi = imsi
        self.tmsi = tmsi
        self.ki = ki
        self.sessions: dict[int, dict] = {}

    def start(self, session_id: int) -> M1Tmsi:
        self.sessions[session_id] = {"state": STARTED, "kc": None}
        return M1Tmsi(session_id=session_id, tmsi=self.tmsi)

    def respond(self, m2: M2Challenge) -> BSres:
        record = self.sessions.get(m2.session_id)
        if record is None or record["state"] != STARTED:
            raise SessionStateError("baseline MS session not awaiting challenge")
        # No freshness or network verification exists in the classic flow.
        record["kc"] = a8_kc(self.ki, m2.rand)
        record["state"] = COMPLETED
        return BSres(session_id=m2.session_id, sres=a3_sres(self.ki, m2.rand))


class BaselineVlr:
    """Classic visited-network agent driving triplet authentication."""

    def __init__(self, vlr_id: bytes):
        self.vlr_id = vlr_id
        self.tmsi_table: dict[bytes, bytes] = {}
        self.sessions: dict[int, dict] = {}

    def request_triplets(self, m1: M1Tmsi) -> BImsiRequest:
        if m1.session_id in self.sessions:
            raise SessionStateError("baseline VLR session already exists")
        record = {"state": STARTED, "tmsi": m1.tmsi, "triplet": None}
        self.sessions[m1.session_id] = record
        imsi = self.tmsi_table.get(m1.tmsi)
        if imsi is None:
            record["state"] = ABORTED
            record["error"] = "unknown-subscriber"
            raise UnknownSubscriberError("unknown temporary identity")
        return BImsiRequest(session_id=m1.session_id, imsi=imsi)

    def challenge(self, msg: BTriplets) -> M2Challenge:
        record = self.sessions.get(msg.session_id)
        if record is None or record["state"] != STARTED:
            raise SessionStateError("baseline VLR session not awaiting triplets")
        record["triplet"] = msg.triplets[0]
        record["state"] = CHALLENGED
        return M2Challenge(session_id=msg.session_id, rand=record["triplet"].rand)

    def check_response(self, msg: BSres) -> bool:
        record = self.sessions.get(msg.session_id)
        if record is None or record["state"] != CHALLENGED:
            raise SessionStateError("baseline VLR session not awaiting response")
        accepted = hmac_mod.compare_digest(record["triplet"].sres, msg.sres)
        record["state"] = COMPLETED if accepted else REJECTED
        return accepted


class BaselineHlr:
    """Classic home register: turns an IMSI into authentication triplets."""

    def __init__(self, rng: DetRng):
        self.rng = rng
        self.ki_db: dict[bytes, bytes] = {}

    def register_subscriber(self, imsi: bytes, ki: bytes) -> None:
        self.ki_db[imsi] = ki

    def issue_triplets(self, msg: BImsiRequest) -> BTriplets:
        ki = self.ki_db.get(msg.imsi)
        if ki is None:
            raise UnknownImsiError("no such subscriber")
        return BTriplets(
            session_id=msg.session_id,
            triplets=gen_triplets(ki, self.rng),
        )


# ---------------------------------------------------------------------------
# Post-handshake traffic protection

DIRECTION_UPLINK = b"\x00"
DIRECTION_DOWNLINK = b"\x01"


def protect_traffic(
    session_key: bytes, data: bytes, direction: bytes, counter: int
) -> bytes:
    """XOR stream protection keyed by (session key, direction, counter).

    The transform is its own inverse; both sides derive the same stream from
    an equal session key.
    """
    if len(session_key) != 32:
        raise ValueError("session key must be 32 bytes")
    stream = keystream(session_key + direction + counter.to_bytes(4, "big"), len(data))
    return _xor(data, stream)
