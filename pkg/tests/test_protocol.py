"""Entity state machines: honest flows, every rejection path, the baseline."""

import pytest

from gsmibc.algebra import Point
from gsmibc.errors import (
    MsAuthFailure,
    NetworkAuthFailure,
    ReplayError,
    SessionStateError,
    SignatureInvalidError,
    UnknownImsiError,
    UnknownSubscriberError,
    VlrAuthFailure,
)
from gsmibc.hashing import base_hash, hash_to_scalar
from gsmibc.ibc import decode_ciphertext, ibe_decrypt, ibe_encrypt
from gsmibc.messages import (
    F_HK,
    F_IMSI,
    F_RAND2,
    F_VLR_ID,
    M2Challenge,
    M3Response,
    M5FromHlr,
    M6Confirm,
    encode_field,
    encode_message,
    split_fields,
)
from gsmibc.protocol import (
    ABORTED,
    DERIVE_RAW,
    DIRECTION_DOWNLINK,
    DIRECTION_UPLINK,
    ESTABLISHED,
    BaselineHlr,
    BaselineMs,
    BaselineVlr,
    Hlr,
    MobileStation,
    SimCard,
    Vlr,
    a3_sres,
    a8_kc,
    baseline_authenticate,
    derive_session_point,
    gen_triplets,
    protect_traffic,
)
from gsmibc.rng import DetRng

IMSI = b"IMSI-208011234567890"
TMSI = b"T-7001"
HLR_ID = b"HLR-01"
VLR_ID = b"VLR-01"


def make_entities(profile, tag="x", key_derivation="hashed"):
    hlr = Hlr(profile, HLR_ID, DetRng(f"hlr-{tag}"), key_derivation=key_derivation)
    vlr_key = hlr.provision_vlr(VLR_ID)
    vlr = Vlr(profile, VLR_ID, HLR_ID, hlr.p_pub, vlr_key, DetRng(f"vlr-{tag}"))
    sim = hlr.register_subscriber(IMSI, TMSI)
    vlr.tmsi_table[TMSI] = IMSI
    ms = MobileStation(profile, sim, DetRng(f"ms-{tag}"), key_derivation=key_derivation)
    return ms, vlr, hlr


def run_handshake(ms, vlr, hlr, session_id=1):
    m1 = ms.start(session_id)
    m2 = vlr.challenge(m1)
    m3 = ms.respond(m2)
    m4 = vlr.forward(m3)
    m5 = hlr.process(m4)
    m6, vlr_result = vlr.finish(m5)
    ms_result = ms.finalize(m6)
    return ms_result, vlr_result, hlr.sessions[session_id].result, (m1, m2, m3, m4, m5, m6)


# ---------------------------------------------------------------------------
# Honest flow


@pytest.mark.parametrize("profile_fixture", ["tp", "dp"])
def test_honest_handshake_agrees(profile_fixture, request):
    profile = request.getfixturevalue(profile_fixture)
    ms, vlr, hlr = make_entities(profile, tag=profile.name)
    ms_result, vlr_result, hlr_result, _ = run_handshake(ms, vlr, hlr)
    assert ms_result.session_key == vlr_result.session_key == hlr_result.session_key
    assert ms_result.peer_authenticated
    assert vlr_result.peer_authenticated
    assert hlr_result.peer_authenticated
    assert ms.sessions[1].state == ESTABLISHED
    assert vlr.sessions[1].state == ESTABLISHED
    assert hlr.sessions[1].state == ESTABLISHED


def test_ms_operation_budget(tp):
    ms, vlr, hlr = make_entities(tp)
    run_handshake(ms, vlr, hlr)
    counters = ms.counters(1)
    assert counters.scalar_mul == 1
    assert counters.pairing == 0
    assert counters.ibe == 0
    assert counters.ibs == 0
    assert counters.map_to_point == 0


def test_m6_relays_hm_byte_identical(tp):
    ms, vlr, hlr = make_entities(tp)
    *_, (m1, m2, m3, m4, m5, m6) = run_handshake(ms, vlr, hlr)
    assert m6.hm == m5.hm


def test_sequential_sessions_share_nothing(dp):
    ms, vlr, hlr = make_entities(dp, tag="seq")
    first, *_ = run_handshake(ms, vlr, hlr, session_id=1)
    second, *_ = run_handshake(ms, vlr, hlr, session_id=2)
    assert first.session_key != second.session_key


# ---------------------------------------------------------------------------
# Session-point derivation


def test_derive_session_point_known_multiplier(tp):
    # Find a mixed nonce hashing to multiplier 2; then 2 * (5,3) = (5,8).
    rng = DetRng("derive-hunt")
    rand2 = next(r for r in iter(lambda: rng.take(16), None) if hash_to_scalar(r, 3) == 2)
    assert derive_session_point(tp, Point(5, 3), rand2) == Point(5, 8)


def test_derive_session_point_raw_mode(tp):
    rand2 = (5).to_bytes(16, "big")  # 5 mod 3 = 2
    assert derive_session_point(tp, Point(5, 3), rand2, DERIVE_RAW) == Point(5, 8)
    zero = (3).to_bytes(16, "big")  # 3 mod 3 = 0 escapes to 1
    assert derive_session_point(tp, Point(5, 3), zero, DERIVE_RAW) == Point(5, 3)
    with pytest.raises(ValueError):
        derive_session_point(tp, Point(5, 3), rand2, "bogus")


def test_raw_derivation_mode_handshake(tp):
    ms, vlr, hlr = make_entities(tp, tag="raw", key_derivation=DERIVE_RAW)
    ms_result, vlr_result, hlr_result, _ = run_handshake(ms, vlr, hlr)
    assert ms_result.session_key == vlr_result.session_key == hlr_result.session_key


# ---------------------------------------------------------------------------
# MS behavior


def test_m1_carries_tmsi_never_imsi(tp):
    ms, _, _ = make_entities(tp)
    m1 = ms.start(1)
    assert m1.tmsi == TMSI
    assert IMSI not in encode_message(m1)
    m1_again = MobileStation(tp, ms.sim, DetRng("ms-x")).start(1)
    assert m1_again.tmsi == m1.tmsi


def test_ms_rejects_replayed_challenge(tp):
    ms, vlr, hlr = make_entities(tp)
    *_, (m1, m2, *_rest) = run_handshake(ms, vlr, hlr, session_id=1)
    ms.start(2)
    with pytest.raises(ReplayError):
        ms.respond(M2Challenge(session_id=2, rand=m2.rand))
    record = ms.sessions[2]
    assert record.state == ABORTED and record.error == "replay"
    assert record.result is None


def test_ms_rejects_smaller_challenge(tp):
    ms, vlr, hlr = make_entities(tp)
    run_handshake(ms, vlr, hlr, session_id=1)
    ms.start(2)
    with pytest.raises(ReplayError):
        ms.respond(M2Challenge(session_id=2, rand=b"\x00" * 16))


def test_ms_updates_freshness_watermark(tp):
    ms, vlr, hlr = make_entities(tp)
    assert ms.sim.last_rand is None
    *_, (m1, m2, *_rest) = run_handshake(ms, vlr, hlr)
    assert ms.sim.last_rand == m2.rand


def test_ms_rejects_forged_confirmation(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    with pytest.raises(NetworkAuthFailure):
        ms.finalize(M6Confirm(session_id=1, hm=b"\x00" * 32, vlr_id=VLR_ID))
    assert ms.sessions[1].state == ABORTED
    assert ms.sessions[1].error == "network-auth-failure"


def test_ms_rejects_substituted_vlr_identity(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    m5 = hlr.process(vlr.forward(m3))
    m6, _ = vlr.finish(m5)
    with pytest.raises(NetworkAuthFailure):
        ms.finalize(M6Confirm(session_id=1, hm=m6.hm, vlr_id=b"VLR-02"))


def test_ms_session_state_guards(tp):
    ms, vlr, hlr = make_entities(tp)
    ms.start(1)
    with pytest.raises(SessionStateError):
        ms.start(1)
    with pytest.raises(SessionStateError):
        ms.finalize(M6Confirm(session_id=1, hm=b"\x00" * 32, vlr_id=VLR_ID))
    with pytest.raises(SessionStateError):
        ms.respond(M2Challenge(session_id=99, rand=b"\x00" * 16))


# ---------------------------------------------------------------------------
# VLR behavior


def test_vlr_challenges_are_unique_and_increasing(tp):
    ms, vlr, hlr = make_entities(tp)
    seen = set()
    previous = -1
    for sid in range(1, 101):
        m2 = vlr.challenge(MobileStation(tp, ms.sim, DetRng(f"m{sid}")).start(sid))
        assert len(m2.rand) == 16
        assert m2.rand not in seen
        seen.add(m2.rand)
        value = int.from_bytes(m2.rand, "big")
        assert value > previous
        previous = value


def test_vlr_rejects_unknown_tmsi(tp):
    _, vlr, _ = make_entities(tp)
    with pytest.raises(UnknownSubscriberError):
        vlr.challenge(MobileStation(tp, SimCard(b"I", b"T-9999", Point(5, 3)), DetRng("s")).start(1))
    assert vlr.sessions[1].state == ABORTED
    assert vlr.sessions[1].error == "unknown-subscriber"


def test_vlr_replay_cache_blocks_duplicate_response(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    vlr.forward(m3)
    ms2 = MobileStation(tp, SimCard(IMSI, TMSI, ms.sim.key_point), DetRng("ms2"))
    vlr.challenge(ms2.start(2))
    replayed = M3Response(session_id=2, hk=m3.hk, tmsi=m3.tmsi, rand2=m3.rand2)
    with pytest.raises(ReplayError):
        vlr.forward(replayed)
    assert vlr.sessions[2].state == ABORTED
    assert vlr.sessions[2].error == "replay"


def test_vlr_forward_payload_shape(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    m4 = vlr.forward(m3)
    plaintext = ibe_decrypt(tp, hlr.hlr_key, decode_ciphertext(tp, m4.ciphertext))
    parsed = split_fields(plaintext)
    assert [tag for tag, _ in parsed] == [F_IMSI, F_HK, F_VLR_ID, F_RAND2]
    values = dict(parsed)
    assert values[F_IMSI] == IMSI
    assert values[F_HK] == m3.hk
    assert values[F_VLR_ID] == VLR_ID
    assert values[F_RAND2] == m3.rand2


def test_vlr_forward_never_leaks_imsi_in_ciphertext(dp):
    ms, vlr, hlr = make_entities(dp, tag="leakscan")
    for sid in range(1, 21):
        m3 = ms.respond(vlr.challenge(ms.start(sid)))
        m4 = vlr.forward(m3)
        assert IMSI not in encode_message(m4)


def test_vlr_rejects_mismatched_session_tmsi(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    with pytest.raises(SessionStateError):
        vlr.forward(M3Response(session_id=1, hk=m3.hk, tmsi=b"T-other", rand2=m3.rand2))


def test_vlr_rejects_tampered_signature(dp):
    ms, vlr, hlr = make_entities(dp, tag="sigflip")
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    m5 = hlr.process(vlr.forward(m3))
    for offset in (0, 3, len(m5.signature) - 1):
        mutated = bytearray(m5.signature)
        mutated[offset] ^= 0x01
        bad = M5FromHlr(
            session_id=1, signature=bytes(mutated), hm=m5.hm, key_ciphertext=m5.key_ciphertext
        )
        with pytest.raises(SignatureInvalidError):
            vlr.finish(bad)
        # Aborted is terminal: rebuild the session for the next variant.
        ms, vlr, hlr = make_entities(dp, tag=f"sigflip{offset}")
        m3 = ms.respond(vlr.challenge(ms.start(1)))
        m5 = hlr.process(vlr.forward(m3))


def test_vlr_rejects_signature_over_different_digest(dp):
    # On the toy profile a q=3 hash collision lets a substituted digest
    # verify one time in three; the demo subgroup makes rejection certain.
    ms, vlr, hlr = make_entities(dp, tag="hm-swap")
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    m5 = hlr.process(vlr.forward(m3))
    bad = M5FromHlr(
        session_id=1, signature=m5.signature, hm=b"\x55" * 32, key_ciphertext=m5.key_ciphertext
    )
    with pytest.raises(SignatureInvalidError):
        vlr.finish(bad)
    assert vlr.sessions[1].state == ABORTED
    assert vlr.sessions[1].error == "signature-invalid"


# ---------------------------------------------------------------------------
# HLR behavior


def test_hlr_rejects_fabricated_response_hash(tp):
    ms, vlr, hlr = make_entities(tp)
    vlr.challenge(ms.start(1))
    fake = M3Response(
        session_id=1, hk=b"\xee" * 32, tmsi=TMSI, rand2=DetRng("fab").take(16)
    )
    m4 = vlr.forward(fake)
    with pytest.raises(MsAuthFailure):
        hlr.process(m4)
    assert hlr.sessions[1].state == ABORTED
    assert hlr.sessions[1].error == "ms-auth-failure"


def test_hlr_rejects_unregistered_vlr(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    # An adversary (or rogue VLR) can encrypt to the HLR's public identity.
    payload = (
        encode_field(F_IMSI, IMSI)
        + encode_field(F_HK, m3.hk)
        + encode_field(F_VLR_ID, b"VLR-EVIL")
        + encode_field(F_RAND2, m3.rand2)
    )
    from gsmibc.ibc import encode_ciphertext
    from gsmibc.messages import M4ToHlr

    ct = ibe_encrypt(tp, hlr.p_pub, HLR_ID, payload, DetRng("rogue"))
    with pytest.raises(VlrAuthFailure):
        hlr.process(M4ToHlr(session_id=1, ciphertext=encode_ciphertext(tp, ct)))
    assert hlr.sessions[1].error == "vlr-auth-failure"


def test_hlr_rejects_unknown_imsi(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    payload = (
        encode_field(F_IMSI, b"IMSI-nobody")
        + encode_field(F_HK, m3.hk)
        + encode_field(F_VLR_ID, VLR_ID)
        + encode_field(F_RAND2, m3.rand2)
    )
    from gsmibc.ibc import encode_ciphertext
    from gsmibc.messages import M4ToHlr

    ct = ibe_encrypt(tp, hlr.p_pub, HLR_ID, payload, DetRng("ghost"))
    with pytest.raises(UnknownImsiError):
        hlr.process(M4ToHlr(session_id=1, ciphertext=encode_ciphertext(tp, ct)))


def test_hlr_signature_verifies_and_key_unwraps(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    m5 = hlr.process(vlr.forward(m3))
    from gsmibc.ibc import decode_signature, ibs_verify

    sig = decode_signature(tp, m5.signature)
    assert ibs_verify(tp, hlr.p_pub, HLR_ID, m5.hm, sig)
    point_bytes = ibe_decrypt(tp, vlr.vlr_key, decode_ciphertext(tp, m5.key_ciphertext))
    assert tp.decode_point(point_bytes) == hlr.sessions[1].result.session_point


def test_hlr_stored_keys_match_recomputation(tp):
    _, _, hlr = make_entities(tp)
    from gsmibc.ibc import extract

    for imsi, stored in hlr.subscriber_db.items():
        assert extract(tp, hlr.master, imsi).d_id == stored


def test_hlr_hm_binds_all_three_values(tp):
    ms, vlr, hlr = make_entities(tp)
    m3 = ms.respond(vlr.challenge(ms.start(1)))
    m5 = hlr.process(vlr.forward(m3))
    point = hlr.sessions[1].result.session_point
    assert m5.hm == base_hash(IMSI + tp.encode_point(point) + VLR_ID)


# ---------------------------------------------------------------------------
# Baseline


def test_triplet_shape_and_kc_mask():
    ki = bytes(range(16))
    triplets = gen_triplets(ki, DetRng("triplets"))
    assert len(triplets) == 5  # five per request
    for rand, sres, kc in triplets:
        assert (len(rand), len(sres), len(kc)) == (16, 4, 8)
        assert int.from_bytes(kc, "big") & 0x3FF == 0  # 54-bit effective key
        assert sres == a3_sres(ki, rand)
        assert kc == a8_kc(ki, rand)


def test_triplets_deterministic_per_challenge():
    ki = bytes(range(16))
    rand = b"\xab" * 16
    assert a3_sres(ki, rand) == a3_sres(ki, rand)
    assert a8_kc(ki, rand) == a8_kc(ki, rand)


def test_baseline_authenticate():
    ki = bytes(range(16))
    triplet = gen_triplets(ki, DetRng("auth"), count=1)[0]
    assert baseline_authenticate(ki, triplet)
    rejections = 0
    rng = DetRng("wrong-ki")
    for _ in range(50):
        if not baseline_authenticate(rng.take(16), triplet):
            rejections += 1
    assert rejections == 50  # 2^-32 per-trial false accept never shows here


def test_baseline_session_flow():
    ki = DetRng("base-ki").take(16)
    ms = BaselineMs(IMSI, TMSI, ki)
    vlr = BaselineVlr(VLR_ID)
    hlr = BaselineHlr(DetRng("base-hlr"))
    vlr.tmsi_table[TMSI] = IMSI
    hlr.register_subscriber(IMSI, ki)
    m1 = ms.start(1)
    req = vlr.request_triplets(m1)
    batch = hlr.issue_triplets(req)
    m2 = vlr.challenge(batch)
    sres = ms.respond(m2)
    assert vlr.check_response(sres)
    assert ms.sessions[1]["state"] == "completed"
    assert ms.sessions[1]["kc"] == a8_kc(ki, m2.rand)


def test_baseline_ms_accepts_any_challenge():
    # The classic flow has no network authentication: a replayed challenge
    # is answered without complaint.
    ki = DetRng("base-ki2").take(16)
    ms = BaselineMs(IMSI, TMSI, ki)
    ms.start(1)
    first = ms.respond(M2Challenge(session_id=1, rand=b"\x07" * 16))
    ms.start(2)
    second = ms.respond(M2Challenge(session_id=2, rand=b"\x07" * 16))
    assert first.sres == second.sres


def test_baseline_errors():
    vlr = BaselineVlr(VLR_ID)
    with pytest.raises(UnknownSubscriberError):
        vlr.request_triplets(BaselineMs(IMSI, TMSI, b"k" * 16).start(1))
    hlr = BaselineHlr(DetRng("h"))
    from gsmibc.messages import BImsiRequest

    with pytest.raises(UnknownImsiError):
        hlr.issue_triplets(BImsiRequest(session_id=1, imsi=b"IMSI-missing"))


# ---------------------------------------------------------------------------
# Traffic protection


def test_protect_traffic_round_trip():
    key = base_hash(b"session")
    for length in (0, 1, 17, 256, 1024):
        data = DetRng(f"data{length}").take(length)
        sealed = protect_traffic(key, data, DIRECTION_UPLINK, 1)
        assert protect_traffic(key, sealed, DIRECTION_UPLINK, 1) == data


def test_protect_traffic_direction_and_counter_separate_streams():
    key = base_hash(b"session")
    data = b"\x00" * 64
    up = protect_traffic(key, data, DIRECTION_UPLINK, 1)
    down = protect_traffic(key, data, DIRECTION_DOWNLINK, 1)
    later = protect_traffic(key, data, DIRECTION_UPLINK, 2)
    assert up != down and up != later


def test_protect_traffic_interoperates_between_parties(tp):
    ms, vlr, hlr = make_entities(tp)
    ms_result, vlr_result, *_ = run_handshake(ms, vlr, hlr)
    sealed = protect_traffic(ms_result.session_key, b"hello network", DIRECTION_UPLINK, 7)
    opened = protect_traffic(vlr_result.session_key, sealed, DIRECTION_UPLINK, 7)
    assert opened == b"hello network"


def test_protect_traffic_rejects_bad_key():
    with pytest.raises(ValueError):
        protect_traffic(b"short", b"data", DIRECTION_UPLINK, 0)
