"""Hash primitive contracts: published vectors, curve predicates, masks."""

import hashlib

import pytest

from gsmibc.algebra import CurveProfile, Point
from gsmibc.errors import DegenerateKeyError, MapToPointError
from gsmibc.hashing import (
    base_hash,
    h2_mask,
    hash_point,
    hash_to_scalar,
    kdf_session,
    keystream,
    map_to_point,
)
from gsmibc.pairing import pairing
from gsmibc.rng import DetRng


# ---------------------------------------------------------------------------
# base_hash


def test_base_hash_empty_string_vector():
    # FIPS 180-4 SHA-256 empty-message test vector.
    assert base_hash(b"").hex() == (
        "e3b0c44298fc1c149afbf4c8996fb924"
        "27ae41e4649b934ca495991b7852b855"
    )


def test_base_hash_deterministic_and_sensitive():
    rng = DetRng("corpus")
    for _ in range(50):
        msg = bytearray(rng.take(24))
        digest = base_hash(bytes(msg))
        assert digest == base_hash(bytes(msg))
        msg[5] ^= 0x01
        assert base_hash(bytes(msg)) != digest


# ---------------------------------------------------------------------------
# map_to_point


def test_map_to_point_lands_in_subgroup(tp):
    point = map_to_point(tp, b"HLR-01")
    assert tp.is_on_curve(point)
    assert tp.mul(tp.q, point) is None


def test_map_to_point_cofactor_clearing(tp, dp):
    rng = DetRng("cofactor")
    for profile in (tp, dp):
        for _ in range(20):
            point = map_to_point(profile, rng.take(12))
            assert profile.is_on_curve(point)
            assert profile.mul(profile.q, point) is None


def test_map_to_point_deterministic(tp, dp):
    for profile in (tp, dp):
        assert map_to_point(profile, b"same input") == map_to_point(profile, b"same input")


def test_map_to_point_coverage_on_test_profile(tp):
    rng = DetRng("coverage")
    seen = set()
    for _ in range(1000):
        point = map_to_point(tp, rng.take(8))
        seen.add(None if point is None else (point.x, point.y))
    # Cofactor clearing can annihilate; otherwise only subgroup points appear.
    assert seen == {None, (5, 3), (5, 8)}


def test_map_to_point_matches_published_loop(tp):
    # Independent re-run of the documented algorithm for one input.
    msg = b"HLR-01"
    for i in range(1, 257):
        digest = hashlib.sha256(i.to_bytes(4, "big") + msg).digest()
        x = int.from_bytes(digest, "big") % tp.p
        rhs = (x**3 + tp.a * x + tp.b) % tp.p
        if pow(rhs, (tp.p - 1) // 2, tp.p) == 1:
            roots = {pow(rhs, (tp.p + 1) // 4, tp.p)}
            roots.add(tp.p - next(iter(roots)))
            expected = tp.mul(tp.cofactor, Point(x, max(roots)))
            break
    else:
        pytest.fail("oracle loop found no candidate")
    assert map_to_point(tp, msg) == expected


def test_map_to_point_iteration_cap():
    # y^2 = x^3 + 6 over F_7 has only 2-torsion: every f(x) is 0 or a
    # non-residue, so the try-and-increment loop can never succeed.
    barren = CurveProfile(p=7, a=0, b=6, m=4, q=2, cofactor=2, gx=1, gy=0, name="barren")
    barren.validate()
    with pytest.raises(MapToPointError):
        map_to_point(barren, b"anything")


# ---------------------------------------------------------------------------
# hash_to_scalar


def test_hash_to_scalar_empty_input_q3():
    # sha256("") as an integer is 1 mod 3 (recomputed independently).
    assert int(hashlib.sha256(b"").hexdigest(), 16) % 3 == 1
    assert hash_to_scalar(b"", 3) == 1


def test_hash_to_scalar_range(dp):
    rng = DetRng("scalar-range")
    for q in (3, 17, dp.q):
        for _ in range(50):
            s = hash_to_scalar(rng.take(10), q)
            assert 1 <= s <= q - 1


def test_hash_to_scalar_zero_escape():
    # Find an input whose digest is 0 mod 3; the escape rule must yield 1.
    rng = DetRng("zero-hunt")
    for _ in range(10000):
        msg = rng.take(6)
        if int.from_bytes(base_hash(msg), "big") % 3 == 0:
            assert hash_to_scalar(msg, 3) == 1
            return
    pytest.fail("no zero-residue input found")


def test_hash_to_scalar_distribution_q3():
    # With q = 3 the construction folds residue 0 into 1, so outputs follow
    # (2/3, 1/3) over {1, 2}; check both rates within 3 sigma on 1e5 draws.
    rng = DetRng("distribution")
    n = 100_000
    counts = {1: 0, 2: 0}
    for _ in range(n):
        counts[hash_to_scalar(rng.take(8), 3)] += 1
    sigma = (n * (2 / 3) * (1 / 3)) ** 0.5
    assert abs(counts[1] - 2 * n / 3) <= 3 * sigma
    assert abs(counts[2] - n / 3) <= 3 * sigma


def test_hash_to_scalar_rejects_tiny_modulus():
    with pytest.raises(ValueError):
        hash_to_scalar(b"x", 1)


# ---------------------------------------------------------------------------
# hash_point / h2_mask / kdf


def test_hash_point_identity_and_distinctness(tp):
    assert hash_point(tp, None) == base_hash(b"\x00")
    assert hash_point(tp, Point(5, 3)) == hash_point(tp, Point(5, 3))
    assert hash_point(tp, Point(5, 3)) != hash_point(tp, Point(5, 8))


def test_h2_mask_construction(tp):
    z = pairing(tp, tp.generator, tp.generator)
    encoded = bytes([5, 3])
    assert h2_mask(tp, z, 0) == b""
    assert h2_mask(tp, z, 32) == base_hash(encoded + b"\x00\x00\x00\x00")
    expected40 = (
        base_hash(encoded + b"\x00\x00\x00\x00")
        + base_hash(encoded + b"\x00\x00\x00\x01")[:8]
    )
    assert h2_mask(tp, z, 40) == expected40


def test_keystream_determinism_and_length():
    assert keystream(b"seed", 100) == keystream(b"seed", 100)
    assert len(keystream(b"seed", 100)) == 100
    assert keystream(b"seed", 33)[:33] == keystream(b"seed", 100)[:33]
    assert keystream(b"seed", 10) != keystream(b"other", 10)


def test_kdf_session(tp):
    assert kdf_session(tp, Point(5, 3)) == kdf_session(tp, Point(5, 3))
    assert kdf_session(tp, Point(5, 3)) != kdf_session(tp, Point(5, 8))
    assert len(kdf_session(tp, Point(5, 3))) == 32
    with pytest.raises(DegenerateKeyError):
        kdf_session(tp, None)
