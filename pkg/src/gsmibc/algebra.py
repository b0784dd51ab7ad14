"""Elliptic-curve and finite-field arithmetic for the protocol substrate.

Short-Weierstrass curves y^2 = x^3 + a*x + b over F_p with p == 3 (mod 4),
affine coordinates throughout.  Two built-in parameter sets:

* ``test_profile()`` -- a 12-point toy curve over F_11 whose whole group
  table fits in a unit test, so higher layers can be checked exhaustively.
* ``demo_profile()`` -- a deterministically generated supersingular curve
  (y^2 = x^3 + x, p = c*q - 1) with a 160-bit prime-order subgroup.

Field elements are canonical ints in ``[0, p)``; the point at infinity is
``None``; affine points are frozen ``Point`` pairs.  Everything here is a
pure function over immutable values.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    NonResidueError,
    PointValidationError,
    ProfileError,
    ZeroInversionError,
)
from .instrument import bump

# ---------------------------------------------------------------------------
# Prime-field helpers

try:  # optional accelerator; the result is the unique inverse either way
    from gmpy2 import invert as _gmpy2_invert

    def _inv(a: int, p: int) -> int:
        return int(_gmpy2_invert(a, p))

except ImportError:  # pragma: no cover

    def _inv(a: int, p: int) -> int:
        return _inv(a, p)


def inv_mod(a: int, p: int) -> int:
    """Multiplicative inverse of ``a`` modulo ``p``."""
    a %= p
    if a == 0:
        raise ZeroInversionError(f"0 has no inverse modulo {p}")
    return _inv(a, p)


def legendre(a: int, p: int) -> int:
    """Legendre symbol: 1 for a nonzero square, -1 for a non-square, 0 for 0."""
    a %= p
    if a == 0:
        return 0
    sym = pow(a, (p - 1) // 2, p)
    return 1 if sym == 1 else -1


def is_quadratic_residue(a: int, p: int) -> bool:
    return legendre(a, p) == 1


def sqrt_mod(a: int, p: int) -> tuple[int, int]:
    """Both square roots of ``a`` in F_p, for p == 3 (mod 4).

    Returns ``(r, p - r)`` with ``r = a^((p+1)/4)``; callers pick the root
    they need (map-to-point takes the larger canonical representative).
    Zero has the single root 0 and is returned as ``(0, 0)``.
    """
    if p % 4 != 3:
        raise ValueError("sqrt_mod requires p == 3 (mod 4)")
    a %= p
    if a == 0:
        return (0, 0)
    r = pow(a, (p + 1) // 4, p)
    if r * r % p != a:
        raise NonResidueError(f"{a} is not a quadratic residue modulo {p}")
    return (r, p - r)


# ---------------------------------------------------------------------------
# Quadratic extension F_{p^2} = F_p[i] / (i^2 + 1), valid since p == 3 (mod 4)


class Fp2:
    """Element c0 + c1*i of F_{p^2} with i^2 = -1."""

    __slots__ = ("c0", "c1", "p")

    def __init__(self, c0: int, c1: int, p: int):
        self.c0 = c0 % p
        self.c1 = c1 % p
        self.p = p

    def __add__(self, other: "Fp2") -> "Fp2":
        return Fp2(self.c0 + other.c0, self.c1 + other.c1, self.p)

    def __sub__(self, other: "Fp2") -> "Fp2":
        return Fp2(self.c0 - other.c0, self.c1 - other.c1, self.p)

    def __mul__(self, other: "Fp2") -> "Fp2":
        a0, a1, b0, b1, p = self.c0, self.c1, other.c0, other.c1, self.p
        return Fp2(a0 * b0 - a1 * b1, a0 * b1 + a1 * b0, p)

    def __neg__(self) -> "Fp2":
        return Fp2(-self.c0, -self.c1, self.p)

    def square(self) -> "Fp2":
        a0, a1, p = self.c0, self.c1, self.p
        return Fp2((a0 + a1) * (a0 - a1), 2 * a0 * a1, p)

    def conj(self) -> "Fp2":
        return Fp2(self.c0, -self.c1, self.p)

    def inv(self) -> "Fp2":
        # (a - bi) / (a^2 + b^2)
        norm = (self.c0 * self.c0 + self.c1 * self.c1) % self.p
        if norm == 0:
            raise ZeroInversionError("0 has no inverse in F_p^2")
        d = inv_mod(norm, self.p)
        return Fp2(self.c0 * d, -self.c1 * d, self.p)

    def __pow__(self, n: int) -> "Fp2":
        if n < 0:
            return self.inv() ** (-n)
        result = Fp2(1, 0, self.p)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base.square()
            n >>= 1
        return result

    def is_zero(self) -> bool:
        return self.c0 == 0 and self.c1 == 0

    def is_one(self) -> bool:
        return self.c0 == 1 and self.c1 == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fp2):
            return NotImplemented
        return self.c0 == other.c0 and self.c1 == other.c1 and self.p == other.p

    def __hash__(self) -> int:
        return hash((self.c0, self.c1, self.p))

    def __repr__(self) -> str:
        return f"Fp2({self.c0}, {self.c1}, p={self.p})"


def fp2_one(p: int) -> Fp2:
    return Fp2(1, 0, p)


# ---------------------------------------------------------------------------
# Points and curve profiles


@dataclass(frozen=True)
class Point:
    """Affine point; the point at infinity is represented by ``None``."""

    x: int
    y: int


PointOrInf = Point | None


@dataclass(frozen=True)
class CurveProfile:
    """All public algebraic parameters of one curve instance.

    ``m`` is the full group order #E(F_p), ``q`` the prime subgroup order,
    ``cofactor == m // q``, and ``(gx, gy)`` a generator of the order-q
    subgroup.
    """

    p: int
    a: int
    b: int
    m: int
    q: int
    cofactor: int
    gx: int
    gy: int
    name: str = field(default="custom", compare=False)

    @property
    def generator(self) -> Point:
        return Point(self.gx, self.gy)

    @property
    def flen(self) -> int:
        """Byte width of one field element."""
        return (self.p.bit_length() + 7) // 8

    # -- curve predicates ---------------------------------------------------

    def curve_rhs(self, x: int) -> int:
        return (x * x * x + self.a * x + self.b) % self.p

    def is_on_curve(self, point: PointOrInf) -> bool:
        if point is None:
            return True
        if not (0 <= point.x < self.p and 0 <= point.y < self.p):
            return False
        return point.y * point.y % self.p == self.curve_rhs(point.x)

    def require_on_curve(self, point: PointOrInf) -> None:
        if not self.is_on_curve(point):
            raise PointValidationError(f"{point} is not on curve {self.name}")

    def in_subgroup(self, point: PointOrInf) -> bool:
        return self.is_on_curve(point) and self.mul(self.q, point) is None

    # -- group operations ---------------------------------------------------

    def neg(self, point: PointOrInf) -> PointOrInf:
        if point is None:
            return None
        return Point(point.x, (-point.y) % self.p)

    def _add_raw(self, lhs: PointOrInf, rhs: PointOrInf) -> PointOrInf:
        if lhs is None:
            return rhs
        if rhs is None:
            return lhs
        p = self.p
        if lhs.x == rhs.x:
            if (lhs.y + rhs.y) % p == 0:
                return None
            slope = (3 * lhs.x * lhs.x + self.a) * inv_mod(2 * lhs.y, p) % p
        else:
            slope = (rhs.y - lhs.y) * inv_mod(rhs.x - lhs.x, p) % p
        x3 = (slope * slope - lhs.x - rhs.x) % p
        y3 = (slope * (lhs.x - x3) - lhs.y) % p
        return Point(x3, y3)

    def add(self, lhs: PointOrInf, rhs: PointOrInf) -> PointOrInf:
        """Chord-and-tangent group law."""
        self.require_on_curve(lhs)
        self.require_on_curve(rhs)
        return self._add_raw(lhs, rhs)

    def mul(self, n: int, point: PointOrInf) -> PointOrInf:
        """Scalar multiplication by double-and-add; ``n`` must be >= 0."""
        if n < 0:
            raise ValueError("scalar must be non-negative")
        self.require_on_curve(point)
        bump("scalar_mul")
        if n == 0 or point is None:
            return None
        # Raw-int double-and-add; this is the hot path under the pairing's
        # subgroup checks, so no Point objects inside the loop.
        p, a = self.p, self.a
        px, py = point.x, point.y
        ax: int | None = None
        ay = 0
        for bit in bin(n)[2:]:
            if ax is not None:
                if ay == 0:
                    ax = None
                else:
                    s = (3 * ax * ax + a) * _inv(2 * ay, p) % p
                    x3 = (s * s - 2 * ax) % p
                    ay = (s * (ax - x3) - ay) % p
                    ax = x3
            if bit == "1":
                if ax is None:
                    ax, ay = px, py
                elif ax == px:
                    if (ay + py) % p == 0:
                        ax = None
                    else:
                        s = (3 * ax * ax + a) * _inv(2 * ay, p) % p
                        x3 = (s * s - 2 * ax) % p
                        ay = (s * (ax - x3) - ay) % p
                        ax = x3
                else:
                    s = (py - ay) * _inv(px - ax, p) % p
                    x3 = (s * s - ax - px) % p
                    ay = (s * (ax - x3) - ay) % p
                    ax = x3
        return None if ax is None else Point(ax, ay)

    # -- encodings ------------------------------------------------------------

    def encode_fe(self, value: int) -> bytes:
        if not 0 <= value < self.p:
            raise ValueError("field element out of range")
        return value.to_bytes(self.flen, "big")

    def encode_point(self, point: PointOrInf) -> bytes:
        """Identity -> 0x00; affine -> (0x02 | lsb(y)) || x as flen bytes."""
        if point is None:
            return b"\x00"
        self.require_on_curve(point)
        return bytes([0x02 | (point.y & 1)]) + self.encode_fe(point.x)

    def decode_point(self, data: bytes) -> PointOrInf:
        if data == b"\x00":
            return None
        if len(data) != 1 + self.flen or data[0] not in (0x02, 0x03):
            raise PointValidationError("bad point encoding")
        x = int.from_bytes(data[1:], "big")
        if x >= self.p:
            raise PointValidationError("x coordinate out of range")
        rhs = self.curve_rhs(x)
        if legendre(rhs, self.p) == -1:
            raise PointValidationError("x is not on the curve")
        r0, r1 = sqrt_mod(rhs, self.p)
        want = data[0] & 1
        y = r0 if r0 & 1 == want else r1
        if y & 1 != want:
            raise PointValidationError("no root with requested parity")
        return Point(x, y)

    def point_encoding_len(self, first_byte: int) -> int:
        """Wire length of a point encoding given its leading byte."""
        if first_byte == 0x00:
            return 1
        if first_byte in (0x02, 0x03):
            return 1 + self.flen
        raise PointValidationError("bad point encoding prefix")

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        """Check every structural invariant; raise ProfileError otherwise."""
        if not is_probable_prime(self.p):
            raise ProfileError("p is not prime")
        if self.p % 4 != 3:
            raise ProfileError("p must be congruent to 3 mod 4")
        if not is_probable_prime(self.q):
            raise ProfileError("q is not prime")
        if self.m % self.q != 0 or self.cofactor != self.m // self.q:
            raise ProfileError("cofactor must equal m / q with q | m")
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise ProfileError("curve is singular")
        gen = self.generator
        if not self.is_on_curve(gen):
            raise ProfileError("generator is not on the curve")
        if self.mul(self.q, gen) is not None:
            raise ProfileError("generator order does not divide q")


# ---------------------------------------------------------------------------
# Primality (needed for profile validation and demo-profile generation)

_SMALL_PRIMES = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
    71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113,
]


def _miller_rabin_round(n: int, base: int, d: int, r: int) -> bool:
    x = pow(base, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_probable_prime(n: int, rounds: int = 40) -> bool:
    """Deterministic-given-n Miller-Rabin with hash-derived witnesses."""
    if n < 2:
        return False
    for prime in _SMALL_PRIMES:
        if n == prime:
            return True
        if n % prime == 0:
            return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    nbytes = n.to_bytes((n.bit_length() + 7) // 8, "big")
    bases = list(_SMALL_PRIMES[:12])
    counter = 0
    while len(bases) < rounds:
        digest = hashlib.sha256(b"MRW" + nbytes + counter.to_bytes(4, "big"))
        bases.append(int.from_bytes(digest.digest(), "big") % (n - 3) + 2)
        counter += 1
    return all(_miller_rabin_round(n, base, d, r) for base in bases[:rounds])


# ---------------------------------------------------------------------------
# Built-in profiles


@functools.lru_cache(maxsize=None)
def test_profile() -> CurveProfile:
    """12-point toy curve y^2 = x^3 + x over F_11, subgroup order 3."""
    profile = CurveProfile(p=11, a=1, b=0, m=12, q=3, cofactor=4, gx=5, gy=3, name="test")
    profile.validate()
    return profile


_DEMO_Q_BITS = 160


@functools.lru_cache(maxsize=None)
def demo_profile() -> CurveProfile:
    """Deterministically generated supersingular profile with a 160-bit q.

    q is the least prime of the form 2^159 + k (low Hamming weight keeps the
    Miller loop short); p = c*q - 1 is the least such prime with 4 | c, which
    forces p == 3 (mod 4).  The curve is y^2 = x^3 + x with #E(F_p) = p + 1.
    """
    q = (1 << (_DEMO_Q_BITS - 1)) + 1
    while not is_probable_prime(q):
        q += 2
    c = 4
    while not is_probable_prime(c * q - 1):
        c += 4
    p = c * q - 1
    m = p + 1
    bootstrap = CurveProfile(p=p, a=1, b=0, m=m, q=q, cofactor=c, gx=0, gy=0, name="demo")
    for x in range(1, 1000):
        rhs = bootstrap.curve_rhs(x)
        if legendre(rhs, p) != 1:
            continue
        y = max(sqrt_mod(rhs, p))
        candidate = bootstrap.mul(c, Point(x, y))
        if candidate is not None:
            profile = CurveProfile(
                p=p, a=1, b=0, m=m, q=q, cofactor=c,
                gx=candidate.x, gy=candidate.y, name="demo",
            )
            profile.validate()
            return profile
    raise ProfileError("demo profile generation failed to find a generator")


# ---------------------------------------------------------------------------
# Profile config files: decimal integers, one parameter per line


_PROFILE_KEYS = ("p", "a", "b", "m", "q", "gx", "gy")


def save_profile(profile: CurveProfile, path: str | Path) -> None:
    lines = [f"{key} = {getattr(profile, key)}" for key in _PROFILE_KEYS]
    Path(path).write_text("\n".join(lines) + "\n")


def load_profile(path: str | Path, name: str | None = None) -> CurveProfile:
    values: dict[str, int] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in _PROFILE_KEYS:
            raise ProfileError(f"{path}:{lineno}: unrecognized profile line {line!r}")
        try:
            values[key] = int(value)
        except ValueError as exc:
            raise ProfileError(f"{path}:{lineno}: not a decimal integer") from exc
    missing = [key for key in _PROFILE_KEYS if key not in values]
    if missing:
        raise ProfileError(f"{path}: missing profile keys {missing}")
    if values["m"] % values["q"] != 0:
        raise ProfileError(f"{path}: q does not divide m")
    profile = CurveProfile(
        p=values["p"], a=values["a"], b=values["b"], m=values["m"],
        q=values["q"], cofactor=values["m"] // values["q"],
        gx=values["gx"], gy=values["gy"],
        name=name or Path(path).stem,
    )
    profile.validate()
    return profile


def get_profile(selector: str) -> CurveProfile:
    """Resolve ``test``, ``demo``, or a profile file path."""
    if selector == "test":
        return test_profile()
    if selector == "demo":
        return demo_profile()
    return load_profile(selector)
