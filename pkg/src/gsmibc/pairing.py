"""Bilinear map on the supersingular curve via the reduced Tate pairing.

``pairing(P, Q)`` computes Tate(P, phi(Q)) ^ ((p^2 - 1) / q) where phi is
the distortion endomorphism (x, y) -> (-x, i*y).  With both arguments drawn
from the one order-q subgroup of E(F_p) this yields a symmetric, bilinear,
non-degenerate map into the order-q roots of unity in F_{p^2}.

Miller's algorithm evaluates the chord/tangent lines at the single distorted
point; numerator and denominator are accumulated separately and divided once
at the end.  A zero line value cannot occur for valid subgroup inputs (the
distortion image has no F_p x-coordinate in common with any multiple of P),
so any zero is reported as an internal error instead of silently folded away.

The final exponentiation uses (p^2 - 1)/q = (p - 1) * cofactor: raise to the
small cofactor, then apply the Frobenius/conjugate identity z^(p-1) =
conj(z) / z.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import CurveProfile, Fp2, Point, PointOrInf, _inv, fp2_one
from .errors import PairingInternalError, SubgroupError
from .instrument import bump


@dataclass(frozen=True)
class GtElement:
    """Element of the order-q subgroup of F_{p^2}^* (pairing target group)."""

    value: Fp2

    def is_one(self) -> bool:
        return self.value.is_one()


def gt_one(profile: CurveProfile) -> GtElement:
    return GtElement(fp2_one(profile.p))


def gt_mul(lhs: GtElement, rhs: GtElement) -> GtElement:
    return GtElement(lhs.value * rhs.value)


def gt_pow(profile: CurveProfile, z: GtElement, n: int) -> GtElement:
    """z^n with the exponent reduced mod q (the group order divides q)."""
    return GtElement(z.value ** (n % profile.q))


def gt_eq(lhs: GtElement, rhs: GtElement) -> bool:
    return lhs == rhs


def encode_gt(profile: CurveProfile, z: GtElement) -> bytes:
    """c0 || c1, each as big-endian flen bytes."""
    return profile.encode_fe(z.value.c0) + profile.encode_fe(z.value.c1)


def distortion(profile: CurveProfile, point: PointOrInf) -> tuple[Fp2, Fp2] | None:
    """phi(x, y) = (-x, i*y), an F_{p^2}-point off the base-field curve."""
    profile.require_on_curve(point)
    if point is None:
        return None
    p = profile.p
    return (Fp2(-point.x, 0, p), Fp2(0, point.y, p))


def is_on_curve_fp2(profile: CurveProfile, point: tuple[Fp2, Fp2] | None) -> bool:
    if point is None:
        return True
    x, y = point
    p = profile.p
    rhs = x * x * x + Fp2(profile.a, 0, p) * x + Fp2(profile.b, 0, p)
    return y * y == rhs


def _miller(profile: CurveProfile, base: Point, sx: int, sy: int) -> Fp2:
    """f_{q,base} evaluated at the distorted point S = (sx, i*sy).

    Chord and tangent lines through points of E(F_p) evaluate at S to
    (slope*(x_T - sx) - y_T) + i*sy, whose imaginary part never vanishes
    for a subgroup point with sy != 0; verticals evaluate to the real
    sx - x_T, which is nonzero because -x_Q is never a base-field
    x-coordinate when p == 3 (mod 4).  The denominator therefore stays in
    F_p and is carried as a single int.
    """
    p, a = profile.p, profile.a
    bx, by = base.x, base.y
    n0, n1 = 1, 0  # numerator accumulator in F_{p^2}
    den = 1        # vertical-line accumulator in F_p
    tx, ty = bx, by
    bits = bin(profile.q)[3:]
    last = len(bits) - 1
    for i, bit in enumerate(bits):
        if ty == 0:
            raise PairingInternalError("hit a 2-torsion point inside the Miller loop")
        s = (3 * tx * tx + a) * _inv(2 * ty, p) % p
        lr = (s * (tx - sx) - ty) % p
        t0 = (n0 + n1) * (n0 - n1) % p
        t1 = 2 * n0 * n1 % p
        n0 = (t0 * lr - t1 * sy) % p
        n1 = (t0 * sy + t1 * lr) % p
        x2 = (s * s - 2 * tx) % p
        ty = (s * (tx - x2) - ty) % p
        tx = x2
        den = den * den * (sx - tx) % p
        if bit == "1":
            if tx == bx:
                if (ty + by) % p == 0:
                    # T + base = O: the chord is the vertical through base,
                    # and the divisor correction v_O is 1.  Only legal on
                    # the final addition (base has order q).
                    if i != last:
                        raise PairingInternalError("argument order divides a proper prefix of q")
                    lr2 = (sx - tx) % p
                    n0 = n0 * lr2 % p
                    n1 = n1 * lr2 % p
                    continue
                raise PairingInternalError("unexpected tangent case in Miller addition")
            s2 = (by - ty) * _inv(bx - tx, p) % p
            lr2 = (s2 * (tx - sx) - ty) % p
            n0, n1 = (n0 * lr2 - n1 * sy) % p, (n0 * sy + n1 * lr2) % p
            x3 = (s2 * s2 - tx - bx) % p
            ty = (s2 * (tx - x3) - ty) % p
            tx = x3
            den = den * (sx - tx) % p
    if den == 0 or (n0 == 0 and n1 == 0):
        raise PairingInternalError("line function vanished at evaluation point")
    d = _inv(den, p)
    return Fp2(n0 * d, n1 * d, p)


def pairing(profile: CurveProfile, lhs: PointOrInf, rhs: PointOrInf) -> GtElement:
    """Reduced Tate pairing with distortion; identity inputs pair to 1."""
    bump("pairing")
    profile.require_on_curve(lhs)
    profile.require_on_curve(rhs)
    if profile.mul(profile.q, lhs) is not None:
        raise SubgroupError("left pairing argument is outside the order-q subgroup")
    if profile.mul(profile.q, rhs) is not None:
        raise SubgroupError("right pairing argument is outside the order-q subgroup")
    if lhs is None or rhs is None:
        return gt_one(profile)
    sx = (-rhs.x) % profile.p
    raw = _miller(profile, lhs, sx, rhs.y)
    reduced = raw ** profile.cofactor
    final = reduced.conj() * reduced.inv()  # z^(p-1) via Frobenius
    if final.is_zero():
        raise PairingInternalError("pairing reduced to zero")
    return GtElement(final)
