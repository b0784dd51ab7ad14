"""Shared fixtures and independent oracles.

The oracle functions below re-implement the curve group law directly from
the chord-and-tangent formulas on coordinate tuples.  They deliberately
share no code with the package so that package results can be checked
against an independent path.
"""

from __future__ import annotations

import pytest

from gsmibc.algebra import Point, demo_profile, test_profile


@pytest.fixture(scope="session")
def tp():
    return test_profile()


@pytest.fixture(scope="session")
def dp():
    return demo_profile()


def brute_force_points(p: int, a: int, b: int) -> list[tuple[int, int] | None]:
    """Every point of y^2 = x^3 + ax + b over F_p by exhaustive scan."""
    points: list[tuple[int, int] | None] = [None]
    for x in range(p):
        for y in range(p):
            if (y * y - (x * x * x + a * x + b)) % p == 0:
                points.append((x, y))
    return points


def oracle_add(p: int, a: int, lhs, rhs):
    """Chord-and-tangent addition on coordinate tuples (oracle path)."""
    if lhs is None:
        return rhs
    if rhs is None:
        return lhs
    x1, y1 = lhs
    x2, y2 = rhs
    if x1 == x2 and (y1 + y2) % p == 0:
        return None
    if lhs == rhs:
        lam = (3 * x1 * x1 + a) * pow(2 * y1, p - 2, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, p - 2, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def oracle_mul(p: int, a: int, n: int, point):
    """n-fold repeated oracle_add (the definition of scalar multiplication)."""
    acc = None
    for _ in range(n):
        acc = oracle_add(p, a, acc, point)
    return acc


def as_tuple(point: Point | None):
    return None if point is None else (point.x, point.y)


def from_tuple(coords) -> Point | None:
    return None if coords is None else Point(*coords)
