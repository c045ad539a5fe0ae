"""Reference elliptic-curve mathematics used as ground truth for kP.

Short-Weierstrass curves with a = -3, the family the atomic-pattern
schedules assume.  Everything here is textbook affine group law plus the
Jacobian-to-affine conversion; nothing in this module knows about clock
cycles or the bus, so it serves as an independent oracle for the
datapath simulation.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, CurveError, FixtureError
from .field import FieldElement, FieldParams, fe_inv, is_prime


@dataclass(frozen=True)
class AffinePoint:
    x: Optional[FieldElement]
    y: Optional[FieldElement]
    at_infinity: bool = False

    @classmethod
    def infinity(cls) -> "AffinePoint":
        return cls(None, None, True)

    @classmethod
    def of(cls, x: FieldElement, y: FieldElement) -> "AffinePoint":
        return cls(x, y, False)


@dataclass(frozen=True)
class JacobianPoint:
    """Projective (X, Y, Z) with x = X/Z^2, y = Y/Z^3; Z = 0 encodes infinity."""

    X: FieldElement
    Y: FieldElement
    Z: FieldElement


@dataclass(frozen=True)
class CurveParams:
    field: FieldParams
    a: FieldElement
    b: FieldElement
    base_point: AffinePoint
    order: int

    def __post_init__(self):
        p = self.field.modulus
        if self.a.value != p - 3:
            raise CurveError("curve coefficient a must be -3 mod p")
        disc = (4 * self.a.value ** 3 + 27 * self.b.value ** 2) % p
        if disc == 0:
            raise CurveError("singular curve: 4a^3 + 27b^2 == 0")
        if self.order < 2:
            raise CurveError(f"invalid base point order {self.order}")
        if not is_on_curve(self.base_point, self):
            raise CurveError("base point is not on the curve")

    def point(self, x: int, y: int) -> AffinePoint:
        return AffinePoint.of(self.field.element(x), self.field.element(y))


def is_on_curve(point: AffinePoint, curve: CurveParams) -> bool:
    if point.at_infinity:
        return True
    p = curve.field.modulus
    x, y = point.x.value, point.y.value
    return y * y % p == (x * x * x + curve.a.value * x + curve.b.value) % p


def _require_on_curve(point: AffinePoint, curve: CurveParams):
    if not is_on_curve(point, curve):
        raise CurveError(f"point not on curve: {point}")


def point_neg(point: AffinePoint, curve: CurveParams) -> AffinePoint:
    if point.at_infinity:
        return point
    return AffinePoint.of(point.x, -point.y)


def point_add(p1: AffinePoint, p2: AffinePoint, curve: CurveParams) -> AffinePoint:
    """Group sum by the chord-and-tangent rule, covering all special cases."""
    _require_on_curve(p1, curve)
    _require_on_curve(p2, curve)
    if p1.at_infinity:
        return p2
    if p2.at_infinity:
        return p1
    field = curve.field
    if p1.x == p2.x:
        if (p1.y.value + p2.y.value) % field.modulus == 0:
            return AffinePoint.infinity()
        # Tangent: s = (3x^2 + a) / 2y
        num = field.element(3 * p1.x.value * p1.x.value + curve.a.value)
        den = field.element(2 * p1.y.value)
    else:
        num = p2.y - p1.y
        den = p2.x - p1.x
    s = num * fe_inv(den)
    x3 = s * s - p1.x - p2.x
    y3 = s * (p1.x - x3) - p1.y
    return AffinePoint.of(x3, y3)


def scalar_mul_naive(k: int, point: AffinePoint, curve: CurveParams) -> AffinePoint:
    """Plain left-to-right double-and-add on the affine group law."""
    if k < 0:
        raise CurveError("negative scalars are not supported")
    _require_on_curve(point, curve)
    if k == 0 or point.at_infinity:
        return AffinePoint.infinity()
    acc = point
    for bit in bin(k)[3:]:
        acc = point_add(acc, acc, curve)
        if bit == "1":
            acc = point_add(acc, point, curve)
    return acc


def to_affine(jac: JacobianPoint, curve: CurveParams) -> AffinePoint:
    if jac.Z.value == 0:
        return AffinePoint.infinity()
    zinv = fe_inv(jac.Z)
    zinv2 = zinv * zinv
    return AffinePoint.of(jac.X * zinv2, jac.Y * zinv2 * zinv)


def lift_to_jacobian(point: AffinePoint, curve: CurveParams, z: int = 1) -> JacobianPoint:
    """Represent an affine point with an arbitrary nonzero Z coordinate."""
    field = curve.field
    if point.at_infinity:
        one = field.element(1)
        return JacobianPoint(one, one, field.element(0))
    if z % field.modulus == 0:
        raise CurveError("Z must be nonzero for a finite point")
    ze = field.element(z)
    z2 = ze * ze
    return JacobianPoint(point.x * z2, point.y * z2 * ze, ze)


# NIST P-256 domain parameters, transcribed from the published standard.
_P256_P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
_P256_B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
_P256_GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
_P256_GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5
_P256_N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551


@functools.lru_cache(maxsize=None)
def p256() -> CurveParams:
    field = FieldParams.from_modulus(_P256_P)
    return CurveParams(
        field=field,
        a=field.element(-3),
        b=field.element(_P256_B),
        base_point=AffinePoint.of(field.element(_P256_GX), field.element(_P256_GY)),
        order=_P256_N,
    )


def _enumerate_finite(field: FieldParams, a: FieldElement, b: FieldElement) -> list[AffinePoint]:
    p = field.modulus
    if p > 4096:
        raise CurveError("point enumeration is restricted to toy curves")
    squares: dict[int, list[int]] = {}
    for y in range(p):
        squares.setdefault(y * y % p, []).append(y)
    points = []
    for x in range(p):
        rhs = (x * x * x + a.value * x + b.value) % p
        for y in squares.get(rhs, ()):
            points.append(AffinePoint.of(field.element(x), field.element(y)))
    return points


def enumerate_points(curve: CurveParams) -> list[AffinePoint]:
    """All finite points of a small curve by brute force (toy curves only)."""
    return _enumerate_finite(curve.field, curve.a, curve.b)


def _prime_factors(n: int) -> list[int]:
    factors = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            factors.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        factors.append(n)
    return factors


def find_toy_curve(p_max: int = 1000, min_subgroup: int = 11) -> CurveParams:
    """Exhaustive search for the smallest toy fixture.

    Finds the first (p, b) with a = -3 whose group has a prime-order
    subgroup of size >= min_subgroup, and returns the curve with a base
    point generating exactly that subgroup.  Using a prime-order base
    point keeps the branch-free hardware schedule away from the
    exceptional group-law cases for every scalar 2 <= k < order.
    """
    candidates = [n for n in range(7, p_max + 1) if is_prime(n)]
    for p in candidates:
        field = FieldParams.from_modulus(p)
        a = field.element(-3)
        for b_int in range(1, p):
            b = field.element(b_int)
            if (4 * a.value ** 3 + 27 * b.value ** 2) % p == 0:
                continue
            finite = _enumerate_finite(field, a, b)
            if not finite:
                continue
            group_order = len(finite) + 1
            q = max((f for f in _prime_factors(group_order) if f >= min_subgroup), default=None)
            if q is None:
                continue
            cofactor = group_order // q
            probe = CurveParams(field=field, a=a, b=b, base_point=finite[0], order=group_order)
            for candidate in finite:
                base = scalar_mul_naive(cofactor, candidate, probe)
                if base.at_infinity:
                    continue
                if not scalar_mul_naive(q, base, probe).at_infinity:
                    raise FixtureError("cofactor-cleared point does not have prime order")
                return CurveParams(field=field, a=a, b=b, base_point=base, order=q)
    raise FixtureError(f"no toy curve found with p <= {p_max} and subgroup >= {min_subgroup}")


@functools.lru_cache(maxsize=None)
def toy_curve() -> CurveParams:
    """The default toy fixture used throughout the test-suite."""
    return find_toy_curve()


def _parse_int(text: str) -> int:
    text = text.strip()
    return int(text, 16) if text.lower().startswith("0x") else int(text, 10)


def load_curve_file(path) -> CurveParams:
    """Load curve parameters from a plain-text key=value file.

    Required keys: p, b, gx, gy, order (a is fixed to -3 mod p).
    Integers may be decimal or 0x-prefixed hex.  The base point and its
    order are verified before the curve is returned.
    """
    values: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"malformed curve file line: {line!r}")
            key, _, raw = line.partition("=")
            values[key.strip()] = _parse_int(raw)
    missing = {"p", "b", "gx", "gy", "order"} - set(values)
    if missing:
        raise ConfigError(f"curve file missing keys: {sorted(missing)}")
    field = FieldParams.from_modulus(values["p"])
    curve = CurveParams(
        field=field,
        a=field.element(-3),
        b=field.element(values["b"]),
        base_point=AffinePoint.of(field.element(values["gx"]), field.element(values["gy"])),
        order=values["order"],
    )
    if not scalar_mul_naive(curve.order, curve.base_point, curve).at_infinity:
        raise CurveError("order * base_point is not the point at infinity")
    return curve


def render_curve_file(curve: CurveParams) -> str:
    return "".join(
        f"{key}={value:#x}\n"
        for key, value in (
            ("p", curve.field.modulus),
            ("b", curve.b.value),
            ("gx", curve.base_point.x.value),
            ("gy", curve.base_point.y.value),
            ("order", curve.order),
        )
    )
