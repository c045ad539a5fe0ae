import random

import pytest

from atomkp import (
    AffinePoint,
    CurveParams,
    is_on_curve,
    lift_to_jacobian,
    p256,
    point_add,
    scalar_mul_naive,
    to_affine,
)
from atomkp.curves import (
    enumerate_points,
    find_toy_curve,
    load_curve_file,
    render_curve_file,
)
from atomkp.errors import ConfigError, CurveError
from atomkp.field import FieldParams, is_prime


def test_p256_constants_lock():
    curve = p256()
    assert is_on_curve(curve.base_point, curve)
    assert scalar_mul_naive(curve.order, curve.base_point, curve).at_infinity


def test_origin_not_on_p256():
    curve = p256()
    zero = curve.point(0, 0)
    assert not is_on_curve(zero, curve)
    with pytest.raises(CurveError):
        point_add(zero, curve.base_point, curve)


def test_point_add_identity_and_inverse(toy):
    P = toy.base_point
    inf = AffinePoint.infinity()
    assert point_add(P, inf, toy) == P
    assert point_add(inf, P, toy) == P
    minus = AffinePoint.of(P.x, -P.y)
    assert point_add(P, minus, toy).at_infinity


def test_toy_group_axioms_exhaustive(toy):
    pts = enumerate_points(toy) + [AffinePoint.infinity()]
    for a in pts:
        for b in pts:
            s = point_add(a, b, toy)
            assert is_on_curve(s, toy)
            assert s == point_add(b, a, toy)


def test_scalar_mul_matches_repeated_addition_exhaustive(toy):
    P = toy.base_point
    acc = AffinePoint.infinity()
    for k in range(toy.order + 1):
        assert scalar_mul_naive(k, P, toy) == acc
        acc = point_add(acc, P, toy)
    assert scalar_mul_naive(toy.order, P, toy).at_infinity


def test_scalar_mul_trivia(toy):
    assert scalar_mul_naive(1, toy.base_point, toy) == toy.base_point
    assert scalar_mul_naive(0, toy.base_point, toy).at_infinity


def test_scalar_mul_additivity_randomized():
    curve = p256()
    rng = random.Random(99)
    for _ in range(5):
        k1 = rng.randrange(1, curve.order)
        k2 = rng.randrange(1, curve.order)
        lhs = scalar_mul_naive((k1 + k2) % curve.order, curve.base_point, curve)
        rhs = point_add(
            scalar_mul_naive(k1, curve.base_point, curve),
            scalar_mul_naive(k2, curve.base_point, curve),
            curve,
        )
        assert lhs == rhs


def test_to_affine_cases(toy):
    fp = toy.field
    inf = lift_to_jacobian(AffinePoint.infinity(), toy)
    assert to_affine(inf, toy).at_infinity
    P = toy.base_point
    assert to_affine(lift_to_jacobian(P, toy, 1), toy) == P
    for z in range(2, toy.field.modulus):
        assert to_affine(lift_to_jacobian(P, toy, z), toy) == P
    with pytest.raises(CurveError):
        lift_to_jacobian(P, toy, toy.field.modulus)  # z == 0 mod p
    assert fp.modulus == toy.field.modulus


def test_curve_params_validation(toy):
    fp = toy.field
    with pytest.raises(CurveError):
        CurveParams(
            field=fp,
            a=fp.element(1),  # not -3
            b=toy.b,
            base_point=toy.base_point,
            order=toy.order,
        )
    with pytest.raises(CurveError):
        CurveParams(
            field=fp,
            a=toy.a,
            b=toy.b,
            base_point=AffinePoint.of(fp.element(0), fp.element(1)),
            order=toy.order,
        )


def test_toy_fixture_invariants(toy):
    assert toy.field.modulus <= 1000
    assert toy.a.value == toy.field.modulus - 3
    assert is_prime(toy.order) and toy.order >= 11
    assert is_on_curve(toy.base_point, toy)
    assert scalar_mul_naive(toy.order, toy.base_point, toy).at_infinity
    for k in range(1, toy.order):
        assert not scalar_mul_naive(k, toy.base_point, toy).at_infinity


def test_find_toy_curve_is_deterministic(toy):
    again = find_toy_curve()
    assert again == toy


def test_curve_file_round_trip(tmp_path, toy):
    path = tmp_path / "curve.txt"
    path.write_text(render_curve_file(toy), encoding="utf-8")
    loaded = load_curve_file(path)
    assert loaded == toy


def test_curve_file_errors(tmp_path, toy):
    path = tmp_path / "curve.txt"
    path.write_text("p=17\nb=1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_curve_file(path)
    bad = render_curve_file(toy).replace(f"order={toy.order:#x}", f"order={toy.order + 1:#x}")
    path.write_text(bad, encoding="utf-8")
    with pytest.raises(CurveError):
        load_curve_file(path)


def test_curve_file_accepts_decimal(tmp_path, toy):
    text = (
        f"p={toy.field.modulus}\nb={toy.b.value}\n"
        f"gx={toy.base_point.x.value}\ngy={toy.base_point.y.value}\norder={toy.order}\n"
    )
    path = tmp_path / "curve.txt"
    path.write_text(text, encoding="utf-8")
    assert load_curve_file(path) == toy
