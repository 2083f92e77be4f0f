import pytest
from gmpy2 import mpq
from hypothesis import given, settings

from stratmu.poly_core import (
    PolyError,
    PolyMatrix,
    PolyRing,
    all_minors,
    determinant,
    jacobian,
    parse_poly,
    ring_map_apply,
)

from strategies import R3, polys


@given(polys(), polys(), polys())
@settings(max_examples=60, deadline=None)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == R3.zero()


@given(polys())
@settings(max_examples=60, deadline=None)
def test_parse_print_round_trip(p):
    assert parse_poly(R3, str(p)) == p


@given(polys(), polys())
@settings(max_examples=40, deadline=None)
def test_leibniz_rule(a, b):
    for i in range(3):
        assert (a * b).diff(i) == a.diff(i) * b + a * b.diff(i)


def test_exact_rational_coefficients():
    x, y, z = R3.gens()
    p = parse_poly(R3, "1/3*x^2 - 2/7*y*z + 5")
    assert p.constant_term() == 5
    assert (p * 21).constant_term() == 105
    assert (x / 3 * 3) == x
    assert p.total_degree() == 2 and p.low_degree() == 0
    assert p.is_local_unit() and not (p - 5).is_local_unit()


def test_parse_errors_and_unknown_variables():
    with pytest.raises(PolyError):
        parse_poly(R3, "x + w")
    with pytest.raises(PolyError):
        parse_poly(R3, "x +* y")


def test_foreign_ring_is_rejected():
    other = PolyRing(["x", "y"])
    with pytest.raises(PolyError):
        R3(other.var("x")) + R3.var("y")


def test_determinant_and_minors():
    x, y, z = R3.gens()
    M = PolyMatrix(R3, 2, 2, [[x, z], [z, y]])
    assert determinant(M) == x * y - z * z
    J = jacobian([x * y - z ** 2], R3)
    assert J.to_lists() == [[y, x, -2 * z]]
    N = PolyMatrix(R3, 2, 3, [[x, y, z], [y, z, x]])
    assert set(map(str, all_minors(N, 2))) == {str(x * z - y * y), str(x * x - y * z), str(y * x - z * z)}


@given(polys(max_terms=3, max_deg=2), polys(max_terms=3, max_deg=2))
@settings(max_examples=30, deadline=None)
def test_ring_map_is_a_homomorphism(a, b):
    S = PolyRing(["s", "t"])
    s, t = S.gens()
    images = [s + t, s * t, s - 2 * t]
    f = lambda p: ring_map_apply(R3, S, images, p)
    assert f(a * b) == f(a) * f(b)
    assert f(a + b) == f(a) + f(b)


def test_matrix_products():
    x, y, z = R3.gens()
    A = PolyMatrix(R3, 2, 2, [[x, 1], [0, y]])
    B = PolyMatrix(R3, 2, 1, [[z], [x]])
    assert (A * B).to_lists() == [[x * z + x], [x * y]]
    assert PolyMatrix.identity(R3, 2) * A == A
    assert A.transpose().transpose() == A
    assert mpq(1, 2) * 2 == 1
