from hypothesis import given, settings
from hypothesis import strategies as st

from stratmu.gb_engine import (
    INFINITE,
    Ideal,
    colength_at_origin,
    eliminate,
    intersect,
    local_subquotient_length,
    poly_to_vec,
    quotient,
    saturate,
    saturate_generic,
    staircase,
)
from stratmu.poly_core import GLOBAL, LOCAL, PolyRing, parse_poly

R2 = PolyRing(["x", "y"])
R3 = PolyRing(["x", "y", "z"])


def ideal(ring, *texts, order=GLOBAL):
    r = ring.with_order(order)
    return Ideal(r, [parse_poly(r, t) for t in texts])


def test_reduced_basis_of_twisted_cubic():
    I = ideal(R3, "x^2 - y", "x^3 - z")
    B = {str(g) for g in I.basis()}
    assert B == {"x^2 - y", "x*y - z", "y^2 - x*z"}
    assert I.dimension() == 1
    assert I.contains(parse_poly(R3, "y^3 - z^2"))


def test_unit_and_zero_dimensional_ideals():
    assert ideal(R2, "x", "x - 1").is_unit()
    I = ideal(R2, "x^3 - 2*x*y", "x^2*y - 2*y^2 + x")
    assert I.dimension() == 0
    assert {str(g) for g in I.basis()} == {"x^2", "x*y", "y^2 - 1/2*x"}
    assert I.global_colength() == 3


def test_milnor_numbers_of_brieskorn_curves():
    for a, b in [(2, 2), (3, 4), (5, 2), (4, 4)]:
        I = ideal(R2, f"{a}*x^{a - 1}", f"{b}*y^{b - 1}", order=LOCAL)
        assert colength_at_origin(I) == (a - 1) * (b - 1)


def test_local_colength_ignores_points_away_from_origin():
    I = ideal(R2, "x^2*(x - 1)", "y*(y - 2)", order=LOCAL)
    assert colength_at_origin(I) == 2
    assert Ideal(R2, I.generators).global_colength() == 6


def test_positive_dimensional_germ_has_infinite_colength():
    assert colength_at_origin(ideal(R2, "x*y", order=LOCAL)) is INFINITE
    # the line x = 1 misses the origin, the y-axis does not
    assert colength_at_origin(ideal(R2, "x*(x - 1)", "x*y", order=LOCAL)) is INFINITE
    assert colength_at_origin(ideal(R2, "x*(x - 1)", "y", order=LOCAL)) == 1


@given(st.integers(1, 4), st.integers(1, 4), st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_linear_algebra_colength_matches_mora(a, b, u, v, w):
    """Zero-dimensional ideals: the eigenspace route agrees with the local staircase."""
    L = R2.with_order(LOCAL)
    x, y = L.gens()
    I = Ideal(L, [x ** a * (1 + u * x), y ** b * (1 + v * y) + w * x * y])
    mora = staircase(I.leading_exponents(LOCAL), 2)
    mora = mora if mora is INFINITE else len(mora)
    assert colength_at_origin(I) == mora


def test_saturation_and_quotients():
    I = ideal(R2, "x^2*y", "x*y^2")
    J = ideal(R2, "x", "y")
    S = saturate(I, J)
    assert {str(g) for g in S.basis()} == {"x*y"}
    assert quotient(I, ideal(R2, "x")).equals(ideal(R2, "x*y", "y^2"))
    K = intersect(ideal(R2, "x"), ideal(R2, "y"))
    assert K.equals(ideal(R2, "x*y"))
    S2 = saturate_generic(I, J, parse_poly(R2, "2*x + 3*y"))
    assert S2.equals(S) and getattr(S2, "_cert", False)


def test_elimination():
    R = PolyRing(["t", "x", "y"])
    I = ideal(R, "x - t^2", "y - t^3")
    E = eliminate(I, ["t"])
    assert E.equals(Ideal(E.ring, [parse_poly(E.ring, "x^3 - y^2")]))


def test_module_subquotient_length():
    # (m e0 + O e1) / (m^2 e0 + (x, y^2) e1) has length 2 + 2
    x, y = R2.gens()
    big = [poly_to_vec(x, 0), poly_to_vec(y, 0), poly_to_vec(R2.one(), 1)]
    small = [poly_to_vec(p, 0) for p in (x * x, x * y, y * y)] + [poly_to_vec(x, 1), poly_to_vec(y * y, 1)]
    assert local_subquotient_length(big, small, 2, R2) == 4
    # a point of the support away from 0 does not count
    small2 = small[:4] + [poly_to_vec(y * (y - 1), 1)]
    assert local_subquotient_length(big, small2, 2, R2) == 3
    assert local_subquotient_length(big, small[:4], 2, R2) is INFINITE
