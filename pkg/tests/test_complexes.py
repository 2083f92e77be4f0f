import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratmu.complexes import (
    ComplexError,
    FreeComplex,
    InfiniteHomology,
    euler_characteristic,
    homology_lengths,
    parse_complex,
    prune_units,
    serialize_complex,
    tensor_complexes,
    two_term,
)
from stratmu.gb_engine import INFINITE
from stratmu.kosz_enc import koszul_complex
from stratmu.poly_core import LOCAL, PolyMatrix, PolyRing, parse_poly

from strategies import polys

R4 = PolyRing(["x", "y", "z", "w"], LOCAL)
R2 = PolyRing(["x", "y"], LOCAL)


def test_rejects_non_complex():
    x, y = R2.gens()
    d0 = PolyMatrix(R2, 1, 1, [[x]])
    with pytest.raises(ComplexError):
        FreeComplex(R2, -2, [1, 1, 1], {-2: d0, -1: d0})
    with pytest.raises(ComplexError):
        FreeComplex(R2, -1, [2, 1], {-1: d0})


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_koszul_homology_concentrated_in_degree_zero(k):
    x, y, z, w = R4.gens()
    K = koszul_complex(R4, [k * x ** (k - 1), y, z, w])
    assert K.rank_vector() == (1, 4, 6, 4, 1)
    lengths = dict(homology_lengths(K))
    assert lengths[0] == k - 1
    assert all(v == 0 for p, v in lengths.items() if p != 0)
    assert euler_characteristic(K) == k - 1


def test_non_isolated_homology_is_infinite():
    x, y = R2.gens()
    K = koszul_complex(R2, [x * y, x * x])
    lengths = dict(homology_lengths(K))
    assert lengths[0] is INFINITE
    with pytest.raises(InfiniteHomology):
        euler_characteristic(K)


@given(polys(R2.with_order(LOCAL), max_deg=2), polys(R2.with_order(LOCAL), max_deg=2), polys(R2, max_deg=2))
@settings(max_examples=30, deadline=None)
def test_tensor_squares_to_zero(a, b, c):
    C = tensor_complexes(two_term(R2, R2(a)), koszul_complex(R2, [R2(b), R2(c)]))
    for p in range(C.lo, C.hi - 1):
        assert (C.d(p + 1) * C.d(p)).is_zero()
    assert C.rank_vector() == (1, 3, 3, 1)


@given(st.integers(-3, 3).filter(bool), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=20, deadline=None)
def test_pruning_preserves_homology(u, a, b):
    x, y = R2.gens()
    # a planted unit entry (u + x) cancels a pair of free summands
    K = koszul_complex(R2, [u + x, x ** a, y ** b])
    P = prune_units(K)
    assert sum(P.ranks) < sum(K.ranks)
    assert homology_lengths(P) == homology_lengths(K)
    assert euler_characteristic(P) == 0


def test_koszul_with_unit_entry_prunes_to_zero():
    x, y = R2.gens()
    K = koszul_complex(R2, [R2.one(), x ** 2, y ** 3])
    P = prune_units(K)
    assert P.is_zero()
    assert P.meta["pruned_eliminations"] == 4


def test_allowed_predicate_restricts_pivots():
    x, y = R2.gens()
    K = koszul_complex(R2, [1 + x, R2.one() * 2, y])
    P = prune_units(K, allowed=lambda p: p.is_constant())
    assert P.is_zero()
    Q = prune_units(K, allowed=lambda p: False)
    assert Q.ranks == K.ranks


def test_serialization_round_trip():
    x, y = R2.gens()
    K = tensor_complexes(two_term(R2, x - 1), koszul_complex(R2, [x * y, parse_poly(R2, "1/3*y^2 - x")]))
    K.meta["note"] = "round trip"
    text = serialize_complex(K)
    back = parse_complex(text)
    assert back.lo == K.lo and back.ranks == K.ranks
    assert all((back.d(p) - K.d(p)).is_zero() for p in range(K.lo, K.hi))
    assert back.meta["note"] == "round trip"
    assert serialize_complex(back) == text


def test_serialization_over_quotient_ring():
    Q = R2.with_quotient([parse_poly(R2, "x*y")])
    x, y = Q.gens()
    C = FreeComplex(Q, -2, [1, 1, 1], {-2: PolyMatrix(Q, 1, 1, [[x]]), -1: PolyMatrix(Q, 1, 1, [[y]])})
    back = parse_complex(serialize_complex(C))
    assert [str(q) for q in back.ring.quotient] == ["x*y"]
    with pytest.raises(ComplexError):
        parse_complex("not a complex\n")
