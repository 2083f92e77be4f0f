from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratmu.complexes import (
    ComplexError,
    euler_characteristic,
    homology_lengths,
    parse_complex,
    prune_units,
    serialize_complex,
    tensor_complexes,
)
from stratmu.gb_engine import Ideal, colength_at_origin
from stratmu.kosz_enc import (
    enc_complex,
    enc_functoriality_maps,
    enc_stacked_reduce,
    exterior_basis,
    has_unit_maximal_minor,
    is_chain_map,
    koszul_complex,
    koszul_functoriality_maps,
    prep_from_complex,
    prep_generic_complex,
    symmetric_basis,
)
from stratmu.poly_core import LOCAL, PolyMatrix, PolyRing, determinant, jacobian, parse_poly

from strategies import polys

R3 = PolyRing(["x", "y", "z"], LOCAL)


def matrix(ring, rows, cols, entries):
    return PolyMatrix(ring, rows, cols, [entries[i * cols:(i + 1) * cols] for i in range(rows)])


def test_basis_orders():
    assert exterior_basis(3, 2) == ((0, 1), (0, 2), (1, 2))
    assert exterior_basis(4, 2)[2:4] == ((1, 2), (0, 3))
    assert symmetric_basis(2, 2) == ((2, 0), (1, 1), (0, 2))
    assert symmetric_basis(0, 0) == ((),)


@given(st.lists(polys(R3, max_deg=2), min_size=1, max_size=3))
@settings(max_examples=25, deadline=None)
def test_single_row_enc_is_koszul(entries):
    n = len(entries)
    A = PolyMatrix(R3, 1, n, [[R3(e) for e in entries]])
    E, K = enc_complex(R3, A), koszul_complex(R3, entries)
    assert E.lo == K.lo and E.ranks == K.ranks
    assert all((E.d(p) - K.d(p)).is_zero() for p in range(K.lo, K.hi))


@given(st.lists(polys(R3, max_deg=2, max_terms=3), min_size=8, max_size=8))
@settings(max_examples=25, deadline=None)
def test_enc_squares_to_zero(entries):
    E = enc_complex(R3, matrix(R3, 2, 4, [R3(e) for e in entries]))
    assert E.rank_vector() == (1, 6, 8, 3)
    for p in range(E.lo, E.hi - 1):
        assert (E.d(p + 1) * E.d(p)).is_zero()


@given(st.lists(polys(R3, max_deg=1, max_terms=2, coeff=3), min_size=18, max_size=18))
@settings(max_examples=15, deadline=None)
def test_functoriality_maps_are_chain_maps(entries):
    A = matrix(R3, 2, 3, [R3(e) for e in entries[:6]])
    psi = matrix(R3, 3, 4, [R3(e) for e in entries[6:]])
    assert is_chain_map(enc_complex(R3, A * psi), enc_complex(R3, A), enc_functoriality_maps(2, psi))
    row = PolyMatrix(R3, 1, 3, [A.to_lists()[0]])
    src = koszul_complex(R3, (row * psi).to_lists()[0])
    assert is_chain_map(src, koszul_complex(R3, row.to_lists()[0]), koszul_functoriality_maps(psi))


def test_planted_unit_minor_reduces_with_equal_homology():
    x, y, z = R3.gens()
    psi = PolyMatrix(R3, 1, 4, [[x, x * x + y, y, z ** 3]])
    phi = PolyMatrix(R3, 1, 4, [[1 + x, R3.zero(), z, R3.zero()]])
    assert has_unit_maximal_minor(phi)
    reduced = enc_stacked_reduce(R3, psi, phi)
    A = PolyMatrix.stack(psi, phi)
    full = enc_complex(R3, A)
    assert sum(reduced.ranks) < sum(full.ranks)
    assert homology_lengths(reduced) == homology_lengths(full)
    # isolated and of the expected codimension: only H^0 = R / (2-minors) survives
    minors = Ideal(R3, [determinant(A.submatrix([0, 1], list(c))) for c in combinations(range(4), 2)])
    assert euler_characteristic(reduced) == colength_at_origin(minors) == 6
    with pytest.raises(ComplexError):
        enc_stacked_reduce(R3, psi, PolyMatrix(R3, 1, 3, [[x, y, z]]))


def _direct(base, f_list, omega, frame):
    A = PolyMatrix.stack(omega, frame) if frame is not None else omega
    K = koszul_complex(base, [base(f) for f in f_list])
    return prune_units(tensor_complexes(K, enc_complex(base, A)))


@pytest.mark.parametrize("k", [2, 3, 4])
def test_generic_complex_substitution_matches_direct(k):
    x, y, z = R3.gens()
    g = x * y - z * z
    P = prep_generic_complex(Ideal(R3, [g]), 1, 1)
    assert P.kind == "hypersurface"
    B = P.base_ring
    omega = PolyMatrix(B, 1, 3, [[B.one(), B.one() * 2, B.one() * 3]])
    f = [y - x ** k]
    frame = jacobian([g], R3).map_entries(B, ring=B)
    sub = P.substitute(f, omega)
    direct = _direct(B, f, omega, frame)
    assert euler_characteristic(sub) == euler_characteristic(direct)


def test_generic_complex_round_trip():
    x, y, z = R3.gens()
    P = prep_generic_complex(Ideal(R3, [x * y - z * z]), 1, 1)
    back = prep_from_complex(parse_complex(serialize_complex(P.complex)))
    assert back.correction == P.correction
    assert back.c_names == P.c_names and back.a_names == P.a_names
    assert [str(q) for q in back.base_ring.quotient] == ["x*y - z^2"]
    B = back.base_ring
    omega = PolyMatrix(B, 1, 3, [[B.one(), B.one() * 2, B.one() * 3]])
    f = [parse_poly(B, "y - x^3")]
    assert euler_characteristic(back.substitute(f, omega)) == euler_characteristic(P.substitute(f, omega))
    with pytest.raises(ComplexError):
        back.substitute(f + f, omega)
    with pytest.raises(ComplexError):
        prep_from_complex(koszul_complex(R3, [x]))


def test_ambient_generic_complex():
    R2 = PolyRing(["x", "y"], LOCAL)
    x, y = R2.gens()
    P = prep_generic_complex(Ideal(R2, []), 1, 1)
    assert P.kind == "ambient" and P.correction == 0
    omega = PolyMatrix(R2, 1, 2, [[R2.one(), R2.one() * 5]])
    f = [x ** 3 + y ** 2]
    assert euler_characteristic(P.substitute(f, omega)) == euler_characteristic(_direct(R2, f, omega, None))
