import pytest

from stratmu.gb_engine import Ideal, colength_at_origin
from stratmu.nash_cech import (
    UnsupportedInstance,
    exceptional_correction_certified,
    hilbert_samuel_data,
    nash_graph_charts,
    nash_pushforward_chi,
    smooth_route_chi,
)
from stratmu.poly_core import LOCAL, PolyMatrix, PolyRing, determinant

R3 = PolyRing(["x", "y", "z"], LOCAL)
x, y, z = R3.gens()
CONE = x * y - z * z


def row(p):
    return PolyMatrix(R3, 1, 3, [p.gradient()])


def minor_colength(g, p):
    A = PolyMatrix.stack(row(p), row(g))
    minors = [determinant(A.submatrix([0, 1], c)) for c in ([0, 1], [0, 2], [1, 2])]
    return colength_at_origin(Ideal(R3, [g] + minors))


def test_cone_atlas_is_consistent():
    atlas = nash_graph_charts(CONE)
    assert not atlas.smooth_at_origin
    assert len(atlas.retained) == 3
    assert all(c.fiber_dimension == 1 for c in atlas.charts)
    assert atlas.cocycle_ok() and atlas.transitions_invertible() and atlas.overlaps_consistent()


def test_hilbert_samuel_of_cone():
    # the A1 surface singularity has multiplicity 2: HS(e) = e^2
    hs = hilbert_samuel_data(CONE)
    assert [hs.length(e) for e in range(1, 6)] == [1, 4, 9, 16, 25]


@pytest.mark.parametrize("k", [2, 3, 4])
def test_cone_thimble_difference(k):
    atlas = nash_graph_charts(CONE)
    f, l = y - x ** k, x + 2 * y + 3 * z
    rf, rl = nash_pushforward_chi(atlas, [], row(f)), nash_pushforward_chi(atlas, [], row(l))
    # the untwisted strand is O_X / (g, 2-minors): an independent colength
    assert rf.base_chi == minor_colength(CONE, f) == k + 1
    assert rf.correction == rl.correction == 2
    assert rf.certificate.as_dict() == {"start": 4, "corrections": [[4, 2], [8, 2]], "stable": True}
    assert rf.route == "nash"
    assert rf.chi - rl.chi == k - 1


@pytest.mark.parametrize("k", [2, 3])
def test_permuting_variables_keeps_the_value(k):
    g = x * y - z * z
    swapped = nash_graph_charts(y * x - z * z)
    base = nash_graph_charts(g)
    a = nash_pushforward_chi(base, [], row(y - x ** k)).chi
    b = nash_pushforward_chi(swapped, [], row(x - y ** k)).chi
    assert a == b
    # a cyclic relabelling of the cone equation
    cyc = nash_graph_charts(z * x - y * y)
    assert nash_pushforward_chi(cyc, [], row(z - x ** k)).chi == a


def test_smooth_closure_agrees_with_smooth_route():
    h, f = x, y * y + z ** 3 + x
    res = nash_pushforward_chi(nash_graph_charts(h), [], row(f))
    assert res.route == "smooth" and res.correction == 0
    assert res.chi == smooth_route_chi(h, [], row(f)) == minor_colength(h, f) == 2
    with pytest.raises(UnsupportedInstance):
        smooth_route_chi(CONE, [], row(f))


def test_correction_is_stable_under_explicit_truncation():
    c, cert = exceptional_correction_certified(CONE, 0, 1, truncation=10)
    assert c == 2 and cert.stable and cert.corrections[0] == (10, 2)
