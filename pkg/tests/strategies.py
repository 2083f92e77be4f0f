"""Shared hypothesis strategies."""
from hypothesis import strategies as st

from stratmu.poly_core import PolyRing

R3 = PolyRing(["x", "y", "z"])


def polys(ring=R3, max_terms=4, max_deg=3, coeff=5):
    n = ring.nvars
    term = st.tuples(st.tuples(*[st.integers(0, max_deg)] * n), st.integers(-coeff, coeff))

    def build(ts):
        p = ring.zero()
        for e, c in ts:
            p = p + ring.monomial(e, c)
        return p

    return st.lists(term, max_size=max_terms).map(build)
