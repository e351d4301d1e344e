from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from eroders.rational_lp import LinearProgram, simplex


def test_simple_optimum():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    lp = LinearProgram()
    x, y = lp.vars(2)
    lp.add({x: 1, y: 2}, "<=", 4)
    lp.add({x: 3, y: 1}, "<=", 6)
    res = lp.solve({x: -1, y: -1})
    assert res.status == "optimal"
    assert res.x == [Fraction(8, 5), Fraction(6, 5)]
    assert res.objective == Fraction(-14, 5)


def test_infeasible_and_unbounded():
    lp = LinearProgram()
    x = lp.var()
    lp.add({x: 1}, "<=", -1)
    assert lp.solve().status == "infeasible"
    lp = LinearProgram()
    x = lp.var(free=True)
    lp.add({x: 1}, "<=", 3)
    assert lp.solve({x: 1}).status == "unbounded"


def test_redundant_equalities():
    res = simplex([1, 1], [[1, 1], [2, 2]], [2, 4])
    assert res.status == "optimal" and res.objective == 2


@given(
    st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5), st.integers(-10, 10)), min_size=1, max_size=6),
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
)
@settings(max_examples=150, deadline=None)
def test_box_lp_against_vertex_enumeration(rows, c):
    """Minimise over {a x + b y <= r} intersected with the box [-4, 4]^2 and compare with all vertices."""
    import itertools

    cons = list(rows) + [(1, 0, 4), (-1, 0, 4), (0, 1, 4), (0, -1, 4)]
    lp = LinearProgram()
    x, y = lp.vars(2, free=True)
    for a, b, r in cons:
        lp.add({x: a, y: b}, "<=", r)
    res = lp.solve({x: c[0], y: c[1]})
    best = None
    for (a1, b1, r1), (a2, b2, r2) in itertools.combinations(cons, 2):
        det = a1 * b2 - a2 * b1
        if det == 0:
            continue
        px = Fraction(r1 * b2 - r2 * b1, det)
        py = Fraction(a1 * r2 - a2 * r1, det)
        if all(a * px + b * py <= r for a, b, r in cons):
            val = c[0] * px + c[1] * py
            best = val if best is None else min(best, val)
    if best is None:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal" and res.objective == best
