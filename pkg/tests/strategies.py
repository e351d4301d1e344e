"""Hypothesis strategies for random monotone rules and configurations."""

from hypothesis import strategies as st

from eroders.rules import MonotoneRule, _canonical_family


def offsets(d: int, r: int = 2):
    return st.tuples(*[st.integers(-r, r)] * d)


@st.composite
def monotone_rules(draw, d=None, max_support=6, r=2):
    d = draw(st.integers(1, 3)) if d is None else d
    support = draw(st.lists(offsets(d, r), min_size=1, max_size=max_support, unique=True))
    sets = draw(
        st.lists(st.sets(st.sampled_from(support), min_size=1), min_size=1, max_size=5)
    )
    family = [frozenset(s) for s in sets]
    antichain = [s for s in family if not any(o < s for o in family)]
    return MonotoneRule(d, _canonical_family(antichain))
