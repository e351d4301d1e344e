import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eroders import ensemble as ens
from eroders import lattice as lt
from eroders import rules
from eroders.errors import InvalidParameters


def test_matches_single_replica_lattice_runs(nec):
    event = ens.Event(lt.sphere((1, 0), 2))
    t, eps, seed = 6, 0.35, 21
    res = ens.run_ensemble(nec, eps, t, event, 130, seed, keep_replicas=True)
    lo, hi = ens.light_cone_boxes(nec, (-1, -2), (3, 2), t)[0]
    assert 0 < res.hits < 130
    for r in range(0, 130, 7):
        cfg = ens.replica_trajectory(nec, eps, t, seed, r, lo, hi)
        assert all(cfg[s] for s in event.ones) == res.replica_hits[r]


def test_event_with_zeros(nsmm):
    ones = {(0, 0), (1, 0)}
    zeros = {(0, 3)}
    ev = ens.Event(ones, zeros)
    t, eps = 4, 0.3
    res = ens.run_ensemble(nsmm, eps, t, ev, 64, 2, keep_replicas=True)
    lo, hi = ens.light_cone_boxes(nsmm, (0, 0), (1, 3), t)[0]
    for r in range(64):
        cfg = ens.replica_trajectory(nsmm, eps, t, 2, r, lo, hi)
        expect = all(cfg[s] for s in ones) and not any(cfg[s] for s in zeros)
        assert expect == res.replica_hits[r]
    with pytest.raises(InvalidParameters):
        ens.Event({(0, 0)}, {(0, 0)})


def test_thread_count_does_not_matter(nec):
    ev = ens.Event(lt.sphere((0, 0), 1))
    a = ens.run_ensemble(nec, 0.2, 5, ev, 5000, 9, threads=1, keep_replicas=True)
    b = ens.run_ensemble(nec, 0.2, 5, ev, 5000, 9, threads=8, keep_replicas=True)
    assert a.hits == b.hits and np.array_equal(a.replica_hits, b.replica_hits)


def test_partial_word_and_counts(nec):
    ev = ens.Event(lt.sphere((0, 0), 1))
    res = ens.run_ensemble(nec, 0.3, 3, ev, 100, 4, keep_replicas=True)
    assert len(res.replica_hits) == 100 and res.replica_hits.sum() == res.hits
    # the first 100 replicas of a larger run are the same replicas
    big = ens.run_ensemble(nec, 0.3, 3, ev, 1000, 4, keep_replicas=True)
    assert np.array_equal(big.replica_hits[:100], res.replica_hits)


def test_empty_event_and_extremes(nec):
    assert ens.run_ensemble(nec, 0.1, 3, ens.Event(set()), 50, 1).hits == 50
    assert ens.run_ensemble(nec, 1.0, 2, ens.Event(lt.sphere((0, 0), 3)), 70, 1).hits == 70
    assert ens.run_ensemble(nec, 0.0, 5, ens.Event({(0, 0)}), 70, 1).hits == 0


@given(
    st.sampled_from(["nec", "nsmm", "non-example", "min-max:2:1"]),
    st.floats(0.0, 0.6),
    st.floats(0.0, 0.6),
    st.integers(0, 6),
    st.integers(0, 2**63),
)
@settings(max_examples=40, deadline=None)
def test_replicas_monotone_in_eps_and_t(name, e1, e2, t, seed):
    rule = rules.builtin(name)
    lo, hi = sorted((e1, e2))
    ev = ens.Event(lt.sphere((0, 0), 1))
    a = ens.run_ensemble(rule, lo, t, ev, 128, seed, keep_replicas=True).replica_hits
    b = ens.run_ensemble(rule, hi, t, ev, 128, seed, keep_replicas=True).replica_hits
    c = ens.run_ensemble(rule, hi, t + 1, ev, 128, seed, keep_replicas=True).replica_hits
    assert not np.any(a & ~b)
    assert not np.any(b & ~c)


def test_monotone_in_initial(nec):
    ev = ens.Event(lt.sphere((0, 0), 2))
    a = ens.run_ensemble(nec, 0.2, 6, ev, 256, 3, keep_replicas=True).replica_hits
    b = ens.run_ensemble(nec, 0.2, 6, ev, 256, 3, initial=lt.nec_spider(1), keep_replicas=True).replica_hits
    assert not np.any(a & ~b) and b.sum() > a.sum()


def test_pure_noise_marker():
    pn = ens.PureNoise(2)
    assert pn == ens.PureNoise(2) and pn.label() == "pure-noise"
    res = ens.run_ensemble(pn, 0.5, 7, ens.Event({(0, 0), (1, 0)}), 20000, 1)
    assert abs(res.hits / 20000 - 0.25) < 4 * np.sqrt(0.25 * 0.75 / 20000)
