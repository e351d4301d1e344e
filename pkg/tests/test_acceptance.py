"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from eroders import cli
from eroders import droplet as dr
from eroders import geometry as geo
from eroders import lattice as lt
from eroders import rules
from eroders.ensemble import PureNoise
from eroders.lattice import Configuration, NoiseModel, RngSpec
from eroders.rules import MonotoneRule
from oracles import brute_transversals, hulls_meet_2d, primitive_directions, simulated_front_velocity


@pytest.fixture
def report(capsys):
    def _report(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance {n:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return _report


def random_rule(rng, d=2, max_support=8, r=2):
    k = int(rng.integers(1, max_support + 1))
    pts = {tuple(int(v) for v in rng.integers(-r, r + 1, size=d)) for _ in range(k)}
    pts = sorted(pts)
    sets = []
    for _ in range(int(rng.integers(1, 5))):
        m = int(rng.integers(1, len(pts) + 1))
        sets.append(frozenset(pts[i] for i in rng.choice(len(pts), m, replace=False)))
    sets = [s for s in set(sets) if not any(o < s for o in sets)]
    return MonotoneRule(d, tuple(sets))


def _spiders(rule, T_of):
    worst, bad = 0.0, []
    for L in range(2, 9):
        t0 = time.perf_counter()
        res = dr.verify_spider_growth(rule, L)
        worst = max(worst, time.perf_counter() - t0)
        if res != dr.Verified(T_of(L)):
            bad.append((L, str(res)))
    return bad, worst


def test_1_nec_spider_growth(report):
    bad, worst = _spiders(rules.nec(), lambda L: 4 * L)
    report(1, not bad and worst < 1.0, f"NEC spiders L=2..8 fill sphere((-L,-L),L) after 4L steps; failures={bad}, slowest {worst:.3f}s")


def test_2_nsmm_spider_growth(report):
    bad, worst = _spiders(rules.nsmm(), lambda L: 2 * L)
    report(2, not bad and worst < 1.0, f"NSMM segments L=2..8 fill sphere((0,-L),L) after 2L steps; failures={bad}, slowest {worst:.3f}s")


def test_3_velocity_identities(report):
    problems = []
    nec_cls = geo.classify_velocity_condition(rules.nec())
    if not nec_cls.exact or any(g != 0 for _, g in nec_cls.rays):
        problems.append("nec fan has a nonzero sum")
    ns = geo.classify_velocity_condition(rules.nsmm())
    if ns.condition != "B" or ns.witness not in ((0, 1), (0, -1)) or geo.thickness_rate(rules.nsmm(), ns.witness) != 1:
        problems.append(f"nsmm reported {ns.label}")
    ne = geo.classify_velocity_condition(rules.non_example())
    sampled = [geo.thickness_rate(rules.non_example(), u) for u in geo.sampled_directions(2)]
    if ne.condition != "neither" or max(sampled) >= 0:
        problems.append(f"non-example reported {ne.label}, max sampled sum {max(sampled)}")
    mismatches = 0
    builders = ["nec", "nsmm", "non-example", "identity", "min-max:2:1"]
    for name in builders:
        rule = rules.builtin(name)
        for u in primitive_directions(2):
            mismatches += geo.scaled_front_velocity(rule, u) != simulated_front_velocity(rule, u)
    if mismatches:
        problems.append(f"{mismatches} closed-form/simulated velocity mismatches")
    report(3, not problems, f"fan sums and classifications, {len(builders)} rules x 16 directions vs front simulation; problems={problems}")


def test_4_sigma_criterion(report):
    problems = []
    for name in ("nec", "nsmm", "non-example"):
        if str(geo.sigma_empty(rules.builtin(name), "zeros")) != "Empty":
            problems.append(name)
    ident = geo.sigma_empty(rules.identity(), "zeros")
    if ident.empty or any(ident.witness.numerators):
        problems.append(f"identity gave {ident}")
    rng = np.random.default_rng(2024)
    checked = disagreements = 0
    while checked < 300:
        rule = random_rule(rng, max_support=8)
        if len(rule.support) > 8:
            continue
        exact = geo.sigma_empty(rule, "zeros").empty
        oracle = hulls_meet_2d(brute_transversals(rule.minimal_one_sets)) is None
        disagreements += exact != oracle
        checked += 1
    if disagreements:
        problems.append(f"{disagreements} LP/oracle disagreements")
    report(4, not problems, f"sigma_0 Empty for nec/nsmm/non-example, identity Witness(0,0), {checked} random supports <= 8 offsets cross-checked; problems={problems}")


def test_5_certificate_round_trip(report):
    nec = rules.nec()
    cert = geo.farkas_certificate(nec, "ones")
    targets = [(0, 1), (1, 0), (-1, -1)]

    def matches(n, t):
        return n[0] * t[1] == n[1] * t[0] and n[0] * t[0] + n[1] * t[1] > 0

    normals = [phi.linear for phi in cert.functionals]
    shape_ok = len(normals) == 3 and all(sum(matches(n, t) for n in normals) == 1 for t in targets)
    rng = np.random.default_rng(7)
    emitted = invalid = 0
    candidates = [rules.builtin(n) for n in ("nec", "nsmm", "non-example", "min-max:3:1", "min-max:4:2")]
    candidates += [random_rule(rng, d=int(rng.integers(1, 4)), max_support=7) for _ in range(200)]
    for rule in candidates:
        for side in ("zeros", "ones"):
            if geo.sigma_empty(rule, side).empty:
                c = geo.farkas_certificate(rule, side)
                emitted += 1
                invalid += not geo.certificate_validate(rule, c)
    ok = shape_ok and invalid == 0 and geo.certificate_validate(nec, cert).valid
    report(5, ok, f"NEC normals {[tuple(map(str, n)) for n in normals]} ~ (0,1),(1,0),(-1,-1): {shape_ok}; {emitted} certificates emitted, {invalid} invalid")


def test_6_lemma_verification(report):
    nec = rules.nec()
    t0 = time.perf_counter()
    cert = geo.farkas_certificate(nec, "ones")
    l2 = dr.verify_lemma2(nec, cert, 30)
    l3 = dr.verify_lemma3(cert, 50)
    elapsed = time.perf_counter() - t0
    report(6, bool(l2) and bool(l3) and elapsed < 10, f"lemma2 t<=30: {l2}; lemma3 t<=50: {l3}; {elapsed:.2f}s")


def test_7_product_measure_ground_truth(report):
    eps, samples = 0.25, 100_000
    lines, ok = [], True
    for L in range(1, 5):
        region = lt.sphere((0, 0), L)
        est = dr.estimate_cylinder_prob(PureNoise(2), eps, region, 1, samples, 1)
        exact = len(region) * math.log(1 / eps)
        within = est.hits > 0 and abs(est.minus_log_p - exact) <= 4 * est.minus_log_p_std_err
        ok &= within
        lines.append(f"L={L} hits={est.hits} -ln p={est.minus_log_p:.3f} vs {exact:.3f} {'ok' if within else 'miss'}")
    fit = dr.product_measure_curve(eps, [2, 3, 4, 5, 6]).fit
    exp_ok = abs(fit.exponent - 2.0) <= 0.2
    report(7, ok and exp_ok, "; ".join(lines) + f"; exact-measure exponent over L=2..6 = {fit.exponent:.3f}")


def test_8_ordinal_non_gibbs_signature(report):
    eps, Ls, samples = 0.25, [2, 3, 4, 5, 6], 100_000
    nec = dr.scaling_curve(rules.nec(), eps, Ls, lambda L: 16 * L, samples, 11, require_fit=False)
    base = dr.scaling_curve(PureNoise(2), eps, Ls, lambda L: 16 * L, samples, 11, require_fit=False)
    sizes = [len(lt.sphere((0, 0), L)) for L in Ls]
    nec_ratio = [y / n for (_, y, _), n in zip(nec.points, sizes)]
    base_ratio = [y / n for (_, y, _), n in zip(base.points, sizes)]
    fits_ok = nec.fit is not None and base.fit is not None and nec.fit.interval()[1] < base.fit.interval()[0]
    decreasing = all(a > b for a, b in zip(nec_ratio, nec_ratio[1:]))
    finite = [r for r in base_ratio if math.isfinite(r)]
    constant = len(finite) == len(base_ratio) and max(finite) - min(finite) < 0.1 * math.log(1 / eps)
    detail = (
        f"NEC hits {[e.hits for e in nec.estimates]} fit {nec.fit and round(nec.fit.exponent, 3)}; "
        f"baseline hits {[e.hits for e in base.estimates]} fit {base.fit and round(base.fit.exponent, 3)}; "
        f"NEC -ln p/|S| {[round(r, 4) for r in nec_ratio]}"
    )
    report(8, fits_ok and decreasing and constant, detail)


def test_9_reproducibility(report, tmp_path, capsys):
    argv = ["droplet", "nec", "--eps", "0.25", "--L", "1..3", "--t", "16L", "--samples", "20000", "--seed", "99"]
    a, b = tmp_path / "one.csv", tmp_path / "eight.csv"
    assert cli.main(argv + ["--csv", str(a), "--threads", "1"]) == 0
    assert cli.main(argv + ["--csv", str(b), "--threads", "8"]) == 0
    regen1, regen8 = tmp_path / "r1.csv", tmp_path / "r8.csv"
    codes = [
        cli.main(["replay", str(a), "--threads", "1", "--output", str(regen1)]),
        cli.main(["replay", str(a), "--threads", "8", "--output", str(regen8)]),
    ]
    capsys.readouterr()
    same = a.read_bytes() == b.read_bytes() == regen1.read_bytes() == regen8.read_bytes()
    report(9, same and codes == [0, 0], f"CSV at 1 and 8 threads and both replays byte-identical: {same}")


def test_10_monotone_coupling(report):
    rng = np.random.default_rng(10)
    pool = [rules.builtin(n) for n in ("nec", "nsmm", "non-example", "identity", "min-max:2:1")]
    failures = 0
    trials = 1000
    for trial in range(trials):
        rule = pool[trial % len(pool)] if trial % 2 else random_rule(rng, max_support=5)
        shape = tuple(int(v) for v in rng.integers(4, 24, size=2))
        lower = tuple(int(v) for v in rng.integers(-5, 5, size=2))
        e1, e2 = sorted(rng.random(2) * 0.5)
        small = rng.random(shape) < rng.random() * 0.5
        large = small | (rng.random(shape) < 0.3)
        x = Configuration.from_array(small, lower)
        y = Configuration.from_array(large, lower)
        seed = int(rng.integers(0, 2**63))
        for t in range(int(rng.integers(1, 8))):
            spec = RngSpec(seed, 0, t)
            x = lt.step_noisy(rule, x, NoiseModel(float(e1)), spec)
            y = lt.step_noisy(rule, y, NoiseModel(float(e2)), spec)
            if not x <= y:
                failures += 1
                break
    report(10, failures == 0, f"{trials} randomized trials (shared streams, eps1<=eps2, x0<=y0): {failures} failures")
