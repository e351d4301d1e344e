"""Exact growth verifiers and Monte Carlo droplet estimates.

The verifiers run the deterministic operator on a finite window with zero
boundary. Zero boundary can only remove ones, so a passing check on the window
is a proof for the infinite lattice; windows are grown by ``t * reach`` beyond
the checked box so that failures are genuine as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import ensemble as ens
from .errors import InsufficientHits, InvalidCertificate, InvalidParameters, PreconditionFailed, WindowTooSmall
from .geometry import (
    EroderCertificate,
    alpha_and_witness,
    as_direction,
    certificate_validate,
    fan_rays,
    sampled_directions,
    scaled_front_velocity,
    thickness_rate,
)
from .lattice import Boundary, Configuration, bounding_box, inflate, nec_spider, nsmm_spider, slab_union_mask, sphere, step_det
from .rules import MonotoneRule

Site = tuple[int, ...]


@dataclass(frozen=True)
class Verified:
    t: int | None = None

    def __bool__(self) -> bool:
        return True

    def __str__(self) -> str:
        return "Verified" if self.t is None else f"Verified({self.t})"


@dataclass(frozen=True)
class Counterexample:
    site: Site
    t: int

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"Counterexample(site={self.site}, t={self.t})"


def _box_contains(outer, inner) -> bool:
    (olo, ohi), (ilo, ihi) = outer, inner
    return all(a <= b for a, b in zip(olo, ilo)) and all(a >= b for a, b in zip(ohi, ihi))


def _cone(rule: MonotoneRule, lower, upper, t: int):
    lo, hi = rule.offset_bounds()
    return tuple(l + t * a for l, a in zip(lower, lo)), tuple(u + t * b for u, b in zip(upper, hi))


def _first_missing(cfg: Configuration, sites: Iterable[Site]) -> Site | None:
    for s in sorted(sites):
        if not cfg[s]:
            return s
    return None


def _grids(lower, upper, big: bool = False) -> list[np.ndarray]:
    dtype = object if big else np.int64
    axes = [np.arange(l, u + 1, dtype=np.int64).astype(dtype) for l, u in zip(lower, upper)]
    return list(np.meshgrid(*axes, indexing="ij"))


def _first_true(mask: np.ndarray, lower) -> Site:
    idx = tuple(int(v[0]) for v in np.nonzero(mask))
    return tuple(i + l for i, l in zip(idx, lower))


# spiders


def spider_for(rule: MonotoneRule, L: int) -> tuple[frozenset[Site], frozenset[Site], int]:
    """(spider, target sphere, steps) for the two built-in spider claims."""
    if rule.name == "nec":
        return nec_spider(L), sphere((-L, -L), L), 4 * L
    if rule.name == "nsmm":
        return nsmm_spider(L), sphere((0, -L), L), 2 * L
    raise InvalidParameters("spider claims exist for the nec and nsmm rules only")


def verify_spider_growth(
    rule: MonotoneRule,
    L: int,
    spider: Iterable[Site] | None = None,
    window: tuple[Sequence[int], Sequence[int]] | None = None,
) -> Verified | Counterexample:
    """Run the deterministic dynamics from the spider alone and check the target sphere fills."""
    default_spider, target, T = spider_for(rule, L)
    spider = frozenset(default_spider if spider is None else map(tuple, spider))
    need = _cone(rule, *bounding_box(target), T)
    if window is None:
        lo, hi = bounding_box(list(spider) + [need[0], need[1]])
    else:
        lo, hi = tuple(window[0]), tuple(window[1])
        if not _box_contains((lo, hi), need):
            raise WindowTooSmall(f"window {lo}..{hi} must contain {need[0]}..{need[1]}")
    cfg = Configuration.from_sites((s for s in spider if all(a <= c <= b for c, a, b in zip(s, lo, hi))), lo, hi)
    for _ in range(T):
        cfg = step_det(rule, cfg)
    miss = _first_missing(cfg, target)
    return Verified(T) if miss is None else Counterexample(miss, T)


# lemma checks


def _require_growth_directions(rule: MonotoneRule) -> None:
    dirs = fan_rays(rule) if rule.dimension <= 2 else sampled_directions(rule.dimension)
    bad = [u for u in dirs if thickness_rate(rule, u) < 0]
    if bad:
        raise PreconditionFailed(f"layers shrink along {bad[0]} (v(u) + v(-u) < 0)")


def _check_certificate(cert: EroderCertificate, rule: MonotoneRule | None = None) -> None:
    if cert.side != "ones":
        raise InvalidCertificate("growth lemmas need a ones-side certificate")
    if cert.positivity <= 0:
        raise InvalidCertificate(f"constants sum to {cert.positivity}, which is not positive")
    if rule is not None:
        report = certificate_validate(rule, cert)
        if not report:
            raise InvalidCertificate(str(report))
    else:
        p = cert.witness.as_fractions()
        if any(phi(p) <= 0 for phi in cert.functionals):
            raise InvalidCertificate(f"witness {cert.witness} is not in the positive region")


def lemma2_regions(cert: EroderCertificate, radius_squared: int, t: int, lower, upper) -> tuple[np.ndarray, np.ndarray]:
    """Masks of A_t and B_t over the box (exact integer arithmetic).

    A_t: some j with |phi_j(i) - t phi_j(0)| <= 2 rho |phi_j|.
    B_t: every j with <grad phi_j, i> - t phi_j(0) <= 0.
    """
    forms = [phi.integer_form() for phi in cert.functionals]
    span = max(max(abs(l), abs(u)) for l, u in zip(lower, upper))
    bound = max((sum(abs(c) for c in a) * span + abs(b) * (t + 1)) ** 2 + 4 * radius_squared * sum(c * c for c in a) for a, b, _ in forms)
    g = _grids(lower, upper, big=bound >= 2**62)
    A = np.zeros(g[0].shape, dtype=bool)
    B = np.ones(g[0].shape, dtype=bool)
    for a, b, _ in forms:
        lin = sum(c * x for c, x in zip(a, g))
        shifted = lin + b - t * b
        A |= np.asarray(shifted * shifted <= 4 * radius_squared * sum(c * c for c in a), dtype=bool)
        B &= np.asarray(lin - t * b <= 0, dtype=bool)
    return A, B


def verify_lemma2(
    rule: MonotoneRule,
    cert: EroderCertificate,
    t_max: int,
    half_width: int | None = None,
    window: tuple[Sequence[int], Sequence[int]] | None = None,
) -> Verified | Counterexample:
    """Iterate from x* (union of slabs) and check A_t and B_t are ones for every t <= t_max.

    The check covers the box [-half_width, half_width]^d (default 2 t_max + 4 ceil(rho)).
    """
    _check_certificate(cert, rule)
    _require_growth_directions(rule)
    d = rule.dimension
    r2 = rule.radius_squared
    h = half_width if half_width is not None else 2 * t_max + 4 * math.isqrt(r2 - 1) + 4
    check = ((-h,) * d, (h,) * d)
    need = _cone(rule, *check, t_max)
    if window is None:
        lo, hi = need
    else:
        lo, hi = tuple(window[0]), tuple(window[1])
        if not _box_contains((lo, hi), need):
            raise WindowTooSmall(f"window {lo}..{hi} must contain {need[0]}..{need[1]}")
    cfg = Configuration.from_array(slab_union_mask(cert, r2, lo, hi), lo, Boundary.ZEROS)
    sl = tuple(slice(a - l, b - l + 1) for a, b, l in zip(check[0], check[1], lo))
    for t in range(t_max + 1):
        if t:
            cfg = step_det(rule, cfg)
        A, B = lemma2_regions(cert, r2, t, *check)
        missing = (A | B) & ~cfg.to_array()[sl]
        if missing.any():
            return Counterexample(_first_true(missing, check[0]), t)
    return Verified(t_max)


def verify_lemma3(cert: EroderCertificate, t_max: int) -> Verified | Counterexample:
    """Every site with |i + t p| <= alpha t lies in B_t, for t = 0..t_max (pure arithmetic)."""
    _check_certificate(cert)
    alpha_sq, p, q = alpha_and_witness(cert)
    M, N = alpha_sq.numerator, alpha_sq.denominator
    n = p.numerators
    forms = [phi.integer_form() for phi in cert.functionals]
    alpha_ceil = math.isqrt(M // N + 1) + 1
    for t in range(t_max + 1):
        # box around -t p of radius alpha t, in lattice units
        lower = tuple(math.floor(Fraction(-t * c, q)) - alpha_ceil * t - 1 for c in n)
        upper = tuple(math.ceil(Fraction(-t * c, q)) + alpha_ceil * t + 1 for c in n)
        g = _grids(lower, upper, big=(q * (max(map(abs, lower + upper)) + t * max(map(abs, n), default=0))) ** 2 * N >= 2**60)
        dist = sum((q * x + t * c) ** 2 for x, c in zip(g, n))
        ball = np.asarray(N * dist <= M * t * t * q * q, dtype=bool)
        inside = np.ones(ball.shape, dtype=bool)
        for a, b, _ in forms:
            inside &= np.asarray(sum(c * x for c, x in zip(a, g)) - t * b <= 0, dtype=bool)
        bad = ball & ~inside
        if bad.any():
            return Counterexample(_first_true(bad, lower), t)
    return Verified(t_max)


def _le_root(x, r: int):
    """x <= sqrt(r) for integer arrays x and integer r >= 0."""
    return (x <= 0) | (x * x <= r)


def verify_case_b_growth(rule: MonotoneRule, u: Sequence[int], t_max: int, half_width: int | None = None) -> Verified | Counterexample:
    """Layer {|<i,u>| <= rho |u|} grows to {-rho|u| - t v(-u) <= <i,u> <= rho|u| + t v(u)}.

    Velocities are in units of <i, u>. Requires v(u) + v(-u) >= 0.
    """
    u = as_direction(u)
    if len(u) != rule.dimension:
        raise InvalidParameters(f"direction {u} is not {rule.dimension}-dimensional")
    if thickness_rate(rule, u) < 0:
        raise PreconditionFailed(f"v(u) + v(-u) = {thickness_rate(rule, u)} < 0 along {u}: the layer shrinks")
    d = rule.dimension
    vu, vm = scaled_front_velocity(rule, u), scaled_front_velocity(rule, tuple(-c for c in u))
    R = rule.radius_squared * sum(c * c for c in u)  # (rho |u|)^2
    h = half_width if half_width is not None else math.isqrt(rule.radius_squared) + 2 + t_max * (rule.reach + 1)
    check = ((-h,) * d, (h,) * d)
    lo, hi = _cone(rule, *check, t_max)
    g = _grids(lo, hi)
    dot = sum(c * x for c, x in zip(u, g))
    cfg = Configuration.from_array(dot * dot <= R, lo, Boundary.ZEROS)
    gc = _grids(*check)
    dc = sum(c * x for c, x in zip(u, gc))
    sl = tuple(slice(a - l, b - l + 1) for a, b, l in zip(check[0], check[1], lo))
    for t in range(t_max + 1):
        if t:
            cfg = step_det(rule, cfg)
        target = _le_root(dc - t * vu, R) & _le_root(-(dc + t * vm), R)
        missing = target & ~cfg.to_array()[sl]
        if missing.any():
            return Counterexample(_first_true(missing, check[0]), t)
    return Verified(t_max)


# Monte Carlo


MONOTONICITY_NOTE = (
    "finite-t estimate from all zeros; by monotone coupling it is non-decreasing in t "
    "and bounds the limiting probability from below"
)


@dataclass
class Estimate:
    p_hat: float
    hits: int
    samples: int
    std_err: float
    seed: int
    params: dict = field(default_factory=dict)

    @property
    def minus_log_p(self) -> float:
        if self.hits == 0:
            return math.inf
        return 0.0 if self.hits == self.samples else -math.log(self.p_hat)

    @property
    def minus_log_p_std_err(self) -> float:
        """Delta-method error of -ln p_hat."""
        if self.hits == 0:
            return math.inf
        return self.std_err / self.p_hat

    def as_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "hits": self.hits,
            "samples": self.samples,
            "std_err": self.std_err,
            "minus_log_p": self.minus_log_p,
            "seed": self.seed,
            "params": self.params,
        }


def _rule_label(rule) -> str:
    return rule.label() if hasattr(rule, "label") else str(rule)


def estimate_cylinder_prob(
    rule,
    eps: float,
    region: Iterable[Site],
    t: int,
    samples: int,
    seed: int,
    window: tuple[Sequence[int], Sequence[int]] | None = None,
    zeros: Iterable[Site] = (),
    threads: int | None = None,
) -> Estimate:
    """Fraction of replicas, run from all zeros for ``t`` noisy steps, with ones on ``region``.

    The engine simulates the exact backward light cone; an explicit ``window`` is
    only checked to contain it.
    """
    event = ens.Event(frozenset(region), frozenset(zeros))
    cone = None
    if event.sites:
        cone = ens.light_cone_boxes(rule, *bounding_box(event.sites), t)[0]
        if window is not None and not _box_contains((tuple(window[0]), tuple(window[1])), cone):
            raise WindowTooSmall(f"window must contain the light cone {cone[0]}..{cone[1]}")
    res = ens.run_ensemble(rule, eps, t, event, samples, seed, threads=threads)
    p = res.hits / samples
    params = {
        "rule": _rule_label(rule),
        "epsilon": eps,
        "t": t,
        "region_size": len(event.ones),
        "zeros_size": len(event.zeros),
        "window": [list(cone[0]), list(cone[1])] if cone else None,
        "boundary": "zeros",
        "note": MONOTONICITY_NOTE,
    }
    return Estimate(p, res.hits, samples, math.sqrt(p * (1 - p) / samples), seed, params)


def product_measure_probability(eps: float, n: int) -> float:
    return eps**n


def spider_bound(rule: MonotoneRule, L: int, eps: float) -> float:
    """Probability that all spider sites are noise ones at once: eps^|spider|."""
    spider, _, _ = spider_for(rule, L)
    return eps ** len(spider)


# scaling


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    exponent_std_err: float

    def interval(self, z: float = 1.959963984540054) -> tuple[float, float]:
        return self.exponent - z * self.exponent_std_err, self.exponent + z * self.exponent_std_err


def fit_power_law(L: Sequence[float], y: Sequence[float], sigma: Sequence[float] | None = None) -> PowerLawFit:
    """Least squares of ln y on ln L: y ~ c L^a.

    With ``sigma`` (standard errors of y) the fit is weighted and the exponent
    error comes from the known-variance covariance; otherwise ordinary least squares.
    """
    x = np.log(np.asarray(L, dtype=float))
    yv = np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(yv <= 0):
        raise InvalidParameters("need at least two points with positive values")
    ly = np.log(yv)
    weighted = sigma is not None and np.all(np.asarray(sigma, dtype=float) > 0)
    if weighted:
        w = yv / np.asarray(sigma, dtype=float)  # 1 / sd(ln y)
        (a, b), cov = np.polyfit(x, ly, 1, w=w, cov="unscaled")
        se = float(math.sqrt(cov[0, 0]))
    else:
        a, b = np.polyfit(x, ly, 1)
        resid = ly - (a * x + b)
        dof = len(x) - 2
        sxx = float(np.sum((x - x.mean()) ** 2))
        se = float(math.sqrt(np.sum(resid**2) / dof / sxx)) if dof > 0 else 0.0
    pred = a * x + b
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum((ly - pred) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return PowerLawFit(float(a), float(math.exp(b)), r2, se)


@dataclass
class ScalingCurve:
    points: list[tuple[int, float, float]]  # (L, -ln p_hat, std err)
    estimates: list[Estimate] = field(default_factory=list)
    min_hits: int = 10
    fit: PowerLawFit | None = None

    def eligible(self) -> list[int]:
        """Indices usable in the fit: enough hits and not every sample a hit."""
        if not self.estimates:
            return [k for k, (_, y, _) in enumerate(self.points) if 0 < y < math.inf]
        return [
            k for k, e in enumerate(self.estimates) if e.hits >= self.min_hits and e.hits < e.samples
        ]

    def refit(self, require: bool = True) -> "ScalingCurve":
        idx = self.eligible()
        if len(idx) < 3:
            self.fit = None
            if require:
                raise InsufficientHits(f"only {len(idx)} of {len(self.points)} points are eligible for the fit")
            return self
        Ls = [self.points[k][0] for k in idx]
        ys = [self.points[k][1] for k in idx]
        sig = [self.points[k][2] for k in idx]
        self.fit = fit_power_law(Ls, ys, sig if all(s > 0 for s in sig) else None)
        return self


def default_schedule(L: int) -> int:
    return 16 * L


def scaling_curve(
    rule,
    eps: float,
    Ls: Sequence[int],
    t_schedule=default_schedule,
    samples: int = 100_000,
    seed: int = 0,
    min_hits: int = 10,
    threads: int | None = None,
    require_fit: bool = True,
) -> ScalingCurve:
    """Estimate -ln P(sphere(0, L) all ones) per L and fit the growth exponent."""
    estimates = []
    for L in Ls:
        if callable(t_schedule):
            t = t_schedule(L)
        elif isinstance(t_schedule, int):
            t = t_schedule
        else:
            t = int(t_schedule[list(Ls).index(L)])
        est = estimate_cylinder_prob(rule, eps, sphere((0,) * rule.dimension, L), t, samples, seed, threads=threads)
        est.params["L"] = L
        estimates.append(est)
    points = [(L, e.minus_log_p, e.minus_log_p_std_err) for L, e in zip(Ls, estimates)]
    return ScalingCurve(points, estimates, min_hits).refit(require_fit)


def product_measure_curve(eps: float, Ls: Sequence[int], d: int = 2) -> ScalingCurve:
    """Exact -ln eps^|sphere(0, L)| curve with its fit."""
    pts = [(L, len(sphere((0,) * d, L)) * math.log(1 / eps), 0.0) for L in Ls]
    return ScalingCurve(pts).refit()


@dataclass(frozen=True)
class AspRow:
    size: int
    minus_log_p: float
    std_err: float
    hits: int
    samples: int


def asp_probe(
    rule,
    eps: float,
    patterns: Sequence[tuple[Iterable[Site], Iterable[Site]]],
    t: int,
    samples: int,
    seed: int,
    threads: int | None = None,
) -> list[AspRow]:
    """-ln p_hat of cylinder patterns, each given as (ones sites, zeros sites)."""
    rows = []
    for ones, zeros in patterns:
        ones, zeros = frozenset(ones), frozenset(zeros)
        est = estimate_cylinder_prob(rule, eps, ones, t, samples, seed, zeros=zeros, threads=threads)
        rows.append(AspRow(len(ones | zeros), est.minus_log_p, est.minus_log_p_std_err, est.hits, samples))
    return rows


def sphere_patterns(Ls: Sequence[int], d: int = 2):
    return [(sphere((0,) * d, L), ()) for L in Ls]
