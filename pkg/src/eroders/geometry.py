"""Convex-geometric eroder criteria, affine certificates and front velocities.

Everything here is exact: supports are integer, the LPs run over
``Fraction`` and velocities are integers for integer directions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Literal, Sequence

from .errors import CertificateImpossible, DimensionMismatch, InvalidParameters, NoCertificateInSearchSpace
from .rational_lp import LinearProgram
from .rules import MonotoneRule, Offset, OffsetSet, minimal_zero_sets

Side = Literal["zeros", "ones"]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@dataclass(frozen=True)
class RationalVector:
    numerators: tuple[int, ...]
    denominator: int = 1

    def __post_init__(self) -> None:
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        g = reduce(math.gcd, self.numerators, self.denominator)
        object.__setattr__(self, "numerators", tuple(int(v) // g for v in self.numerators))
        object.__setattr__(self, "denominator", self.denominator // g)

    @classmethod
    def from_fractions(cls, values: Iterable[Fraction | int]) -> "RationalVector":
        values = [Fraction(v) for v in values]
        q = reduce(_lcm, (v.denominator for v in values), 1)
        return cls(tuple(int(v * q) for v in values), q)

    @property
    def dimension(self) -> int:
        return len(self.numerators)

    def as_fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v, self.denominator) for v in self.numerators)

    def __str__(self) -> str:
        return "(" + ", ".join(str(v) for v in self.as_fractions()) + ")"


@dataclass(frozen=True)
class AffineFunctional:
    """phi(x) = <linear, x> + constant."""

    linear: tuple[Fraction, ...]
    constant: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "linear", tuple(Fraction(v) for v in self.linear))
        object.__setattr__(self, "constant", Fraction(self.constant))
        if not any(self.linear):
            raise ValueError("an affine functional must be non-constant")

    @property
    def norm_squared(self) -> Fraction:
        return sum((v * v for v in self.linear), Fraction(0))

    def linear_part(self, point: Sequence[Fraction | int]) -> Fraction:
        return sum((a * Fraction(x) for a, x in zip(self.linear, point)), Fraction(0))

    def __call__(self, point: Sequence[Fraction | int]) -> Fraction:
        return self.linear_part(point) + self.constant

    def integer_form(self) -> tuple[tuple[int, ...], int, int]:
        """(a, b, D) with phi(x) = (<a, x> + b) / D and integers a, b, D > 0."""
        D = reduce(_lcm, (v.denominator for v in self.linear + (self.constant,)), 1)
        return tuple(int(v * D) for v in self.linear), int(self.constant * D), D

    def __str__(self) -> str:
        terms = [f"{v}*x{k}" for k, v in enumerate(self.linear) if v]
        return " + ".join(terms + [str(self.constant)])


@dataclass(frozen=True)
class EroderCertificate:
    side: Side
    functionals: tuple[AffineFunctional, ...]
    witness: RationalVector
    # minimal sets whose hulls were separated; records the search space actually used
    family: tuple[OffsetSet, ...] = field(default=(), compare=False)

    @property
    def dimension(self) -> int:
        return len(self.functionals[0].linear)

    @property
    def positivity(self) -> Fraction:
        return sum((phi.constant for phi in self.functionals), Fraction(0))

    def __len__(self) -> int:
        return len(self.functionals)


def as_direction(u: Sequence[int]) -> tuple[int, ...]:
    u = tuple(int(v) for v in u)
    if not any(u):
        raise InvalidParameters("a direction must be nonzero")
    return u


def _dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def _minimal_sets(rule: MonotoneRule, side: Side) -> tuple[OffsetSet, ...]:
    if side == "ones":
        return rule.minimal_one_sets
    if side == "zeros":
        return minimal_zero_sets(rule)
    raise InvalidParameters(f"side must be 'zeros' or 'ones', not {side!r}")


# velocities


def scaled_front_velocity(rule: MonotoneRule, u: Sequence[int]) -> int:
    """Per-step shift of a front {<i,u> <= C} under one deterministic step.

    Returned in units of <i,u>; the unit-direction velocity is this divided by |u|.
    """
    u = as_direction(u)
    if len(u) != rule.dimension:
        raise DimensionMismatch(f"direction {u} vs rule dimension {rule.dimension}")
    return -min(max(_dot(s, u) for s in S) for S in rule.minimal_one_sets)


def thickness_rate(rule: MonotoneRule, u: Sequence[int]) -> int:
    """v(u) + v(-u): scaled growth per step of a thick layer with normal u."""
    u = as_direction(u)
    return scaled_front_velocity(rule, u) + scaled_front_velocity(rule, tuple(-c for c in u))


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = reduce(math.gcd, (abs(c) for c in v), 0)
    return tuple(c // g for c in v)


def _angle_key(v: tuple[int, int]):
    # exact angular order: half-plane first, then cross-product comparison via slope
    x, y = v
    upper = y > 0 or (y == 0 and x > 0)
    return (0 if upper else 1, Fraction(-x, abs(x) + abs(y)) if upper else Fraction(x, abs(x) + abs(y)))


def fan_rays(rule: MonotoneRule) -> list[tuple[int, ...]]:
    """Rays on which v(u) + v(-u) must be evaluated to decide its sign exactly (d <= 2).

    In d = 2 the function is positively homogeneous and linear on each cone of the
    fan cut out by the lines <s - s', u> = 0; it suffices to look at the breakpoint
    rays and one interior ray per cone.
    """
    d = rule.dimension
    if d == 1:
        return [(1,), (-1,)]
    if d != 2:
        raise InvalidParameters("exact fan is only available in dimension <= 2")
    breaks = {(1, 0), (-1, 0), (0, 1), (0, -1)}
    for s, t in itertools.combinations(rule.support, 2):
        w = (s[0] - t[0], s[1] - t[1])
        p = _primitive((-w[1], w[0]))
        breaks.add(p)
        breaks.add((-p[0], -p[1]))
    ordered = sorted(breaks, key=_angle_key)
    rays = list(ordered)
    for a, b in zip(ordered, ordered[1:] + ordered[:1]):
        cross = a[0] * b[1] - a[1] * b[0]
        if cross > 0:
            rays.append(_primitive((a[0] + b[0], a[1] + b[1])))
        else:
            # a cone of angle >= pi: its interior contains the left normal of a
            rays.append(_primitive((-a[1], a[0])))
    return sorted(set(rays), key=_angle_key)


def sampled_directions(d: int, bound: int = 3) -> list[tuple[int, ...]]:
    """All primitive integer vectors with entries in [-bound, bound]."""
    out = {
        _primitive(v)
        for v in itertools.product(range(-bound, bound + 1), repeat=d)
        if any(v)
    }
    return sorted(out)


@dataclass(frozen=True)
class VelocityClassification:
    condition: Literal["A", "B", "neither"]
    witness: tuple[int, ...] | None
    rays: tuple[tuple[tuple[int, ...], int], ...]  # (u, v(u) + v(-u))
    exact: bool

    @property
    def label(self) -> str:
        tag = "" if self.exact else " (sampled)"
        if self.condition == "B":
            return f"ConditionB{self.witness}{tag}"
        return ("ConditionA" if self.condition == "A" else "Neither") + tag


def classify_velocity_condition(rule: MonotoneRule, bound: int = 3) -> VelocityClassification:
    """Condition (a): all thickness rates >= 0; (b): some rate > 0 (reported with a witness)."""
    exact = rule.dimension <= 2
    dirs = fan_rays(rule) if exact else sampled_directions(rule.dimension, bound)
    rays = tuple((u, thickness_rate(rule, u)) for u in dirs)
    positive = [(u, g) for u, g in rays if g > 0]
    if positive:
        # largest unit-direction rate, ties broken towards the smallest vector
        u, _ = max(positive, key=lambda ug: (Fraction(ug[1] ** 2, _dot(ug[0], ug[0])), tuple(-c for c in ug[0])))
        return VelocityClassification("B", u, rays, exact)
    if all(g >= 0 for _, g in rays):
        return VelocityClassification("A", None, rays, exact)
    return VelocityClassification("neither", None, rays, exact)


# hull intersections


@dataclass(frozen=True)
class SigmaVerdict:
    side: Side
    empty: bool
    witness: RationalVector | None = None

    def __str__(self) -> str:
        return "Empty" if self.empty else f"Witness{self.witness}"


def _common_point_lp(sets: Sequence[Sequence[Offset]], d: int) -> RationalVector | None:
    lp = LinearProgram()
    z = lp.vars(d, free=True)
    for pts in sets:
        lam = lp.vars(len(pts))
        lp.add({v: 1 for v in lam}, "==", 1)
        for k in range(d):
            row = {v: p[k] for v, p in zip(lam, pts)}
            row[z[k]] = -1
            lp.add(row, "==", 0)
    res = lp.solve()
    if not res.feasible:
        return None
    return RationalVector.from_fractions(res.x[k] for k in z)


def in_hull(point: RationalVector, pts: Iterable[Offset]) -> bool:
    return _common_point_lp([sorted(pts), [tuple(point.as_fractions())]], point.dimension) is not None


def _hull_search(sets: Sequence[Iterable[Offset]], d: int) -> tuple[RationalVector | None, list[int]]:
    """Constraint generation: solve on a growing subfamily, add a hull missing the point.

    Returns (common point, []) or (None, indices of a subfamily with empty intersection).
    """
    fam = [sorted(S) for S in sets]
    active = list(range(min(len(fam), d + 1)))
    while True:
        point = _common_point_lp([fam[k] for k in active], d)
        if point is None:
            return None, active
        if len(active) == len(fam):
            return point, []
        missed = next((k for k in range(len(fam)) if k not in active and not in_hull(point, fam[k])), None)
        if missed is None:
            return point, []
        active.append(missed)


def hulls_intersection_point(sets: Sequence[Iterable[Offset]], d: int) -> RationalVector | None:
    """A common point of the convex hulls, or None when they do not intersect."""
    return _hull_search(sets, d)[0]


def sigma_empty(rule: MonotoneRule, side: Side = "zeros") -> SigmaVerdict:
    """Is the intersection of the convex hulls of all zero-sets (or one-sets) empty?

    Intersecting over every zero-set equals intersecting over the minimal ones,
    since enlarging a set only enlarges its hull.
    """
    point = hulls_intersection_point(_minimal_sets(rule, side), rule.dimension)
    return SigmaVerdict(side, point is None, point)


def helly_minimal_family(sets: Sequence[OffsetSet], d: int) -> tuple[OffsetSet, ...]:
    """Greedy inclusion-minimal subfamily whose hulls still have empty intersection."""
    family = list(sets)
    for S in reversed(list(sets)):
        trial = [T for T in family if T != S]
        if trial and hulls_intersection_point(trial, d) is None:
            family = trial
    return tuple(family)


def _separating_functionals(family: Sequence[OffsetSet], d: int) -> list[AffineFunctional]:
    """Dual of the hull-intersection LP: one supporting half-space per set.

    Finds a_k and c_k with a_k + <c_k, v> >= 0 on Z_k, sum c_k = 0, sum a_k = -1,
    minimising sum |c_k|_1. Then phi_k = <-c_k, x> - a_k is <= 0 on Z_k, the
    linear parts cancel and the constants add up to 1.
    """
    lp = LinearProgram()
    a = lp.vars(len(family), free=True)
    cp = [lp.vars(d) for _ in family]
    cn = [lp.vars(d) for _ in family]
    for k, S in enumerate(family):
        for v in sorted(S):
            row = {a[k]: 1}
            for l in range(d):
                row[cp[k][l]] = v[l]
                row[cn[k][l]] = -v[l]
            lp.add(row, ">=", 0)
    for l in range(d):
        row = {}
        for k in range(len(family)):
            row[cp[k][l]] = 1
            row[cn[k][l]] = -1
        lp.add(row, "==", 0)
    lp.add({v: 1 for v in a}, "==", -1)
    res = lp.solve({v: 1 for k in range(len(family)) for v in cp[k] + cn[k]})
    if res.status != "optimal":
        raise NoCertificateInSearchSpace(
            "separating LP has no solution although the hulls do not intersect",
            [sorted(S) for S in family],
        )
    out = []
    for k in range(len(family)):
        c = [res.x[cp[k][l]] - res.x[cn[k][l]] for l in range(d)]
        if any(c):
            out.append(AffineFunctional(tuple(-v for v in c), -res.x[a[k]]))
    return out


def _normalise(functionals: Sequence[AffineFunctional]) -> list[AffineFunctional]:
    """Common positive rescaling to coprime integer coefficients."""
    fracs = [v for phi in functionals for v in phi.linear + (phi.constant,)]
    D = reduce(_lcm, (v.denominator for v in fracs), 1)
    g = reduce(math.gcd, (int(v * D) for v in fracs), 0)
    scale = Fraction(D, g)
    return [AffineFunctional(tuple(v * scale for v in phi.linear), phi.constant * scale) for phi in functionals]


def _positive_point(functionals: Sequence[AffineFunctional], d: int) -> RationalVector | None:
    """A point maximising min_j phi_j, provided that minimum is positive."""
    lp = LinearProgram()
    p = lp.vars(d, free=True)
    s = lp.var(free=True)
    for phi in functionals:
        row = {p[k]: phi.linear[k] for k in range(d)}
        row[s] = -1
        lp.add(row, ">=", -phi.constant)
    res = lp.solve({s: -1})
    if res.status != "optimal" or res.x[s] <= 0:
        return None
    return RationalVector.from_fractions(res.x[k] for k in p)


def _reduce_family(functionals: list[AffineFunctional], d: int) -> list[AffineFunctional]:
    """Shrink a family with no common positive point, keeping conditions i and ii.

    Finds mu >= 0 (sum 1) whose combination is a non-positive constant, then uses
    phi_j * (1 - mu_j / mu_max) for j != argmax, exactly as in the minimality argument.
    """
    lp = LinearProgram()
    mu = lp.vars(len(functionals))
    lp.add({v: 1 for v in mu}, "==", 1)
    for k in range(d):
        lp.add({v: phi.linear[k] for v, phi in zip(mu, functionals)}, "==", 0)
    lp.add({v: phi.constant for v, phi in zip(mu, functionals)}, "<=", 0)
    res = lp.solve()
    if not res.feasible:
        raise NoCertificateInSearchSpace("no reducing combination found", len(functionals))
    weights = [res.x[v] for v in mu]
    top = max(range(len(weights)), key=lambda j: weights[j])
    out = []
    for j, phi in enumerate(functionals):
        coef = 1 - weights[j] / weights[top]
        if j != top and coef > 0:
            out.append(AffineFunctional(tuple(coef * v for v in phi.linear), coef * phi.constant))
    return out


def farkas_certificate(rule: MonotoneRule, side: Side = "ones") -> EroderCertificate:
    """Affine functionals certifying that "all zeros" (side='zeros') or "all ones" attracts.

    Steps: confirm the hull intersection is empty, which also yields a small
    infeasible core of minimal sets; shrink it to a Helly-minimal subfamily (at most
    d + 1 members); take the supporting half-spaces from
    the dual of the intersection LP; finally find a rational point where every
    functional is positive, shrinking the family if none exists.
    """
    d = rule.dimension
    sets = _minimal_sets(rule, side)
    common, core = _hull_search(sets, d)
    if common is not None:
        raise CertificateImpossible(common)
    family = helly_minimal_family([sets[k] for k in core], d)
    functionals = _normalise(_separating_functionals(family, d))
    while True:
        if not functionals:
            raise NoCertificateInSearchSpace(
                "family reduced to nothing", [sorted(S) for S in family]
            )
        witness = _positive_point(functionals, d)
        if witness is not None:
            break
        functionals = _normalise(_reduce_family(functionals, d))
    return EroderCertificate(side, tuple(functionals), witness, family)


# validation


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    condition: str | None = None  # "dimension", "i", "ii" or "iii"
    index: int | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        if self.valid:
            return "Valid"
        where = f" (functional {self.index})" if self.index is not None else ""
        return f"violation({self.condition}){where}: {self.detail}"


def certificate_validate(rule: MonotoneRule, cert: EroderCertificate) -> ValidationReport:
    """Independent exact re-check of conditions i-iii; reports the first violation."""
    d = rule.dimension
    if not cert.functionals:
        return ValidationReport(False, "ii", None, "no functionals")
    if cert.side not in ("zeros", "ones"):
        return ValidationReport(False, "dimension", None, f"unknown side {cert.side!r}")
    if any(len(phi.linear) != d for phi in cert.functionals) or cert.witness.dimension != d:
        return ValidationReport(False, "dimension", None, f"certificate is not {d}-dimensional")
    sets = _minimal_sets(rule, cert.side)
    for j, phi in enumerate(cert.functionals):
        nonpos = {s for s in rule.support if phi(s) <= 0}
        if not any(S <= nonpos for S in sets):
            kind = "one" if cert.side == "ones" else "zero"
            return ValidationReport(
                False, "i", j, f"{{phi <= 0}} on the support is {sorted(nonpos)}, which contains no minimal {kind}-set"
            )
    total = [sum((phi.linear[k] for phi in cert.functionals), Fraction(0)) for k in range(d)]
    if any(total):
        return ValidationReport(False, "ii", None, f"linear parts sum to {total}, not 0")
    if cert.positivity <= 0:
        return ValidationReport(False, "ii", None, f"constants sum to {cert.positivity}, not > 0")
    p = cert.witness.as_fractions()
    for j, phi in enumerate(cert.functionals):
        if phi(p) <= 0:
            return ValidationReport(False, "iii", j, f"phi({cert.witness}) = {phi(p)} is not > 0")
    return ValidationReport(True)


def alpha_and_witness(cert: EroderCertificate) -> tuple[Fraction, RationalVector, int]:
    """(alpha^2, p, q): alpha = min_j phi_j(p) / |phi_j|, q the lcd of p's coordinates."""
    p = cert.witness.as_fractions()
    alpha_sq = min(phi(p) ** 2 / phi.norm_squared for phi in cert.functionals)
    return alpha_sq, cert.witness, cert.witness.denominator


# serialisation


def _frac_json(v: Fraction) -> list[int]:
    return [v.numerator, v.denominator]


def certificate_to_dict(cert: EroderCertificate) -> dict:
    return {
        "side": cert.side,
        "dimension": cert.dimension,
        "functionals": [
            {"linear": [_frac_json(v) for v in phi.linear], "constant": _frac_json(phi.constant)}
            for phi in cert.functionals
        ],
        "witness": {"numerators": list(cert.witness.numerators), "denominator": cert.witness.denominator},
        "positivity": _frac_json(cert.positivity),
        "family": [sorted(list(o) for o in S) for S in cert.family],
    }


def certificate_from_dict(data: dict) -> EroderCertificate:
    def frac(pair) -> Fraction:
        if isinstance(pair, (list, tuple)):
            return Fraction(int(pair[0]), int(pair[1]))
        return Fraction(pair)

    functionals = tuple(
        AffineFunctional(tuple(frac(v) for v in f["linear"]), frac(f["constant"])) for f in data["functionals"]
    )
    w = data["witness"]
    witness = RationalVector(tuple(int(v) for v in w["numerators"]), int(w["denominator"]))
    family = tuple(frozenset(tuple(o) for o in S) for S in data.get("family", []))
    return EroderCertificate(data["side"], functionals, witness, family)
