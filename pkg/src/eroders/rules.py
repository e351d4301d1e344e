"""Monotone binary transition functions stored as antichains of minimal one-sets.

A rule on Z^d is given by a finite support (a set of integer offsets) and the
family of minimal sets of offsets whose all-ones state forces the output to 1.
The new value at site ``i`` is computed from the old values at ``i + s`` for
``s`` in the support.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConstantFunction, InvalidParameters, InvalidRule, MissingOffset, NotMonotone

Offset = tuple[int, ...]
OffsetSet = frozenset[Offset]


def _canonical_family(sets: Iterable[Iterable[Offset]]) -> tuple[OffsetSet, ...]:
    family = {frozenset(tuple(int(c) for c in o) for o in s) for s in sets}
    return tuple(sorted(family, key=lambda s: (len(s), sorted(s))))


def is_antichain(sets: Sequence[OffsetSet]) -> bool:
    return not any(a < b for a in sets for b in sets)


def minimal_transversals(sets: Iterable[Iterable[Offset]]) -> tuple[OffsetSet, ...]:
    """All inclusion-minimal sets hitting every member of ``sets``.

    Berge's incremental scheme: keep the minimal transversals of the sets seen so
    far and extend the ones that miss the next set by each of its elements.
    """
    edges = sorted({frozenset(s) for s in sets}, key=lambda e: (len(e), sorted(e)))
    if any(not e for e in edges):
        return ()
    family: list[OffsetSet] = [frozenset()]
    for edge in edges:
        hit = [t for t in family if t & edge]
        grown = {t | {x} for t in family if not t & edge for x in edge}
        minimal: list[OffsetSet] = []
        for cand in sorted(set(hit) | grown, key=lambda t: (len(t), sorted(t))):
            if not any(m <= cand for m in minimal):
                minimal.append(cand)
        family = minimal
    return _canonical_family(family)


@dataclass(frozen=True)
class MonotoneRule:
    """A standard (local, monotone, non-constant) transition function."""

    dimension: int
    minimal_one_sets: tuple[OffsetSet, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise InvalidRule("dimension must be positive")
        family = _canonical_family(self.minimal_one_sets)
        object.__setattr__(self, "minimal_one_sets", family)
        if not family:
            raise InvalidRule("a rule needs at least one minimal one-set (f would be constant 0)")
        if any(not s for s in family):
            raise InvalidRule("an empty one-set makes f constant 1")
        if not is_antichain(family):
            raise InvalidRule("minimal one-sets must form an antichain")
        for s in family:
            for o in s:
                if len(o) != self.dimension:
                    raise InvalidRule(f"offset {o} does not have dimension {self.dimension}")

    @property
    def support(self) -> tuple[Offset, ...]:
        return tuple(sorted(set().union(*self.minimal_one_sets)))

    @property
    def radius_squared(self) -> int:
        return max(sum(c * c for c in o) for o in self.support)

    @property
    def radius(self) -> float:
        return self.radius_squared**0.5

    @property
    def reach(self) -> int:
        """Largest absolute offset coordinate: one step reads at Chebyshev distance <= reach."""
        return max(abs(c) for o in self.support for c in o)

    def offset_bounds(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        sup = self.support
        lo = tuple(min(o[k] for o in sup) for k in range(self.dimension))
        hi = tuple(max(o[k] for o in sup) for k in range(self.dimension))
        return lo, hi

    def __call__(self, local: Mapping[Offset, int]) -> int:
        return evaluate(self, local)

    def label(self) -> str:
        return self.name or "custom"


def evaluate(rule: MonotoneRule, local: Mapping[Offset, int]) -> int:
    """f = 1 iff some minimal one-set is entirely 1 in ``local``."""
    for o in rule.support:
        if o not in local:
            raise MissingOffset(o)
    return int(any(all(local[o] for o in s) for s in rule.minimal_one_sets))


def from_truth_table(
    dimension: int,
    support: Sequence[Offset],
    table: Mapping[tuple[int, ...], int],
    name: str | None = None,
) -> MonotoneRule:
    """Build a rule from a full truth table keyed by bit tuples ordered like ``support``.

    Offsets the table does not depend on are dropped from the support.
    """
    support = [tuple(o) for o in support]
    n = len(support)
    if len(set(support)) != n:
        raise InvalidRule("support offsets must be distinct")
    values: dict[tuple[int, ...], int] = {}
    for bits in itertools.product((0, 1), repeat=n):
        if bits not in table:
            raise InvalidRule(f"truth table is missing assignment {''.join(map(str, bits))}")
        values[bits] = int(bool(table[bits]))
    if len(set(values.values())) == 1:
        raise ConstantFunction(f"truth table is constant {next(iter(values.values()))}")
    for bits, out in values.items():
        if not out:
            continue
        for k in range(n):
            if bits[k] == 0:
                up = bits[:k] + (1,) + bits[k + 1 :]
                if values[up] == 0:
                    raise NotMonotone(bits, up)
    minimal = []
    for bits, out in values.items():
        if out and all(
            values[bits[:k] + (0,) + bits[k + 1 :]] == 0 for k in range(n) if bits[k]
        ):
            minimal.append({support[k] for k in range(n) if bits[k]})
    return MonotoneRule(dimension, tuple(frozenset(s) for s in minimal), name=name)


def spin_flip_dual(rule: MonotoneRule) -> MonotoneRule:
    """Monotone Boolean dual x -> 1 - f(1 - x); its one-sets are the transversals of f's."""
    name = None
    if rule.name:
        name = rule.name[:-5] if rule.name.endswith("-dual") else rule.name + "-dual"
    return MonotoneRule(rule.dimension, minimal_transversals(rule.minimal_one_sets), name=name)


def minimal_zero_sets(rule: MonotoneRule) -> tuple[OffsetSet, ...]:
    """Minimal sets whose forced zeros force output 0, i.e. transversals of the one-sets."""
    return minimal_transversals(rule.minimal_one_sets)


def is_self_spin_flip(rule: MonotoneRule) -> bool:
    return spin_flip_dual(rule) == rule


# builders


def nec() -> MonotoneRule:
    north, east, center = (0, 1), (1, 0), (0, 0)
    pairs = [{north, east}, {north, center}, {east, center}]
    return MonotoneRule(2, tuple(frozenset(p) for p in pairs), name="nec")


def nsmm() -> MonotoneRule:
    return MonotoneRule(
        2,
        (frozenset({(0, 0), (1, 0)}), frozenset({(0, 1), (1, 1)})),
        name="nsmm",
    )


def non_example() -> MonotoneRule:
    """Majority of three disjoint two-site conjunctions; minimal one-sets are pairwise unions."""
    groups = [
        {(0, 2), (-1, 2)},
        {(2, 0), (2, -1)},
        {(0, -1), (-1, 0)},
    ]
    unions = [frozenset(a | b) for a, b in itertools.combinations(groups, 2)]
    return MonotoneRule(2, tuple(unions), name="non-example")


def min_max(d: int, a: int) -> MonotoneRule:
    """min over the first ``a`` unit coordinates of max over the remaining ones, on {0,1}^d."""
    if not (0 < a < d):
        raise InvalidParameters(f"min_max needs 0 < a < d, got d={d}, a={a}")
    prefixes = list(itertools.product((0, 1), repeat=a))
    completions = list(itertools.product((0, 1), repeat=d - a))
    sets = [
        frozenset(p + c for p, c in zip(prefixes, choice))
        for choice in itertools.product(completions, repeat=len(prefixes))
    ]
    return MonotoneRule(d, tuple(sets), name=f"min-max-{d}-{a}")


def identity(d: int = 2) -> MonotoneRule:
    return MonotoneRule(d, (frozenset({(0,) * d}),), name="identity" if d == 2 else f"identity-{d}")


BUILTINS = {
    "nec": nec,
    "nsmm": nsmm,
    "non-example": non_example,
    "identity": identity,
}


def builtin(spec: str) -> MonotoneRule:
    """Resolve ``nec``, ``nsmm``, ``non-example``, ``identity[:d]`` or ``min-max:d:a``."""
    head, *args = spec.split(":")
    try:
        if head == "min-max":
            d, a = (int(x) for x in args)
            return min_max(d, a)
        if head == "identity":
            return identity(int(args[0]) if args else 2)
        if head in BUILTINS and not args:
            return BUILTINS[head]()
    except ValueError as exc:
        raise InvalidParameters(f"bad rule spec {spec!r}: {exc}") from exc
    raise InvalidParameters(f"unknown builtin rule {spec!r}")


# rule files


def rule_from_dict(data: Mapping) -> MonotoneRule:
    try:
        d = int(data["dimension"])
        support = [tuple(int(c) for c in o) for o in data["support"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidRule(f"rule file needs 'dimension' and 'support': {exc}") from exc
    name = data.get("name")
    if "minimal_one_sets" in data:
        try:
            sets = [frozenset(support[k] for k in s) for s in data["minimal_one_sets"]]
        except IndexError as exc:
            raise InvalidRule("minimal_one_sets refers to a missing support index") from exc
        rule = MonotoneRule(d, tuple(sets), name=name)
        if set(rule.support) != set(support):
            raise InvalidRule("every support offset must belong to some minimal one-set")
        return rule
    if "truth_table" in data:
        table = {}
        for row in data["truth_table"]:
            bits, out = row if isinstance(row, (list, tuple)) else (row["assignment"], row["output"])
            if len(bits) != len(support) or set(bits) - {"0", "1"}:
                raise InvalidRule(f"bad assignment string {bits!r}")
            table[tuple(int(b) for b in bits)] = int(out)
        return from_truth_table(d, support, table, name=name)
    raise InvalidRule("rule file needs 'minimal_one_sets' or 'truth_table'")


def rule_to_dict(rule: MonotoneRule) -> dict:
    support = list(rule.support)
    index = {o: k for k, o in enumerate(support)}
    return {
        "name": rule.name,
        "dimension": rule.dimension,
        "support": [list(o) for o in support],
        "minimal_one_sets": [sorted(index[o] for o in s) for s in rule.minimal_one_sets],
    }


def load_rule(source: str | Path) -> MonotoneRule:
    """A builtin name or a path to a JSON rule file."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        with open(path) as fh:
            return rule_from_dict(json.load(fh))
    return builtin(str(source))
