"""Bit-sliced Monte Carlo over many replicas of the noisy dynamics from all zeros.

Each lattice site holds one ``uint64`` per 64 replicas. Only the backward light
cone of the observed region is simulated: the box needed at time ``s`` is the
region's bounding box grown by ``(t - s)`` copies of the support's extent. On the
infinite lattice started from all zeros this is exact, so no window or boundary
enters the result.

Noise for the step that produces time ``s`` is drawn from stream index
``t - s`` (counted back from the observation time). With that indexing a run of
length ``t + 1`` dominates a run of length ``t`` replica by replica, which makes
the estimates monotone in ``t`` for a fixed seed.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import rng as rngmod
from .errors import InvalidParameters
from .rules import MonotoneRule

Site = tuple[int, ...]

WORDS_PER_CHUNK = 32


class PureNoise:
    """Stand-in rule whose deterministic part is identically 0 (sites are fresh noise)."""

    name = "pure-noise"

    def __init__(self, dimension: int = 2) -> None:
        self.dimension = dimension

    def label(self) -> str:
        return self.name

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PureNoise) and other.dimension == self.dimension

    def __hash__(self) -> int:
        return hash(("pure-noise", self.dimension))


@dataclass(frozen=True)
class Event:
    """Cylinder event: ones at ``ones`` and zeros at ``zeros`` at the observation time."""

    ones: frozenset[Site]
    zeros: frozenset[Site] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ones", frozenset(map(tuple, self.ones)))
        object.__setattr__(self, "zeros", frozenset(map(tuple, self.zeros)))
        if self.ones & self.zeros:
            raise InvalidParameters("a site cannot be required to be both 0 and 1")

    @property
    def sites(self) -> frozenset[Site]:
        return self.ones | self.zeros

    def __len__(self) -> int:
        return len(self.sites)


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    return max(1, int(os.environ.get("ERODERS_THREADS", "1")))


def light_cone_boxes(rule, lower: Sequence[int], upper: Sequence[int], t: int):
    """Boxes B_0..B_t with B_t = [lower, upper] and B_{s-1} = B_s + support extent."""
    if isinstance(rule, PureNoise):
        return [(tuple(lower), tuple(upper))] * (t + 1)
    lo_off, hi_off = rule.offset_bounds()
    boxes = []
    for s in range(t + 1):
        k = t - s
        boxes.append(
            (
                tuple(l + k * a for l, a in zip(lower, lo_off)),
                tuple(u + k * b for u, b in zip(upper, hi_off)),
            )
        )
    return boxes


def _noise_block(lower, shape, seed, index, words, eps) -> np.ndarray:
    return rngmod.bernoulli_words(rngmod.site_hashes(lower, shape), seed, index, words, eps)


def simulate_words(
    rule,
    eps: float,
    t: int,
    event: Event,
    seed: int,
    words: Sequence[int],
    initial: Iterable[Site] = (),
) -> np.ndarray:
    """Per-word hit masks (bit b of entry w set iff replica 64*words[w]+b saw the event)."""
    if t < 0:
        raise InvalidParameters("t must be non-negative")
    words = list(words)
    nw = len(words)
    if not event.sites:
        return np.full(nw, rngmod.MASK64, dtype=np.uint64)
    d = len(next(iter(event.sites)))
    if rule.dimension != d:
        raise InvalidParameters(f"event is {d}-dimensional, rule is {rule.dimension}-dimensional")
    lower = tuple(min(s[k] for s in event.sites) for k in range(d))
    upper = tuple(max(s[k] for s in event.sites) for k in range(d))
    boxes = light_cone_boxes(rule, lower, upper, t)

    def shape_of(box):
        return tuple(u - l + 1 for l, u in zip(*box))

    lo0, hi0 = boxes[0]
    state = np.zeros(shape_of(boxes[0]) + (nw,), dtype=np.uint64)
    for site in initial:
        if all(l <= c <= u for c, l, u in zip(site, lo0, hi0)):
            state[tuple(c - l for c, l in zip(site, lo0))] = rngmod.MASK64
    for s in range(1, t + 1):
        prev_lo = boxes[s - 1][0]
        lo, hi = boxes[s]
        shape = shape_of(boxes[s])
        if isinstance(rule, PureNoise):
            new = np.zeros(shape + (nw,), dtype=np.uint64)
        else:
            views = {}
            for o in rule.support:
                start = [l + a - pl for l, a, pl in zip(lo, o, prev_lo)]
                views[o] = state[tuple(slice(st, st + n) for st, n in zip(start, shape))]
            new = None
            for S in rule.minimal_one_sets:
                it = iter(sorted(S))
                term = views[next(it)].copy()
                for o in it:
                    term &= views[o]
                if new is None:
                    new = term
                else:
                    new |= term
        if eps > 0.0:
            new |= _noise_block(lo, shape, seed, t - s, words, eps)
        state = new
    # state now lives on boxes[t] = bounding box of the event
    hit = np.full(nw, rngmod.MASK64, dtype=np.uint64)
    for site in event.ones:
        hit &= state[tuple(c - l for c, l in zip(site, lower))]
    for site in event.zeros:
        hit &= ~state[tuple(c - l for c, l in zip(site, lower))]
    return hit


@dataclass
class EnsembleResult:
    samples: int
    hits: int
    replica_hits: np.ndarray | None = None


def run_ensemble(
    rule,
    eps: float,
    t: int,
    event: Event,
    samples: int,
    seed: int,
    initial: Iterable[Site] = (),
    threads: int | None = None,
    keep_replicas: bool = False,
) -> EnsembleResult:
    """Count replicas 0..samples-1 for which the event holds at time ``t``."""
    if samples <= 0:
        raise InvalidParameters("samples must be positive")
    if not 0.0 <= eps <= 1.0:
        raise InvalidParameters(f"epsilon must lie in [0, 1], got {eps}")
    initial = tuple(initial)
    n_words = (samples + 63) // 64
    chunks = [list(range(a, min(a + WORDS_PER_CHUNK, n_words))) for a in range(0, n_words, WORDS_PER_CHUNK)]

    def work(chunk):
        return simulate_words(rule, eps, t, event, seed, chunk, initial)

    n = thread_count(threads)
    if n == 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(work, chunks))
    masks = np.concatenate(parts)
    r = samples % 64
    if r:
        masks[-1] &= np.uint64((1 << r) - 1)
    hits = rngmod.popcount(masks)
    replica_hits = None
    if keep_replicas:
        bits = np.unpackbits(masks.astype("<u8").view(np.uint8), bitorder="little")
        replica_hits = bits[:samples].astype(bool)
    return EnsembleResult(samples, hits, replica_hits)


def replica_trajectory(rule: MonotoneRule, eps: float, t: int, seed: int, replica: int, lower, upper, initial=()):
    """One replica evolved on an explicit window with the ensemble's noise indexing.

    With a window that contains the light cone, the final state on the event box
    matches the bit-sliced engine for that replica.
    """
    from .lattice import Configuration, NoiseModel, RngSpec, step_noisy

    cfg = Configuration.from_sites([s for s in initial], lower, upper)
    noise = NoiseModel(eps)
    for s in range(1, t + 1):
        cfg = step_noisy(rule, cfg, noise, RngSpec(seed, replica, t - s))
    return cfg
