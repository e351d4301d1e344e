"""Finite windows of Z^d evolved by deterministic, noisy and general stochastic rules.

Bits are packed 64 to a ``uint64`` word along the last axis (bit ``b`` of word
``w`` is site ``64 * w + b`` of that row). Reads outside the window resolve by
the boundary mode; the outside is frozen, it never evolves.
"""

from __future__ import annotations

import enum
import itertools
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import rng as rngmod
from .errors import DimensionMismatch, InvalidParameters, OutOfWindow, SupportMismatch
from .geometry import EroderCertificate
from .rules import MonotoneRule, Offset

Site = tuple[int, ...]
_ONE = np.uint64(1)
_ALL = np.uint64(rngmod.MASK64)


class Boundary(str, enum.Enum):
    ZEROS = "zeros"
    ONES = "ones"
    PERIODIC = "periodic"


def _n_words(n: int) -> int:
    return (n + 63) // 64


def _tail_mask(n: int) -> np.uint64:
    r = n % 64
    return _ALL if r == 0 else np.uint64((1 << r) - 1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=bool)
    n = bits.shape[-1]
    padded = np.zeros(bits.shape[:-1] + (_n_words(n) * 64,), dtype=bool)
    padded[..., :n] = bits
    return np.packbits(padded, axis=-1, bitorder="little").view("<u8").astype(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, axis=-1, bitorder="little")[..., :n].astype(bool)


@dataclass(frozen=True, eq=False)
class Configuration:
    """A bit lattice on the box ``lower <= i <= upper`` (inclusive)."""

    lower: tuple[int, ...]
    upper: tuple[int, ...]
    words: np.ndarray
    boundary: Boundary = Boundary.ZEROS

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower", tuple(int(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(int(v) for v in self.upper))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if len(self.lower) != len(self.upper) or not self.lower:
            raise InvalidParameters("box bounds must have the same positive length")
        if any(u < l for l, u in zip(self.lower, self.upper)):
            raise InvalidParameters(f"empty box {self.lower}..{self.upper}")
        expected = self.shape[:-1] + (_n_words(self.shape[-1]),)
        if self.words.shape != expected or self.words.dtype != np.uint64:
            raise InvalidParameters(f"word array must be uint64 of shape {expected}")
        self.words.flags.writeable = False

    # construction

    @classmethod
    def zeros(cls, lower, upper, boundary=Boundary.ZEROS) -> "Configuration":
        shape = tuple(u - l + 1 for l, u in zip(lower, upper))
        return cls(lower, upper, np.zeros(shape[:-1] + (_n_words(shape[-1]),), np.uint64), boundary)

    @classmethod
    def ones(cls, lower, upper, boundary=Boundary.ZEROS) -> "Configuration":
        shape = tuple(u - l + 1 for l, u in zip(lower, upper))
        return cls.from_array(np.ones(shape, bool), lower, boundary)

    @classmethod
    def from_array(cls, bits: np.ndarray, lower: Sequence[int], boundary=Boundary.ZEROS) -> "Configuration":
        bits = np.asarray(bits, dtype=bool)
        upper = tuple(l + n - 1 for l, n in zip(lower, bits.shape))
        return cls(tuple(lower), upper, pack_bits(bits), boundary)

    @classmethod
    def from_sites(cls, sites: Iterable[Site], lower, upper, boundary=Boundary.ZEROS) -> "Configuration":
        lower, upper = tuple(lower), tuple(upper)
        shape = tuple(u - l + 1 for l, u in zip(lower, upper))
        bits = np.zeros(shape, bool)
        for s in sites:
            if len(s) != len(lower) or any(not (l <= c <= u) for c, l, u in zip(s, lower, upper)):
                raise OutOfWindow(f"site {s} lies outside the window {lower}..{upper}")
            bits[tuple(c - l for c, l in zip(s, lower))] = True
        return cls.from_array(bits, lower, boundary)

    # accessors

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(u - l + 1 for l, u in zip(self.lower, self.upper))

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.words, self.shape[-1])

    def coordinate_grids(self) -> list[np.ndarray]:
        return list(
            np.meshgrid(*(np.arange(l, u + 1) for l, u in zip(self.lower, self.upper)), indexing="ij")
        )

    def contains(self, site: Site) -> bool:
        return all(l <= c <= u for c, l, u in zip(site, self.lower, self.upper))

    def __getitem__(self, site: Site) -> int:
        if len(site) != self.dimension:
            raise DimensionMismatch(f"site {site} in a {self.dimension}-d window")
        if not self.contains(site):
            if self.boundary == Boundary.PERIODIC:
                site = tuple(l + (c - l) % n for c, l, n in zip(site, self.lower, self.shape))
            else:
                return int(self.boundary == Boundary.ONES)
        idx = [c - l for c, l in zip(site, self.lower)]
        w, b = divmod(idx[-1], 64)
        return int((int(self.words[tuple(idx[:-1]) + (w,)]) >> b) & 1)

    def sites(self) -> set[Site]:
        arr = self.to_array()
        return {tuple(int(c + l) for c, l in zip(idx, self.lower)) for idx in zip(*np.nonzero(arr))}

    def count(self) -> int:
        return rngmod.popcount(self.words)

    def with_words(self, words: np.ndarray) -> "Configuration":
        return Configuration(self.lower, self.upper, words, self.boundary)

    def _compatible(self, other: "Configuration") -> None:
        if (self.lower, self.upper) != (other.lower, other.upper):
            raise DimensionMismatch("configurations live on different windows")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            (self.lower, self.upper, self.boundary) == (other.lower, other.upper, other.boundary)
            and np.array_equal(self.words, other.words)
        )

    def __le__(self, other: "Configuration") -> bool:
        """Sitewise order."""
        self._compatible(other)
        return not np.any(self.words & ~other.words)

    def __or__(self, other: "Configuration") -> "Configuration":
        self._compatible(other)
        return self.with_words(self.words | other.words)

    def __repr__(self) -> str:
        return f"Configuration({self.lower}..{self.upper}, {self.boundary.value}, ones={self.count()})"


# packed shifting


def _shift_last(words: np.ndarray, n: int, k: int, fill: bool) -> np.ndarray:
    """y[..., j] = x[..., j + k] for 0 <= j < n, reading ``fill`` outside [0, n)."""
    nw = words.shape[-1]
    fill_word = _ALL if fill else np.uint64(0)
    src = words
    if fill and n % 64:
        src = words.copy()
        src[..., -1] |= ~_tail_mask(n)
    e = abs(k) // 64 + 1
    pad = np.full(words.shape[:-1] + (e,), fill_word, dtype=np.uint64)
    ext = np.concatenate([pad, src, pad], axis=-1)
    q, r = divmod(k + 64 * e, 64)
    lo = ext[..., q : q + nw]
    if r == 0:
        out = lo.copy()
    else:
        hi = ext[..., q + 1 : q + 1 + nw]
        out = (lo >> np.uint64(r)) | (hi << np.uint64(64 - r))
    out[..., -1] &= _tail_mask(n)
    return out


def _shift_axis(words: np.ndarray, axis: int, k: int, fill: bool) -> np.ndarray:
    """Shift along a non-packed axis: y[.., j, ..] = x[.., j + k, ..]."""
    n = words.shape[axis]
    out = np.empty_like(words)
    out[...] = _ALL if fill else np.uint64(0)
    if abs(k) >= n:
        return out
    dst = [slice(None)] * words.ndim
    src = [slice(None)] * words.ndim
    if k >= 0:
        dst[axis], src[axis] = slice(0, n - k), slice(k, n)
    else:
        dst[axis], src[axis] = slice(-k, n), slice(0, n + k)
    out[tuple(dst)] = words[tuple(src)]
    return out


def shifted(cfg: Configuration, offset: Offset) -> np.ndarray:
    """Packed words of the configuration read at i + offset for every window site i."""
    words = cfg.words
    d = cfg.dimension
    n_last = cfg.shape[-1]
    periodic = cfg.boundary == Boundary.PERIODIC
    fill = cfg.boundary == Boundary.ONES
    for axis in range(d - 1):
        k = offset[axis]
        if k:
            words = np.roll(words, -k, axis=axis) if periodic else _shift_axis(words, axis, k, fill)
    k = offset[-1]
    if k or fill:
        if periodic:
            k %= n_last
            words = _shift_last(words, n_last, k, False) | _shift_last(words, n_last, k - n_last, False)
        else:
            words = _shift_last(words, n_last, k, fill)
    else:
        words = words.copy()
    return words


# steppers


def _check_dims(rule_dim: int, cfg: Configuration) -> None:
    if rule_dim != cfg.dimension:
        raise DimensionMismatch(f"rule dimension {rule_dim} vs configuration dimension {cfg.dimension}")


def step_det(rule: MonotoneRule, cfg: Configuration) -> Configuration:
    """One synchronous deterministic step: new x_i = f(x read at i + support)."""
    _check_dims(rule.dimension, cfg)
    cache = {o: shifted(cfg, o) for o in rule.support}
    out = np.zeros_like(cfg.words)
    for S in rule.minimal_one_sets:
        it = iter(sorted(S))
        term = cache[next(it)].copy()
        for o in it:
            term &= cache[o]
        out |= term
    return cfg.with_words(out)


def step_det_reference(rule: MonotoneRule, cfg: Configuration) -> Configuration:
    """Site-by-site unpacked step, used as an oracle for :func:`step_det`."""
    _check_dims(rule.dimension, cfg)
    new = np.zeros(cfg.shape, dtype=bool)
    for idx in itertools.product(*(range(n) for n in cfg.shape)):
        site = tuple(i + l for i, l in zip(idx, cfg.lower))
        local = {o: cfg[tuple(a + b for a, b in zip(site, o))] for o in rule.support}
        new[idx] = rule(local)
    return Configuration.from_array(new, cfg.lower, cfg.boundary)


@dataclass(frozen=True)
class NoiseModel:
    """One-sided noise: each 0 becomes 1 with probability epsilon, ones stay."""

    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidParameters(f"epsilon must lie in [0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class RngSpec:
    """Address of a random stream: the bits used at (site, time, replica) depend on nothing else."""

    master_seed: int
    replica: int = 0
    time: int = 0

    def at(self, time: int) -> "RngSpec":
        return RngSpec(self.master_seed, self.replica, time)


def _site_hash_grid(cfg: Configuration) -> np.ndarray:
    return rngmod.site_hashes(cfg.lower, cfg.shape)


def noise_configuration(cfg: Configuration, noise: NoiseModel, rng: RngSpec) -> Configuration:
    bits = rngmod.replica_bits(_site_hash_grid(cfg), rng.master_seed, rng.time, rng.replica, noise.epsilon)
    return cfg.with_words(pack_bits(bits))


def step_noisy(rule: MonotoneRule, cfg: Configuration, noise: NoiseModel, rng: RngSpec) -> Configuration:
    """Deterministic step followed by independent 0 -> 1 flips with probability epsilon."""
    det = step_det(rule, cfg)
    if noise.epsilon == 0.0:
        return det
    return det | noise_configuration(cfg, noise, rng)


@dataclass(frozen=True)
class GeneralStochasticRule:
    """New value is 1 with probability ``theta[code]``, code = sum_k bit_k << k over ``support``."""

    support: tuple[Offset, ...]
    theta: tuple[float, ...]
    name: str | None = None

    def __post_init__(self) -> None:
        if len(self.theta) != 2 ** len(self.support):
            raise InvalidParameters("theta needs one probability per local assignment")
        if any(not 0.0 <= p <= 1.0 for p in self.theta):
            raise InvalidParameters("theta values must be probabilities")

    @property
    def dimension(self) -> int:
        return len(self.support[0])

    @classmethod
    def from_function(cls, support: Sequence[Offset], fn: Callable[[Mapping[Offset, int]], float], name=None):
        support = tuple(tuple(o) for o in support)
        theta = []
        for code in range(2 ** len(support)):
            local = {o: (code >> k) & 1 for k, o in enumerate(support)}
            theta.append(float(fn(local)))
        return cls(support, tuple(theta), name)

    @classmethod
    def indicator(cls, rule: MonotoneRule) -> "GeneralStochasticRule":
        return cls.from_function(rule.support, rule, name=rule.name)

    @classmethod
    def majorant(cls, rule: MonotoneRule, eps: float) -> "GeneralStochasticRule":
        """theta = max(f, eps): the law of the noisy step."""
        return cls.from_function(rule.support, lambda y: max(rule(y), eps), name=rule.name)

    @classmethod
    def constant(cls, dimension: int, eps: float) -> "GeneralStochasticRule":
        """Pure-noise baseline: every site is 1 with probability eps whatever the past."""
        return cls(((0,) * dimension,), (eps, eps), name="pure-noise")

    def probability(self, local: Mapping[Offset, int]) -> float:
        return self.theta[sum(local[o] << k for k, o in enumerate(self.support))]


def step_general(rule: GeneralStochasticRule, cfg: Configuration, rng: RngSpec) -> Configuration:
    _check_dims(rule.dimension, cfg)
    n = cfg.shape[-1]
    code = np.zeros(cfg.shape, dtype=np.int64)
    for k, o in enumerate(rule.support):
        code |= unpack_bits(shifted(cfg, o), n).astype(np.int64) << k
    prob = np.asarray(rule.theta)[code]
    u = rngmod.uniforms(_site_hash_grid(cfg), rng.master_seed, rng.time, rng.replica)
    return cfg.with_words(pack_bits(u < prob))


def check_majorates(rule: GeneralStochasticRule, f: MonotoneRule, epsilon: float) -> dict[Offset, int] | None:
    """None if theta = 1 where f = 1 and theta >= eps where f = 0; else the first violating assignment."""
    if set(rule.support) != set(f.support):
        raise SupportMismatch(f"supports differ: {sorted(rule.support)} vs {sorted(f.support)}")
    for code in range(2 ** len(rule.support)):
        local = {o: (code >> k) & 1 for k, o in enumerate(rule.support)}
        p = rule.theta[code]
        if (f(local) and p != 1.0) or (not f(local) and p < epsilon):
            return local
    return None


def evolve(rule: MonotoneRule, cfg: Configuration, steps: int) -> Configuration:
    for _ in range(steps):
        cfg = step_det(rule, cfg)
    return cfg


# regions


def sphere(center: Sequence[int], L: int) -> frozenset[Site]:
    """Euclidean lattice ball {i : |i - center| <= L}."""
    center = tuple(center)
    r2 = L * L
    ranges = [range(c - L, c + L + 1) for c in center]
    return frozenset(
        p for p in itertools.product(*ranges) if sum((a - c) ** 2 for a, c in zip(p, center)) <= r2
    )


def nec_spider(L: int) -> frozenset[Site]:
    arms = {(i, 0) for i in range(-8 * L, 4 * L + 1)}
    arms |= {(0, j) for j in range(-8 * L, 4 * L + 1)}
    arms |= {(i, -i) for i in range(-6 * L, 6 * L + 1)}
    return frozenset(arms)


def nsmm_spider(L: int) -> frozenset[Site]:
    return frozenset((i, 0) for i in range(-3 * L, 3 * L + 1))


def bounding_box(sites: Iterable[Site]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    sites = list(sites)
    if not sites:
        raise InvalidParameters("empty region has no bounding box")
    d = len(sites[0])
    return (
        tuple(min(s[k] for s in sites) for k in range(d)),
        tuple(max(s[k] for s in sites) for k in range(d)),
    )


def inflate(lower, upper, margin: int):
    return tuple(l - margin for l in lower), tuple(u + margin for u in upper)


def _box_grids(lower, upper) -> list[np.ndarray]:
    return list(np.meshgrid(*(np.arange(l, u + 1, dtype=np.int64) for l, u in zip(lower, upper)), indexing="ij"))


def _as_int_arrays(grids: list[np.ndarray], bound: int) -> list[np.ndarray]:
    # int64 is exact while every intermediate stays below 2**62; fall back to Python ints
    if bound < 2**62:
        return grids
    return [g.astype(object) for g in grids]


def slab_union_mask(cert: EroderCertificate, radius_squared: int, lower, upper) -> np.ndarray:
    """Boolean mask over the box of U_j {i : phi_j(i)^2 <= (2 rho)^2 |phi_j|^2}."""
    grids = _box_grids(lower, upper)
    mask = np.zeros(grids[0].shape, dtype=bool)
    span = max(max(abs(l), abs(u)) for l, u in zip(lower, upper))
    for phi in cert.functionals:
        a, b, _ = phi.integer_form()
        bound = (sum(abs(c) for c in a) * span + abs(b)) ** 2 + 4 * radius_squared * sum(c * c for c in a)
        g = _as_int_arrays(grids, bound)
        val = sum(c * x for c, x in zip(a, g)) + b
        mask |= val * val <= 4 * radius_squared * sum(c * c for c in a)
    return mask


def slab_union(cert: EroderCertificate, radius_squared: int, lower, upper, boundary=Boundary.ZEROS) -> Configuration:
    return Configuration.from_array(slab_union_mask(cert, radius_squared, lower, upper), lower, boundary)


def layer(u: Sequence[int], c1: int, c2: int, lower, upper, boundary=Boundary.ZEROS) -> Configuration:
    """Ones exactly on {i : c1 <= <i, u> <= c2} within the box."""
    grids = _box_grids(lower, upper)
    val = sum(c * x for c, x in zip(u, grids))
    return Configuration.from_array((val >= c1) & (val <= c2), lower, boundary)


def half_space(u: Sequence[int], c: int, lower, upper, boundary=Boundary.ZEROS) -> Configuration:
    """A front: ones on {i : <i, u> <= c}."""
    grids = _box_grids(lower, upper)
    val = sum(a * x for a, x in zip(u, grids))
    return Configuration.from_array(val <= c, lower, boundary)


# dumps


def to_pbm(cfg: Configuration) -> str:
    """Plain PBM (P1); rows run from the highest second coordinate down, columns along the first."""
    if cfg.dimension != 2:
        raise InvalidParameters("PBM dumps are two-dimensional")
    arr = cfg.to_array()  # arr[i, j]
    w, h = arr.shape
    lines = ["P1", f"# window {cfg.lower}..{cfg.upper} boundary={cfg.boundary.value}", f"{w} {h}"]
    for j in range(h - 1, -1, -1):
        lines.append(" ".join("1" if arr[i, j] else "0" for i in range(w)))
    return "\n".join(lines) + "\n"


_MAGIC = b"ERDCFG1\n"
_BOUNDARY_CODE = {Boundary.ZEROS: 0, Boundary.ONES: 1, Boundary.PERIODIC: 2}


def to_raw(cfg: Configuration) -> bytes:
    """Binary dump: magic, d, boundary code, box bounds (int64), then packed bits.

    Payload bits are row-major with the last axis fastest, LSB-first within bytes.
    """
    d = cfg.dimension
    header = _MAGIC + struct.pack("<BB", d, _BOUNDARY_CODE[cfg.boundary])
    header += struct.pack(f"<{2 * d}q", *cfg.lower, *cfg.upper)
    payload = np.packbits(cfg.to_array().ravel(), bitorder="little").tobytes()
    return header + payload


def from_raw(data: bytes) -> Configuration:
    if not data.startswith(_MAGIC):
        raise InvalidParameters("not a raw configuration dump")
    pos = len(_MAGIC)
    d, code = struct.unpack_from("<BB", data, pos)
    pos += 2
    bounds = struct.unpack_from(f"<{2 * d}q", data, pos)
    pos += 16 * d
    lower, upper = bounds[:d], bounds[d:]
    shape = tuple(u - l + 1 for l, u in zip(lower, upper))
    bits = np.unpackbits(np.frombuffer(data[pos:], dtype=np.uint8), bitorder="little")[: math.prod(shape)]
    boundary = {v: k for k, v in _BOUNDARY_CODE.items()}[code]
    return Configuration.from_array(bits.reshape(shape).astype(bool), lower, boundary)


def to_svg(cfg: Configuration, cell: int = 6, highlight: Iterable[Site] = ()) -> str:
    """Black squares for ones; optional highlighted sites outlined in red."""
    if cfg.dimension != 2:
        raise InvalidParameters("SVG rendering is two-dimensional")
    arr = cfg.to_array()
    w, h = arr.shape
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * cell}" height="{h * cell}" '
        f'viewBox="0 0 {w * cell} {h * cell}">',
        f'<rect width="{w * cell}" height="{h * cell}" fill="white"/>',
    ]
    for i, j in zip(*np.nonzero(arr)):
        out.append(f'<rect x="{i * cell}" y="{(h - 1 - j) * cell}" width="{cell}" height="{cell}" fill="black"/>')
    for s in highlight:
        i, j = s[0] - cfg.lower[0], s[1] - cfg.lower[1]
        out.append(
            f'<rect x="{i * cell}" y="{(h - 1 - j) * cell}" width="{cell}" height="{cell}" '
            'fill="none" stroke="red" stroke-width="1"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
