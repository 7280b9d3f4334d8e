"""Free group F_m, the boundary of its Cayley tree, and the Moebius action.

Words are plain strings. Generators are the first ``m`` lowercase letters and
their inverses are the matching uppercase letters, so ``"aB"`` is a * b^-1.
The canonical letter order is all generators, then all inverses ("abAB").
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from .errors import (
    ContainsBasepoint,
    DepthTooShallow,
    FullCancellation,
    NestedCylinders,
    ParamError,
)


def alphabet(m: int) -> str:
    if not 2 <= m <= 26:
        raise ParamError(f"generator count must be in [2, 26], got {m}")
    gens = "abcdefghijklmnopqrstuvwxyz"[:m]
    return gens + gens.upper()


def inverse_letter(x: str) -> str:
    return x.lower() if x.isupper() else x.upper()


def inverse(word: str) -> str:
    return "".join(inverse_letter(x) for x in reversed(word))


def reduce(letters: Iterable[str], m: int | None = None) -> str:
    """Freely reduce a letter sequence. Idempotent."""
    allowed = set(alphabet(m)) if m is not None else None
    out: list[str] = []
    for x in letters:
        if allowed is not None and x not in allowed:
            raise ParamError(f"letter {x!r} not in the alphabet for m={m}")
        if out and out[-1] == inverse_letter(x):
            out.pop()
        else:
            out.append(x)
    return "".join(out)


def is_reduced(word: str) -> bool:
    return all(word[i + 1] != inverse_letter(word[i]) for i in range(len(word) - 1))


def common_prefix(u: str, v: str) -> int:
    n = min(len(u), len(v))
    i = 0
    while i < n and u[i] == v[i]:
        i += 1
    return i


def cancellation(g: str, w: str) -> int:
    """Number of letters cancelled when reducing g*w."""
    return common_prefix(inverse(g), w)


def children(word: str, m: int) -> list[str]:
    if not word:
        return list(alphabet(m))
    bad = inverse_letter(word[-1])
    return [word + x for x in alphabet(m) if x != bad]


@lru_cache(maxsize=64)
def words_at_depth(m: int, n: int) -> tuple[str, ...]:
    """All reduced words of length n in canonical (depth-first) order."""
    if n < 0:
        raise ParamError("depth must be nonnegative")
    out = [""]
    for _ in range(n):
        out = [c for w in out for c in children(w, m)]
    return tuple(out)


@lru_cache(maxsize=64)
def word_index(m: int, n: int) -> dict[str, int]:
    return {w: i for i, w in enumerate(words_at_depth(m, n))}


def count_cylinders(m: int, n: int) -> int:
    k = 2 * m
    return k * (k - 1) ** (n - 1) if n >= 1 else 1


@lru_cache(maxsize=16)
def product_matrix(m: int, n: int) -> np.ndarray:
    """Gromov products between all depth-n cylinders (diagonal holds n).

    Descendants of a prefix are contiguous in canonical order, so two indices
    share a length-l prefix exactly when they fall in the same block of size
    (k-1)^(n-l).
    """
    k = 2 * m
    idx = np.arange(count_cylinders(m, n))
    P = np.zeros((idx.size, idx.size), dtype=np.int64)
    for level in range(1, n + 1):
        b = (k - 1) ** (n - level)
        blk = idx // b
        P += blk[:, None] == blk[None, :]
    P.setflags(write=False)
    return P


@dataclass(frozen=True)
class Params:
    m: int = 2
    s: float = 0.3
    p: float = 2.0
    t: float = 0.0

    def __post_init__(self):
        alphabet(self.m)
        if self.p < 1:
            raise ParamError(f"p must be >= 1, got {self.p}")

    @property
    def k(self) -> int:
        return 2 * self.m

    @property
    def D(self) -> float:
        return math.log(self.k - 1)

    @property
    def z(self) -> complex:
        return complex(self.s, self.t)

    def require_sobolev(self):
        if self.s * self.p >= self.D:
            raise ParamError(f"need s*p < D, got s*p={self.s * self.p:.4g}, D={self.D:.4g}")


def dimension(m: int) -> float:
    return math.log(2 * m - 1)


@dataclass(frozen=True)
class Cylinder:
    prefix: str

    def __post_init__(self):
        if not self.prefix:
            raise ParamError("cylinder prefix must be nonempty")
        if not is_reduced(self.prefix):
            raise ParamError(f"cylinder prefix {self.prefix!r} is not reduced")

    @property
    def depth(self) -> int:
        return len(self.prefix)

    def __str__(self):
        return f"C[{self.prefix}]"


@dataclass(frozen=True)
class BoundaryPoint:
    """The infinite word head * period * period * ..."""

    head: str
    period: str

    def __post_init__(self):
        if not self.period:
            raise ParamError("period must be nonempty")
        if not is_reduced(self.head + self.period * 3):
            raise ParamError(f"{self.head}({self.period})^inf is not reduced")

    def prefix(self, n: int) -> str:
        if n <= len(self.head):
            return self.head[:n]
        reps = (n - len(self.head)) // len(self.period) + 1
        return (self.head + self.period * reps)[:n]

    def letter(self, i: int) -> str:
        return self.prefix(i + 1)[i]

    def __str__(self):
        return f"{self.head}({self.period})^inf"


Boundaryish = Union[str, Cylinder, BoundaryPoint]


def _agreement_bound(u: BoundaryPoint, v: BoundaryPoint) -> int:
    lp = len(u.period) * len(v.period) // math.gcd(len(u.period), len(v.period))
    return max(len(u.head), len(v.head)) + lp


def gromov_product(u: Boundaryish, v: Boundaryish) -> float:
    """Length of the longest common prefix; ``math.inf`` for equal points."""
    if isinstance(u, str) and not isinstance(v, str):
        return gromov_product(v, u)
    if isinstance(u, BoundaryPoint) and isinstance(v, BoundaryPoint):
        bound = _agreement_bound(u, v)
        c = common_prefix(u.prefix(bound), v.prefix(bound))
        return math.inf if c >= bound else c
    if isinstance(u, Cylinder) and isinstance(v, BoundaryPoint):
        u, v = v, u
    if isinstance(u, BoundaryPoint) and isinstance(v, Cylinder):
        c = common_prefix(u.prefix(v.depth), v.prefix)
        if c == v.depth:
            raise NestedCylinders(f"{u} lies in {v}")
        return c
    if isinstance(u, Cylinder) and isinstance(v, Cylinder):
        c = common_prefix(u.prefix, v.prefix)
        if c == min(u.depth, v.depth):
            raise NestedCylinders(f"{u} and {v} are nested")
        return c
    # vertex word against a boundary object
    x = u if isinstance(u, str) else v
    other = v if isinstance(u, str) else u
    if isinstance(other, str):
        return common_prefix(x, other)
    if isinstance(other, BoundaryPoint):
        return common_prefix(x, other.prefix(len(x)))
    c = common_prefix(x, other.prefix)
    if c == other.depth and len(x) > other.depth:
        raise DepthTooShallow(f"product of {x!r} with {other} is not constant")
    return c


def visual_distance(u: Boundaryish, v: Boundaryish) -> float:
    gp = gromov_product(u, v)
    return 0.0 if gp == math.inf else math.exp(-gp)


def cylinder_measure(c: Cylinder, m: int) -> float:
    return 1.0 / count_cylinders(m, c.depth)


def act_on_word(g: str, w: str) -> str:
    """Reduced g*w, refusing full cancellation of w."""
    c = cancellation(g, w)
    if w and c >= len(w):
        raise FullCancellation(f"{g!r} cancels all of {w!r}")
    return g[: len(g) - c] + w[c:]


def act_on_cylinder(g: str, c: Cylinder) -> Cylinder:
    return Cylinder(act_on_word(g, c.prefix))


def act_on_point(g: str, xi: BoundaryPoint) -> BoundaryPoint:
    reps = len(g) // len(xi.period) + 1
    w = xi.head + xi.period * reps
    return BoundaryPoint(act_on_word(g, w), xi.period)


def log_derivative(g: str, w: str) -> int:
    """Integer exponent of |g'| on the cylinder C_w, i.e. 2<g^-1, C_w> - |g|.

    Needs the product to be constant on C_w: either |w| >= |g| or the prefix
    shared with g^-1 stops before the end of w.
    """
    c = common_prefix(inverse(g), w)
    if c >= len(w) and len(w) < len(g):
        raise DepthTooShallow(f"|{g}'| is not constant on C[{w}]")
    return 2 * c - len(g)


def metric_derivative(g: str, x: Cylinder | BoundaryPoint) -> float:
    if isinstance(x, BoundaryPoint):
        c = common_prefix(inverse(g), x.prefix(len(g)))
        return math.exp(2 * c - len(g))
    if x.depth < len(g):
        raise DepthTooShallow(f"depth {x.depth} < |g| = {len(g)}")
    return math.exp(log_derivative(g, x.prefix))


def busemann(x: str, xi: Cylinder | BoundaryPoint) -> int:
    if isinstance(xi, Cylinder) and xi.depth < len(x):
        raise DepthTooShallow(f"depth {xi.depth} < |x| = {len(x)}")
    gp = gromov_product(x, xi)
    return len(x) - 2 * int(gp)


def cross_ratio(x: Boundaryish, y: Boundaryish, z: Boundaryish, w: Boundaryish) -> float:
    d = visual_distance
    return d(x, z) * d(y, w) / (d(x, w) * d(y, z))


def _contains(a: BoundaryPoint, u) -> bool:
    if isinstance(u, Cylinder):
        return a.prefix(u.depth) == u.prefix
    return gromov_product(a, u) == math.inf


def d_a_distance(a: BoundaryPoint, u: Cylinder | BoundaryPoint, v: Cylinder | BoundaryPoint) -> float:
    for x in (u, v):
        if _contains(a, x):
            raise ContainsBasepoint(f"{x} contains {a}")
    return visual_distance(u, v) / (visual_distance(u, a) * visual_distance(v, a))


def random_word(rng: np.random.Generator, m: int, length: int) -> str:
    letters = alphabet(m)
    w = ""
    for _ in range(length):
        opts = [x for x in letters if not (w and x == inverse_letter(w[-1]))]
        w += opts[rng.integers(len(opts))]
    return w


def random_point(rng: np.random.Generator, m: int, head_len: int = 4, period_len: int = 2) -> BoundaryPoint:
    while True:
        head = random_word(rng, m, head_len)
        per = random_word(rng, m, period_len)
        try:
            return BoundaryPoint(head, per)
        except ParamError:
            continue


def canonical_class(word: str) -> str:
    """Representative of ``word`` under signed permutations of the generators.

    Such relabelings are tree automorphisms fixing the root, so every quantity
    built from d and nu takes the same value on a whole class.
    """
    rename: dict[str, str] = {}
    nxt = 0
    out = []
    for x in word:
        base = x.lower()
        if base not in rename:
            g = "abcdefghijklmnopqrstuvwxyz"[nxt]
            nxt += 1
            rename[base] = g if x.islower() else g.upper()
        y = rename[base]
        out.append(y if x.islower() else inverse_letter(y))
    return "".join(out)


def ball(m: int, radius: int) -> list[str]:
    """All reduced words of length at most ``radius``, shortest first."""
    return [w for n in range(radius + 1) for w in words_at_depth(m, n)]
