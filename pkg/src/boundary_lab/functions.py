"""Locally constant functions on Z and Z_a and their norms.

Two representations are used:

* ``CylinderFunction``: one coefficient per depth-n cylinder (the space LC_n).
* ``ShellFunction``: values on the cells of a ``Partition``, i.e. a finite
  family of cylinders and of shells around a marked point a, together with a
  tail C_{a|M} on which the function is a finite sum of radial profiles
  c * d(a, .)^w.  Sums over the tail are geometric and are evaluated in
  closed form when p = 2; otherwise they are truncated with an explicit bound.

A shell of level j is the set of points whose common prefix with a has
length exactly j - 1; on it d(a, .) = e^{-(j-1)}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .boundary import (
    BoundaryPoint,
    alphabet,
    common_prefix,
    count_cylinders,
    dimension,
    inverse_letter,
    product_matrix,
    words_at_depth,
)
from .errors import ContainsBasepoint, ParamError, TailDivergence

# ---------------------------------------------------------------- cylinders


@dataclass
class CylinderFunction:
    m: int
    depth: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (count_cylinders(self.m, self.depth),):
            raise ParamError(
                f"expected {count_cylinders(self.m, self.depth)} coefficients at depth {self.depth}"
            )

    @classmethod
    def constant(cls, m: int, depth: int, value: complex = 1.0) -> "CylinderFunction":
        return cls(m, depth, np.full(count_cylinders(m, depth), value, dtype=complex))

    @classmethod
    def indicator(cls, m: int, depth: int, prefix: str) -> "CylinderFunction":
        words = words_at_depth(m, depth)
        return cls(m, depth, np.array([1.0 if w.startswith(prefix) else 0.0 for w in words]))

    @property
    def measure(self) -> float:
        return 1.0 / count_cylinders(self.m, self.depth)

    def refine(self, n: int) -> "CylinderFunction":
        if n < self.depth:
            raise ParamError(f"cannot refine depth {self.depth} to {n}")
        if n == self.depth:
            return self
        k = 2 * self.m
        return CylinderFunction(self.m, n, np.repeat(self.coeffs, (k - 1) ** (n - self.depth)))

    def coarsen(self, n: int) -> "CylinderFunction":
        """Average down to depth n (conditional expectation)."""
        k = 2 * self.m
        r = (k - 1) ** (self.depth - n)
        return CylinderFunction(self.m, n, self.coeffs.reshape(-1, r).mean(axis=1))

    def evaluate(self, xi: BoundaryPoint) -> complex:
        from .boundary import word_index

        return self.coeffs[word_index(self.m, self.depth)[xi.prefix(self.depth)]]


def lp_norm(f: CylinderFunction, p: float) -> float:
    if p < 1:
        raise ParamError("p must be >= 1")
    return float((np.sum(np.abs(f.coeffs) ** p) * f.measure) ** (1.0 / p))


def _lorentz(values: np.ndarray, measures: np.ndarray, p: float, q: float, form: str) -> float:
    v = np.abs(np.asarray(values))
    w = np.asarray(measures, dtype=float)
    order = np.argsort(-v, kind="stable")
    v, w = v[order], w[order]
    keep = v > 0
    v, w = v[keep], w[keep]
    if v.size == 0:
        return 0.0
    t = np.cumsum(w)
    if math.isinf(q):
        return float(np.max(v * t ** (1.0 / p)))
    if form == "rearrangement":
        t_prev = np.concatenate(([0.0], t[:-1]))
        total = np.sum(v**q * (p / q) * (t ** (q / p) - t_prev ** (q / p)))
    elif form == "distribution":
        v_next = np.concatenate((v[1:], [0.0]))
        total = (p / q) * np.sum(t ** (q / p) * (v**q - v_next**q))
    else:
        raise ParamError(f"unknown Lorentz form {form!r}")
    return float(total ** (1.0 / q))


def lorentz_norm(f: CylinderFunction, p: float, q: float, form: str = "rearrangement") -> float:
    """Exact L(p,q) norm of a simple function.

    ``form="rearrangement"`` integrates t^{1/p} f*(t) in L^q(dt/t);
    ``form="distribution"`` uses p^{1/q} || s nu(|f|>s)^{1/p} ||_{L^q(ds/s)}.
    """
    if not (1 <= p < math.inf and q >= 1):
        raise ParamError("need 1 <= p < inf and q >= 1")
    return _lorentz(f.coeffs, np.full(f.coeffs.size, f.measure), p, q, form)


def lorentz_norm_values(values, measures, p: float, q: float, form: str = "rearrangement") -> float:
    return _lorentz(values, measures, p, q, form)


def _pair_weights(m: int, depth: int, exponent: float) -> np.ndarray:
    nu = 1.0 / count_cylinders(m, depth)
    W = np.exp(exponent * product_matrix(m, depth)) * nu * nu
    np.fill_diagonal(W, 0.0)
    return W


def gagliardo_energy(f: CylinderFunction, s: float, p: float) -> float:
    """[f]_{s,p}^p as an exact finite pair sum."""
    D = dimension(f.m)
    W = _pair_weights(f.m, f.depth, D + s * p)
    diff = np.abs(f.coeffs[:, None] - f.coeffs[None, :]) ** p
    return float(np.sum(diff * W))


def gagliardo_seminorm(f: CylinderFunction, s: float, p: float) -> float:
    return gagliardo_energy(f, s, p) ** (1.0 / p)


def gagliardo_bilinear(f: CylinderFunction, g: CylinderFunction, s: float) -> complex:
    """Sesquilinear p = 2 form whose diagonal is [f]_{s,2}^2."""
    if f.depth != g.depth:
        n = max(f.depth, g.depth)
        f, g = f.refine(n), g.refine(n)
    D = dimension(f.m)
    W = _pair_weights(f.m, f.depth, D + 2 * s)
    df = f.coeffs[:, None] - f.coeffs[None, :]
    dg = g.coeffs[:, None] - g.coeffs[None, :]
    return complex(np.sum(df * np.conj(dg) * W))


def sobolev_norm(f: CylinderFunction, s: float, p: float) -> float:
    if s * p >= dimension(f.m):
        raise ParamError(f"sobolev norm needs s*p < D (s*p = {s * p:.4g})")
    return (lp_norm(f, p) ** p + gagliardo_energy(f, s, p)) ** (1.0 / p)


def sobolev_gram(m: int, depth: int, s: float) -> np.ndarray:
    """Gram matrix of ||.|W^{s,2}||^2 on LC_depth (coefficient basis)."""
    D = dimension(m)
    W = _pair_weights(m, depth, D + 2 * s)
    nu = 1.0 / count_cylinders(m, depth)
    G = 2.0 * (np.diag(W.sum(axis=1)) - W)
    G[np.diag_indices_from(G)] += nu
    return G


def sobolev_ratio(f: CylinderFunction, s: float, p: float) -> tuple[float, float, float]:
    """(lhs, rhs, lhs/rhs) for the fractional Sobolev inequality with nu(Z) = 1."""
    D = dimension(f.m)
    if s * p >= D:
        raise ParamError("need s*p < D")
    pstar = p * D / (D - s * p)
    lhs = lorentz_norm(f, pstar, p) ** p
    rhs = lp_norm(f, p) ** p + gagliardo_energy(f, s, p)
    return lhs, rhs, lhs / rhs if rhs > 0 else math.nan


def random_functions(rng: np.random.Generator, m: int, depth: int, count: int) -> list[CylinderFunction]:
    """Mixed ensemble: cylinder indicators at every depth, then Gaussian and coarse Gaussian fields."""
    out: list[CylinderFunction] = []
    for j in range(1, depth + 1):
        w = words_at_depth(m, j)[rng.integers(count_cylinders(m, j))]
        out.append(CylinderFunction.indicator(m, depth, w))
    while len(out) < count:
        kind = len(out) % 3
        if kind == 0:
            j = int(rng.integers(1, depth + 1))
            n = count_cylinders(m, j)
            c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            out.append(CylinderFunction(m, j, c).refine(depth))
        elif kind == 1:
            n = count_cylinders(m, depth)
            out.append(CylinderFunction(m, depth, rng.standard_normal(n) + 1j * rng.standard_normal(n)))
        else:
            j = int(rng.integers(1, depth + 1))
            words = words_at_depth(m, j)
            picks = rng.choice(len(words), size=min(3, len(words)), replace=False)
            f = sum(
                (CylinderFunction.indicator(m, depth, words[i]).coeffs * rng.standard_normal() for i in picks),
                np.zeros(count_cylinders(m, depth)),
            )
            out.append(CylinderFunction(m, depth, f))
    return out[:count]


# ------------------------------------------------------------ ball lemmas


def ball_integral(m: int, alpha: float, j: int) -> float:
    """Integral of d^{-alpha}(xi, .) over the open ball of radius e^{-j} around xi."""
    D = dimension(m)
    if not 0 < alpha < D:
        raise ParamError("need 0 < alpha < D")
    k = 2 * m
    kappa = (k - 2) / k
    return kappa * math.exp((alpha - D) * (j + 1)) / (1 - math.exp(alpha - D))


def complement_integral(m: int, alpha: float, j: int) -> float:
    """Integral of d^{-(D+alpha)}(xi, .) outside the open ball of radius e^{-j}."""
    D = dimension(m)
    k = 2 * m
    kappa = (k - 2) / k
    total = (k - 1) / k
    for level in range(1, j + 1):
        total += kappa * math.exp(-D * level) * math.exp((D + alpha) * level)
    return total


def ball_lemma_ratios(m: int, alpha: float, radii: Sequence[int]) -> dict[str, list[float]]:
    D = dimension(m)
    k = 2 * m
    small, large = [], []
    for j in radii:
        r = math.exp(-j)
        small.append(ball_integral(m, alpha, j) / (alpha / (D - alpha) * r ** (D - alpha)))
        nu_ball = 1.0 / (k * (k - 1) ** j)
        large.append((complement_integral(m, alpha, j) + 1.0) / nu_ball ** (-alpha / D))
    return {"ball": small, "complement": large}


# ------------------------------------------------------------- partitions


@dataclass(frozen=True)
class Shell:
    """Points whose common prefix with the basepoint has length level - 1."""

    level: int

    def __str__(self):
        return f"S{self.level}"


@dataclass(frozen=True)
class NormReport:
    value: float
    truncation_error_bound: float
    depth_used: int


_PAD, _MARK = -2, -1


class Partition:
    """Disjoint cells covering Z, optionally minus a tail C_{a|M} around a."""

    def __init__(self, m: int, cells: Sequence, a: BoundaryPoint | None = None, M: int | None = None,
                 check: bool = True):
        self.m = m
        self.cells = tuple(cells)
        self.a = a
        self.M = M
        if (a is None) != (M is None):
            raise ParamError("basepoint and tail level go together")
        if M is not None and M < 1:
            raise ParamError("tail level must be >= 1")
        self.k = 2 * m
        self.D = dimension(m)
        self.kappa = (self.k - 2) / self.k
        self._build(check)

    @classmethod
    def cylinders(cls, m: int, depth: int) -> "Partition":
        return cls(m, words_at_depth(m, depth), check=False)

    @classmethod
    def adapted(cls, m: int, depth: int, a: BoundaryPoint, M: int) -> "Partition":
        """Depth-n cylinders away from a, shells n+1..M, tail C_{a|M}."""
        if M < depth:
            raise ParamError("truncation must be at least the depth")
        ray = a.prefix(depth)
        cells: list = [w for w in words_at_depth(m, depth) if w != ray]
        cells += [Shell(j) for j in range(depth + 1, M + 1)]
        return cls(m, cells, a, M, check=False)

    @classmethod
    def sibling_shells(cls, m: int, a: BoundaryPoint, M: int) -> "Partition":
        """Sibling cylinders of the ray of a at depths 1..M, tail C_{a|M}."""
        return cls(m, [w for j in range(1, M + 1) for w in siblings(m, a, j)], a, M, check=False)

    def _build(self, check: bool):
        letters = {x: i for i, x in enumerate(alphabet(self.m))}
        n = len(self.cells)
        lengths = np.zeros(n, dtype=np.int64)
        alpha = np.zeros(n, dtype=np.int64)
        nu = np.zeros(n)
        rows = []
        for i, c in enumerate(self.cells):
            if isinstance(c, Shell):
                if self.a is None:
                    raise ParamError("shell cells need a basepoint")
                j = c.level
                code = [letters[x] for x in self.a.prefix(j - 1)] + [_MARK]
                lengths[i] = j
                alpha[i] = j - 1
                nu[i] = (self.k - 1) / self.k if j == 1 else self.kappa / (self.k - 1) ** (j - 1)
            else:
                code = [letters[x] for x in c]
                lengths[i] = len(c)
                nu[i] = 1.0 / count_cylinders(self.m, len(c))
                if self.a is not None:
                    cp = common_prefix(c, self.a.prefix(len(c)))
                    if cp == len(c):
                        raise ContainsBasepoint(f"cell {c} contains {self.a}")
                    alpha[i] = cp
            rows.append(code)
        L = int(lengths.max()) if n else 0
        codes = np.full((n, L), _PAD, dtype=np.int64)
        for i, code in enumerate(rows):
            codes[i, : len(code)] = code
        P = np.zeros((n, n), dtype=np.int64)
        alive = np.ones((n, n), dtype=bool)
        for col in range(L):
            alive &= codes[:, col][:, None] == codes[:, col][None, :]
            P += alive
        self.lengths, self.alpha, self.nu, self.P = lengths, alpha, nu, P
        if not check:
            return
        off = ~np.eye(n, dtype=bool)
        shortest = np.minimum(lengths[:, None], lengths[None, :])
        if np.any((P >= shortest) & off):
            raise ParamError("partition cells overlap")
        if self.a is not None:
            if np.any(alpha >= self.M):
                raise ParamError("a cell lies inside the tail")
            shells = {c.level for c in self.cells if isinstance(c, Shell)}
            for c, al in zip(self.cells, alpha):
                if not isinstance(c, Shell) and (al + 1) in shells:
                    raise ParamError(f"cell {c} lies inside shell S{al + 1}")
        total = nu.sum() + self.tail_measure
        if abs(total - 1.0) > 1e-9:
            raise ParamError(f"cells do not cover Z (total measure {total})")

    @property
    def tail_measure(self) -> float:
        return 0.0 if self.M is None else 1.0 / count_cylinders(self.m, self.M)

    def __len__(self):
        return len(self.cells)

    def representatives(self, tail_levels: Sequence[int] = (1, 3, 8)) -> list[BoundaryPoint]:
        """One point per cell plus a few points deep in the tail."""
        pts = [cell_point(self.m, c, self.a) for c in self.cells]
        if self.a is not None:
            pts += [cell_point(self.m, Shell(self.M + j), self.a) for j in tail_levels]
        return pts

    def locate(self, xi: BoundaryPoint):
        """Cell index of xi, or ('tail', level) when xi lies in the tail."""
        if self.a is not None:
            from .boundary import gromov_product

            g = gromov_product(xi, self.a)
            if g == math.inf:
                raise ContainsBasepoint("cannot evaluate at the basepoint")
            g = int(g)
            if g >= self.M:
                return ("tail", g + 1)
        index = self._index
        for L in self._cyl_lengths:
            hit = index.get(xi.prefix(L))
            if hit is not None:
                return hit
        return index[Shell(g + 1)]

    @cached_property
    def _index(self):
        return {c: i for i, c in enumerate(self.cells)}

    @cached_property
    def _cyl_lengths(self):
        return sorted({len(c) for c in self.cells if not isinstance(c, Shell)})


def siblings(m: int, a: BoundaryPoint, j: int) -> list[str]:
    """Depth-j cylinders that branch off the ray of a at level j."""
    head = a.prefix(j - 1)
    on_ray = a.letter(j - 1)
    bad = inverse_letter(head[-1]) if head else None
    return [head + x for x in alphabet(m) if x != on_ray and x != bad]


def cell_point(m: int, cell, a: BoundaryPoint | None) -> BoundaryPoint:
    if isinstance(cell, Shell):
        w = siblings(m, a, cell.level)[0]
    else:
        w = cell
    last = w[-1]
    for x in alphabet(m):
        if x != inverse_letter(last):
            pt = BoundaryPoint(w, x)
            if a is None or pt != a:
                return pt
    raise AssertionError("unreachable")


@dataclass
class ShellFunction:
    """Function constant on partition cells, radial profiles on the tail.

    On the tail C_{a|M} the value at a point of shell level j > M is
    sum_t c_t * exp(-(j-1) * w_t), i.e. sum_t c_t d(a, .)^{w_t}.
    """

    partition: Partition
    values: np.ndarray
    tails: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (len(self.partition),):
            raise ParamError("one value per cell expected")
        self.tails = tuple((complex(c), complex(w)) for c, w in self.tails if c != 0)
        if self.tails and self.partition.a is None:
            raise ParamError("tail terms need a basepoint")

    @property
    def a(self):
        return self.partition.a

    @property
    def M(self):
        return self.partition.M

    def tail_value(self, level: int) -> complex:
        return sum((c * np.exp(-(level - 1) * w) for c, w in self.tails), 0j)

    def evaluate(self, xi: BoundaryPoint) -> complex:
        hit = self.partition.locate(xi)
        if isinstance(hit, tuple):
            return complex(self.tail_value(hit[1]))
        return complex(self.values[hit])

    def scale(self, c: complex) -> "ShellFunction":
        return ShellFunction(self.partition, self.values * c, tuple((c * x, w) for x, w in self.tails))

    @property
    def tail_is_zero(self) -> bool:
        return not self.tails


def from_cylinder_function(f: CylinderFunction) -> ShellFunction:
    return ShellFunction(Partition.cylinders(f.m, f.depth), f.coeffs)


# ------------------------------------------------- pair sums on partitions


class _Geometry:
    """Weights of the double integral for kernel exponent A.

    On Z the kernel is d^{-A}; on Z_a it is d_a^{-A} and the measure is nu_a.
    The pair weight of two cells is nu_X nu_Y exp(A P + B (alpha_X + alpha_Y)).
    """

    def __init__(self, part: Partition, A: float, bundle: bool):
        if bundle and part.a is None:
            raise ParamError("bundle geometry needs a basepoint")
        D = part.D
        self.part = part
        self.A = A
        self.B = 2 * D - A if bundle else 0.0
        self.E = 2 * D if bundle else 0.0
        self.b = self.B - D
        self.ap = A + self.B - D
        al = part.alpha.astype(float)
        with np.errstate(over="raise"):
            self.W = np.outer(part.nu, part.nu) * np.exp(A * part.P + self.B * (al[:, None] + al[None, :]))
        np.fill_diagonal(self.W, 0.0)
        self.mu = part.nu * np.exp(self.E * al)
        self.wx = part.nu * np.exp((A + self.B) * al)

    @property
    def has_tail(self):
        return self.part.M is not None

    def R(self, lam: complex) -> complex:
        """kappa * sum_{j>M} exp((j-1)(b - lam))."""
        x = self.b - lam
        if x.real >= 0:
            raise TailDivergence(f"tail series with exponent {x:.4g} diverges")
        M = self.part.M
        return self.part.kappa * np.exp(M * x) / (1 - np.exp(x))

    def G2(self, mu: complex, lam: complex) -> complex:
        """sum_{M<i<j} exp((i-1) mu + (j-1) lam)."""
        if lam.real >= 0 or (mu + lam).real >= 0:
            raise TailDivergence("double tail series diverges")
        M = self.part.M
        return np.exp(lam) / (1 - np.exp(lam)) * np.exp(M * (mu + lam)) / (1 - np.exp(mu + lam))

    def Q(self, u: complex, v: complex) -> complex:
        if u == 0 or v == 0:
            return 0j
        vb = np.conj(v)
        ap, b = self.ap, self.b
        return self.part.kappa**2 * (
            self.G2(ap - u - vb, b) + self.G2(ap, b - u - vb) - self.G2(ap - u, b - vb) - self.G2(ap - vb, b - u)
        )

    def shell_measure_sum(self, lam: complex) -> complex:
        """kappa * sum_{j>M} exp((j-1)(E - D - lam)): tail measure against a profile."""
        x = self.E - self.part.D - lam
        if x.real >= 0:
            raise TailDivergence("tail L2 series diverges")
        return self.part.kappa * np.exp(self.part.M * x) / (1 - np.exp(x))


def form_gram(part: Partition, A: float, bundle: bool, tail_exps: Sequence[complex] = ()) -> np.ndarray:
    """Hermitian H with E(f, g) = g^* H f over the basis [cells, tail profiles].

    E(f, g) is the full double integral of (f(x)-f(y)) conj(g(x)-g(y)) against
    the kernel of exponent A (no factor 1/2).
    """
    geo = _Geometry(part, A, bundle)
    n, T = len(part), len(tail_exps)
    H = np.zeros((n + T, n + T), dtype=complex)
    deg = geo.W.sum(axis=1)
    if geo.has_tail:
        deg = deg + geo.wx * geo.R(0j).real
    H[:n, :n] = 2.0 * (np.diag(deg) - geo.W)
    if T:
        wsum = geo.wx.sum()
        for t, u in enumerate(tail_exps):
            col = -2.0 * geo.wx * geo.R(complex(u))
            H[:n, n + t] = col
            H[n + t, :n] = np.conj(col)
        for t, u in enumerate(tail_exps):
            for r, v in enumerate(tail_exps):
                u_, v_ = complex(u), complex(v)
                H[n + r, n + t] = 2.0 * wsum * geo.R(u_ + np.conj(v_)) + 2.0 * geo.Q(u_, v_)
    return H


def l2_gram(part: Partition, bundle: bool, tail_exps: Sequence[complex] = ()) -> np.ndarray:
    geo = _Geometry(part, part.D, bundle)
    n, T = len(part), len(tail_exps)
    G = np.zeros((n + T, n + T), dtype=complex)
    G[np.arange(n), np.arange(n)] = geo.mu
    for t, u in enumerate(tail_exps):
        for r, v in enumerate(tail_exps):
            G[n + r, n + t] = geo.shell_measure_sum(complex(u) + np.conj(complex(v)))
    return G


def coefficient_vector(f: ShellFunction, tail_exps: Sequence[complex]) -> np.ndarray:
    vec = np.zeros(len(f.partition) + len(tail_exps), dtype=complex)
    vec[: len(f.partition)] = f.values
    exps = [complex(w) for w in tail_exps]
    for c, w in f.tails:
        vec[len(f.partition) + exps.index(w)] += c
    return vec


def _exps(*fs: ShellFunction) -> list[complex]:
    out: list[complex] = []
    for f in fs:
        for _, w in f.tails:
            if w not in out:
                out.append(w)
    return out


def energy_form(f: ShellFunction, g: ShellFunction, s: float, bundle: bool) -> complex:
    """Exact p = 2 form E(f, g) with kernel exponent D + 2s."""
    if f.partition is not g.partition:
        raise ParamError("functions must share a partition")
    exps = _exps(f, g)
    H = form_gram(f.partition, f.partition.D + 2 * s, bundle, exps)
    return complex(np.conj(coefficient_vector(g, exps)) @ H @ coefficient_vector(f, exps))


def l2_inner(f: ShellFunction, g: ShellFunction, bundle: bool) -> complex:
    exps = _exps(f, g)
    G = l2_gram(f.partition, bundle, exps)
    return complex(np.conj(coefficient_vector(g, exps)) @ G @ coefficient_vector(f, exps))


def _profile_bound(f: ShellFunction, level: int) -> tuple[complex, float, float]:
    """Constant part of the tail, and (C, r) with |rest| <= C e^{-level r} beyond level."""
    const = sum((c for c, w in f.tails if w == 0), 0j)
    moving = [(c, w) for c, w in f.tails if w != 0]
    if not moving:
        return const, 0.0, math.inf
    r = min(w.real for _, w in moving)
    if r <= 0:
        raise TailDivergence("growing tail profiles have no truncation bound")
    return const, float(sum(abs(c) for c, _ in moving)), r


def seminorm_report(f: ShellFunction, s: float, p: float, bundle: bool, tol: float = 1e-13,
                    max_extra: int = 20000) -> NormReport:
    """[f]_{s,p}^p on Z (bundle=False) or on Z_a with d_a, nu_a (bundle=True)."""
    part = f.partition
    if s * p >= part.D and part.M is not None:
        raise TailDivergence("the tail kernel mass diverges when s*p >= D")
    if p == 2:
        val = energy_form(f, f, s, bundle).real
        depth = int(part.lengths.max()) if len(part) else 0
        return NormReport(max(val, 0.0), 0.0, depth)
    geo = _Geometry(part, part.D + s * p, bundle)
    v = f.values
    total = float(np.sum(np.abs(v[:, None] - v[None, :]) ** p * geo.W))
    if part.M is None:
        return NormReport(total, 0.0, int(part.lengths.max()))
    M, kappa, b, ap = part.M, part.kappa, geo.b, geo.ap
    const, C, r = _profile_bound(f, M)
    if C == 0.0:
        total += 2.0 * float(np.sum(geo.wx * np.abs(v - const) ** p)) * geo.R(0j).real
        return NormReport(total, 0.0, M)
    J = M + 40
    while True:
        levels = np.arange(M + 1, J + 1)
        tv = np.array([f.tail_value(j) for j in levels])
        rho = kappa * np.exp(b * (levels - 1))
        cross = 2.0 * np.sum(geo.wx[:, None] * np.abs(v[:, None] - tv[None, :]) ** p * rho[None, :])
        ii, jj = np.triu_indices(levels.size, 1)
        sig = kappa**2 * np.exp(ap * (levels[ii] - 1) + b * (levels[jj] - 1))
        inner = 2.0 * np.sum(np.abs(tv[ii] - tv[jj]) ** p * sig)
        value = total + float(cross + inner)
        VJ = abs(const) + C * math.exp(-J * r)
        tail_rho = kappa * math.exp(b * J) / (1 - math.exp(b))
        bound = 2.0 * float(np.sum(geo.wx * (np.abs(v) + VJ) ** p)) * tail_rho
        lead = 2 ** (p + 1) * C**p * kappa**2 / (1 - math.exp(b))
        x = ap - p * r
        part_a = sum(math.exp((i - 1) * x) for i in range(M + 1, J + 1)) * math.exp(J * b)
        if x + b >= 0:
            raise TailDivergence("tail profile decays too slowly for this seminorm")
        part_b = math.exp(b) * math.exp(J * (x + b)) / (1 - math.exp(x + b))
        bound += lead * (part_a + part_b)
        if bound <= tol * max(value, 1e-300) or J - M >= max_extra:
            return NormReport(value, bound, J)
        J = M + 2 * (J - M)


def lp_report(f: ShellFunction, p: float, bundle: bool, tol: float = 1e-13) -> NormReport:
    """||f||_p^p against nu (bundle=False) or nu_a (bundle=True)."""
    part = f.partition
    geo = _Geometry(part, part.D, bundle)
    total = float(np.sum(np.abs(f.values) ** p * geo.mu))
    if part.M is None or not f.tails:
        return NormReport(total, 0.0, part.M or int(part.lengths.max()))
    if p == 2:
        return NormReport(total + l2_inner(
            ShellFunction(part, np.zeros(len(part)), f.tails),
            ShellFunction(part, np.zeros(len(part)), f.tails), bundle).real, 0.0, part.M)
    const, C, r = _profile_bound(f, part.M)
    x = geo.E - part.D
    if const != 0 and x >= 0:
        raise TailDivergence("constant tail has infinite measure")
    M, J = part.M, part.M + 40
    while True:
        levels = np.arange(M + 1, J + 1)
        tv = np.array([f.tail_value(j) for j in levels])
        val = total + float(np.sum(np.abs(tv) ** p * part.kappa * np.exp(x * (levels - 1))))
        y = x - p * r if const == 0 else x
        if y >= 0:
            raise TailDivergence("tail L^p series diverges")
        VJ = abs(const) + C * math.exp(-J * r)
        if const == 0:
            bound = part.kappa * C**p * math.exp(J * y) / (1 - math.exp(y))
        else:
            bound = part.kappa * VJ**p * math.exp(J * x) / (1 - math.exp(x))
        if bound <= tol * max(val, 1e-300) or J - M > 20000:
            return NormReport(val, bound, J)
        J = M + 2 * (J - M)


def laplacian_apply(f: ShellFunction, s: float, bundle: bool) -> ShellFunction:
    """Pointwise fractional Laplacian, -int (f(y) - f(x)) K(x, y) dmu(y).

    Needs f to vanish on the tail; the result carries a radial tail profile.
    """
    part = f.partition
    geo = _Geometry(part, part.D + 2 * s, bundle)
    v = f.values
    flux = geo.W @ np.ones(len(part)) * v - geo.W @ v
    tails: tuple = ()
    if part.M is not None:
        flux = flux + geo.wx * geo.R(0j).real * v
        al = part.alpha.astype(float)
        coef = -np.sum(v * geo.mu * np.exp((geo.A + geo.B - geo.E) * al))
        tails = ((coef, complex(geo.E - geo.B)),)
    return ShellFunction(part, flux / geo.mu, tails)
