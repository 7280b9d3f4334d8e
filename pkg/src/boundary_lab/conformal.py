"""The Cayley bundle (Z_a, d_a, nu_a) and the operators built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boundary import (
    BoundaryPoint,
    act_on_point,
    act_on_word,
    cancellation,
    children,
    dimension,
    gromov_product,
    log_derivative,
    words_at_depth,
)
from .errors import ChartOverflow, NonzeroNearBasepoint, ParamError, TailDivergence
from .functions import (
    CylinderFunction,
    NormReport,
    Partition,
    Shell,
    ShellFunction,
    laplacian_apply,
    siblings,
)


@dataclass(frozen=True)
class BundleChart:
    a: BoundaryPoint
    M: int
    m: int = 2

    def __post_init__(self):
        if self.M < 1:
            raise ParamError("truncation depth must be >= 1")

    @property
    def D(self) -> float:
        return dimension(self.m)

    def shell_distance(self, j: int) -> float:
        """d(a, .) on the shell of level j."""
        return math.exp(-(j - 1))

    def shell_distances(self) -> np.ndarray:
        return np.exp(-np.arange(self.M + 1, dtype=float))

    def nu_a(self, cell) -> float:
        p = Partition(self.m, [cell], self.a, max(self.M, _cell_level(cell)), check=False)
        return float(p.nu[0] * math.exp(2 * self.D * p.alpha[0]))

    def partition(self, depth: int) -> Partition:
        return Partition.adapted(self.m, depth, self.a, max(self.M, depth))

    def d_a(self, u: BoundaryPoint, v: BoundaryPoint) -> float:
        return math.exp(-gromov_product(u, v) + gromov_product(u, self.a) + gromov_product(v, self.a))


def _cell_level(cell) -> int:
    return cell.level if isinstance(cell, Shell) else len(cell)


def cayley_weight(m: int, s: float, p: float, t: float) -> complex:
    """Exponent w with Omega(a) f = d(a, .)^w f."""
    if s * p >= dimension(m):
        raise ParamError("Cayley maps need s*p < D")
    return 2 * dimension(m) / p - 2 * complex(s, t)


def cayley_forward(f: CylinderFunction, chart: BundleChart, s: float, p: float, t: float = 0.0) -> ShellFunction:
    w = cayley_weight(f.m, s, p, t)
    n = f.depth
    if n > chart.M:
        raise ParamError("function depth exceeds the chart truncation")
    part = chart.partition(n)
    index = {x: i for i, x in enumerate(words_at_depth(f.m, n))}
    ray_value = f.coeffs[index[chart.a.prefix(n)]]
    vals = np.empty(len(part), dtype=complex)
    for i, c in enumerate(part.cells):
        src = ray_value if isinstance(c, Shell) else f.coeffs[index[c]]
        vals[i] = src * np.exp(-part.alpha[i] * w)
    return ShellFunction(part, vals, ((ray_value, w),))


def multiply_by_distance(F: ShellFunction, w: complex) -> ShellFunction:
    """Pointwise product with d(a, .)^w."""
    part = F.partition
    vals = F.values * np.exp(-part.alpha * w)
    return ShellFunction(part, vals, tuple((c, u + w) for c, u in F.tails))


def cayley_inverse(F: ShellFunction, chart: BundleChart, s: float, p: float, t: float = 0.0) -> ShellFunction:
    """Omega(a)^{-1}: a function on Z, still written on the chart's partition."""
    if F.a != chart.a:
        raise ParamError("function lives on a different chart")
    return multiply_by_distance(F, -cayley_weight(F.partition.m, s, p, t))


def to_cylinder_function(F: ShellFunction, depth: int, atol: float = 1e-12) -> CylinderFunction:
    """Rewrite F at depth n; raises ParamError if F is not constant on depth-n cylinders."""
    part = F.partition
    m = part.m
    if F.tails and any(w != 0 for _, w in F.tails):
        raise ParamError("radial tail is not locally constant")
    words = words_at_depth(m, depth)
    index = {x: i for i, x in enumerate(words)}
    out = np.full(len(words), np.nan + 0j)

    def put(prefix: str, value: complex):
        if len(prefix) >= depth:
            targets = [index[prefix[:depth]]]
        else:
            targets = [i for i, x in enumerate(words) if x.startswith(prefix)]
        for i in targets:
            if np.isnan(out[i].real):
                out[i] = value
            elif abs(out[i] - value) > atol * max(1.0, abs(value)):
                raise ParamError(f"not constant on the depth-{depth} cylinder {words[i]}")

    for c, v in zip(part.cells, F.values):
        if isinstance(c, Shell):
            for sib in siblings(m, F.a, c.level):
                put(sib, v)
        else:
            put(c, v)
    if part.M is not None:
        put(F.a.prefix(part.M), sum((c for c, _ in F.tails), 0j))
    return CylinderFunction(m, depth, out)


# ---------------------------------------------------------- group action


def _split_shell(m: int, a: BoundaryPoint, level: int) -> list[str]:
    return siblings(m, a, level)


@dataclass
class Transport:
    """Refined source cells, their images under g and where each came from.

    ``origin[i]`` is the index of the source cell containing refined cell i,
    or ``-level`` when the refined cell was split off the tail at that level.
    """

    g: str
    source: Partition
    target: Partition
    origin: np.ndarray
    logder: np.ndarray
    shift: int


def transport(g: str, part: Partition) -> Transport:
    """Refine ``part`` until g acts cell by cell, then map every cell."""
    m = part.m
    a = part.a
    c = cancellation(g, a.prefix(len(g))) if a is not None else None
    cells: list = []
    origin: list[int] = []

    def add_cylinder(w: str, src: int):
        if w and cancellation(g, w) < len(w):
            cells.append(w)
            origin.append(src)
        else:
            for ch in children(w, m):
                add_cylinder(ch, src)

    for i, cell in enumerate(part.cells):
        if isinstance(cell, Shell):
            if cell.level - 1 > c:
                cells.append(cell)
                origin.append(i)
            else:
                for w in siblings(m, a, cell.level):
                    add_cylinder(w, i)
        else:
            add_cylinder(cell, i)
    M = part.M
    if a is not None:
        while M <= c:
            for w in siblings(m, a, M + 1):
                add_cylinder(w, -(M + 1))
            M += 1
    src_part = Partition(m, cells, a, M, check=False)
    delta = len(g) - 2 * c if a is not None else 0
    ga = act_on_point(g, a) if a is not None else None
    img, logder = [], []
    for cell in cells:
        if isinstance(cell, Shell):
            img.append(Shell(cell.level + delta))
            logder.append(-delta)
        else:
            img.append(act_on_word(g, cell))
            logder.append(log_derivative(g, cell))
    target = Partition(m, img, ga, None if M is None else M + delta, check=False)
    return Transport(g, src_part, target, np.array(origin), np.array(logder), delta)


def _source_values(T: Transport, F: ShellFunction) -> np.ndarray:
    vals = np.empty(len(T.origin), dtype=complex)
    for i, o in enumerate(T.origin):
        vals[i] = F.values[o] if o >= 0 else F.tail_value(-o)
    return vals


def push(g: str, F: ShellFunction) -> ShellFunction:
    """g_* F = F o g^{-1}, written on the image partition around g a."""
    T = transport(g, F.partition)
    tails = tuple((c * np.exp(T.shift * w), w) for c, w in F.tails)
    return ShellFunction(T.target, _source_values(T, F), tails)


def derivative_at_basepoint(g: str, a: BoundaryPoint) -> float:
    """|g'|(a)."""
    c = cancellation(g, a.prefix(len(g)))
    return math.exp(2 * c - len(g))


def rep_Pi_bundle(g: str, F: ShellFunction, s: float, p: float, t: float = 0.0,
                  max_level: int | None = None) -> ShellFunction:
    """Pi(g; a) F = |g'|^{D/p - z}(a) (F o g^{-1}) on the chart around g a."""
    if F.a is None:
        raise ParamError("bundle representation needs a basepoint")
    G = push(g, F)
    if max_level is not None and G.M is not None and G.M > max_level:
        raise ChartOverflow(f"translated tail level {G.M} exceeds {max_level}")
    D = dimension(F.partition.m)
    logd = math.log(derivative_at_basepoint(g, F.a))
    return G.scale(np.exp(logd * (D / p - complex(s, t))))


def laplacian_a_apply(F: ShellFunction, chart: BundleChart | None, s: float) -> ShellFunction:
    if F.a is None or (chart is not None and F.a != chart.a):
        raise ParamError("function must live on the chart")
    if F.tails:
        raise NonzeroNearBasepoint("the bundle Laplacian needs f = 0 on the tail")
    return laplacian_apply(F, s, bundle=True)


# ---------------------------------------------------------- rebasing


def rebase(F: ShellFunction, b: BoundaryPoint, M: int) -> ShellFunction:
    """Rewrite a function with constant tail on the partition adapted to b."""
    part = F.partition
    m = part.m
    if any(w != 0 for _, w in F.tails):
        raise ParamError("only constant tails can be rebased")
    cells: list = []
    vals: list = []
    for c, v in zip(part.cells, F.values):
        if isinstance(c, Shell):
            for w in siblings(m, part.a, c.level):
                cells.append(w)
                vals.append(v)
        else:
            cells.append(c)
            vals.append(v)
    if part.M is not None:
        cells.append(part.a.prefix(part.M))
        vals.append(sum((c for c, _ in F.tails), 0j))
    out_cells: list = []
    out_vals: list = []
    tail = None
    top = M
    for c, v in zip(cells, vals):
        if b.prefix(len(c)) == c:
            top = max(M, len(c))
            out_cells += [Shell(j) for j in range(len(c) + 1, top + 1)]
            out_vals += [v] * (top - len(c))
            tail = v
        else:
            out_cells.append(c)
            out_vals.append(v)
    return ShellFunction(Partition(m, out_cells, b, top, check=False), out_vals, ((tail, 0),))


def cayley_cocycle(b: BundleChart, a: BundleChart, F: ShellFunction, s: float, p: float,
                   t: float = 0.0) -> ShellFunction:
    """c(b, a) F = Omega(b) Omega(a)^{-1} F."""
    w = cayley_weight(F.partition.m, s, p, t)
    G = cayley_inverse(F, a, s, p, t)
    if any(abs(u) > 1e-14 for _, u in G.tails):
        raise ParamError("cocycle needs a tail profile matching the Cayley weight")
    G = ShellFunction(G.partition, G.values, tuple((c, 0) for c, _ in G.tails))
    return multiply_by_distance(rebase(G, b.a, b.M), w)


def compare(F: ShellFunction, G: ShellFunction, extra: Sequence = ()) -> float:
    """Max |F - G| over representative points of both partitions."""
    pts = list(F.partition.representatives()) + list(G.partition.representatives()) + list(extra)
    worst = 0.0
    for x in pts:
        if any(b is not None and gromov_product(x, b) == math.inf for b in (F.a, G.a)):
            continue
        worst = max(worst, abs(F.evaluate(x) - G.evaluate(x)))
    return worst


# ------------------------------------------------------ geometric control


def geometric_control(m: int, h: int, sigma: float, t: float, s: float, p: float, kind: int,
                      tol: float = 1e-14) -> NormReport:
    """Normalized geometric-control integral for a pair (a, eta) with <a, eta> = h.

    kind=1: integral over Z of |1 - (d(a,eta)/d(a,xi))^z|^p d^{-(D+sp)}(xi,eta),
            multiplied by d^{sp}(a, eta).
    kind=2: integral over Z_a of |1 - (d(a,xi)/d(a,eta))^z|^p d_a^{-(D+sp)}(xi,eta) dnu_a,
            multiplied by d^{-sp}(a, eta).
    Only h matters: xi branching off before level h sees ratio e^{h-i}, xi on the
    side of a sees e^{j-h}, and every other xi gives ratio 1.
    """
    D = dimension(m)
    if sigma < 0 or sigma * p >= D or s * p >= D:
        raise TailDivergence("need sigma >= 0, sigma*p < D and s*p < D")
    k = 2 * m
    kappa = (k - 2) / k
    z = complex(sigma, t)

    def level_measure(i: int) -> float:
        return (k - 1) / k if i == 0 else kappa * math.exp(-D * i)

    total = 0.0
    for i in range(h):
        if kind == 1:
            weight = level_measure(i) * math.exp((D + s * p) * i)
            total += weight * abs(1 - np.exp(-(h - i) * z)) ** p
        else:
            weight = level_measure(i) * math.exp(2 * D * i - (D + s * p) * h)
            total += weight * abs(1 - np.exp((h - i) * z)) ** p
    j = h + 1
    bound = math.inf
    while True:
        if kind == 1:
            term = kappa * math.exp(-D * j + (D + s * p) * h) * abs(1 - np.exp((j - h) * z)) ** p
            x = sigma * p - D
            bound = 2**p * kappa * math.exp((D + s * p) * h - sigma * p * h) * math.exp(x * (j + 1)) / (1 - math.exp(x))
        else:
            term = kappa * math.exp(-s * p * j) * abs(1 - np.exp(-(j - h) * z)) ** p
            bound = 2**p * kappa * math.exp(-s * p * (j + 1)) / (1 - math.exp(-s * p))
        total += term
        if bound <= tol * max(total, 1e-300) or j > h + 100000:
            break
        j += 1
    scale = math.exp(-s * p * h) if kind == 1 else math.exp(s * p * h)
    return NormReport(total * scale, bound * scale, j)
