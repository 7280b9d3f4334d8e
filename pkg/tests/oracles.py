"""Slow reference computations that share no code path with the library kernels."""
from __future__ import annotations

import itertools
import math

import numpy as np

from boundary_lab.boundary import BoundaryPoint, inverse_letter

LETTERS = "abAB"
D = math.log(3)


def words(n: int) -> list[str]:
    out = [""]
    for _ in range(n):
        out = [w + x for w in out for x in LETTERS if not w or x != inverse_letter(w[-1])]
    return out


def prefix_len(u: str, v: str) -> int:
    i = 0
    while i < min(len(u), len(v)) and u[i] == v[i]:
        i += 1
    return i


def prefix_matrix(ws: list[str]) -> np.ndarray:
    """Common-prefix lengths of equal-length words via running equality masks."""
    codes = np.array([[ord(c) for c in w] for w in ws], dtype=np.int8)
    alive = np.ones((len(ws), len(ws)), dtype=bool)
    P = np.zeros((len(ws), len(ws)))
    for j in range(codes.shape[1]):
        alive &= codes[:, j][:, None] == codes[:, j][None, :]
        P += alive
    return P


def pair_energy(values: dict[str, complex], s: float, p: float) -> float:
    """Ordered pair sum of |f(u)-f(v)|^p d^{-(D+sp)} nu nu, d = exp(-prefix)."""
    ws = sorted(values)
    nu = 1.0 / len(ws)
    total = 0.0
    for u, v in itertools.product(ws, ws):
        if u == v:
            continue
        d = math.exp(-prefix_len(u, v))
        total += abs(values[u] - values[v]) ** p * d ** (-(D + s * p)) * nu * nu
    return total


def any_point(w: str) -> BoundaryPoint:
    x = next(x for x in LETTERS if x != inverse_letter(w[-1]))
    return BoundaryPoint(w, x)


def bundle_energy(F, a: BoundaryPoint, s: float, p: float, N: int) -> float:
    """Truncated Z_a pair sum on depth-N cylinders, dropping the cylinder around a."""
    ws = [w for w in words(N) if w != a.prefix(N)]
    nu = 1.0 / (len(ws) + 1)
    vals = np.array([F.evaluate(any_point(w)) for w in ws])
    al = np.array([prefix_len(w, a.prefix(N)) for w in ws], dtype=float)
    P = prefix_matrix(ws)
    A = D + s * p
    W = nu * nu * np.exp(A * P + (2 * D - A) * (al[:, None] + al[None, :]))
    np.fill_diagonal(W, 0.0)
    return float(np.sum(np.abs(vals[:, None] - vals[None, :]) ** p * W))


def aitken(x0: float, x1: float, x2: float) -> float:
    den = x2 - 2 * x1 + x0
    return x2 if den == 0 else x2 - (x2 - x1) ** 2 / den


def richardson(values, rates, depths) -> float:
    """Limit L of values_N = L - sum_i c_i r_i^N with known rates r_i."""
    A = np.array([[1.0] + [-r**N for r in rates] for N in depths])
    return float(np.linalg.solve(A, np.asarray(values, dtype=float))[0])


def geometric_control_pairs(a: BoundaryPoint, eta: BoundaryPoint, h: int, sigma: float, s: float,
                            p: float, kind: int, N: int) -> float:
    """Depth-N Riemann sum of the normalized control integrals, t = 0."""
    an, en = a.prefix(N), eta.prefix(N)
    nu = 1.0 / (4 * 3 ** (N - 1))
    total = 0.0
    for w in words(N):
        if w in (an, en):
            continue
        ja, je = prefix_len(w, an), prefix_len(w, en)
        if kind == 1:
            r = math.exp(ja - h)
            total += abs(1 - r**sigma) ** p * math.exp((D + s * p) * je) * nu
        else:
            r = math.exp(h - ja)
            da = math.exp(-je + ja + h)
            total += abs(1 - r**sigma) ** p * da ** (-(D + s * p)) * math.exp(2 * D * ja) * nu
    return total * math.exp((-1 if kind == 1 else 1) * s * p * h)
