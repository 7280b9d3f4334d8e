"""Finite matrices for the boundary representations and the nonlocal operators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .boundary import (
    BoundaryPoint,
    Params,
    count_cylinders,
    dimension,
    inverse,
    log_derivative,
    product_matrix,
    reduce,
    word_index,
    words_at_depth,
)
from .conformal import (
    BundleChart,
    cayley_weight,
    laplacian_a_apply,
    push,
    transport,
)
from .errors import DegenerateGram, ParamError, SingularMatrix, SupportTouchesTail
from .functions import (
    CylinderFunction,
    Partition,
    Shell,
    ShellFunction,
    energy_form,
    form_gram,
    l2_gram,
    l2_inner,
    sobolev_gram,
)


@dataclass
class OperatorMatrix:
    entries: np.ndarray
    dom_gram: np.ndarray
    cod_gram: np.ndarray
    dom_depth: int | None = None
    cod_depth: int | None = None
    meta: dict = field(default_factory=dict)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.entries @ x


def operator_norm_p2(A: OperatorMatrix, rtol: float = 1e-11) -> float:
    """sqrt of the top eigenvalue of the pencil (A* G_cod A, G_dom) on range(G_dom)."""
    Gd = 0.5 * (A.dom_gram + A.dom_gram.conj().T)
    M = A.entries.conj().T @ A.cod_gram @ A.entries
    M = 0.5 * (M + M.conj().T)
    lam, U = np.linalg.eigh(Gd)
    top = max(lam.max(), 0.0)
    keep = lam > rtol * top
    if not keep.all():
        N = U[:, ~keep]
        leak = np.abs(N.conj().T @ M @ N).max()
        if leak > rtol * max(1.0, np.abs(M).max()):
            raise DegenerateGram("operator does not vanish on the null space of the domain norm")
    Ur = U[:, keep] / np.sqrt(lam[keep])
    B = Ur.conj().T @ M @ Ur
    return float(math.sqrt(max(np.linalg.eigvalsh(0.5 * (B + B.conj().T))[-1], 0.0)))


@dataclass
class AscentResult:
    value: float
    trials: int
    values: list


def operator_norm_general_p(apply: Callable[[np.ndarray], np.ndarray], dom_norm: Callable, cod_norm: Callable,
                            dim: int, trials: int = 8, ascent_steps: int = 200, seed: int = 0,
                            complex_valued: bool = True) -> AscentResult:
    """Multi-start L-BFGS ascent of cod_norm(apply(x)) / dom_norm(x); a lower bound."""
    rng = np.random.default_rng(seed)
    width = 2 * dim if complex_valued else dim

    def unpack(y):
        return y[:dim] + 1j * y[dim:] if complex_valued else y

    def objective(y):
        x = unpack(y)
        dn = dom_norm(x)
        if dn <= 0:
            return 0.0
        return -cod_norm(apply(x)) / dn

    values = []
    starts = [np.eye(width)[i] for i in range(min(dim, 2))]
    starts += [rng.standard_normal(width) for _ in range(max(trials - len(starts), 0))]
    for y0 in starts[:trials]:
        res = minimize(objective, y0, method="L-BFGS-B", options={"maxiter": ascent_steps})
        values.append(float(-min(res.fun, objective(y0))))
    return AscentResult(max(values), len(values), values)


# ------------------------------------------------------ representations


def rep_pi(g: str, f: CylinderFunction, params: Params) -> CylinderFunction:
    """pi_z(g) f = |(g^{-1})'|^{D/p - z} (f o g^{-1}), exact at depth n + |g|."""
    A = rep_pi_matrix(g, f.depth, params)
    return CylinderFunction(f.m, f.depth + len(g), A @ f.coeffs)


def rep_pi_matrix(g: str, n: int, params: Params) -> np.ndarray:
    m = params.m
    gi = inverse(g)
    idx = word_index(m, n)
    cod = words_at_depth(m, n + len(g))
    expo = params.D / params.p - params.z
    A = np.zeros((len(cod), count_cylinders(m, n)), dtype=complex)
    for i, v in enumerate(cod):
        u = reduce(gi + v)[:n]
        A[i, idx[u]] = np.exp(log_derivative(gi, v) * expo)
    return A


def rep_pi_operator(g: str, n: int, params: Params) -> OperatorMatrix:
    """pi_z(g) from LC_n into the image partition, with W^{s,2} Grams on both sides."""
    m, s = params.m, params.s
    T = transport(g, Partition.cylinders(m, n))
    expo = params.D / params.p - params.z
    A = np.zeros((len(T.target), count_cylinders(m, n)), dtype=complex)
    A[np.arange(len(T.target)), T.origin] = np.exp(-T.logder * expo)
    cod = form_gram(T.target, T.target.D + 2 * s, False) + l2_gram(T.target, False)
    return OperatorMatrix(A, sobolev_gram(m, n, s), cod, n, None, {"g": g})


def rep_norm(g: str, n: int, params: Params) -> float:
    return operator_norm_p2(rep_pi_operator(g, n, params))


def cayley_operator(chart: BundleChart, n: int, s: float, t: float = 0.0) -> OperatorMatrix:
    """Omega(a): LC_n with the W^{s,2} norm into the homogeneous space on Z_a."""
    m = chart.m
    w = cayley_weight(m, s, 2.0, t)
    part = chart.partition(n)
    idx = word_index(m, n)
    ray = idx[chart.a.prefix(n)]
    A = np.zeros((len(part) + 1, count_cylinders(m, n)), dtype=complex)
    for i, c in enumerate(part.cells):
        A[i, ray if isinstance(c, Shell) else idx[c]] = np.exp(-part.alpha[i] * w)
    A[len(part), ray] = 1.0
    cod = form_gram(part, part.D + 2 * s, True, [w])
    return OperatorMatrix(A, sobolev_gram(m, n, s), cod, n, None, {"a": str(chart.a)})


def cayley_inverse_operator(chart: BundleChart, n: int, s: float, t: float = 0.0) -> OperatorMatrix:
    """Omega(a)^{-1} on functions of the adapted partition vanishing on the tail."""
    w = cayley_weight(chart.m, s, 2.0, t)
    part = chart.partition(n)
    A = np.diag(np.exp(part.alpha * w))
    dom = form_gram(part, part.D + 2 * s, True)
    cod = form_gram(part, part.D + 2 * s, False) + l2_gram(part, False)
    return OperatorMatrix(A, dom, cod, n, None, {"a": str(chart.a)})


def bundle_rep_operator(g: str, part: Partition, s: float, t: float = 0.0) -> OperatorMatrix:
    """Pi(g; a) on zero-tail functions of ``part``, homogeneous Grams on both charts."""
    from .conformal import derivative_at_basepoint

    T = transport(g, part)
    D = part.D
    scale = np.exp(math.log(derivative_at_basepoint(g, part.a)) * (D / 2 - complex(s, t)))
    A = np.zeros((len(T.target), len(part)), dtype=complex)
    rows = np.flatnonzero(T.origin >= 0)
    A[rows, T.origin[rows]] = scale
    dom = form_gram(part, D + 2 * s, True)
    cod = form_gram(T.target, D + 2 * s, True)
    return OperatorMatrix(A, dom, cod, None, None, {"g": g})


def factorization_residual(g: str, f: CylinderFunction, chart: BundleChart, params: Params) -> float:
    """Relative gap between pi_z(g) f and Omega(ga)^{-1} Pi(g;a) Omega(a) f."""
    from .conformal import cayley_forward, cayley_inverse, compare, rep_Pi_bundle

    s, p, t = params.s, params.p, params.t
    F = cayley_forward(f, chart, s, p, t)
    G = rep_Pi_bundle(g, F, s, p, t)
    ga_chart = BundleChart(G.a, max(G.M, 1), chart.m)
    H = cayley_inverse(G, ga_chart, s, p, t)
    direct = rep_pi(g, f, params)
    direct_sf = ShellFunction(Partition.cylinders(f.m, direct.depth), direct.coeffs)
    scale = max(1.0, float(np.abs(direct.coeffs).max()))
    return compare(H, direct_sf) / scale


# ---------------------------------------------------- nonlocal operators


def _kernel_measure(m: int, n: int, exponent: float) -> np.ndarray:
    nu = 1.0 / count_cylinders(m, n)
    K = np.exp(exponent * product_matrix(m, n)) * nu
    np.fill_diagonal(K, 0.0)
    return K


def laplacian_matrix(m: int, s: float, n: int) -> OperatorMatrix:
    """Pointwise fractional Laplacian on LC_n; its L^2 form is half the seminorm."""
    K = _kernel_measure(m, n, dimension(m) + 2 * s)
    L = np.diag(K.sum(axis=1)) - K
    G = np.eye(L.shape[0]) / count_cylinders(m, n)
    return OperatorMatrix(L, G, G, n, n, {"s": s})


def knapp_stein_diagonal(m: int, s: float, n: int) -> float:
    """Average of the d^{-(D-2s)} integral of a depth-n cylinder against itself."""
    D = dimension(m)
    k = 2 * m
    beta = D - 2 * s
    nu_next = 1.0 / count_cylinders(m, n + 1)
    return (k - 2) * nu_next * math.exp(beta * n) / (1 - math.exp(-2 * s))


def knapp_stein_matrix(m: int, s: float, n: int) -> OperatorMatrix:
    D = dimension(m)
    if not 0 < 2 * s < D:
        raise ParamError("Knapp-Stein kernel needs 0 < 2s < D")
    K = _kernel_measure(m, n, D - 2 * s)
    np.fill_diagonal(K, knapp_stein_diagonal(m, s, n))
    G = np.eye(K.shape[0]) / count_cylinders(m, n)
    return OperatorMatrix(K, G, G, n, n, {"s": s})


def knapp_stein_diagonal_refined(m: int, s: float, n: int, extra: int = 3) -> float:
    """Diagonal entry rebuilt from the depth n+extra matrix: an independent assembly check."""
    fine = knapp_stein_matrix(m, s, n + extra).entries
    r = (2 * m - 1) ** extra
    return float(fine[:r, :r].sum() / r)


def potential_matrix(m: int, s: float, n: int) -> OperatorMatrix:
    """(I + Delta^s)^{-1} on LC_n."""
    if not 2 * s < dimension(m):
        raise ParamError("potential kernel needs 2s < D")
    L = laplacian_matrix(m, s, n)
    try:
        J = np.linalg.solve(np.eye(L.entries.shape[0]) + L.entries, np.eye(L.entries.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    return OperatorMatrix(J, L.dom_gram, L.cod_gram, n, n, {"s": s})


def heat_matrix(m: int, s: float, th: float, n: int) -> OperatorMatrix:
    L = laplacian_matrix(m, s, n)
    lam, U = np.linalg.eigh(L.entries)
    H = (U * np.exp(-th * lam)) @ U.T
    return OperatorMatrix(H, L.dom_gram, L.cod_gram, n, n, {"s": s, "t": th})


def kernel_values(op: OperatorMatrix, m: int) -> np.ndarray:
    """k(u, v) with (T f)_u = sum_v k(u, v) f_v nu_v."""
    return op.entries * count_cylinders(m, op.dom_depth)


def potential_ratio_window(m: int, s: float, n: int) -> tuple[float, float]:
    """min and max of k(u,v) d^{D-2s}(u,v) over distinct depth-n cylinders."""
    k = kernel_values(potential_matrix(m, s, n), m)
    P = product_matrix(m, n)
    r = k * np.exp(-(dimension(m) - 2 * s) * P)
    off = ~np.eye(P.shape[0], dtype=bool)
    return float(r[off].min()), float(r[off].max())


def heat_ratio_window(m: int, s: float, n: int, times: Sequence[float]) -> tuple[float, float]:
    D = dimension(m)
    P = product_matrix(m, n)
    off = ~np.eye(P.shape[0], dtype=bool)
    lo, hi = math.inf, 0.0
    for th in times:
        p = kernel_values(heat_matrix(m, s, th, n), m)
        ref = np.full(P.shape, th ** (-D / (2 * s)))
        ref[off] = np.minimum(ref[off], th * np.exp((D + 2 * s) * P[off]))
        r = p / ref
        lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
    return lo, hi


def dual_norm_oracle(m: int, s: float, n: int, phi: np.ndarray, seed: int = 0) -> float:
    """sup <phi, f> over f with <(I + Delta) f, f> = 1, by constrained maximization."""
    L = laplacian_matrix(m, s, n)
    nu = 1.0 / count_cylinders(m, n)
    G = nu * (np.eye(len(phi)) + L.entries)
    rng = np.random.default_rng(seed)
    cons = {"type": "eq", "fun": lambda f: f @ G @ f - 1.0, "jac": lambda f: 2 * G @ f}
    best = 0.0
    for _ in range(4):
        f0 = rng.standard_normal(len(phi))
        f0 /= math.sqrt(f0 @ G @ f0)
        res = minimize(lambda f: -nu * (phi @ f), f0, jac=lambda f: -nu * phi, constraints=[cons],
                       method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
        best = max(best, float(nu * (phi @ res.x)) / math.sqrt(res.x @ G @ res.x))
    return best


# ------------------------------------------------------------- rescaling


@dataclass
class RescalingResult:
    n: list
    residual: list
    lhs: list
    rhs: complex
    n0: int
    predicted: list


def rescaling_sequence(a: BoundaryPoint, n: int) -> str:
    """g_n with g_n^{-1} o = head * period^n, a vertex sequence converging to a."""
    return inverse(a.head + a.period * n)


def rescaling_check(a: BoundaryPoint, s: float, phi: ShellFunction, psi: ShellFunction,
                    n_max: int) -> RescalingResult:
    """Compare lambda_n^2 <Delta(g_n^* phi), g_n^* psi>_{L^2(Z)} with <Delta_a phi, psi>_{L^2(nu_a)}."""
    for F in (phi, psi):
        if F.a != a or F.tails:
            raise SupportTouchesTail("functions must live on the chart of a and vanish on its tail")
    part = phi.partition
    if psi.partition is not part:
        raise ParamError("phi and psi must share a partition")
    D = part.D
    rhs = l2_inner(laplacian_a_apply(phi, None, s), psi, True)
    support = np.flatnonzero((np.abs(phi.values) > 0) | (np.abs(psi.values) > 0))
    top = int(part.alpha[support].max()) if support.size else -1
    n0 = next(n for n in range(0, 10**6) if len(a.head) + n * len(a.period) > top)
    overlap = complex(np.sum(phi.values * np.conj(psi.values) * part.nu * np.exp(2 * D * part.alpha)))
    k = part.k
    gap = (k - 1) / k - (k - 2) / (k * (1 - math.exp(-2 * s)))
    out = RescalingResult([], [], [], rhs, n0, [])
    for n in range(0, n_max + 1):
        g = rescaling_sequence(a, n)
        P1, P2 = push(g, phi), push(g, psi)
        flat = Partition(P1.partition.m, P1.partition.cells, P1.partition.a, P1.partition.M, check=False)
        F1 = ShellFunction(flat, P1.values)
        F2 = ShellFunction(flat, P2.values)
        lhs = 0.5 * math.exp((D - 2 * s) * len(g)) * energy_form(F1, F2, s, bundle=False)
        out.n.append(n)
        out.lhs.append(lhs)
        out.residual.append(abs(lhs - rhs))
        L = len(g)
        out.predicted.append(abs(overlap) * math.exp(-2 * s * L) * abs(gap) if n >= n0 else math.nan)
    return out


# ------------------------------------------------- almost invariance etc.


def almost_invariance_value(g: str, m: int, s: float, p: float) -> float:
    """||pi_s(g) 1 - 1|W^{s,p}|| exactly, at depth |g|."""
    from .functions import sobolev_norm

    params = Params(m, s, p, 0.0)
    one = CylinderFunction.constant(m, max(len(g), 1))
    img = rep_pi(g, one, params) if g else one
    diff = CylinderFunction(m, img.depth, img.coeffs - 1.0)
    return sobolev_norm(diff, s, p)


def almost_invariance_curve(m: int, p: float, s_grid: Sequence[float], K: Sequence[str]) -> list[float]:
    if p <= dimension(m):
        raise ParamError("almost invariance needs p > D")
    return [max(almost_invariance_value(g, m, s, p) for g in K) for s in s_grid]


def growth_fit(norms_by_length: dict[int, float]) -> tuple[float, float]:
    """Least-squares (C, A) with log norm ~ log C + A |g| over the maxima per length."""
    xs = np.array(sorted(norms_by_length))
    ys = np.log([norms_by_length[x] for x in xs])
    if xs.size < 2:
        return float(math.exp(ys[0])), 0.0
    A, logC = np.polyfit(xs, ys, 1)
    logC = max(logC, float(np.max(ys - A * xs)))
    return float(math.exp(logC)), float(A)


def invariant_vector_probe(m: int, n: int, params: Params) -> float:
    """Smallest singular value of the stacked (E_n pi(g) - I) over generators."""
    gens = [x for x in "abcdefghijklmnopqrstuvwxyz"[:m]]
    gens += [x.upper() for x in gens]
    N = count_cylinders(m, n)
    blocks = []
    for g in gens:
        A = rep_pi_matrix(g, n, params)
        E = A.reshape(N, 2 * m - 1, N).mean(axis=1)
        blocks.append(E - np.eye(N))
    return float(np.linalg.svd(np.vstack(blocks), compute_uv=False).min())
