"""Weighted Dirichlet hyperbola machinery for k-dimensional arithmetic functions.

A nonnegative function h on N^k whose box sums obey

    sum_{x <= X} h(x) = c_h <X>^alpha + O(<X>^alpha (min X_j)^(-delta))

admits an asymptotic evaluation of the hyperbolic sum

    Upsilon(N) = sum_{u_1...u_k <= N} h(u)
               = N^alpha ( c_h alpha^(k-1)/(k-1)! (log N)^(k-1) + ... ).

This module provides the exact evaluator for Upsilon(N) and its spike-free
restriction Upsilon(N, W) (all u_j > W_j), the prediction

    Upsilon(N, W) ~ c_h N^alpha p_k(alpha log(N/<W>)),
    p_k(t) = sum_{l<k} (-1)^(k+1+l) t^l / l!,

the exact combinatorial identity behind it (a two-sided closed form of the
truncated multi-geometric sum, checked in rational arithmetic), the moment
constants

    V_{k,j} = int_{[0,1]^k} (xi_1+...+xi_k)^j dxi
            = sum_{a_1+...+a_k=j} multinomial(j;a) / prod (a_i + 1),

weighted mean-value sums whose (log X)^(k+j) coefficient is alpha^k c_h V_{k,j},
and a least-squares extractor for the leading coefficient of Upsilon(N)/N^alpha.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .parallel import parallel_map


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyParams:
    """Box-sum growth data (alpha, c_h, D, nu, delta)."""

    alpha: float
    c_h: float
    D: float = 0.0
    nu: float = 1.0
    delta: float = 0.5

    def __post_init__(self):
        if self.alpha <= 0 or not math.isfinite(self.alpha):
            raise ValueError("alpha must be positive and finite")
        if self.c_h < 0:
            raise ValueError("c_h must be nonnegative")
        if self.D < 0:
            raise ValueError("D must be nonnegative")
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        if not 0 < self.delta < min(1.0, self.alpha):
            raise ValueError("delta must lie in (0, min(1, alpha))")


@dataclass
class BoxSumOracle:
    """Point evaluator h plus optional fast structure for box/hyperbolic sums.

    point(u)                  -- h(u), u a k-tuple of positive ints
    tail_sum(prefix, lo, hi)  -- sum_{lo < u <= hi} h(prefix + (u,)), innermost axis
    axis_values(X)            -- when h is a product of one identical factor per
                                 axis: the vector [h0(1), ..., h0(X)]
    hyperbolic_sum(N, W)      -- full closed-form override for Upsilon(N, W)
    exact                     -- True when h is integer-valued and sums are exact
    """

    dimension: int
    params: FamilyParams
    point: Callable[[tuple[int, ...]], float]
    tail_sum: Callable[[tuple[int, ...], int, int], float] | None = None
    axis_values: Callable[[int], np.ndarray] | None = None
    hyperbolic_sum: Callable[[int, tuple[int, ...] | None], float] | None = None
    exact: bool = True
    label: str = ""

    def box_sum(self, bounds) -> float:
        """H(X) = sum_{x <= X} h(x) by plain folding (small boxes)."""
        lims = [int(math.floor(b)) for b in bounds]
        if any(l < 1 for l in lims):
            return 0
        total = 0
        for u in _box_tuples(lims):
            total += self.point(u)
        return total


def _box_tuples(lims):
    if len(lims) == 1:
        for u in range(1, lims[0] + 1):
            yield (u,)
        return
    for u in range(1, lims[0] + 1):
        for rest in _box_tuples(lims[1:]):
            yield (u,) + rest


def ones_oracle(k: int) -> BoxSumOracle:
    """h == 1 on N^k: the Dirichlet-Piltz divisor setting (alpha = 1, c_h = 1)."""

    def point(u):
        return 1

    def tail_sum(prefix, lo, hi):
        return max(0, hi - max(lo, 0))

    def axis_values(x):
        return np.ones(x)

    def hyperbolic_sum(n, w=None):
        if w is None:
            w = (0,) * k
        w = tuple(int(math.floor(t)) for t in w)
        return _ones_hyperbolic(k, n, w)

    return BoxSumOracle(
        dimension=k,
        params=FamilyParams(alpha=1.0, c_h=1.0, D=0.0, nu=1.0, delta=0.999),
        point=point,
        tail_sum=tail_sum,
        axis_values=axis_values,
        hyperbolic_sum=hyperbolic_sum,
        exact=True,
        label=f"ones-{k}d",
    )


def _ones_hyperbolic(k: int, n: int, w: tuple[int, ...]) -> int:
    """#{u in N^k : <u> <= n, u_i > w_i} by vectorized recursion on axes."""
    if any(wi >= n for wi in w) and k >= 1 and min(w) >= n:
        return 0
    if k == 1:
        return max(0, n - max(w[0], 0))
    # counts[i] = value of the (k-1)-fold sum with budget i, computed by
    # convolving floor tables; for k = 2 this is a single floor-sum.
    if k == 2:
        lo = w[0]
        u = np.arange(lo + 1, n + 1, dtype=np.int64)
        if len(u) == 0:
            return 0
        inner = n // u - w[1]
        inner = np.maximum(inner, 0)
        return int(inner.sum())
    total = 0
    for u1 in range(w[0] + 1, n + 1):
        total += _ones_hyperbolic(k - 1, n // u1, w[1:])
    return total


@dataclass
class AsymptoticModel:
    """Least-squares fit of Upsilon(N)/N^alpha against a polynomial in log N."""

    alpha: float
    coefficients: np.ndarray  # highest degree first, degree k-1
    leading_coefficient: float
    c_h_estimate: float
    residual_norm: float
    condition_number: float


@dataclass
class SpikeFreePrediction:
    prediction: float
    error_budget: float
    in_stated_range: bool


@dataclass
class WeightedMeanSum:
    value: float
    ratio: float  # value / (log X)^(k+j)
    target: float  # alpha^k c_h V_{k,j}


# ---------------------------------------------------------------------------
# exact identities and special functions
# ---------------------------------------------------------------------------


def p_k_eval(k: int, t: float) -> float:
    """p_k(t) = sum_{l=0}^{k-1} (-1)^(k+1+l) t^l / l!."""
    if k < 1:
        raise ValueError("k must be >= 1")
    total = 0.0
    for l in range(k):
        total += (-1) ** (k + 1 + l) * t**l / math.factorial(l)
    return total


def geometric_identity_check(k: int, J: int, t) -> tuple[Fraction, Fraction]:
    """Both sides of the truncated multi-geometric identity

        (1-t)^k sum_{|j|_1 <= J} t^{|j|_1}
            = 1 - t^(J+1) sum_{l<k} C(J+l, l) (1-t)^l

    evaluated independently in exact rational arithmetic.
    """
    if k < 1 or J < 1:
        raise ValueError("k and J must be >= 1")
    t = Fraction(t)
    lhs = Fraction(0)
    for m in range(J + 1):
        lhs += math.comb(m + k - 1, k - 1) * t**m
    lhs *= (1 - t) ** k
    rhs = Fraction(1) - t ** (J + 1) * sum(
        math.comb(J + l, l) * (1 - t) ** l for l in range(k)
    )
    return lhs, rhs


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def v_kj(k: int, j: int) -> Fraction:
    """Exact V_{k,j} = sum over compositions a of j of multinomial(j;a)/prod(a_i+1)."""
    if k < 1 or j < 0:
        raise ValueError("need k >= 1, j >= 0")
    total = Fraction(0)
    for a in _compositions(j, k):
        mult = math.factorial(j)
        denom = 1
        for ai in a:
            mult //= math.factorial(ai)
            denom *= ai + 1
        total += Fraction(mult, denom)
    return total


def v_kj_quadrature(k: int, j: int, nodes: int = 12) -> float:
    """Numeric int_{[0,1]^k} (xi_1+...+xi_k)^j dxi by tensor Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * k), indexing="ij")
    weights = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * k), indexing="ij"):
        weights = weights * g
    s = np.zeros_like(grids[0])
    for g in grids:
        s = s + g
    return float(np.sum(weights * s**j))


# ---------------------------------------------------------------------------
# hyperbolic sums
# ---------------------------------------------------------------------------


def upsilon(oracle: BoxSumOracle, n: int, w=None, threads: int = 1):
    """Upsilon(N) or Upsilon(N, W): sum of h over <u> <= N (and u > W when given).

    Exact when the oracle is exact.  The outermost axis is partitioned into a
    fixed number of chunks independent of the thread count, and partial sums
    are reduced in chunk order, so results match bit for bit at any `threads`.
    """
    n = int(n)
    if n < 1:
        raise ValueError("N must be >= 1")
    k = oracle.dimension
    if w is not None:
        w = tuple(float(t) for t in w)
        if len(w) != k:
            raise ValueError("threshold W needs one entry per axis")
        if any(t < 0 for t in w):
            raise ValueError("thresholds must be nonnegative")
        wfloor = tuple(int(math.floor(t)) for t in w)
    else:
        wfloor = (0,) * k

    if oracle.hyperbolic_sum is not None:
        return oracle.hyperbolic_sum(n, wfloor)

    def rec(prefix: tuple[int, ...], budget: int):
        i = len(prefix)
        if i == k - 1:
            if oracle.tail_sum is not None:
                return oracle.tail_sum(prefix, wfloor[i], budget)
            total = 0
            for u in range(wfloor[i] + 1, budget + 1):
                total += oracle.point(prefix + (u,))
            return total
        lb_rest = 1
        for jj in range(i + 1, k):
            lb_rest *= max(1, wfloor[jj] + 1)
        total = 0
        for u in range(wfloor[i] + 1, budget // lb_rest + 1):
            total += rec(prefix + (u,), budget // u)
        return total

    if k == 1:
        return rec((), n)

    lb_rest = 1
    for jj in range(1, k):
        lb_rest *= max(1, wfloor[jj] + 1)
    top = n // lb_rest
    first = list(range(wfloor[0] + 1, top + 1))
    if not first:
        return 0
    nchunks = min(64, len(first))  # fixed partition, independent of threads
    chunks = [first[i::nchunks] for i in range(nchunks)]

    def chunk_sum(chunk):
        total = 0
        for u in chunk:
            total += rec((u,), n // u)
        return total

    partials = parallel_map(chunk_sum, chunks, threads)
    total = 0
    for p in partials:
        total += p
    return total


def spike_free_prediction(params: FamilyParams, n: float, w) -> SpikeFreePrediction:
    """Lemma-style prediction for Upsilon(N, W) away from the spikes."""
    w = tuple(float(t) for t in w)
    k = len(w)
    wprod = math.prod(w)
    logn = math.log(n)
    in_range = True
    if wprod > math.sqrt(n):
        warnings.warn("threshold volume exceeds sqrt(N); prediction unreliable")
        in_range = False
    if min(w) < logn ** (2 * k / params.delta):
        warnings.warn("min W below (log N)^(2k/delta); error budget not guaranteed")
        in_range = False
    pred = params.c_h * n**params.alpha * p_k_eval(k, params.alpha * math.log(n / wprod))
    budget = n**params.alpha * min(w) ** (-params.delta / (2 * k)) * logn**k
    return SpikeFreePrediction(pred, budget, in_range)


def upsilon_envelope(box_sum: Callable, n: int, w, theta_steps: int | None = None):
    """Sandwich bounds for Upsilon(N, W) from box sums alone (verification mode).

    Covers the region by boxes with corners W_r Theta^j, Theta^J = N/<W>, and
    returns (lower, upper) obtained from the inclusion-exclusion of box sums
    over |j|_1 <= J-k and <= J.
    """
    w = tuple(float(t) for t in w)
    k = len(w)
    wprod = math.prod(w)
    if wprod >= n:
        return 0, 0
    ratio = n / wprod
    if theta_steps is None:
        theta_steps = max(k + 1, int(math.ceil(math.log(ratio) / math.log(2.0))))
    J = theta_steps
    theta = ratio ** (1.0 / J)
    if not 1 < theta:
        raise ValueError("degenerate envelope: N/<W> must exceed 1")

    def corner(jvec):
        return tuple(w[r] * theta ** jvec[r] for r in range(k))

    def box_window(jvec):
        # sum over the half-open box (U_j, U_{j+1}] by inclusion-exclusion
        total = 0
        for eps in _binary_vectors(k):
            x = tuple(w[r] * theta ** (jvec[r] + eps[r]) for r in range(k))
            total += (-1) ** (k - sum(eps)) * box_sum(x)
        return total

    lower = 0
    upper = 0
    for jvec in _bounded_compositions(k, J):
        val = box_window(jvec)
        if sum(jvec) <= J - k:
            lower += val
        upper += val
    return lower, upper


def _binary_vectors(k):
    for bits in range(1 << k):
        yield tuple((bits >> i) & 1 for i in range(k))


def _bounded_compositions(k, J):
    if k == 1:
        for j in range(J + 1):
            yield (j,)
        return
    for j in range(J + 1):
        for rest in _bounded_compositions(k - 1, J - j):
            yield (j,) + rest


# ---------------------------------------------------------------------------
# weighted mean values and asymptotic fits
# ---------------------------------------------------------------------------


def weighted_mean_sum(oracle: BoxSumOracle, x: int, j: int) -> WeightedMeanSum:
    """sum_{u <= (X,...,X)} (log <u>)^j <u>^(-alpha) h(u), with its (log X)^(k+j)
    normalization and the predicted limit alpha^k c_h V_{k,j}."""
    if x < 2:
        raise ValueError("X must be >= 2")
    k = oracle.dimension
    alpha = oracle.params.alpha
    if oracle.axis_values is not None:
        hv = np.asarray(oracle.axis_values(x), dtype=float)
        u = np.arange(1, x + 1, dtype=float)
        logs = np.log(u)
        base = hv * u**-alpha
        # (log<u>)^j = (sum_i log u_i)^j expanded by the multinomial theorem
        axis_sums = [float(np.sum(base * logs**a)) for a in range(j + 1)]
        total = 0.0
        for a in _compositions(j, k):
            mult = math.factorial(j)
            term = 1.0
            for ai in a:
                mult //= math.factorial(ai)
                term *= axis_sums[ai]
            total += mult * term
    else:
        if x**k > 10**7:
            raise ValueError("generic weighted sum too large; provide axis_values")
        total = 0.0
        for u in _box_tuples([x] * k):
            prod = math.prod(u)
            total += math.log(prod) ** j * prod**-alpha * oracle.point(u)
    ratio = total / math.log(x) ** (k + j)
    target = alpha**k * oracle.params.c_h * float(v_kj(k, j))
    return WeightedMeanSum(total, ratio, target)


def asymptotic_fit(samples, alpha: float, k: int) -> AsymptoticModel:
    """Fit Upsilon(N)/N^alpha to a degree-(k-1) polynomial in log N.

    samples: iterable of (N, Upsilon(N)) with at least k+1 distinct N spanning
    a decade.  The leading coefficient estimates c_h alpha^(k-1)/(k-1)!.
    """
    pts = sorted((float(n), float(v)) for n, v in samples)
    if len(pts) < k + 1:
        raise ValueError(f"need at least {k + 1} samples for a degree-{k - 1} fit")
    ns = np.array([p[0] for p in pts])
    if len(set(ns.tolist())) < k + 1:
        raise ValueError("samples must have distinct N")
    if ns.max() / ns.min() < 10.0:
        raise ValueError("samples should span at least one decade in N")
    ys = np.array([p[1] for p in pts]) / ns**alpha
    logs = np.log(ns)
    design = np.vander(logs, k)  # columns (log N)^(k-1), ..., 1
    cond = float(np.linalg.cond(design))
    if cond > 1e12:
        raise ValueError(f"design matrix ill-conditioned (cond={cond:.3g}); "
                         "samples too clustered")
    coef, res, _, _ = np.linalg.lstsq(design, ys, rcond=None)
    fitted = design @ coef
    resid = float(np.linalg.norm(fitted - ys))
    leading = float(coef[0])
    c_h = leading * math.factorial(k - 1) / alpha ** (k - 1)
    return AsymptoticModel(
        alpha=alpha,
        coefficients=coef,
        leading_coefficient=leading,
        c_h_estimate=c_h,
        residual_norm=resid,
        condition_number=cond,
    )
