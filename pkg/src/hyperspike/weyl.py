"""Exponential sums over coordinate products, complete sums, and their
oscillatory-integral companions.

The generating sum of a multihomogeneous diagonal term is

    f_k(alpha, X) = sum_{x <= X} e(alpha (x_1...x_k)^d),   e(t) = exp(2 pi i t),

evaluated here through the value multiset of <x>^d (cost = number of distinct
products, not the box volume).  Near a rational alpha = a/q + beta it is
approximated by q^(-k) S(q, a) v(beta, X), where

    S_k(q, a) = sum_{x mod q} e(a <x>^d / q),
    v_k(beta, X) = int_{[0,X]} e(beta <t>^d) dt = <X> V_k(<X>^d beta),
    V_k(beta) = int_{[0,1]^k} e(beta <t>^d) dt,

with the box error E(q, X) = q^k + sum_{r<k} q^(k-r) X_1...X_r (X sorted
descending) controlling the residual.  V_k obeys the recursion

    V_{k+1}(beta) = int_0^1 V_k(beta t^d) dt,

computed either by nested adaptive quadrature (reference evaluator, absolute
tolerance per level) or, for the wide-range integrations the singular integral
needs, by `OscillatoryTable`: the substitution u = beta t^d turns each level
into the cumulative transform V(beta) = (1/d) beta^(-1/d) int_0^beta
u^(1/d-1) V_prev(u) du, which is carried across a shared panel grid with
per-panel Chebyshev antiderivatives, so the whole table costs O(beta_max) and
single evaluations are O(1).

S_k(q, a) uses the fact that the number of k-tuples with product v mod q
depends on v only through gcd(v, q); the class sizes satisfy

    P_{k+1}(h) = sum_{g | h} g phi(q/g) P_k(g),

so the value distribution of <x>^d mod q costs O(q log d + tau(q)^2),
and all S_k(q, b) at once cost one length-q FFT.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .arith import divisors
from .forms import Box, as_box, product_value_multiset

TWO_PI = 2.0 * math.pi

# smallest even moment exponent with near-optimal mean-value growth, by degree
N0_RECORDS = {1: 2, 2: 4, 3: 8, 4: 16, 5: 28, 6: 44}


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalApprox:
    """alpha = a/q + beta with gcd(a, q) = 1."""

    a: int
    q: int
    beta: float

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if math.gcd(self.a, self.q) != 1:
            raise ValueError("a/q must be in lowest terms")


@dataclass(frozen=True)
class ArcLabel:
    major: bool
    approx: RationalApprox | None
    Q: float
    P: float


@dataclass(frozen=True)
class BoundParams:
    """Constants of the pointwise minor-arc bounds; astronomically small for
    realistic d, k and exposed for diagnostics only."""

    omega: float
    eta: float
    D_weyl: int

    @classmethod
    def for_degree(cls, d: int, k: int) -> "BoundParams":
        omega = (8.0 * d * k) ** -8
        dd = 2 ** (d - 1)
        return cls(omega=omega, eta=omega / (2 * dd**k * d * k), D_weyl=dd)


@dataclass
class MajorArcResidual:
    exact: complex
    approx: complex
    residual: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.residual / self.bound if self.bound > 0 else math.inf


# ---------------------------------------------------------------------------
# the exponential sum and its complete companion
# ---------------------------------------------------------------------------


def weyl_sum(alpha: float, d: int, box) -> complex:
    """f_k(alpha, X) = sum_{x <= X} e(alpha <x>^d), via the value multiset.

    Deterministic: values are visited in sorted order and the real/imaginary
    parts accumulated by exact compensated summation.
    """
    vm = product_value_multiset(d, box, "positive")
    items = sorted(vm.items())
    re = math.fsum(cnt * math.cos(TWO_PI * alpha * v) for v, cnt in items)
    im = math.fsum(cnt * math.sin(TWO_PI * alpha * v) for v, cnt in items)
    return complex(re, im)


@lru_cache(maxsize=4096)
def _gcd_class_counts(q: int, k: int) -> dict[int, int]:
    """P_k(g): number of k-tuples mod q whose product has gcd g with q (exact)."""
    divs = divisors(q)
    pk = {g: 1 for g in divs}  # k = 1: one residue class per value
    for _ in range(k - 1):
        nxt = {}
        for h in divs:
            total = 0
            for g in divs:
                if h % g == 0:
                    nxt_g = pk[g] * g * _phi(q // g)
                    total += nxt_g
            nxt[h] = total
        pk = nxt
    return pk


@lru_cache(maxsize=8192)
def _phi(n: int) -> int:
    out = n
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            out -= out // p
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        out -= out // m
    return out


def _power_mod(v: np.ndarray, d: int, q: int) -> np.ndarray:
    out = np.ones_like(v)
    base = v % q
    e = d
    while e:
        if e & 1:
            out = (out * base) % q
        base = (base * base) % q
        e >>= 1
    return out


@lru_cache(maxsize=512)
def _value_distribution(q: int, d: int, k: int) -> np.ndarray:
    """D[w] = #{x in (Z/q)^k : <x>^d = w mod q}, as float64 (exact below 2^53)."""
    if q ** k > 2**53:
        raise ValueError("distribution counts would exceed exact float range")
    v = np.arange(q, dtype=np.int64)
    g = np.gcd(v, q)
    pk = _gcd_class_counts(q, k)
    divs = np.array(sorted(pk), dtype=np.int64)
    weights = np.array([float(pk[int(t)]) for t in divs])
    pos = np.searchsorted(divs, g)
    wts = weights[pos]
    vd = _power_mod(v, d, q)
    return np.bincount(vd, weights=wts, minlength=q)


@lru_cache(maxsize=256)
def _sum_table(q: int, d: int, k: int) -> np.ndarray:
    """S_k(q, b) for all residues b at once: conjugate FFT of the distribution."""
    dist = _value_distribution(q, d, k)
    return np.conj(np.fft.fft(dist))


def complete_sum(q: int, a: int, d: int, k: int) -> complex:
    """S_k(q, a) = sum_{x mod q} e(a <x>^d / q)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if q == 1:
        return 1 + 0j
    table = _sum_table(q, d, k)
    return complex(table[a % q])


def box_error_term(q: int, box) -> float:
    """E(q, X) = q^k + sum_{r=1}^{k-1} q^(k-r) X_1...X_r with X sorted descending."""
    if q < 1:
        raise ValueError("q must be >= 1")
    box = as_box(box)
    xs = sorted(box.bounds, reverse=True)
    k = len(xs)
    total = float(q**k)
    prefix = 1.0
    for r in range(1, k):
        prefix *= xs[r - 1]
        total += q ** (k - r) * prefix
    return total


# ---------------------------------------------------------------------------
# oscillatory integrals: reference quadrature and panel table
# ---------------------------------------------------------------------------


def oscillatory_v_unit(beta: float, d: int, k: int, tol: float = 1e-10) -> complex:
    """V_k(beta) = int over the unit cube of e(beta <t>^d), by nested adaptive
    quadrature with absolute tolerance `tol` per nesting level.

    Reference evaluator: robust at any k and moderate |beta|; cost grows with
    |beta| and exponentially in k.  Use OscillatoryTable for sweeps.
    """
    if beta == 0.0:
        return 1.0 + 0j
    if beta < 0:
        return oscillatory_v_unit(-beta, d, k, tol).conjugate()
    return _v_unit_cached(float(beta), d, k, tol)


@lru_cache(maxsize=65536)
def _v_unit_cached(beta: float, d: int, k: int, tol: float) -> complex:
    limit = max(100, 12 * int(beta) + 50)
    if k == 1:
        re = quad(lambda t: math.cos(TWO_PI * beta * t**d), 0, 1,
                  epsabs=tol, epsrel=1e-12, limit=limit)[0]
        im = quad(lambda t: math.sin(TWO_PI * beta * t**d), 0, 1,
                  epsabs=tol, epsrel=1e-12, limit=limit)[0]
        return complex(re, im)

    def inner(t: float) -> complex:
        return _v_unit_cached(round(beta * t**d, 12), d, k - 1, tol)

    re = quad(lambda t: inner(t).real, 0, 1, epsabs=tol, epsrel=1e-12, limit=limit)[0]
    im = quad(lambda t: inner(t).imag, 0, 1, epsabs=tol, epsrel=1e-12, limit=limit)[0]
    return complex(re, im)


def oscillatory_v(beta: float, d: int, box, tol: float = 1e-10,
                  table: "OscillatoryTable | None" = None) -> complex:
    """v_k(beta, X) = <X> V_k(<X>^d beta) over the real box volume <X>."""
    box = as_box(box)
    vol = box.volume()
    arg = vol**d * beta
    if table is not None:
        return vol * complex(table.values(np.array([arg]))[0])
    return vol * oscillatory_v_unit(arg, d, box.k, tol)


# -- panelized Chebyshev table ----------------------------------------------

_CHEB_ORDER = 16


@lru_cache(maxsize=4)
def _cheb_machinery(order: int):
    i = np.arange(order)
    theta = (2 * i + 1) * math.pi / (2 * order)
    tnodes = np.cos(theta)  # descending in (-1, 1)
    # interpolation matrix: coeffs = M @ values at tnodes
    m = np.cos(np.outer(np.arange(order), theta)) * (2.0 / order)
    m[0] *= 0.5
    return tnodes, m


def _cheb_eval_columns(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate per-column Chebyshev series: coeffs (m, P), t (n,) -> (n, P)."""
    m = coeffs.shape[0]
    b1 = np.zeros((t.size, coeffs.shape[1]), dtype=coeffs.dtype)
    b2 = np.zeros_like(b1)
    t2 = (2.0 * t)[:, None]
    for j in range(m - 1, 0, -1):
        b1, b2 = coeffs[j][None, :] + t2 * b1 - b2, b1
    return coeffs[0][None, :] + t[:, None] * b1 - b2


def _cheb_eval_select(coeffs: np.ndarray, cols: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate series coeffs[:, cols[i]] at t[i] (vectorized Clenshaw)."""
    m = coeffs.shape[0]
    b1 = np.zeros(t.shape, dtype=coeffs.dtype)
    b2 = np.zeros_like(b1)
    t2 = 2.0 * t
    for j in range(m - 1, 0, -1):
        b1, b2 = coeffs[j, cols] + t2 * b1 - b2, b1
    return coeffs[0, cols] + t * b1 - b2


class OscillatoryTable:
    """V_k(beta) on [0, bmax] as piecewise Chebyshev series on uniform panels.

    Built level by level through the cumulative transform
    V_m(beta) = (1/d) beta^(-1/d) int_0^beta u^(1/d-1) V_{m-1}(u) du; the first
    panel removes the u^(1/d-1) singularity by the substitution u = w^d.
    Accuracy is ~1e-12 absolute (verified against the nested quadrature).
    """

    def __init__(self, d: int, k: int, bmax: float, panel: float = 0.5,
                 order: int = _CHEB_ORDER):
        if bmax <= 0:
            bmax = 1.0
        self.d, self.k = d, k
        self.panel = panel
        self.npanels = max(2, int(math.ceil(bmax / panel)) + 1)
        self.order = order
        tnodes, interp = _cheb_machinery(order)
        self._tnodes = tnodes
        p = np.arange(self.npanels)
        left = p * panel
        # physical nodes, shape (order, P)
        u = left[None, :] + (tnodes[:, None] + 1.0) * (panel / 2.0)
        self._u = u
        glx, glw = np.polynomial.legendre.leggauss(24)

        def gl_integral_to(b_arr, f):
            """int_0^{b} f(w^d) d(w) per target via GL on [0, b^(1/d)] (panel 0)."""
            ub = b_arr ** (1.0 / d)
            nodes = 0.5 * ub[None, :] * (glx[:, None] + 1.0)
            vals = f(nodes**d)
            return 0.5 * ub * np.einsum("g,gp->p", glw, vals)

        # ---- level 1 ----
        # panel 0: direct defining integral at its nodes (tiny phases)
        def base_phase(x):
            return np.exp(2j * math.pi * x)

        v_prev = np.empty_like(u, dtype=complex)
        # V_1(b) = (1/b^{1/d}) int_0^{b^{1/d}} e(w^d) dw  (exact substitution)
        b0 = u[:, 0]
        v_prev[:, 0] = gl_integral_to(b0, base_phase) / b0 ** (1.0 / d)
        # cumulative transform for panels >= 1
        v_prev[:, 1:] = self._transform(base_phase(u[:, 1:]), u, interp,
                                        head=self._head_integral(base_phase, gl_integral_to))
        self._panel0_coeffs = [interp @ v_prev[:, 0]]
        levels = [v_prev]
        for _ in range(2, k + 1):
            prev = levels[-1]
            prev0_cheb = self._panel0_coeffs[-1]

            def prev_small(x, c0=prev0_cheb):
                # evaluate V_prev for arguments inside panel 0
                t = 2.0 * x / panel - 1.0
                return np.polynomial.chebyshev.chebval(t, c0)

            b0 = u[:, 0]
            v0 = gl_integral_to(b0, prev_small) / b0 ** (1.0 / d)
            vm = np.empty_like(prev)
            vm[:, 0] = v0
            vm[:, 1:] = self._transform(prev[:, 1:], u, interp,
                                        head=self._head_integral(prev_small, gl_integral_to))
            self._panel0_coeffs.append(interp @ vm[:, 0])
            levels.append(vm)
        self._coeffs = interp @ levels[-1]  # (order, P) series of V_k per panel

    def _head_integral(self, f, gl_integral_to):
        """F(edge_1) = int_0^panel u^(1/d-1) f(u) du = d * int_0^{panel^(1/d)} f(w^d) dw."""
        b = np.array([self.panel])
        return self.d * float(gl_integral_to(b, f)[0].real) + 1j * self.d * float(
            gl_integral_to(b, f)[0].imag
        )

    def _transform(self, f_nodes: np.ndarray, u: np.ndarray, interp: np.ndarray,
                   head: complex) -> np.ndarray:
        """Cumulative (1/d) b^(-1/d) int_0^b u^(1/d-1) f(u) du at nodes, panels >= 1."""
        d = self.d
        w = self.panel
        g = u[:, 1:] ** (1.0 / d - 1.0) * f_nodes
        coeffs = interp @ g  # (order, P-1)
        anti = np.polynomial.chebyshev.chebint(coeffs, m=1, lbnd=-1, scl=w / 2.0, axis=0)
        # value of the antiderivative at the panel nodes and at the right edge
        at_nodes = _cheb_eval_columns(anti, self._tnodes)  # (order, P-1)
        at_right = anti.sum(axis=0)  # T_j(1) = 1
        f_left = head + np.concatenate(([0.0], np.cumsum(at_right)[:-1]))
        f_at_nodes = f_left[None, :] + at_nodes
        return (1.0 / d) * u[:, 1:] ** (-1.0 / d) * f_at_nodes

    def values(self, beta: np.ndarray) -> np.ndarray:
        """V_k at the given points; negative arguments via conjugation."""
        beta = np.asarray(beta, dtype=float)
        r = np.abs(beta)
        if np.any(r > self.npanels * self.panel + 1e-9):
            raise ValueError("argument outside table range")
        cols = np.minimum((r / self.panel).astype(np.int64), self.npanels - 1)
        t = 2.0 * (r - cols * self.panel) / self.panel - 1.0
        v = _cheb_eval_select(self._coeffs, cols, t)
        return np.where(beta < 0, np.conj(v), v)


# ---------------------------------------------------------------------------
# arcs
# ---------------------------------------------------------------------------

_SCAN_LIMIT = 10**4


def classify_arc(alpha: float, Q: float, P: float, d: int, k: int = 1) -> ArcLabel:
    """Major/minor label: major iff exists q <= Q, gcd(a,q)=1 with
    |q alpha - a| <= Q P^(-d); exhaustive scan to 10^4, convergents above."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if not 1 <= Q <= P ** (1.0 / (d * k)) + 1e-12:
        warnings.warn("Q outside the recommended range [1, P^(1/(dk))]")
    width = Q * P**-d

    def witness(q):
        a = round(alpha * q)
        if abs(q * alpha - a) <= width + 1e-15:
            g = math.gcd(a, q) if a != 0 else q
            aa, qq = a // g, q // g
            return RationalApprox(aa, qq, alpha - aa / qq)
        return None

    qmax = int(math.floor(Q))
    if qmax <= _SCAN_LIMIT:
        for q in range(1, qmax + 1):
            hit = witness(q)
            if hit is not None:
                return ArcLabel(True, hit, Q, P)
        return ArcLabel(False, None, Q, P)
    # continued-fraction accelerator: convergents are best approximations
    for q in _convergent_denominators(alpha, qmax):
        hit = witness(q)
        if hit is not None:
            return ArcLabel(True, hit, Q, P)
    return ArcLabel(False, None, Q, P)


def _convergent_denominators(alpha: float, qmax: int):
    out = {1}
    x = alpha - math.floor(alpha)
    q_prev, q_cur = 0, 1
    for _ in range(64):
        if x < 1e-15:
            break
        x = 1.0 / x
        a = math.floor(x)
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if q_cur > qmax:
            break
        out.add(q_cur)
        x -= a
    return sorted(out)


def major_arc_residual(alpha: float, d: int, box, Q: float | None = None,
                       arc: ArcLabel | None = None,
                       table: OscillatoryTable | None = None) -> MajorArcResidual:
    """Exact f against the major-arc approximation q^(-k) S(q,a) v(beta, X),
    with the residual and its theoretical envelope E(q,X)(1+<X>^d|beta|)^k."""
    box = as_box(box)
    k = box.k
    p = box.volume()
    if arc is None:
        if Q is None:
            Q = p ** (1.0 / (d * k))
        arc = classify_arc(alpha, Q, p, d, k)
    if not arc.major or arc.approx is None:
        raise ValueError("alpha lies on a minor arc for the given (Q, P)")
    ra = arc.approx
    exact = weyl_sum(alpha, d, box)
    s = complete_sum(ra.q, ra.a, d, k)
    v = oscillatory_v(ra.beta, d, box, table=table)
    approx = s * v / ra.q**k
    residual = abs(exact - approx)
    bound = box_error_term(ra.q, box) * (1.0 + p**d * abs(ra.beta)) ** k
    return MajorArcResidual(exact=exact, approx=approx, residual=residual, bound=bound)


# ---------------------------------------------------------------------------
# moments and diagnostic envelopes
# ---------------------------------------------------------------------------


def moment_integral(d: int, k: int, box, power: int) -> int:
    """int_0^1 |f_k(alpha, X)|^(2t) d alpha as the exact count of solutions of
    <x_1>^d + ... + <x_t>^d = <y_1>^d + ... + <y_t>^d in the box."""
    if power <= 0 or power % 2 != 0:
        raise ValueError("power must be a positive even integer")
    t = power // 2
    vm = product_value_multiset(d, box, "positive")
    acc = {0: 1}
    for _ in range(t):
        nxt: dict[int, int] = {}
        for v1, n1 in acc.items():
            for v2, n2 in vm.items():
                key = v1 + v2
                nxt[key] = nxt.get(key, 0) + n1 * n2
        acc = nxt
    return sum(n * n for n in acc.values())


def moment_integral_quadrature(d: int, k: int, box, power: int) -> float:
    """Validation mode: the same moment by an equispaced rule that is exact for
    the trigonometric polynomial |f|^(2t) (period 1, degree t * max value)."""
    if power <= 0 or power % 2 != 0:
        raise ValueError("power must be a positive even integer")
    t = power // 2
    vm = sorted(product_value_multiset(d, box, "positive").items())
    values = np.array([v for v, _ in vm], dtype=float)
    counts = np.array([c for _, c in vm], dtype=float)
    degree = t * int(values.max())
    npts = degree + 1
    total = 0.0
    chunk = max(1, 10**6 // max(1, len(values)))
    for start in range(0, npts, chunk):
        alphas = np.arange(start, min(start + chunk, npts), dtype=float) / npts
        phases = np.exp(2j * math.pi * np.outer(alphas, values))
        f = phases @ counts
        total += float(np.sum(np.abs(f) ** power))
    return total / npts


def weyl_bound_envelope(alpha: float, d: int, box, a: int, q: int) -> float:
    """Differencing-bound envelope <X>^(D^k) (1/q + 1/min X + q/<X>^d); the
    epsilon factor is omitted (report log terms separately if needed).

    Used only for empirical dominance scans; requires gcd(a,q)=1 and
    |q alpha - a| <= 1/q.
    """
    if math.gcd(a, q) != 1:
        raise ValueError("need gcd(a, q) = 1")
    if abs(q * alpha - a) > 1.0 / q + 1e-12:
        raise ValueError("approximation must satisfy |q alpha - a| <= 1/q")
    box = as_box(box)
    k = box.k
    dd = 2 ** (d - 1)
    p = box.volume()
    xmin = min(box.bounds)
    return p ** (dd**k) * (1.0 / q + 1.0 / xmin + q / p**d)
