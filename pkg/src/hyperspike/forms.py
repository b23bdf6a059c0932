"""Exact solution counting for multihomogeneous diagonal equations in boxes.

The central object is the equation

    c_1 <x_1>^d + c_2 <x_2>^d + ... + c_s <x_s>^d = 0,

where each x_j is a k-vector of integers and <x> = x_1 x_2 ... x_k.  Counts
are taken over boxes 1 <= x_{j,r} <= X_r (positive mode) or
1 <= |x_{j,r}| <= X_r (signed mode), optionally with per-factor primitivity.
All counting is integer-exact: the kernel builds the multiset of values
c_j <x>^d over a box and convolves term multisets, splitting the terms into
two halves and joining on matching partial sums (meet in the middle), which
replaces the naive O(prod X^(s k)) scan by roughly its square root.

The height counter for a multiprojective variety

    sum_j a_j (x_{1,j} ... x_{k,j})^d = 0,   height = (|x_1|...|x_k|)^(n+1-d)

sums the shell counter `theta` over the hyperbolic region m_1...m_k <= B^(1/alpha)
and divides by 2^k (sign ambiguity of primitive representatives); the division
must be exact and is asserted.  A fast exact path for the bilinear case
(d = 1, k = 2, three coordinates) counts pairs via per-line lattice-point
windows and a double Moebius inversion, and is what makes B = 10^6 runs cheap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arith import ext_gcd, integer_root_floor, mobius_sieve

# A ValueMultiset maps an exact integer value to its multiplicity.
ValueMultiset = dict[int, int]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalForm:
    """Equation data: degree d, factor count k, nonzero coefficients c_1..c_s."""

    degree: int
    factors: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.factors < 1:
            raise ValueError("factor count must be >= 1")
        coeffs = tuple(int(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 2:
            raise ValueError("need at least two terms")
        if any(c == 0 for c in coeffs):
            raise ValueError("all coefficients must be nonzero")

    @property
    def terms(self) -> int:
        return len(self.coeffs)

    @property
    def coeff_bound(self) -> int:
        """max_j |c_j|."""
        return max(abs(c) for c in self.coeffs)

    def scaled(self, signs) -> "DiagonalForm":
        """Coordinate product eta * c."""
        return DiagonalForm(self.degree, self.factors,
                            tuple(e * c for e, c in zip(signs, self.coeffs)))

    def key(self) -> str:
        return f"d{self.degree}k{self.factors}c{','.join(map(str, self.coeffs))}"


@dataclass(frozen=True)
class Variety:
    """Diagonal multiprojective variety: coefficients a_0..a_n, k factors, degree d."""

    coeffs: tuple[int, ...]
    factors: int
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(a) for a in self.coeffs))
        if any(a == 0 for a in self.coeffs):
            raise ValueError("all coefficients must be nonzero")
        if len(self.coeffs) < 3:
            raise ValueError("need n >= 2, i.e. at least three coefficients")
        if self.degree < 1 or self.factors < 1:
            raise ValueError("degree and factor count must be >= 1")

    @property
    def n(self) -> int:
        return len(self.coeffs) - 1

    @property
    def alpha(self) -> int:
        """Height exponent n + 1 - d."""
        return self.n + 1 - self.degree

    def form(self) -> DiagonalForm:
        return DiagonalForm(self.degree, self.factors, self.coeffs)


@dataclass(frozen=True)
class Box:
    """Per-factor real bounds X_1..X_k >= 1; coordinates range over 1..floor(X_i)."""

    bounds: tuple[float, ...]

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if not bounds:
            raise ValueError("box must have at least one bound")
        if any(b < 1 for b in bounds):
            raise ValueError("all box bounds must be >= 1")

    @property
    def k(self) -> int:
        return len(self.bounds)

    def limits(self) -> tuple[int, ...]:
        return tuple(int(math.floor(b)) for b in self.bounds)

    def volume(self) -> float:
        """<X> = X_1 ... X_k (real bounds)."""
        out = 1.0
        for b in self.bounds:
            out *= b
        return out

    def scaled_down(self, ls) -> "Box":
        return Box(tuple(b / l for b, l in zip(self.bounds, ls)))


def as_box(box) -> Box:
    if isinstance(box, Box):
        return box
    if isinstance(box, (int, float)):
        return Box((box,))
    return Box(tuple(box))


# ---------------------------------------------------------------------------
# value multisets and their convolution
# ---------------------------------------------------------------------------


def _product_multiset(limits: tuple[int, ...]) -> ValueMultiset:
    """Multiplicity of each product x_1...x_k over 1 <= x_i <= limits[i]."""
    acc: ValueMultiset = {1: 1}
    for lim in limits:
        nxt: ValueMultiset = {}
        for m, cnt in acc.items():
            for x in range(1, lim + 1):
                key = m * x
                nxt[key] = nxt.get(key, 0) + cnt
        acc = nxt
    return acc


def product_value_multiset(d: int, box, sign_mode: str = "positive") -> ValueMultiset:
    """Exact multiplicities of <x>^d over all admissible x in the box.

    sign_mode "positive": coordinates in 1..floor(X_i); "signed_nonzero":
    coordinates in [-X_i,-1] u [1,X_i].  Total multiplicity is prod(floor X_i)
    respectively prod(2 floor X_i).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    box = as_box(box)
    limits = box.limits()
    prod = _product_multiset(limits)
    k = len(limits)
    if sign_mode == "positive":
        out: ValueMultiset = {}
        for m, cnt in prod.items():
            v = m**d
            out[v] = out.get(v, 0) + cnt
        return out
    if sign_mode == "signed_nonzero":
        out = {}
        if d % 2 == 0:
            # every sign pattern gives the same value
            w = 1 << k
            for m, cnt in prod.items():
                v = m**d
                out[v] = out.get(v, 0) + cnt * w
        else:
            # 2^(k-1) sign patterns per realized sign of the product
            w = 1 << (k - 1)
            for m, cnt in prod.items():
                v = m**d
                out[v] = out.get(v, 0) + cnt * w
                out[-v] = out.get(-v, 0) + cnt * w
        return out
    raise ValueError(f"unknown sign_mode {sign_mode!r}")


def scale_multiset(vm: ValueMultiset, c: int) -> ValueMultiset:
    if c == 1:
        return dict(vm)
    return {c * v: n for v, n in vm.items()}


def convolve(a: ValueMultiset, b: ValueMultiset) -> ValueMultiset:
    out: ValueMultiset = {}
    for v1, n1 in a.items():
        for v2, n2 in b.items():
            key = v1 + v2
            out[key] = out.get(key, 0) + n1 * n2
    return out


def convolve_many(multisets: list[ValueMultiset]) -> ValueMultiset:
    # smallest first keeps intermediate supports small
    pending = sorted(multisets, key=len)
    acc = pending[0]
    for vm in pending[1:]:
        acc = convolve(acc, vm)
    return acc


def _join_zero(a: ValueMultiset, b: ValueMultiset) -> int:
    """sum_v a[v] * b[-v]:  number of ways the two halves cancel."""
    if len(b) < len(a):
        a, b = b, a
    return sum(n * b.get(-v, 0) for v, n in a.items())


def _count_from_term_multisets(term_sets: list[ValueMultiset]) -> int:
    s = len(term_sets)
    half = (s + 1) // 2
    left = convolve_many(term_sets[:half])
    right = convolve_many(term_sets[half:]) if s > half else {0: 1}
    return _join_zero(left, right)


# ---------------------------------------------------------------------------
# box counts
# ---------------------------------------------------------------------------


def count_box_positive(form: DiagonalForm, box) -> int:
    """M+_c(X): solutions with all coordinates in 1..floor(X_r)."""
    box = as_box(box)
    if box.k != form.factors:
        raise ValueError("box dimension must equal the factor count")
    base = product_value_multiset(form.degree, box, "positive")
    terms = [scale_multiset(base, c) for c in form.coeffs]
    return _count_from_term_multisets(terms)


def count_box_signed(form: DiagonalForm, box) -> int:
    """M_c(X): solutions with coordinates in [-X_r,-1] u [1,X_r]."""
    box = as_box(box)
    if box.k != form.factors:
        raise ValueError("box dimension must equal the factor count")
    base = product_value_multiset(form.degree, box, "signed_nonzero")
    terms = [scale_multiset(base, c) for c in form.coeffs]
    return _count_from_term_multisets(terms)


def count_box_primitive(form: DiagonalForm, box) -> int:
    """M*_c(X): signed count restricted to per-factor-row primitive solutions.

    Row primitivity: for each factor index i, gcd over the s terms of the
    i-th coordinates equals 1.  Computed by k-fold Moebius inversion
    M* = sum_l mu(l_1)...mu(l_k) M(X_1/l_1, ..., X_k/l_k).
    """
    box = as_box(box)
    if box.k != form.factors:
        raise ValueError("box dimension must equal the factor count")
    limits = box.limits()
    mu = mobius_sieve(max(limits))
    total = 0
    ranges = [range(1, lim + 1) for lim in limits]
    for ls in itertools.product(*ranges):
        w = 1
        for l in ls:
            w *= mu[l]
            if w == 0:
                break
        if w == 0:
            continue
        total += w * count_box_signed(form, box.scaled_down(ls))
    return total


def _signed_range(limit: int) -> list[int]:
    return [x for x in range(-limit, limit + 1) if x != 0]


def count_box_primitive_direct(form: DiagonalForm, box) -> int:
    """Independent gcd-filtered enumerator for M*_c(X) (testing oracle).

    Enumerates coordinate vectors for the first s-1 terms, solves the last
    term through a product-value lookup, then filters on row gcds.  Cost is
    (prod 2 X_r)^(s-1); intended for small boxes only.
    """
    box = as_box(box)
    d, k, coeffs = form.degree, form.factors, form.coeffs
    limits = box.limits()
    vecs = [np.array(v, dtype=object) for v in itertools.product(*[_signed_range(l) for l in limits])]
    vecs = [tuple(int(x) for x in v) for v in vecs]
    by_value: dict[int, list[tuple[int, ...]]] = {}
    for v in vecs:
        prod = 1
        for x in v:
            prod *= x
        by_value.setdefault(prod**d, []).append(v)
    c_last = coeffs[-1]
    total = 0
    for combo in itertools.product(vecs, repeat=form.terms - 1):
        partial = 0
        for c, v in zip(coeffs, combo):
            prod = 1
            for x in v:
                prod *= x
            partial += c * prod**d
        if partial % c_last != 0:
            continue
        target = -partial // c_last
        for last in by_value.get(target, ()):
            ok = True
            for i in range(k):
                g = abs(last[i])
                for v in combo:
                    g = math.gcd(g, v[i])
                if g != 1:
                    ok = False
                    break
            if ok:
                total += 1
    return total


# ---------------------------------------------------------------------------
# shell counts theta(m) and height counting
# ---------------------------------------------------------------------------


@lru_cache(maxsize=512)
def _shell_vectors(dim: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Primitive vectors in Z^dim with sup-norm exactly m and no zero coordinate.

    Returns (vectors, nothing_else); cached since shells recur across theta calls.
    """
    vals = [x for x in range(-m, m + 1) if x != 0]
    out = []
    for v in itertools.product(vals, repeat=dim):
        if max(abs(x) for x in v) != m:
            continue
        g = 0
        for x in v:
            g = math.gcd(g, x)
        if g == 1:
            out.append(v)
    arr = np.array(out, dtype=np.int64).reshape(len(out), dim)
    return arr, arr


def theta(variety: Variety, m) -> int:
    """Number of tuples of primitive all-nonzero integer vectors x_i in Z^(n+1)
    with sup-norm |x_i| = m_i solving the variety equation."""
    m = tuple(int(v) for v in m)
    if len(m) != variety.factors:
        raise ValueError("m must have one entry per factor")
    if any(mi < 1 for mi in m):
        raise ValueError("all shell radii must be >= 1")
    d = variety.degree
    dim = variety.n + 1
    # int64 is exact as long as the largest possible partial sum fits
    worst = dim * max(abs(a) for a in variety.coeffs) * math.prod(m) ** d
    exact64 = worst < 2**62
    dtype = np.int64 if exact64 else object
    a = np.array(variety.coeffs, dtype=dtype)
    shells = [_shell_vectors(dim, mi)[0] for mi in m]
    last = shells[-1]
    last_pows = last.astype(dtype) ** d
    total = 0
    for combo in itertools.product(*[range(len(s)) for s in shells[:-1]]):
        coeff = a.copy()
        for shell, idx in zip(shells[:-1], combo):
            coeff = coeff * (shell[idx].astype(dtype) ** d)
        vals = last_pows @ coeff
        total += int(np.count_nonzero(vals == 0))
    return total


def _hyperbolic_tuples(k: int, n: int):
    """Yield m in N^k with m_1 ... m_k <= n."""
    if k == 1:
        for m in range(1, n + 1):
            yield (m,)
        return
    for m1 in range(1, n + 1):
        for rest in _hyperbolic_tuples(k - 1, n // m1):
            yield (m1,) + rest


def height_count(variety: Variety, bound) -> int:
    """N(B): rational points of height <= B off the coordinate hyperplanes,
    via N(B) = 2^(-k) sum_{m_1...m_k <= B^(1/alpha)} theta(m)."""
    if bound < 1:
        raise ValueError("height bound must be >= 1")
    alpha = variety.alpha
    if alpha < 1:
        raise ValueError("height exponent n+1-d must be >= 1")
    nmax = integer_root_floor(bound, alpha)
    total = 0
    for m in _hyperbolic_tuples(variety.factors, nmax):
        total += theta(variety, m)
    k = variety.factors
    if total % (1 << k) != 0:
        raise RuntimeError(
            f"shell sum {total} not divisible by 2^{k}; enumerator bug "
            f"(variety={variety}, B={bound})"
        )
    return total >> k


def height_count_direct(variety: Variety, bound) -> int:
    """Direct enumerator for N(B) over tuples of primitive vectors (small B oracle)."""
    alpha = variety.alpha
    if alpha < 1:
        raise ValueError("height exponent n+1-d must be >= 1")
    nmax = integer_root_floor(bound, alpha)
    dim = variety.n + 1
    d = variety.degree
    a = variety.coeffs
    pool = []
    for m in range(1, nmax + 1):
        arr = _shell_vectors(dim, m)[0]
        for row in arr:
            pool.append((m, tuple(int(x) for x in row)))
    total = 0
    for tup in itertools.product(pool, repeat=variety.factors):
        norm = 1
        for m, _ in tup:
            norm *= m
        if norm > nmax:
            continue
        val = 0
        for j in range(dim):
            prod = 1
            for _, vec in tup:
                prod *= vec[j]
            val += a[j] * prod**d
        if val == 0:
            total += 1
    k = variety.factors
    if total % (1 << k) != 0:
        raise RuntimeError("direct shell sum not divisible by 2^k")
    return total >> k


# ---------------------------------------------------------------------------
# fast exact path for the bilinear case d = 1, k = 2, three coordinates
# ---------------------------------------------------------------------------


def _window_counts(offset: np.ndarray, step: int, y: int):
    """Integer n with |offset + step*n| <= y, as inclusive bounds (lo, hi)."""
    if step > 0:
        lo = -((y + offset) // step)
        hi = (y - offset) // step
    else:
        s = -step
        lo = -((y - offset) // s)
        hi = (y + offset) // s
    return lo, hi


def _count_nonzero_pairs(c1: int, c2: int, t: np.ndarray, y: int) -> np.ndarray:
    """For each target t: #{(y1,y2), 1<=|y_i|<=y, c1*y1 + c2*y2 = t}, exact int64."""
    g, u, v = ext_gcd(c1, c2)
    mask = (t % g) == 0
    tg = t // g
    s1, s2 = c2 // g, -(c1 // g)
    if s1 < 0:
        s1, s2 = -s1, -s2  # substitute n -> -n
    o1 = u * tg
    o2 = v * tg
    lo1, hi1 = _window_counts(o1, s1, y)
    lo2, hi2 = _window_counts(o2, s2, y)
    lo = np.maximum(lo1, lo2)
    hi = np.minimum(hi1, hi2)
    base = np.maximum(hi - lo + 1, 0)
    # remove y1 = 0 and y2 = 0 cases, add back the double-zero case
    n1 = -(o1 // s1)
    sub1 = ((o1 % s1) == 0) & (n1 >= lo) & (n1 <= hi)
    a2 = abs(s2)
    n2 = -(o2 // s2) if s2 != 0 else np.zeros_like(o2)
    sub2 = ((o2 % a2) == 0) & (n2 >= lo) & (n2 <= hi)
    both = (t == 0) & (lo <= 0) & (hi >= 0)
    out = base - sub1.astype(np.int64) - sub2.astype(np.int64) + both.astype(np.int64)
    out[~mask] = 0
    return out


def _count_line_solutions(c: tuple[int, int, int], y: int) -> int:
    """#{y in ([-y,-1] u [1,y])^3 : c0*y0 + c1*y1 + c2*y2 = 0}, exact."""
    if y <= 0:
        return 0
    y0 = np.arange(1, y + 1, dtype=np.int64)
    t = (-c[0]) * y0
    counts = _count_nonzero_pairs(c[1], c[2], t, y)
    # y0 -> -y0 is a bijection of solutions (negate y1, y2)
    return 2 * int(counts.sum())


@lru_cache(maxsize=64)
def _positive_shell3(m: int) -> np.ndarray:
    """(x0,x1,x2) in [1..m]^3 with max coordinate exactly m."""
    r = np.arange(1, m + 1)
    g = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    return g[g.max(axis=1) == m]


def bilinear_pair_count(coeffs: tuple[int, int, int], bound: int) -> int:
    """#{(x, y) in (Z^3)^2 : all coordinates nonzero, sum a_j x_j y_j = 0,
    |x|*|y| <= bound} with sup-norms; primitivity NOT required.

    Enumerates x up to sqrt(bound) (the form is symmetric in x <-> y) with all
    x-signs absorbed into y, and counts y per line by arithmetic-progression
    windows.
    """
    a0, a1, a2 = (int(c) for c in coeffs)
    total = 0
    for m1 in range(1, math.isqrt(bound) + 1):
        ybig = bound // m1
        for x in _positive_shell3(m1):
            c = (a0 * int(x[0]), a1 * int(x[1]), a2 * int(x[2]))
            nb = _count_line_solutions(c, ybig)
            nhi = _count_line_solutions(c, m1)
            nlo = _count_line_solutions(c, m1 - 1)
            # pairs with |y| > |x| counted twice by symmetry, |y| = |x| once
            total += 8 * (2 * (nb - nhi) + (nhi - nlo))
    return total


def _mu_square_convolution(n: int) -> list[int]:
    """Dirichlet square of the Moebius function: c2 = mu * mu, up to n."""
    mu = mobius_sieve(n)
    c2 = [0] * (n + 1)
    for a in range(1, n + 1):
        if mu[a] == 0:
            continue
        for m in range(a, n + 1, a):
            c2[m] += mu[a] * mu[m // a]
    return c2


def bilinear_theta_sum(variety: Variety, nmax: int) -> int:
    """sum over m1*m2 <= nmax of theta(m) for a bilinear 3-coordinate variety,
    via double Moebius inversion against the non-primitive pair count."""
    if variety.degree != 1 or variety.factors != 2 or variety.n != 2:
        raise ValueError("fast path requires d=1, k=2, n=2")
    coeffs = tuple(variety.coeffs)
    c2 = _mu_square_convolution(nmax)
    memo: dict[int, int] = {}
    total = 0
    for m in range(1, nmax + 1):
        if c2[m] == 0:
            continue
        q = nmax // m
        if q not in memo:
            memo[q] = bilinear_pair_count(coeffs, q)
        total += c2[m] * memo[q]
    return total


def height_count_bilinear(variety: Variety, bound) -> int:
    """N(B) for the bilinear case d=1, k=2, n=2; exact and fast up to B ~ 10^6+."""
    alpha = variety.alpha
    nmax = integer_root_floor(bound, alpha)
    total = bilinear_theta_sum(variety, nmax)
    if total % 4 != 0:
        raise RuntimeError(f"pair sum {total} not divisible by 4; counter bug")
    return total >> 2
