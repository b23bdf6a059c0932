"""Local densities and the Hardy-Littlewood prediction for diagonal equations.

For a form sum_j c_j <x_j>^d = 0 the non-archimedean density is the singular
series

    S(c) = sum_q T_c(q),    T_c(q) = q^(-ks) sum_{(a;q)=1} prod_j S_k(q, a c_j),

an Euler product of local factors E_p(c) = sum_l T_c(p^l); the finite-level
identity sum_{l<=L} T_c(p^l) = p^(L(1-ks)) Phi_c(p^L) against the exact
congruence count Phi is used as a two-route cross-check.  The archimedean
density of positive solutions is the singular integral

    I+(c) = int_R prod_j V_k(c_j beta) d beta,

truncated at a cutoff W with a doubling-based tail estimate.  Densities are
assembled parity-wise:

    E+(c) = S(c) I+(c),
    E(c)  = 2^(k s) E+(c)                        (d even),
    E(c)  = 2^((k-1) s) S(c) sum_eta I+(eta c)   (d odd),

the odd-d factor being forced by the exact sign decomposition of the box
counts (each term's k coordinate signs realize a prescribed product sign in
2^(k-1) ways).  The predicted height-count constant of the associated variety
is then

    C = E(a) / (2^k (k-1)! zeta(n+1-d)^k),

equivalently S(a) I(a) / (2^k (k-1)! zeta(n+1-d)^k) with I the parity-assembled
integral; both expressions are computed and reported.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import os
import threading
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import primes_upto, valuation, zeta
from .forms import DiagonalForm, Variety
from .parallel import parallel_map
from .weyl import N0_RECORDS, OscillatoryTable, _value_distribution, _sum_table

# ---------------------------------------------------------------------------
# configuration and result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationParams:
    """Truncation knobs for the series and integral evaluations."""

    w_series: int = 10**4
    l_max: int = 4
    w_integral: float = float(2**14)
    prime_cutoff: int = 100

    def __post_init__(self):
        if self.w_series < 1 or self.l_max < 1 or self.prime_cutoff < 2:
            raise ValueError("truncation parameters must be positive")
        if self.w_integral < 3:
            raise ValueError("w_integral must be >= 3")


@dataclass(frozen=True)
class SolubilityConfig:
    """Lifting exponents and search caps for the p-adic decision."""

    modulus_cells_cap: int = 1 << 14
    extra_primes: tuple[int, ...] = ()

    @staticmethod
    def hensel_gamma(p: int, d: int) -> int:
        """Sufficient stabilization exponent for d-th powers of units mod p^gamma."""
        return 2 * valuation(d, p) + 1 if d % p == 0 else 1


@dataclass
class SeriesResult:
    value: float
    w: int
    tail_indicator: float


@dataclass
class EulerFactor:
    p: int
    value: float
    level: int
    series_value: float
    stabilized: bool


@dataclass
class SingularIntegral:
    value: float          # extrapolation-guarded estimate of I+(c)
    truncated: float      # I+(c, W)
    w: float
    tail_estimate: float


@dataclass
class SolubilityReport:
    real: bool
    positive_real: bool
    p_adic: dict[int, bool | None]
    overall: bool | None

    def obstructions(self) -> list[int]:
        return [p for p, ok in self.p_adic.items() if ok is False]


@dataclass
class DensityReport:
    form: DiagonalForm
    sigma_series: float
    sigma_tail: float
    euler_factors: list[EulerFactor]
    i_plus: float
    i_plus_signed: dict[tuple[int, ...], float]
    e_plus: float
    e_full: float
    solubility: SolubilityReport
    truncation: TruncationParams
    error_estimates: dict[str, float] = field(default_factory=dict)


@dataclass
class PredictedConstant:
    value: float
    value_eq_product: float   # S(a) I(a) / (2^k (k-1)! zeta^k), same chain
    density: DensityReport
    alpha: int
    zeta_alpha: float
    meets_moment_threshold: bool


# ---------------------------------------------------------------------------
# cache (line-oriented: "phi <hash> <q> <count>" / "ip <hash> <W> <value>")
# ---------------------------------------------------------------------------


def form_hash(form: DiagonalForm) -> str:
    return hashlib.sha256(form.key().encode()).hexdigest()[:16]


class DensityCache:
    """Value-faithful file cache for congruence counts and singular integrals."""

    def __init__(self, path: str | None):
        self.path = path
        self._lock = threading.Lock()
        self.phi: dict[tuple[str, int], int] = {}
        self.ip: dict[tuple[str, float], float] = {}
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    parts = line.split()
                    if len(parts) != 4:
                        continue
                    kind, h, key, val = parts
                    if kind == "phi":
                        self.phi[(h, int(key))] = int(val)
                    elif kind == "ip":
                        self.ip[(h, float(key))] = float(val)

    def _append(self, line: str):
        if not self.path:
            return
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def get_phi(self, h: str, q: int):
        return self.phi.get((h, q))

    def put_phi(self, h: str, q: int, count: int):
        if (h, q) not in self.phi:
            self.phi[(h, q)] = count
            self._append(f"phi {h} {q} {count}")

    def get_ip(self, h: str, w: float):
        return self.ip.get((h, float(w)))

    def put_ip(self, h: str, w: float, value: float):
        key = (h, float(w))
        if key not in self.ip:
            self.ip[key] = value
            self._append(f"ip {h} {w!r} {value!r}")


# ---------------------------------------------------------------------------
# singular series
# ---------------------------------------------------------------------------


def t_term(form: DiagonalForm, q: int) -> float:
    """T_c(q) = q^(-ks) sum over units a of prod_j S_k(q, a c_j); real."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if q == 1:
        return 1.0
    k, s = form.factors, form.terms
    table = _sum_table(q, form.degree, k)
    a = np.arange(1, q, dtype=np.int64)
    a = a[np.gcd(a, q) == 1]
    prod = np.ones(len(a), dtype=complex)
    for c in form.coeffs:
        prod *= table[(a * c) % q]
    total = prod.sum()
    scale = float(q) ** (k * s)
    abs_scale = float(np.abs(prod).sum()) / scale
    value = float(total.real) / scale
    if abs(total.imag) / scale > 1e-12 * max(1.0, abs_scale):
        raise ArithmeticError(
            f"T_c({q}) has imaginary residue {total.imag / scale:.3e}; bug suspected"
        )
    return value


def truncated_singular_series(form: DiagonalForm, w: int) -> SeriesResult:
    """S(c, W) = sum_{q <= W} T_c(q), with a Cauchy-style tail indicator:
    the largest magnitude of a partial increment sum over (W/2, W]."""
    if w < 1:
        raise ValueError("W must be >= 1")
    if form.terms <= 2 * form.degree:
        warnings.warn("s <= 2d: singular series convergence is not guaranteed")
    total = 0.0
    tail_running = 0.0
    tail_max = 0.0
    half = w // 2
    for q in range(1, w + 1):
        t = t_term(form, q)
        total += t
        if q > half:
            tail_running += t
            tail_max = max(tail_max, abs(tail_running))
    return SeriesResult(value=total, w=w, tail_indicator=tail_max)


# ---------------------------------------------------------------------------
# congruence counts and Euler factors
# ---------------------------------------------------------------------------


def _value_distribution_exact(q: int, d: int, k: int) -> list[int]:
    """Exact integer D[w] = #{x in (Z/q)^k : <x>^d = w (mod q)}."""
    dist = _value_distribution(q, d, k)  # float64, exact below 2^53
    return [int(round(x)) for x in dist]


def _scaled_distribution(dist: list[int], c: int, q: int) -> list[int]:
    out = [0] * q
    for v, n in enumerate(dist):
        if n:
            out[(c * v) % q] += n
    return out


def _add_convolve(a: list[int], b: list[int], q: int) -> list[int]:
    out = [0] * q
    for v1, n1 in enumerate(a):
        if n1:
            for v2, n2 in enumerate(b):
                if n2:
                    out[(v1 + v2) % q] += n1 * n2
    return out


def congruence_count(form: DiagonalForm, q: int,
                     cache: DensityCache | None = None) -> int:
    """Phi_c(q): incongruent solutions of sum c_j <x_j>^d = 0 mod q, exact.

    Built from the mod-q value distribution of c_j <x>^d (k-fold multiplicative
    structure), then an s-fold additive convolution joined in the middle; cost
    is polynomial in q.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if q == 1:
        return 1
    if q > 10**4:
        raise ValueError("congruence modulus too large for the exact kernel")
    h = form_hash(form) if cache else ""
    if cache:
        hit = cache.get_phi(h, q)
        if hit is not None:
            return hit
    base = _value_distribution_exact(q, form.degree, form.factors)
    terms = [_scaled_distribution(base, c, q) for c in form.coeffs]
    half = (len(terms) + 1) // 2
    left = terms[0]
    for t in terms[1:half]:
        left = _add_convolve(left, t, q)
    right = [1] + [0] * (q - 1)
    for t in terms[half:]:
        right = _add_convolve(right, t, q)
    total = sum(left[v] * right[(-v) % q] for v in range(q))
    if cache:
        cache.put_phi(h, q, total)
    return total


def euler_factor(form: DiagonalForm, p: int, l_max: int = 4,
                 cache: DensityCache | None = None) -> EulerFactor:
    """E_p(c) via p^(L(1-ks)) Phi_c(p^L) at the largest feasible L <= l_max,
    cross-checked against the partial series sum_{l <= L} T_c(p^l)."""
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    ks = form.factors * form.terms
    values = [1.0]
    level = 0
    for level_try in range(1, l_max + 1):
        q = p**level_try
        if q > 3000:
            break
        phi = congruence_count(form, q, cache)
        exact = Fraction(phi, p ** (level_try * (ks - 1)))
        values.append(float(exact))
        level = level_try
    value = values[-1]
    series = math.fsum(t_term(form, p**l) for l in range(0, level + 1))
    if abs(series - value) > 1e-9 * max(1.0, abs(value)):
        raise ArithmeticError(
            f"Euler factor mismatch at p={p}: density {value!r} vs series {series!r}"
        )
    stabilized = level >= 1 and abs(values[-1] - values[-2]) <= 1e-8 * max(1.0, abs(values[-1]))
    return EulerFactor(p=p, value=value, level=level, series_value=series,
                       stabilized=stabilized)


# ---------------------------------------------------------------------------
# singular integral
# ---------------------------------------------------------------------------


def _integral_panel_sums(form: DiagonalForm, w: float,
                         table: OscillatoryTable | None = None):
    """Gauss-Legendre panel contributions to int_0^W prod_j V_k(c_j b) db.

    Returns (panel_values, edges, table): panel_values[i] integrates one panel,
    so partial sums give the truncated integral at any panel boundary.
    """
    csum = sum(abs(c) for c in form.coeffs)
    width = 0.5 / csum
    npanels = int(math.ceil(w / width / 4.0)) * 4  # multiple of 4 for W/4, W/2
    width = w / npanels
    if table is None:
        table = OscillatoryTable(form.degree, form.factors,
                                 max(abs(c) for c in form.coeffs) * w)
    glx, glw = np.polynomial.legendre.leggauss(12)
    edges = np.arange(npanels + 1) * width
    mids = edges[:-1][:, None] + (glx[None, :] + 1.0) * (width / 2.0)
    nodes = mids.ravel()
    prod = np.ones(nodes.size, dtype=complex)
    vals_cache: dict[int, np.ndarray] = {}
    for c in form.coeffs:
        mag = abs(c)
        if mag not in vals_cache:
            vals_cache[mag] = table.values(mag * nodes)
        v = vals_cache[mag]
        prod = prod * (np.conj(v) if c < 0 else v)
    contrib = prod.real.reshape(npanels, 12) @ glw * (width / 2.0)
    return contrib, edges, table


def singular_integral_positive(form: DiagonalForm, w_integral: float | None = None,
                               cache: DensityCache | None = None,
                               table: OscillatoryTable | None = None) -> SingularIntegral:
    """I+(c, W) = int_{-W}^{W} prod_j V_k(c_j beta) d beta (real-symmetrized:
    2 Re on [0, W]) with a doubling-based tail estimate."""
    trunc = TruncationParams()
    w = float(w_integral if w_integral is not None else trunc.w_integral)
    if w < 3:
        raise ValueError("W must be >= 3")
    if form.terms <= 2 * form.degree:
        warnings.warn("s <= 2d: singular integral convergence is not guaranteed")
    h = form_hash(form) if cache else ""
    if cache:
        hit = cache.get_ip(h, w)
        if hit is not None:
            return SingularIntegral(value=hit, truncated=hit, w=w, tail_estimate=0.0)
    contrib, edges, _ = _integral_panel_sums(form, w, table)
    partial = np.cumsum(contrib)
    n = len(contrib)
    i_full = 2.0 * float(partial[-1])
    i_half = 2.0 * float(partial[n // 2 - 1])
    i_quarter = 2.0 * float(partial[n // 4 - 1])
    d1 = i_half - i_quarter
    d2 = i_full - i_half
    tail = abs(d2)
    value = i_full
    if abs(d2) > 0 and abs(d1) > abs(d2):
        r = d1 / d2
        if 1.5 <= r <= 8.0:  # geometric tail; Richardson step
            value = i_full + d2 / (r - 1.0)
    if cache:
        cache.put_ip(h, w, value)
    return SingularIntegral(value=value, truncated=i_full, w=w, tail_estimate=tail)


# ---------------------------------------------------------------------------
# solubility
# ---------------------------------------------------------------------------


def _padic_soluble(form: DiagonalForm, p: int, config: SolubilityConfig) -> bool | None:
    """Decide nontrivial solubility of sum c_j y_j^d = 0 over Q_p.

    Test: a solution mod p^m with at least one unit coordinate, where
    m = 2 (v_p(d) + max_j v_p(c_j)) + 1.  A primitive Z_p solution reduces to
    such a witness, and conversely the unit coordinate lifts by Newton since
    m exceeds twice the derivative valuation.  Counts come from additive
    convolutions of per-term value distributions, split into unit / non-unit
    coordinate classes.  Returns None when the modulus exceeds the search cap.
    """
    d = form.degree
    vmax = valuation(d, p) + max(valuation(c, p) for c in form.coeffs)
    m = 2 * vmax + 1
    q = p**m
    if q > config.modulus_cells_cap:
        return None
    # per-term distributions of c_j y^d mod q, all y and non-unit y
    dist_all = []
    dist_nonunit = []
    for c in form.coeffs:
        da = [0] * q
        dn = [0] * q
        for y in range(q):
            v = (c * pow(y, d, q)) % q
            da[v] += 1
            if y % p == 0:
                dn[v] += 1
        dist_all.append(da)
        dist_nonunit.append(dn)

    def zero_count(dists):
        acc = [1] + [0] * (q - 1)
        for t in dists:
            acc = _add_convolve(acc, t, q)
        return acc[0]

    return zero_count(dist_all) > zero_count(dist_nonunit)


def solubility_report(form: DiagonalForm,
                      config: SolubilityConfig | None = None,
                      prime_cutoff: int = 100) -> SolubilityReport:
    """Per-place solubility verdicts for sum c_j y_j^d = 0.

    Real: any odd d, else mixed coefficient signs.  p-adic: tested for all
    p <= prime_cutoff plus every p | d prod c_j (the only possible obstructions
    for large s; documented heuristic, not claimed exhaustive).
    """
    config = config or SolubilityConfig()
    mixed = len({c > 0 for c in form.coeffs}) == 2
    real = (form.degree % 2 == 1) or mixed
    positive_real = mixed
    bad = set(primes_upto(prime_cutoff))
    prod = form.degree
    for c in form.coeffs:
        prod *= abs(c)
    for p in primes_upto(min(prod, 10**6)) if prod < 10**6 else primes_upto(1000):
        if prod % p == 0:
            bad.add(p)
    bad.update(config.extra_primes)
    verdicts: dict[int, bool | None] = {}
    for p in sorted(bad):
        verdicts[p] = _padic_soluble(form, p, config)
    if not real:
        overall: bool | None = False
    elif any(v is False for v in verdicts.values()):
        overall = False
    elif any(v is None for v in verdicts.values()):
        overall = None
    else:
        overall = True
    return SolubilityReport(real=real, positive_real=positive_real,
                            p_adic=verdicts, overall=overall)


# ---------------------------------------------------------------------------
# assembled densities and the predicted constant
# ---------------------------------------------------------------------------


def assemble_density(form: DiagonalForm, trunc: TruncationParams | None = None,
                     cache: DensityCache | None = None,
                     threads: int = 1) -> DensityReport:
    """Full density report: S, Euler factors, I+, E+ = S I+, and the parity
    assembly E (even d: 2^(ks) E+; odd d: 2^((k-1)s) S sum_eta I+(eta c))."""
    trunc = trunc or TruncationParams()
    s = form.terms
    k = form.factors
    if s <= max(2 * form.degree, N0_RECORDS.get(form.degree, 2 * form.degree)):
        warnings.warn("term count below the moment threshold; asymptotic claims "
                      "do not apply (densities still computed)")
    series = truncated_singular_series(form, trunc.w_series)
    small_primes = [p for p in primes_upto(min(trunc.prime_cutoff, 30))]
    factors = parallel_map(
        lambda p: euler_factor(form, p, trunc.l_max, cache), small_primes, threads
    )
    table = OscillatoryTable(form.degree, form.factors,
                             form.coeff_bound * trunc.w_integral)
    base_integral = singular_integral_positive(form, trunc.w_integral, cache, table)
    i_signed: dict[tuple[int, ...], float] = {}
    if form.degree % 2 == 1:
        # I+(-c) = I+(c): walk sign vectors with eta_1 = +1 and double
        signs_list = [(1,) + rest for rest in itertools.product((1, -1), repeat=s - 1)]

        def signed_integral(signs):
            if all(e > 0 for e in signs):
                return base_integral.value
            return singular_integral_positive(form.scaled(signs), trunc.w_integral,
                                              cache, table).value

        vals = parallel_map(signed_integral, signs_list, threads)
        for signs, v in zip(signs_list, vals):
            i_signed[signs] = v
            i_signed[tuple(-e for e in signs)] = v
        sign_sum = math.fsum(i_signed.values())
        e_full = 2.0 ** ((k - 1) * s) * series.value * sign_sum
    else:
        i_signed[tuple([1] * s)] = base_integral.value
        e_full = 2.0 ** (k * s) * series.value * base_integral.value
    e_plus = series.value * base_integral.value
    solubility = solubility_report(form, prime_cutoff=trunc.prime_cutoff)
    # vanishing densities may come out negative within the quadrature budget
    neg_tol = 1e-8 + 100.0 * abs(series.value) * base_integral.tail_estimate
    if e_plus < -neg_tol or e_full < -neg_tol * 2.0 ** (k * s):
        raise ArithmeticError("assembled density is negative beyond tolerance")
    return DensityReport(
        form=form,
        sigma_series=series.value,
        sigma_tail=series.tail_indicator,
        euler_factors=factors,
        i_plus=base_integral.value,
        i_plus_signed=i_signed,
        e_plus=e_plus,
        e_full=e_full,
        solubility=solubility,
        truncation=trunc,
        error_estimates={
            "series_tail": series.tail_indicator,
            "integral_tail": base_integral.tail_estimate,
        },
    )


def assembled_integral(report: DensityReport) -> float:
    """The parity-assembled integral I(c) with E(c) = S(c) I(c)."""
    form = report.form
    k, s = form.factors, form.terms
    if form.degree % 2 == 1:
        return 2.0 ** ((k - 1) * s) * math.fsum(report.i_plus_signed.values())
    return 2.0 ** (k * s) * report.i_plus


def predicted_constant(variety: Variety, trunc: TruncationParams | None = None,
                       cache: DensityCache | None = None,
                       threads: int = 1) -> PredictedConstant:
    """Leading constant C of the height count N(B) ~ C B Q(log B):

        C = E(a) / (2^k (k-1)! zeta(n+1-d)^k).
    """
    alpha = variety.alpha
    if alpha <= 1:
        raise ValueError("zeta pole: need n + 1 - d >= 2 for the height constant")
    d = variety.degree
    n = variety.n
    threshold = N0_RECORDS.get(d)
    meets = threshold is not None and n >= threshold
    if not meets:
        warnings.warn("n below the moment-threshold table; constant computed "
                      "anyway, asymptotic validity not covered")
    form = variety.form()
    density = assemble_density(form, trunc, cache, threads)
    k = variety.factors
    z = zeta(float(alpha))
    denom = 2.0**k * math.factorial(k - 1) * z**k
    if density.solubility.overall is False or not density.solubility.real:
        value = 0.0
        product_value = 0.0
    else:
        value = density.e_full / denom
        product_value = density.sigma_series * assembled_integral(density) / denom
    return PredictedConstant(
        value=value,
        value_eq_product=product_value,
        density=density,
        alpha=alpha,
        zeta_alpha=z,
        meets_moment_threshold=meets,
    )
