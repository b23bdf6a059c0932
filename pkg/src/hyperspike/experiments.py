"""End-to-end studies: exact counts against circle-method predictions.

Configuration is a flat ``key = value`` text file (lists as ``[1, 1, 1]``).
Reports carry fixed-schema rows ``scale, exact, prediction, ratio, residual``
plus a meta block (config echo, constants, fits, versions, timings); rerunning
an experiment with the same config yields byte-identical canonical output at
any thread count (timings and provenance are excluded from the canonical
payload, and all work partitions are independent of the thread count).
"""

from __future__ import annotations

import io
import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .arith import integer_root_floor, zeta
from .forms import (
    DiagonalForm,
    Variety,
    height_count,
    height_count_bilinear,
)
from .hyperbola import asymptotic_fit, ones_oracle, upsilon
from .local import (
    DensityCache,
    TruncationParams,
    predicted_constant,
    singular_integral_positive,
    t_term,
)
from .parallel import parallel_map
from .weyl import OscillatoryTable, major_arc_residual, classify_arc

MODES = ("count", "predict", "series", "integral", "hyperbola", "weyl", "full")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class CostRefusal(RuntimeError):
    """Estimated cost above the refusal threshold (CLI exit code 3)."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    mode: str = "full"
    degree: int = 1
    factors: int = 2
    coeffs: tuple[int, ...] = (1, 1, 1)
    grid: tuple[float, ...] = (10.0**3, 10.0**4, 10.0**5, 10.0**6)
    w_series: int = 10**4
    l_max: int = 4
    w_integral: float = float(2**14)
    prime_cutoff: int = 100
    box: tuple[float, ...] = ()
    qmax: int = 10
    output: str = "csv"
    cache_path: str | None = None
    threads: int = 1
    cost_limit: float = 1e10
    expected_constant: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if not self.grid:
            raise ConfigError("grid must be nonempty")
        grid = tuple(float(g) for g in self.grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("grid must be strictly increasing")
        self.grid = grid
        if self.output not in ("csv", "json"):
            raise ConfigError("output must be csv or json")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            self.form()
        except (ValueError, ConfigError) as exc:
            raise ConfigError(str(exc)) from exc

    def form(self) -> DiagonalForm:
        return DiagonalForm(self.degree, self.factors, self.coeffs)

    def variety(self) -> Variety:
        return Variety(self.coeffs, self.factors, self.degree)

    def truncation(self) -> TruncationParams:
        return TruncationParams(
            w_series=self.w_series,
            l_max=self.l_max,
            w_integral=self.w_integral,
            prime_cutoff=self.prime_cutoff,
        )


_LIST_KEYS = {"coeffs", "grid", "box"}
_INT_KEYS = {"degree", "factors", "w_series", "l_max", "prime_cutoff", "qmax", "threads"}
_FLOAT_KEYS = {"w_integral", "cost_limit", "expected_constant"}
_STR_KEYS = {"mode", "output", "cache_path"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key = value format (``#`` comments, lists in brackets)."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, rhs = line.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        if key in _LIST_KEYS:
            if not (rhs.startswith("[") and rhs.endswith("]")):
                raise ConfigError(f"line {lineno}: {key} must be a [..] list")
            items = [t.strip() for t in rhs[1:-1].split(",") if t.strip()]
            if key == "coeffs":
                values[key] = tuple(int(t) for t in items)
            else:
                values[key] = tuple(float(t) for t in items)
        elif key in _INT_KEYS:
            values[key] = int(rhs)
        elif key in _FLOAT_KEYS:
            values[key] = float(rhs)
        elif key in _STR_KEYS:
            values[key] = rhs
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def spencer_preset() -> ExperimentConfig:
    """The bilinear three-term benchmark: d=1, k=2, a=(1,1,1), height exponent 2.

    The pipeline constant for this preset evaluates in closed form to
    (33 - 6 zeta(2)) / (2 zeta(2) zeta(3)).
    """
    expected = (33.0 - 6.0 * zeta(2.0)) / (2.0 * zeta(2.0) * zeta(3.0))
    return ExperimentConfig(
        mode="full",
        degree=1,
        factors=2,
        coeffs=(1, 1, 1),
        grid=(10.0**3, 10.0**4, 10.0**5, 10.0**6),
        expected_constant=expected,
    )


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class Report:
    mode: str
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("scale,exact,prediction,ratio,residual\n")
        for row in self.rows:
            cells = []
            for key in ("scale", "exact", "prediction", "ratio", "residual"):
                v = row.get(key)
                cells.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
            out.write(",".join(cells) + "\n")
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps({"meta": self.meta, "rows": self.rows},
                          sort_keys=True, indent=1)

    def canonical(self) -> str:
        """Serialization with volatile provenance (timings, threads) removed."""
        meta = {k: v for k, v in self.meta.items() if k not in ("timings",)}
        cfg = dict(meta.get("config", {}))
        cfg.pop("threads", None)
        cfg.pop("cache_path", None)
        meta["config"] = cfg
        return json.dumps({"meta": meta, "rows": self.rows}, sort_keys=True)

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


def _config_echo(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["coeffs"] = list(config.coeffs)
    d["grid"] = list(config.grid)
    d["box"] = list(config.box)
    return d


def _num(x):
    """Coerce numpy scalars to plain Python numbers for clean serialization."""
    if x is None:
        return None
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return int(x)
    if isinstance(x, float):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def _row(scale, exact, prediction, ratio, residual) -> dict:
    return {
        "scale": _num(scale),
        "exact": _num(exact),
        "prediction": _num(prediction),
        "ratio": _num(ratio),
        "residual": _num(residual),
    }


# ---------------------------------------------------------------------------
# cost model
# ---------------------------------------------------------------------------


def estimate_cost(config: ExperimentConfig) -> float:
    """Crude elementary-operation estimate used for the refusal threshold."""
    cost = 0.0
    if config.mode in ("count", "full"):
        v = config.variety()
        for b in config.grid:
            n = integer_root_floor(b, max(v.alpha, 1))
            if config.degree == 1 and config.factors == 2 and v.n == 2:
                cost += 40.0 * n * n
            else:
                shell = (2.0 * n + 1.0) ** (v.n + 1)
                cost += shell ** config.factors
    if config.mode in ("series", "full", "predict"):
        w = config.w_series
        cost += 12.0 * w * w / 2.0 * 0.01 + 20.0 * w * math.log(w + 1)
        cost += sum(float(q) ** 2 for q in (2**config.l_max, 3**config.l_max) if q < 3000)
    if config.mode in ("integral", "full", "predict"):
        s = len(config.coeffs)
        csum = sum(abs(c) for c in config.coeffs)
        cost += 48.0 * s * csum * config.w_integral * (2 ** (s - 1) if config.degree % 2 else 1)
    if config.mode == "hyperbola":
        cost += sum(config.grid)
    if config.mode == "weyl":
        box_prod = math.prod(config.box) if config.box else 1.0
        cost += 100.0 * box_prod * 10.0
    return cost


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------


def _height_counts(config: ExperimentConfig, variety: Variety) -> list[int]:
    fast = config.degree == 1 and config.factors == 2 and variety.n == 2

    def one(b):
        if fast:
            return height_count_bilinear(variety, b)
        return height_count(variety, b)

    return parallel_map(one, config.grid, config.threads)


def _series_rows(config: ExperimentConfig) -> list[dict]:
    form = config.form()
    wmax = int(max(config.grid))
    marks = {int(g) for g in config.grid}
    rows = []
    total = 0.0
    tail_run = 0.0
    half = wmax // 2
    for q in range(1, wmax + 1):
        t = t_term(form, q)
        total += t
        if q > half:
            tail_run += t
        if q in marks:
            rows.append(_row(q, None, total, None, abs(tail_run)))
    return rows


def _integral_rows(config: ExperimentConfig) -> list[dict]:
    form = config.form()
    wmax = float(max(config.grid))
    table = OscillatoryTable(form.degree, form.factors, form.coeff_bound * wmax)
    rows = []
    for w in config.grid:
        si = singular_integral_positive(form, float(w), table=table)
        rows.append(_row(float(w), None, si.value, None, si.tail_estimate))
    return rows


def _hyperbola_rows(config: ExperimentConfig) -> tuple[list[dict], dict]:
    k = config.factors
    oracle = ones_oracle(k)
    ns = [int(g) for g in config.grid]
    vals = parallel_map(lambda n: upsilon(oracle, n, threads=1), ns, config.threads)
    rows = []
    lead = 1.0 / math.factorial(k - 1)
    for n, v in zip(ns, vals):
        pred = lead * n * math.log(n) ** (k - 1)
        rows.append(_row(n, int(v), pred, v / pred if pred else None, v - pred))
    fit_meta = {}
    if len(ns) >= k + 1 and max(ns) / min(ns) >= 10.0:
        model = asymptotic_fit(list(zip(ns, vals)), alpha=1.0, k=k)
        fit_meta = {
            "leading_coefficient": model.leading_coefficient,
            "c_h_estimate": model.c_h_estimate,
            "coefficients": [float(c) for c in model.coefficients],
            "residual_norm": model.residual_norm,
        }
    return rows, fit_meta


def _weyl_rows(config: ExperimentConfig) -> list[dict]:
    if not config.box:
        raise ConfigError("weyl mode requires a box = [...] entry")
    d = config.degree
    box = tuple(config.box)
    p = math.prod(box)
    rows = []
    idx = 0
    betas = (0.0, 1e-8, 1e-7)
    for q in range(1, config.qmax + 1):
        coprime = [a for a in range(1, q + 1) if math.gcd(a, q) == 1]
        a = coprime[0]
        for beta in betas:
            idx += 1
            alpha = a / q + beta
            res = major_arc_residual(alpha, d, box, Q=float(config.qmax))
            rows.append(_row(idx, abs(res.exact), abs(res.approx),
                             res.ratio, res.residual))
    return rows


def run_experiment(config: ExperimentConfig) -> Report:
    """Execute one experiment; deterministic given the config."""
    cost = estimate_cost(config)
    if cost > config.cost_limit:
        raise CostRefusal(
            f"estimated cost {cost:.3e} exceeds limit {config.cost_limit:.3e}"
        )
    t_start = time.perf_counter()
    timings: dict[str, float] = {}
    meta: dict = {
        "mode": config.mode,
        "config": _config_echo(config),
        "versions": {"hyperspike": __version__, "numpy": np.__version__},
    }
    cache = DensityCache(config.cache_path)
    rows: list[dict] = []

    if config.mode == "series":
        rows = _series_rows(config)
    elif config.mode == "integral":
        rows = _integral_rows(config)
    elif config.mode == "hyperbola":
        rows, fit_meta = _hyperbola_rows(config)
        if fit_meta:
            meta["fit"] = fit_meta
    elif config.mode == "weyl":
        rows = _weyl_rows(config)
    else:
        variety = config.variety()
        constant = None
        if config.mode in ("predict", "full"):
            t0 = time.perf_counter()
            pc = predicted_constant(variety, config.truncation(), cache,
                                    config.threads)
            timings["predict"] = time.perf_counter() - t0
            constant = pc.value
            meta["constant"] = {
                "value": pc.value,
                "value_eq_product": pc.value_eq_product,
                "sigma_series": pc.density.sigma_series,
                "i_plus": pc.density.i_plus,
                "e_plus": pc.density.e_plus,
                "e_full": pc.density.e_full,
                "alpha": pc.alpha,
                "zeta_alpha": pc.zeta_alpha,
                "solubility": {
                    "real": pc.density.solubility.real,
                    "positive_real": pc.density.solubility.positive_real,
                    "overall": pc.density.solubility.overall,
                    "p_adic": {str(p): v for p, v in pc.density.solubility.p_adic.items()},
                },
            }
            if config.expected_constant is not None:
                meta["constant"]["expected"] = config.expected_constant
        counts = None
        if config.mode in ("count", "full"):
            t0 = time.perf_counter()
            counts = _height_counts(config, variety)
            timings["count"] = time.perf_counter() - t0
        k = config.factors
        for i, b in enumerate(config.grid):
            exact = int(counts[i]) if counts is not None else None
            pred = None
            if constant is not None:
                pred = constant * b * math.log(b) ** (k - 1)
            ratio = None
            if exact is not None and pred:
                ratio = exact / pred
            residual = None
            if exact is not None and pred is not None:
                residual = exact - pred
            rows.append(_row(b, exact, pred, ratio, residual))
        if config.mode == "full" and counts is not None and len(counts) >= k + 1:
            # exact counts fitted to B (C' (log B)^(k-1) + ... ); leading vs C
            design = np.array(
                [[b * math.log(b) ** j for j in range(k - 1, -1, -1)]
                 for b in config.grid]
            )
            coef, *_ = np.linalg.lstsq(design, np.array(counts, float), rcond=None)
            fit = {"coefficients": [float(c) for c in coef],
                   "leading": float(coef[0])}
            if constant:
                fit["leading_over_constant"] = float(coef[0]) / constant
            meta["fit"] = fit

    timings["total"] = time.perf_counter() - t_start
    meta["timings"] = timings
    return Report(mode=config.mode, rows=rows, meta=meta)
