"""Delta sweeps, log-log rate fits and the acceptance suites."""
import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import closed_bounds, discs, oracle, schwarz, sibony
from .oracle import OracleConfig
from .config import DELTA0_DEFAULT, SEED_DEFAULT, load_threads
from .domain import BasePoint, Direction, ModelDomain
from .errors import ConstructionError, EvaluationError, InvmetError, RegimeError
from .profile import PsiProfile, parse_profile


logger = logging.getLogger(__name__)

ESTIMATORS = ("closed_form", "theorem1", "f3", "main2", "schwarz", "sibony", "oracle", "oracle2", "catalog")
CSV_HEADER = ("profile", "beta_or_c0", "delta", "xn", "xt", "gamma", "estimator", "regime", "value", "error_tag", "seconds")
MIN_FIT_POINTS = 4
DROP_FACTOR = 3.0
SLOPE_TOL = 0.05

SUITES = (
    "tangent-exact",
    "catalog",
    "sandwich",
    "normal-rate",
    "linear-rate",
    "interpolation",
    "theorem1",
    "sibony-validity",
    "thin-cusp",
    "determinism",
)


def default_deltas(n: int = 16, lo: float = 1e-4, hi: float = 1e-1) -> Tuple[float, ...]:
    return tuple(float(d) for d in np.geomspace(lo, hi, n))


@dataclass(frozen=True)
class SweepConfig:
    profile: str
    deltas: Tuple[float, ...] = field(default_factory=default_deltas)
    xn: complex = 1.0
    xt: complex = 0.0
    gamma: Optional[float] = None
    estimators: Tuple[str, ...] = ("closed_form",)
    seed: int = SEED_DEFAULT
    delta0: float = DELTA0_DEFAULT
    oracle_config: OracleConfig = field(default_factory=OracleConfig)
    timing: bool = False
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        parse_profile(self.profile)
        for delta in self.deltas:
            BasePoint(delta, self.delta0)
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ValueError(f"Unknown estimator(s): {', '.join(unknown)}")

    def direction(self, delta: float) -> Direction:
        if self.gamma is None:
            return Direction(self.xn, self.xt)
        return Direction(1.0, delta ** self.gamma)


@dataclass(frozen=True)
class SweepRecord:
    profile: str
    beta_or_c0: float
    delta: float
    xn: complex
    xt: complex
    gamma: Optional[float]
    estimator: str
    regime: str
    value: Optional[float]
    error_tag: str = ""
    seconds: float = 0.0

    @property
    def valid(self) -> bool:
        return not self.error_tag and self.value is not None and self.value > 0 and math.isfinite(self.value)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_residual: float
    n_points: int
    dropped: bool = False


def _closed_form(profile: PsiProfile, delta: float, x: Direction, config: SweepConfig) -> Tuple[float, str]:
    if profile.kind == "power":
        result = closed_bounds.power_regime(profile.param, delta, x, config.delta0)
    elif profile.kind == "linear" and profile.param == 1.0:
        result = closed_bounds.BoundResult(None, closed_bounds.main2_quantity(delta, x), "linear", False, "linear-profile")
    else:
        return closed_bounds.theorem1_quantity(profile, delta, x), "theorem1"
    value = result.upper if result.upper is not None else result.lower
    return value, result.regime


def _f3(profile: PsiProfile, delta: float, x: Direction, config: SweepConfig) -> Tuple[float, str]:
    x.require_nonzero()
    if x.n == 0.0:
        raise RegimeError("F3 needs x_N != 0")
    return closed_bounds.F3(profile, delta, x.ratio) * x.n, closed_bounds.regime_classify(profile, delta, x.ratio)


def _schwarz(profile: PsiProfile, delta: float, x: Direction, config: SweepConfig) -> Tuple[float, str]:
    bound = schwarz.kappa_lower_detail(profile, delta, x)
    return bound.value, bound.regime


def _oracle(profile: PsiProfile, delta: float, x: Direction, config: SweepConfig) -> Tuple[float, str]:
    return oracle.kappa_upper_numeric(ModelDomain(profile), delta, x, config.oracle_config).value, "upper_numeric"


def _oracle2(profile: PsiProfile, delta: float, x: Direction, config: SweepConfig) -> Tuple[float, str]:
    return oracle.kappa2_upper_numeric(ModelDomain(profile), delta, x, config.oracle_config), "upper_numeric"


def _catalog(profile: PsiProfile, delta: float, x: Direction, config: SweepConfig) -> Tuple[float, str]:
    best = discs.best_upper(profile, delta, x, config.delta0)
    if best is None:
        raise RegimeError(f"no catalog disc applies at delta={delta:g}")
    return best[0], best[1].source


_ESTIMATOR_FUNCS: Dict[str, Callable[[PsiProfile, float, Direction, SweepConfig], Tuple[float, str]]] = {
    "closed_form": _closed_form,
    "theorem1": lambda p, d, x, c: (closed_bounds.theorem1_quantity(p, d, x), "theorem1"),
    "f3": _f3,
    "main2": lambda p, d, x, c: (closed_bounds.main2_quantity(d, x), "linear"),
    "schwarz": _schwarz,
    "sibony": lambda p, d, x, c: (sibony.sibony_lower(p, d, x), "sibony"),
    "oracle": _oracle,
    "oracle2": _oracle2,
    "catalog": _catalog,
}


def _run_task(task: Tuple[SweepConfig, float, str]) -> SweepRecord:
    config, delta, estimator = task
    profile = parse_profile(config.profile)
    x = config.direction(delta)
    started = time.perf_counter()
    regime, value, error_tag = "", None, ""
    try:
        value, regime = _ESTIMATOR_FUNCS[estimator](profile, delta, x, config)
        value = float(value)
    except InvmetError as exc:
        error_tag = type(exc).__name__
        logger.debug("%s at delta=%g: %s", estimator, delta, exc)
    seconds = time.perf_counter() - started if config.timing else 0.0
    return SweepRecord(
        profile=config.profile,
        beta_or_c0=profile.param,
        delta=delta,
        xn=x.x_n,
        xt=x.x_t,
        gamma=config.gamma,
        estimator=estimator,
        regime=regime,
        value=value,
        error_tag=error_tag,
        seconds=seconds,
    )


def sweep(config: SweepConfig) -> List[SweepRecord]:
    tasks = [(config, delta, estimator) for delta in config.deltas for estimator in config.estimators]
    workers = config.workers if config.workers is not None else load_threads()
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        return [_run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, complex):
        if value.imag == 0.0:
            value = value.real
        else:
            return f"{value.real:.17g}{value.imag:+.17g}j"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def render_csv(records: Iterable[SweepRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        row = asdict(record)
        writer.writerow([_fmt(row[name]) for name in CSV_HEADER])
    return buffer.getvalue()


def write_csv(records: Iterable[SweepRecord], out_path: Path) -> Path:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8", newline="") as f:
        f.write(render_csv(records))
    return out_path


def read_csv(path: Path) -> List[SweepRecord]:
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise RuntimeError(f"{path} does not carry the sweep CSV header")
        records = []
        for row in reader:
            records.append(
                SweepRecord(
                    profile=row["profile"],
                    beta_or_c0=float(row["beta_or_c0"]),
                    delta=float(row["delta"]),
                    xn=complex(row["xn"]),
                    xt=complex(row["xt"]),
                    gamma=float(row["gamma"]) if row["gamma"] else None,
                    estimator=row["estimator"],
                    regime=row["regime"],
                    value=float(row["value"]) if row["value"] else None,
                    error_tag=row["error_tag"],
                    seconds=float(row["seconds"] or 0.0),
                )
            )
    return records


def fit_points(deltas: Sequence[float], values: Sequence[float]) -> FitResult:
    """Least squares of log value on log delta; a pre-asymptotic largest-delta outlier is dropped once."""
    pairs = sorted(zip(deltas, values))
    if len(pairs) < MIN_FIT_POINTS:
        raise EvaluationError(f"need at least {MIN_FIT_POINTS} valid points for a fit, got {len(pairs)}")
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = np.abs(y - (slope * x + intercept))
    dropped = False
    if len(pairs) > MIN_FIT_POINTS and residuals[-1] > max(DROP_FACTOR * float(np.median(residuals)), 1e-9):
        logger.info("dropping delta=%.6g from fit (residual %.3g)", pairs[-1][0], residuals[-1])
        x, y = x[:-1], y[:-1]
        slope, intercept = np.polyfit(x, y, 1)
        residuals = np.abs(y - (slope * x + intercept))
        dropped = True
    return FitResult(float(slope), float(intercept), float(np.max(residuals)), int(x.size), dropped)


def fit_loglog(records: Iterable[SweepRecord]) -> FitResult:
    valid = [r for r in records if r.valid]
    return fit_points([r.delta for r in valid], [r.value for r in valid])


@dataclass(frozen=True)
class CriterionResult:
    suite: str
    name: str
    passed: bool
    detail: str


@dataclass
class AcceptanceReport:
    results: List[CriterionResult] = field(default_factory=list)
    records: List[SweepRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def add(self, suite: str, name: str, passed: bool, detail: str) -> None:
        level = logging.INFO if passed else logging.WARNING
        logger.log(level, "%s/%s: %s (%s)", suite, name, "pass" if passed else "FAIL", detail)
        self.results.append(CriterionResult(suite, name, bool(passed), detail))

    def format_table(self) -> List[str]:
        width = max([len(f"{r.suite}/{r.name}") for r in self.results] + [9])
        lines = [f"{'criterion':<{width}}  status  detail"]
        for r in self.results:
            lines.append(f"{r.suite + '/' + r.name:<{width}}  {'pass' if r.passed else 'FAIL':<6}  {r.detail}")
        return lines


@dataclass(frozen=True)
class _Plan:
    seed: int
    quick: bool

    @property
    def oracle_config(self) -> OracleConfig:
        if self.quick:
            return OracleConfig(n_restarts=4, budget=4000, seed=self.seed)
        return OracleConfig(seed=self.seed)

    def deltas(self, lo: float = 1e-4, hi: float = 1e-1) -> Tuple[float, ...]:
        return default_deltas(5 if self.quick else 16, lo, hi)

    @property
    def grid_betas(self) -> Tuple[float, ...]:
        return (0.5, 2.0) if self.quick else (0.4, 0.5, 0.75, 1.0, 1.5, 2.0)

    @property
    def grid_deltas(self) -> Tuple[float, ...]:
        return (1e-2,) if self.quick else (1e-1, 1e-2, 1e-3, 1e-4)

    @property
    def directions(self) -> List[Direction]:
        count = 4 if self.quick else 8
        angles = np.linspace(0.0, np.pi / 2, count)
        return [Direction(math.cos(a), math.sin(a) * complex(math.cos(a), math.sin(a))) for a in angles]


def _slope_check(report: AcceptanceReport, suite: str, name: str, records: List[SweepRecord], target: float) -> None:
    try:
        fit = fit_loglog(records)
    except EvaluationError as exc:
        report.add(suite, name, False, str(exc))
        return
    report.add(suite, name, abs(fit.slope - target) <= SLOPE_TOL, f"slope {fit.slope:.4f}, target {target:.4f}")


def _rate_sweep(plan: _Plan, profile: str, estimators: Tuple[str, ...], **kwargs) -> List[SweepRecord]:
    config = SweepConfig(profile=profile, estimators=estimators, seed=plan.seed, oracle_config=plan.oracle_config, **kwargs)
    return sweep(config)


def _by(records: List[SweepRecord], estimator: str) -> List[SweepRecord]:
    return [r for r in records if r.estimator == estimator]


def _suite_tangent_exact(plan: _Plan, report: AcceptanceReport) -> None:
    profile = PsiProfile.power(2.0)
    domain = ModelDomain(profile)
    for delta in (0.04, 0.1, 0.3):
        x = Direction(min(1.0, delta / profile.inverse(delta)), 1.0)
        value = oracle.kappa_upper_numeric(domain, delta, x, plan.oracle_config).value
        report.add("tangent-exact", f"oracle@{delta:g}", abs(value - 1.0) <= 1e-3, f"value {value:.6g}")
        try:
            disc = discs.construct("D4", profile, delta, x)
            report.add("tangent-exact", f"D4@{delta:g}", disc.report.worst_margin > 0, f"margin {disc.report.worst_margin:.3g}")
        except InvmetError as exc:
            report.add("tangent-exact", f"D4@{delta:g}", False, str(exc))


def _grid(plan: _Plan):
    for beta in plan.grid_betas:
        for delta in plan.grid_deltas:
            for x in plan.directions:
                yield PsiProfile.power(beta), delta, x


def _suite_catalog(plan: _Plan, report: AcceptanceReport) -> None:
    failures, built = [], 0
    for profile, delta, x in _grid(plan):
        for catalog_id in discs.applicable(profile, delta, x):
            try:
                discs.construct(catalog_id, profile, delta, x)
                built += 1
            except ConstructionError:
                failures.append(f"{catalog_id}@{profile.literal},{delta:g}")
            except RegimeError:
                continue
    detail = f"{built} discs verified" if not failures else "violations: " + ", ".join(failures[:5])
    report.add("catalog", "admissibility", not failures, detail)


def _suite_sandwich(plan: _Plan, report: AcceptanceReport) -> None:
    violations = []
    checked = 0
    for profile, delta, x in _grid(plan):
        s_lower = sibony.sibony_lower(profile, delta, x)
        lower = max(schwarz.kappa_lower(profile, delta, x), s_lower)
        estimate = oracle.kappa_upper_numeric(ModelDomain(profile), delta, x, plan.oracle_config)
        catalog = discs.best_upper(profile, delta, x)
        upper = catalog[0] if catalog else math.inf
        checked += 1
        if not (s_lower <= lower <= estimate.value <= upper):
            violations.append(f"{profile.literal},{delta:g},({x.n:.3g},{x.t:.3g})")
    detail = f"{checked} configurations" if not violations else "violations: " + ", ".join(violations[:5])
    report.add("sandwich", "order", not violations, detail)


def _suite_normal_rate(plan: _Plan, report: AcceptanceReport) -> None:
    records = _rate_sweep(plan, "power:2", ("oracle", "schwarz"), deltas=plan.deltas())
    report.records.extend(records)
    _slope_check(report, "normal-rate", "oracle", _by(records, "oracle"), -0.75)
    _slope_check(report, "normal-rate", "schwarz", _by(records, "schwarz"), -0.75)


def _suite_linear_rate(plan: _Plan, report: AcceptanceReport) -> None:
    records = _rate_sweep(plan, "linear:1", ("oracle", "schwarz"), deltas=plan.deltas())
    report.records.extend(records)
    _slope_check(report, "linear-rate", "oracle", _by(records, "oracle"), -0.5)
    lower = _by(records, "schwarz")
    _slope_check(report, "linear-rate", "schwarz", lower, -0.5)
    ok = all(r.valid and r.value >= 0.2 / math.sqrt(r.delta) for r in lower)
    report.add("linear-rate", "explicit-constant", ok, "kappa_lower >= 0.2 delta^-1/2")


def _suite_interpolation(plan: _Plan, report: AcceptanceReport) -> None:
    small = _rate_sweep(plan, "power:0.75", ("f3", "oracle"), deltas=plan.deltas(), gamma=1.0 / 6.0)
    report.records.extend(small)
    _slope_check(report, "interpolation", "f3@1/6", _by(small, "f3"), -1.0 / 6.0)
    _slope_check(report, "interpolation", "oracle@1/6", _by(small, "oracle"), -1.0 / 6.0)
    large = _rate_sweep(plan, "power:0.75", ("oracle",), deltas=plan.deltas(), gamma=0.5)
    report.records.extend(large)
    _slope_check(report, "interpolation", "oracle@1/2", _by(large, "oracle"), -1.0 / 3.0)
    # the normal branch of F3 only wins once delta^(1/6) < 1/8
    deep = SweepConfig(
        profile="power:0.75",
        deltas=default_deltas(5 if plan.quick else 16, 1e-12, 1e-8),
        gamma=0.5,
        estimators=("f3",),
        workers=1,
    )
    _slope_check(report, "interpolation", "f3@1/2", sweep(deep), -1.0 / 3.0)


def _suite_theorem1(plan: _Plan, report: AcceptanceReport) -> None:
    profile = PsiProfile.power(2.0)
    domain = ModelDomain(profile)
    x = Direction(1.0, 0.0)
    deltas = plan.deltas()
    lower_ok, upper_ok, ratio_ok = True, True, True
    worst_ratio = 0.0
    for delta in deltas:
        q = profile.inverse(delta) / delta
        s_lower = sibony.sibony_lower(profile, delta, x)
        upper = oracle.kappa2_upper_numeric(domain, delta, x, plan.oracle_config)
        lower_ok &= s_lower >= q / (2.0 * 2.0 ** (1.0 / 1.0)) * (1 - 1e-12)
        upper_ok &= upper <= 2.0 * q + x.t + 1e-9
        worst_ratio = max(worst_ratio, upper / s_lower)
        ratio_ok &= upper / s_lower <= 10.0
    report.add("theorem1", "sibony-lower", lower_ok, "S >= psi^-1(delta)/(4 delta)")
    report.add("theorem1", "kappa2-upper", upper_ok, "kappa2 <= 2 psi^-1(delta)/delta + |x_T|")
    report.add("theorem1", "ratio", ratio_ok, f"worst ratio {worst_ratio:.4g} over {len(deltas)} deltas")


def _suite_sibony_validity(plan: _Plan, report: AcceptanceReport) -> None:
    for beta in (0.75, 2.0):
        for delta in (1e-2, 1e-3):
            tag = f"power:{beta:g}@{delta:g}"
            candidate = sibony.SibonyCandidate.build(PsiProfile.power(beta), delta)
            rng_report = sibony.check_range(candidate, 2000 if plan.quick else sibony.RANGE_SAMPLES, plan.seed)
            report.add("sibony-validity", f"range {tag}", rng_report.ok, f"u in [{rng_report.min_u:.3g}, {rng_report.max_u:.3g}]")
            psh = sibony.check_logpsh(candidate, 200 if plan.quick else 1000, seed=plan.seed)
            report.add("sibony-validity", f"logpsh {tag}", psh.ok, f"{psh.n_violations} violations / {psh.n_checks}")
            expected = candidate.c2 / (4.0 * delta * delta)
            try:
                value = sibony.levi_form(candidate).value
                ok = abs(value - expected) <= 1e-3 * expected
                detail = f"{value:.6g} vs {expected:.6g}"
            except EvaluationError as exc:
                ok, detail = False, str(exc)
            report.add("sibony-validity", f"levi {tag}", ok, detail)


def _suite_thin_cusp(plan: _Plan, report: AcceptanceReport) -> None:
    records = _rate_sweep(plan, "power:0.4", ("oracle",), deltas=plan.deltas())
    report.records.extend(records)
    c1 = max(1.0 / (1.0 - DELTA0_DEFAULT), (1.0 + math.sqrt(5.0)) / 2.0)
    values = [r.value for r in records if r.valid]
    inside = bool(values) and all(1.0 - 1e-12 <= v <= c1 + 1e-9 for v in values)
    report.add("thin-cusp", "bracket", inside, f"values in [1, {c1:g}]")
    _slope_check(report, "thin-cusp", "flat", records, 0.0)


def _suite_determinism(plan: _Plan, report: AcceptanceReport) -> None:
    config = SweepConfig(
        profile="power:2",
        deltas=default_deltas(4, 1e-3, 1e-1),
        estimators=("closed_form", "schwarz", "sibony", "oracle"),
        seed=plan.seed,
        oracle_config=OracleConfig(n_restarts=2, budget=1000, seed=plan.seed),
    )
    first, second = render_csv(sweep(config)), render_csv(sweep(config))
    report.add("determinism", "csv", first == second, f"{len(first.encode('utf-8'))} bytes")


_SUITE_FUNCS: Dict[str, Callable[[_Plan, AcceptanceReport], None]] = {
    "tangent-exact": _suite_tangent_exact,
    "catalog": _suite_catalog,
    "sandwich": _suite_sandwich,
    "normal-rate": _suite_normal_rate,
    "linear-rate": _suite_linear_rate,
    "interpolation": _suite_interpolation,
    "theorem1": _suite_theorem1,
    "sibony-validity": _suite_sibony_validity,
    "thin-cusp": _suite_thin_cusp,
    "determinism": _suite_determinism,
}


def accept(suite_id: str = "all", seed: int = SEED_DEFAULT, quick: bool = False) -> AcceptanceReport:
    if suite_id != "all" and suite_id not in _SUITE_FUNCS:
        raise ValueError(f"Unknown suite {suite_id!r}; expected all or one of {', '.join(SUITES)}")
    plan = _Plan(seed=seed, quick=quick)
    report = AcceptanceReport()
    for name in SUITES if suite_id == "all" else (suite_id,):
        started = time.perf_counter()
        _SUITE_FUNCS[name](plan, report)
        logger.info("suite %s finished in %.1fs", name, time.perf_counter() - started)
    return report


def record_fields() -> Tuple[str, ...]:
    return tuple(f.name for f in fields(SweepRecord))
