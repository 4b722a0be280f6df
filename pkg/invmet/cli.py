import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import closed_bounds, discs, experiments, oracle, schwarz, sibony
from .config import RunConfig, build_run_config, load_config_file
from .domain import Direction, ModelDomain
from .errors import ConstructionError, EvaluationError, InvmetError, RegimeError
from .profile import PsiProfile, parse_profile


BOUND_NAMES = ("theorem1", "bidisc", "normal", "regime", "sibony", "schwarz", "catalog")

_POINT_KEYS = ("profile", "delta", "delta0", "xn", "xt", "gamma", "seed")
_ORACLE_KEYS = ("degree", "restarts", "budget")
ECHO_KEYS: Dict[str, Tuple[str, ...]] = {
    "bounds": _POINT_KEYS + ("only",),
    "disc": _POINT_KEYS + ("catalog",),
    "sibony": _POINT_KEYS + ("centers",),
    "oracle": _POINT_KEYS + _ORACLE_KEYS + ("kappa2", "indicatrix"),
    "sweep": ("profile", "deltas", "delta0", "xn", "xt", "gamma", "estimators", "seed")
    + _ORACLE_KEYS
    + ("out", "timing"),
    "accept": ("suite", "seed", "quick", "out"),
}


def _profile_literal(value: str) -> str:
    try:
        parse_profile(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return value


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--profile", type=_profile_literal, help="power:BETA or linear:C0")
    parser.add_argument("--delta", type=float, help="Base point p_delta = (-delta, 0)")
    parser.add_argument("--delta0", type=float, help="Upper end of the admissible delta range")
    parser.add_argument("--xn", type=complex, help="Normal component x_N")
    parser.add_argument("--xt", type=complex, help="Tangential component x_T")
    parser.add_argument("--seed", type=int, help="Seed for every random draw")
    parser.add_argument("--debug", action="store_true", help="Enable debug output")


def _add_oracle_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--degree", type=int, help="Disc polynomial degree (1..4)")
    parser.add_argument("--restarts", type=int, help="Nelder-Mead restarts per bisection step")
    parser.add_argument("--budget", type=int, help="Total margin evaluations")


def _build_bounds_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invmet bounds", description="Closed-form and certified bounds at p_delta.")
    _add_common(parser)
    parser.add_argument("--only", help=f"Comma list of {', '.join(BOUND_NAMES)}")
    return parser


def _build_disc_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invmet disc", description="Build and verify catalog discs.")
    parser.add_argument("action", choices=("verify", "list"))
    _add_common(parser)
    parser.add_argument("--catalog", help="Catalog id (D1..D10)")
    return parser


def _build_sibony_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invmet sibony", description="Sibony candidate constants and checks.")
    _add_common(parser)
    parser.add_argument("--centers", type=int, help="Circle centers for the log-psh check")
    return parser


def _build_oracle_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invmet oracle", description="Numerical upper bound for kappa.")
    _add_common(parser)
    _add_oracle_flags(parser)
    parser.add_argument("--kappa2", action="store_true", default=None, help="Also bound kappa^(2) over splittings")
    parser.add_argument("--indicatrix", type=int, metavar="N", help="Print N indicatrix slice samples")
    return parser


def _build_sweep_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invmet sweep", description="Sweep estimators over a delta grid.")
    _add_common(parser)
    _add_oracle_flags(parser)
    parser.add_argument("--estimators", help=f"Comma list of {', '.join(experiments.ESTIMATORS)}")
    parser.add_argument("--deltas", help="LO:HI:N geometric grid or a comma list (default 1e-4:1e-1:16)")
    parser.add_argument("--gamma", type=float, help="Use X(delta) = (1, delta^gamma)")
    parser.add_argument("--out", help="CSV output path")
    parser.add_argument("--timing", action="store_true", default=None, help="Record wall time per point")
    return parser


def _build_fit_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invmet fit", description="Log-log slope fits over a sweep CSV.")
    parser.add_argument("input", help="Sweep CSV")
    parser.add_argument("--estimator", help="Fit this estimator only")
    parser.add_argument("--debug", action="store_true", help="Enable debug output")
    return parser


def _build_accept_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invmet accept", description="Run the acceptance suites.")
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--suite", choices=("all",) + experiments.SUITES)
    parser.add_argument("--seed", type=int, help="Seed for every random draw")
    parser.add_argument("--quick", action="store_true", default=None, help="Shrink grids for a smoke run")
    parser.add_argument("--out", help="CSV output path for the rate sweeps")
    parser.add_argument("--debug", action="store_true", help="Enable debug output")
    return parser


def _configure_logging(debug: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _resolve(args: argparse.Namespace, command: str) -> RunConfig:
    file_values = load_config_file(Path(args.config)) if getattr(args, "config", None) else {}
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "debug")}
    config = build_run_config(file_values, overrides)
    parse_profile(config.profile)
    for line in config.echo_lines(ECHO_KEYS[command]):
        print(line)
    print("")
    return config


def _direction(config: RunConfig, delta: Optional[float] = None) -> Direction:
    if config.gamma is not None:
        return Direction(1.0, (config.delta if delta is None else delta) ** config.gamma)
    return Direction(config.xn, config.xt)


def _oracle_config(config: RunConfig) -> oracle.OracleConfig:
    return oracle.OracleConfig(degree=config.degree, n_restarts=config.restarts, budget=config.budget, seed=config.seed)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.5g}"


def _regime_line(profile: PsiProfile, config: RunConfig, x: Direction) -> str:
    if profile.kind != "power":
        raise RegimeError(f"regime table covers power profiles only, got {profile.literal}")
    result = closed_bounds.power_regime(profile.param, config.delta, x, config.delta0)
    known = "" if result.constants_known else " (constants unknown)"
    return f"{result.regime} [{_fmt(result.lower)}, {_fmt(result.upper)}] via {result.source}{known}"


def _catalog_line(profile: PsiProfile, config: RunConfig, x: Direction) -> str:
    best = discs.best_upper(profile, config.delta, x, config.delta0)
    if best is None:
        raise RegimeError("no catalog disc applies")
    return f"{_fmt(best[0])} via {best[1].source}"


def _bounds_command(args: argparse.Namespace) -> int:
    config = _resolve(args, "bounds")
    profile = parse_profile(config.profile)
    x = _direction(config).require_nonzero()
    wanted = BOUND_NAMES if not config.only else tuple(s.strip() for s in config.only.split(","))
    unknown = [name for name in wanted if name not in BOUND_NAMES]
    if unknown:
        raise ValueError(f"Unknown bound name(s): {', '.join(unknown)}")
    rows: Dict[str, Tuple[str, Callable[[], str]]] = {
        "theorem1": ("comparison quantity", lambda: _fmt(closed_bounds.theorem1_quantity(profile, config.delta, x))),
        "bidisc": ("bidisc lower", lambda: _fmt(closed_bounds.bidisc_bound(x))),
        "normal": ("normal lower", lambda: _fmt(closed_bounds.main3_bounds(profile, config.delta, x).lower)),
        "regime": ("regime", lambda: _regime_line(profile, config, x)),
        "sibony": ("Sibony lower", lambda: _fmt(sibony.sibony_lower(profile, config.delta, x))),
        "schwarz": ("Schwarz lower", lambda: _schwarz_line(profile, config.delta, x)),
        "catalog": ("catalog upper", lambda: _catalog_line(profile, config, x)),
    }
    width = max(len(rows[name][0]) for name in wanted)
    for name in wanted:
        label, compute = rows[name]
        try:
            text = compute()
        except InvmetError as exc:
            text = f"n/a ({exc})"
        print(f"{label:<{width}}  {text}")
    return 0


def _schwarz_line(profile: PsiProfile, delta: float, x: Direction) -> str:
    bound = schwarz.kappa_lower_detail(profile, delta, x)
    return f"{_fmt(bound.value)} via {bound.regime}"


def _print_report(report: discs.AdmissibilityReport) -> None:
    print(f"{'samples':<14}{report.n_samples}")
    print(f"{'worst margin':<14}{report.worst_margin:.6g}")
    if report.first_violation is not None:
        zeta, reason = report.first_violation
        print(f"{'violation':<14}zeta = {zeta:.6g}: {reason}")
    print(f"{'status':<14}{'ok' if report.ok else 'FAIL'}")


def _disc_command(args: argparse.Namespace) -> int:
    config = _resolve(args, "disc")
    profile = parse_profile(config.profile)
    x = _direction(config).require_nonzero()
    if args.action == "list":
        for catalog_id in discs.applicable(profile, config.delta, x, config.delta0):
            print(catalog_id)
        return 0
    if not config.catalog:
        raise ValueError("disc verify needs --catalog")
    print(f"{'catalog':<14}{config.catalog}")
    try:
        disc = discs.construct(config.catalog, profile, config.delta, x, config.delta0)
    except ConstructionError as exc:
        if exc.witness is not None:
            _print_report(exc.witness)
        print(f"Error: {exc}", file=sys.stderr)
        return 1
    print(f"{'radius':<14}{disc.nominal_radius:.6g}")
    print(f"{'lam':<14}{disc.lam:.6g}")
    _print_report(disc.report)
    print(f"{'upper':<14}{discs.implied_upper(disc, x):.6g}")
    return 0


def _sibony_command(args: argparse.Namespace) -> int:
    config = _resolve(args, "sibony")
    profile = parse_profile(config.profile)
    candidate = sibony.SibonyCandidate.build(profile, config.delta)
    for name in ("c1", "c2", "c3", "c4"):
        print(f"{name.upper():<14}{getattr(candidate, name):.6g}")
    x = _direction(config).require_nonzero()
    print(f"{'lower':<14}{sibony.sibony_lower(profile, config.delta, x):.6g}")
    try:
        levi = sibony.levi_form(candidate)
        print(f"{'levi (1,0)':<14}{levi.value:.6g} (C2/(4 delta^2) = {candidate.c2 / (4 * config.delta ** 2):.6g})")
    except EvaluationError as exc:
        print(f"{'levi (1,0)':<14}n/a ({exc})")
    rng_report = sibony.check_range(candidate, seed=config.seed)
    print(f"{'range':<14}[{rng_report.min_u:.6g}, {rng_report.max_u:.6g}] {'ok' if rng_report.ok else 'FAIL'}")
    psh = sibony.check_logpsh(candidate, n_centers=config.centers, seed=config.seed)
    print(f"{'log-psh':<14}{psh.n_violations} violations / {psh.n_checks} circles, worst slack {psh.worst_slack:.3g}")
    return 0 if psh.ok and rng_report.ok else 1


def _oracle_command(args: argparse.Namespace) -> int:
    config = _resolve(args, "oracle")
    profile = parse_profile(config.profile)
    domain = ModelDomain(profile)
    x = _direction(config).require_nonzero()
    settings = _oracle_config(config)
    estimate = oracle.kappa_upper_numeric(domain, config.delta, x, settings)
    lower, catalog_value = estimate.bracketing
    print(f"{'value':<14}{estimate.value:.8g}")
    print(f"{'bracket':<14}[{lower:.8g}, {_fmt(catalog_value)}]")
    print(f"{'best disc':<14}{estimate.best_disc.source}, radius {estimate.best_disc.nominal_radius:.6g}")
    for k in range(len(estimate.best_disc.coeffs_n)):
        a = discs.coefficient(estimate.best_disc.coeffs_n, k)
        b = discs.coefficient(estimate.best_disc.coeffs_t, k)
        print(f"  z^{k}: {a:.6g}  {b:.6g}")
    if config.kappa2:
        print(f"{'kappa2':<14}{oracle.kappa2_upper_numeric(domain, config.delta, x, settings):.8g}")
    if config.indicatrix:
        for theta, radius in oracle.indicatrix_slice(domain, config.delta, config.indicatrix, settings):
            print(f"  {theta:.6f}  {radius:.8g}")
    return 0


def _parse_deltas(raw: str) -> Tuple[float, ...]:
    if ":" in raw:
        lo, hi, n = raw.split(":")
        return experiments.default_deltas(int(n), float(lo), float(hi))
    return tuple(float(part) for part in raw.split(",") if part.strip())


def _sweep_command(args: argparse.Namespace) -> int:
    config = _resolve(args, "sweep")
    sweep_config = experiments.SweepConfig(
        profile=config.profile,
        deltas=_parse_deltas(config.deltas),
        xn=config.xn,
        xt=config.xt,
        gamma=config.gamma,
        estimators=tuple(s.strip() for s in config.estimators.split(",")),
        seed=config.seed,
        delta0=config.delta0,
        oracle_config=_oracle_config(config),
        timing=config.timing,
    )
    records = experiments.sweep(sweep_config)
    if config.out:
        out_path = experiments.write_csv(records, Path(config.out))
        print(f"Wrote {out_path}")
    else:
        sys.stdout.write(experiments.render_csv(records))
    failed = sum(1 for r in records if r.error_tag)
    print(f"Points: {len(records)}, Errors: {failed}")
    return 0


def _fit_command(args: argparse.Namespace) -> int:
    records = experiments.read_csv(Path(args.input))
    names: List[str] = []
    for r in records:
        if r.estimator not in names:
            names.append(r.estimator)
    if args.estimator:
        names = [n for n in names if n == args.estimator]
        if not names:
            raise ValueError(f"no records for estimator {args.estimator!r}")
    for name in names:
        try:
            fit = experiments.fit_loglog([r for r in records if r.estimator == name])
        except EvaluationError as exc:
            print(f"{name:<12} n/a ({exc})")
            continue
        dropped = " (largest delta dropped)" if fit.dropped else ""
        print(
            f"{name:<12} slope {fit.slope:.6f}  intercept {fit.intercept:.6f}  "
            f"max residual {fit.max_residual:.3g}  points {fit.n_points}{dropped}"
        )
    return 0


def _accept_command(args: argparse.Namespace) -> int:
    config = _resolve(args, "accept")
    report = experiments.accept(config.suite, seed=config.seed, quick=config.quick)
    for line in report.format_table():
        print(line)
    if config.out:
        out_path = experiments.write_csv(report.records, Path(config.out))
        print(f"Wrote {out_path}")
    return 0 if report.passed else 1


COMMANDS: Dict[str, Tuple[Callable[[], argparse.ArgumentParser], Callable[[argparse.Namespace], int]]] = {
    "bounds": (_build_bounds_parser, _bounds_command),
    "disc": (_build_disc_parser, _disc_command),
    "sibony": (_build_sibony_parser, _sibony_command),
    "oracle": (_build_oracle_parser, _oracle_command),
    "sweep": (_build_sweep_parser, _sweep_command),
    "fit": (_build_fit_parser, _fit_command),
    "accept": (_build_accept_parser, _accept_command),
}


def _usage() -> str:
    return f"usage: invmet {{{','.join(COMMANDS)}}} [options]"


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in COMMANDS:
        print(_usage(), file=sys.stderr)
        return 2
    build, command = COMMANDS[argv[0]]
    try:
        args = build().parse_args(argv[1:])
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.debug)
    try:
        return command(args)
    except RegimeError as exc:
        print(f"Regime: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
