"""
Batch front-end

    python main.py volume --lambda 10 --alpha 0.25
    python main.py prices --lambda 100 --alpha 0.25 --grid 0:1:201 --format json
    python main.py range --lambda 10 --alpha 0.3 --dist normal:0,1
    python main.py validate --seed 1 --extended
    python main.py fit-spread spreads.csv
    python main.py simulate --lambda 10 --alpha 0.3 --reps 100000 --format json
    python main.py serve

Exit codes: 0 success, 2 invalid input, 3 tolerance not met, 4 validation failure.
"""
from typing import List, Optional
import argparse
import logging
import sys

from app import __version__
from app.models.model import AuctionParams
from app.schemas.schema import GridSpec, RunConfig, Table
from app.services import exact, tables
from app.services.montecarlo import run_batch, summary_json
from app.services.price_dist import parse_distribution
from app.services.validation_service import CHECKS, run_validation
from app.utils.config import configure_logging, settings
from app.utils.exceptions import ToleranceNotMetError, ValidationSuiteError
from app.utils.output import dump_json, render, write_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_TOLERANCE = 3
EXIT_VALIDATION = 4

COLUMNS_HELP = """\
columns:
  volume      k, exact_pmf, exact_pmf_hyp, asymptotic_density, abs_error_bound
  prices      x, f_L, f_U, asymptotic_density, abs_error_bound
  range       delta, f_R, asymptotic_density, scaled_delta, scaled_density, abs_error_bound
  fit-spread  x, empirical_log_survival, fitted_log_survival
  simulate    k, count, empirical_pmf, exact_pmf  (csv; json writes the full sample summary)
CSV files start with '# key: value' metadata lines and use '.' as decimal point.
"""


def parse_grid(text: str) -> GridSpec:
    """'lo:hi:n' -> GridSpec"""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must look like lo:hi:n")
    try:
        return GridSpec(lo=float(parts[0]), hi=float(parts[1]), points=int(parts[2]))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid grid '{text}': {e}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lambda_total", type=float, help="order arrival rate")
    common.add_argument("--alpha", type=float, help="ask share of the order flow, in [0, 1]")
    common.add_argument("--T", dest="horizon", type=float, default=1.0, help="auction length")
    common.add_argument("--theta-ask", type=float, default=0.0, help="ask cancellation rate")
    common.add_argument("--theta-bid", type=float, default=0.0, help="bid cancellation rate")
    common.add_argument("--dist", default="uniform:0,1",
                        help="price law: uniform:lo,hi | normal:mean,sd | exponential:rate")
    common.add_argument("--grid", type=parse_grid, help="tabulation grid lo:hi:n")
    common.add_argument("--k-max", type=int, help="largest volume tabulated")
    common.add_argument("--tol", type=float, help="absolute error tolerance")
    common.add_argument("--reps", type=int, help="Monte Carlo replications")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=settings.workers, help="Monte Carlo processes")
    common.add_argument("--format", dest="output_format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", dest="output_path", help="output file (default: standard output)")
    common.add_argument("--log-level", default=None)

    parser = argparse.ArgumentParser(
        prog="call-auction",
        description="Exact and asymptotic laws of call auction volume and clearing prices",
        epilog=COLUMNS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("volume", parents=[common], help="traded volume law")
    sub.add_parser("prices", parents=[common], help="densities of the clearing bounds L and U")
    sub.add_parser("range", parents=[common], help="density of the clearing range U - L")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo sample summary")
    validate = sub.add_parser("validate", parents=[common], help="run the acceptance suite")
    validate.add_argument("--extended", action="store_true", help="include the lambda*T = 1000 run")
    validate.add_argument("--checks", help=f"comma-separated subset of: {', '.join(CHECKS)}")
    fit = sub.add_parser("fit-spread", parents=[common], help="exponential MLE fit of spread samples")
    fit.add_argument("input_path", help="CSV file, one positive spread per line")
    serve = sub.add_parser("serve", help="start the HTTP API")
    serve.add_argument("--host", default=settings.api_host)
    serve.add_argument("--port", type=int, default=settings.api_port)
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    params = None
    if args.lambda_total is not None or args.alpha is not None:
        if args.lambda_total is None or args.alpha is None:
            raise ValueError("--lambda and --alpha must be given together")
        params = AuctionParams(lambda_total=args.lambda_total, alpha=args.alpha, horizon=args.horizon,
                               theta_ask=args.theta_ask, theta_bid=args.theta_bid)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()] if getattr(args, "checks", None) else None
    return RunConfig(
        command=args.command,
        params=params,
        dist_spec=args.dist,
        grid=args.grid,
        k_max=args.k_max,
        tol=args.tol,
        n_reps=args.reps,
        seed=args.seed,
        workers=args.workers,
        extended=getattr(args, "extended", False),
        checks=checks,
        input_path=getattr(args, "input_path", None),
        output_format=args.output_format,
        output_path=args.output_path,
    )


def _require_params(config: RunConfig) -> AuctionParams:
    if config.params is None:
        raise ValueError(f"'{config.command}' needs --lambda and --alpha")
    return config.params


def _emit(config: RunConfig, text: str) -> None:
    write_text(text, config.output_path)


def cmd_volume(config: RunConfig) -> None:
    table = tables.volume_table(_require_params(config), config.k_max, config.tol)
    _emit(config, render(table, config.output_format))


def cmd_prices(config: RunConfig) -> None:
    table = tables.prices_table(_require_params(config), parse_distribution(config.dist_spec), config.grid,
                                config.tol or exact.DENSITY_TOL)
    _emit(config, render(table, config.output_format))


def cmd_range(config: RunConfig) -> None:
    table = tables.range_table(_require_params(config), parse_distribution(config.dist_spec), config.grid,
                               config.tol or 1e-7)
    _emit(config, render(table, config.output_format))


def cmd_validate(config: RunConfig) -> None:
    report = run_validation(config.seed, config.extended, config.workers, config.checks)
    doc = report.model_dump()
    doc["passed"] = report.passed
    doc["version"] = __version__
    _emit(config, dump_json(doc))
    if not report.passed:
        raise ValidationSuiteError(report.failed())


def cmd_fit_spread(config: RunConfig) -> None:
    with open(config.input_path, newline="", encoding="utf-8") as fh:
        values = tables.read_spreads(fh)
    _, table = tables.spread_fit(values)
    table.metadata["input"] = config.input_path
    _emit(config, render(table, config.output_format))


def cmd_simulate(config: RunConfig) -> None:
    params = _require_params(config)
    F = parse_distribution(config.dist_spec)
    reps = config.n_reps or 10_000
    summary = run_batch(params, F, reps, config.seed, config.workers)
    if config.output_format == "json":
        _emit(config, summary_json(summary))
        return
    law = exact.volume_distribution(params)
    empirical = summary.empirical_pmf()
    rows = [[k, summary.volume_counts.get(k, 0), empirical.get(k, 0.0), law.mass(k)]
            for k in range(max(max(summary.volume_counts), max(law.masses)) + 1)]
    table = Table(
        columns=["k", "count", "empirical_pmf", "exact_pmf"],
        rows=rows,
        metadata={"version": __version__, "lambda": params.lambda_total, "alpha": params.alpha,
                  "T": params.horizon, "theta_ask": params.theta_ask, "theta_bid": params.theta_bid,
                  "dist": F.spec(), "reps": reps, "seed": config.seed,
                  "n_conditioned": summary.n_conditioned},
    )
    _emit(config, render(table, "csv"))


COMMANDS = {
    "volume": cmd_volume,
    "prices": cmd_prices,
    "range": cmd_range,
    "validate": cmd_validate,
    "fit-spread": cmd_fit_spread,
    "simulate": cmd_simulate,
}


def serve(host: str, port: int) -> None:
    import uvicorn
    uvicorn.run("main:app", host=host, port=port)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(getattr(args, "log_level", None))
    if args.command == "serve":
        serve(args.host, args.port)
        return EXIT_OK
    try:
        config = build_config(args)
        COMMANDS[config.command](config)
    except ValidationSuiteError as e:
        logger.error("❌ %s", e)
        return EXIT_VALIDATION
    except ToleranceNotMetError as e:
        logger.error("❌ %s", e)
        return EXIT_TOLERANCE
    except (ValueError, OSError) as e:
        logger.error("❌ %s", e)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
