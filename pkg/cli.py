"""
Command-line front end.

    python cli.py run         --config configs/lg_convergence.yaml
    python cli.py convergence --config configs/lg_convergence.yaml --workers 8
    python cli.py dimsweep    --config configs/lg_dxsweep.yaml
    python cli.py dysweep     --config configs/lg_dysweep.yaml
    python cli.py diagnose    --config configs/lg_a0_diagnose.yaml
    python cli.py verify      --config configs/elliptical_verify.yaml
    python cli.py selftest

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
failure, 3 bound violation found by `verify`.
"""
import argparse
import dataclasses
import json
import logging
import sys
from typing import List, Optional

from config import configure_logging, get_default_workers
from core.config_loader import load_config
from core.diagnostics import dy_regime, model_bound, published_lg_constants
from core.importance_sampler import estimate, run_is
from core.model_factory import build_model
from core.reference import exact_expectation
from core.selftest import run_selftest
from experiments.bound_check import bound_vs_mc
from experiments.convergence import convergence_experiment
from experiments.dimension_sweep import dimension_sweep
from experiments.results_writer import write_result
from models.bayes_models import LinearGaussianModel
from models.errors import BoundViolation, ConfigError, NumericalFailure, ValidationError
from models.run_config import RunConfig
from utils.random_stream import REP_DOMAIN, Y_DOMAIN, RandomStream

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_VIOLATION = 3


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as validation errors instead of exiting with argparse's code 2."""

    def error(self, message):
        raise ConfigError("argv", message)


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config", f"required for '{args.command}'")
    config = load_config(args.config)
    if args.seed is not None:
        experiment = dataclasses.replace(config.experiment, seed=args.seed)
        experiment.validate()
        config = dataclasses.replace(config, experiment=experiment)
    if args.out:
        config = dataclasses.replace(config, output=dataclasses.replace(config.output, dir=args.out))
    return config


def _workers(args) -> int:
    return args.workers if args.workers is not None else get_default_workers()


def _emit(values: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(values, sort_keys=True))
        return
    for key, value in values.items():
        print(f"{key}={value}")


def cmd_run(args) -> int:
    config = _load(args)
    experiment = config.experiment
    model = build_model(config.model)
    _, y = model.sample_joint(RandomStream(experiment.seed, (Y_DOMAIN, 0, 0)))
    stream = RandomStream(experiment.seed, (REP_DOMAIN, experiment.n_samples, 0, 0))
    ensemble = run_is(model, y, experiment.n_samples, stream)
    summary = {"y": [float(v) for v in y]}
    summary.update(ensemble.summary())
    summary["estimate"] = estimate(ensemble, experiment.f)
    reference = exact_expectation(model, y, experiment.f)
    if reference is not None:
        summary["reference"] = reference
    _emit(summary, args.json)
    return EXIT_OK


def _finish(result, config: RunConfig, args) -> None:
    csv_path, json_path = write_result(result, config)
    summary = {"kind": result.kind, "rows": len(result.rows), "csv": csv_path, "manifest": json_path}
    for key in ("slope", "r2", "error_ratio", "bound_slope"):
        if key in result.metadata:
            summary[key] = result.metadata[key]
    if result.flags:
        summary["flags"] = ",".join(result.flags)
    if result.violations:
        summary["violations"] = len(result.violations)
    _emit(summary, args.json)


def cmd_convergence(args) -> int:
    config = _load(args)
    _finish(convergence_experiment(config, _workers(args)), config, args)
    return EXIT_OK


def _sweep(args, axis: str) -> int:
    config = _load(args)
    if config.experiment.axis != axis:
        raise ConfigError("experiment.axis", f"'{args.command}' sweeps '{axis}', got '{config.experiment.axis}'")
    _finish(dimension_sweep(config, _workers(args)), config, args)
    return EXIT_OK


def cmd_dimsweep(args) -> int:
    return _sweep(args, "d_x")


def cmd_dysweep(args) -> int:
    return _sweep(args, "d_y")


def cmd_diagnose(args) -> int:
    config = _load(args)
    model = build_model(config.model)
    report = {
        "dims": [model.d_x, model.d_y],
        "bound": model_bound(model, config.experiment.bound_mode).to_dict(),
    }
    if isinstance(model, LinearGaussianModel):
        report["published"] = published_lg_constants(model).to_dict()
        report["dy_regime"] = dy_regime(model.r, args.delta)
    else:
        m, m_r = model.bounds
        report["observation_bound"] = {"M": m, "M_R": m_r}
        report["profile"] = model.profile.describe()
    print(json.dumps(report, sort_keys=True, indent=None if args.json else 2))
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _load(args)
    result = bound_vs_mc(config, _workers(args))
    _finish(result, config, args)
    if result.violations:
        raise BoundViolation(result.violations)
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest()
    for result in results:
        if args.json:
            print(json.dumps(dataclasses.asdict(result), sort_keys=True))
        else:
            status = "pass" if result.passed else "FAIL"
            print(f"check={result.name} status={status} wall_ms={result.wall_ms} {result.detail}".rstrip())
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise NumericalFailure(f"{len(failed)} self-test check(s) failed: {', '.join(failed)}")
    print(f"selftest passed ({len(results)} checks)")
    return EXIT_OK


COMMANDS = {
    "run": (cmd_run, "single importance-sampling run, prints the ensemble summary"),
    "convergence": (cmd_convergence, "L^p error against the sample size N"),
    "dimsweep": (cmd_dimsweep, "error and K_2 bound across the state dimension d_x"),
    "dysweep": (cmd_dysweep, "error and K_2 bound across the observation dimension d_y"),
    "diagnose": (cmd_diagnose, "prints the K_2 bound report of the configured model as JSON"),
    "verify": (cmd_verify, "Monte Carlo K_2 against the analytic bound; exit 3 on a violation"),
    "selftest": (cmd_selftest, "runs the built-in checks"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration.")
    common.add_argument("--out", help="Output directory (overrides output.dir).")
    common.add_argument("--workers", type=int, help="Worker processes (default: SNIS_WORKERS or the CPU count).")
    common.add_argument("--seed", type=int, help="Overrides experiment.seed.")
    common.add_argument("--json", action="store_true", help="Machine-readable output on stdout.")
    common.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR (default: SNIS_LOG_LEVEL).")

    parser = _ArgumentParser(description="Self-normalized importance sampling: experiments and error-bound diagnostics.")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for name, (handler, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=help_text, description=help_text)
        sub.set_defaults(handler=handler)
        if name == "diagnose":
            sub.add_argument("--delta", type=float, default=0.5, help="Margin for the d_y regime check.")
    return parser


def _report(error: BaseException) -> None:
    message = " ".join(str(error).split())
    print(f"error={type(error).__name__} message={message}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers", f"must be >= 1, got {args.workers}")
        return args.handler(args)
    except BoundViolation as e:
        logger.warning("%s", e)
        _report(e)
        return EXIT_VIOLATION
    except NumericalFailure as e:
        logger.error("%s", e)
        _report(e)
        return EXIT_NUMERICAL
    except (ValidationError, ValueError) as e:
        _report(e)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
