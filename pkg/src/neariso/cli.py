"""Command-line interface for nearly isotonic estimation.

Subcommands: fit, path, select, spectrum, rdd, ode-error, simulate,
verify.  Exit codes: 0 on success, 2 on usage errors, 1 on data or
domain errors.

Dataset files are CSV (``index,value[,weight]``, ``#`` comments) or
columnar JSON.  The value and weight columns are family-specific:

  normal    value = measurement, weight = precision
  binomial  value = success count, weight = number of trials
  poisson   value = event count, weight = exposure
  chisq     value = chi-square statistic, weight = degrees of freedom
  gamma     value = observation, weight = shape

For the binomial family, lambda is parametrized on the proportion
scale: the path is computed on value/weight with unit weights, making
penalty strengths dimensionless and comparable across trial counts,
while criteria always use the exact binomial likelihood.  All numeric
output is rendered with 17 significant digits and is deterministic for
identical inputs and seeds.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
from typing import NamedTuple

import numpy as np

from . import families
from .dataio import (
    Dataset,
    KnotRecord,
    PathReport,
    TOOL_VERSION,
    format_float,
    read_dataset,
    write_report,
)
from .discontinuity import rdd_fit
from .errors import DomainError, NearisoError, ParseError, SchemaError
from .families import BINOMIAL, GAMMA_SCALE, NORMAL, POISSON, Family
from .ode_error import block_residuals, ode_error_quantify
from .oracle import certification_suite
from .path import SolutionPath, generalized_fit_at, solve_path
from .pava import DECREASING, INCREASING, WeightedSeries
from .selection import BiasStudyConfig, bias_study, select_lambda
from .spectrum import spectrum_fit

_FAMILY_NAMES = ("normal", "binomial", "poisson", "chisq", "gamma")


class Pipeline(NamedTuple):
    family: Family
    data: np.ndarray
    weights: np.ndarray
    series: WeightedSeries


def _pipeline(dataset: Dataset, family_name: str, direction: str) -> Pipeline:
    w = dataset.effective_weights()
    values = dataset.values
    if family_name == "normal":
        fam, data, weights = NORMAL, values * w, w
        series = WeightedSeries(values, w, direction=direction)
    elif family_name == "binomial":
        fam, data, weights = BINOMIAL, values, w
        series = WeightedSeries(values / w, np.ones_like(w), direction=direction)
    elif family_name == "poisson":
        fam, data, weights = POISSON, values, w
        series = WeightedSeries(values / w, w, direction=direction)
    elif family_name == "chisq":
        fam, data, weights = GAMMA_SCALE, values, w / 2.0
        series = WeightedSeries(values / weights, weights, direction=direction)
    elif family_name == "gamma":
        fam, data, weights = GAMMA_SCALE, values, w
        series = WeightedSeries(values / weights, weights, direction=direction)
    else:
        raise DomainError(f"unknown family: {family_name!r}")
    families.validate_support(fam, data, weights)
    return Pipeline(fam, data, weights, series)


def _nonneg_float(text: str) -> float:
    value = float(text)
    if math.isnan(value) or value < 0.0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative number, got {text!r}")
    return value


def _parse_bounds(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"bounds must be 'a,b', got {text!r}")
    try:
        alpha, beta = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bounds must be numbers, got {text!r}") from None
    return alpha, beta


def _direction(text: str) -> str:
    return INCREASING if text == "inc" else DECREASING


def _resolve_seed(args, default: int = 0) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("NEARISO_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SchemaError(f"NEARISO_SEED is not an integer: {env!r}") from None
    return default


def _read_input(path_arg: str) -> Dataset:
    if path_arg == "-":
        return read_dataset(io.BytesIO(sys.stdin.buffer.read()), format="csv")
    fmt = "json" if path_arg.endswith(".json") else "csv"
    return read_dataset(path_arg, format=fmt)


class _Output:
    """Stdout or a file, newline-normalized for byte determinism."""

    def __init__(self, path: str | None):
        self._path = path
        self._handle = None

    def __enter__(self):
        if self._path is None or self._path == "-":
            self._handle = sys.stdout
        else:
            self._handle = open(self._path, "w", encoding="utf-8", newline="\n")
        return self._handle

    def __exit__(self, *exc):
        if self._handle is not sys.stdout and self._handle is not None:
            self._handle.close()
        return False


def _emit_json_object(stream, pairs) -> None:
    """Write a flat JSON object with deterministic key order.

    Values are pre-rendered strings (numbers, quoted strings, arrays).
    """
    stream.write("{\n")
    for k, (key, rendered) in enumerate(pairs):
        comma = "," if k + 1 < len(pairs) else ""
        stream.write(f'  "{key}": {rendered}{comma}\n')
    stream.write("}\n")


def _render_vector(values) -> str:
    return "[" + ", ".join(_float_token(v) for v in values) + "]"


def _float_token(x) -> str:
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return f'"{format_float(x)}"'
    return format_float(x)


def _criterion_of(args):
    """Explicit lambda (float) or selection criterion name (str)."""
    lam = getattr(args, "lam", None)
    if lam is not None:
        return lam
    return getattr(args, "select", None) or "aic"


def _select_trace(pipe: Pipeline, path: SolutionPath, args):
    criterion = getattr(args, "select", None) or "aic"
    sigma2 = getattr(args, "sigma2", None)
    if criterion == "cp":
        if sigma2 is None:
            raise DomainError("--select cp requires --sigma2")
        if pipe.family is not NORMAL:
            raise DomainError("--select cp requires --family normal")
        if not np.all(pipe.series.weights == 1.0):
            raise DomainError("--select cp requires unit weights")
        return select_lambda(pipe.series.values, pipe.series.weights, pipe.family,
                             path, criterion="cp", sigma2=sigma2)
    return select_lambda(pipe.data, pipe.weights, pipe.family, path, criterion="aic")


def _knot_record(path, pipe, lam, bounds, criterion=None) -> KnotRecord:
    alpha, beta = bounds if bounds is not None else (None, None)
    fit = generalized_fit_at(path, pipe.family, lam, alpha, beta)
    return KnotRecord(
        lam=float(lam),
        pieces=fit.pieces,
        criterion=criterion,
        eta=tuple(fit.eta),
        theta=tuple(fit.theta),
    )


def _cmd_fit(args) -> int:
    dataset = _read_input(args.input)
    direction = _direction(args.direction)
    pipe = _pipeline(dataset, args.family, direction)
    path = solve_path(pipe.series)
    selected = None
    criterion_value = None
    if args.lam is not None:
        lam = args.lam
    else:
        trace = _select_trace(pipe, path, args)
        lam = trace.selected_lambda
        selected = lam
        criterion_value = trace.entries[trace.selected].criterion
    record = _knot_record(path, pipe, lam, args.bounds, criterion_value)
    report = PathReport(
        family=args.family,
        direction=direction,
        knots=(record,),
        selected_lambda=selected,
        input_digest=dataset.digest,
    )
    with _Output(args.output) as out:
        write_report(report, out, format=args.format)
    return 0


def _cmd_path(args) -> int:
    dataset = _read_input(args.input)
    direction = _direction(args.direction)
    pipe = _pipeline(dataset, args.family, direction)
    path = solve_path(pipe.series)
    trace = None
    if args.select is not None:
        trace = _select_trace(pipe, path, args)
    crit_by_index = {}
    if trace is not None:
        crit_by_index = {k: e.criterion for k, e in enumerate(trace.entries)}
    records = tuple(
        _knot_record(path, pipe, float(lam), args.bounds, crit_by_index.get(k))
        for k, lam in enumerate(path.knots)
    )
    report = PathReport(
        family=args.family,
        direction=direction,
        knots=records,
        selected_lambda=None if trace is None else trace.selected_lambda,
        input_digest=dataset.digest,
    )
    with _Output(args.output) as out:
        write_report(report, out, format=args.format)
    return 0


def _cmd_select(args) -> int:
    dataset = _read_input(args.input)
    direction = _direction(args.direction)
    pipe = _pipeline(dataset, args.family, direction)
    path = solve_path(pipe.series)
    trace = _select_trace(pipe, path, args)
    best = trace.entries[trace.selected]
    with _Output(args.output) as out:
        if args.format == "json":
            entries = (
                "[\n"
                + ",\n".join(
                    f'    {{"lambda": {_float_token(e.lam)}, '
                    f'"criterion": {_float_token(e.criterion)}, '
                    f'"pieces": {e.pieces}}}'
                    for e in trace.entries
                )
                + "\n  ]"
            )
            _emit_json_object(
                out,
                [
                    ("format", '"neariso-selection"'),
                    ("version", f'"{TOOL_VERSION}"'),
                    ("family", f'"{args.family}"'),
                    ("criterion", f'"{trace.criterion}"'),
                    ("input_digest", f'"{dataset.digest}"'),
                    ("selected_lambda", _float_token(best.lam)),
                    ("selected_criterion", _float_token(best.criterion)),
                    ("selected_pieces", str(best.pieces)),
                    ("entries", entries),
                ],
            )
        else:
            out.write(f"# neariso selection {TOOL_VERSION}\n")
            out.write(f"# family {args.family}\n")
            out.write(f"# criterion {trace.criterion}\n")
            out.write(f"# input_digest {dataset.digest}\n")
            out.write(f"# selected_lambda {format_float(best.lam)}\n")
            out.write(f"# selected_criterion {format_float(best.criterion)}\n")
            out.write(f"# selected_pieces {best.pieces}\n")
            out.write("lambda,criterion,pieces\n")
            for e in trace.entries:
                out.write(f"{format_float(e.lam)},{format_float(e.criterion)},{e.pieces}\n")
    return 0


def _cmd_spectrum(args) -> int:
    dataset = _read_input(args.input)
    result = spectrum_fit(dataset.values, _criterion_of(args))
    pg = result.periodogram
    with np.errstate(divide="ignore"):
        log_fitted = np.log(result.fitted)
    with _Output(args.output) as out:
        if args.format == "json":
            _emit_json_object(
                out,
                [
                    ("format", '"neariso-spectrum"'),
                    ("version", f'"{TOOL_VERSION}"'),
                    ("input_digest", f'"{dataset.digest}"'),
                    ("lambda", _float_token(result.lam)),
                    ("pieces", str(result.fit.pieces)),
                    ("freq", _render_vector(pg.freqs)),
                    ("power", _render_vector(pg.power)),
                    ("fitted", _render_vector(result.fitted)),
                    ("log_fitted", _render_vector(log_fitted)),
                ],
            )
        else:
            out.write(f"# neariso spectrum {TOOL_VERSION}\n")
            out.write(f"# input_digest {dataset.digest}\n")
            out.write(f"# lambda {format_float(result.lam)}\n")
            out.write("freq,power,fitted,log_fitted\n")
            for f, p, fit_v, lf in zip(pg.freqs, pg.power, result.fitted, log_fitted):
                out.write(
                    f"{format_float(f)},{format_float(p)},"
                    f"{format_float(fit_v)},{format_float(lf)}\n"
                )
    return 0


def _cmd_rdd(args) -> int:
    dataset = _read_input(args.input)
    result = rdd_fit(dataset.values, dataset.weights, _criterion_of(args))
    with _Output(args.output) as out:
        if args.format == "json":
            jumps = (
                "["
                + ", ".join(
                    f'{{"index": {j.index}, "left": {_float_token(j.left_value)}, '
                    f'"right": {_float_token(j.right_value)}, "rise": {_float_token(j.rise)}}}'
                    for j in result.jumps
                )
                + "]"
            )
            _emit_json_object(
                out,
                [
                    ("format", '"neariso-rdd"'),
                    ("version", f'"{TOOL_VERSION}"'),
                    ("input_digest", f'"{dataset.digest}"'),
                    ("lambda", _float_token(result.lam)),
                    ("pieces", str(result.fit.pieces)),
                    ("fitted", _render_vector(result.fit.eta)),
                    ("jumps", jumps),
                ],
            )
        else:
            out.write(f"# neariso rdd {TOOL_VERSION}\n")
            out.write(f"# input_digest {dataset.digest}\n")
            out.write(f"# lambda {format_float(result.lam)}\n")
            for j in result.jumps:
                out.write(
                    f"# jump index {j.index} left {format_float(j.left_value)} "
                    f"right {format_float(j.right_value)} rise {format_float(j.rise)}\n"
                )
            out.write("index,value,fitted\n")
            for i, (v, e) in enumerate(zip(dataset.values, result.fit.eta)):
                out.write(f"{dataset.index[i]},{format_float(v)},{format_float(e)}\n")
    return 0


def _cmd_ode_error(args) -> int:
    dataset = _read_input(args.input)
    blocks = block_residuals(dataset.values, args.blocks, args.gamma2)
    result = ode_error_quantify(blocks, _criterion_of(args))
    with _Output(args.output) as out:
        if args.format == "json":
            _emit_json_object(
                out,
                [
                    ("format", '"neariso-ode-error"'),
                    ("version", f'"{TOOL_VERSION}"'),
                    ("input_digest", f'"{dataset.digest}"'),
                    ("lambda", _float_token(result.lam)),
                    ("block_size", str(blocks.block_size)),
                    ("dropped", str(blocks.dropped)),
                    ("gamma2", _float_token(blocks.gamma2)),
                    ("sums", _render_vector(blocks.sums)),
                    ("c_hat", _render_vector(result.c_hat)),
                    ("sigma_tilde", _render_vector(result.sigma_tilde)),
                ],
            )
        else:
            out.write(f"# neariso ode-error {TOOL_VERSION}\n")
            out.write(f"# input_digest {dataset.digest}\n")
            out.write(f"# lambda {format_float(result.lam)}\n")
            out.write(f"# block_size {blocks.block_size}\n")
            out.write(f"# dropped {blocks.dropped}\n")
            out.write(f"# gamma2 {format_float(blocks.gamma2)}\n")
            out.write("block,sum,c_hat,sigma_tilde\n")
            for b in range(blocks.sums.size):
                out.write(
                    f"{b},{format_float(blocks.sums[b])},"
                    f"{format_float(result.c_hat[b])},{format_float(result.sigma_tilde[b])}\n"
                )
    return 0


_SIM_KEYS = {
    "kind", "family", "n", "weight", "replications", "inner_draws", "seed",
    "eta_pattern", "eta_lo", "eta_hi", "eta_value", "eta",
    "lambdas", "lambda_max", "lambda_count",
}


def _parse_config(path: str) -> dict:
    config = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(f"expected key=value, got {stripped!r}", line=lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _SIM_KEYS:
            raise SchemaError(f"unknown config key: {key!r}")
        config[key] = value.strip()
    return config


def two_ramp(lo: float, hi: float, n: int) -> np.ndarray:
    """Two back-to-back linear ramps from lo to hi covering n points."""
    if n < 4:
        raise DomainError("two_ramp needs at least 4 points")
    half = n // 2
    first = lo + (hi - lo) * np.arange(half) / (half - 1)
    second = lo + (hi - lo) * np.arange(n - half) / (n - half - 1)
    return np.concatenate([first, second])


def _study_from_config(config: dict, seed_override: int | None) -> BiasStudyConfig:
    kind = config.get("kind", "bias_study")
    if kind != "bias_study":
        raise SchemaError(f"unknown simulation kind: {kind!r}")
    family_name = config.get("family")
    if family_name not in _FAMILY_NAMES:
        raise SchemaError(f"config needs family in {_FAMILY_NAMES}")
    weight = float(config.get("weight", "1"))
    if family_name == "chisq":
        fam, w_eff = GAMMA_SCALE, weight / 2.0
    else:
        fam = {
            "normal": NORMAL, "binomial": BINOMIAL,
            "poisson": POISSON, "gamma": GAMMA_SCALE,
        }[family_name]
        w_eff = weight
    pattern = config.get("eta_pattern", "two_ramp")
    if pattern == "explicit" or "eta" in config:
        eta = np.asarray([float(v) for v in config["eta"].split(",")], dtype=float)
    elif pattern == "two_ramp":
        eta = two_ramp(float(config["eta_lo"]), float(config["eta_hi"]), int(config["n"]))
    elif pattern == "constant":
        eta = np.full(int(config["n"]), float(config["eta_value"]))
    else:
        raise SchemaError(f"unknown eta_pattern: {pattern!r}")
    if "lambdas" in config:
        grid = np.asarray([float(v) for v in config["lambdas"].split(",")], dtype=float)
    elif "lambda_max" in config:
        grid = np.linspace(0.0, float(config["lambda_max"]), int(config.get("lambda_count", "21")))
    else:
        raise SchemaError("config needs 'lambdas' or 'lambda_max'")
    seed = seed_override if seed_override is not None else int(config.get("seed", "0"))
    return BiasStudyConfig(
        family=fam,
        true_eta=eta,
        weights=np.full(eta.size, w_eff),
        lambda_grid=grid,
        replications=int(config["replications"]),
        seed=seed,
        inner_draws=int(config.get("inner_draws", "100")),
    )


def _cmd_simulate(args) -> int:
    config = _parse_config(args.config)
    seed = args.seed
    if seed is None and os.environ.get("NEARISO_SEED") is not None:
        seed = _resolve_seed(args)
    study = _study_from_config(config, seed)
    result = bias_study(study)
    with _Output(args.output) as out:
        if args.format == "json":
            _emit_json_object(
                out,
                [
                    ("format", '"neariso-bias-study"'),
                    ("version", f'"{TOOL_VERSION}"'),
                    ("replications", str(result.replications)),
                    ("seed", str(study.seed)),
                    ("lambda_grid", _render_vector(result.lambda_grid)),
                    ("mean_aic", _render_vector(result.mean_aic)),
                    ("mean_two_d", _render_vector(result.mean_two_d)),
                    ("sd_aic", _render_vector(result.sd_aic)),
                    ("sd_two_d", _render_vector(result.sd_two_d)),
                ],
            )
        else:
            out.write(f"# neariso bias-study {TOOL_VERSION}\n")
            out.write(f"# replications {result.replications}\n")
            out.write(f"# seed {study.seed}\n")
            out.write("lambda,mean_aic,mean_two_d,sd_aic,sd_two_d\n")
            for g in range(result.lambda_grid.size):
                out.write(
                    f"{format_float(result.lambda_grid[g])},"
                    f"{format_float(result.mean_aic[g])},"
                    f"{format_float(result.mean_two_d[g])},"
                    f"{format_float(result.sd_aic[g])},"
                    f"{format_float(result.sd_two_d[g])}\n"
                )
    return 0


def _cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    records = certification_suite(seed=seed, instances=args.instances)
    failures = [r for r in records if not r.ok]
    max_gap = max(r.objective_gap for r in records)
    kkt_values = [r.kkt_violation for r in records if r.kkt_violation is not None]
    nonconverged = sum(1 for r in records if not r.oracle_converged)
    with _Output(args.output) as out:
        out.write(f"instances {len(records)}\n")
        out.write(f"seed {seed}\n")
        out.write(f"max_objective_gap {format_float(max_gap)}\n")
        out.write(f"max_kkt_violation {format_float(max(kkt_values) if kkt_values else 0.0)}\n")
        out.write(f"oracle_nonconverged {nonconverged}\n")
        out.write(f"failures {len(failures)}\n")
        for r in failures:
            out.write(
                f"FAIL family={r.family} n={r.n} lambda={format_float(r.lam)} "
                f"gap={format_float(r.objective_gap)}\n"
            )
        out.write("PASS\n" if not failures else "FAIL\n")
    return 0 if not failures else 1


def _add_io_flags(sub, with_format=True):
    sub.add_argument("input", help="dataset file (CSV or JSON; '-' for stdin CSV)")
    if with_format:
        sub.add_argument("--format", choices=("json", "csv"), default="json",
                         help="output format")
    sub.add_argument("--output", default=None, help="output file (default stdout)")


def _add_model_flags(sub, criteria=("aic", "cp")):
    sub.add_argument("--family", choices=_FAMILY_NAMES, required=True)
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lam", type=_nonneg_float, default=None,
                       help="explicit penalty strength")
    group.add_argument("--select", choices=criteria, default=None,
                       help="select lambda over the knots by this criterion")
    sub.add_argument("--sigma2", type=float, default=None,
                     help="known variance for --select cp")
    sub.add_argument("--direction", choices=("inc", "dec"), default="inc")
    sub.add_argument("--bounds", type=_parse_bounds, default=None,
                     help="natural-parameter bounds 'a,b'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neariso",
        description="Nearly isotonic estimation for exponential-family sequences.",
    )
    parser.add_argument("--version", action="version", version=f"neariso {TOOL_VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="fit at one lambda (or a selected one)")
    _add_model_flags(fit)
    _add_io_flags(fit)
    fit.set_defaults(handler=_cmd_fit)

    path_cmd = commands.add_parser("path", help="report the full solution path")
    _add_model_flags(path_cmd)
    _add_io_flags(path_cmd)
    path_cmd.set_defaults(handler=_cmd_path)

    select = commands.add_parser("select", help="criterion trace over the knots")
    _add_model_flags(select)
    _add_io_flags(select)
    select.set_defaults(handler=_cmd_select)

    spectrum = commands.add_parser("spectrum", help="monotone spectral density fit")
    spectrum.add_argument("--lambda", dest="lam", type=_nonneg_float, default=None)
    spectrum.add_argument("--select", choices=("aic",), default=None)
    _add_io_flags(spectrum)
    spectrum.set_defaults(handler=_cmd_spectrum)

    rdd = commands.add_parser("rdd", help="decreasing Poisson fit with jump report")
    rdd.add_argument("--lambda", dest="lam", type=_nonneg_float, default=None)
    rdd.add_argument("--select", choices=("aic",), default=None)
    _add_io_flags(rdd)
    rdd.set_defaults(handler=_cmd_rdd)

    ode = commands.add_parser("ode-error", help="block-residual error quantification")
    ode.add_argument("--blocks", type=int, required=True, help="block size d")
    ode.add_argument("--gamma2", type=float, required=True,
                     help="observation noise variance")
    ode.add_argument("--lambda", dest="lam", type=_nonneg_float, default=None)
    ode.add_argument("--select", choices=("aic",), default=None)
    _add_io_flags(ode)
    ode.set_defaults(handler=_cmd_ode_error)

    simulate = commands.add_parser("simulate", help="seeded criterion bias study")
    simulate.add_argument("config", help="flat key=value study configuration file")
    simulate.add_argument("--seed", type=int, default=None,
                          help="override the config seed (env NEARISO_SEED)")
    simulate.add_argument("--format", choices=("json", "csv"), default="json")
    simulate.add_argument("--output", default=None)
    simulate.set_defaults(handler=_cmd_simulate)

    verify = commands.add_parser("verify", help="certify the solver against the oracle")
    verify.add_argument("--seed", type=int, default=None,
                        help="suite seed (env NEARISO_SEED, default 0)")
    verify.add_argument("--instances", type=int, default=60)
    verify.add_argument("--output", default=None)
    verify.set_defaults(handler=_cmd_verify)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except NearisoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
