"""
Batch command line: pareto-risk <command> [options].

Every command validates its configuration and computes all results before
writing anything to the output directory. JSON reports carry the resolved
configuration; series files hold PlotSeries (x, y, lo, hi, metadata).

Exit codes: 0 success, 2 configuration error, 3 input error, 4 fit failure,
5 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import RunConfig
from .core import FilterKind, ModelKind, OrderedSample, PlotSeries, PriceMode
from .data_io import (
    LossTable,
    load_losses,
    load_returns,
    mean_excess_plot,
    pareto_plot,
    write_json,
    write_series_delimited,
)
from .decorators import record_failures
from .distributions import Epd, ParetoI
from .distributions import sample as draw_sample
from .dynamic_risk import backtest, dynamic_var_es, sliding_window_fit
from .exceptions import ConfigError, OutputWriteError, ParetoRiskError
from .reinsurance import (
    premium_curve,
    premium_stability,
    pure_premium,
    return_level_curve,
)
from .risk_measures import (
    ComposedTail,
    empirical_top_share,
    es_composed,
    top_share_composed,
    var_composed,
)
from .tail_estimation.fitting import alpha_stability, fit_tail
from .tail_estimation.hill import hill, hill_series
from .tail_estimation.likelihood import fit_gpd, profile_alpha
from .utils.patterns import MEAN_EXCESS_LEVELS, STUDY_GPD_LEVEL, STUDY_HILL_LEVELS
from .utils.utils import resolve_threshold

logger = logging.getLogger(__name__)

Outputs = Dict[str, Any]


# --- Argument parsing ---


def _floats(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"Expected comma-separated numbers: {text}"
        ) from exc


def _models(text: str) -> List[str]:
    if text == "all":
        return [kind.value for kind in ModelKind]
    return [item.strip() for item in text.split(",") if item.strip()]


def _add_common(parser: argparse.ArgumentParser, needs_input: bool = True) -> None:
    if needs_input:
        parser.add_argument(
            "--input", type=Path, required=True, help="Delimited input file"
        )
        parser.add_argument("--delimiter", default=",", help="Field separator")
        parser.add_argument(
            "--no-header",
            dest="header",
            action="store_false",
            help="File has no header",
        )
    parser.add_argument("--output-dir", type=Path, help="Output directory")
    parser.add_argument(
        "--format",
        dest="output_format",
        choices=["json", "csv", "both"],
        default="json",
    )
    parser.add_argument("--seed", type=int, help="Random seed")


def _add_threshold(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--column", default="1", help="Loss column, name or 1-based index"
    )
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--threshold", type=float, help="Absolute threshold u")
    group.add_argument(
        "--threshold-q", type=float, help="Threshold as a quantile level"
    )
    parser.add_argument(
        "--model",
        dest="models",
        type=_models,
        default=["gpd"],
        help="pareto, gpd, epd or all",
    )
    parser.add_argument("--level", type=float, help="Confidence level")
    parser.add_argument(
        "--stability-levels",
        type=_floats,
        help="Quantile levels of stability thresholds",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pareto-risk",
        description="Heavy-tail risk analytics for losses and returns",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Fit tail models above a threshold")
    _add_common(fit)
    _add_threshold(fit)

    tailplot = sub.add_parser("tailplot", help="Diagnostic plot series")
    _add_common(tailplot)
    _add_threshold(tailplot)

    risk = sub.add_parser("risk", help="Composed VaR, ES and top shares")
    _add_common(risk)
    _add_threshold(risk)
    risk.add_argument("--p", dest="p_levels", type=_floats, help="Probability levels")
    risk.add_argument(
        "--mean-estimator",
        dest="mean_estimators",
        type=lambda text: [item for item in text.split(",") if item],
        help="hybrid, sample or both comma-separated",
    )

    premium = sub.add_parser("premium", help="Excess-of-loss pure premiums")
    _add_common(premium)
    _add_threshold(premium)
    premium.add_argument(
        "--deductible", dest="deductibles", type=_floats, required=True
    )
    premium.add_argument("--claims-per-period", type=float)
    premium.add_argument("--years", type=float, help="Number of periods in the data")
    premium.add_argument("--period-column", help="Column of period labels")

    returnlevel = sub.add_parser("returnlevel", help="Return levels with bands")
    _add_common(returnlevel)
    _add_threshold(returnlevel)
    returnlevel.add_argument("--periods", dest="return_periods", type=_floats)
    returnlevel.add_argument("--ci-method", choices=["delta", "bootstrap", "none"])
    returnlevel.add_argument("--replicates", type=int, help="Bootstrap replicates")

    dynamic = sub.add_parser("dynamic", help="Filtered and sliding-window VaR/ES")
    _add_common(dynamic)
    dynamic.add_argument(
        "--mode", dest="price_mode", choices=[m.value for m in PriceMode]
    )
    dynamic.add_argument("--time-column", help="Timestamp column; 'none' for row order")
    dynamic.add_argument("--value-column", help="Price or return column")
    dynamic.add_argument("--filter", choices=[f.value for f in FilterKind])
    dynamic.add_argument("--tail", choices=["upper", "lower"])
    dynamic.add_argument("--tail-level", type=float, help="Residual threshold level")
    dynamic.add_argument("--p", dest="p_levels", type=_floats, help="Probability level")
    dynamic.add_argument(
        "--model", dest="models", type=_models, default=["gpd"], help="gpd or epd"
    )
    dynamic.add_argument("--half-width", type=int)
    dynamic.add_argument("--ewma-beta", type=float)
    dynamic.add_argument("--edge", choices=["truncate", "shift"])

    study = sub.add_parser("study", help="Hill versus GPD simulation study")
    _add_common(study, needs_input=False)
    study.add_argument(
        "--tau-grid", nargs="+", type=float, help="Second-order rates, space separated"
    )
    study.add_argument("--alpha", type=float)
    study.add_argument("--delta", type=float)
    study.add_argument("--sample-size", type=int)
    study.add_argument("--replicates", type=int)
    study.add_argument("--level", type=float, help="Confidence level")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Build a RunConfig from parsed arguments, leaving unset options at defaults."""
    values = {
        key: value
        for key, value in vars(args).items()
        if key != "verbose" and value is not None
    }
    if values.get("time_column") == "none":
        values["time_column"] = None
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise ConfigError(f"Invalid configuration: {exc}") from exc


# --- Shared steps ---


def _selector(column: Optional[str]):
    if column is None:
        return None
    return int(column) if column.isdigit() else column


def _load_sample(config: RunConfig) -> LossTable:
    return load_losses(
        config.input,
        column=_selector(config.column),
        delimiter=config.delimiter,
        header=config.header,
        period_column=_selector(config.period_column),
    )


def _threshold(config: RunConfig, sample: OrderedSample) -> float:
    return resolve_threshold(sample.values, config.threshold, config.threshold_q)


def _with_config(series: PlotSeries, provenance: dict) -> PlotSeries:
    metadata = {**series.metadata, "config": provenance}
    return series.model_copy(update={"metadata": metadata})


def _stability_thresholds(config: RunConfig, sample: OrderedSample) -> List[float]:
    return [sample.quantile(level) for level in config.stability_levels]


# --- Commands ---


def cmd_fit(config: RunConfig) -> Outputs:
    sample = _load_sample(config).to_sample()
    u = _threshold(config, sample)
    fits = {
        kind.value: fit_tail(sample, u, kind.fit_method, config.level)
        for kind in config.models
    }
    return {
        "fit": {
            "config": config.resolved(u).as_provenance(),
            "u": u,
            "n": sample.n,
            "fits": fits,
        }
    }


def cmd_tailplot(config: RunConfig) -> Outputs:
    sample = _load_sample(config).to_sample()
    u = _threshold(config, sample)
    kind = config.models[0]
    profile_kind = ModelKind.EPD if kind is ModelKind.EPD else ModelKind.GPD
    _, _, profile_curve = profile_alpha(sample, u, profile_kind, config.level)
    d_grid = sorted({sample.quantile(level) for level in MEAN_EXCESS_LEVELS})
    provenance = config.resolved(u).as_provenance()
    series = {
        "pareto_plot": pareto_plot(sample, u),
        "hill_series": hill_series(sample, config.level).as_plot_series(),
        "alpha_stability": alpha_stability(
            sample, _stability_thresholds(config, sample), kind.fit_method, config.level
        ),
        "profile_curve": profile_curve,
        "mean_excess_plot": mean_excess_plot(sample, d_grid, config.level),
    }
    return {name: _with_config(s, provenance) for name, s in series.items()}


def cmd_risk(config: RunConfig) -> Outputs:
    sample = _load_sample(config).to_sample()
    u = _threshold(config, sample)
    reports = {}
    for kind in config.models:
        fit = fit_tail(sample, u, kind.fit_method, config.level)
        ct = ComposedTail.from_sample(sample, fit)
        levels = []
        for p in config.p_levels:
            entry: Dict[str, Any] = {"p": p}
            var_p, notes = record_failures("var")(var_composed)(ct, p)
            es_p, es_notes = record_failures("es")(es_composed)(ct, p)
            entry.update(var=var_p, es=es_p, errors=notes + es_notes)
            shares = {}
            for estimator in config.mean_estimators:
                share, share_notes = record_failures("top_share")(top_share_composed)(
                    ct, p, estimator
                )
                shares[estimator.value] = share
                entry["errors"].extend(share_notes)
            entry["top_share"] = shares
            entry["empirical_top_share"] = empirical_top_share(sample, p)
            levels.append(entry)
        reports[kind.value] = {"fit": fit, "levels": levels}
    return {
        "risk": {
            "config": config.resolved(u).as_provenance(),
            "u": u,
            "n": sample.n,
            "models": reports,
        }
    }


def _claims_per_period(config: RunConfig, table: LossTable) -> float:
    if config.claims_per_period is not None:
        return config.claims_per_period
    if config.years is not None or table.periods is not None:
        return table.claims_per_period(config.years)
    return 1.0


def cmd_premium(config: RunConfig) -> Outputs:
    table = _load_sample(config)
    sample = table.to_sample()
    u = _threshold(config, sample)
    per_period = _claims_per_period(config, table)
    provenance = config.resolved(u).as_provenance()
    thresholds = _stability_thresholds(config, sample)
    quote = record_failures("premium")(pure_premium)
    outputs: Outputs = {}
    reports = {}
    for kind in config.models:
        fit = fit_tail(sample, u, kind.fit_method, config.level)
        quotes, errors = [], []
        for d in config.deductibles:
            result, notes = quote(fit, d, per_period)
            if result is None:
                errors.extend(f"d={d}: {note}" for note in notes)
            else:
                quotes.append(result)
        reports[kind.value] = {"fit": fit, "quotes": quotes, "errors": errors}
        if quotes:
            curve = premium_curve(fit, [q.deductible for q in quotes], per_period)
            outputs[f"premium_curve_{kind.value}"] = _with_config(curve, provenance)
    for i, d in enumerate(config.deductibles):
        stability = premium_stability(sample, d, thresholds, per_period)
        for name, series in stability.items():
            outputs[f"premium_stability_{i}_{name}"] = _with_config(series, provenance)
    outputs["premium"] = {
        "config": provenance,
        "u": u,
        "claims_per_period": per_period,
        "models": reports,
    }
    return outputs


def cmd_returnlevel(config: RunConfig) -> Outputs:
    sample = _load_sample(config).to_sample()
    u = _threshold(config, sample)
    provenance = config.resolved(u).as_provenance()
    ci_method = None if config.ci_method == "none" else config.ci_method
    outputs: Outputs = {}
    reports = {}
    for kind in config.models:
        fit = fit_tail(sample, u, kind.fit_method, config.level)
        periods = [t for t in config.return_periods if fit.q_u * t >= 1.0]
        gaps = [t for t in config.return_periods if fit.q_u * t < 1.0]
        curve = None
        if periods:
            curve = return_level_curve(
                fit, periods, config.level, ci_method, config.replicates, config.seed
            )
        reports[kind.value] = {
            "fit": fit,
            "curve": curve,
            "sub_threshold_periods": gaps,
        }
        if curve is not None:
            series = curve.as_plot_series()
            series.metadata["sub_threshold_periods"] = gaps
            outputs[f"return_levels_{kind.value}"] = _with_config(series, provenance)
    outputs["returnlevel"] = {"config": provenance, "u": u, "models": reports}
    return outputs


def _difference(a: PlotSeries, b: PlotSeries) -> PlotSeries:
    y = [
        None if va is None or vb is None else va - vb for va, vb in zip(a.y, b.y)
    ]
    return PlotSeries(x=list(a.x), y=y, metadata={"x": "time", "y": "var_difference"})


def cmd_dynamic(config: RunConfig) -> Outputs:
    series = load_returns(
        config.input,
        mode=config.price_mode,
        value_column=_selector(config.value_column),
        time_column=_selector(config.time_column),
        delimiter=config.delimiter,
        header=config.header,
    )
    if config.tail == "lower":
        series = series.negated()
    p = config.p_levels[0]
    kind = config.models[0]
    dynamic = dynamic_var_es(
        series,
        config.filter,
        p,
        kind,
        tail_level=config.tail_level,
        ewma_beta=config.ewma_beta,
    )
    sliding = sliding_window_fit(
        series, config.half_width, config.tail_level, p, kind, edge=config.edge
    )
    provenance = config.as_provenance()
    garch = None
    if dynamic.garch is not None:
        garch = {
            "params": dynamic.garch.params,
            "mu": dynamic.garch.mu,
            "loglik": dynamic.garch.loglik,
            "at_boundary": dynamic.garch.at_boundary,
            "notes": dynamic.garch.notes,
        }
    return {
        "dynamic_var": _with_config(dynamic.var, provenance),
        "dynamic_es": _with_config(dynamic.es, provenance),
        "sliding_var": _with_config(sliding, provenance),
        "var_difference": _with_config(_difference(dynamic.var, sliding), provenance),
        "dynamic": {
            "config": provenance,
            "residual_fit": dynamic.residual_fit,
            "garch": garch,
            "forecast_var": dynamic.forecast_var,
            "forecast_es": dynamic.forecast_es,
            "backtest_filtered": backtest(dynamic.var, series, p),
            "backtest_sliding": backtest(sliding, series, p),
        },
    }


def _study_model(config: RunConfig, tau: float):
    if tau == 0.0:
        return ParetoI(u=1.0, alpha=config.alpha)
    return Epd(u=1.0, delta=config.delta, tau=tau, alpha=config.alpha)


def _hill_at(sample: OrderedSample, level: float, ci_level: float):
    return hill(sample, sample.quantile(level), ci_level)


def _gpd_at(sample: OrderedSample, level: float, ci_level: float):
    return fit_gpd(sample, sample.quantile(level), ci_level)


def cmd_study(config: RunConfig) -> Outputs:
    """
    Hill estimates at the 60% and 90% quantiles and GPD profile estimates at
    the 80% quantile, for Epd samples across a grid of tau.
    """
    estimators: Dict[str, Tuple[Callable, float]] = {
        f"hill_{int(round(100 * q))}": (record_failures("hill")(_hill_at), q)
        for q in STUDY_HILL_LEVELS
    }
    estimators[f"gpd_{int(round(100 * STUDY_GPD_LEVEL))}"] = (
        record_failures("gpd")(_gpd_at),
        STUDY_GPD_LEVEL,
    )
    rng = np.random.default_rng(config.seed)
    seeds = [int(s) for s in rng.integers(0, 2**32, size=config.replicates)]

    rows: Dict[str, List[Dict[str, Any]]] = {name: [] for name in estimators}
    for tau in config.tau_grid:
        model = _study_model(config, tau)
        samples = [
            OrderedSample(values=draw_sample(model, seed, config.sample_size))
            for seed in seeds
        ]
        for name, (estimate, q) in estimators.items():
            alphas, los, his, failures = [], [], [], []
            for sample in samples:
                fit, notes = estimate(sample, q, config.level)
                failures.extend(notes)
                if fit is not None:
                    alphas.append(fit.alpha)
                    los.append(fit.alpha_ci.lo)
                    his.append(fit.alpha_ci.hi)
            rows[name].append(
                {
                    "tau": tau,
                    "alphas": alphas,
                    "lo": los,
                    "hi": his,
                    "failures": failures,
                }
            )

    provenance = config.as_provenance()
    outputs: Outputs = {}
    for name, entries in rows.items():
        series = PlotSeries(
            x=[e["tau"] for e in entries],
            y=[float(np.median(e["alphas"])) if e["alphas"] else None for e in entries],
            lo=[float(np.median(e["lo"])) if e["lo"] else None for e in entries],
            hi=[float(np.median(e["hi"])) if e["hi"] else None for e in entries],
            metadata={
                "x": "tau",
                "y": "alpha_hat_median",
                "true_alpha": config.alpha,
                "replicates": config.replicates,
                "failures": [f for e in entries for f in e["failures"]],
                "config": provenance,
            },
        )
        outputs[f"study_{name}"] = series
    outputs["study"] = {"config": provenance, "estimates": rows}
    return outputs


COMMANDS: Dict[str, Callable[[RunConfig], Outputs]] = {
    "fit": cmd_fit,
    "tailplot": cmd_tailplot,
    "risk": cmd_risk,
    "premium": cmd_premium,
    "returnlevel": cmd_returnlevel,
    "dynamic": cmd_dynamic,
    "study": cmd_study,
}


def write_outputs(config: RunConfig, outputs: Outputs) -> List[Path]:
    """Write every output once all of them have been computed."""
    written = []
    for name, payload in outputs.items():
        is_series = isinstance(payload, PlotSeries)
        try:
            if config.output_format in ("json", "both") or not is_series:
                path = config.output_dir / f"{name}.json"
                written.append(write_json(payload, path))
            if is_series and config.output_format in ("csv", "both"):
                path = config.output_dir / f"{name}.csv"
                written.append(write_series_delimited(payload, path))
        except OSError as exc:
            raise OutputWriteError(
                f"Could not write output {name} to {config.output_dir}: {exc}"
            ) from exc
    return written


def run(config: RunConfig) -> List[Path]:
    outputs = COMMANDS[config.command](config)
    return write_outputs(config, outputs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = config_from_args(args)
        written = run(config)
    except ParetoRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: could not read input: {exc}", file=sys.stderr)
        return 3
    for path in written:
        logger.info("Wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
