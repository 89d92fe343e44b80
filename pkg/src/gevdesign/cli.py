"""Command-line front end.

Subcommands wire the pipeline: extract -> bias-correct -> fit ->
quantiles / return-levels / lifetime-design / diagnose, plus a synthetic
generator (simulate) used by the test oracles. Every output file starts
with a `#`-prefixed metadata block (tool version, config hash, seed);
readers in this package skip those lines, including for JSON outputs.

Exit status: 0 on success, 1 on domain errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

import gevdesign
from gevdesign.bootstrap import parametric_bootstrap, percentile_ci
from gevdesign.cdft import cdft_correct_monthly
from gevdesign.diagnostics import acf, pacf, pit_residuals, qq_data
from gevdesign.errors import DataError, GevDesignError
from gevdesign.ingest import (BlockMaximaSeries, BlockRecord, extract_block_maxima,
                              parse_series)
from gevdesign.levels import (annual_return_level, equivalent_design_level,
                              held_flat_years, monthly_quantile)
from gevdesign.nonstationary import FittedModel, fit_seasonal, fit_tensor
from gevdesign.simulate import TruthConfig, simulate_block_maxima
from gevdesign.splines import BasisSpec
from gevdesign.stationary import StationaryFit, fit_gev_mle, return_level_stationary

CONFIG_DEFAULTS = {
    "schema": 1,
    "k_month": 8,
    "k_year": 5,
    "penalty_order": 2,
    "lambda_grid": {"min": 1e-4, "max": 1e4, "num": 15},
    "bootstrap_replicates": 200,
    "min_coverage": 0.8,
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# execution details and file paths stay out of the hash: they do not change
# what is computed (input content identity is tracked by data fingerprints)
_UNHASHED_KEYS = {"func", "workers", "out", "out_model", "validation_out",
                  "dump_replicates", "command", "input", "maxima", "model_file",
                  "ref_local", "ref_model", "fut_model", "truth_config"}


def _meta_lines(payload: dict, seed) -> list[str]:
    hashed = {k: v for k, v in payload.items() if k not in _UNHASHED_KEYS}
    return [
        f"# gevdesign {gevdesign.__version__}",
        f"# config_hash: {_config_hash(hashed)}",
        f"# seed: {'none' if seed is None else seed}",
    ]


def _write_csv(path: str, meta: list[str], columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in meta:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, meta: list[str], payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in meta:
            fh.write(line + "\n")
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        body = "".join(line for line in fh if not line.startswith("#"))
    return json.loads(body)


def write_maxima_csv(path: str, bm: BlockMaximaSeries, meta: list[str]) -> None:
    rows = [(r.year, r.month, r.maximum, r.coverage, int(r.included),
             bm.block_kind, bm.scenario_label) for r in bm.records]
    _write_csv(path, meta, ["year", "month", "maximum", "coverage", "included",
                            "block_kind", "scenario"], rows)


def read_maxima_csv(path: str) -> BlockMaximaSeries:
    records = []
    kind, scenario = None, "unlabeled"
    with open(path, encoding="utf-8") as fh:
        header = None
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                idx = {name: i for i, name in enumerate(header)}
                continue
            month = parts[idx["month"]]
            records.append(BlockRecord(
                year=int(parts[idx["year"]]),
                month=int(month) if month else None,
                maximum=float(parts[idx["maximum"]]) if parts[idx["maximum"]] else float("nan"),
                coverage=float(parts[idx["coverage"]]),
                included=bool(int(parts[idx["included"]])),
            ))
            kind = parts[idx["block_kind"]]
            scenario = parts[idx["scenario"]]
    if not records:
        raise DataError(f"no block maxima records in {path}")
    return BlockMaximaSeries(records=records, block_kind=kind, scenario_label=scenario)


def write_series_csv(path: str, series, meta: list[str]) -> None:
    rows = []
    for t, v in zip(series.timestamps, series.values):
        iso = np.datetime_as_string(t, unit="s") + "Z"
        rows.append((iso, "NaN" if not np.isfinite(v) else _fmt(float(v))))
    _write_csv(path, meta, ["time", "hs"], rows)


def _years_arg(text: str) -> tuple[int, int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return int(a), int(b)
    y = int(text)
    return y, y


def load_model(path: str):
    doc = _read_json(path)
    if doc.get("model_kind") == "stationary":
        fit = StationaryFit.from_dict(doc)
        fit.records = [tuple(r) for r in doc.get("records", [])]  # type: ignore[attr-defined]
        return fit
    return FittedModel.from_dict(doc)


def _load_config(path) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    if path:
        user = _read_json(path)
        if user.get("schema", 1) != 1:
            raise DataError(f"unsupported config schema {user.get('schema')!r}")
        cfg.update(user)
    return cfg


def _lambda_grid(cfg: dict) -> np.ndarray:
    g = cfg["lambda_grid"]
    return np.logspace(np.log10(g["min"]), np.log10(g["max"]), int(g["num"]))


# ---------------------------------------------------------------- subcommands

def cmd_extract(args) -> int:
    series = parse_series(args.input, step_hours=args.step_hours, scenario=args.scenario)
    bm = extract_block_maxima(series, args.block, min_coverage=args.min_coverage)
    meta = _meta_lines(vars(args), seed=None)
    write_maxima_csv(args.out, bm, meta)
    n = bm.n_included()
    print(f"extracted {len(bm.records)} {args.block} blocks ({n} included) -> {args.out}")
    return 0


def cmd_bias_correct(args) -> int:
    ref_local = parse_series(args.ref_local)
    ref_model = parse_series(args.ref_model)
    fut_model = parse_series(args.fut_model)
    corrected = cdft_correct_monthly(ref_local, ref_model, fut_model, min_n=args.min_n)
    meta = _meta_lines(vars(args), seed=None)
    write_series_csv(args.out, corrected, meta)
    if args.validation_out:
        rows = []
        named = [("ref_local", ref_local), ("ref_model", ref_model),
                 ("fut_model", fut_model), ("corrected", corrected)]
        for m in range(1, 13):
            for name, s in named:
                vals = s.values[(s.months() == m) & np.isfinite(s.values)]
                qs = np.quantile(vals, [0.05, 0.25, 0.5, 0.75, 0.95])
                rows.append((m, name, float(vals.mean()), *map(float, qs)))
        _write_csv(args.validation_out, meta,
                   ["month", "series", "mean", "q05", "q25", "q50", "q75", "q95"], rows)
    print(f"bias-corrected {len(corrected)} samples -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    bm = read_maxima_csv(args.maxima)
    meta = _meta_lines({**vars(args), "config": cfg}, seed=None)
    if args.model == "stationary":
        if bm.block_kind != "annual":
            raise DataError("stationary model fits annual maxima; extract with --block annual")
        _, _, values = bm.arrays()
        fit = fit_gev_mle(values)
        doc = {"schema": 1, "model_kind": "stationary", **fit.to_dict(),
               "records": [[r.year, None, r.maximum] for r in bm.included_records()]}
        _write_json(args.out_model, meta, doc)
        print(f"stationary fit: mu={fit.params.mu:.3f} sigma={fit.params.sigma:.3f} "
              f"xi={fit.params.xi:.3f} converged={fit.converged} -> {args.out_model}")
        return 0
    spec = BasisSpec(k_month=cfg["k_month"], k_year=cfg["k_year"],
                     penalty_order=cfg["penalty_order"])
    fit_fn = fit_seasonal if args.model == "seasonal" else fit_tensor
    fit = fit_fn(bm, spec=spec, grid=_lambda_grid(cfg))
    _write_json(args.out_model, meta, fit.to_dict())
    print(f"{args.model} fit: edf={fit.edf:.2f} xi={fit.xi:.3f} "
          f"lambdas={fit.lambdas} -> {args.out_model}")
    return 0


def _model_years(fit, args_years) -> list[int]:
    if args_years is not None:
        return list(range(args_years[0], args_years[1] + 1))
    years = sorted({r[0] for r in fit.records})
    return years


def cmd_quantiles(args) -> int:
    fit = load_model(args.model_file)
    if isinstance(fit, StationaryFit):
        raise DataError("monthly quantiles require a seasonal or tensor model")
    years = _model_years(fit, args.years)
    rows = []
    for year in years:
        for month in range(1, 13):
            rows.append((year, month, monthly_quantile(fit, month, year, args.p)))
    meta = _meta_lines(vars(args), seed=None)
    _write_csv(args.out, meta, ["year", "month", "level"], rows)
    print(f"wrote {len(rows)} monthly p={args.p} quantiles -> {args.out}")
    return 0


def cmd_return_levels(args) -> int:
    fit = load_model(args.model_file)
    years = _model_years(fit, args.years)
    levels = [annual_return_level(fit, args.N, y) for y in years]
    lower = [float("nan")] * len(years)
    upper = [float("nan")] * len(years)
    if args.bootstrap > 0:
        def statistic(refit):
            return np.array([annual_return_level(refit, args.N, y) for y in years])
        boot = parametric_bootstrap(fit, statistic, args.bootstrap, args.seed,
                                    workers=args.workers)
        for j in range(len(years)):
            lower[j], upper[j] = percentile_ci(boot.values[:, j], 0.95)
        print(f"bootstrap: {boot.n_used}/{boot.n_requested} replicates used "
              f"({boot.n_failed} failed)")
    elif isinstance(fit, StationaryFit):
        level, lo, hi = return_level_stationary(fit, args.N)
        lower = [lo] * len(years)
        upper = [hi] * len(years)
    meta = _meta_lines(vars(args), seed=args.seed)
    rows = list(zip(years, levels, lower, upper))
    _write_csv(args.out, meta, ["year", "level", "lower", "upper"], rows)
    print(f"wrote {args.N}-year return levels for {len(years)} years -> {args.out}")
    return 0


def cmd_lifetime_design(args) -> int:
    fit = load_model(args.model_file)
    if args.years is not None:
        first, last = args.years
    else:
        yrs = sorted({r[0] for r in fit.records})
        first, last = yrs[0], yrs[-1]
    years = held_flat_years(first, last, args.lifetime)
    result = equivalent_design_level(fit, years, args.p_annual)
    payload = result.to_dict()
    if not all(np.isfinite(v) for v in payload["interval"]):
        payload["interval"] = None
    payload["years_window"] = [first, last]
    payload["years_extension_rule"] = "terminal year held flat to reach lifetime"
    payload["bootstrap_replicates"] = args.bootstrap
    if args.bootstrap > 0:
        def statistic(refit):
            return equivalent_design_level(refit, years, args.p_annual).level
        boot = parametric_bootstrap(fit, statistic, args.bootstrap, args.seed,
                                    workers=args.workers)
        lo, hi = percentile_ci(boot.values[:, 0] if boot.values.ndim > 1 else boot.values, 0.95)
        payload["interval"] = [lo, hi]
        payload["bootstrap_used"] = boot.n_used
        payload["bootstrap_failed"] = boot.n_failed
        if args.dump_replicates:
            reps = boot.values.ravel()
            _write_csv(args.dump_replicates, _meta_lines(vars(args), args.seed),
                       ["replicate", "level"], list(enumerate(map(float, reps))))
    meta = _meta_lines(vars(args), seed=args.seed)
    _write_json(args.out, meta, payload)
    print(f"design level {result.level:.3f} m (survival target "
          f"{result.target_survival:.4f}, method {result.method}) -> {args.out}")
    return 0


def cmd_diagnose(args) -> int:
    fit = load_model(args.model_file)
    bm = read_maxima_csv(args.maxima)
    if isinstance(fit, FittedModel):
        from gevdesign.nonstationary import data_fingerprint
        years, months, values = bm.arrays()
        if data_fingerprint(years, months, values) != fit.data_fingerprint:
            print("warning: maxima differ from the data the model was fitted on",
                  file=sys.stderr)
    resid = pit_residuals(fit, bm)
    rho, band = acf(resid.values, args.max_lag)
    phi, _ = pacf(resid.values, args.max_lag)
    qq = qq_data(fit, bm)
    meta = _meta_lines(vars(args), seed=None)
    _write_csv(f"{args.out}.acf.csv", meta, ["lag", "acf", "band"],
               [(k, float(rho[k]), band) for k in range(len(rho))])
    _write_csv(f"{args.out}.pacf.csv", meta, ["lag", "pacf", "band"],
               [(k + 1, float(phi[k]), band) for k in range(len(phi))])
    _write_csv(f"{args.out}.qq.csv", meta, ["empirical", "model"],
               [(float(a), float(b)) for a, b in qq])
    _write_csv(f"{args.out}.resid.csv", meta, ["year", "month", "residual"],
               [(y, m, float(v)) for (y, m), v in zip(resid.labels, resid.values)])
    n_out = int(np.sum(np.abs(rho[1:]) > band))
    print(f"diagnostics: {resid.values.size} residuals ({resid.n_gaps} gaps), "
          f"{n_out}/{args.max_lag} ACF lags outside the white-noise band -> {args.out}.*.csv")
    return 0


def cmd_simulate(args) -> int:
    config = TruthConfig.from_dict(_read_json(args.truth_config)) if args.truth_config \
        else TruthConfig()
    first, last = args.years
    bm = simulate_block_maxima(config, first, last, seed=args.seed)
    meta = _meta_lines({**vars(args), "truth": config.to_dict()}, seed=args.seed)
    write_maxima_csv(args.out, bm, meta)
    print(f"simulated {len(bm.records)} monthly maxima for {first}..{last} -> {args.out}")
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gevdesign",
        description="Non-stationary GEV extreme sea-state modeling from block maxima",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract block maxima from a raw series CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--block", choices=["monthly", "annual"], required=True)
    p.add_argument("--min-coverage", type=float, default=0.8)
    p.add_argument("--scenario", default=None)
    p.add_argument("--step-hours", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bias-correct", help="per-month CDF-t correction of a model series")
    p.add_argument("--ref-local", required=True)
    p.add_argument("--ref-model", required=True)
    p.add_argument("--fut-model", required=True)
    p.add_argument("--min-n", type=int, default=30)
    p.add_argument("--validation-out", default=None,
                   help="optional per-month mean/CDF comparison table")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bias_correct)

    p = sub.add_parser("fit", help="fit a GEV model to block maxima")
    p.add_argument("--maxima", required=True)
    p.add_argument("--model", choices=["stationary", "seasonal", "tensor"], required=True)
    p.add_argument("--config", default=None, help="JSON config (schema 1)")
    p.add_argument("--out-model", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("quantiles", help="monthly quantile surface from a fitted model")
    p.add_argument("--model-file", required=True)
    p.add_argument("--p", type=float, default=0.99)
    p.add_argument("--years", type=_years_arg, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quantiles)

    p = sub.add_parser("return-levels", help="annual return levels per year")
    p.add_argument("--model-file", required=True)
    p.add_argument("--N", type=float, default=100.0)
    p.add_argument("--years", type=_years_arg, default=None)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_return_levels)

    p = sub.add_parser("lifetime-design", help="lifetime-equivalent design level")
    p.add_argument("--model-file", required=True)
    p.add_argument("--lifetime", type=int, default=30)
    p.add_argument("--p-annual", type=float, default=0.01)
    p.add_argument("--years", type=_years_arg, default=None)
    p.add_argument("--bootstrap", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-replicates", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lifetime_design)

    p = sub.add_parser("diagnose", help="residual ACF/PACF and QQ data")
    p.add_argument("--model-file", required=True)
    p.add_argument("--maxima", required=True)
    p.add_argument("--max-lag", type=int, default=24)
    p.add_argument("--out", required=True, help="output prefix for .acf/.pacf/.qq/.resid CSVs")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", help="synthetic monthly maxima with known truth")
    p.add_argument("--truth-config", default=None, help="JSON truth config (schema 1)")
    p.add_argument("--years", type=_years_arg, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GevDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
