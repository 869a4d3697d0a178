"""Command-line surface: test, pairwise, simulate, diag.

Group order on the command line defines the column order of the contrast
matrix; every ``--data`` flag appends one group. Validation failures print a
single machine-parsable JSON line to stderr and exit with code 2; a
statistical rejection never changes the exit code.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from pathlib import Path

from . import __version__
from .contrasts import build_hypothesis, linear_combination_contrast, manova_contrast
from .errors import ConfigError, DimensionMismatch, HdglhtError
from .io import DatasetManifest, load_contrast, load_groups, load_weights
from .kernels import omega_traces_estimated
from .simulate import MODELS, SimConfig, empirical_rejection_rate, resolve_covariances
from .weights import default_weights
from .wstest import plug_in_d_star, report_to_json, run_test, statistic_tn, ws_fit
from .special import chi2_sf

SEED_ENV_VAR = "HDLHT_SEED"

_CSV_COLUMNS = [
    "model",
    "scenario",
    "contrast",
    "p",
    "n1",
    "n2",
    "n3",
    "n4",
    "r",
    "rho",
    "alpha",
    "reps",
    "seed",
    "reject_rate",
    "degenerate_count",
]


def _emit_error(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("pointer", "path", "line"):
        value = getattr(exc, attr, None)
        if value not in (None, ""):
            payload[attr] = value
    print(json.dumps(payload), file=sys.stderr)


def _manifest_from_args(args) -> DatasetManifest:
    labels = ()
    if args.labels:
        labels = tuple(s.strip() for s in args.labels.split(","))
    return DatasetManifest(
        group_files=tuple(args.data),
        has_header=args.header,
        delimiter=args.delimiter,
        group_labels=labels,
    )


def _resolve_cli_contrast(spec: str, k: int):
    if spec == "manova":
        return manova_contrast(k)
    if spec.startswith("combo:"):
        coeffs = [float(v) for v in spec[len("combo:") :].split(",")]
        if len(coeffs) != k:
            raise DimensionMismatch(
                f"combination contrast has {len(coeffs)} coefficients for k={k} groups"
            )
        return linear_combination_contrast(coeffs)
    contrast = load_contrast(spec)
    if contrast.k != k:
        raise DimensionMismatch(
            f"contrast file has k={contrast.k} columns but {k} groups were given"
        )
    return contrast


def _resolve_cli_weights(spec: str, p: int):
    if spec == "default":
        return default_weights(p)
    w = load_weights(spec)
    if w.p != p:
        raise DimensionMismatch(f"weights file has p={w.p} rows but data has p={p}")
    return w


def _write_text(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)
    else:
        print(text)


def cmd_test(args) -> int:
    manifest = _manifest_from_args(args)
    samples = load_groups(manifest)
    p = samples[0].p
    ctx = build_hypothesis(
        _resolve_cli_contrast(args.contrast, manifest.k), [s.n for s in samples]
    )
    w = _resolve_cli_weights(args.weights, p)
    report = run_test(ctx, w, samples, args.alpha, diagnostics=args.diagnostics)
    _write_text(args.out, report_to_json(report) + "\n")
    if args.out:
        print(
            f"statistic={report.t_n:.6f} p_value={report.p_value:.6g} "
            f"reject={report.reject} -> {args.out}"
        )
    return 0


def cmd_pairwise(args) -> int:
    manifest = _manifest_from_args(args)
    samples = load_groups(manifest)
    p = samples[0].p
    w = _resolve_cli_weights(args.weights, p)
    lines = ["pair,statistic,p_value,beta_hat,d_hat,reject"]
    for i, j in itertools.combinations(range(manifest.k), 2):
        ctx = build_hypothesis(
            linear_combination_contrast([1.0, -1.0]),
            [samples[i].n, samples[j].n],
        )
        report = run_test(ctx, w, [samples[i], samples[j]], args.alpha)
        label = f"{manifest.group_labels[i]} vs {manifest.group_labels[j]}"
        lines.append(
            f"{label},{report.t_n:.17g},{report.p_value:.17g},"
            f"{report.beta_hat:.17g},{report.d_hat:.17g},{report.reject}"
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_diag(args) -> int:
    manifest = _manifest_from_args(args)
    samples = load_groups(manifest)
    p = samples[0].p
    ctx = build_hypothesis(
        _resolve_cli_contrast(args.contrast, manifest.k), [s.n for s in samples]
    )
    w = _resolve_cli_weights(args.weights, p)
    t_n = statistic_tn(ctx, w, samples)
    traces = omega_traces_estimated(ctx, w, samples)
    beta, d, warnings = ws_fit(traces)
    d_star_val = plug_in_d_star(ctx, w, samples)
    rows = [
        ("statistic", t_n),
        ("beta_hat", beta),
        ("d_hat", d),
        ("d_star", d_star_val),
        ("p_value", chi2_sf(t_n / beta, d)),
        ("tr_omega", traces.tr_omega),
        ("tr2_omega", traces.tr2_omega),
        ("tr_omega_sq", traces.tr_omega_sq),
    ]
    for name, value in rows:
        print(f"{name:12s} {value:.17g}")
    if warnings:
        print(f"{'warnings':12s} {','.join(warnings)}")
    return 0


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in value.items()))
    return value


def _cfg_list(doc: dict, key: str, pointer_root: str = "") -> list:
    if key not in doc:
        raise ConfigError(f"missing field {key!r}", pointer=f"{pointer_root}/{key}")
    value = doc[key]
    if not isinstance(value, list) or not value:
        raise ConfigError(
            f"field {key!r} must be a non-empty list", pointer=f"{pointer_root}/{key}"
        )
    return value


def _scenario_entry(value, idx: int):
    pointer = f"/scenarios/{idx}"
    if isinstance(value, str):
        if value not in ("s1", "s2"):
            raise ConfigError(f"unknown scenario {value!r}", pointer=pointer)
        return value, value
    if isinstance(value, list):
        return _freeze(value), "custom"
    raise ConfigError("scenario must be a string or a list of factor specs", pointer=pointer)


def _contrast_entry(value):
    if isinstance(value, str):
        if value == "manova" or value.startswith("combo:"):
            return value, value
        raise ConfigError(f"unknown contrast {value!r}", pointer="/contrast")
    if isinstance(value, list):
        return _freeze(value), "custom"
    raise ConfigError("contrast must be a string or a coefficient matrix", pointer="/contrast")


def expand_grid(doc: dict) -> list[tuple[SimConfig, dict]]:
    """Cartesian product of the config grid; returns (cell, csv-fields) pairs."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", pointer="")
    models = _cfg_list(doc, "models")
    for i, m in enumerate(models):
        if m not in MODELS:
            raise ConfigError(
                f"model must be one of {MODELS}, got {m!r}", pointer=f"/models/{i}"
            )
    scenarios = [
        _scenario_entry(s, i) for i, s in enumerate(_cfg_list(doc, "scenarios"))
    ]
    contrast_value, contrast_label = _contrast_entry(doc.get("contrast", "manova"))
    p_values = _cfg_list(doc, "p")
    for i, p in enumerate(p_values):
        if not isinstance(p, int) or p < 1:
            raise ConfigError(f"p must be a positive integer, got {p!r}", pointer=f"/p/{i}")
    n_sets = _cfg_list(doc, "n_sets")
    for i, ns in enumerate(n_sets):
        if (
            not isinstance(ns, list)
            or len(ns) != 4
            or any(not isinstance(v, int) or v < 3 for v in ns)
        ):
            raise ConfigError(
                "each n_set must be four integers >= 3", pointer=f"/n_sets/{i}"
            )
    r_values = _cfg_list(doc, "r")
    rho_values = _cfg_list(doc, "rho")
    alpha = doc.get("alpha", 0.05)
    reps = doc.get("reps", 2000)
    seed = doc.get("seed", 0)
    if not isinstance(reps, int) or reps < 1:
        raise ConfigError(f"reps must be a positive integer, got {reps!r}", pointer="/reps")
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}", pointer="/seed")

    cells = []
    for model, (scenario, scen_label), p, ns, r, rho in itertools.product(
        models, scenarios, p_values, n_sets, r_values, rho_values
    ):
        try:
            cfg = SimConfig(
                model=model,
                scenario=scenario,
                contrast=contrast_value,
                p=p,
                n=tuple(ns),
                r=float(r),
                rho=float(rho),
                alpha=float(alpha),
                reps=reps,
                seed=seed,
            )
        except HdglhtError:
            raise
        fields = {
            "model": model,
            "scenario": scen_label,
            "contrast": contrast_label,
            "p": str(p),
            "n1": str(ns[0]),
            "n2": str(ns[1]),
            "n3": str(ns[2]),
            "n4": str(ns[3]),
            "r": format(float(r), ".6g"),
            "rho": format(float(rho), ".6g"),
            "alpha": format(float(alpha), ".6g"),
            "reps": str(reps),
            "seed": str(seed),
        }
        cells.append((cfg, fields))
    return cells


def _cell_key(fields: dict) -> tuple:
    return tuple(fields[c] for c in _CSV_COLUMNS[:13])


def _existing_keys(path: Path) -> set[tuple]:
    keys = set()
    if not path.exists() or path.stat().st_size == 0:
        return keys
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            try:
                keys.add(tuple(row[c] for c in _CSV_COLUMNS[:13]))
            except KeyError:
                continue
    return keys


def cmd_simulate(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if args.seed is not None:
        doc["seed"] = args.seed
    cells = expand_grid(doc)
    out = Path(args.out)
    done = _existing_keys(out)
    write_header = not out.exists() or out.stat().st_size == 0
    ran = skipped = 0
    with open(out, "a", newline="") as handle:
        writer = csv.writer(handle)
        if write_header:
            writer.writerow(_CSV_COLUMNS)
        for cfg, fields in cells:
            if _cell_key(fields) in done:
                skipped += 1
                continue
            result = empirical_rejection_rate(cfg, workers=args.workers)
            row = [fields[c] for c in _CSV_COLUMNS[:13]]
            row += [f"{result.rate:.6f}", str(result.degenerate_count)]
            writer.writerow(row)
            handle.flush()
            done.add(_cell_key(fields))
            ran += 1
            print(
                f"{fields['model']}/{fields['scenario']} p={fields['p']} "
                f"n=({fields['n1']},{fields['n2']},{fields['n3']},{fields['n4']}) "
                f"r={fields['r']} rho={fields['rho']}: "
                f"reject_rate={result.rate:.6f}"
            )
    print(f"{ran} cell(s) run, {skipped} skipped (already in {out})")
    return 0


def _add_data_options(sub) -> None:
    sub.add_argument(
        "--data",
        action="append",
        required=True,
        metavar="FILE",
        help="group data file (repeat once per group, in contrast column order)",
    )
    sub.add_argument(
        "--header",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="whether group files carry a header row",
    )
    sub.add_argument("--delimiter", default=",", help="cell delimiter (default ,)")
    sub.add_argument(
        "--labels", default="", help="comma-separated group labels (default: file stems)"
    )
    sub.add_argument(
        "--weights",
        default="default",
        help="'default' or a CSV file with header alpha,beta2",
    )
    sub.add_argument("--alpha", type=float, default=0.05, help="significance level")
    sub.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdglht",
        description=(
            "Random-integration tests for linear hypotheses on the means of "
            "several high-dimensional groups with unequal covariances."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    test = commands.add_parser("test", help="run one linear-hypothesis test")
    _add_data_options(test)
    test.add_argument(
        "--contrast",
        default="manova",
        help="'manova', 'combo:c1,c2,...', or a CSV file (q rows, k columns, no header)",
    )
    test.add_argument(
        "--diagnostics",
        action="store_true",
        help="also compute the d_star adaptivity diagnostic (p <= 3000)",
    )
    test.set_defaults(func=cmd_test)

    pairwise = commands.add_parser(
        "pairwise", help="two-sample tests for every unordered pair of groups"
    )
    _add_data_options(pairwise)
    pairwise.set_defaults(func=cmd_pairwise)

    diag = commands.add_parser(
        "diag", help="print calibration diagnostics (d_star, d_hat, beta_hat, traces)"
    )
    _add_data_options(diag)
    diag.add_argument("--contrast", default="manova", help="as for 'test'")
    diag.set_defaults(func=cmd_diag)

    simulate = commands.add_parser(
        "simulate", help="run a Monte Carlo size/power grid from a JSON config"
    )
    simulate.add_argument("--config", required=True, help="JSON grid config")
    simulate.add_argument("--out", required=True, help="CSV results file (appended)")
    simulate.add_argument("--workers", type=int, default=1, help="parallel workers")
    simulate.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"override the config seed (env {SEED_ENV_VAR} overrides this flag)",
    )
    simulate.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None and hasattr(args, "seed"):
        try:
            args.seed = int(env_seed)
        except ValueError as exc:
            _emit_error(ConfigError(f"{SEED_ENV_VAR} must be an integer: {env_seed!r}"))
            return 2
    try:
        return args.func(args)
    except HdglhtError as exc:
        _emit_error(exc)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
