"""Command-line front end and table/report formats.

Three subcommands: ``test`` (global and per-arm contrast test),
``subgroup`` (heterogeneity search), and ``simulate`` (Monte Carlo size
and power). Input is comma-delimited UTF-8 text with a header row; the
report is a structured text document with stable key ordering whose body
(everything above the timings section) is byte-reproducible for a fixed
seed.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .data_model import Arm, ColumnSpec, ObservationFrame, validate_frame
from .dml import DmlConfig, run_test_detailed
from .errors import IdentTestError, ParseError
from .simulation import DgpConfig, run_monte_carlo
from .subgroup import SubgroupConfig, bh_adjust, run_subgroup_analysis

ARM_ORDER = (Arm.ALL, Arm.TREATED, Arm.CONTROL)


# ---------------------------------------------------------------------------
# table ingestion / serialization

def _check_distinct_roles(spec: ColumnSpec) -> None:
    names = [spec.outcome, spec.treatment, spec.instrument, *spec.covariates]
    if len(set(names)) != len(names):
        raise ParseError("column roles must refer to distinct columns: "
                         + ",".join(names))


def ingest_table(path: str, spec: ColumnSpec) -> ObservationFrame:
    """Parse a comma-delimited table and validate it into a frame."""
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise ParseError(f"{path}: empty file")
        names = [h.strip() for h in header_line.rstrip("\n").split(",")]
        if len(set(names)) != len(names):
            raise ParseError(f"{path}: duplicate header names")
        columns = {name: [] for name in names}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(names):
                raise ParseError(f"{path}:{lineno}: expected {len(names)} fields, "
                                 f"got {len(fields)}")
            for name, raw in zip(names, fields):
                try:
                    columns[name].append(float(raw))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: {raw!r} is not numeric") from None
    if spec.covariates == ("rest",) or list(spec.covariates) == ["rest"]:
        reserved = {spec.outcome, spec.treatment, spec.instrument}
        spec = ColumnSpec(spec.outcome, spec.treatment, spec.instrument,
                          tuple(n for n in names if n not in reserved))
    _check_distinct_roles(spec)
    return validate_frame(columns, spec)


def write_table(frame: ObservationFrame, path: str) -> None:
    """Serialize a frame so that re-ingestion reproduces it exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        header = ["y", "d", "z", *frame.feature_names]
        fh.write(",".join(header) + "\n")
        for i in range(frame.n):
            cells = [f"{frame.y[i]:.17g}", str(int(frame.d[i])), str(int(frame.z[i]))]
            cells += [f"{v:.17g}" for v in frame.x[i]]
            fh.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# report rendering

def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


class ReportBuilder:
    def __init__(self, command: str):
        self.lines = [f"identest report", f"version: {__version__}",
                      f"command: {command}"]
        self.has_results = False
        self.start = time.monotonic()

    def section(self, name: str):
        self.lines.append("")
        self.lines.append(f"[{name}]")

    def kv(self, key: str, value):
        self.lines.append(f"{key}: {_fmt(value)}")

    def table(self, header, rows):
        widths = [max(len(str(h)), *(len(c) for c in col)) if rows else len(str(h))
                  for h, col in zip(header, zip(*rows))] if rows else [len(h) for h in header]
        self.lines.append("  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip())
        for row in rows:
            self.lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())

    def render(self) -> str:
        self.section("timings")
        self.kv("wall_clock_seconds", round(time.monotonic() - self.start, 3))
        return "\n".join(self.lines) + "\n"


def _config_section(rb: ReportBuilder, items: dict):
    rb.section("config")
    for key in sorted(items):
        rb.kv(key, items[key])


# ---------------------------------------------------------------------------
# commands

def _dml_config(args) -> DmlConfig:
    return DmlConfig(folds=args.folds, learner=args.learner, trim=args.trim,
                     seed=args.seed)


def command_test(args, rb: ReportBuilder) -> bool:
    spec = ColumnSpec(args.outcome, args.treatment, args.instrument,
                      tuple(args.covariates.split(",")))
    frame = ingest_table(args.input, spec)
    config = _dml_config(args)
    _config_section(rb, {
        "input": args.input, "outcome": args.outcome, "treatment": args.treatment,
        "instrument": args.instrument, "covariates": ",".join(frame.feature_names),
        "learner": config.learner, "folds": config.folds, "trim": config.trim,
        "seed": config.seed, "n": frame.n, "p": frame.p,
    })
    results = {}
    errors = {}
    details = {}
    for arm in ARM_ORDER:
        try:
            res, folds, nuis, scores = run_test_detailed(frame, arm, config)
            results[arm] = res
            details[arm] = (folds, nuis, scores)
        except IdentTestError as exc:
            errors[arm] = f"{type(exc).__name__}: {exc}"
    adj = {}
    if Arm.TREATED in results and Arm.CONTROL in results:
        raw = [results[Arm.TREATED].p_value, results[Arm.CONTROL].p_value]
        adj_vals = bh_adjust(raw)
        adj = {Arm.TREATED: float(adj_vals[0]), Arm.CONTROL: float(adj_vals[1])}

    if results:
        rb.section("results")
        rows = []
        for arm in ARM_ORDER:
            if arm not in results:
                continue
            r = results[arm]
            rows.append([arm.value, f"{r.delta_hat:.3f}", f"{r.std_error:.3f}",
                         f"{r.p_value:.3f}",
                         f"{adj[arm]:.3f}" if arm in adj else "-",
                         str(r.n_used), str(r.n_total)])
        rb.table(["arm", "est", "se", "pval", "adj", "n_used", "n_total"], rows)
        rb.has_results = True

        rb.section("machine")
        for arm in ARM_ORDER:
            if arm not in results:
                continue
            r = results[arm]
            for key, val in (("delta_hat", r.delta_hat), ("std_error", r.std_error),
                             ("t_stat", r.t_stat), ("p_value", r.p_value),
                             ("n_used", r.n_used), ("n_total", r.n_total),
                             ("zero_variance", r.zero_variance)):
                rb.kv(f"{arm.value}.{key}", val)
            if arm in adj:
                rb.kv(f"{arm.value}.p_value_adj", adj[arm])

    rb.section("diagnostics")
    for arm in ARM_ORDER:
        if arm in errors:
            rb.kv(f"{arm.value}.error", errors[arm])
            continue
        folds, nuis, scores = details[arm]
        sizes = np.bincount(folds.fold_of, minlength=folds.k)
        rb.kv(f"{arm.value}.fold_sizes", ",".join(map(str, sizes)))
        rb.kv(f"{arm.value}.n_trimmed", int((~scores.kept).sum()))
        for diag in nuis.diagnostics:
            for key in ("lambda_mu1", "lambda_mu0", "lambda_p"):
                if key in diag:
                    rb.kv(f"{arm.value}.fold{diag['fold']}.{key}", diag[key])
    return bool(results)


def command_subgroup(args, rb: ReportBuilder) -> bool:
    spec = ColumnSpec(args.outcome, args.treatment, args.instrument,
                      tuple(args.covariates.split(",")))
    frame = ingest_table(args.input, spec)
    bins = (2, 4) if args.bins is None else (args.bins,)
    config = SubgroupConfig(dml=_dml_config(args), num_bins=bins, seed=args.seed)
    _config_section(rb, {
        "input": args.input, "outcome": args.outcome, "treatment": args.treatment,
        "instrument": args.instrument, "covariates": ",".join(frame.feature_names),
        "learner": config.dml.learner, "folds": config.dml.folds,
        "trim": config.dml.trim, "seed": config.seed,
        "bins": ",".join(map(str, bins)), "n": frame.n, "p": frame.p,
    })
    reports = run_subgroup_analysis(frame, config)

    rb.section("results")
    first = reports[bins[0]]
    rb.kv("split_variable", first.partition.source_variable)
    for num_bins, rep in sorted(reports.items()):
        rb.lines.append("")
        rb.kv(f"partition_{num_bins}.cut_points",
              ",".join(f"{c:.3f}" for c in rep.partition.cut_points))
        rows = []
        for m in range(num_bins):
            rows.append([f"leaf {m + 1}", str(rep.leaves.n_m[m]),
                         f"{rep.leaves.delta_hat_m[m]:.3f}",
                         f"{rep.leaves.se_m[m]:.3f}",
                         f"{rep.leaves.p_m[m]:.3f}",
                         f"{rep.leaves.p_adj_m[m]:.3f}"])
        rb.table(["leaf", "n", "est", "se", "pval", "adj"], rows)
        rb.kv(f"joint_{num_bins}.wald_stat", round(rep.joint.wald_stat, 3))
        rb.kv(f"joint_{num_bins}.p_value", round(rep.joint.p_value, 3))
    rb.has_results = True

    rb.section("machine")
    for num_bins, rep in sorted(reports.items()):
        prefix = f"bins{num_bins}"
        rb.kv(f"{prefix}.source_variable", rep.partition.source_variable)
        rb.kv(f"{prefix}.cut_points",
              ",".join(f"{c:.17g}" for c in rep.partition.cut_points))
        for m in range(num_bins):
            for key, arr in (("n", rep.leaves.n_m), ("delta_hat", rep.leaves.delta_hat_m),
                             ("std_error", rep.leaves.se_m), ("p_value", rep.leaves.p_m),
                             ("p_value_adj", rep.leaves.p_adj_m)):
                rb.kv(f"{prefix}.leaf{m}.{key}",
                      int(arr[m]) if key == "n" else float(arr[m]))
        rb.kv(f"{prefix}.wald_stat", rep.joint.wald_stat)
        rb.kv(f"{prefix}.wald_df", rep.joint.df)
        rb.kv(f"{prefix}.wald_p_value", rep.joint.p_value)

    rb.section("diagnostics")
    for rank, (name, importance) in enumerate(first.importance_ranking, start=1):
        rb.kv(f"importance.{rank}.{name}", importance)
    return True


def command_simulate(args, rb: ReportBuilder) -> bool:
    estimator = _dml_config(args)
    if args.n is None and args.delta is None and args.gamma is None:
        regimes = [(n, d, g) for (d, g) in ((0.0, 0.0), (0.5, 0.0), (0.0, 0.2))
                   for n in (1000, 4000)]
    else:
        regimes = [(args.n or 1000, args.delta or 0.0, args.gamma or 0.0)]
    p = args.p or 50
    _config_section(rb, {
        "replications": args.reps, "alpha": args.alpha, "p": p,
        "learner": estimator.learner, "folds": estimator.folds,
        "trim": estimator.trim, "seed": args.seed, "threads": args.threads,
        "regimes": ";".join(f"n={n},delta={d:g},gamma={g:g}" for n, d, g in regimes),
    })
    summaries = []
    for n, delta, gamma in regimes:
        cfg = DgpConfig(n=n, p=p, delta=delta, gamma=gamma, seed=args.seed)
        summaries.append((n, delta, gamma,
                          run_monte_carlo(cfg, args.reps, estimator,
                                          alpha=args.alpha, n_jobs=args.threads)))
    rb.section("results")
    rows = []
    for n, delta, gamma, s in summaries:
        rows.append([str(n), f"{delta:.3f}", f"{gamma:.3f}", f"{s.mean_est:.3f}",
                     f"{s.std_est:.3f}", f"{s.mean_se:.3f}",
                     f"{s.rejection_rate:.3f}", str(s.failures)])
    rb.table(["n", "delta", "gamma", "est", "std", "mean se", "rejection rate",
              "failures"], rows)
    rb.has_results = True

    rb.section("machine")
    for n, delta, gamma, s in summaries:
        prefix = f"n{n}.delta{delta:g}.gamma{gamma:g}"
        rb.kv(f"{prefix}.mean_est", s.mean_est)
        rb.kv(f"{prefix}.std_est", s.std_est)
        rb.kv(f"{prefix}.mean_se", s.mean_se)
        rb.kv(f"{prefix}.rejection_rate", s.rejection_rate)
        rb.kv(f"{prefix}.alpha", s.alpha)
        rb.kv(f"{prefix}.replications", s.replications)
        rb.kv(f"{prefix}.failures", s.failures)
    return True


# ---------------------------------------------------------------------------
# argument handling

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="identest",
        description="Test identifiability of treatment effects via a suspected instrument")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--learner", choices=["lasso", "forest"], default=None)
        p.add_argument("--folds", type=int, default=None)
        p.add_argument("--trim", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--output", default=None)
        p.add_argument("--config", default=None,
                       help="key=value file; command-line flags take precedence")

    def data_flags(p):
        p.add_argument("--input", default=None)
        p.add_argument("--outcome", default=None)
        p.add_argument("--treatment", default=None)
        p.add_argument("--instrument", default=None)
        p.add_argument("--covariates", default=None,
                       help='comma-separated names, or "rest"')

    p_test = sub.add_parser("test", help="global and per-arm contrast test")
    data_flags(p_test)
    common(p_test)

    p_sub = sub.add_parser("subgroup", help="subgroup heterogeneity analysis")
    data_flags(p_sub)
    p_sub.add_argument("--bins", type=int, choices=[2, 4], default=None)
    common(p_sub)

    p_sim = sub.add_parser("simulate", help="Monte Carlo size/power study")
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--p", type=int, default=None)
    p_sim.add_argument("--delta", type=float, default=None)
    p_sim.add_argument("--gamma", type=float, default=None)
    p_sim.add_argument("--reps", type=int, default=None)
    p_sim.add_argument("--alpha", type=float, default=None)
    common(p_sim)
    return parser


_DEFAULTS = {
    "learner": "lasso", "folds": 3, "trim": 0.01, "seed": 0, "threads": 1,
    "outcome": "y", "treatment": "d", "instrument": "z", "covariates": "rest",
    "reps": 100, "alpha": 0.05,
}

_TYPES = {
    "folds": int, "seed": int, "threads": int, "bins": int, "n": int, "p": int,
    "reps": int, "trim": float, "delta": float, "gamma": float, "alpha": float,
}


def _load_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            values[key] = _TYPES.get(key, str)(raw)
    return values


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    file_values = _load_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if value is None:
            if key in file_values:
                setattr(args, key, file_values[key])
            elif key in _DEFAULTS:
                setattr(args, key, _DEFAULTS[key])
    return args


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args = _merge_config(args)
        if args.command in ("test", "subgroup") and not args.input:
            raise ParseError("--input is required (flag or config file)")
        rb = ReportBuilder(args.command)
        if args.command == "test":
            ok = command_test(args, rb)
        elif args.command == "subgroup":
            ok = command_subgroup(args, rb)
        else:
            ok = command_simulate(args, rb)
        text = rb.render()
    except (IdentTestError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
