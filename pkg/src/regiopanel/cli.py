"""Command-line interface.

Subcommands: ``estimate``, ``study``, ``simulate``, ``validate``.
Exit status: 0 success, 1 estimation failure, 2 usage, configuration or
input-data error.

Settings come from an optional INI-style ``--config`` file (sections
``[run]``, ``[model]``, ``[dgp]``) and are overridden by command-line
flags.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, field, replace

from . import __version__
from .errors import ConfigError, PanelError
from .estimators import estimate
from .models import INDUSTRIES, PERIODS, LaborMeasure, industry, period_by_id, run_study, spec_for_period
from .panel import ColumnRoles, ZeroPolicy, balance_check, dump_panel, load_panel, subset_period
from .report import FORMATS, render_table
from .specs import Effects, EventDummy, ModelSpec
from .synthetic import PRESET_HARNESS, PRESETS, DgpSpec, monte_carlo, study_panel

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

_EFFECTS = {"auto": Effects.AUTO, "fe": Effects.FIXED_DUMMIES, "within": Effects.FIXED_WITHIN,
            "re": Effects.RANDOM, "pooled": Effects.POOLED}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    data_path: str | None = None
    study: str | None = None
    industry: str | None = None
    dependent: str | None = None
    regressors: tuple[str, ...] = ()
    event_dummies: tuple[EventDummy, ...] = ()
    log_all: bool = True
    effects: str = "auto"
    alpha: float = 0.05
    zero_policy: str = "error"
    labor: str = "own"
    format: str = "text"
    out: str | None = None
    seed: int | None = None
    harness: str = "size"
    reps: int | None = None
    dgp: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not (isinstance(self.alpha, float) and 0.0 < self.alpha < 1.0):
            raise UsageError(f"alpha must lie strictly between 0 and 1, got {self.alpha}")
        if self.effects not in _EFFECTS:
            raise UsageError(f"effects must be one of {sorted(_EFFECTS)}, got {self.effects!r}")
        if self.zero_policy not in ("error", "drop"):
            raise UsageError(f"zero-policy must be 'error' or 'drop', got {self.zero_policy!r}")
        if self.labor not in ("own", "total"):
            raise UsageError(f"labor must be 'own' or 'total', got {self.labor!r}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.study is not None:
            try:
                period_by_id(self.study)
            except KeyError as exc:
                raise UsageError(exc.args[0]) from None
        if self.command == "estimate":
            explicit = self.dependent is not None or bool(self.regressors)
            if explicit == (self.study is not None):
                raise UsageError("give exactly one of --study (with --industry) or an explicit "
                                 "model (--dependent and --regressors)")
            if explicit and not (self.dependent and self.regressors):
                raise UsageError("an explicit model needs both --dependent and --regressors")
            if self.study is not None:
                if self.industry is None:
                    raise UsageError("--study with estimate needs --industry")
                try:
                    industry(self.industry)
                except KeyError as exc:
                    raise UsageError(exc.args[0]) from None
        if self.command == "study" and self.study is None:
            valid = ", ".join(p.label for p in PERIODS)
            raise UsageError(f"study needs --study; valid studies: {valid}")
        if self.command in ("estimate", "study", "validate") and not self.data_path:
            raise UsageError("--data is required")
        if self.command == "simulate" and self.harness not in (*PRESET_HARNESS, "panel"):
            raise UsageError(f"unknown harness {self.harness!r}")


def _parse_event(text: str) -> EventDummy:
    name, sep, year = text.partition(":")
    if not sep:
        raise UsageError(f"event dummy must look like NAME:YEAR, got {text!r}")
    try:
        return EventDummy(name.strip(), int(year))
    except ValueError:
        raise UsageError(f"event dummy year is not an integer: {text!r}") from None


def _split(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.replace(";", ",").split(",") if s.strip())


def _read_config(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    settings: dict = {}
    run = cp["run"] if cp.has_section("run") else {}
    for key in ("data", "study", "industry", "effects", "alpha", "zero_policy", "labor",
                "format", "out", "seed", "harness", "reps"):
        if key in run:
            settings[key] = run[key]
    if cp.has_section("model"):
        m = cp["model"]
        if "dependent" in m:
            settings["dependent"] = m["dependent"]
        if "regressors" in m:
            settings["regressors"] = m["regressors"]
        if "event_dummies" in m:
            settings["event_dummies"] = m["event_dummies"]
        if "log_all" in m:
            settings["log_all"] = m.getboolean("log_all")
    if cp.has_section("dgp"):
        settings["dgp"] = dict(cp["dgp"])
    return settings


def build_config(args: argparse.Namespace) -> RunConfig:
    file_settings = _read_config(args.config) if getattr(args, "config", None) else {}
    flags = {
        "data": args.data, "study": getattr(args, "study", None),
        "industry": getattr(args, "industry", None), "effects": args.effects,
        "alpha": args.alpha, "zero_policy": args.zero_policy, "labor": getattr(args, "labor", None),
        "format": args.format, "out": args.out, "seed": getattr(args, "seed", None),
        "harness": getattr(args, "harness", None), "reps": getattr(args, "reps", None),
        "dependent": getattr(args, "dependent", None), "regressors": getattr(args, "regressors", None),
        "event_dummies": ",".join(getattr(args, "event_dummy", None) or ()) or None,
    }
    merged = {**file_settings, **{k: v for k, v in flags.items() if v is not None}}
    if getattr(args, "no_log", False):
        merged["log_all"] = False

    cfg = RunConfig(command=args.command)
    try:
        cfg.data_path = merged.get("data")
        cfg.study = merged.get("study")
        cfg.industry = merged.get("industry")
        cfg.dependent = merged.get("dependent")
        regs = merged.get("regressors")
        cfg.regressors = _split(regs) if isinstance(regs, str) else tuple(regs or ())
        ev = merged.get("event_dummies")
        cfg.event_dummies = tuple(_parse_event(e) for e in _split(ev)) if ev else ()
        cfg.log_all = bool(merged.get("log_all", True))
        cfg.effects = str(merged.get("effects", "auto")).lower()
        cfg.alpha = float(merged.get("alpha", 0.05))
        cfg.zero_policy = str(merged.get("zero_policy", "error")).lower()
        cfg.labor = str(merged.get("labor", "own")).lower()
        cfg.format = str(merged.get("format", "text")).lower()
        cfg.out = merged.get("out")
        cfg.seed = None if merged.get("seed") is None else int(merged["seed"])
        cfg.harness = str(merged.get("harness", "size")).lower()
        cfg.reps = None if merged.get("reps") is None else int(merged["reps"])
        cfg.dgp = dict(merged.get("dgp", {}))
    except ValueError as exc:
        raise UsageError(f"invalid configuration value: {exc}") from None
    cfg.validate()
    return cfg


def _load(cfg: RunConfig):
    if not os.path.exists(cfg.data_path):
        raise UsageError(f"data file not found: {cfg.data_path}")
    try:
        return load_panel(cfg.data_path, ColumnRoles())
    except PanelError as exc:
        raise UsageError(f"{cfg.data_path}: {type(exc).__name__}: {exc}") from None


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_estimate(cfg: RunConfig) -> int:
    ds = _load(cfg)
    if cfg.study is not None:
        period = period_by_id(cfg.study)
        spec = spec_for_period(period, cfg.industry, cfg.labor)
        ds = subset_period(ds, *period.years)
    else:
        spec = ModelSpec(dependent=cfg.dependent, regressors=cfg.regressors,
                         event_dummies=cfg.event_dummies, log_all=cfg.log_all,
                         name=cfg.dependent)
    spec = spec.replace(effects=_EFFECTS[cfg.effects], alpha=cfg.alpha)
    if cfg.zero_policy == "drop" and spec.log_all:
        from .panel import log_transform

        ds = log_transform(ds, (spec.dependent, *spec.regressors), ZeroPolicy.DROP)
    result = estimate(ds, spec)
    _emit(render_table(result, cfg.format), cfg)
    return EXIT_OK


def cmd_study(cfg: RunConfig) -> int:
    ds = _load(cfg)
    result = run_study(ds, cfg.study, labor=LaborMeasure(cfg.labor),
                       zero_policy=ZeroPolicy(cfg.zero_policy), effects=_EFFECTS[cfg.effects],
                       alpha=cfg.alpha)
    _emit(render_table(result, cfg.format), cfg)
    return EXIT_FAILED if not result.per_industry else EXIT_OK


def _simulation_text(summary) -> str:
    d = summary.dgp
    lines = [
        f"Monte-Carlo harness: {summary.harness.value}    reps: {summary.reps}    seed: {summary.seed}",
        f"DGP: {d.entities} entities x {d.periods} periods, beta = {list(d.beta)}, "
        f"sigma2_e = {d.sigma2_e}, "
        + (f"intercepts = {list(d.intercepts)}" if d.fixed_mode else f"sigma2_u = {d.sigma2_u}")
        + (f", effects correlated with X1 (rho = {d.effect_correlation})"
           if d.effects_correlated_with_x else ""),
        f"failed replications: {summary.failures}",
    ]
    if summary.estimators:
        lines.append("")
        header = ["estimator", "mean", "bias", "RMSE", "MC s.e.", "RMSE (all)"]
        rows = []
        for name, st in summary.estimators.items():
            rows.append([name, " ".join(f"{v:.4f}" for v in st.mean),
                         " ".join(f"{v:.4f}" for v in st.bias),
                         " ".join(f"{v:.4f}" for v in st.rmse),
                         " ".join(f"{v:.4f}" for v in st.mc_se), f"{st.rmse_total:.4f}"])
        widths = [max(len(r[j]) for r in [header, *rows]) for j in range(len(header))]
        for r in [header, *rows]:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    else:
        lines += [
            f"alpha: {summary.alpha}",
            f"rejections: {summary.rejections}    not computable (c): {summary.not_acceptable}",
            f"rejection rate: {summary.rejection_rate:.4f} (MC s.e. {summary.rejection_se:.4f})",
        ]
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.harness == "panel":
        ds = study_panel(seed=1 if cfg.seed is None else cfg.seed)
        text = dump_panel(ds)
        _emit(text, cfg)
        return EXIT_OK
    reps = cfg.reps if cfg.reps is not None else (1000 if cfg.harness == "size" else 500)
    base = PRESETS[cfg.harness]
    try:
        if cfg.dgp:
            merged = {**base.to_dict(), **cfg.dgp}
            if "sigma2_u" in cfg.dgp and "intercepts" not in cfg.dgp:
                merged["intercepts"] = None
            if "intercepts" in cfg.dgp and "sigma2_u" not in cfg.dgp:
                merged["sigma2_u"] = None
            dgp = DgpSpec.from_mapping(merged)
        else:
            dgp = base
        if cfg.seed is not None:
            dgp = replace(dgp, seed=cfg.seed)
        summary = monte_carlo(PRESET_HARNESS[cfg.harness], dgp, reps, alpha=cfg.alpha)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if cfg.format == "text":
        text = _simulation_text(summary)
    else:
        text = json.dumps(summary.to_dict(), sort_keys=True, indent=1) + "\n"
    _emit(text, cfg)
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    ds = _load(cfg)
    report = balance_check(ds)
    lines = [
        f"{cfg.data_path}: {ds.n_rows} rows, {len(ds.entities)} entities, "
        f"{len(ds.periods)} years ({ds.periods[0] if ds.periods else '-'}"
        f"-{ds.periods[-1] if ds.periods else '-'})",
        f"variables: {', '.join(ds.variables)}",
        f"balanced: {'yes' if report.balanced else 'no'}",
    ]
    if report.missing_pairs:
        lines.append("missing (entity, year): " + ", ".join(f"({e}, {y})" for e, y in report.missing_pairs))
    if report.incomplete_rows:
        lines.append("rows with blank cells: " + ", ".join(f"({e}, {y})" for e, y in report.incomplete_rows))
    status = EXIT_OK
    periods = [period_by_id(cfg.study)] if cfg.study else list(PERIODS)
    for p in periods:
        missing = set()
        for ind in INDUSTRIES:
            spec = spec_for_period(p, ind, cfg.labor)
            for v in (spec.dependent, *spec.regressors):
                if v not in ds.columns and f"ln_{v}" not in ds.columns:
                    missing.add(v)
        if missing:
            lines.append(f"study {p.label}: missing variables {', '.join(sorted(missing))}")
            if cfg.study:
                status = EXIT_USAGE
        else:
            lines.append(f"study {p.label}: all variables present")
    _emit("\n".join(lines) + "\n", cfg)
    return status


COMMANDS = {"estimate": cmd_estimate, "study": cmd_study, "simulate": cmd_simulate,
            "validate": cmd_validate}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regiopanel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        p.add_argument("--config", help="INI-style run configuration")
        if data:
            p.add_argument("--data", help="long-format CSV panel (entity, year, variables...)")
        else:
            p.set_defaults(data=None)
        p.add_argument("--effects", choices=sorted(_EFFECTS), default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--zero-policy", dest="zero_policy", choices=("error", "drop"), default=None)
        p.add_argument("--format", choices=FORMATS, default=None)
        p.add_argument("--out", help="write output here instead of standard output")

    p = sub.add_parser("estimate", help="estimate one model")
    common(p)
    p.add_argument("--study", help="study window (with --industry)")
    p.add_argument("--industry")
    p.add_argument("--labor", choices=("own", "total"), default=None)
    p.add_argument("--dependent")
    p.add_argument("--regressors", help="comma-separated regressor names")
    p.add_argument("--event-dummy", dest="event_dummy", action="append", metavar="NAME:YEAR")
    p.add_argument("--no-log", dest="no_log", action="store_true",
                   help="use the variables as given instead of their logs")

    p = sub.add_parser("study", help="estimate every industry for one study window")
    common(p)
    p.add_argument("--study")
    p.add_argument("--labor", choices=("own", "total"), default=None)

    p = sub.add_parser("simulate", help="Monte-Carlo harnesses and synthetic panels")
    common(p, data=False)
    p.add_argument("--harness", choices=(*sorted(PRESET_HARNESS), "panel"), default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("validate", help="check a data file (and optional study) before estimating")
    common(p)
    p.add_argument("--study")
    p.add_argument("--labor", choices=("own", "total"), default=None)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"regiopanel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PanelError as exc:
        print(f"regiopanel: estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as exc:
        print(f"regiopanel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
