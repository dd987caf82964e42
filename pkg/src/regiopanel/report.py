"""Table rendering for study and single-model results (text, csv, json)."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable

from .diagnostics import STAR, HausmanDecision
from .estimators import EstimationResult
from .models import INDUSTRIES, StudyResult
from .specs import Effects

__all__ = ["render_table", "records", "parse_json", "FORMATS"]

FORMATS = ("text", "csv", "json")

FAILED = "(e)"


def _num(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def coef_cell(beta: float, t: float, significance: str) -> str:
    """``1.121* (4.685)``: rounded coefficient, star, rounded t-ratio."""
    return f"{_num(beta)}{STAR[significance]} ({_num(t)})"


def hausman_cell(result: EstimationResult) -> str:
    h = result.hausman
    if h is None:
        return ""
    if h.decision is HausmanDecision.NOT_ACCEPTABLE:
        return "(c)"
    star = "(*)" if h.decision is HausmanDecision.REJECT_RANDOM else ""
    return f"{_num(h.statistic)} {h.decision.code}{star}"


def _equation(regressors: Iterable[str]) -> str:
    terms = " + ".join(f"β_{j} ln {_factor(name)}_it" for j, name in enumerate(regressors, 1))
    return f"ln Y_it = α + {terms} + ε"


def _factor(name: str) -> str:
    return name.split("_", 1)[0] if name.startswith(("Labor_", "GVA_")) else name


def _event_label(name: str) -> str:
    head = name.rstrip("0123456789")
    return f"{head} {name[len(head):]}" if head != name else name


# ---------------------------------------------------------------------------
# row model shared by every format


def _rows_for(results: dict[str, EstimationResult], regressor_count: int,
              event_names: list[str], n_dummies: int):
    """Ordered (row label, key) pairs of a result table."""
    rows = [("α", "alpha")]
    rows += [(f"Dummy{i}", f"Dummy{i}") for i in range(1, n_dummies + 1)]
    rows += [(f"β_{j}", f"beta_{j}") for j in range(1, regressor_count + 1)]
    rows += [(_event_label(e), e) for e in event_names]
    rows += [
        ("Sum of the elasticities", "sum_elasticities"),
        ("R² adjusted", "r2_adj"),
        ("Residual part", "residual_part"),
        ("Durbin-Watson", "durbin_watson"),
        ("Hausman test", "hausman"),
    ]
    return rows


def _cells(result: EstimationResult) -> dict[str, str]:
    out: dict[str, str] = {}
    for c in result.coefficients:
        if c.kind == "intercept":
            out["alpha"] = coef_cell(c.beta, c.t, c.significance)
        elif c.kind == "event":
            out[c.label] = coef_cell(c.beta, c.t, c.significance)
    for j, c in enumerate(result.regressor_coefficients, 1):
        out[f"beta_{j}"] = coef_cell(c.beta, c.t, c.significance)
    for i, d in enumerate(result.entity_dummies or (), 1):
        out[f"Dummy{i}"] = coef_cell(d.value, d.t, d.significance)
    out["sum_elasticities"] = _num(result.sum_elasticities)
    out["r2_adj"] = _num(result.r2_adj)
    out["residual_part"] = _num(result.residual_part)
    out["durbin_watson"] = _num(result.durbin_watson)
    out["hausman"] = hausman_cell(result)
    return out


def _layout(header: list[str], body: list[list[str]]) -> str:
    widths = [max(len(r[j]) for r in [header, *body]) for j in range(len(header))]
    lines = []
    for r in [header, *body]:
        first = r[0].ljust(widths[0])
        rest = [cell.rjust(w) for cell, w in zip(r[1:], widths[1:])]
        lines.append("  ".join([first, *rest]).rstrip())
    return "\n".join(lines)


_MODE_LEGEND = ("(0) pooled least squares; (1) entity dummies (LSDV); (2) random effects (GLS).")
_NOTE = (
    "Coefficients with t-ratios in parentheses; * significant at 5%, ** at 10% (two-sided).\n"
    "Hausman test: (a) random effects accepted; (b) random effects rejected, (*) at 5%; "
    "(c) statistic not computable."
)


def _study_text(study: StudyResult) -> str:
    p = study.period
    codes = [ind.code for ind in INDUSTRIES if ind.code in study.per_industry or ind.code in study.failures]
    n_dummies = len(study.run_metadata.get("entities", ())) or max(
        (len(r.entity_dummies or ()) for r in study.per_industry.values()), default=0)
    rows = _rows_for(study.per_industry, p.n_regressors, [d.name for d in p.event_dummies], n_dummies)
    header = [""]
    columns = []
    for c in codes:
        if c in study.per_industry:
            r = study.per_industry[c]
            header.append(f"{c} {r.effects_used.table_code}")
            columns.append(_cells(r))
        else:
            header.append(c)
            columns.append(None)
    body = []
    for label, key in rows:
        body.append([label, *((col.get(key, "") if col is not None else FAILED) for col in columns)])
    spec_names = next(iter(study.per_industry.values())).spec.regressors if study.per_industry else (
        ("Labor", *p.factors))
    parts = [
        f"Results of estimations for the years {p.label}",
        "",
        _equation(spec_names),
        "",
        _layout(header, body),
        "",
        _NOTE,
        _MODE_LEGEND,
    ]
    if study.failures:
        parts.append(f"{FAILED} estimation failed:")
        parts += [f"  {c}: {study.failures[c]}" for c in codes if c in study.failures]
    fallbacks = [c for c in codes if c in study.per_industry
                 and study.per_industry[c].metadata.get("auto_fallback")]
    if fallbacks:
        parts.append("Hausman (c) columns fall back to entity dummies: " + ", ".join(fallbacks))
    return "\n".join(parts) + "\n"


def _single_text(result: EstimationResult) -> str:
    spec = result.spec
    n_dummies = len(result.entity_dummies or ())
    rows = _rows_for({}, len(spec.regressors), [d.name for d in spec.event_dummies], n_dummies)
    cells = _cells(result)
    title = spec.name or spec.dependent
    body = [[label, cells.get(key, "")] for label, key in rows]
    body.append(["Observations", str(result.n)])
    parts = [
        f"Dependent variable: {spec.dependent}    estimator: {result.effects_used.value} "
        f"{result.effects_used.table_code}",
        _equation(spec.regressors),
        "",
        _layout(["", title], body),
        "",
        "Regressors: " + ", ".join(f"β_{j} = {name}" for j, name in enumerate(spec.regressors, 1)),
    ]
    if result.entity_dummies:
        parts.append("Dummies: " + ", ".join(
            f"Dummy{i} = {d.entity}" for i, d in enumerate(result.entity_dummies, 1)))
    parts += ["", _NOTE, _MODE_LEGEND]
    if result.hausman is not None and result.hausman.detail:
        parts.append(f"(c) {result.hausman.detail}")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# lossless exports


def _result_records(code: str, r: EstimationResult) -> list[tuple[str, str, object]]:
    out: list[tuple[str, str, object]] = [(code, "effects", r.effects_used.value)]

    def coef(row, beta, se, t):
        out.extend([(code, row, beta), (code, f"{row} se", se), (code, f"{row} t", t)])

    icpt = r.intercept
    if icpt is not None:
        coef("alpha", icpt.beta, icpt.se, icpt.t)
    for i, d in enumerate(r.entity_dummies or (), 1):
        out.append((code, f"Dummy{i} entity", d.entity))
        coef(f"Dummy{i}", d.value, d.se, d.t)
    for j, c in enumerate(r.regressor_coefficients, 1):
        out.append((code, f"beta_{j} variable", c.label))
        coef(f"beta_{j}", c.beta, c.se, c.t)
    for c in r.coefficients:
        if c.kind == "event":
            coef(c.label, c.beta, c.se, c.t)
    out += [
        (code, "sum_elasticities", r.sum_elasticities),
        (code, "r2", r.r2),
        (code, "r2_adj", r.r2_adj),
        (code, "residual_part", r.residual_part),
        (code, "durbin_watson", r.durbin_watson),
        (code, "n", r.n),
    ]
    if r.hausman is not None:
        out += [
            (code, "hausman", r.hausman.statistic),
            (code, "hausman df", r.hausman.df),
            (code, "hausman p_value", r.hausman.p_value),
            (code, "hausman decision", r.hausman.decision.code),
        ]
    return out


def records(result: StudyResult | EstimationResult) -> list[tuple[str, str, object]]:
    """Flat ``(industry, row, value)`` triples at full precision."""
    if isinstance(result, EstimationResult):
        return _result_records(result.spec.name or result.spec.dependent, result)
    out = []
    for ind in INDUSTRIES:
        c = ind.code
        if c in result.per_industry:
            out += _result_records(c, result.per_industry[c])
        elif c in result.failures:
            out.append((c, "error", result.failures[c]))
    return out


def _csv_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_table(result: StudyResult | EstimationResult, fmt: str = "text") -> str:
    if fmt == "text":
        return _study_text(result) if isinstance(result, StudyResult) else _single_text(result)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["industry", "row", "value"])
        for rec in records(result):
            w.writerow([rec[0], rec[1], _csv_value(rec[2])])
        return buf.getvalue()
    if fmt == "json":
        kind = "study" if isinstance(result, StudyResult) else "estimate"
        doc = {
            "kind": kind,
            "result": result.to_dict(),
            "records": [list(r) for r in records(result)],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def parse_json(text: str) -> StudyResult | EstimationResult:
    """Inverse of ``render_table(..., "json")``."""
    doc = json.loads(text)
    if doc["kind"] == "study":
        return StudyResult.from_dict(doc["result"])
    return EstimationResult.from_dict(doc["result"])
