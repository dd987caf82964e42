import csv
import io
import math

import pytest

from regiopanel.diagnostics import HausmanDecision, HausmanResult
from regiopanel.estimators import estimate
from regiopanel.models import run_study, spec_for_period
from regiopanel.panel import load_panel
from regiopanel.report import coef_cell, hausman_cell, parse_json, records, render_table
from regiopanel.specs import Effects


@pytest.fixture(scope="module")
def studies(study_csv):
    ds = load_panel(study_csv)
    return {label: run_study(ds, label) for label in ("1980-1985", "1980-1994", "1995-1999")}


def beta_rows(text):
    return [line.split()[0] for line in text.splitlines() if line.startswith("β_")]


def test_coefficient_cell_format():
    assert coef_cell(1.121, 4.685, "5%") == "1.121* (4.685)"
    assert coef_cell(-0.0004, -0.2, "none") == "0.000 (-0.200)"
    assert coef_cell(0.5, 1.8, "10%") == "0.500** (1.800)"


def _with_hausman(result, h):
    return result.with_hausman(h)


def test_hausman_cells_match_printed_layout(studies, printed_tables):
    base = studies["1980-1985"].per_industry["IMT"]
    printed = printed_tables["hausman_1980-1985"]["cells"]
    cases = {
        "IMT": HausmanResult(1.441, 4, 0.84, HausmanDecision.ACCEPT_RANDOM),
        "IMI": HausmanResult(91.076, 4, 1e-18, HausmanDecision.REJECT_RANDOM),
        "IPA": HausmanResult.not_acceptable(4, "singular"),
    }
    for code, h in cases.items():
        assert hausman_cell(_with_hausman(base, h)) == printed[code]


def test_printed_modes_agree_with_hausman_outcomes(printed_tables):
    # (a) goes with random effects (2), (b) with entity dummies (1)
    block = printed_tables["hausman_1980-1985"]
    for code, cell in block["cells"].items():
        if cell.endswith("(a)"):
            assert block["modes"][code] == "(2)"
        elif "(b)" in cell:
            assert block["modes"][code] == "(1)"


def test_study_text_row_structure(studies):
    short = render_table(studies["1980-1985"])
    long = render_table(studies["1995-1999"])
    dummy = render_table(studies["1980-1994"])
    assert beta_rows(short) == ["β_1", "β_2", "β_3", "β_4"]
    assert beta_rows(long) == [f"β_{j}" for j in range(1, 9)]
    assert "Dummy 1986" in dummy
    assert "Dummy 1986" not in short and "Dummy 1986" not in long
    assert short.startswith("Results of estimations for the years 1980-1985")
    for label in ("Sum of the elasticities", "R² adjusted", "Residual part", "Durbin-Watson",
                  "Hausman test"):
        assert label in short
    header = short.splitlines()[4]
    codes = ("IMT", "IMI", "IPQ", "IEE", "IET", "IAL", "ITE", "IPA", "IPD")
    assert header.split() == [part for c in codes for part in (c, "(1)")]
    assert [line.split()[0] for line in short.splitlines() if line.startswith("Dummy")] == [
        f"Dummy{i}" for i in range(1, 6)]


def test_text_rendering_is_deterministic(studies):
    r = studies["1980-1994"]
    assert render_table(r) == render_table(r)


def test_failed_column_marked(study_csv):
    import numpy as np

    ds = load_panel(study_csv)
    gva = np.array(ds.column("GVA_IET"))
    gva[0] = -1.0
    text = render_table(run_study(ds.with_columns({"GVA_IET": gva}), "1980-1985"))
    assert "(e)" in text and "IET: NonPositiveValue" in text


def test_csv_is_lossless(studies):
    r = studies["1995-1999"]
    rows = list(csv.reader(io.StringIO(render_table(r, "csv"))))
    assert rows[0] == ["industry", "row", "value"]
    table = {(a, b): c for a, b, c in rows[1:]}
    imt = r.per_industry["IMT"]
    assert float(table[("IMT", "beta_1")]) == imt.regressor_beta[0]
    assert float(table[("IMT", "r2_adj")]) == imt.r2_adj
    assert table[("IMT", "beta_1 variable")] == "Labor_IMT"
    assert table[("IMT", "hausman decision")] == "(c)"


def test_json_round_trip(studies):
    for r in studies.values():
        back = parse_json(render_table(r, "json"))
        assert back.to_json() == r.to_json()


def test_single_estimate_rendering(study_csv):
    ds = load_panel(study_csv)
    spec = spec_for_period("1995-1999", "IPA").replace(effects=Effects.POOLED)
    from regiopanel.panel import subset_period

    res = estimate(subset_period(ds, 1995, 1999), spec)
    text = render_table(res)
    assert len(beta_rows(text)) == 8
    assert "Observations" in text and "25" in text
    assert "α" in text
    back = parse_json(render_table(res, "json"))
    assert back.to_dict() == res.to_dict()
    assert records(res)[0] == ("IPA 1995-1999", "effects", "pooled")
    with pytest.raises(ValueError):
        render_table(res, "xml")


def test_non_finite_cells_render_blank_or_inf():
    assert coef_cell(1.0, math.inf, "5%") == "1.000* (inf)"
