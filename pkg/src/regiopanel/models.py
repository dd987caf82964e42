"""Regional study definitions: industries, study windows and the study runner.

Variable vocabulary
-------------------
``GVA_<code>``  gross value added of an industry (dependent variable)
``Labor_<code>`` employment of that industry (``Labor`` for total manufacturing)
``Agriculture, Florestry, Extraction1, Extraction2, Energy, Construction, Capital``
                region-level specific factors; the spelling follows the
                original regression equation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .errors import PanelError
from .estimators import EstimationResult, estimate
from .panel import PanelDataset, ZeroPolicy, log_transform, subset_period
from .specs import Effects, EventDummy, ModelSpec

__all__ = [
    "IndustryCode",
    "INDUSTRIES",
    "industry_registry",
    "StudyPeriod",
    "PERIODS",
    "period_by_id",
    "spec_for_period",
    "StudyResult",
    "run_study",
    "RESOURCE_VARIABLES",
    "LaborMeasure",
]


@dataclass(frozen=True)
class IndustryCode:
    code: str
    label: str
    inferred_label: bool = False


INDUSTRIES: tuple[IndustryCode, ...] = (
    IndustryCode("IMT", "metals industries"),
    IndustryCode("IMI", "industrial mineral"),
    IndustryCode("IPQ", "chemicals industries"),
    IndustryCode("IEE", "equipment and electrical goods industries"),
    IndustryCode("IET", "transport equipment industry"),
    # absent from the original abbreviation legend; read off the food/agriculture pairing
    IndustryCode("IAL", "food industries", inferred_label=True),
    IndustryCode("ITE", "textiles industries"),
    IndustryCode("IPA", "paper industry"),
    IndustryCode("IPD", "manufacturing of various products"),
)

_BY_CODE = {ind.code: ind for ind in INDUSTRIES}


def industry_registry() -> list[IndustryCode]:
    return list(INDUSTRIES)


def industry(code: str) -> IndustryCode:
    try:
        return _BY_CODE[code]
    except KeyError:
        raise KeyError(f"unknown industry {code!r}; valid: {list(_BY_CODE)}") from None


class LaborMeasure(str, Enum):
    OWN = "own"      # employment of the industry itself
    TOTAL = "total"  # total manufacturing employment, column ``Labor``


RESOURCE_VARIABLES = (
    "Agriculture", "Florestry", "Extraction1", "Extraction2", "Energy", "Construction", "Capital",
)

_SHORT = ("Agriculture", "Energy", "Construction")
_LONG = ("Agriculture", "Florestry", "Extraction1", "Extraction2", "Energy", "Construction", "Capital")

DUMMY_1986 = EventDummy("Dummy1986", 1986)


@dataclass(frozen=True)
class StudyPeriod:
    id: str
    label: str
    years: tuple[int, int]
    factors: tuple[str, ...]
    event_dummies: tuple[EventDummy, ...] = ()

    @property
    def n_regressors(self) -> int:
        return 1 + len(self.factors)


PERIODS: tuple[StudyPeriod, ...] = (
    StudyPeriod("P1980_1985", "1980-1985", (1980, 1985), _SHORT),
    StudyPeriod("P1986_1994", "1986-1994", (1986, 1994), _SHORT),
    StudyPeriod("P1980_1994", "1980-1994", (1980, 1994), _SHORT, (DUMMY_1986,)),
    StudyPeriod("P1995_1999", "1995-1999", (1995, 1999), _LONG),
)


def period_by_id(key: str) -> StudyPeriod:
    """Look a period up by its id (``P1980_1985``) or label (``1980-1985``)."""
    for p in PERIODS:
        if key in (p.id, p.label):
            return p
    valid = ", ".join(p.label for p in PERIODS)
    raise KeyError(f"unknown study {key!r}; valid studies: {valid}")


def spec_for_period(period: StudyPeriod | str, code: IndustryCode | str,
                    labor: LaborMeasure | str = LaborMeasure.OWN) -> ModelSpec:
    p = period if isinstance(period, StudyPeriod) else period_by_id(period)
    c = code.code if isinstance(code, IndustryCode) else industry(code).code
    labor_var = f"Labor_{c}" if LaborMeasure(labor) is LaborMeasure.OWN else "Labor"
    return ModelSpec(
        dependent=f"GVA_{c}",
        regressors=(labor_var, *p.factors),
        event_dummies=p.event_dummies,
        effects=Effects.AUTO,
        alpha=0.05,
        log_all=True,
        name=f"{c} {p.label}",
    )


@dataclass(frozen=True)
class StudyResult:
    period: StudyPeriod
    per_industry: Mapping[str, EstimationResult]
    failures: Mapping[str, str] = field(default_factory=dict)
    run_metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(ind.code for ind in INDUSTRIES
                     if ind.code in self.per_industry or ind.code in self.failures)

    def to_dict(self) -> dict:
        return {
            "period": self.period.id,
            "per_industry": {c: r.to_dict() for c, r in self.per_industry.items()},
            "failures": dict(self.failures),
            "run_metadata": dict(self.run_metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StudyResult":
        return cls(
            period=period_by_id(d["period"]),
            per_industry={c: EstimationResult.from_dict(r) for c, r in d["per_industry"].items()},
            failures=dict(d.get("failures", {})),
            run_metadata=dict(d.get("run_metadata", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "StudyResult":
        return cls.from_dict(json.loads(text))


def run_study(
    ds: PanelDataset,
    period: StudyPeriod | str,
    *,
    labor: LaborMeasure | str = LaborMeasure.OWN,
    zero_policy: ZeroPolicy | str = ZeroPolicy.ERROR,
    effects: Effects | str = Effects.AUTO,
    alpha: float = 0.05,
    industries=None,
) -> StudyResult:
    """Estimate every industry for one study window.

    Each industry is handled independently: a failure is recorded under
    its code and never stops the others.
    """
    p = period if isinstance(period, StudyPeriod) else period_by_id(period)
    policy = ZeroPolicy(zero_policy)
    codes = [ind.code for ind in (industries or INDUSTRIES)]
    meta: dict = {"period": p.label, "years": list(p.years), "labor": LaborMeasure(labor).value,
                  "zero_policy": policy.value, "source_rows": ds.n_rows}
    results: dict[str, EstimationResult] = {}
    failures: dict[str, str] = {}
    try:
        window = subset_period(ds, *p.years)
    except PanelError as exc:
        reason = f"{type(exc).__name__}: {exc}"
        return StudyResult(p, {}, {c: reason for c in codes}, meta)

    meta["entities"] = list(window.entities)
    dropped: dict[str, list] = {}
    for c in codes:
        spec = spec_for_period(p, c, labor).replace(effects=Effects(effects), alpha=alpha)
        try:
            data = window
            if policy is ZeroPolicy.DROP:
                data = log_transform(window, (spec.dependent, *spec.regressors), policy)
                if data.dropped:
                    dropped[c] = [list(pair) for pair in data.dropped]
            results[c] = estimate(data, spec)
        except PanelError as exc:
            failures[c] = f"{type(exc).__name__}: {exc}"
    if dropped:
        meta["dropped_rows"] = dropped
    fallbacks = [c for c, r in results.items() if r.metadata.get("auto_fallback")]
    if fallbacks:
        meta["auto_fallback"] = fallbacks
    return StudyResult(p, results, failures, meta)
