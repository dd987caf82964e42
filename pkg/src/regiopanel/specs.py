"""Model definitions shared by the design builder and the estimators."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Effects(str, Enum):
    POOLED = "pooled"
    FIXED_DUMMIES = "fe"
    FIXED_WITHIN = "within"
    RANDOM = "re"
    AUTO = "auto"

    @property
    def table_code(self) -> str:
        """Column marker used in the result tables: (1) dummies, (2) random effects."""
        return {Effects.FIXED_DUMMIES: "(1)", Effects.FIXED_WITHIN: "(1)",
                Effects.RANDOM: "(2)", Effects.POOLED: "(0)"}.get(self, "")


@dataclass(frozen=True)
class EventDummy:
    """Indicator switched on from ``first_year`` onwards."""

    name: str
    first_year: int

    def indicator(self, year: int) -> float:
        return 1.0 if year >= self.first_year else 0.0


@dataclass(frozen=True)
class ModelSpec:
    dependent: str
    regressors: tuple[str, ...]
    event_dummies: tuple[EventDummy, ...] = ()
    effects: Effects = Effects.AUTO
    alpha: float = 0.05
    log_all: bool = True
    name: str = field(default="", compare=True)

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        object.__setattr__(self, "event_dummies", tuple(self.event_dummies))
        object.__setattr__(self, "effects", Effects(self.effects))
        if not self.regressors:
            raise ValueError("a model needs at least one regressor")
        if self.dependent in self.regressors:
            raise ValueError(f"dependent variable {self.dependent!r} also listed as regressor")
        if len(set(self.regressors)) != len(self.regressors):
            raise ValueError("regressor names must be unique")
        names = [d.name for d in self.event_dummies]
        if len(set(names)) != len(names) or set(names) & set(self.regressors):
            raise ValueError("event dummy names must be unique and distinct from regressors")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def replace(self, **changes) -> "ModelSpec":
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dependent": self.dependent,
            "regressors": list(self.regressors),
            "event_dummies": [[d.name, d.first_year] for d in self.event_dummies],
            "effects": self.effects.value,
            "alpha": self.alpha,
            "log_all": self.log_all,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(
            dependent=d["dependent"],
            regressors=tuple(d["regressors"]),
            event_dummies=tuple(EventDummy(n, int(y)) for n, y in d.get("event_dummies", ())),
            effects=Effects(d.get("effects", "auto")),
            alpha=float(d.get("alpha", 0.05)),
            log_all=bool(d.get("log_all", True)),
            name=d.get("name", ""),
        )
