"""Data-generating processes, an independent OLS oracle and Monte-Carlo harnesses.

Random numbers come from an embedded xorshift64* generator seeded through
splitmix64, so every synthetic artifact is a pure function of its seed
and identical on every platform.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .diagnostics import HausmanDecision, hausman_test
from .errors import ConfigError, PanelError, SingularSystem
from .estimators import fixed_effects_within, pooled_ols, random_effects_gls
from .panel import PanelDataset
from .specs import Effects, ModelSpec

__all__ = [
    "MASK64",
    "splitmix64",
    "derive_seed",
    "XorShift64Star",
    "RegressorProcess",
    "DgpSpec",
    "generate_panel",
    "oracle_ols",
    "Harness",
    "EstimatorStats",
    "MonteCarloSummary",
    "monte_carlo",
    "PRESETS",
    "preset",
    "PRESET_HARNESS",
    "REGIONS",
    "study_panel",
]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output for state ``x`` (Steele, Lea & Flood 2014)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Independent substream seed for replication ``index``."""
    return splitmix64((seed & MASK64) ^ splitmix64((index + 1) * _GOLDEN & MASK64))


class XorShift64Star:
    """Vigna's xorshift64* generator (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D).

    The 64-bit seed is passed through splitmix64 so that seed 0 and nearby
    seeds give well-mixed, non-zero states.
    """

    MULT = 0x2545F4914F6CDD1D

    def __init__(self, seed: int = 0):
        state = splitmix64(seed & MASK64)
        self._state = state or _GOLDEN
        self._spare: float | None = None

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * self.MULT) & MASK64

    def uniform(self) -> float:
        """Uniform double on [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self) -> float:
        """Standard normal deviate by the Marsaglia polar method."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        self._spare = v * f
        return u * f

    def normals(self, n: int) -> list[float]:
        return [self.normal() for _ in range(n)]


# ---------------------------------------------------------------------------
# data-generating processes


class RegressorProcess(str, Enum):
    IID_LOG_NORMAL = "iid_lognormal"
    RANDOM_WALK_LEVELS = "random_walk"


@dataclass(frozen=True)
class DgpSpec:
    """Log-linear panel DGP.

    ``ln Y_it = a_i + sum_j beta_j ln X_itj + e_it`` with
    ``ln X_itj = c_ij + z_itj``.  Giving ``intercepts`` fixes ``a_i``
    (fixed-effects mode); otherwise ``a_i = constant + u_i`` with
    ``u_i ~ N(0, sigma2_u)`` (random-effects mode).  When
    ``effects_correlated_with_x`` is set, the entity effect and the entity
    component ``c_i1`` of the first regressor have correlation
    ``effect_correlation``.
    """

    entities: int
    periods: int
    beta: tuple[float, ...]
    sigma2_e: float
    intercepts: tuple[float, ...] | None = None
    sigma2_u: float | None = None
    constant: float = 1.0
    regressor_process: RegressorProcess = RegressorProcess.IID_LOG_NORMAL
    effects_correlated_with_x: bool = False
    effect_correlation: float = 0.7
    between_sd: float = 1.0
    within_sd: float = 1.0
    start_year: int = 1980
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "regressor_process", RegressorProcess(self.regressor_process))
        if self.intercepts is not None:
            object.__setattr__(self, "intercepts", tuple(float(a) for a in self.intercepts))
        if self.entities < 2 or self.periods < 2:
            raise ConfigError("a DGP needs at least 2 entities and 2 periods")
        if not self.beta:
            raise ConfigError("beta must have at least one coefficient")
        if not self.sigma2_e > 0:
            raise ConfigError("sigma2_e must be positive")
        if self.intercepts is None and self.sigma2_u is None:
            raise ConfigError("give either per-entity intercepts or sigma2_u")
        if self.intercepts is not None and len(self.intercepts) != self.entities:
            raise ConfigError(f"{len(self.intercepts)} intercepts for {self.entities} entities")
        if self.sigma2_u is not None and not self.sigma2_u >= 0:
            raise ConfigError("sigma2_u must be non-negative")
        if not -1.0 <= self.effect_correlation <= 1.0:
            raise ConfigError("effect_correlation must lie in [-1, 1]")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def fixed_mode(self) -> bool:
        return self.intercepts is not None

    @property
    def regressor_names(self) -> tuple[str, ...]:
        return tuple(f"X{j + 1}" for j in range(len(self.beta)))

    def model_spec(self, effects: Effects = Effects.AUTO) -> ModelSpec:
        return ModelSpec(dependent="Y", regressors=self.regressor_names, effects=effects)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regressor_process"] = self.regressor_process.value
        return d

    @classmethod
    def from_mapping(cls, raw: Mapping[str, object]) -> "DgpSpec":
        """Build from string or typed values (config-file sections)."""
        def floats(v):
            if isinstance(v, str):
                return tuple(float(x) for x in v.replace(",", " ").split())
            return tuple(float(x) for x in v)

        def flag(v):
            if isinstance(v, str):
                if v.strip().lower() in ("1", "true", "yes", "on"):
                    return True
                if v.strip().lower() in ("0", "false", "no", "off"):
                    return False
                raise ConfigError(f"not a boolean: {v!r}")
            return bool(v)

        conv = {
            "entities": int, "periods": int, "beta": floats, "sigma2_e": float,
            "intercepts": floats, "sigma2_u": float, "constant": float,
            "regressor_process": RegressorProcess, "effects_correlated_with_x": flag,
            "effect_correlation": float, "between_sd": float, "within_sd": float,
            "start_year": int, "seed": int,
        }
        kwargs = {}
        for key, value in raw.items():
            if key not in conv:
                raise ConfigError(f"unknown DGP field {key!r}")
            if value is None or value == "":
                continue
            try:
                kwargs[key] = conv[key](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"incomplete DGP: {exc}") from None


def _standardize(values: Sequence[float]) -> list[float]:
    m = sum(values) / len(values)
    sd = math.sqrt(sum((v - m) ** 2 for v in values) / len(values))
    return [0.0 if sd == 0 else (v - m) / sd for v in values]


def generate_panel(dgp: DgpSpec) -> PanelDataset:
    """Balanced panel of levels (``Y``, ``X1``..``Xk``) drawn from ``dgp``."""
    rng = XorShift64Star(dgp.seed)
    K = len(dgp.beta)
    rho = dgp.effect_correlation if dgp.effects_correlated_with_x else 0.0
    tail = math.sqrt(1.0 - rho * rho)
    std_int = _standardize(dgp.intercepts) if dgp.fixed_mode else None

    records = []
    for i in range(dgp.entities):
        comp = [dgp.between_sd * rng.normal() for _ in range(K)]
        if dgp.fixed_mode:
            if rho:
                comp[0] = dgp.between_sd * (rho * std_int[i] + tail * rng.normal())
            effect = dgp.intercepts[i]
        else:
            shock = rng.normal()
            if rho:
                shock = rho * comp[0] / dgp.between_sd + tail * shock
            effect = dgp.constant + math.sqrt(dgp.sigma2_u) * shock
        walk = [dgp.within_sd * rng.normal() for _ in range(K)]
        for t in range(dgp.periods):
            if dgp.regressor_process is RegressorProcess.RANDOM_WALK_LEVELS:
                if t:
                    walk = [w + dgp.within_sd * rng.normal() for w in walk]
                z = walk
            else:
                z = walk if t == 0 else [dgp.within_sd * rng.normal() for _ in range(K)]
            lnx = [c + zz for c, zz in zip(comp, z)]
            lny = effect + math.fsum(b * x for b, x in zip(dgp.beta, lnx))
            lny += math.sqrt(dgp.sigma2_e) * rng.normal()
            values = {"Y": math.exp(lny)}
            values.update({f"X{j + 1}": math.exp(x) for j, x in enumerate(lnx)})
            records.append((f"E{i + 1:02d}", dgp.start_year + t, values))
    return PanelDataset.from_records(records, entity_name="entity", year_name="year",
                                     variables=("Y", *dgp.regressor_names))


# ---------------------------------------------------------------------------
# oracle


def _gauss_jordan_inverse(M: np.ndarray) -> np.ndarray:
    k = M.shape[0]
    A = np.hstack([M, np.eye(k)])
    scale = np.abs(M).max()
    if scale == 0:
        raise SingularSystem("X'X is the zero matrix")
    for col in range(k):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) <= 1e-14 * scale:
            raise SingularSystem(f"X'X is singular at column {col}")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
        A[col] /= A[col, col]
        for row in range(k):
            if row != col and A[row, col] != 0.0:
                A[row] -= A[row, col] * A[col]
    return A[:, k:]


def oracle_ols(X, y, refine: int = 3) -> np.ndarray:
    """Explicit normal-equations OLS, ``(X'X)^-1 X'y``.

    The inverse comes from Gauss-Jordan elimination with partial pivoting,
    a different algorithm from the production QR solver.  Because forming
    ``X'X`` squares the condition number, ``refine`` rounds of iterative
    refinement follow, each solving the normal equations again for the
    residual computed in extended precision.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    M = _gauss_jordan_inverse(X.T @ X)
    beta = M @ (X.T @ y)
    Xl, yl = X.astype(np.longdouble), y.astype(np.longdouble)
    for _ in range(refine):
        r = (yl - Xl @ beta.astype(np.longdouble)).astype(float)
        beta = beta + M @ (X.T @ r)
    return beta


# ---------------------------------------------------------------------------
# Monte-Carlo harnesses


class Harness(str, Enum):
    HAUSMAN_SIZE = "size"
    HAUSMAN_POWER = "power"
    ESTIMATOR_RECOVERY = "recovery"


@dataclass(frozen=True)
class EstimatorStats:
    mean: tuple[float, ...]
    bias: tuple[float, ...]
    rmse: tuple[float, ...]
    mc_se: tuple[float, ...]
    coverage3: float
    completed: int

    @property
    def rmse_total(self) -> float:
        return math.sqrt(sum(r * r for r in self.rmse))


@dataclass(frozen=True)
class MonteCarloSummary:
    harness: Harness
    reps: int
    seed: int
    dgp: DgpSpec
    alpha: float = 0.05
    failures: int = 0
    failure_messages: tuple[str, ...] = ()
    rejection_rate: float = math.nan
    rejection_se: float = math.nan
    rejections: int = 0
    not_acceptable: int = 0
    estimators: Mapping[str, EstimatorStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "harness": self.harness.value,
            "reps": self.reps,
            "seed": self.seed,
            "alpha": self.alpha,
            "dgp": self.dgp.to_dict(),
            "failures": self.failures,
            "failure_messages": list(self.failure_messages),
            "rejection_rate": self.rejection_rate,
            "rejection_se": self.rejection_se,
            "rejections": self.rejections,
            "not_acceptable": self.not_acceptable,
            "estimators": {k: {**asdict(v), "rmse_total": v.rmse_total}
                           for k, v in self.estimators.items()},
        }


def _stats(draws: list[np.ndarray], truth: np.ndarray) -> EstimatorStats:
    if not draws:
        nan = tuple(math.nan for _ in truth)
        return EstimatorStats(nan, nan, nan, nan, math.nan, 0)
    B = np.vstack(draws)
    m = B.shape[0]
    mean = B.mean(axis=0)
    sd = B.std(axis=0, ddof=1) if m > 1 else np.zeros_like(mean)
    rmse = np.sqrt(((B - truth) ** 2).mean(axis=0))
    inside = (np.abs(B - truth) <= 3 * sd).all(axis=1).mean() if m > 1 else math.nan
    return EstimatorStats(
        mean=tuple(mean.tolist()),
        bias=tuple((mean - truth).tolist()),
        rmse=tuple(rmse.tolist()),
        mc_se=tuple((sd / math.sqrt(m)).tolist()),
        coverage3=float(inside),
        completed=m,
    )


MIN_REPS = 100


def monte_carlo(harness: Harness | str, dgp: DgpSpec, reps: int,
                alpha: float = 0.05) -> MonteCarloSummary:
    """Run ``reps`` replications of ``harness`` on panels drawn from ``dgp``.

    Replication ``r`` uses the substream seed ``derive_seed(dgp.seed, r)``,
    so the summary is a pure function of ``(dgp, reps)``.  Replications
    whose estimation raises are counted in ``failures``.
    """
    harness = Harness(harness)
    if reps < MIN_REPS:
        raise ConfigError(f"at least {MIN_REPS} replications are required, got {reps}")
    spec = dgp.model_spec()
    truth = np.asarray(dgp.beta)
    failures = 0
    messages: list[str] = []

    if harness is Harness.ESTIMATOR_RECOVERY:
        fitters = {"pooled": pooled_ols, "fe": fixed_effects_within, "re": random_effects_gls}
        draws: dict[str, list[np.ndarray]] = {name: [] for name in fitters}
        for r in range(reps):
            ds = generate_panel(replace(dgp, seed=derive_seed(dgp.seed, r)))
            for name, fit in fitters.items():
                try:
                    draws[name].append(fit(ds, spec).regressor_beta)
                except PanelError as exc:
                    failures += 1
                    if len(messages) < 5:
                        messages.append(f"rep {r} {name}: {type(exc).__name__}: {exc}")
        return MonteCarloSummary(
            harness=harness, reps=reps, seed=dgp.seed, dgp=dgp, alpha=alpha,
            failures=failures, failure_messages=tuple(messages),
            estimators={name: _stats(d, truth) for name, d in draws.items()},
        )

    rejections = not_acceptable = completed = 0
    for r in range(reps):
        ds = generate_panel(replace(dgp, seed=derive_seed(dgp.seed, r)))
        try:
            fe = fixed_effects_within(ds, spec)
            re = random_effects_gls(ds, spec)
            h = hausman_test(fe, re, alpha)
        except PanelError as exc:
            failures += 1
            if len(messages) < 5:
                messages.append(f"rep {r}: {type(exc).__name__}: {exc}")
            continue
        completed += 1
        if h.decision is HausmanDecision.REJECT_RANDOM:
            rejections += 1
        elif h.decision is HausmanDecision.NOT_ACCEPTABLE:
            not_acceptable += 1
    rate = rejections / completed if completed else math.nan
    se = math.sqrt(rate * (1 - rate) / completed) if completed else math.nan
    return MonteCarloSummary(
        harness=harness, reps=reps, seed=dgp.seed, dgp=dgp, alpha=alpha,
        failures=failures, failure_messages=tuple(messages),
        rejection_rate=rate, rejection_se=se, rejections=rejections,
        not_acceptable=not_acceptable,
    )


PRESETS: dict[str, DgpSpec] = {
    "size": DgpSpec(entities=30, periods=10, beta=(1.0, 0.5), sigma2_e=1.0, sigma2_u=1.0,
                    seed=42),
    "power": DgpSpec(entities=30, periods=10, beta=(1.0, 0.5), sigma2_e=1.0, sigma2_u=1.0,
                     effects_correlated_with_x=True, effect_correlation=0.7, seed=42),
    "recovery": DgpSpec(entities=5, periods=20, beta=(1.0, 0.5), sigma2_e=0.2,
                        intercepts=(1.0, 1.5, 2.0, 2.5, 3.0),
                        effects_correlated_with_x=True, effect_correlation=0.7, seed=42),
}

PRESET_HARNESS = {"size": Harness.HAUSMAN_SIZE, "power": Harness.HAUSMAN_POWER,
                  "recovery": Harness.ESTIMATOR_RECOVERY}


def preset(name: str, **overrides) -> DgpSpec:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides) if overrides else base


# ---------------------------------------------------------------------------
# synthetic version of the regional study panel

REGIONS = ("Norte", "Centro", "Lisboa e Vale do Tejo", "Alentejo", "Algarve")


def study_panel(seed: int = 1, regions: Sequence[str] = REGIONS,
                first_year: int = 1980, last_year: int = 1999) -> PanelDataset:
    """Synthetic region x year panel carrying every column the studies use.

    Resource and capital series are region level; each industry has its
    own employment and value-added series.  Value added is log-linear in
    own employment and the resources with region intercepts and noise.
    """
    from .models import INDUSTRIES, RESOURCE_VARIABLES

    rng = XorShift64Star(seed)
    codes = [ind.code for ind in INDUSTRIES]
    n_res = len(RESOURCE_VARIABLES)
    loadings = {c: [0.3 * rng.normal() for _ in range(n_res)] for c in codes}
    labor_beta = {c: 0.8 + 0.2 * rng.normal() for c in codes}
    records = []
    for r_i, region in enumerate(regions):
        base = [2.0 + rng.normal() for _ in range(n_res)]
        region_fx = {c: 1.0 + 0.5 * rng.normal() for c in codes}
        labor_base = {c: 3.0 + rng.normal() for c in codes}
        for year in range(first_year, last_year + 1):
            res = [b + 0.3 * rng.normal() for b in base]
            values = {name: math.exp(v) for name, v in zip(RESOURCE_VARIABLES, res)}
            for c in codes:
                lab = labor_base[c] + 0.3 * rng.normal()
                lny = region_fx[c] + labor_beta[c] * lab
                lny += math.fsum(w * v for w, v in zip(loadings[c], res))
                lny += 0.1 * rng.normal()
                values[f"Labor_{c}"] = math.exp(lab)
                values[f"GVA_{c}"] = math.exp(lny)
            values["Labor"] = sum(values[f"Labor_{c}"] for c in codes)
            records.append((region, year, values))
    return PanelDataset.from_records(records)
