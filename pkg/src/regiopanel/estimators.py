"""Pooled, fixed-effects and random-effects panel estimators.

All estimators take a :class:`PanelDataset` and a :class:`ModelSpec` and
return an :class:`EstimationResult` carrying every row printed in the
result tables (coefficients with t-ratios, adjusted R^2, residual part,
Durbin-Watson, sum of elasticities and, when available, the Hausman
outcome).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import diagnostics as diag
from .errors import (
    DegenerateColumn,
    InsufficientObservations,
    PanelError,
    PrereqEntities,
    SingletonEntity,
)
from .linreg import DesignMatrix, OlsFit, build_design, least_squares
from .panel import PanelDataset
from .specs import Effects, ModelSpec

__all__ = [
    "Coefficient",
    "EntityEffect",
    "EstimationResult",
    "VarianceComponents",
    "pooled_ols",
    "fixed_effects_lsdv",
    "fixed_effects_within",
    "variance_components",
    "random_effects_gls",
    "estimate",
    "quasi_demean",
]


@dataclass(frozen=True)
class Coefficient:
    label: str
    beta: float
    se: float
    t: float
    significance: str  # "5%", "10%" or "none"
    kind: str = "regressor"  # "intercept", "event" or "regressor"


@dataclass(frozen=True)
class EntityEffect:
    entity: str
    value: float
    se: float
    t: float
    significance: str


@dataclass(frozen=True)
class EstimationResult:
    spec: ModelSpec
    effects_used: Effects
    coefficients: tuple[Coefficient, ...]
    entity_dummies: tuple[EntityEffect, ...] | None
    r2: float
    r2_adj: float
    residual_part: float
    durbin_watson: float
    sum_elasticities: float
    n: int
    k: int
    df_resid: int
    sigma2: float
    regressor_cov: tuple[tuple[float, ...], ...]
    hausman: diag.HausmanResult | None = None
    metadata: Mapping[str, object] = field(default_factory=dict)

    # -- views used by diagnostics and reporting -------------------------

    @property
    def regressor_names(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.coefficients if c.kind == "regressor")

    @property
    def regressor_beta(self) -> np.ndarray:
        return np.array([c.beta for c in self.coefficients if c.kind == "regressor"])

    @property
    def regressor_coefficients(self) -> tuple[Coefficient, ...]:
        return tuple(c for c in self.coefficients if c.kind == "regressor")

    def coefficient(self, label: str) -> Coefficient:
        for c in self.coefficients:
            if c.label == label:
                return c
        raise KeyError(label)

    @property
    def intercept(self) -> Coefficient | None:
        for c in self.coefficients:
            if c.kind == "intercept":
                return c
        return None

    def with_hausman(self, hausman, **meta) -> "EstimationResult":
        from dataclasses import replace

        return replace(self, hausman=hausman, metadata={**self.metadata, **meta})

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "effects_used": self.effects_used.value,
            "coefficients": [
                {"label": c.label, "beta": c.beta, "se": c.se, "t": c.t,
                 "significance": c.significance, "kind": c.kind}
                for c in self.coefficients
            ],
            "entity_dummies": None if self.entity_dummies is None else [
                {"entity": d.entity, "value": d.value, "se": d.se, "t": d.t,
                 "significance": d.significance}
                for d in self.entity_dummies
            ],
            "r2": self.r2,
            "r2_adj": self.r2_adj,
            "residual_part": self.residual_part,
            "durbin_watson": self.durbin_watson,
            "sum_elasticities": self.sum_elasticities,
            "n": self.n,
            "k": self.k,
            "df_resid": self.df_resid,
            "sigma2": self.sigma2,
            "regressor_cov": [list(row) for row in self.regressor_cov],
            "hausman": None if self.hausman is None else self.hausman.to_dict(),
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationResult":
        dummies = d.get("entity_dummies")
        return cls(
            spec=ModelSpec.from_dict(d["spec"]),
            effects_used=Effects(d["effects_used"]),
            coefficients=tuple(Coefficient(**c) for c in d["coefficients"]),
            entity_dummies=None if dummies is None else tuple(EntityEffect(**e) for e in dummies),
            r2=d["r2"],
            r2_adj=d["r2_adj"],
            residual_part=d["residual_part"],
            durbin_watson=d["durbin_watson"],
            sum_elasticities=d["sum_elasticities"],
            n=d["n"],
            k=d["k"],
            df_resid=d["df_resid"],
            sigma2=d["sigma2"],
            regressor_cov=tuple(tuple(row) for row in d["regressor_cov"]),
            hausman=None if d.get("hausman") is None else diag.HausmanResult.from_dict(d["hausman"]),
            metadata=d.get("metadata", {}),
        )


@dataclass(frozen=True)
class VarianceComponents:
    sigma2_e: float
    sigma2_u: float
    theta_per_entity: Mapping[str, float]
    clamped: bool = False
    t_harmonic: float = math.nan

    @staticmethod
    def theta(sigma2_e: float, sigma2_u: float, t_i: int) -> float:
        return 1.0 - math.sqrt(sigma2_e / (sigma2_e + t_i * sigma2_u))


# ---------------------------------------------------------------------------
# helpers


def _ratio(beta: np.ndarray, se: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
        return np.where(se > 0, t, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))


def _durbin_watson(resid, row_index, meta: dict) -> float:
    try:
        return diag.durbin_watson(resid, row_index)
    except PanelError as exc:
        meta["durbin_watson_note"] = f"{type(exc).__name__}: {exc}"
        return math.nan


def _entity_sizes(X: DesignMatrix) -> np.ndarray:
    return np.bincount(X.entity_codes, minlength=len(X.entities))


def _require_entities(X: DesignMatrix, meta: dict) -> None:
    if len(X.entities) < 2:
        raise PrereqEntities(f"panel estimators need at least 2 entities, found {len(X.entities)}")
    sizes = _entity_sizes(X)
    singles = [e for e, s in zip(X.entities, sizes) if s < 2]
    if singles:
        warnings.warn(
            f"entities with a single observation are absorbed by their dummy: {singles}",
            SingletonEntity, stacklevel=3,
        )
        meta["singleton_entities"] = singles


def group_means(values: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    """Per-group means of a vector or of each column of a matrix."""
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    if values.ndim == 1:
        return np.bincount(codes, weights=values, minlength=n_groups) / counts
    return np.column_stack(
        [np.bincount(codes, weights=values[:, j], minlength=n_groups) / counts
         for j in range(values.shape[1])]
    )


def _demeaned_design(X: DesignMatrix) -> tuple[DesignMatrix, np.ndarray, np.ndarray]:
    N = len(X.entities)
    xbar = group_means(X.values, X.entity_codes, N)
    ybar = group_means(X.response, X.entity_codes, N)
    values = X.values - xbar[X.entity_codes]
    for j, label in enumerate(X.column_labels):
        ref = max(1.0, float(np.max(np.abs(X.values[:, j]))))
        if float(np.max(np.abs(values[:, j]))) <= 1e-12 * ref:
            raise DegenerateColumn(f"column {label!r} does not vary within entities")
    demeaned = DesignMatrix(
        values=np.asfortranarray(values),
        column_labels=X.column_labels,
        kinds=X.kinds,
        response=X.response - ybar[X.entity_codes],
        row_index=X.row_index,
        entity_codes=X.entity_codes,
        entities=X.entities,
        centered=False,
        excluded=X.excluded,
    )
    return demeaned, xbar, ybar


def _assemble(spec, effects, X: DesignMatrix, fit: OlsFit, r2, r2_adj, dw,
              entity_effects=None, meta=None) -> EstimationResult:
    beta, cov, df_resid, sigma2 = fit.beta, fit.cov_beta, fit.df_resid, fit.sigma2
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    t = _ratio(beta, se)
    if (se <= 0).any():
        meta["degenerate_variance"] = True
    coefs = []
    for j, (label, kind) in enumerate(zip(X.column_labels, X.kinds)):
        if kind == "entity":
            continue
        coefs.append(Coefficient(label, float(beta[j]), float(se[j]), float(t[j]),
                                 diag.significance(float(t[j]), df_resid), kind))
    reg = [j for j, kind in enumerate(X.kinds) if kind == "regressor"]
    reg_cov = cov[np.ix_(reg, reg)]
    meta.setdefault("r2_kind", "overall")
    if X.excluded:
        meta["excluded_rows"] = [list(p) for p in X.excluded]
    return EstimationResult(
        spec=spec,
        effects_used=effects,
        coefficients=tuple(coefs),
        entity_dummies=entity_effects,
        r2=float(r2),
        r2_adj=float(r2_adj),
        residual_part=diag.residual_part(r2_adj) if math.isfinite(r2_adj) else math.nan,
        durbin_watson=float(dw),
        sum_elasticities=diag.sum_elasticities(beta[reg]),
        n=X.n,
        k=X.k,
        df_resid=int(df_resid),
        sigma2=float(sigma2),
        regressor_cov=tuple(tuple(float(v) for v in row) for row in reg_cov),
        metadata=meta,
    )


def _entity_effects(entities, values, se, df_resid) -> tuple[EntityEffect, ...]:
    t = _ratio(np.asarray(values), np.asarray(se))
    return tuple(
        EntityEffect(e, float(v), float(s), float(tt), diag.significance(float(tt), df_resid))
        for e, v, s, tt in zip(entities, values, se, t)
    )


# ---------------------------------------------------------------------------
# estimators


def pooled_ols(ds: PanelDataset, spec: ModelSpec) -> EstimationResult:
    """Single-intercept OLS over every row of the panel."""
    X = build_design(ds, spec, constant="intercept")
    fit = least_squares(X)
    meta: dict = {}
    dw = _durbin_watson(fit.residuals, X.row_index, meta)
    return _assemble(spec, Effects.POOLED, X, fit,
                     fit.r2, fit.r2_adj, dw, meta=meta)


def fixed_effects_lsdv(ds: PanelDataset, spec: ModelSpec) -> EstimationResult:
    """Least squares with one dummy per entity and no global intercept."""
    X = build_design(ds, spec, constant="entity")
    meta: dict = {}
    _require_entities(X, meta)
    fit = least_squares(X)
    dw = _durbin_watson(fit.residuals, X.row_index, meta)
    ent = X.columns_of("entity")
    effects = _entity_effects(X.entities, fit.beta[ent], fit.se[ent], fit.df_resid)
    return _assemble(spec, Effects.FIXED_DUMMIES, X, fit,
                     fit.r2, fit.r2_adj, dw, entity_effects=effects, meta=meta)


def _within_fit(ds: PanelDataset, spec: ModelSpec, meta: dict):
    X = build_design(ds, spec, constant="none")
    _require_entities(X, meta)
    N = len(X.entities)
    Xd, xbar, ybar = _demeaned_design(X)
    df = X.n - X.k - N
    if df < 1:
        raise InsufficientObservations(
            f"{X.n} observations for {X.k} slopes and {N} entity effects")
    fit = least_squares(Xd, df_resid=df)
    return X, Xd, xbar, ybar, fit


def fixed_effects_within(ds: PanelDataset, spec: ModelSpec) -> EstimationResult:
    """Entity-demeaned OLS; numerically the LSDV slopes, with df = n - k - N."""
    meta: dict = {}
    X, Xd, xbar, ybar, fit = _within_fit(ds, spec, meta)
    N = len(X.entities)
    y = X.response
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - fit.ssr / tss if tss > 0 else (1.0 if fit.ssr == 0 else math.nan)
    r2_adj = 1.0 - (1.0 - r2) * (X.n - 1) / fit.df_resid
    dw = _durbin_watson(fit.residuals, X.row_index, meta)
    alpha_i = ybar - xbar @ fit.beta
    sizes = _entity_sizes(X)
    var_alpha = fit.sigma2 / sizes + np.einsum("ij,jk,ik->i", xbar, fit.cov_beta, xbar)
    effects = _entity_effects(X.entities, alpha_i, np.sqrt(var_alpha), fit.df_resid)
    return _assemble(spec, Effects.FIXED_WITHIN, X, fit,
                     r2, r2_adj, dw, entity_effects=effects, meta=meta)


def variance_components(ds: PanelDataset, spec: ModelSpec) -> VarianceComponents:
    """Swamy-Arora estimates of the idiosyncratic and entity variances.

    The idiosyncratic variance comes from the within residuals; the entity
    variance from the between regression (entity means on a constant and
    the mean regressors) minus ``sigma2_e / T_h`` with ``T_h`` the harmonic
    mean of the entity sizes.  Negative entity variances are clamped to 0.
    Between-regression columns that do not vary across entities (e.g. a
    year dummy in a balanced panel) are collinear with the constant and
    are left out.
    """
    meta: dict = {}
    X, _, xbar, ybar, fit = _within_fit(ds, spec, meta)
    N = len(X.entities)
    sigma2_e = fit.sigma2
    assert sigma2_e >= 0, "within residual variance cannot be negative"

    keep = [j for j in range(X.k) if np.ptp(xbar[:, j]) > 1e-12 * max(1.0, np.abs(xbar[:, j]).max())]
    between_k = len(keep) + 1
    if N <= between_k:
        raise InsufficientObservations(
            f"between regression needs more entities than parameters ({N} entities, {between_k} parameters)")
    B = np.column_stack([np.ones(N), xbar[:, keep]])
    Xb = DesignMatrix(
        values=np.asfortranarray(B),
        column_labels=("const", *(X.column_labels[j] for j in keep)),
        kinds=("intercept", *("regressor" for _ in keep)),
        response=ybar,
        row_index=tuple((e, 0) for e in X.entities),
        entity_codes=np.arange(N),
        entities=X.entities,
        centered=True,
    )
    between = least_squares(Xb)
    sizes = _entity_sizes(X)
    t_h = N / float(np.sum(1.0 / sizes))
    sigma2_u = between.sigma2 - sigma2_e / t_h
    clamped = sigma2_u < 0
    if clamped:
        sigma2_u = 0.0
    if sigma2_e == 0:
        thetas = {e: (1.0 if sigma2_u > 0 else 0.0) for e in X.entities}
    else:
        thetas = {e: VarianceComponents.theta(sigma2_e, sigma2_u, int(t))
                  for e, t in zip(X.entities, sizes)}
    return VarianceComponents(sigma2_e=sigma2_e, sigma2_u=float(sigma2_u),
                              theta_per_entity=thetas, clamped=bool(clamped), t_harmonic=t_h)


def quasi_demean(values: np.ndarray, codes: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``x - theta_i * mean_i(x)`` for every row (and column) of ``values``."""
    N = theta.shape[0]
    means = group_means(values, codes, N)
    if values.ndim == 1:
        return values - theta[codes] * means[codes]
    return values - theta[codes][:, None] * means[codes]


def random_effects_gls(
    ds: PanelDataset,
    spec: ModelSpec,
    *,
    thetas: float | Mapping[str, float] | None = None,
) -> EstimationResult:
    """Feasible GLS by OLS on quasi-demeaned data.

    ``thetas`` forces the quasi-demeaning weights (a scalar for every
    entity or a per-entity mapping) instead of estimating them.
    """
    meta: dict = {}
    X = build_design(ds, spec, constant="intercept")
    if thetas is None:
        vc = variance_components(ds, spec)
        theta_map = dict(vc.theta_per_entity)
        meta.update(sigma2_e=vc.sigma2_e, sigma2_u=vc.sigma2_u, sigma2_u_clamped=vc.clamped)
    elif isinstance(thetas, Mapping):
        theta_map = {e: float(thetas[e]) for e in X.entities}
        meta["forced_thetas"] = True
    else:
        theta_map = {e: float(thetas) for e in X.entities}
        meta["forced_thetas"] = True
    theta = np.array([theta_map[e] for e in X.entities])
    meta["theta"] = {e: theta_map[e] for e in X.entities}

    Xq = DesignMatrix(
        values=np.asfortranarray(quasi_demean(X.values, X.entity_codes, theta)),
        column_labels=X.column_labels,
        kinds=X.kinds,
        response=quasi_demean(X.response, X.entity_codes, theta),
        row_index=X.row_index,
        entity_codes=X.entity_codes,
        entities=X.entities,
        centered=False,
        excluded=X.excluded,
    )
    fit = least_squares(Xq)
    y = X.response
    resid_overall = y - X.values @ fit.beta
    tss = float(((y - y.mean()) ** 2).sum())
    ssr = float(resid_overall @ resid_overall)
    r2 = 1.0 - ssr / tss if tss > 0 else (1.0 if ssr == 0 else math.nan)
    r2_adj = 1.0 - (1.0 - r2) * (X.n - 1) / (X.n - X.k)
    dw = _durbin_watson(fit.residuals, X.row_index, meta)
    return _assemble(spec, Effects.RANDOM, X, fit,
                     r2, r2_adj, dw, meta=meta)


def estimate(ds: PanelDataset, spec: ModelSpec) -> EstimationResult:
    """Estimate ``spec`` with its effects mode, attaching a Hausman outcome.

    ``Effects.AUTO`` fits both LSDV and random effects and keeps random
    effects only when the Hausman test accepts it; a test that cannot be
    computed (including a random-effects fit that fails) falls back to
    LSDV with outcome ``(c)``.
    """
    mode = spec.effects
    if mode is Effects.POOLED:
        return pooled_ols(ds, spec)
    if mode is Effects.FIXED_WITHIN:
        return fixed_effects_within(ds, spec)

    if mode is Effects.RANDOM:
        re = random_effects_gls(ds, spec)
        try:
            fe = fixed_effects_lsdv(ds, spec)
        except PanelError as exc:
            return re.with_hausman(diag.HausmanResult.not_acceptable(
                len(spec.regressors), f"fixed effects failed: {type(exc).__name__}: {exc}"))
        return re.with_hausman(diag.hausman_test(fe, re, spec.alpha))

    fe = fixed_effects_lsdv(ds, spec)
    try:
        re = random_effects_gls(ds, spec)
    except PanelError as exc:
        h = diag.HausmanResult.not_acceptable(
            len(spec.regressors), f"random effects failed: {type(exc).__name__}: {exc}")
        if mode is Effects.AUTO:
            return fe.with_hausman(h, auto_fallback=True)
        return fe.with_hausman(h)
    h = diag.hausman_test(fe, re, spec.alpha)
    if mode is Effects.AUTO and h.decision is diag.HausmanDecision.ACCEPT_RANDOM:
        return re.with_hausman(h)
    if mode is Effects.AUTO and h.decision is diag.HausmanDecision.NOT_ACCEPTABLE:
        return fe.with_hausman(h, auto_fallback=True)
    return fe.with_hausman(h)
