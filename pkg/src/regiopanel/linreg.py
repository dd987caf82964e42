"""Design-matrix assembly and QR-based least squares."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegenerateColumn,
    DegenerateVariance,
    InsufficientObservations,
    NonPositiveValue,
    RankDeficient,
    UnknownVariable,
)
from .panel import PanelDataset, log_name
from .specs import Effects, ModelSpec

__all__ = [
    "DesignMatrix",
    "OlsFit",
    "RANK_TOL",
    "build_design",
    "least_squares",
    "t_statistics",
    "r_squared_adjusted",
]

RANK_TOL = 1e-10

INTERCEPT = "const"


def entity_label(entity: str) -> str:
    return f"entity[{entity}]"


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Dense regression block plus the bookkeeping estimators need.

    ``kinds`` tags each column as ``intercept``, ``entity``, ``event`` or
    ``regressor``.  ``centered`` says whether the column space contains a
    constant (intercept or a full entity-dummy set), which selects the
    centered R^2.
    """

    values: np.ndarray
    column_labels: tuple[str, ...]
    kinds: tuple[str, ...]
    response: np.ndarray
    row_index: tuple[tuple[str, int], ...]
    entity_codes: np.ndarray
    entities: tuple[str, ...]
    centered: bool
    excluded: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        n, k = self.values.shape
        if n < 1 or k < 1:
            raise InsufficientObservations(f"empty design ({n} x {k})")
        if len(self.column_labels) != k or len(set(self.column_labels)) != k:
            raise ValueError("column labels must be unique and match the column count")
        if self.response.shape != (n,) or len(self.row_index) != n:
            raise ValueError("response and row index must have one entry per row")
        if not (np.isfinite(self.values).all() and np.isfinite(self.response).all()):
            raise ValueError("design contains non-finite values")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def columns_of(self, kind: str) -> list[int]:
        return [j for j, t in enumerate(self.kinds) if t == kind]


@dataclass(frozen=True, eq=False)
class OlsFit:
    beta: np.ndarray
    se: np.ndarray
    residuals: np.ndarray
    sigma2: float
    cov_beta: np.ndarray
    r2: float
    r2_adj: float
    n: int
    k: int
    df_resid: int
    labels: tuple[str, ...] = field(default=())

    @property
    def ssr(self) -> float:
        return float(self.residuals @ self.residuals)


def _resolve(ds: PanelDataset, name: str, log_all: bool) -> np.ndarray:
    if not log_all:
        return ds.column(name)
    ln = log_name(name)
    if ln in ds.columns:
        return ds.columns[ln]
    if name not in ds.columns:
        raise UnknownVariable(f"unknown variable {name!r} (neither {name} nor {ln} present)")
    level = ds.columns[name]
    with np.errstate(invalid="ignore"):
        bad = np.flatnonzero(level <= 0)
    if bad.size:
        i = int(bad[0])
        raise NonPositiveValue(
            f"{name} = {level[i]!r} at ({ds.row_entities[i]}, {ds.row_years[i]}) cannot be logged"
        )
    return np.log(level)


def build_design(
    ds: PanelDataset,
    spec: ModelSpec,
    *,
    constant: str | None = None,
) -> DesignMatrix:
    """Map ``spec`` onto ``ds``.

    ``constant`` is ``"intercept"``, ``"entity"`` (one dummy per entity,
    no global intercept) or ``"none"``; by default it follows
    ``spec.effects``.  Column order: intercept or entity dummies, event
    dummies, regressors in spec order.  Rows with a missing value in any
    model variable are dropped and listed in ``excluded``.
    """
    if constant is None:
        constant = "entity" if spec.effects is Effects.FIXED_DUMMIES else (
            "none" if spec.effects is Effects.FIXED_WITHIN else "intercept")
    if constant not in ("intercept", "entity", "none"):
        raise ValueError(f"unknown constant mode {constant!r}")

    y_all = _resolve(ds, spec.dependent, spec.log_all)
    x_all = [_resolve(ds, r, spec.log_all) for r in spec.regressors]
    ok = np.isfinite(y_all)
    for col in x_all:
        ok &= np.isfinite(col)
    rows = np.flatnonzero(ok)
    excluded = tuple(
        (ds.row_entities[i], ds.row_years[i]) for i in np.flatnonzero(~ok)
    )

    row_entities = [ds.row_entities[i] for i in rows]
    present = set(row_entities)
    entities = tuple(e for e in ds.entities if e in present)
    position = {e: i for i, e in enumerate(entities)}
    codes = np.array([position[e] for e in row_entities], dtype=int)
    years = ds.years[rows]
    n = rows.size

    blocks, labels, kinds = [], [], []
    if constant == "intercept":
        blocks.append(np.ones(n))
        labels.append(INTERCEPT)
        kinds.append("intercept")
    elif constant == "entity":
        for j, e in enumerate(entities):
            blocks.append((codes == j).astype(float))
            labels.append(entity_label(e))
            kinds.append("entity")
    for d in spec.event_dummies:
        blocks.append((years >= d.first_year).astype(float))
        labels.append(d.name)
        kinds.append("event")
    for name, col in zip(spec.regressors, x_all):
        blocks.append(col[rows])
        labels.append(name)
        kinds.append("regressor")

    k = len(blocks)
    if n <= k:
        raise InsufficientObservations(f"{n} usable observations for {k} parameters")
    for block, label, kind in zip(blocks, labels, kinds):
        if kind in ("event", "regressor") and np.ptp(block) == 0:
            raise DegenerateColumn(f"column {label!r} is constant over the estimation sample")

    values = np.asfortranarray(np.column_stack(blocks))
    values.setflags(write=False)
    response = np.array(y_all[rows])
    response.setflags(write=False)
    codes.setflags(write=False)
    return DesignMatrix(
        values=values,
        column_labels=tuple(labels),
        kinds=tuple(kinds),
        response=response,
        row_index=tuple(zip(row_entities, (int(y) for y in years))),
        entity_codes=codes,
        entities=entities,
        centered=constant != "none",
        excluded=excluded,
    )


def r_squared_adjusted(r2: float, n: int, k: int) -> float:
    """Adjusted R^2 with ``k`` slope parameters besides the intercept."""
    if n <= k + 1:
        raise InsufficientObservations(f"adjusted R^2 needs n > k + 1 (n={n}, k={k})")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - k - 1)


def least_squares(X: DesignMatrix, *, df_resid: int | None = None,
                  centered: bool | None = None) -> OlsFit:
    """Solve ``min ||y - X b||`` through a reduced QR factorisation.

    ``df_resid`` overrides the residual degrees of freedom ``n - k`` (the
    within estimator passes ``n - k - N``).  ``centered`` overrides the
    design's own flag when choosing the R^2 denominator.
    """
    A = X.values
    y = X.response
    n, k = A.shape
    if n <= k:
        raise InsufficientObservations(f"{n} observations for {k} parameters")
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(R))
    scale = diag.max()
    small = np.flatnonzero(diag < RANK_TOL * scale) if scale > 0 else np.arange(k)
    if small.size:
        raise RankDeficient(
            f"design is rank deficient at column {X.column_labels[small[0]]!r}"
        )
    beta = solve_triangular(R, Q.T @ y)
    resid = y - A @ beta
    df = n - k if df_resid is None else int(df_resid)
    if df < 1:
        raise InsufficientObservations(f"no residual degrees of freedom (df={df})")
    ssr = float(resid @ resid)
    sigma2 = ssr / df
    R_inv = solve_triangular(R, np.eye(k))
    cov = sigma2 * (R_inv @ R_inv.T)
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.diag(cov))

    centered = X.centered if centered is None else centered
    tss = float(((y - y.mean()) ** 2).sum()) if centered else float(y @ y)
    if tss > 0:
        r2 = 1.0 - ssr / tss
    else:
        r2 = 1.0 if ssr == 0 else float("nan")
    if centered:
        r2_adj = 1.0 - (1.0 - r2) * (n - 1) / df
    else:
        r2_adj = 1.0 - (1.0 - r2) * n / df
    return OlsFit(
        beta=beta, se=se, residuals=resid, sigma2=sigma2, cov_beta=cov,
        r2=r2, r2_adj=r2_adj, n=n, k=k, df_resid=df, labels=X.column_labels,
    )


def t_statistics(fit: OlsFit) -> np.ndarray:
    se = np.asarray(fit.se, dtype=float)
    if (se <= 0).any():
        j = int(np.flatnonzero(se <= 0)[0])
        label = fit.labels[j] if fit.labels else j
        raise DegenerateVariance(f"standard error of {label!r} is zero")
    return np.asarray(fit.beta, dtype=float) / se
