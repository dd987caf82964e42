"""Post-estimation diagnostics: Durbin-Watson, Hausman, chi-square tails, table summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import (
    DegenerateResiduals,
    DomainError,
    NotComputable,
    SpecMismatch,
)
from .linreg import RANK_TOL

__all__ = [
    "HausmanDecision",
    "HausmanResult",
    "durbin_watson",
    "regularized_gamma_p",
    "regularized_gamma_q",
    "chi_square_sf",
    "chi_square_cdf",
    "hausman_statistic",
    "hausman_test",
    "residual_part",
    "sum_elasticities",
    "significance",
    "STAR",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


# ---------------------------------------------------------------------------
# Durbin-Watson


def durbin_watson(residuals, row_index: Sequence[tuple[str, int]]) -> float:
    """Panel Durbin-Watson statistic.

    Successive differences are only taken between consecutive years of the
    same entity, so entity boundaries and gaps in the year sequence add
    nothing to the numerator.  The denominator is the full residual sum of
    squares.
    """
    e = np.asarray(residuals, dtype=float)
    if e.shape[0] != len(row_index):
        raise ValueError("residuals and row index are not aligned")
    denom = float(e @ e)
    if denom == 0.0:
        raise DegenerateResiduals("all residuals are zero")
    num = 0.0
    pairs = 0
    for i in range(1, e.shape[0]):
        (ent0, y0), (ent1, y1) = row_index[i - 1], row_index[i]
        if ent0 == ent1 and y1 == y0 + 1:
            diff = e[i] - e[i - 1]
            num += diff * diff
            pairs += 1
    if pairs == 0:
        raise NotComputable("no entity has two consecutive years of residuals")
    return num / denom


# ---------------------------------------------------------------------------
# regularized incomplete gamma and the chi-square tail


def _gamma_series(a: float, x: float) -> float:
    # P(a, x) by its power series; converges quickly for x < a + 1.
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"gamma series did not converge for a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_frac(a: float, x: float) -> float:
    # Q(a, x) by modified Lentz evaluation of the Legendre continued fraction.
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"gamma continued fraction did not converge for a={a}, x={x}")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_p(a: float, x: float) -> float:
    if a <= 0:
        raise DomainError(f"shape must be positive, got {a}")
    if x < 0 or math.isnan(x):
        raise DomainError(f"x must be non-negative, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_cont_frac(a, x))


def regularized_gamma_q(a: float, x: float) -> float:
    if a <= 0:
        raise DomainError(f"shape must be positive, got {a}")
    if x < 0 or math.isnan(x):
        raise DomainError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cont_frac(a, x))


def chi_square_sf(x: float, df: int) -> float:
    """Upper tail probability of a chi-square variable with ``df`` degrees of freedom."""
    if df <= 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    if x < 0:
        raise DomainError(f"chi-square argument must be non-negative, got {x}")
    return regularized_gamma_q(0.5 * df, 0.5 * x)


def chi_square_cdf(x: float, df: int) -> float:
    if df <= 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    if x < 0:
        raise DomainError(f"chi-square argument must be non-negative, got {x}")
    return regularized_gamma_p(0.5 * df, 0.5 * x)


# ---------------------------------------------------------------------------
# Hausman


class HausmanDecision(str, Enum):
    ACCEPT_RANDOM = "accept_random"
    REJECT_RANDOM = "reject_random"
    NOT_ACCEPTABLE = "not_statistically_acceptable"

    @property
    def code(self) -> str:
        return {"accept_random": "(a)", "reject_random": "(b)",
                "not_statistically_acceptable": "(c)"}[self.value]


@dataclass(frozen=True)
class HausmanResult:
    statistic: float
    df: int
    p_value: float
    decision: HausmanDecision
    detail: str = ""

    @property
    def computable(self) -> bool:
        return self.decision is not HausmanDecision.NOT_ACCEPTABLE

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "df": self.df, "p_value": self.p_value,
                "decision": self.decision.value, "detail": self.detail}

    @classmethod
    def from_dict(cls, d: dict) -> "HausmanResult":
        return cls(float(d["statistic"]), int(d["df"]), float(d["p_value"]),
                   HausmanDecision(d["decision"]), d.get("detail", ""))

    @classmethod
    def not_acceptable(cls, df: int, detail: str) -> "HausmanResult":
        return cls(math.nan, df, math.nan, HausmanDecision.NOT_ACCEPTABLE, detail)


def hausman_statistic(b_fe, cov_fe, b_re, cov_re, alpha: float = 0.05) -> HausmanResult:
    """Hausman contrast on already aligned coefficient vectors and covariances."""
    b_fe = np.atleast_1d(np.asarray(b_fe, dtype=float))
    b_re = np.atleast_1d(np.asarray(b_re, dtype=float))
    df = b_fe.shape[0]
    if b_re.shape != b_fe.shape:
        raise SpecMismatch("coefficient vectors differ in length")
    diff_cov = np.atleast_2d(np.asarray(cov_fe, dtype=float)) - np.atleast_2d(
        np.asarray(cov_re, dtype=float))
    if diff_cov.shape != (df, df):
        raise SpecMismatch("covariance shapes do not match the coefficient vectors")
    diff_cov = 0.5 * (diff_cov + diff_cov.T)
    d = b_fe - b_re
    if not (np.isfinite(d).all() and np.isfinite(diff_cov).all()):
        return HausmanResult.not_acceptable(df, "non-finite coefficients or covariances")
    eig = np.linalg.eigvalsh(diff_cov)
    top = eig.max()
    if top <= 0 or eig.min() <= RANK_TOL * top:
        return HausmanResult.not_acceptable(
            df, f"covariance difference is not positive definite (eigenvalues {eig.min():.3g}..{top:.3g})")
    stat = float(d @ np.linalg.solve(diff_cov, d))
    if stat < 0 or not math.isfinite(stat):
        return HausmanResult.not_acceptable(df, f"negative statistic {stat:.6g}")
    p = chi_square_sf(stat, df)
    decision = HausmanDecision.REJECT_RANDOM if p < alpha else HausmanDecision.ACCEPT_RANDOM
    return HausmanResult(stat, df, p, decision)


def hausman_test(fe, re, alpha: float = 0.05, sigma: str = "efficient") -> HausmanResult:
    """Compare fixed- and random-effects estimates of the same regressors.

    Only ``spec.regressors`` enter the contrast; intercept, entity dummies
    and event dummies are left out.  The RE estimates are aligned to the
    FE regressor order by name.

    With ``sigma="efficient"`` (default) the FE covariance is rescaled to
    the random-effects residual variance so both covariances share one
    estimate of the idiosyncratic variance; the difference is then positive
    semidefinite in every sample.  ``sigma="own"`` uses each fit's own
    variance estimate.
    """
    names_fe = list(fe.regressor_names)
    names_re = list(re.regressor_names)
    if sorted(names_fe) != sorted(names_re) or len(set(names_fe)) != len(names_fe):
        raise SpecMismatch(f"regressor sets differ: {names_fe} vs {names_re}")
    if fe.n != re.n:
        raise SpecMismatch(f"estimated on different samples (n={fe.n} vs n={re.n})")
    if sigma not in ("efficient", "own"):
        raise ValueError(f"sigma must be 'efficient' or 'own', got {sigma!r}")
    order = [names_re.index(name) for name in names_fe]
    b_re = np.asarray(re.regressor_beta)[order]
    cov_re = np.asarray(re.regressor_cov)[np.ix_(order, order)]
    cov_fe = np.asarray(fe.regressor_cov, dtype=float)
    if sigma == "efficient":
        if not fe.sigma2 > 0:
            return HausmanResult.not_acceptable(len(names_fe), "fixed-effects residual variance is zero")
        cov_fe = cov_fe * (re.sigma2 / fe.sigma2)
    return hausman_statistic(fe.regressor_beta, cov_fe, b_re, cov_re, alpha)


# ---------------------------------------------------------------------------
# table rows


def residual_part(r2_adj: float) -> float:
    """Share of variation left unexplained by the specific factors."""
    if r2_adj > 1:
        raise DomainError(f"adjusted R^2 cannot exceed 1, got {r2_adj}")
    return 1.0 - r2_adj


def sum_elasticities(regressor_betas) -> float:
    betas = [float(b) for b in regressor_betas]
    if not betas:
        raise ValueError("no regressor coefficients to sum")
    return math.fsum(betas)


STAR = {"5%": "*", "10%": "**", "none": ""}


def significance(t: float, df: int) -> str:
    """Two-sided significance class of a t-ratio: ``"5%"``, ``"10%"`` or ``"none"``."""
    if not math.isfinite(t):
        return "5%" if math.isinf(t) else "none"
    a = abs(t)
    if a > stats.t.ppf(0.975, df):
        return "5%"
    if a > stats.t.ppf(0.95, df):
        return "10%"
    return "none"
