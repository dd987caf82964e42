import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats

from oracles import chi_square_sf_quad
from regiopanel.diagnostics import (
    HausmanDecision,
    HausmanResult,
    chi_square_cdf,
    chi_square_sf,
    durbin_watson,
    hausman_statistic,
    hausman_test,
    regularized_gamma_p,
    regularized_gamma_q,
    residual_part,
    significance,
    sum_elasticities,
)
from regiopanel.errors import DegenerateResiduals, DomainError, NotComputable, SpecMismatch
from regiopanel.estimators import fixed_effects_within, random_effects_gls
from regiopanel.synthetic import DgpSpec, generate_panel


def single(n):
    return [("A", 2000 + t) for t in range(n)]


# Durbin-Watson -------------------------------------------------------------


def test_dw_alternating_residuals():
    e = [1.0, -1.0, 1.0, -1.0]
    # numerator 3 * 4 = 12, denominator 4
    assert durbin_watson(e, single(4)) == 3.0


def test_dw_constant_residuals():
    assert durbin_watson([0.7] * 6, single(6)) == 0.0


def test_dw_ignores_entity_boundaries_and_gaps():
    e = [1.0, 2.0, 5.0, 6.0, 9.0]
    idx = [("A", 1), ("A", 2), ("B", 1), ("B", 2), ("B", 4)]
    assert durbin_watson(e, idx) == pytest.approx((1.0 + 1.0) / float(np.dot(e, e)))


def test_dw_errors():
    with pytest.raises(DegenerateResiduals):
        durbin_watson([0.0, 0.0], single(2))
    with pytest.raises(NotComputable):
        durbin_watson([1.0, 2.0], [("A", 1), ("B", 1)])
    with pytest.raises(ValueError):
        durbin_watson([1.0], single(2))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=40))
def test_dw_within_bounds(values):
    e = np.array(values)
    assume(float(e @ e) > 1e-12)
    assert 0.0 <= durbin_watson(e, single(len(e))) <= 4.0


# chi-square ----------------------------------------------------------------

CHI2_REFERENCE = [
    # (x, df, upper tail) from 40-digit mpmath quadrature of the density
    (3.841, 1, 0.050013683763956699076),
    (9.488, 4, 0.049994405577994635261),
    (0.5, 1, 0.47950012218695346232),
    (1.0, 2, 0.6065306597126334236),
    (10.0, 3, 0.018566135463043233303),
    (25.0, 10, 0.0053455054871340642993),
    (100.0, 50, 0.000034549313829848639421),
    (0.01, 7, 0.99999999924305903403),
    (60.0, 5, 1.2154569777183038948e-11),
    (2.706, 1, 0.099971378125259318479),
    (5.991, 2, 0.050011615026579089616),
]


@pytest.mark.parametrize("x,df,expected", CHI2_REFERENCE)
def test_chi_square_sf_frozen_reference(x, df, expected):
    assert abs(chi_square_sf(x, df) - expected) <= 1e-10


@pytest.mark.parametrize("x,df", [(3.841, 1), (9.488, 4), (7.3, 3), (45.0, 8)])
def test_chi_square_sf_against_live_quadrature(x, df):
    assert abs(chi_square_sf(x, df) - chi_square_sf_quad(x, df)) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 400), st.integers(1, 60))
def test_chi_square_matches_scipy(x, df):
    assert chi_square_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), rel=1e-9, abs=1e-14)
    assert chi_square_sf(x, df) + chi_square_cdf(x, df) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 200), st.floats(0, 50), st.integers(1, 30))
def test_chi_square_sf_monotone(x, dx, df):
    assert chi_square_sf(x + dx, df) <= chi_square_sf(x, df) + 1e-15


def test_chi_square_edges_and_domain():
    assert chi_square_sf(0.0, 3) == 1.0
    assert chi_square_sf(math.inf, 3) == 0.0
    assert chi_square_cdf(0.0, 1) == 0.0
    with pytest.raises(DomainError):
        chi_square_sf(-1.0, 2)
    with pytest.raises(DomainError):
        chi_square_sf(1.0, 0)
    with pytest.raises(DomainError):
        regularized_gamma_p(0.0, 1.0)
    with pytest.raises(DomainError):
        regularized_gamma_q(1.0, math.nan)


def test_regularized_gamma_closed_forms():
    # a = 1: P = 1 - exp(-x)
    for x in (0.1, 1.0, 7.5, 30.0):
        assert regularized_gamma_p(1.0, x) == pytest.approx(-math.expm1(-x), rel=1e-13)
        assert regularized_gamma_q(1.0, x) == pytest.approx(math.exp(-x), rel=1e-12)


# Hausman -------------------------------------------------------------------


def test_hausman_one_dimensional_by_hand():
    h = hausman_statistic([1.2], [[0.05]], [1.0], [[0.03]])
    assert h.statistic == pytest.approx(0.04 / 0.02)
    assert h.df == 1
    assert h.p_value == pytest.approx(stats.chi2.sf(2.0, 1))
    assert h.decision is HausmanDecision.ACCEPT_RANDOM
    big = hausman_statistic([2.0], [[0.05]], [1.0], [[0.03]])
    assert big.decision is HausmanDecision.REJECT_RANDOM
    assert big.decision.code == "(b)"


def test_hausman_not_acceptable_cases():
    # RE variance above FE variance: difference is negative definite
    h = hausman_statistic([1.0], [[0.01]], [0.9], [[0.02]])
    assert h.decision is HausmanDecision.NOT_ACCEPTABLE and h.decision.code == "(c)"
    assert math.isnan(h.statistic) and h.detail
    sing = hausman_statistic([1.0, 2.0], [[1.0, 1.0], [1.0, 1.0]], [0.0, 0.0], [[0.0, 0.0], [0.0, 0.0]])
    assert sing.decision is HausmanDecision.NOT_ACCEPTABLE
    nan = hausman_statistic([math.nan], [[1.0]], [0.0], [[0.5]])
    assert nan.decision is HausmanDecision.NOT_ACCEPTABLE
    with pytest.raises(SpecMismatch):
        hausman_statistic([1.0, 2.0], [[1.0]], [1.0], [[0.5]])


def test_hausman_result_round_trip():
    h = hausman_statistic([1.2, 0.3], [[0.05, 0.0], [0.0, 0.04]], [1.0, 0.2], [[0.03, 0.0], [0.0, 0.01]])
    assert HausmanResult.from_dict(h.to_dict()) == h


def _fe_re(seed, **kw):
    dgp = DgpSpec(entities=25, periods=8, beta=(1.0, 0.5, -0.3), sigma2_e=1.0, sigma2_u=1.0, seed=seed, **kw)
    ds = generate_panel(dgp)
    spec = dgp.model_spec()
    return ds, spec, fixed_effects_within(ds, spec), random_effects_gls(ds, spec)


def test_hausman_invariant_to_regressor_order():
    ds, spec, fe, re = _fe_re(8)
    rev = spec.replace(regressors=tuple(reversed(spec.regressors)))
    fe2, re2 = fixed_effects_within(ds, rev), random_effects_gls(ds, rev)
    for sigma in ("efficient", "own"):
        a = hausman_test(fe, re, sigma=sigma)
        for other in (hausman_test(fe2, re2, sigma=sigma), hausman_test(fe, re2, sigma=sigma)):
            assert other.statistic == pytest.approx(a.statistic, rel=1e-8)
            assert other.decision is a.decision


def test_hausman_efficient_variant_rescales_fe_covariance():
    _, _, fe, re = _fe_re(9)
    own = hausman_test(fe, re, sigma="own")
    eff = hausman_test(fe, re)
    d = fe.regressor_beta - re.regressor_beta
    V = np.array(fe.regressor_cov) * re.sigma2 / fe.sigma2 - np.array(re.regressor_cov)
    assert eff.statistic == pytest.approx(float(d @ np.linalg.solve(V, d)), rel=1e-10)
    V_own = np.array(fe.regressor_cov) - np.array(re.regressor_cov)
    if own.computable:
        assert own.statistic == pytest.approx(float(d @ np.linalg.solve(V_own, d)), rel=1e-10)
    with pytest.raises(ValueError):
        hausman_test(fe, re, sigma="pooled")


def test_hausman_rejects_mismatched_models():
    ds, spec, fe, re = _fe_re(10)
    smaller = spec.replace(regressors=spec.regressors[:2])
    with pytest.raises(SpecMismatch):
        hausman_test(fe, random_effects_gls(ds, smaller))


# table rows ----------------------------------------------------------------


def test_residual_part_and_sum():
    assert round(residual_part(0.982), 3) == 0.018
    assert residual_part(-0.2) == pytest.approx(1.2)
    with pytest.raises(DomainError):
        residual_part(1.0001)
    assert sum_elasticities([1.121, 0.217, 0.012, -0.064]) == pytest.approx(1.286)
    with pytest.raises(ValueError):
        sum_elasticities([])


def test_significance_thresholds():
    df = 25
    c05, c10 = stats.t.ppf(0.975, df), stats.t.ppf(0.95, df)
    assert significance(c05 + 1e-6, df) == "5%"
    assert significance(-(c05 + 1e-6), df) == "5%"
    assert significance(c05 - 1e-6, df) == "10%"
    assert significance(c10 - 1e-6, df) == "none"
    assert significance(4.685, 20) == "5%"
    assert significance(math.inf, 3) == "5%"
    assert significance(math.nan, 3) == "none"
