import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invmet.errors import CertificationError, DomainError
from invmet.profile import (
    PsiProfile,
    gamma_comparability,
    halving_constant,
    lower_ratio,
    parse_profile,
    upper_ratio,
)


def test_power_inverse_closed_form():
    assert PsiProfile.power(2.0).inverse(0.01) == pytest.approx(0.1, rel=1e-12)
    assert PsiProfile.power(0.75).inverse(1e-4) == pytest.approx(1e-4 ** (4.0 / 3.0), rel=1e-12)


def test_linear_inverse():
    assert PsiProfile.linear(2.0).inverse(0.5) == pytest.approx(0.25)


def test_eval_outside_unit_interval_raises():
    with pytest.raises(DomainError):
        PsiProfile.power(2.0).eval(1.5)


def test_inverse_outside_range_raises():
    with pytest.raises(DomainError):
        PsiProfile.power(2.0).inverse(2.0)


def test_psi1_inverse_power():
    assert PsiProfile.power(0.75).psi1_inverse(4.0) == pytest.approx(4.0 ** -4, rel=1e-12)


def test_psi1_inverse_out_of_range_raises():
    with pytest.raises(DomainError):
        PsiProfile.power(0.75).psi1_inverse(0.25)


def test_psi1_inverse_linear_not_invertible():
    with pytest.raises(CertificationError):
        PsiProfile.linear(1.0).psi1_inverse(1.0)


def test_classify_power_flags():
    thin = PsiProfile.power(0.4).report
    assert thin.psi_increasing and thin.psi1_decreasing
    assert not thin.psi_over_sqrtx_increasing
    steep = PsiProfile.power(2.0).report
    assert steep.psi_over_x_increasing and steep.psi_over_x_strictly_increasing
    assert not steep.psi1_decreasing


def test_classify_custom_matches_power():
    custom = PsiProfile.custom(lambda x: np.asarray(x, dtype=float) ** 2, label="square")
    report = custom.report
    assert report.sampled
    assert report.psi_increasing
    assert report.psi_over_x_increasing
    assert report.psi_over_x_strictly_increasing
    assert not report.psi1_decreasing


def test_custom_inverse_by_bisection():
    custom = PsiProfile.custom(lambda x: np.asarray(x, dtype=float) ** 2)
    assert custom.inverse(0.01) == pytest.approx(0.1, rel=1e-10)


def test_custom_profile_must_vanish_at_zero():
    with pytest.raises(ValueError):
        PsiProfile.custom(lambda x: np.asarray(x, dtype=float) + 0.1)


def test_halving_constant_power():
    assert halving_constant(PsiProfile.power(0.75)) == pytest.approx(16.0)
    assert halving_constant(PsiProfile.power(2.0)) is None


def test_ratios():
    assert lower_ratio(PsiProfile.power(0.4), 0.5) == 1.0
    assert lower_ratio(PsiProfile.power(2.0), 1.0) == 0.0
    assert upper_ratio(PsiProfile.linear(1.0), 1.0) == 1.0
    assert upper_ratio(PsiProfile.power(0.5), 1.0) == math.inf


def test_gamma_comparability_within_cap():
    ratio, cap = gamma_comparability(PsiProfile.power(2.0), 0.01, 2.0)
    assert ratio == pytest.approx(math.sqrt(2.0))
    assert ratio <= cap + 1e-12


@pytest.mark.parametrize("literal", ["power:0", "power:-1", "cubic:2", "power", "linear:abc"])
def test_parse_profile_rejects_bad_literals(literal):
    with pytest.raises(ValueError):
        parse_profile(literal)


def test_parse_profile_round_trip_literal():
    assert parse_profile("power:0.75").literal == "power:0.75"
    assert parse_profile("linear:1").kind == "linear"


@settings(max_examples=50, deadline=None)
@given(
    beta=st.floats(min_value=0.3, max_value=3.0),
    y=st.floats(min_value=1e-8, max_value=1.0),
)
def test_inverse_is_right_inverse(beta, y):
    profile = PsiProfile.power(beta)
    assert profile.eval(profile.inverse(y)) == pytest.approx(y, rel=1e-9)


def test_halving_constant_custom_profile():
    custom = PsiProfile.custom(lambda x: np.asarray(x, dtype=float) ** 0.75, label="x^0.75")
    assert halving_constant(custom) == pytest.approx(16.0)
    square = PsiProfile.custom(lambda x: np.asarray(x, dtype=float) ** 2, label="square")
    assert halving_constant(square) is None


@settings(max_examples=40, deadline=None)
@given(
    beta=st.sampled_from([0.5, 0.75, 1.5, 2.0, 3.0]),
    y=st.floats(min_value=1e-6, max_value=1.0),
)
def test_bisection_inverse_matches_closed_form(beta, y):
    custom = PsiProfile.custom(lambda x, b=beta: np.asarray(x, dtype=float) ** b)
    assert custom.inverse(y) == pytest.approx(y ** (1.0 / beta), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    beta=st.floats(min_value=0.3, max_value=3.0),
    share=st.floats(min_value=0.05, max_value=1.0),
    log_delta=st.floats(min_value=-8.0, max_value=0.0),
)
def test_gamma_comparability_respects_cap(beta, share, log_delta):
    ratio, cap = gamma_comparability(PsiProfile.power(beta), 10.0 ** log_delta, beta * share)
    assert 1.0 < ratio <= cap * (1.0 + 1e-12)
