import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invmet.domain import BasePoint, Direction, ModelDomain, delta_star
from invmet.errors import CertificationError, DomainError
from invmet.profile import PsiProfile


@pytest.fixture
def beta2():
    return ModelDomain(PsiProfile.power(2.0))


def test_base_point_is_inside(beta2):
    assert beta2.contains(BasePoint(0.01).point)


def test_boundary_point_is_outside(beta2):
    assert not beta2.contains((0.25 + 0j, 0.5 + 0j))
    assert not beta2.contains((0.25 + 0j, 0.5 + 0j), margin=0.0)


def test_margin_vectorised(beta2):
    z1 = np.array([-0.5, 0.3, 0.99j])
    z2 = np.array([0.0, 0.5, 0.0])
    margin = beta2.margin(z1, z2)
    assert margin.shape == (3,)
    assert margin[0] == pytest.approx(0.5)
    assert margin[1] < 0.0
    assert margin[2] == pytest.approx(0.0, abs=1e-12)


def test_margin_outside_bidisc_is_negative(beta2):
    assert beta2.margin(0j, 1.2 + 0j) < 0.0


def test_segment_inside(beta2):
    assert beta2.segment_inside((-0.01 + 0j, 0j), (-0.5 + 0j, 0.3 + 0j))
    assert not beta2.segment_inside((-0.01 + 0j, 0j), (0.5 + 0j, 0.1 + 0j))


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.6])
def test_base_point_range(delta):
    with pytest.raises(DomainError):
        BasePoint(delta)


def test_direction_moduli_and_ratio():
    x = Direction(3j, 4.0)
    assert x.n == pytest.approx(3.0)
    assert x.t == pytest.approx(4.0)
    assert x.ratio == pytest.approx(4.0 / 3.0)
    assert Direction(0.0, 1.0).ratio == float("inf")


def test_zero_direction_rejected():
    with pytest.raises(DomainError):
        Direction(0.0, 0.0).require_nonzero()


def test_delta_star_beta2():
    # root of 1 - delta = sqrt(delta)
    assert delta_star(PsiProfile.power(2.0)) == pytest.approx((3.0 - 5.0 ** 0.5) / 2.0, abs=1e-10)


def test_delta_star_needs_strict_monotonicity():
    with pytest.raises(CertificationError):
        delta_star(PsiProfile.linear(1.0))


@settings(max_examples=50, deadline=None)
@given(
    r1=st.floats(min_value=0.0, max_value=0.99),
    r2=st.floats(min_value=0.0, max_value=0.99),
    a1=st.floats(min_value=-3.0, max_value=3.0),
    a2=st.floats(min_value=-3.0, max_value=3.0),
)
def test_membership_invariant_under_z2_rotation(r1, r2, a1, a2):
    beta2 = ModelDomain(PsiProfile.power(2.0))
    z1 = r1 * cmath.exp(1j * a1)
    base = beta2.margin(z1, r2 + 0j)
    rotated = beta2.margin(z1, r2 * cmath.exp(1j * a2))
    assert rotated == pytest.approx(base, abs=1e-12)
