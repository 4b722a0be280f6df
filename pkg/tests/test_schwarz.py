import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invmet import discs, schwarz
from invmet.closed_bounds import NORMAL_CONSTANT, regime_threshold
from invmet.domain import Direction
from invmet.errors import DomainError
from invmet.profile import PsiProfile

BETA2 = PsiProfile.power(2.0)


def test_lowlem_cap_value():
    assert schwarz.lowlem_cap(BETA2, 1e-4, 1.0, 0.5, 0.3) == pytest.approx(0.6404)


def test_lowlem_cap_clamps_psi_argument():
    assert schwarz.lowlem_cap(BETA2, 0.01, 10.0, 1.0, 1.0) == pytest.approx(2.0 * (1.0 + 0.01))


@pytest.mark.parametrize("r", [0.0, -0.5, 1.5])
def test_lowlem_cap_radius_range(r):
    with pytest.raises(ValueError):
        schwarz.lowlem_cap(BETA2, 0.01, 0.0, r, 0.1)


def test_certified_lambda_is_a_fixed_point_from_above():
    radii = schwarz.r_grid(16)
    stars = schwarz.certified_lambda(BETA2, 0.01, 0.0, radii)
    for r, lam in zip(radii, stars):
        assert 0.0 < lam <= 1.0 - 0.01 ** 2
        assert schwarz.lowlem_cap(BETA2, 0.01, 0.0, float(r), float(lam)) >= lam * (1.0 - 1e-9)


def test_normal_direction_lower_bound():
    bound = schwarz.kappa_lower_detail(BETA2, 0.01, Direction(1.0, 0.0))
    explicit = math.sqrt(0.1) / (4.0 * math.sqrt(2.0) * 0.01)
    assert bound.candidates["normal"] == pytest.approx(explicit)
    assert bound.value >= explicit
    assert bound.certificate is not None and bound.certificate.regime == "cap"


def test_linear_profile_constant():
    bound = schwarz.kappa_lower_detail(PsiProfile.linear(1.0), 0.01, Direction(1.0, 0.0))
    assert bound.candidates["linear"] == pytest.approx(2.0)
    assert bound.value >= 2.0


def test_pure_tangential_falls_back_to_bidisc():
    bound = schwarz.kappa_lower_detail(BETA2, 0.01, Direction(0.0, 1.0))
    assert bound.value == pytest.approx(1.0)
    assert bound.regime == schwarz.FALLBACK


@pytest.mark.parametrize("beta", [0.75, 2.0])
@pytest.mark.parametrize("delta", [1e-2, 1e-3, 1e-4])
@pytest.mark.parametrize("share", [0.0, 0.5, 1.0])
def test_generic_cap_tracks_normal_constant(beta, delta, share):
    profile = PsiProfile.power(beta)
    t = share * regime_threshold(profile, delta)
    bound = schwarz.kappa_lower_detail(profile, delta, Direction(1.0, t))
    explicit = NORMAL_CONSTANT * math.sqrt(profile.inverse(delta)) / delta
    assert bound.candidates["cap"] >= 0.9 * min(explicit, 1.0 / (1.0 - delta ** 2))


def test_scanned_lambda_is_admissible_cap():
    radii = schwarz.r_grid(16)
    lam, r = schwarz.scanned_lambda(BETA2, 0.01, 1.0, radii)
    assert 0.0 < lam <= 1.0 - 0.01 ** 2
    assert r in radii
    above = lam * 1.05
    if above <= 1.0 - 0.01 ** 2:
        assert min(schwarz.lowlem_cap(BETA2, 0.01, 1.0, float(s), above) for s in radii) < above


def test_nearly_normal_direction_stays_finite():
    value = schwarz.kappa_lower(BETA2, 0.01, Direction(1.0, 1e-170))
    assert np.isfinite(value)
    assert value >= math.sqrt(0.1) / (4.0 * math.sqrt(2.0) * 0.01)


def test_delta_range():
    with pytest.raises(DomainError):
        schwarz.kappa_lower(BETA2, 1.5, Direction(1.0, 0.0))


def test_lower_never_exceeds_catalog_upper():
    for beta in (0.5, 0.75, 1.0, 2.0):
        profile = PsiProfile.power(beta)
        for delta in (1e-1, 1e-2, 1e-3):
            x = Direction(1.0, 0.0)
            best = discs.best_upper(profile, delta, x)
            if best is None:
                continue
            assert schwarz.kappa_lower(profile, delta, x) <= best[0] * (1.0 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(
    t=st.floats(min_value=0.0, max_value=5.0),
    r=st.floats(min_value=1e-3, max_value=1.0),
    lam=st.floats(min_value=0.0, max_value=1.0),
    bump=st.floats(min_value=0.0, max_value=1.0),
)
def test_cap_grows_with_lambda(t, r, lam, bump):
    low = schwarz.lowlem_cap(BETA2, 0.01, t, r, lam)
    high = schwarz.lowlem_cap(BETA2, 0.01, t, r, lam + bump)
    assert high >= low


@settings(max_examples=25, deadline=None)
@given(
    beta=st.sampled_from([0.5, 0.75, 1.0, 1.5, 2.0]),
    log_delta=st.floats(min_value=-4.0, max_value=-1.0),
    angle=st.floats(min_value=0.0, max_value=math.pi / 2),
)
def test_lower_bound_dominates_bidisc(beta, log_delta, angle):
    x = Direction(math.cos(angle), math.sin(angle))
    value = schwarz.kappa_lower(PsiProfile.power(beta), 10.0 ** log_delta, x)
    assert value >= max(x.n, x.t)
    assert np.isfinite(value)
