"""Closed-form evaluators for the comparison quantities and their regimes.

Vector arguments accept a ``Direction`` or a plain ``(x_n, x_t)`` pair; every
value depends only on the moduli |x_n|, |x_t| and is 1-homogeneous in X.
Where the multiplicative constants are not pinned down the result carries
``constants_known=False`` and reports the comparison quantity itself.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

from .config import DELTA0_DEFAULT
from .domain import BasePoint, Direction, delta_star
from .errors import CertificationError, DomainError, RegimeError
from .profile import PsiProfile, halving_constant, lower_ratio


NORMAL_CONSTANT = 1.0 / (4.0 * math.sqrt(2.0))
LINEAR_CONSTANT = 0.2
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

NORMAL_DOMINANT = "normal_dominant"
TANGENTIAL_DOMINANT = "tangential_dominant"

VectorLike = Union[Direction, Tuple[complex, complex]]


class MetricKind(str, Enum):
    SIBONY = "sibony"
    KOBAYASHI_BUSEMAN = "kobayashi_buseman"
    KAPPA_TILDE = "kappa_tilde"
    KOBAYASHI2 = "kobayashi2"
    KOBAYASHI = "kobayashi"

    @property
    def rank(self) -> int:
        """Position in S <= kappa_hat <= kappa_tilde <= kappa (kappa2 sits below kappa)."""
        return {
            MetricKind.SIBONY: 0,
            MetricKind.KOBAYASHI_BUSEMAN: 1,
            MetricKind.KAPPA_TILDE: 2,
            MetricKind.KOBAYASHI2: 2,
            MetricKind.KOBAYASHI: 3,
        }[self]


@dataclass(frozen=True)
class BoundResult:
    lower: Optional[float]
    upper: Optional[float]
    regime: str
    constants_known: bool
    source: str

    def __post_init__(self) -> None:
        if (
            self.constants_known
            and self.lower is not None
            and self.upper is not None
            and self.lower > self.upper * (1 + 1e-12)
        ):
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper} ({self.source})")


def as_direction(x: VectorLike) -> Direction:
    if isinstance(x, Direction):
        return x
    return Direction(x[0], x[1])


def _require(flag: bool, profile: PsiProfile, what: str) -> None:
    if not flag:
        raise CertificationError(f"{what} not certified for {profile.literal}")


def _check_delta(profile: PsiProfile, delta: float) -> None:
    if not 0.0 < delta <= profile.psi_one:
        raise DomainError(f"delta must lie in (0, psi(1)] = (0, {profile.psi_one:g}], got {delta}")


def bidisc_bound(x: VectorLike) -> float:
    d = as_direction(x)
    return max(d.n, d.t)


def theorem1_quantity(profile: PsiProfile, delta: float, x: VectorLike) -> float:
    _require(profile.report.psi_over_x_increasing, profile, "psi(x)/x increasing")
    _check_delta(profile, delta)
    d = as_direction(x)
    return profile.inverse(delta) / delta * d.n + d.t


def sibony_closed_lower(profile: PsiProfile, delta: float, x: VectorLike) -> float:
    """max(bidisc, psi^-1(delta/2)/(2 delta)|x_N| - |x_T|): basis bounds plus the triangle inequality."""
    _check_delta(profile, delta)
    d = as_direction(x)
    normal = profile.inverse(delta / 2.0) / (2.0 * delta)
    return max(d.n, d.t, normal * d.n - d.t)


def theorem1_bounds(profile: PsiProfile, delta: float, x: VectorLike) -> BoundResult:
    """Sibony lower bound and the two-way splitting upper bound for kappa^(2)."""
    d = as_direction(x)
    q = profile.inverse(delta) / delta
    _require(profile.report.psi_over_x_increasing, profile, "psi(x)/x increasing")
    return BoundResult(
        lower=sibony_closed_lower(profile, delta, d),
        upper=2.0 * q * d.n + d.t,
        regime="theorem1",
        constants_known=True,
        source="sibony-splitting",
    )


def F2(profile: PsiProfile, delta: float, t: float) -> float:
    _require(profile.report.psi_over_sqrtx_increasing, profile, "psi(x)/sqrt(x) increasing")
    _check_delta(profile, delta)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if t > 1.0:
        raise RegimeError(f"F2 needs t <= 1 so that psi(t^2) is defined, got t={t}")
    first = math.sqrt(profile.inverse(delta)) / delta
    psi_t2 = profile.eval(t * t)
    second = math.inf if psi_t2 == 0.0 else t / psi_t2
    return min(first, second)


def _f3_tangential(profile: PsiProfile, t: float) -> float:
    """8t / sqrt(psi1^-1(1/(8t))), unclamped for power profiles."""
    if profile.kind == "power" and profile.param != 1.0:
        # (8t)^(1 + 1/(2(beta-1))), evaluated in log space
        try:
            return math.exp(math.log(8.0 * t) * (1.0 + 0.5 / (profile.param - 1.0)))
        except OverflowError:
            return math.inf
    s = 1.0 / (8.0 * t)
    try:
        inv = profile.psi1_inverse(s)
    except DomainError as exc:
        raise RegimeError(f"1/(8t) = {s:g} outside the range of psi1: {exc}") from exc
    return math.inf if inv == 0.0 else 8.0 * t / math.sqrt(inv)


def _require_interpolation_hypotheses(profile: PsiProfile) -> float:
    report = profile.report
    _require(report.psi_over_sqrtx_increasing, profile, "psi(x)/sqrt(x) increasing")
    _require(report.psi1_decreasing, profile, "psi1 decreasing")
    k = halving_constant(profile)
    if k is None:
        raise CertificationError(f"halving property fails for {profile.literal}")
    return k


def F3(profile: PsiProfile, delta: float, t: float) -> float:
    _require_interpolation_hypotheses(profile)
    _check_delta(profile, delta)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    first = math.sqrt(profile.inverse(delta)) / delta
    if t == 0.0:
        return first
    return min(first, _f3_tangential(profile, t))


def regime_threshold(profile: PsiProfile, delta: float) -> float:
    return profile.inverse(delta) / (8.0 * delta)


def regime_classify(profile: PsiProfile, delta: float, t: float) -> str:
    if t <= regime_threshold(profile, delta):
        return NORMAL_DOMINANT
    return TANGENTIAL_DOMINANT


def main2_quantity(delta: float, x: VectorLike) -> float:
    d = as_direction(x)
    return max(max(d.n - d.t, 0.0) / math.sqrt(delta), d.t)


def main3_bounds(profile: PsiProfile, delta: float, x: VectorLike) -> BoundResult:
    _require(profile.report.psi_over_x_increasing, profile, "psi(x)/x increasing")
    if not 0.0 < delta < profile.psi_one:
        raise DomainError(f"delta must lie in (0, psi(1)), got {delta}")
    d = as_direction(x)
    threshold = regime_threshold(profile, delta)
    if d.t > threshold * d.n:
        raise RegimeError(
            f"|x_T| = {d.t:g} exceeds psi^-1(delta)/(8 delta)|x_N| = {threshold * d.n:g}"
        )
    scale = math.sqrt(profile.inverse(delta)) / delta * d.n
    return BoundResult(
        lower=NORMAL_CONSTANT * scale,
        upper=scale,
        regime="normal",
        constants_known=False,
        source="normal-regime",
    )


def tangent_bounds(profile: PsiProfile, delta: float, x: VectorLike) -> BoundResult:
    d = as_direction(x)
    if d.t == 0.0:
        raise RegimeError("tangential bounds need x_T != 0")
    if profile.report.psi_over_x_strictly_increasing:
        try:
            star = delta_star(profile)
        except CertificationError:
            star = 0.0
        if delta <= star and d.n <= min(1.0, delta / profile.inverse(delta)) * d.t:
            return BoundResult(d.t, d.t, "tangential_exact", True, "tangential-exact")
    c0 = lower_ratio(profile, 1.0)
    if c0 > 0.0 and d.n <= min(1.0, c0) * d.t:
        upper = max(1.0, d.n / d.t / (1.0 - delta)) * d.t
        return BoundResult(d.t, upper, "tangential", True, "tangential-comparison")
    raise RegimeError(f"no tangential case applies at delta={delta:g}, |x_N|={d.n:g}, |x_T|={d.t:g}")


def onehalf1_bounds(
    profile: PsiProfile,
    delta: float,
    x: VectorLike,
    delta0: float = DELTA0_DEFAULT,
    c0: Optional[float] = None,
) -> BoundResult:
    BasePoint(delta, delta0)
    if c0 is None:
        c0 = lower_ratio(profile, 0.5)
    if not c0 > 0.0:
        raise CertificationError(f"psi(x) >= c0 sqrt(x) fails for {profile.literal}")
    d = as_direction(x)
    m = max(d.n, d.t)
    if d.n == 0.0:
        return BoundResult(m, m, "thin_cusp", True, "pure-tangent")
    c1 = max(1.0 / (1.0 - delta0), GOLDEN / c0)
    return BoundResult(m, c1 * m, "thin_cusp", True, "thin-cusp")


def power_regime(beta: float, delta: float, x: VectorLike, delta0: float = DELTA0_DEFAULT) -> BoundResult:
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    BasePoint(delta, delta0)
    profile = PsiProfile.power(beta)
    d = as_direction(x).require_nonzero()
    if beta <= 0.5:
        r = onehalf1_bounds(profile, delta, d, delta0)
        return BoundResult(r.lower, r.upper, "thin_cusp", r.constants_known, "power-thin-cusp")
    if beta == 1.0:
        if d.t >= d.n:
            return tangent_bounds(profile, delta, d)
        lower = max(LINEAR_CONSTANT * (d.n - d.t) / math.sqrt(delta), d.n, d.t)
        return BoundResult(lower, main2_quantity(delta, d), "linear", False, "linear-profile")
    if beta < 1.0:
        if d.t >= d.n:
            return tangent_bounds(profile, delta, d)
        value = F3(profile, delta, d.ratio) * d.n
        tag = "normal" if regime_classify(profile, delta, d.ratio) == NORMAL_DOMINANT else "middle"
        return BoundResult(value, value, tag, False, "halving-interpolation")
    if d.t <= regime_threshold(profile, delta) * d.n:
        return main3_bounds(profile, delta, d)
    try:
        return tangent_bounds(profile, delta, d)
    except RegimeError:
        pass
    ratio = math.inf if d.t == 0.0 else profile.inverse(delta) / delta * d.n / d.t
    tag = "gap" if 1.0 <= ratio <= 8.0 else "unresolved"
    return BoundResult(bidisc_bound(d), None, tag, False, "bidisc-fallback")
