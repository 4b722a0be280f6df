"""Catalog of the explicit analytic discs through p_delta.

Every builder works in a normalized frame where x_N is real and nonnegative;
``construct`` rotates the disc back (coefficient k picks up e^{ik arg x_N}),
verifies admissibility by sampling and returns a ``DiscSpec`` whose
derivative at 0 is ``lam * direction``.
"""
import cmath
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from .config import DELTA0_DEFAULT
from .domain import ADMISSIBILITY_MARGIN, BasePoint, Direction, ModelDomain
from .errors import CertificationError, ConstructionError, DomainError, RegimeError
from .profile import PsiProfile, lower_ratio


logger = logging.getLogger(__name__)

MAX_DEGREE = 4
N_ANGLES = 256
N_RADII = 64
SHRINK_FACTOR = 0.9
SHRINK_STEPS = 20
SHRINKABLE = {"D1", "D2", "D10"}
D10_RADIUS_CONSTANT = 0.5
PARALLEL_TOL = 1e-9


@dataclass(frozen=True)
class AdmissibilityReport:
    n_samples: int
    worst_margin: float
    first_violation: Optional[Tuple[complex, str]] = None

    @property
    def ok(self) -> bool:
        return self.first_violation is None and self.worst_margin > 0.0


@dataclass(frozen=True)
class DiscSpec:
    coeffs_n: Tuple[complex, ...]
    coeffs_t: Tuple[complex, ...]
    nominal_radius: float
    source: str
    lam: float
    direction: Direction
    report: Optional[AdmissibilityReport] = None

    def __post_init__(self) -> None:
        if len(self.coeffs_n) > MAX_DEGREE + 1 or len(self.coeffs_t) > MAX_DEGREE + 1:
            raise ValueError(f"disc degree exceeds {MAX_DEGREE}")
        if not 0.0 < self.nominal_radius <= 1.0:
            raise ValueError(f"nominal radius must lie in (0,1], got {self.nominal_radius}")
        if not self.lam > 0.0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        c0 = complex(self.coeffs_n[0])
        if c0.imag != 0.0 or not c0.real < 0.0 or complex(self.coeffs_t[0]) != 0:
            raise ValueError("disc must pass through p_delta = (-delta, 0)")
        scale = max(abs(self.direction.x_n), abs(self.direction.x_t))
        d1 = coefficient(self.coeffs_n, 1) - self.lam * self.direction.x_n
        d2 = coefficient(self.coeffs_t, 1) - self.lam * self.direction.x_t
        if max(abs(d1), abs(d2)) > 1e-12 * max(1.0, self.lam * scale):
            raise ValueError("phi'(0) is not lam * direction")

    @property
    def delta(self) -> float:
        return -complex(self.coeffs_n[0]).real

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return P.polyval(zeta, np.asarray(self.coeffs_n)), P.polyval(zeta, np.asarray(self.coeffs_t))


def coefficient(coeffs: Tuple[complex, ...], k: int) -> complex:
    return complex(coeffs[k]) if k < len(coeffs) else 0j


@dataclass(frozen=True)
class _Draft:
    coeffs_n: Tuple[complex, ...]
    coeffs_t: Tuple[complex, ...]
    radius: float
    lam: float


Builder = Callable[[PsiProfile, float, float, float, complex], _Draft]


def _unit(w: complex) -> complex:
    return w / abs(w) if w != 0 else 1.0 + 0j


def _need_normal(n: float, disc_id: str) -> None:
    if n == 0.0:
        raise RegimeError(f"{disc_id} needs x_N != 0")


def _need_tangent(w: complex, disc_id: str) -> None:
    if w == 0:
        raise RegimeError(f"{disc_id} needs x_T != 0")


def _d1(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_normal(n, "D1")
    slope = delta / profile.inverse(delta)
    if not math.isclose(abs(w) / n, 1.0 / slope, rel_tol=PARALLEL_TOL):
        raise RegimeError(f"D1 is built for X parallel to (1, psi^-1(delta)/delta) = (1, {1.0 / slope:g})")
    return _Draft((-delta, slope), (0j, slope / n * w), 1.0, slope / n)


def _d2(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_tangent(w, "D2")
    a = n / abs(w)
    slope = delta / profile.inverse(delta)
    if not a < slope:
        raise RegimeError(f"D2 needs |x_N|/|x_T| = {a:g} < delta/psi^-1(delta) = {slope:g}")
    return _Draft((-delta, a), (0j, _unit(w)), 1.0, 1.0 / abs(w))


def _d3(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_tangent(w, "D3")
    c0 = lower_ratio(profile, 1.0)
    a = n / abs(w)
    if not (c0 > 0.0 and a <= min(1.0, c0)):
        raise RegimeError(f"D3 needs |x_N| <= min(1, c0)|x_T| with c0 = {c0:g}")
    scale = 1.0 if delta <= 1.0 - a else (1.0 - delta) / a
    return _Draft((-delta, scale * a), (0j, scale * _unit(w)), 1.0, scale / abs(w))


def _d4(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_tangent(w, "D4")
    if not profile.report.psi_over_x_increasing:
        raise CertificationError(f"psi(x)/x increasing not certified for {profile.literal}")
    a = n / abs(w)
    limit = min(1.0 - delta, delta / profile.inverse(delta))
    if a > limit:
        raise RegimeError(f"D4 needs |x_N|/|x_T| = {a:g} <= {limit:g}")
    return _Draft((-delta, a), (0j, _unit(w)), 1.0, 1.0 / abs(w))


def _d5(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_normal(n, "D5")
    c0 = lower_ratio(profile, 0.5)
    if not c0 > 0.0:
        raise CertificationError(f"psi(x) >= c0 sqrt(x) fails for {profile.literal}")
    w1 = w / n
    if abs(w1) > 1.0 / c0:
        raise RegimeError(f"D5 needs |x_T| <= |x_N|/c0 = {n / c0:g}")
    radius = min(1.0 - delta0, c0 * (math.sqrt(5.0) - 1.0) / 2.0, 1.0)
    return _Draft((-delta, 1.0), (0j, w1, _unit(w) / c0 ** 2), radius, 1.0 / n)


def _d6(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_normal(n, "D6")
    if not profile.report.psi_over_sqrtx_increasing:
        raise CertificationError(f"psi(x)/sqrt(x) increasing not certified for {profile.literal}")
    inv = profile.inverse(delta)
    w1 = w / n
    if abs(w1) > inv / delta:
        raise RegimeError(f"D6 needs |x_T| <= psi^-1(delta)/delta |x_N| = {inv / delta * n:g}")
    lam = delta / (2.0 * math.sqrt(inv))
    return _Draft((-delta, lam), (0j, lam * w1, 0.5), 1.0, lam / n)


def _d7(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_normal(n, "D7")
    _need_tangent(w, "D7")
    report = profile.report
    if not (report.psi1_decreasing and report.psi_over_sqrtx_increasing):
        raise CertificationError(f"psi1 decreasing and psi/sqrt increasing needed for {profile.literal}")
    if delta > 0.5:
        raise RegimeError("D7 needs delta <= 1/2")
    inv = profile.inverse(delta)
    w1 = w / n
    t1 = abs(w1)
    if t1 < inv / (8.0 * delta):
        raise RegimeError(f"D7 needs |x_T| >= psi^-1(delta)/(8 delta)|x_N| = {inv / (8.0 * delta) * n:g}")
    try:
        root = profile.psi1_inverse(1.0 / t1)
    except DomainError as exc:
        raise RegimeError(f"D7: psi1^-1(1/|x_T|) undefined: {exc}") from exc
    lam = math.sqrt(root) / t1
    radius = min(1.0 - delta, 0.5 * min(1.0, 1.0 / profile.psi_one))
    return _Draft((-delta, lam), (0j, lam * w1, _unit(w)), radius, lam / n)


def _linear_hypothesis(profile: PsiProfile, disc_id: str) -> None:
    if lower_ratio(profile, 1.0) < 1.0:
        raise CertificationError(f"{disc_id} needs psi(x) >= x, fails for {profile.literal}")


def _d8(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_normal(n, "D8")
    _linear_hypothesis(profile, "D8")
    w1 = w / n
    gap = 1.0 - abs(w1)
    if not (gap > 0.0 and delta < gap ** 2 and delta < 0.5):
        raise RegimeError(f"D8 needs delta < (1 - |x_T|/|x_N|)^2 and delta < 1/2")
    alpha = gap ** 2 / (2.0 * delta)
    radius = min(1.0, 0.5 * math.sqrt(delta) / gap)
    return _Draft((-delta, 1.0), (0j, w1, alpha * _unit(w)), radius, 1.0 / n)


def _d9(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_normal(n, "D9")
    _linear_hypothesis(profile, "D9")
    w1 = w / n
    t1 = abs(w1)
    if not (0.125 <= t1 <= 1.0 and delta >= (1.0 - t1) ** 2):
        raise RegimeError("D9 needs 1/8 <= |x_T|/|x_N| <= 1 and delta >= (1 - |x_T|/|x_N|)^2")
    lam = min(1.0 - delta0, 0.125)
    return _Draft((-delta, lam), (0j, lam * w1, 0.25 * _unit(w)), 1.0, lam / n)


def _d10(profile: PsiProfile, delta: float, delta0: float, n: float, w: complex) -> _Draft:
    _need_normal(n, "D10")
    _need_tangent(w, "D10")
    if not profile.report.psi_over_x_increasing:
        raise CertificationError(f"psi(x)/x increasing not certified for {profile.literal}")
    inv = profile.inverse(delta)
    t1 = abs(w / n)
    if t1 < inv / delta:
        raise RegimeError(f"D10 needs |x_T| >= psi^-1(delta)/delta |x_N| = {inv / delta * n:g}")
    radius = min(1.0, D10_RADIUS_CONSTANT * delta / math.sqrt(inv))
    return _Draft((-delta, 1.0 / t1), (0j, _unit(w)), radius, 1.0 / (t1 * n))


_BUILDERS: Dict[str, Builder] = {
    "D1": _d1,
    "D2": _d2,
    "D3": _d3,
    "D4": _d4,
    "D5": _d5,
    "D6": _d6,
    "D7": _d7,
    "D8": _d8,
    "D9": _d9,
    "D10": _d10,
}

CATALOG_IDS = tuple(_BUILDERS)


def _orient(draft: _Draft, alpha: float) -> Tuple[Tuple[complex, ...], Tuple[complex, ...]]:
    def rotate(coeffs: Tuple[complex, ...]) -> Tuple[complex, ...]:
        return tuple(complex(c) * cmath.exp(1j * k * alpha) for k, c in enumerate(coeffs))

    return rotate(draft.coeffs_n), rotate(draft.coeffs_t)


def sample_points(radius: float, n_angles: int, n_radii: int) -> np.ndarray:
    focused = max(1, n_angles // 4)
    spread = np.linspace(0.0, 2.0 * np.pi, n_angles - focused, endpoint=False)
    near = np.linspace(-np.pi / 8, np.pi / 8, focused)
    angles = np.concatenate([near, spread])
    outer = radius * (1.0 - ADMISSIBILITY_MARGIN)
    radii = np.linspace(outer / n_radii, outer, n_radii)
    return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


def verify(
    disc: DiscSpec,
    domain: ModelDomain,
    n_angles: int = N_ANGLES,
    n_radii: int = N_RADII,
) -> AdmissibilityReport:
    zeta = sample_points(disc.nominal_radius, n_angles, n_radii)
    z1, z2 = disc(zeta)
    margin = np.asarray(domain.margin(z1, z2))
    worst = float(np.min(margin))
    bad = np.flatnonzero(~(margin > 0.0))
    violation = None
    if bad.size:
        k = int(bad[0])
        a1, a2 = abs(z1[k]), abs(z2[k])
        if a1 >= 1.0:
            reason = f"|z1| = {a1:.6g} >= 1"
        elif a2 >= 1.0:
            reason = f"|z2| = {a2:.6g} >= 1"
        else:
            reason = f"Re z1 = {z1[k].real:.6g} >= psi(|z2|) = {float(domain.profile.eval(a2)):.6g}"
        violation = (complex(zeta[k]), reason)
    return AdmissibilityReport(n_samples=int(zeta.size), worst_margin=worst, first_violation=violation)


def construct(
    catalog_id: str,
    profile: PsiProfile,
    delta: float,
    x: Direction,
    delta0: float = DELTA0_DEFAULT,
    n_angles: int = N_ANGLES,
    n_radii: int = N_RADII,
) -> DiscSpec:
    if catalog_id not in _BUILDERS:
        raise ValueError(f"Unknown catalog id {catalog_id!r}; expected one of {', '.join(CATALOG_IDS)}")
    BasePoint(delta, delta0)
    if not delta < profile.psi_one:
        raise RegimeError(f"delta = {delta:g} must be below psi(1) = {profile.psi_one:g}")
    x = Direction(*x).require_nonzero()
    alpha = cmath.phase(x.x_n) if x.n > 0.0 else 0.0
    w = x.x_t * cmath.exp(-1j * alpha)
    draft = _BUILDERS[catalog_id](profile, delta, delta0, x.n, w)
    coeffs_n, coeffs_t = _orient(draft, alpha)
    domain = ModelDomain(profile)
    radius = draft.radius
    steps = SHRINK_STEPS if catalog_id in SHRINKABLE else 0
    for step in range(steps + 1):
        disc = DiscSpec(coeffs_n, coeffs_t, radius, catalog_id, draft.lam, x)
        report = verify(disc, domain, n_angles, n_radii)
        if report.ok:
            if step:
                logger.debug("%s admissible after %d shrinks, radius %.6g", catalog_id, step, radius)
            return replace(disc, report=report)
        logger.debug("%s fails at radius %.6g: %s", catalog_id, radius, report.first_violation)
        radius *= SHRINK_FACTOR
    raise ConstructionError(
        f"{catalog_id} not admissible for {profile.literal}, delta={delta:g}: {report.first_violation}",
        witness=report,
    )


def implied_upper(disc: DiscSpec, x: Optional[Direction] = None) -> float:
    if disc.report is None or not disc.report.ok:
        raise CertificationError(f"{disc.source} has not passed admissibility verification")
    x = disc.direction if x is None else Direction(*x)
    d = disc.direction
    pivot_n = abs(d.x_n) >= abs(d.x_t)
    c = x.x_n / d.x_n if pivot_n else x.x_t / d.x_t
    residual = abs(x.x_t - c * d.x_t) if pivot_n else abs(x.x_n - c * d.x_n)
    if residual > PARALLEL_TOL * max(x.n, x.t, 1e-300):
        raise DomainError(f"direction {tuple(x)} is not parallel to the disc direction {tuple(d)}")
    return abs(c) / (disc.lam * disc.nominal_radius)


def applicable(profile: PsiProfile, delta: float, x: Direction, delta0: float = DELTA0_DEFAULT) -> List[str]:
    """Catalog ids whose regime preconditions hold (admissibility not checked)."""
    x = Direction(*x)
    alpha = cmath.phase(x.x_n) if x.n > 0.0 else 0.0
    w = x.x_t * cmath.exp(-1j * alpha)
    ids = []
    for catalog_id, builder in _BUILDERS.items():
        try:
            builder(profile, delta, delta0, x.n, w)
        except (RegimeError, CertificationError, DomainError):
            continue
        ids.append(catalog_id)
    return ids


def best_upper(
    profile: PsiProfile,
    delta: float,
    x: Direction,
    delta0: float = DELTA0_DEFAULT,
) -> Optional[Tuple[float, DiscSpec]]:
    best: Optional[Tuple[float, DiscSpec]] = None
    for catalog_id in applicable(profile, delta, x, delta0):
        try:
            disc = construct(catalog_id, profile, delta, x, delta0)
        except ConstructionError as exc:
            logger.warning("catalog disc skipped: %s", exc)
            continue
        except RegimeError:
            continue
        value = implied_upper(disc, x)
        if best is None or value < best[0]:
            best = (value, disc)
    return best
