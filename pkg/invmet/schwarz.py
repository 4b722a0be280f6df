"""Lower bounds for the Kobayashi-Royden metric at p_delta.

Any disc phi with phi(0) = p_delta and phi'(0) = lam (1, t) satisfies, for
every 0 < r <= 1,

    lam <= 2 (psi(r (lam t + r)) + delta) / r

(Schwarz lemma applied to a Moebius transform of phi_1 on D(0, r)). The
right hand side grows with lam, so the admissible set of lam is bounded by
the largest fixed point; ``certified_lambda`` reaches it from above by
discarding (g(lam), lam] at every step, which keeps each iterate a valid cap.
For t > 0 a fixed radius can admit every large lam; ``scanned_lambda``
lets the radius vary with lam instead and rules out lam intervals directly.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .closed_bounds import (
    F2,
    LINEAR_CONSTANT,
    NORMAL_CONSTANT,
    as_direction,
    regime_threshold,
)
from .domain import Direction
from .errors import CertificationError, DomainError, RegimeError
from .profile import PsiProfile, halving_constant, upper_ratio


logger = logging.getLogger(__name__)

R_GRID_SIZE = 64
R_GRID_MIN = 1e-3
FIXED_POINT_RTOL = 1e-10
FIXED_POINT_MAXITER = 20000
LAMBDA_GRID_SIZE = 2400
LAMBDA_GRID_DECADES = 12.0
THIN_CUSP_CONSTANT = 0.125

FALLBACK = "fallback"


def r_grid(size: int = R_GRID_SIZE) -> np.ndarray:
    return np.geomspace(R_GRID_MIN, 1.0, size)


def lowlem_cap(profile: PsiProfile, delta: float, t: float, r: float, lam: float) -> float:
    """2 (psi(min(1, r (lam t + r))) + delta) / r."""
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must lie in (0,1], got {r}")
    arg = r * (lam * t + r)
    if arg > 1.0:
        logger.debug("psi argument %.6g clamped to 1 at r=%.6g", arg, r)
    return 2.0 * (profile.eval(min(1.0, arg)) + delta) / r


@dataclass(frozen=True)
class SchwarzCertificate:
    r: float
    M: float
    lambda_cap: float
    lambda_star: float
    regime: str
    clamped: bool = False


@dataclass(frozen=True)
class LowerBound:
    value: float
    regime: str
    certificate: Optional[SchwarzCertificate] = None
    candidates: Dict[str, float] = field(default_factory=dict)


def _caps(profile: PsiProfile, delta: float, t: float, r: np.ndarray, lam: np.ndarray) -> np.ndarray:
    arg = np.minimum(1.0, r * (lam * t + r))
    return 2.0 * (np.asarray(profile.eval(arg)) + delta) / r


def certified_lambda(profile: PsiProfile, delta: float, t: float, radii: np.ndarray) -> np.ndarray:
    """Per radius, an upper bound for lam over all discs with phi'(0) = lam (1, t)."""
    radii = np.asarray(radii, dtype=float)
    hi = np.full(radii.shape, 1.0 - delta * delta)
    active = np.ones(radii.shape, dtype=bool)
    for _ in range(FIXED_POINT_MAXITER):
        g = _caps(profile, delta, t, radii[active], hi[active])
        step = hi[active] - g
        done = step <= FIXED_POINT_RTOL * hi[active]
        updated = hi[active]
        updated[~done] = g[~done]
        hi[active] = updated
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            break
    else:
        logger.debug("fixed-point descent stopped with %d radii unconverged", int(active.sum()))
    return hi


def scanned_lambda(profile: PsiProfile, delta: float, t: float, radii: np.ndarray) -> Tuple[float, float]:
    """Cap from a descending lam grid, letting the radius follow lam.

    Returns (lam, r): no admissible lam lies above ``lam``; ``r`` is the
    radius that excludes the interval just above it.
    """
    radii = np.asarray(radii, dtype=float)
    top = 1.0 - delta * delta
    lams = np.geomspace(top, top * 10.0 ** -LAMBDA_GRID_DECADES, LAMBDA_GRID_SIZE)
    caps = _caps(profile, delta, t, radii[:, None], lams[None, :])
    best = caps.min(axis=0)
    # g is nondecreasing in lam: g(lams[k]) < lams[k+1] rules out [lams[k+1], lams[k]]
    excluded = best[:-1] < lams[1:]
    k = len(lams) - 1 if excluded.all() else int(np.argmin(excluded))
    j = k - 1 if k > 0 else 0
    return float(lams[k]), float(radii[int(np.argmin(caps[:, j]))])


def _extra_radii(profile: PsiProfile, delta: float, t: float) -> list:
    inv = profile.inverse(delta)
    extra = [math.sqrt(inv / 2.0), 0.5 * math.sqrt(inv)]
    if 0.0 < t <= 1.0:
        extra.append(0.5 * t)
        if profile.report.psi1_decreasing:
            try:
                extra.append(math.sqrt(profile.psi1_inverse(1.0 / t)))
            except (CertificationError, DomainError):
                pass
    return [r for r in extra if 0.0 < r <= 1.0]


def generic_certificate(profile: PsiProfile, delta: float, t: float) -> SchwarzCertificate:
    radii = np.unique(np.concatenate([r_grid(), _extra_radii(profile, delta, t)]))
    stars = certified_lambda(profile, delta, t, radii)
    k = int(np.argmin(stars))
    r, lam_star = float(radii[k]), float(stars[k])
    lam_scan, r_scan = scanned_lambda(profile, delta, t, radii)
    if lam_scan < lam_star:
        r, lam_star = r_scan, lam_scan
    arg = r * (lam_star * t + r)
    M = float(profile.eval(min(1.0, arg)))
    return SchwarzCertificate(
        r=r,
        M=M,
        lambda_cap=2.0 * (M + delta) / r,
        lambda_star=lam_star,
        regime="cap",
        clamped=arg > 1.0,
    )


def _normal_explicit(profile: PsiProfile, delta: float, t: float) -> Optional[float]:
    report = profile.report
    hypotheses = report.psi_over_x_increasing or (report.psi1_decreasing and report.psi_over_sqrtx_increasing)
    if not hypotheses or not delta < profile.psi_one:
        return None
    if t > regime_threshold(profile, delta):
        return None
    return NORMAL_CONSTANT * math.sqrt(profile.inverse(delta)) / delta


def _linear_explicit(profile: PsiProfile, delta: float, t: float) -> Optional[float]:
    if upper_ratio(profile, 1.0) > 1.0 or t >= 1.0:
        return None
    return LINEAR_CONSTANT * (1.0 - t) / math.sqrt(delta)


def _thin_cusp_explicit(profile: PsiProfile, delta: float, t: float) -> Optional[float]:
    try:
        return THIN_CUSP_CONSTANT * F2(profile, delta, t)
    except (CertificationError, RegimeError):
        return None


def _tangential_explicit(profile: PsiProfile, delta: float, t: float) -> Optional[float]:
    report = profile.report
    if not (report.psi1_decreasing and report.psi_over_sqrtx_increasing):
        return None
    k = halving_constant(profile)
    if k is None or not regime_threshold(profile, delta) <= t <= 1.0:
        return None
    try:
        r = math.sqrt(profile.psi1_inverse(1.0 / t))
    except (CertificationError, DomainError):
        return None
    if r == 0.0:
        return None
    c3 = 2.0 * (max(k ** 3 / 2.0, 1.0) + 1.0)
    m = max(0, math.ceil(math.log2(2.0 * c3)))
    return t / (r * max(1.0, k ** m / 2.0))


def kappa_lower_detail(profile: PsiProfile, delta: float, x: Direction) -> LowerBound:
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0,1), got {delta}")
    d = as_direction(x).require_nonzero()
    candidates = {"bidisc": max(d.n, d.t)}
    if d.n == 0.0 or not profile.report.psi_increasing or delta > profile.psi_one:
        return LowerBound(candidates["bidisc"], FALLBACK, None, candidates)
    t = d.ratio
    explicit = {
        "normal": _normal_explicit,
        "linear": _linear_explicit,
        "thin_cusp": _thin_cusp_explicit,
        "tangential": _tangential_explicit,
    }
    for tag, fn in explicit.items():
        value = fn(profile, delta, t)
        if value is not None:
            candidates[tag] = value * d.n
    cert = generic_certificate(profile, delta, t)
    candidates["cap"] = d.n / cert.lambda_star
    tag = max(candidates, key=candidates.get)
    return LowerBound(candidates[tag], tag, cert, candidates)


def kappa_lower(profile: PsiProfile, delta: float, x: Direction) -> float:
    return kappa_lower_detail(profile, delta, x).value
