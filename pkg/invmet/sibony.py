"""Explicit log-plurisubharmonic candidate u = e^v for the Sibony metric at p_delta.

    f(z1) = C2 |(z1 + delta)/(z1 - delta)|^2
    v = max(log(f(z1) + |z2|^2), log|z2| + C3) - C4    for |z2| <= C1
    v = log|z2| + C3 - C4                              for |z2| >= C1

with C1 = psi^-1(delta/2), C2 = C1^2.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .closed_bounds import as_direction, sibony_closed_lower
from .config import SEED_DEFAULT
from .domain import Direction, ModelDomain
from .errors import DomainError, EvaluationError
from .profile import PsiProfile


logger = logging.getLogger(__name__)

C3_MARGIN = 1e-3
C4_MARGIN = 1e-3
LEVI_STEPS = (1e-4, 5e-5)
LEVI_RTOL = 1e-3
SWITCH_CLEARANCE = 10.0
LOGPSH_TOL = 1e-6
RANGE_SAMPLES = 10_000

INNER = "inner"
GLUE = "glue"
OUTER = "outer"


@dataclass(frozen=True)
class SibonyCandidate:
    profile: PsiProfile
    delta: float
    c1: float
    c2: float
    c3: float
    c4: float

    @classmethod
    def build(cls, profile: PsiProfile, delta: float) -> "SibonyCandidate":
        if not 0.0 < delta < 1.0:
            raise DomainError(f"delta must lie in (0,1), got {delta}")
        c1 = profile.inverse(delta / 2.0)
        c3 = math.log(10.0 * c1) + C3_MARGIN
        c4 = max(c3 + math.log(c1), c3) + C4_MARGIN
        return cls(profile=profile, delta=delta, c1=c1, c2=c1 * c1, c3=c3, c4=c4)

    @property
    def base_point(self) -> Tuple[complex, complex]:
        return complex(-self.delta, 0.0), 0j

    def f(self, z1):
        z1 = np.asarray(z1, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.c2 * np.abs((z1 + self.delta) / (z1 - self.delta)) ** 2

    def inner(self, z1, z2):
        """Smooth branch f(z1) + |z2|^2 that carries the Levi form at p_delta."""
        return self.f(z1) + np.abs(np.asarray(z2, dtype=complex)) ** 2

    def branches(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        abs2 = np.abs(z2)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.log(self.inner(z1, z2))
            glue = np.log(abs2) + self.c3
        in_core = abs2 <= self.c1
        v = np.where(in_core, np.maximum(inner, glue), glue) - self.c4
        tag = np.where(in_core, np.where(inner >= glue, INNER, GLUE), OUTER)
        return v, tag

    def v(self, z1, z2):
        return self.branches(z1, z2)[0]

    def u(self, z1, z2):
        return np.exp(self.v(z1, z2))


@dataclass(frozen=True)
class LeviValue:
    direction: Direction
    value: float
    h_step: float
    branch: str


@dataclass(frozen=True)
class LogPshReport:
    n_checks: int
    n_violations: int
    worst_slack: float
    worst_center: Optional[Tuple[complex, complex]] = None

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


@dataclass(frozen=True)
class RangeReport:
    n_points: int
    min_u: float
    max_u: float

    @property
    def ok(self) -> bool:
        return self.min_u >= 0.0 and self.max_u <= 1.0


def _stencil_laplacian(g, h: float) -> float:
    axis = g(h) + g(-h) + g(1j * h) + g(-1j * h)
    diag = g(h * (1 + 1j)) + g(h * (1 - 1j)) + g(h * (-1 + 1j)) + g(-h * (1 + 1j))
    return float((4.0 * axis + diag - 20.0 * g(0.0)) / (6.0 * h * h))


def levi_form(
    candidate: SibonyCandidate,
    p: Optional[Tuple[complex, complex]] = None,
    x: Direction = Direction(1.0, 0.0),
    branch: str = INNER,
) -> LeviValue:
    """ddbar of the chosen function at p in direction X, i.e. a quarter of the Laplacian along zeta -> p + zeta X."""
    if branch not in (INNER, "u"):
        raise ValueError(f"branch must be 'inner' or 'u', got {branch!r}")
    p = candidate.base_point if p is None else p
    d = as_direction(x).require_nonzero()
    norm = math.hypot(d.n, d.t)
    e1, e2 = d.x_n / norm, d.x_t / norm
    scale = min(1.0, SWITCH_CLEARANCE * candidate.delta)
    h1, h2 = (step * scale for step in LEVI_STEPS)

    clearance = ModelDomain(candidate.profile).margin(p[0], p[1])
    if clearance < SWITCH_CLEARANCE * h1:
        raise EvaluationError(f"point {p} is within {SWITCH_CLEARANCE * h1:g} of the boundary")

    if branch == INNER:
        def g(zeta):
            return candidate.inner(p[0] + zeta * e1, p[1] + zeta * e2)
    else:
        ring = SWITCH_CLEARANCE * h1 * np.exp(1j * np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False))
        zeta = np.concatenate([[0.0], ring, ring / 2.0])
        _, tags = candidate.branches(p[0] + zeta * e1, p[1] + zeta * e2)
        if len(set(np.asarray(tags).tolist())) > 1:
            raise EvaluationError(f"u is not smooth near {p}: branches {sorted(set(tags.tolist()))} meet")

        def g(zeta):
            return candidate.u(p[0] + zeta * e1, p[1] + zeta * e2)

    coarse = _stencil_laplacian(g, h1) / 4.0
    fine = _stencil_laplacian(g, h2) / 4.0
    ratio = (h1 / h2) ** 2
    value = (ratio * fine - coarse) / (ratio - 1.0)
    if abs(coarse - fine) > LEVI_RTOL * max(abs(value), 1e-300):
        raise EvaluationError(f"Levi estimates disagree: {coarse:.6g} vs {fine:.6g}")
    return LeviValue(direction=d, value=value * norm * norm, h_step=h2, branch=branch)


def levi_ratio(candidate: SibonyCandidate) -> float:
    """Measured ddbar u / ddbar(f + |z2|^2) at p_delta along (1, 0); the e^{-C4} factor."""
    direction = Direction(1.0, 0.0)
    measured = levi_form(candidate, x=direction, branch="u").value
    return measured / levi_form(candidate, x=direction, branch=INNER).value


def sample_domain(domain: ModelDomain, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform samples of G_psi by rejection from the bidisc."""
    z1s, z2s, have = [], [], 0
    while have < n:
        m = 2 * (n - have) + 16
        z1 = np.sqrt(rng.uniform(size=m)) * np.exp(2j * np.pi * rng.uniform(size=m))
        z2 = np.sqrt(rng.uniform(size=m)) * np.exp(2j * np.pi * rng.uniform(size=m))
        keep = np.asarray(domain.margin(z1, z2)) > 0.0
        z1s.append(z1[keep])
        z2s.append(z2[keep])
        have += int(keep.sum())
    return np.concatenate(z1s)[:n], np.concatenate(z2s)[:n]


def _shell_centers(candidate: SibonyCandidate, domain: ModelDomain, n: int, rng: np.random.Generator):
    z1s, z2s, have = [], [], 0
    lo, hi = candidate.c1 / 2.0, min(2.0 * candidate.c1, 1.0 - 1e-6)
    while have < n:
        m = 2 * (n - have) + 16
        z1 = rng.uniform(-2.0 * candidate.delta, 0.0, m) + 1j * rng.uniform(-candidate.delta, candidate.delta, m)
        z2 = rng.uniform(lo, hi, m) * np.exp(2j * np.pi * rng.uniform(size=m))
        keep = np.asarray(domain.margin(z1, z2)) > 0.0
        z1s.append(z1[keep])
        z2s.append(z2[keep])
        have += int(keep.sum())
    return np.concatenate(z1s)[:n], np.concatenate(z2s)[:n]


def check_logpsh(
    candidate: SibonyCandidate,
    n_centers: int = 1000,
    n_radii: int = 8,
    n_angles: int = 128,
    seed: int = SEED_DEFAULT,
    tol: float = LOGPSH_TOL,
) -> LogPshReport:
    """Sub-mean-value test of v = log u on random complex circles inside G_psi."""
    rng = np.random.default_rng(seed)
    domain = ModelDomain(candidate.profile)
    uniform = sample_domain(domain, n_centers - n_centers // 2, rng)
    shell = _shell_centers(candidate, domain, n_centers // 2, rng)
    c1 = np.concatenate([uniform[0], shell[0]])
    c2 = np.concatenate([uniform[1], shell[1]])
    theta = np.exp(1j * np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False))
    p1, _ = candidate.base_point

    checks, violations, worst, worst_center = 0, 0, math.inf, None
    for z1, z2 in zip(c1, c2):
        x = rng.normal(size=2) + 1j * rng.normal(size=2)
        x /= np.linalg.norm(x)
        dist_p = math.hypot(abs(z1 - p1), abs(z2))
        r_max = 0.5 * min(float(domain.margin(z1, z2)), dist_p)
        if r_max <= 0.0:
            continue
        center_value = float(candidate.v(z1, z2))
        if not math.isfinite(center_value):
            continue
        for r in np.geomspace(1e-2 * r_max, r_max, n_radii):
            w1 = z1 + r * theta * x[0]
            w2 = z2 + r * theta * x[1]
            if np.any(np.asarray(domain.margin(w1, w2)) <= 0.0):
                continue
            slack = float(np.mean(candidate.v(w1, w2))) - center_value
            checks += 1
            if slack < worst:
                worst, worst_center = slack, (complex(z1), complex(z2))
            if slack < -tol:
                violations += 1
    logger.debug("log-psh check: %d circles, %d violations, worst slack %.3g", checks, violations, worst)
    return LogPshReport(checks, violations, worst, worst_center)


def check_range(candidate: SibonyCandidate, n_points: int = RANGE_SAMPLES, seed: int = SEED_DEFAULT) -> RangeReport:
    rng = np.random.default_rng(seed)
    z1, z2 = sample_domain(ModelDomain(candidate.profile), n_points, rng)
    values = candidate.u(z1, z2)
    return RangeReport(n_points, float(np.min(values)), float(np.max(values)))


def sibony_lower(profile: PsiProfile, delta: float, x: Direction) -> float:
    SibonyCandidate.build(profile, delta)
    return sibony_closed_lower(profile, delta, x)
