"""Numerical upper bounds for kappa and kappa^(2) by searching polynomial discs.

The search bisects on the derivative scale lam between a verified feasible
disc (best catalog disc, or the trivial linear disc) and the Schwarz cap
1/kappa_lower. For each trial lam the free coefficients of degree >= 2 are
tuned by Nelder-Mead to maximise the worst membership margin on a coarse
sample; a hit is accepted only after the full admissibility check.
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from . import discs, schwarz
from .closed_bounds import as_direction
from .config import SEED_DEFAULT
from .discs import DiscSpec
from .domain import Direction, ModelDomain
from .errors import ConstructionError


logger = logging.getLogger(__name__)

VERIFY_RADIUS = 1.0 - 1e-6
FEASIBLE_MARGIN = 1e-9
COARSE_ANGLES = 64
COARSE_RADII = 16
RING_FACTOR = 8
MAX_BISECTIONS = 60
SPLIT_GRID = (0.0, 0.5, 1.0)
SPLIT_SCALES = (0.125, 0.25, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class OracleConfig:
    degree: int = 2
    n_restarts: int = 16
    n_angles: int = discs.N_ANGLES
    n_radii: int = discs.N_RADII
    tol: float = 1e-4
    budget: int = 20000
    seed: int = SEED_DEFAULT

    def __post_init__(self) -> None:
        if not 1 <= self.degree <= discs.MAX_DEGREE:
            raise ValueError(f"degree must lie in [1, {discs.MAX_DEGREE}], got {self.degree}")
        for name in ("n_restarts", "n_angles", "n_radii", "budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    kind: str
    best_disc: DiscSpec
    bracketing: Tuple[float, Optional[float]]


class _Feasible(Exception):
    def __init__(self, params: np.ndarray) -> None:
        super().__init__("feasible")
        self.params = params


class _Budget:
    def __init__(self, total: int) -> None:
        self.left = total

    def spend(self, n: int) -> None:
        self.left -= n


class _Search:
    """Membership margin of (-delta + lam x_n z + sum a_k z^k, lam x_t z + sum b_k z^k)."""

    def __init__(self, domain: ModelDomain, delta: float, x: Direction, degree: int, budget: _Budget) -> None:
        self.domain = domain
        self.delta = delta
        self.x = x
        self.degree = degree
        self.budget = budget
        zeta = discs.sample_points(VERIFY_RADIUS, COARSE_ANGLES, COARSE_RADII)
        self.zeta = zeta
        self.powers = np.array([zeta ** k for k in range(2, degree + 1)]).reshape(degree - 1, zeta.size)

    @property
    def n_params(self) -> int:
        return 4 * (self.degree - 1)

    def split(self, params: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        p = np.asarray(params, dtype=float).reshape(-1, 4) if self.n_params else np.zeros((0, 4))
        return p[:, 0] + 1j * p[:, 1], p[:, 2] + 1j * p[:, 3]

    def margin(self, lam: float, params: np.ndarray) -> float:
        a, b = self.split(params)
        z1 = -self.delta + lam * self.x.x_n * self.zeta + a @ self.powers
        z2 = lam * self.x.x_t * self.zeta + b @ self.powers
        return float(np.min(self.domain.margin(z1, z2)))

    def disc(self, lam: float, params: np.ndarray, radius: float = VERIFY_RADIUS, source: str = "oracle") -> DiscSpec:
        a, b = self.split(params)
        coeffs_n = (complex(-self.delta), complex(lam * self.x.x_n)) + tuple(complex(c) for c in a)
        coeffs_t = (0j, complex(lam * self.x.x_t)) + tuple(complex(c) for c in b)
        return DiscSpec(coeffs_n, coeffs_t, radius, source, lam, self.x)

    def local(self, lam: float, x0: np.ndarray, maxfev: int) -> Optional[np.ndarray]:
        if self.margin(lam, x0) > FEASIBLE_MARGIN:
            self.budget.spend(1)
            return x0
        if not self.n_params:
            self.budget.spend(1)
            return None
        count = [0]

        def objective(params: np.ndarray) -> float:
            count[0] += 1
            value = self.margin(lam, params)
            if value > FEASIBLE_MARGIN:
                raise _Feasible(np.array(params, dtype=float))
            return -value

        try:
            optimize.minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"maxfev": maxfev, "xatol": 1e-12, "fatol": 1e-14},
            )
        except _Feasible as hit:
            return hit.params
        finally:
            self.budget.spend(count[0])
        return None


def _ring_ok(domain: ModelDomain, disc: DiscSpec, n_angles: int) -> bool:
    theta = np.linspace(0.0, 2.0 * np.pi, RING_FACTOR * n_angles, endpoint=False)
    zeta = disc.nominal_radius * (1.0 - discs.ADMISSIBILITY_MARGIN) * np.exp(1j * theta)
    z1, z2 = disc(zeta)
    return bool(np.all(np.asarray(domain.margin(z1, z2)) > 0.0))


def _full_verify(domain: ModelDomain, disc: DiscSpec, config: OracleConfig) -> Optional[DiscSpec]:
    report = discs.verify(disc, domain, config.n_angles, config.n_radii)
    if not report.ok or not _ring_ok(domain, disc, config.n_angles):
        return None
    return DiscSpec(
        disc.coeffs_n, disc.coeffs_t, disc.nominal_radius, disc.source, disc.lam, disc.direction, report
    )


def _warm_params(disc: DiscSpec, x: Direction, degree: int) -> Tuple[float, np.ndarray]:
    """Rescale a verified disc to radius 1 along X; returns (lam, free coefficients)."""
    d = disc.direction
    c = x.x_n / d.x_n if abs(d.x_n) >= abs(d.x_t) else x.x_t / d.x_t
    r = disc.nominal_radius
    rot = cmath.exp(-1j * cmath.phase(c))
    lam = disc.lam * r / abs(c)
    params = []
    for k in range(2, degree + 1):
        a = discs.coefficient(disc.coeffs_n, k) * r ** k * rot ** k
        b = discs.coefficient(disc.coeffs_t, k) * r ** k * rot ** k
        params.extend([a.real, a.imag, b.real, b.imag])
    return lam, np.array(params, dtype=float)


def _floor_lambda(delta: float, x: Direction) -> float:
    bounds = [delta / x.n if x.n else math.inf, (1.0 - delta) / x.n if x.n else math.inf]
    bounds.append(1.0 / x.t if x.t else math.inf)
    return 0.5 * min(bounds)


def kappa_upper_numeric(
    domain: ModelDomain,
    delta: float,
    x: Direction,
    config: Optional[OracleConfig] = None,
) -> OracleEstimate:
    config = config or OracleConfig()
    x = as_direction(x).require_nonzero()
    profile = domain.profile
    rng = np.random.default_rng(config.seed)
    budget = _Budget(config.budget)
    search = _Search(domain, delta, x, config.degree, budget)

    lower = schwarz.kappa_lower(profile, delta, x)
    catalog = discs.best_upper(profile, delta, x)
    catalog_value = catalog[0] if catalog else None

    floor = search.disc(_floor_lambda(delta, x), np.zeros(search.n_params), radius=1.0, source="floor")
    floor = _full_verify(domain, floor, config)
    if floor is None:
        raise ConstructionError(f"trivial disc not admissible at delta={delta:g}, X={tuple(x)}")

    lo, best_disc, best_value = floor.lam, floor, 1.0 / floor.lam
    x0 = np.zeros(search.n_params)
    if catalog is not None:
        warm_lam, warm = _warm_params(catalog[1], x, config.degree)
        if catalog_value < best_value:
            best_value, best_disc = catalog_value, catalog[1]
        if warm_lam > lo:
            x0 = warm
            if search.margin(warm_lam, warm) > FEASIBLE_MARGIN:
                lo = warm_lam

    hi = 1.0 / lower
    per_run = max(50, config.budget // (config.n_restarts * 8))
    steps = 0
    while hi > lo * (1.0 + config.tol) and budget.left > 0 and steps < MAX_BISECTIONS:
        steps += 1
        mid = math.sqrt(lo * hi)
        found = None
        for restart in range(config.n_restarts):
            if budget.left <= 0:
                break
            start = x0 if restart == 0 else x0 + rng.normal(scale=0.2 * (np.abs(x0) + 0.05), size=x0.shape)
            params = search.local(mid, start, per_run)
            if params is None:
                continue
            candidate = _full_verify(domain, search.disc(mid, params), config)
            if candidate is not None:
                found = (candidate, params)
                break
        if found is None:
            hi = mid
            logger.debug("lam=%.6g infeasible, bracket [%.6g, %.6g]", mid, lo, hi)
            continue
        lo, x0 = mid, found[1]
        value = discs.implied_upper(found[0], x)
        if value < best_value:
            best_value, best_disc = value, found[0]
        logger.debug("lam=%.6g feasible, upper %.6g", mid, value)

    return OracleEstimate(
        value=best_value,
        kind="upper_numeric",
        best_disc=best_disc,
        bracketing=(lower, catalog_value),
    )


def kappa2_upper_numeric(
    domain: ModelDomain,
    delta: float,
    x: Direction,
    config: Optional[OracleConfig] = None,
) -> float:
    """Best two-term splitting X = X1 + X2 over three families.

    X1 = s e^{i arg x_N} (1, psi^-1(delta)/delta) for s on a geometric grid,
    X1 = (a x_N, b x_T) on a coarse grid, and the tangential shifts
    X1 = (x_N, w). Each term is bounded by ``kappa_upper_numeric``; a pure
    tangential term costs its modulus.
    """
    config = config or OracleConfig()
    x = as_direction(x).require_nonzero()
    if x.n == 0.0:
        return min(kappa_upper_numeric(domain, delta, x, config).value, x.t)
    cost = _SplitCost(domain, delta, config)
    best = kappa_upper_numeric(domain, delta, x, config).value
    phase = x.x_n / x.n
    splits: List[Tuple[complex, complex]] = []
    for a in SPLIT_GRID:
        for b in SPLIT_GRID:
            if (a, b) not in ((0.0, 0.0), (1.0, 1.0)):
                splits.append((a * x.x_n, b * x.x_t))
    splits.extend((x.x_n, s * x.x_t) for s in (0.0, 0.5))
    if delta <= domain.profile.psi_one:
        q = domain.profile.inverse(delta) / delta
        splits.extend((x.x_n, m * q * x.x_n) for m in (0.5, 1.0, 2.0))
        splits.extend((s * x.n * phase, s * x.n * q * phase) for s in SPLIT_SCALES)
    for first in splits:
        second = (x.x_n - first[0], x.x_t - first[1])
        best = min(best, cost(Direction(*first)) + cost(Direction(*second)))
    return best


class _SplitCost:
    """kappa upper bounds per direction, cached on moduli and scaled by homogeneity."""

    def __init__(self, domain: ModelDomain, delta: float, config: OracleConfig):
        self.domain = domain
        self.delta = delta
        self.config = config
        self.cache: Dict[Tuple[float, float], float] = {}

    def __call__(self, v: Direction) -> float:
        if v.n == 0.0:
            return v.t
        scale = max(v.n, v.t)
        key = (round(v.n / scale, 12), round(v.t / scale, 12))
        if key not in self.cache:
            unit = Direction(key[0], key[1])
            self.cache[key] = kappa_upper_numeric(self.domain, self.delta, unit, self.config).value
        return scale * self.cache[key]


def indicatrix_slice(
    domain: ModelDomain,
    delta: float,
    n_angles: int = 16,
    config: Optional[OracleConfig] = None,
) -> List[Tuple[float, float]]:
    if n_angles < 8:
        raise ValueError(f"n_angles must be >= 8, got {n_angles}")
    config = config or OracleConfig()
    cache: Dict[Tuple[float, float], float] = {}
    rows = []
    for theta in np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False):
        c, s = math.cos(theta), math.sin(theta)
        key = (round(abs(c), 12), round(abs(s), 12))
        if key not in cache:
            cache[key] = kappa_upper_numeric(domain, delta, Direction(key[0], key[1]), config).value
        rows.append((float(theta), 1.0 / cache[key]))
    return rows
