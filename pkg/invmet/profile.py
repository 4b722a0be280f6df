"""Defining functions psi: [0,1] -> [0, inf) of the model domains.

A profile is either a power x**beta, a linear map c0*x, or a custom
vectorised callable. Power and linear kinds get closed forms everywhere;
custom kinds are certified by sampling on a logarithmic grid.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from .errors import CertificationError, DomainError


logger = logging.getLogger(__name__)

GRID_SIZE = 4096
GRID_MIN = 1e-6
BISECT_RTOL = 1e-12
BISECT_MAXITER = 200
RATIO_TOL = 1e-12
HALVING_MAX_EXPONENT = 160  # K <= 2**20 on the 2**(j/8) ladder

KINDS = ("power", "linear", "custom")

ArrayLike = Union[float, np.ndarray]


def sample_grid(size: int = GRID_SIZE) -> np.ndarray:
    return np.geomspace(GRID_MIN, 1.0, size)


@dataclass(frozen=True)
class MonotonicityReport:
    psi_increasing: bool
    psi_over_x_increasing: bool
    psi_over_x_strictly_increasing: bool
    psi_over_sqrtx_increasing: bool
    psi1_decreasing: bool
    psi_over_xgamma_increasing_for: Optional[float]
    grid_size: int
    sampled: bool


@dataclass(frozen=True)
class PsiProfile:
    kind: str
    param: float = 1.0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"Unknown profile kind: {self.kind}")
        if self.kind == "custom":
            if self.func is None:
                raise ValueError("custom profile requires an evaluator")
        elif not (self.param > 0 and math.isfinite(self.param)):
            raise ValueError(f"{self.kind} profile requires a positive parameter, got {self.param}")
        if self.eval(0.0) != 0.0:
            raise ValueError("profile must satisfy psi(0) = 0")
        if not self.psi_one > 0:
            raise ValueError("profile must satisfy psi(1) > 0")
        if self.kind == "custom":
            values = np.asarray(self.func(sample_grid()), dtype=float)
            if not np.all(np.isfinite(values)) or np.any(values < 0):
                raise ValueError("custom profile must be finite and nonnegative on [0,1]")
            if np.max(np.abs(np.diff(values))) > 0.1 * max(1.0, self.psi_one):
                raise ValueError("custom profile jumps on the sampling grid; psi must be continuous")

    @classmethod
    def power(cls, beta: float) -> "PsiProfile":
        return cls(kind="power", param=float(beta))

    @classmethod
    def linear(cls, c0: float) -> "PsiProfile":
        return cls(kind="linear", param=float(c0))

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray], label: str = "custom") -> "PsiProfile":
        return cls(kind="custom", param=float("nan"), func=func, label=label)

    @property
    def literal(self) -> str:
        if self.kind == "custom":
            return self.label or "custom"
        return f"{self.kind}:{self.param:g}"

    @cached_property
    def psi_one(self) -> float:
        return float(self._raw(np.asarray(1.0)))

    def _raw(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "power":
            return np.power(x, self.param)
        if self.kind == "linear":
            return self.param * x
        return np.asarray(self.func(x), dtype=float)

    def eval(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        if np.any(~((arr >= 0.0) & (arr <= 1.0))):
            raise DomainError(f"psi is defined on [0,1], got {x}")
        value = self._raw(arr)
        return float(value) if np.ndim(value) == 0 else value

    def inverse(self, y: float) -> float:
        if not self.report.psi_increasing:
            raise CertificationError(f"{self.literal} is not strictly increasing; psi^-1 unavailable")
        if not 0.0 <= y <= self.psi_one:
            raise DomainError(f"psi^-1 needs y in [0, {self.psi_one:g}], got {y}")
        if self.kind == "power":
            return y ** (1.0 / self.param)
        if self.kind == "linear":
            return y / self.param
        return _bisect_inverse(self._raw, y, 0.0, 1.0)

    def psi1(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        if np.any(~((arr > 0.0) & (arr <= 1.0))):
            raise DomainError(f"psi1 is defined on (0,1], got {x}")
        if self.kind == "power":
            value = np.power(arr, self.param - 1.0)
        elif self.kind == "linear":
            value = np.full_like(arr, self.param)
        else:
            value = self._raw(arr) / arr
        return float(value) if np.ndim(value) == 0 else value

    def psi1_inverse(self, s: float) -> float:
        report = self.report
        if self.kind == "linear" or (self.kind == "power" and self.param == 1.0):
            raise CertificationError(f"psi(x)/x is constant for {self.literal}; not invertible")
        if self.kind == "power":
            x = s ** (1.0 / (self.param - 1.0)) if s > 0 else math.inf
            if not 0.0 < x <= 1.0:
                raise DomainError(f"psi1^-1({s}) = {x:g} lies outside (0,1] for {self.literal}")
            return x
        if not (report.psi1_decreasing or report.psi_over_x_strictly_increasing):
            raise CertificationError(f"psi1 is not monotone for {self.literal}")
        lo = GRID_MIN
        f_lo, f_hi = float(self.psi1(lo)), float(self.psi1(1.0))
        if not min(f_lo, f_hi) <= s <= max(f_lo, f_hi):
            raise DomainError(f"s={s} outside sampled range of psi1 [{min(f_lo, f_hi):g}, {max(f_lo, f_hi):g}]")
        return _bisect_inverse(lambda t: np.asarray(self.psi1(t)), s, lo, 1.0)

    @cached_property
    def report(self) -> MonotonicityReport:
        return classify(self)


def _bisect_inverse(func: Callable[[np.ndarray], np.ndarray], y: float, lo: float, hi: float) -> float:
    f_lo = float(func(np.asarray(lo))) - y
    f_hi = float(func(np.asarray(hi))) - y
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    x = optimize.bisect(
        lambda t: float(func(np.asarray(t))) - y,
        lo,
        hi,
        xtol=1e-300,
        rtol=max(4 * np.finfo(float).eps, 1e-15),
        maxiter=BISECT_MAXITER,
        disp=False,
    )
    residual = abs(float(func(np.asarray(x))) - y)
    if residual > BISECT_RTOL * max(1.0, abs(y)):
        logger.debug("bisection residual %.3g above tolerance at y=%.6g", residual, y)
    return float(x)


def _nondecreasing(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) >= -RATIO_TOL * np.abs(values[:-1])))


def classify(profile: PsiProfile) -> MonotonicityReport:
    if profile.kind == "power":
        beta = profile.param
        return MonotonicityReport(
            psi_increasing=True,
            psi_over_x_increasing=beta >= 1.0,
            psi_over_x_strictly_increasing=beta > 1.0,
            psi_over_sqrtx_increasing=beta >= 0.5,
            psi1_decreasing=beta < 1.0,
            psi_over_xgamma_increasing_for=beta,
            grid_size=GRID_SIZE,
            sampled=False,
        )
    if profile.kind == "linear":
        return MonotonicityReport(
            psi_increasing=True,
            psi_over_x_increasing=True,
            psi_over_x_strictly_increasing=False,
            psi_over_sqrtx_increasing=True,
            psi1_decreasing=False,
            psi_over_xgamma_increasing_for=1.0,
            grid_size=GRID_SIZE,
            sampled=False,
        )
    grid = sample_grid()
    values = np.asarray(profile.func(grid), dtype=float)
    ratio = values / grid
    gamma = None
    for k in range(64, 0, -1):
        if _nondecreasing(values / grid ** (k / 8)):
            gamma = k / 8
            break
    return MonotonicityReport(
        psi_increasing=bool(np.all(np.diff(values) > 0)),
        psi_over_x_increasing=_nondecreasing(ratio),
        psi_over_x_strictly_increasing=bool(np.all(np.diff(ratio) > 0)),
        psi_over_sqrtx_increasing=_nondecreasing(values / np.sqrt(grid)),
        psi1_decreasing=bool(np.all(np.diff(ratio) < 0)),
        psi_over_xgamma_increasing_for=gamma,
        grid_size=GRID_SIZE,
        sampled=True,
    )


def halving_constant(profile: PsiProfile) -> Optional[float]:
    if not profile.report.psi1_decreasing:
        return None
    if profile.kind == "power":
        return 2.0 ** (1.0 / (1.0 - profile.param))
    grid = sample_grid()
    base = np.asarray(profile.psi1(grid))
    for j in range(1, HALVING_MAX_EXPONENT + 1):
        k = 2.0 ** (j / 8)
        mask = grid <= 1.0 / k
        if not np.any(mask):
            break
        scaled = np.asarray(profile.psi1(k * grid[mask]))
        if np.all(scaled <= 0.5 * base[mask] * (1 + RATIO_TOL)):
            return k
    logger.debug("no halving constant up to 2**20 for %s", profile.literal)
    return None


def lower_ratio(profile: PsiProfile, exponent: float) -> float:
    """inf of psi(x)/x**exponent over (0,1]; the c0 of the comparison hypotheses."""
    if profile.kind == "power":
        return 1.0 if profile.param <= exponent else 0.0
    if profile.kind == "linear":
        return profile.param if exponent >= 1.0 else 0.0
    grid = sample_grid()
    return float(np.min(profile.eval(grid) / grid ** exponent))


def upper_ratio(profile: PsiProfile, exponent: float) -> float:
    if profile.kind == "power":
        return 1.0 if profile.param >= exponent else math.inf
    if profile.kind == "linear":
        return profile.param if exponent <= 1.0 else math.inf
    grid = sample_grid()
    return float(np.max(profile.eval(grid) / grid ** exponent))


def gamma_comparability(profile: PsiProfile, delta: float, gamma: float) -> Tuple[float, float]:
    """Return (psi^-1(delta)/psi^-1(delta/2), 2**(1/gamma))."""
    return profile.inverse(delta) / profile.inverse(delta / 2), 2.0 ** (1.0 / gamma)


def parse_profile(literal: str) -> PsiProfile:
    kind, sep, raw = literal.partition(":")
    if not sep or kind not in ("power", "linear"):
        raise ValueError(f"profile literal must be power:BETA or linear:C0, got {literal!r}")
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValueError(f"invalid profile parameter in {literal!r}") from exc
    if not value > 0:
        raise ValueError(f"profile parameter must be > 0, got {literal!r}")
    return PsiProfile(kind=kind, param=value)
