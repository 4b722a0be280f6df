import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import optimize

from .config import DELTA0_DEFAULT
from .errors import CertificationError, DomainError
from .profile import PsiProfile


ADMISSIBILITY_MARGIN = 1e-9
DELTA_STAR_TOL = 1e-12

ComplexLike = Union[complex, np.ndarray]


@dataclass(frozen=True)
class ModelDomain:
    profile: PsiProfile

    def margin(self, z1: ComplexLike, z2: ComplexLike) -> Union[float, np.ndarray]:
        """Signed membership margin; positive exactly on the domain."""
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        abs2 = np.abs(z2)
        # psi lives on [0,1]; beyond it the bidisc term is already negative
        psi = self.profile.eval(np.minimum(abs2, 1.0))
        value = np.minimum(np.minimum(1.0 - np.abs(z1), 1.0 - abs2), psi - z1.real)
        return float(value) if np.ndim(value) == 0 else value

    def contains(self, z: Tuple[complex, complex], margin: float = ADMISSIBILITY_MARGIN) -> bool:
        value = self.margin(z[0], z[1])
        if margin == 0.0:
            return bool(value > 0.0)
        return bool(value >= margin)

    def segment_inside(self, start: Tuple[complex, complex], end: Tuple[complex, complex], n: int = 256) -> bool:
        s = np.linspace(0.0, 1.0, n)
        z1 = start[0] + s * (end[0] - start[0])
        z2 = start[1] + s * (end[1] - start[1])
        return bool(np.all(self.margin(z1, z2) > 0.0))


@dataclass(frozen=True)
class BasePoint:
    delta: float
    delta0: float = DELTA0_DEFAULT

    def __post_init__(self) -> None:
        if not 0.0 < self.delta0 < 1.0:
            raise DomainError(f"delta0 must lie in (0,1), got {self.delta0}")
        if not 0.0 < self.delta <= self.delta0:
            raise DomainError(f"delta must lie in (0, {self.delta0}], got {self.delta}")

    @property
    def point(self) -> Tuple[complex, complex]:
        return complex(-self.delta, 0.0), 0j


@dataclass(frozen=True)
class Direction:
    x_n: complex
    x_t: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_n", complex(self.x_n))
        object.__setattr__(self, "x_t", complex(self.x_t))

    @property
    def n(self) -> float:
        return abs(self.x_n)

    @property
    def t(self) -> float:
        return abs(self.x_t)

    @property
    def ratio(self) -> float:
        """t = |x_T|/|x_N|, with x_N = 0 mapped to +inf."""
        if self.n == 0.0:
            return math.inf
        return self.t / self.n

    @property
    def is_zero(self) -> bool:
        return self.n == 0.0 and self.t == 0.0

    def require_nonzero(self) -> "Direction":
        if self.is_zero:
            raise DomainError("direction (0,0) has no metric value")
        return self

    def scaled(self, alpha: complex) -> "Direction":
        return Direction(alpha * self.x_n, alpha * self.x_t)

    def __iter__(self):
        yield self.x_n
        yield self.x_t


def delta_star(profile: PsiProfile) -> float:
    """Root of 1 - delta = delta / psi^-1(delta)."""
    if not profile.report.psi_over_x_strictly_increasing:
        raise CertificationError(f"psi(x)/x is not strictly increasing for {profile.literal}")

    def gap(delta: float) -> float:
        return 1.0 - delta - delta / profile.inverse(delta)

    lo, hi = 1e-12, min(profile.psi_one, 1.0 - 1e-12)
    if not gap(lo) > 0.0 > gap(hi):
        raise CertificationError(f"no sign change for delta* on ({lo:g}, {hi:g}) for {profile.literal}")
    return float(optimize.bisect(gap, lo, hi, xtol=DELTA_STAR_TOL, maxiter=200))
