"""
Needlet filters and their Daubechies bounds
"""

import math
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from .console import logger
from .constants import (
    DAUBECHIES_LOG_RANGE,
    DAUBECHIES_MIN_POINTS,
    DAUBECHIES_POINTS_PER_DECADE,
    STEP_NODES,
)
from .errors import DegenerateFilter
from .harmonics import eigenvalues

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(STEP_NODES)


def _bump(t: np.ndarray) -> np.ndarray:
    inside = np.abs(t) < 1.0
    safe = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)


def _bump_integral(x: np.ndarray) -> np.ndarray:
    # integral of the bump over [-1, x], by Gauss-Legendre mapped onto each interval
    half = 0.5 * (x + 1.0)
    t = -1.0 + half[..., None] * (_NODES + 1.0)
    return half * np.sum(_WEIGHTS * _bump(t), axis=-1)


_BUMP_TOTAL = float(_bump_integral(np.array(1.0)))


def smooth_step(x) -> np.ndarray:
    """C-infinity step: 0 for x <= -1, 1 for x >= 1"""
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    return _bump_integral(x) / _BUMP_TOTAL


def _cutoff(u: np.ndarray, a: float) -> np.ndarray:
    """1 on [0, a^-2], 0 on [1, inf), smooth and decreasing between"""
    a2 = a * a
    x = 1.0 - 2.0 * a2 / (a2 - 1.0) * (u - 1.0 / a2)
    return np.where(u <= 1.0 / a2, 1.0, np.where(u >= 1.0, 0.0, smooth_step(x)))


@dataclass(frozen=True)
class FilterSpec:
    """
    A real filter f on [0, inf) used at dilations a^{2j}.

    support is the closed interval outside which f vanishes, or None when f
    has unbounded support (such filters only feed Daubechies-bound checks).
    """
    a: float
    fn: Callable[[np.ndarray], np.ndarray]
    support: Optional[Tuple[float, float]]
    name: str = "needlet"
    gain: float = 1.0

    def __post_init__(self):
        if not self.a > 1.0:
            raise ValueError(f"dilation base a must exceed 1, got {self.a!r}")

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], a: float,
                      support: Optional[Tuple[float, float]] = None, name: str = "custom") -> "FilterSpec":
        """Wrap any vectorized nonnegative filter"""
        return cls(a=float(a), fn=fn, support=support, name=name)

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        values = self.gain * np.asarray(self.fn(u), dtype=float)
        if self.support is not None:
            lo, hi = self.support
            values = np.where((u > lo) & (u < hi), values, 0.0)
        return values

    @property
    def is_compact(self) -> bool:
        return self.support is not None

    def scaled(self, factor: float) -> "FilterSpec":
        return replace(self, gain=self.gain * factor)

    def multipliers(self, s: int, L: int, j: int) -> np.ndarray:
        """f(a^{2j} lambda_ls) for l = 0..L, zero below |s|"""
        lam = eigenvalues(s, L)
        values = self(self.a ** (2 * j) * lam)
        values[: abs(s)] = 0.0
        return values

    def scales_for(self, s: int, L: int) -> Tuple[int, ...]:
        """Scales j whose multipliers are nonzero on some shell |s| < l <= L"""
        if not self.is_compact:
            raise ValueError("scale ranges need a compactly supported filter")
        lam = eigenvalues(s, L)[abs(s) + 1:]
        if len(lam) == 0:
            return ()
        lo, hi = self.support
        log_a2 = 2.0 * math.log(self.a)
        j_lo = math.floor((math.log(lo) - math.log(lam[-1])) / log_a2) - 1
        j_hi = math.ceil((math.log(hi) - math.log(lam[0])) / log_a2) + 1
        return tuple(j for j in range(j_lo, j_hi + 1) if np.any(self.multipliers(s, L, j)[abs(s) + 1:] > 0.0))

    def shell_range(self, s: int, L: int, j: int) -> Tuple[int, int]:
        """Smallest and largest l <= L with a nonzero multiplier at scale j"""
        active = np.nonzero(self.multipliers(s, L, j) > 0.0)[0]
        if len(active) == 0:
            return 0, -1
        return int(active[0]), int(active[-1])

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "a": self.a, "support": list(self.support) if self.support else None}


def build_filter(a: float) -> FilterSpec:
    """
    Needlet filter with sum_j f^2(a^{2j} u) = 1 for every u > 0.

    f^2(u) = phi(u / a^2) - phi(u), with phi a smooth cutoff equal to 1 below
    a^-2 and 0 above 1, so the dilated squares telescope.
    """
    a = float(a)
    if not a > 1.0:
        raise ValueError(f"dilation base a must exceed 1, got {a!r}")

    def needlet(u):
        u = np.asarray(u, dtype=float)
        return np.sqrt(np.clip(_cutoff(u / (a * a), a) - _cutoff(u, a), 0.0, None))

    return FilterSpec(a=a, fn=needlet, support=(a ** -2, a ** 2), name="needlet")


def daubechies_sum(filt: FilterSpec, u) -> np.ndarray:
    """sum over j of f^2(a^{2j} u), truncated where the dilates leave [1e-12, 1e6]"""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    log_a2 = 2.0 * math.log(filt.a)
    lo, hi = (x * math.log(10.0) for x in DAUBECHIES_LOG_RANGE)
    js = np.arange(math.floor(lo / log_a2) - 1, math.ceil(hi / log_a2) + 2)
    dilated = np.exp(js[:, None] * log_a2) * u[None, :]
    return np.sum(filt(dilated) ** 2, axis=0)


def daubechies_bounds(filt: FilterSpec) -> Tuple[float, float]:
    """
    Numerical inf and sup of the Daubechies sum.

    The sum is periodic in log u with period log a^2, so one period [1, a^2)
    is sampled at no fewer than DAUBECHIES_POINTS_PER_DECADE points per decade.
    """
    decades = math.log10(filt.a ** 2)
    n = max(DAUBECHIES_MIN_POINTS, int(math.ceil(DAUBECHIES_POINTS_PER_DECADE * decades)))
    u = np.logspace(0.0, decades, n, endpoint=False)
    total = daubechies_sum(filt, u)
    lower, upper = float(np.min(total)), float(np.max(total))
    logger.debug(f"daubechies bounds for {filt.name} (a={filt.a:.6g}): A={lower:.12g} B={upper:.12g}")
    if lower <= 0.0:
        raise DegenerateFilter(f"Daubechies lower bound {lower:.3g} is not positive")
    return lower, upper
