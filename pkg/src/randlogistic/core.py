"""Deterministic logistic-map arithmetic and closed-form invariant laws.

Everything here is noise-free: single applications and iterates of
``x -> lam * x * (1 - x)``, its interior fixed point, the support interval of
the deterministic invariant density, and the arcsine (beta(1/2, 1/2)) density
that is invariant when ``lam = 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SupportInterval",
    "validate_state",
    "validate_lambda",
    "logistic_step",
    "iterate_deterministic",
    "fixed_point",
    "fixed_point_band",
    "deterministic_support_interval",
    "beta_invariant_density",
    "beta_invariant_cdf",
]


def validate_state(x: float) -> float:
    """Return ``x`` as a float after checking it lies in the closed unit interval."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"state must lie in [0, 1], got {x}")
    return x


def validate_lambda(lam: float) -> float:
    """Return ``lam`` as a float after checking it lies in (0, 4]."""
    lam = float(lam)
    if not 0.0 < lam <= 4.0:
        raise ValueError(f"map parameter must lie in (0, 4], got {lam}")
    return lam


@dataclass(frozen=True)
class SupportInterval:
    """A subinterval (lo, hi) of [0, 1].

    ``degenerate`` marks the single point case lo == hi, which occurs for the
    deterministic support at lam = 2; it is reported rather than rejected.
    """

    lo: float
    hi: float
    degenerate: bool = False

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError(f"need 0 <= lo <= hi <= 1, got ({self.lo}, {self.hi})")
        if self.lo == self.hi and not self.degenerate:
            raise ValueError("zero-length interval must be flagged degenerate")
        if self.lo < self.hi and self.degenerate:
            raise ValueError("degenerate flag set on an interval of positive length")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x):
        """Elementwise containment test (closed interval)."""
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)

    def as_pair(self) -> tuple[float, float]:
        return (self.lo, self.hi)


def logistic_step(x: float, lam: float) -> float:
    """One application of the quadratic map: ``lam * x * (1 - x)``.

    Total on valid inputs; the result never exceeds ``lam / 4``.
    """
    x = validate_state(x)
    lam = validate_lambda(lam)
    return lam * x * (1.0 - x)


def iterate_deterministic(x0: float, lam: float, n: int) -> np.ndarray:
    """Iterate the map ``n`` times with a fixed parameter.

    Returns the full orbit as an array of length ``n + 1`` starting at ``x0``.
    Chaotic-regime orbits diverge pointwise from real orbits after a few tens
    of steps; use distributional comparisons for anything longer.
    """
    x = validate_state(x0)
    lam = validate_lambda(lam)
    if n < 0:
        raise ValueError("iteration count must be nonnegative")
    orbit = np.empty(n + 1)
    orbit[0] = x
    for k in range(n):
        x = lam * x * (1.0 - x)
        orbit[k + 1] = x
    return orbit


def fixed_point(lam: float) -> float:
    """Interior fixed point ``1 - 1/lam`` of the deterministic map.

    Only defined for lam > 1; below that the origin is the only fixed point
    in [0, 1).
    """
    lam = validate_lambda(lam)
    if lam <= 1.0:
        raise ValueError(
            f"no interior fixed point for lam = {lam}: only the origin is fixed in (0, 1)"
        )
    return 1.0 - 1.0 / lam


def fixed_point_band(lambda_min: float, lambda_max: float) -> SupportInterval:
    """Interval swept by the interior fixed point as lam runs over the range.

    For a parameter range (lambda_min, lambda_max) with lambda_min > 1 this is
    ``(1 - 1/lambda_min, 1 - 1/lambda_max)``, the set of fixed points of the
    individual maps in force.
    """
    lo = fixed_point(lambda_min)
    hi = fixed_point(lambda_max)
    if not lo < hi:
        raise ValueError("lambda_min must be strictly below lambda_max")
    return SupportInterval(lo, hi)


def deterministic_support_interval(lam: float) -> SupportInterval:
    """Support of the deterministic invariant density at parameter lam.

    Returns ``(lam^2 (4 - lam) / 16, lam / 4)``: the upper end is the image
    of the critical point and the lower end its image in turn.  The interval
    is forward invariant (and the attractor lives inside it) for lam >= 2; at
    lam = 2 the two ends coincide at the fixed point 1/2 and the result is
    flagged degenerate.
    """
    lam = validate_lambda(lam)
    hi = lam / 4.0
    lo = lam * lam * (4.0 - lam) / 16.0
    return SupportInterval(lo, hi, degenerate=(lo == hi))


def beta_invariant_density(x):
    """Density ``1 / (pi * sqrt(x (1 - x)))`` invariant under the lam = 4 map.

    Accepts scalars or arrays of interior points; the endpoints are poles and
    are rejected so that callers integrate with endpoint-avoiding rules.
    """
    arr = np.asarray(x, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("density has poles at 0 and 1; evaluate strictly inside (0, 1)")
    out = 1.0 / (np.pi * np.sqrt(arr * (1.0 - arr)))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def beta_invariant_cdf(x):
    """Distribution function ``(2/pi) * arcsin(sqrt(x))`` of the lam = 4 law."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise ValueError("argument outside [0, 1]")
    out = (2.0 / np.pi) * np.arcsin(np.sqrt(arr))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out
