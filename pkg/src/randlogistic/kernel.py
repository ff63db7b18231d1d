"""Exact one-step transition kernel of the logistic map with a random parameter.

For the process ``X_{n+1} = L_{n+1} X_n (1 - X_n)`` with i.i.d. parameters
``L ~ Q``, the chance of stepping from ``x`` into a set ``A`` is the
``Q``-probability of the parameter values that land there, i.e.
``Q(A / (x (1 - x)))``.  For the supported parameter laws this is available
in closed form, which is what this module evaluates; no sampling is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import SupportInterval, validate_state
from .measure import EmpiricalMeasure

__all__ = [
    "UniformInterval",
    "TwoPoint",
    "PiecewiseConstant",
    "ParameterLaw",
    "IntervalSet",
    "image_interval",
    "transition_prob",
    "transition_density",
    "bin_transition_masses",
    "push_forward",
    "n_step_prob",
]


@dataclass(frozen=True)
class UniformInterval:
    """Parameter drawn uniformly from (a, b) with 0 < a < b <= 4."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a < self.b <= 4.0):
            raise ValueError(f"need 0 < a < b <= 4, got ({self.a}, {self.b})")

    def sample(self, u):
        """Map uniforms in (0, 1) to parameter draws; clipped so draws never
        leave [a, b] through rounding."""
        return np.clip(self.a + u * (self.b - self.a), self.a, self.b)

    def describe(self) -> str:
        return f"uniform({self.a:g},{self.b:g})"


@dataclass(frozen=True)
class TwoPoint:
    """Parameter switching between two values: alpha with probability
    ``weight_alpha``, beta otherwise.  alpha == beta gives a point mass."""

    alpha: float
    beta: float
    weight_alpha: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha <= self.beta <= 4.0):
            raise ValueError(f"need 0 < alpha <= beta <= 4, got ({self.alpha}, {self.beta})")
        if not 0.0 <= self.weight_alpha <= 1.0:
            raise ValueError("weight_alpha must lie in [0, 1]")

    def sample(self, u):
        return np.where(np.asarray(u) < self.weight_alpha, self.alpha, self.beta)

    def describe(self) -> str:
        if self.alpha == self.beta:
            return f"pointmass({self.alpha:g})"
        return f"twopoint({self.alpha:g},{self.beta:g},{self.weight_alpha:g})"


@dataclass(frozen=True)
class PiecewiseConstant:
    """Absolutely continuous parameter law with piecewise-constant density.

    ``breakpoints`` are the sorted cell edges within (0, 4]; ``densities``
    holds one value per cell and must integrate to 1.
    """

    breakpoints: tuple
    densities: tuple

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "densities", tuple(float(d) for d in self.densities))
        breaks = np.array(self.breakpoints)
        dens = np.array(self.densities)
        if breaks.size < 2 or dens.size != breaks.size - 1:
            raise ValueError("need one density per cell between consecutive breakpoints")
        if not np.all(np.diff(breaks) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (0.0 < breaks[0] and breaks[-1] <= 4.0):
            raise ValueError("support must lie within (0, 4]")
        if np.any(dens < 0):
            raise ValueError("densities must be nonnegative")
        total = float(np.sum(dens * np.diff(breaks)))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"density integrates to {total}, expected 1")

    def _cdf_knots(self) -> tuple[np.ndarray, np.ndarray]:
        breaks = np.array(self.breakpoints)
        cum = np.concatenate([[0.0], np.cumsum(np.array(self.densities) * np.diff(breaks))])
        return breaks, cum

    def cdf(self, lam):
        """Distribution function of the parameter, evaluated elementwise."""
        breaks, cum = self._cdf_knots()
        return np.interp(lam, breaks, cum, left=0.0, right=cum[-1])

    def sample(self, u):
        breaks, cum = self._cdf_knots()
        return np.interp(np.asarray(u) * cum[-1], cum, breaks)

    def describe(self) -> str:
        b = ",".join(f"{v:g}" for v in self.breakpoints)
        d = ",".join(f"{v:g}" for v in self.densities)
        return f"piecewise({b};{d})"


ParameterLaw = Union[UniformInterval, TwoPoint, PiecewiseConstant]


@dataclass(frozen=True)
class IntervalSet:
    """Finite disjoint union of subintervals of [0, 1], kept sorted.

    Construct through :meth:`from_pairs`, which drops zero-length pieces and
    merges touching ones so closed-form sums over the pieces are unambiguous.
    """

    intervals: tuple

    def __post_init__(self):
        prev_hi = -1.0
        for lo, hi in self.intervals:
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError(f"bad interval ({lo}, {hi})")
            if lo < prev_hi:
                raise ValueError("intervals must be disjoint and sorted")
            prev_hi = hi

    @classmethod
    def from_pairs(cls, pairs) -> "IntervalSet":
        cleaned = sorted((float(lo), float(hi)) for lo, hi in pairs if float(lo) < float(hi))
        merged: list[tuple[float, float]] = []
        for lo, hi in cleaned:
            if merged and lo <= merged[-1][1]:
                if lo < merged[-1][1]:
                    raise ValueError("overlapping intervals")
                merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        return cls(tuple(merged))

    @classmethod
    def single(cls, lo: float, hi: float) -> "IntervalSet":
        return cls.from_pairs([(lo, hi)])

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls(((0.0, 1.0),))

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.intervals])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.intervals])

    @property
    def total_length(self) -> float:
        return float((self.upper - self.lower).sum())

    def contains(self, x):
        """Elementwise membership in the union (closed pieces)."""
        x = np.asarray(x, dtype=float)
        hit = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            hit |= (x >= lo) & (x <= hi)
        return hit


def _interior_state(x: float) -> float:
    x = validate_state(x)
    if x == 0.0 or x == 1.0:
        raise ValueError(
            "kernel degenerates to a point mass at 0 for x in {0, 1}; the chain lives on (0, 1)"
        )
    return x


def image_interval(x: float, law: ParameterLaw) -> SupportInterval:
    """One-step image ``(a x(1-x), b x(1-x))`` of a point under a uniform law."""
    if not isinstance(law, UniformInterval):
        raise ValueError("image interval is defined for uniform parameter laws")
    x = _interior_state(x)
    s = x * (1.0 - x)
    return SupportInterval(law.a * s, law.b * s)


def transition_prob(x: float, A: IntervalSet, law: ParameterLaw) -> float:
    """Exact one-step probability of moving from ``x`` into the set ``A``.

    Evaluates the parameter law on the rescaled set ``A / (x (1 - x))``:
    interval-overlap arithmetic for the uniform law, a weighted indicator sum
    for the two-point law, and CDF differences for the piecewise-constant law.
    """
    x = _interior_state(x)
    s = x * (1.0 - x)
    lo, hi = A.lower, A.upper
    if isinstance(law, UniformInterval):
        ql, qh = lo / s, hi / s
        overlap = np.clip(np.minimum(qh, law.b) - np.maximum(ql, law.a), 0.0, None)
        return float(overlap.sum() / (law.b - law.a))
    if isinstance(law, TwoPoint):
        p = 0.0
        if A.contains(law.alpha * s):
            p += law.weight_alpha
        if A.contains(law.beta * s):
            p += 1.0 - law.weight_alpha
        return float(p)
    if isinstance(law, PiecewiseConstant):
        return float(np.sum(law.cdf(hi / s) - law.cdf(lo / s)))
    raise TypeError(f"unsupported parameter law {type(law).__name__}")


def transition_prob_many(xs, A: IntervalSet, law: ParameterLaw) -> np.ndarray:
    """Vectorized :func:`transition_prob` over an array of source states."""
    xs = np.asarray(xs, dtype=float)
    if np.any((xs <= 0.0) | (xs >= 1.0)):
        raise ValueError("source states must lie strictly inside (0, 1)")
    s = (xs * (1.0 - xs))[:, None]
    lo, hi = A.lower[None, :], A.upper[None, :]
    if isinstance(law, UniformInterval):
        overlap = np.clip(np.minimum(hi / s, law.b) - np.maximum(lo / s, law.a), 0.0, None)
        return overlap.sum(axis=1) / (law.b - law.a)
    if isinstance(law, TwoPoint):
        pa = A.contains(law.alpha * s[:, 0]).astype(float)
        pb = A.contains(law.beta * s[:, 0]).astype(float)
        return law.weight_alpha * pa + (1.0 - law.weight_alpha) * pb
    if isinstance(law, PiecewiseConstant):
        return np.sum(law.cdf(hi / s) - law.cdf(lo / s), axis=1)
    raise TypeError(f"unsupported parameter law {type(law).__name__}")


def transition_density(x: float, y: float, law: ParameterLaw) -> float:
    """Density of the one-step kernel at ``y``, for absolutely continuous laws.

    For a uniform law this is ``1 / ((b - a) x (1 - x))`` on the image
    interval and 0 outside; a two-point law has no density.
    """
    if isinstance(law, TwoPoint):
        raise ValueError("a two-point parameter law has atoms; no transition density exists")
    x = _interior_state(x)
    y = validate_state(y)
    s = x * (1.0 - x)
    if isinstance(law, UniformInterval):
        if law.a * s < y < law.b * s:
            return 1.0 / ((law.b - law.a) * s)
        return 0.0
    if isinstance(law, PiecewiseConstant):
        lam = y / s
        breaks = np.array(law.breakpoints)
        idx = np.searchsorted(breaks, lam, side="right") - 1
        if idx < 0 or idx >= len(law.densities):
            return 0.0
        return law.densities[idx] / s
    raise TypeError(f"unsupported parameter law {type(law).__name__}")


def bin_transition_masses(x: float, edges: np.ndarray, law: ParameterLaw) -> np.ndarray:
    """Kernel mass ``p(x, bin_j)`` for every bin of a partition, in one pass.

    The bins are the consecutive cells of ``edges``; the last cell is treated
    as closed on the right so a draw landing exactly on 1 is kept.
    """
    x = _interior_state(x)
    edges = np.asarray(edges, dtype=float)
    s = x * (1.0 - x)
    if isinstance(law, UniformInterval):
        lo_img, hi_img = law.a * s, law.b * s
        overlap = np.clip(np.minimum(edges[1:], hi_img) - np.maximum(edges[:-1], lo_img), 0.0, None)
        return overlap / (hi_img - lo_img)
    if isinstance(law, TwoPoint):
        out = np.zeros(edges.size - 1)
        for value, weight in ((law.alpha, law.weight_alpha), (law.beta, 1.0 - law.weight_alpha)):
            j = min(int(np.searchsorted(edges, value * s, side="right")) - 1, edges.size - 2)
            out[max(j, 0)] += weight
        return out
    if isinstance(law, PiecewiseConstant):
        cdf_vals = law.cdf(edges / s)
        return np.diff(cdf_vals)
    raise TypeError(f"unsupported parameter law {type(law).__name__}")


def push_forward(
    mu: EmpiricalMeasure, law: ParameterLaw, quadrature_nodes: int = 5
) -> EmpiricalMeasure:
    """One application of the distribution-level operator to a binned measure.

    Each source bin's mass is spread according to the kernel averaged over
    midpoint-offset quadrature nodes inside the bin (the midpoint rule avoids
    kernel discontinuities at bin edges).  The result lives on the same grid
    and is renormalized to kill quadrature drift.
    """
    if quadrature_nodes < 1:
        raise ValueError("need at least one quadrature node")
    edges = mu.bin_edges
    offsets = (np.arange(quadrature_nodes) + 0.5) / quadrature_nodes
    out = np.zeros(mu.n_bins)
    for i, mass in enumerate(mu.masses):
        if mass == 0.0:
            continue
        nodes = edges[i] + offsets * (edges[i + 1] - edges[i])
        row = np.zeros(mu.n_bins)
        for node in nodes:
            row += bin_transition_masses(node, edges, law)
        out += mass * (row / quadrature_nodes)
    out /= out.sum()
    return EmpiricalMeasure(edges, out)


def n_step_prob(
    x: float, A: IntervalSet, law: ParameterLaw, n: int, grid: int = 1024
) -> float:
    """Approximate n-step probability ``p^n(x, A)``.

    Exact for n = 1.  For larger n the first step is the exact kernel binned
    on a uniform grid, the middle n - 2 steps ride the grid transfer matrix,
    and the last step integrates the exact kernel into ``A`` so that the
    target set never needs to align with the grid.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if n == 1:
        return transition_prob(x, A, law)
    from .ulam import build_ulam  # local import: ulam builds on this module

    edges = np.linspace(0.0, 1.0, grid + 1)
    weights = bin_transition_masses(x, edges, law)
    if n > 2:
        op = build_ulam(law, grid)
        for _ in range(n - 2):
            weights = weights @ op.matrix
    nodes_per_bin = 5
    offsets = (np.arange(nodes_per_bin) + 0.5) / nodes_per_bin
    nodes = (edges[:-1, None] + offsets[None, :] * np.diff(edges)[:, None]).ravel()
    into_target = transition_prob_many(nodes, A, law).reshape(grid, nodes_per_bin).mean(axis=1)
    return float(weights @ into_target)
