"""Ulam discretization of the transfer operator and its invariant vector.

The distribution-level operator is approximated by a row-stochastic matrix:
entry (i, j) is the kernel mass from bin i into bin j, averaged over
quadrature nodes inside bin i.  The leading left eigenvector (eigenvalue
exactly 1) is found by power iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .kernel import ParameterLaw, PiecewiseConstant, TwoPoint, UniformInterval
from .measure import EmpiricalMeasure

__all__ = [
    "UlamOperator",
    "InvariantVector",
    "PowerIterationError",
    "build_ulam",
    "invariant_vector",
    "apply_operator",
    "operator_power_positivity",
    "second_eigenvalue_estimate",
    "bins_overlapping",
    "save_operator_csv",
    "load_operator_csv",
]

_DENSE_LIMIT = 2048
_ROW_SUM_TOL = 1e-10


@dataclass
class UlamOperator:
    """Row-stochastic discretization of the transfer operator.

    ``matrix`` is dense up to 2048 bins and CSR beyond (rows get sparser as
    the grid refines, since image intervals are short).
    """

    bin_edges: np.ndarray
    matrix: object
    law_tag: str
    nodes_per_bin: int

    @property
    def n_bins(self) -> int:
        return self.bin_edges.size - 1

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix


@dataclass
class InvariantVector:
    """Left fixed point of the operator with its achieved L1 residual."""

    weights: np.ndarray
    residual: float
    iterations: int
    bin_edges: np.ndarray

    def to_measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure(self.bin_edges, self.weights)


class PowerIterationError(RuntimeError):
    """Raised when power iteration fails to converge; carries the last state."""

    def __init__(self, message, last_iterate, residual, oscillating):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.oscillating = oscillating


def _quadrature_nodes(edges: np.ndarray, nodes_per_bin: int) -> np.ndarray:
    """Midpoint-offset interior nodes for every bin, shape (n_bins, nodes)."""
    offsets = (np.arange(nodes_per_bin) + 0.5) / nodes_per_bin
    return edges[:-1, None] + offsets[None, :] * np.diff(edges)[:, None]


def _node_masses(nodes: np.ndarray, edges: np.ndarray, law: ParameterLaw) -> np.ndarray:
    """Kernel mass into every bin for a flat array of source nodes.

    Vectorized over all nodes at once; one row per node.
    """
    s = (nodes * (1.0 - nodes))[:, None]
    if isinstance(law, UniformInterval):
        img_lo, img_hi = law.a * s, law.b * s
        overlap = np.clip(
            np.minimum(edges[None, 1:], img_hi) - np.maximum(edges[None, :-1], img_lo),
            0.0,
            None,
        )
        return overlap / (img_hi - img_lo)
    if isinstance(law, TwoPoint):
        n_bins = edges.size - 1
        out = np.zeros((nodes.size, n_bins))
        rows = np.arange(nodes.size)
        for value, weight in ((law.alpha, law.weight_alpha), (law.beta, 1.0 - law.weight_alpha)):
            cols = np.minimum(np.searchsorted(edges, value * s[:, 0], side="right") - 1, n_bins - 1)
            np.add.at(out, (rows, np.maximum(cols, 0)), weight)
        return out
    if isinstance(law, PiecewiseConstant):
        return np.diff(law.cdf(edges[None, :] / s), axis=1)
    raise TypeError(f"unsupported parameter law {type(law).__name__}")


def build_ulam(law: ParameterLaw, n_bins: int, nodes_per_bin: int = 5) -> UlamOperator:
    """Assemble the transfer matrix on a uniform grid over [0, 1].

    Row i averages the closed-form kernel over ``nodes_per_bin`` quadrature
    nodes inside bin i; rows are renormalized to remove quadrature drift.
    Raises if any row comes out all-zero (grid too coarse for the law).
    """
    if n_bins < 8:
        raise ValueError("need at least 8 bins")
    if nodes_per_bin < 1:
        raise ValueError("need at least one quadrature node per bin")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    nodes = _quadrature_nodes(edges, nodes_per_bin)

    # Cap the (rows * nodes, n_bins) scratch block at ~32 MB.
    block = max(1, min(n_bins, (1 << 22) // max(n_bins * nodes_per_bin, 1)))
    dense_blocks = []
    for start in range(0, n_bins, block):
        stop = min(start + block, n_bins)
        flat = nodes[start:stop].ravel()
        rows = _node_masses(flat, edges, law).reshape(stop - start, nodes_per_bin, n_bins)
        rows = rows.mean(axis=1)
        sums = rows.sum(axis=1)
        if np.any(sums <= 0.0):
            bad = start + int(np.argmax(sums <= 0.0))
            raise ValueError(f"row {bad} of the operator is all-zero; refine the grid")
        rows /= sums[:, None]
        dense_blocks.append(rows if n_bins <= _DENSE_LIMIT else sp.csr_array(rows))
    if n_bins <= _DENSE_LIMIT:
        matrix = np.vstack(dense_blocks)
    else:
        matrix = sp.vstack(dense_blocks, format="csr")
    return UlamOperator(edges, matrix, law.describe(), nodes_per_bin)


def apply_operator(op: UlamOperator, mu: EmpiricalMeasure) -> EmpiricalMeasure:
    """Push a measure one step: row vector times matrix on the shared grid."""
    if not np.array_equal(mu.bin_edges, op.bin_edges):
        raise ValueError("measure is binned on a different grid than the operator")
    out = mu.masses @ op.matrix
    out = np.asarray(out).ravel()
    out /= out.sum()
    return EmpiricalMeasure(op.bin_edges, out)


def invariant_vector(op: UlamOperator, tol: float = 1e-12, max_iter: int = 20_000) -> InvariantVector:
    """Leading left fixed point by power iteration from the uniform vector.

    Stops when the L1 residual ||vP - v|| drops to ``tol``.  On failure the
    raised error carries the last iterate, the residual, and whether the
    residual history oscillated (a uniqueness red flag) rather than decayed.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    n = op.n_bins
    v = np.full(n, 1.0 / n)
    history = []
    for iteration in range(1, max_iter + 1):
        w = np.asarray(v @ op.matrix).ravel()
        w /= w.sum()
        residual = float(np.abs(w - v).sum())
        v = w
        if residual <= tol:
            return InvariantVector(v, residual, iteration, op.bin_edges)
        history.append(residual)
    tail = history[-20:]
    oscillating = len(tail) > 2 and any(b > a * (1 + 1e-9) for a, b in zip(tail, tail[1:]))
    raise PowerIterationError(
        f"power iteration stalled at residual {history[-1]:.3e} after {max_iter} "
        f"iterations (tol {tol:.1e})" + ("; residual is oscillating" if oscillating else ""),
        last_iterate=v,
        residual=history[-1],
        oscillating=oscillating,
    )


def bins_overlapping(edges: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Indices of bins whose interior overlaps the interval (lo, hi)."""
    edges = np.asarray(edges)
    overlap = np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo)
    return np.nonzero(overlap > 0)[0]


def operator_power_positivity(op: UlamOperator, n_max: int, target_bins) -> int | None:
    """Smallest k <= n_max with every row of P^k positive into every target bin.

    Works on the boolean support of the matrix, so magnitudes never decay; a
    positive entry of the support product means a positive k-step mass.
    Returns None when no such k exists within the horizon (e.g. the identity
    operator, which never mixes).
    """
    targets = np.asarray(list(target_bins), dtype=np.int64)
    if targets.size == 0:
        raise ValueError("target bin set must be nonempty")
    support = (op.dense() > 0.0).astype(np.float64)
    reach = support
    for k in range(1, n_max + 1):
        if np.all(reach[:, targets] > 0.0):
            return k
        if k < n_max:
            reach = (reach @ support) > 0.0
            reach = reach.astype(np.float64)
    return None


def second_eigenvalue_estimate(op: UlamOperator, n_iter: int = 300) -> float:
    """Rough modulus of the second eigenvalue from residual decay.

    Diagnostic only: the asymptotic ratio of successive power-iteration
    residuals equals |lambda_2| when the spectral gap is real and simple.
    """
    n = op.n_bins
    v = np.full(n, 1.0 / n)
    ratios = []
    prev = None
    for _ in range(n_iter):
        w = np.asarray(v @ op.matrix).ravel()
        w /= w.sum()
        residual = float(np.abs(w - v).sum())
        if prev is not None and prev > 1e-14 and residual > 1e-300:
            ratios.append(residual / prev)
        prev = residual
        v = w
        if residual < 1e-14:
            break
    if not ratios:
        return 0.0
    tail = ratios[-min(20, len(ratios)) :]
    return float(np.median(tail))


def save_operator_csv(op: UlamOperator, path) -> None:
    """Write the operator as a triplet list (row, col, value) with a header."""
    if op.is_sparse:
        coo = op.matrix.tocoo()
        rows, cols, vals = coo.row, coo.col, coo.data
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
    else:
        rows, cols = np.nonzero(op.matrix)
        vals = op.matrix[rows, cols]
    lines = [
        f"# n_bins: {op.n_bins}",
        f"# law: {op.law_tag}",
        f"# nodes_per_bin: {op.nodes_per_bin}",
        "row,col,value",
    ]
    lines.extend(f"{i},{j},{v!r}" for i, j, v in zip(rows, cols, vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_operator_csv(path) -> UlamOperator:
    n_bins = None
    law_tag = ""
    nodes_per_bin = 0
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# n_bins:"):
                n_bins = int(line.split(":", 1)[1])
            elif line.startswith("# law:"):
                law_tag = line.split(":", 1)[1].strip()
            elif line.startswith("# nodes_per_bin:"):
                nodes_per_bin = int(line.split(":", 1)[1])
            elif not line or line.startswith("#") or line.startswith("row,"):
                continue
            else:
                i, j, v = line.split(",")
                rows.append(int(i))
                cols.append(int(j))
                vals.append(float(v))
    if n_bins is None:
        raise ValueError("missing n_bins header")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    if n_bins <= _DENSE_LIMIT:
        matrix = np.zeros((n_bins, n_bins))
        matrix[rows, cols] = vals
    else:
        matrix = sp.csr_array((vals, (rows, cols)), shape=(n_bins, n_bins))
    return UlamOperator(edges, matrix, law_tag, nodes_per_bin)
