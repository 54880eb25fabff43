"""Generic log-domain sum-product message passing on bipartite factor graphs.

Messages are length-M log-domain tables over a shared symbol alphabet.
A flooding schedule updates all VN->FN messages simultaneously, then all
FN->VN messages; per-edge, per-iteration multiplicative weights hook in
exactly where deep-unfolded (neural) belief propagation places them.
Clamped VNs emit a near-certain message instead of being removed from
the graph, so graph shapes stay uniform.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

CLAMP_NEG = -1e9  # -inf surrogate for clamped (known) variables


def maxstar(values) -> float:
    """Jacobian logarithm ln(sum_i exp(v_i)) via running pairwise max*."""
    values = list(values)
    if not values:
        raise ValueError("maxstar of an empty list")
    acc = values[0]
    for v in values[1:]:
        hi, lo = (acc, v) if acc >= v else (v, acc)
        acc = hi + math.log1p(math.exp(lo - hi))
    return acc


def normalize(msg: np.ndarray) -> np.ndarray:
    """Shift a log-message so its maximum entry is zero."""
    return msg - np.max(msg)


def vn_update(incoming, weights=None) -> np.ndarray:
    """Weighted sum of incoming FN->VN log-messages, normalized."""
    incoming = [np.asarray(m, dtype=np.float64) for m in incoming]
    if weights is None:
        weights = [1.0] * len(incoming)
    if not incoming:
        return np.zeros(0)
    out = np.zeros_like(incoming[0])
    for w, m in zip(weights, incoming):
        out = out + w * m
    return normalize(out)


@dataclass
class FactorNode:
    """A factor over a tuple of neighbor VNs with a lazy log evaluator.

    ``log_factor(assignment)`` takes one symbol index per neighbor, in
    neighbor order.
    """

    neighbors: list
    log_factor: callable
    _table: np.ndarray | None = field(default=None, repr=False)

    def table(self, M: int) -> np.ndarray:
        if self._table is None:
            shape = (M,) * len(self.neighbors)
            tab = np.empty(shape)
            for assign in itertools.product(range(M), repeat=len(self.neighbors)):
                tab[assign] = self.log_factor(assign)
            self._table = tab
        return self._table


def fn_update(fn: FactorNode, target_vn, incoming: dict, M: int, weights=None) -> np.ndarray:
    """FN->VN update: max* summary of log-factor plus weighted inputs.

    ``incoming`` maps each non-target neighbor VN to its log-message;
    ``weights`` optionally maps the same VNs to scalar message weights.
    """
    t = fn.neighbors.index(target_vn)
    others = [v for i, v in enumerate(fn.neighbors) if i != t]
    tab = fn.table(M)
    out = np.empty(M)
    for a in range(M):
        terms = []
        for assign in itertools.product(range(M), repeat=len(others)):
            full = list(assign[:t]) + [a] + list(assign[t:])
            val = tab[tuple(full)]
            for v, b in zip(others, assign):
                w = 1.0 if weights is None else weights.get(v, 1.0)
                val += w * incoming[v][b]
            terms.append(val)
        out[a] = maxstar(terms)
    return normalize(out)


@dataclass
class FactorGraph:
    """Bipartite graph: VNs over a size-M alphabet, FNs with lazy factors."""

    vn_count: int
    alphabet_size: int
    factors: list  # of FactorNode
    clamped: dict = field(default_factory=dict)  # vn -> forced symbol index

    def __post_init__(self):
        for fn in self.factors:
            for v in fn.neighbors:
                if not 0 <= v < self.vn_count:
                    raise ValueError(f"factor neighbor {v} out of range")

    def vn_neighbors(self, vn: int) -> list:
        return [j for j, fn in enumerate(self.factors) if vn in fn.neighbors]

    def clamp_message(self, vn: int) -> np.ndarray:
        msg = np.full(self.alphabet_size, CLAMP_NEG)
        msg[self.clamped[vn]] = 0.0
        return msg


def run_flooding(graph: FactorGraph, n_iters: int, weights=None):
    """Run N flooding iterations and return per-VN marginal probabilities.

    ``weights`` is an optional callable ``(n, fn_index, vn, direction)``
    with direction "v2f" or "f2v", returning the scalar weight of that
    message in iteration n (1-based); default all ones.  Returns an array
    (vn_count, M) of normalized beliefs.
    """
    if n_iters < 1:
        raise ValueError("need at least one iteration")
    M = graph.alphabet_size
    uniform = np.full(M, -math.log(M))

    def w(n, j, v, direction):
        return 1.0 if weights is None else weights(n, j, v, direction)

    # f2v[j][v] and v2f[j][v]: message tables per (factor j, neighbor v).
    f2v = {j: {v: uniform.copy() for v in fn.neighbors} for j, fn in enumerate(graph.factors)}
    vn_nbrs = [graph.vn_neighbors(v) for v in range(graph.vn_count)]

    for n in range(1, n_iters + 1):
        v2f = {j: {} for j in range(len(graph.factors))}
        for v in range(graph.vn_count):
            for j in vn_nbrs[v]:
                if v in graph.clamped:
                    v2f[j][v] = graph.clamp_message(v)
                else:
                    others = [f2v[j2][v] for j2 in vn_nbrs[v] if j2 != j]
                    msg = vn_update(others) if others else np.zeros(M)
                    v2f[j][v] = w(n, j, v, "v2f") * msg
        new_f2v = {j: {} for j in range(len(graph.factors))}
        for j, fn in enumerate(graph.factors):
            for v in fn.neighbors:
                incoming = {u: v2f[j][u] for u in fn.neighbors if u != v}
                msg = fn_update(fn, v, incoming, M)
                new_f2v[j][v] = w(n, j, v, "f2v") * msg
        f2v = new_f2v

    beliefs = np.zeros((graph.vn_count, M))
    for v in range(graph.vn_count):
        if v in graph.clamped:
            b = np.zeros(M)
            b[graph.clamped[v]] = 1.0
            beliefs[v] = b
            continue
        logb = np.zeros(M)
        for j in vn_nbrs[v]:
            logb = logb + f2v[j][v]
        logb = normalize(logb)
        b = np.exp(logb)
        beliefs[v] = b / np.sum(b)
    return beliefs
