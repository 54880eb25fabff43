import itertools
import math

import numpy as np
import pytest

from fgdetect import spa


def random_tree_graph(rng, n_vn, M):
    """Random tree-structured pairwise graph plus some unary factors."""
    factors = []
    tables = []
    for v in range(1, n_vn):
        parent = int(rng.integers(0, v))
        tab = rng.standard_normal((M, M))
        factors.append(spa.FactorNode([parent, v], lambda a, t=tab: t[a]))
        tables.append(([parent, v], tab))
    for v in range(n_vn):
        if rng.random() < 0.5:
            tab = rng.standard_normal(M)
            factors.append(spa.FactorNode([v], lambda a, t=tab: t[a]))
            tables.append(([v], tab))
    return spa.FactorGraph(n_vn, M, factors), tables


def exhaustive_marginals(n_vn, M, tables, clamped=None):
    logp = np.zeros((M,) * n_vn)
    for assign in itertools.product(range(M), repeat=n_vn):
        s = 0.0
        for neighbors, tab in tables:
            s += tab[tuple(assign[v] for v in neighbors)]
        logp[assign] = s
    p = np.exp(logp - logp.max())
    if clamped:
        for v, a in clamped.items():
            sel = [slice(None)] * n_vn
            mask = np.zeros(M)
            mask[a] = 1.0
            shape = [1] * n_vn
            shape[v] = M
            p = p * mask.reshape(shape)
    p /= p.sum()
    out = np.zeros((n_vn, M))
    for v in range(n_vn):
        out[v] = p.sum(axis=tuple(a for a in range(n_vn) if a != v))
    return out


def test_maxstar_matches_logsumexp():
    rng = np.random.default_rng(0)
    for _ in range(50):
        vals = rng.standard_normal(rng.integers(1, 8)) * 10
        expect = math.log(np.exp(vals - vals.max()).sum()) + vals.max()
        assert spa.maxstar(vals.tolist()) == pytest.approx(expect, abs=1e-12)


def test_maxstar_single_and_extreme():
    assert spa.maxstar([3.5]) == 3.5
    # no overflow for widely separated values
    assert spa.maxstar([1000.0, -1000.0]) == pytest.approx(1000.0)
    with pytest.raises(ValueError):
        spa.maxstar([])


def test_normalize():
    msg = np.array([-3.0, 1.0, 0.5])
    out = spa.normalize(msg)
    assert out.max() == 0.0
    assert np.allclose(out, msg - 1.0)


def test_tree_exactness_small():
    rng = np.random.default_rng(1)
    for trial in range(20):
        n_vn = int(rng.integers(2, 6))
        M = int(rng.integers(2, 5))
        graph, tables = random_tree_graph(rng, n_vn, M)
        beliefs = spa.run_flooding(graph, n_vn + 2)
        exact = exhaustive_marginals(n_vn, M, tables)
        assert np.abs(beliefs - exact).max() < 1e-8


def test_clamped_vn():
    rng = np.random.default_rng(2)
    M = 3
    tab = rng.standard_normal((M, M))
    graph = spa.FactorGraph(2, M, [spa.FactorNode([0, 1], lambda a: tab[a])],
                            clamped={0: 2})
    beliefs = spa.run_flooding(graph, 4)
    assert np.argmax(beliefs[0]) == 2
    assert beliefs[0, 2] == pytest.approx(1.0)
    cond = np.exp(tab[2] - tab[2].max())
    assert np.allclose(beliefs[1], cond / cond.sum(), atol=1e-10)


def test_factor_shift_invariance():
    # adding a constant to a log-factor leaves beliefs unchanged
    rng = np.random.default_rng(3)
    M = 2
    tabs = [rng.standard_normal((M, M)) for _ in range(2)]
    factors = [spa.FactorNode([i, i + 1], lambda a, t=t: t[a]) for i, t in enumerate(tabs)]
    b1 = spa.run_flooding(spa.FactorGraph(3, M, factors), 5)
    shifted = [spa.FactorNode([i, i + 1], lambda a, t=t: t[a] + 7.0)
               for i, t in enumerate(tabs)]
    b2 = spa.run_flooding(spa.FactorGraph(3, M, shifted), 5)
    assert np.allclose(b1, b2, atol=1e-12)


def test_unit_weights_are_identity():
    rng = np.random.default_rng(4)
    M = 2
    tabs = [rng.standard_normal((M, M)) for _ in range(3)]
    factors = [spa.FactorNode([i, i + 1], lambda a, t=t: t[a]) for i, t in enumerate(tabs)]
    graph = spa.FactorGraph(4, M, factors)
    b1 = spa.run_flooding(graph, 6)
    b2 = spa.run_flooding(graph, 6, weights=lambda n, j, v, d: 1.0)
    assert np.array_equal(b1, b2)


def test_nonunit_weights_change_beliefs():
    rng = np.random.default_rng(5)
    M = 2
    # a cycle so messages actually interact over iterations
    tabs = [rng.standard_normal((M, M)) for _ in range(3)]
    factors = [spa.FactorNode([0, 1], lambda a: tabs[0][a]),
               spa.FactorNode([1, 2], lambda a: tabs[1][a]),
               spa.FactorNode([2, 0], lambda a: tabs[2][a])]
    graph = spa.FactorGraph(3, M, factors)
    b1 = spa.run_flooding(graph, 6)
    b2 = spa.run_flooding(graph, 6, weights=lambda n, j, v, d: 0.5)
    assert np.abs(b1 - b2).max() > 1e-6


def test_run_flooding_argument_validation():
    graph = spa.FactorGraph(1, 2, [spa.FactorNode([0], lambda a: 0.0)])
    with pytest.raises(ValueError):
        spa.run_flooding(graph, 0)
    with pytest.raises(ValueError):
        spa.FactorGraph(1, 2, [spa.FactorNode([1], lambda a: 0.0)])
