"""Communication graphs: neighbor queries, connectivity, dwell windows."""

import numpy as np
import pytest

from liecoord.graphs import CommGraph, GraphError


def test_in_neighbors_complete():
    g = CommGraph.complete(3)
    assert g.in_neighbors(0) == [1, 2]
    assert g.in_neighbors(2) == [0, 1]


def test_in_neighbors_empty_and_chain():
    assert CommGraph.empty(3).in_neighbors(1) == []
    chain = CommGraph.static(3, [(0, 1), (1, 2)])
    assert chain.in_neighbors(2) == [1]
    assert chain.in_neighbors(0) == []


def test_in_neighbors_out_of_range():
    with pytest.raises(GraphError):
        CommGraph.complete(3).in_neighbors(3)


def test_rejects_self_loops_and_bad_ids():
    with pytest.raises(GraphError):
        CommGraph.static(3, [(1, 1)])
    with pytest.raises(GraphError):
        CommGraph.static(3, [(0, 5)])


def test_rejects_bad_schedule():
    with pytest.raises(GraphError):
        CommGraph(2, [(0.0, {(0, 1)}), (0.0, {(1, 0)})])
    with pytest.raises(GraphError):
        CommGraph(2, [(1.0, {(0, 1)})])
    with pytest.raises(GraphError):
        CommGraph(2, [(0.0, {(0, 1)}), (3.0, set())], period=2.0)


def test_in_matrix_convention():
    g = CommGraph.static(3, [(0, 1)])
    A = g.in_matrix(0.0)
    assert A[1, 0] == 1.0 and A.sum() == 1.0


def test_undirected_flag_and_symmetry():
    und = CommGraph.static(4, [(0, 1), (1, 2)], undirected=True)
    assert und.is_undirected
    for k in range(4):
        for j in und.in_neighbors(k):
            assert k in und.in_neighbors(j)
    assert not CommGraph.static(3, [(0, 1)]).is_undirected


def test_connected_undirected():
    assert CommGraph.complete(4).is_connected_undirected()
    assert not CommGraph.empty(3).is_connected_undirected()
    tree = CommGraph.static(5, [(0, 1), (1, 2), (1, 3), (3, 4)], undirected=True)
    assert tree.is_connected_undirected()
    two = CommGraph.static(4, [(0, 1), (2, 3)], undirected=True)
    assert not two.is_connected_undirected()


def test_connected_undirected_rejects_directed_or_scheduled():
    with pytest.raises(GraphError):
        CommGraph.static(3, [(0, 1), (1, 2)]).is_connected_undirected()
    sched = CommGraph(2, [(0.0, {(0, 1), (1, 0)}), (1.0, set())], period=2.0)
    with pytest.raises(GraphError):
        sched.is_connected_undirected()


def test_laplacian_and_connectivity():
    ring = CommGraph.ring(4)
    L = ring.laplacian()
    assert np.allclose(L, L.T)
    assert np.allclose(L.sum(axis=1), 0.0)
    assert ring.algebraic_connectivity() == pytest.approx(2.0)
    assert CommGraph.complete(4).algebraic_connectivity() == pytest.approx(4.0)


# -- uniform connectivity ------------------------------------------------------

def test_uniform_static_connected_any_windows():
    g = CommGraph.path(4)
    for delta, T in ((0.1, 0.5), (1.0, 2.0)):
        assert g.is_uniformly_connected(delta, T, horizon=10.0)


def test_uniform_static_empty_false():
    assert not CommGraph.empty(2).is_uniformly_connected(0.1, 1.0, 5.0)


def test_uniform_single_agent_trivially_true():
    assert CommGraph.empty(1).is_uniformly_connected(0.1, 1.0, 5.0)


def test_uniform_alternating_schedule():
    # 0->1 on [0,1), 1->2 on [1,2), repeating: root 0 reaches all in any
    # window of length 2 with dwell up to 1
    g = CommGraph(3, [(0.0, {(0, 1)}), (1.0, {(1, 2)})], period=2.0)
    assert g.is_uniformly_connected(0.5, 2.0, horizon=10.0)
    assert g.is_uniformly_connected(0.9, 2.0, horizon=10.0)
    # demanding a dwell longer than any activation fails
    assert not g.is_uniformly_connected(1.5, 2.0, horizon=10.0)
    # windows too short to contain both phases fail
    assert not g.is_uniformly_connected(0.5, 0.8, horizon=10.0)


def test_uniform_reversed_chain_has_root_two():
    g = CommGraph(3, [(0.0, {(1, 0)}), (1.0, {(2, 1)})], period=2.0)
    assert g.is_uniformly_connected(0.5, 2.0, horizon=10.0)


def test_uniform_matches_reachability_for_static():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        edges = set()
        for j in range(n):
            for k in range(n):
                if j != k and rng.random() < 0.4:
                    edges.add((j, k))
        g = CommGraph.static(n, edges)
        reachable = any(
            _reaches_all_from(n, edges, root) for root in range(n)
        )
        assert g.is_uniformly_connected(0.1, 1.0, horizon=3.0) == reachable


def _reaches_all_from(n, edges, root):
    seen = {root}
    frontier = [root]
    while frontier:
        x = frontier.pop()
        for j, k in edges:
            if j == x and k not in seen:
                seen.add(k)
                frontier.append(k)
    return len(seen) == n


def test_uniform_validates_durations():
    g = CommGraph.complete(2)
    with pytest.raises(GraphError):
        g.is_uniformly_connected(0.0, 1.0, 5.0)
    with pytest.raises(GraphError):
        g.is_uniformly_connected(2.0, 1.0, 5.0)
    with pytest.raises(GraphError):
        g.is_uniformly_connected(0.5, 6.0, 5.0)
