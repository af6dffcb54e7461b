import numpy as np
import pytest
from hypothesis import given, strategies as st

from causal_rewire.curvature import (
    balanced_forman,
    curvature_report,
    curvature_with_candidate,
    edge_structure,
    save_report_csv,
)
from causal_rewire.errors import CandidateAlreadyEdge, EmptyGraph, NotAnEdge
from oracles import barbell_k4, complete, cycle, forman_bruteforce, path, random_symmetric, star


def test_structure_k3():
    s = edge_structure(complete(3), 0, 1)
    assert (s.d_i, s.d_j, s.triangles, s.four_cycles_i, s.four_cycles_j, s.gamma_max) == (2, 2, 1, 0, 0, 0)


def test_structure_c4():
    s = edge_structure(cycle(4), 0, 1)
    assert (s.triangles, s.four_cycles_i, s.four_cycles_j, s.gamma_max) == (0, 1, 1, 1)


def test_structure_star():
    s = edge_structure(star(4), 0, 1)
    assert (s.triangles, s.four_cycles_i, s.four_cycles_j) == (0, 0, 0)


def test_not_an_edge():
    with pytest.raises(NotAnEdge):
        edge_structure(path(4), 0, 2)
    with pytest.raises(NotAnEdge):
        balanced_forman(path(4), 0, 3)


def test_fixture_values():
    assert balanced_forman(path(4), 1, 2) == 0.0
    assert balanced_forman(complete(3), 0, 1) == pytest.approx(1.5, abs=1e-15)
    assert balanced_forman(cycle(4), 0, 1) == pytest.approx(1.0, abs=1e-15)
    # leaf edges: 2/4 + 2/1 - 2 raw, reported as 0
    assert balanced_forman(star(4), 0, 1) == 0.0
    # bridge of two K4 blocks: degrees 4/4, no triangles or 4-cycles
    assert balanced_forman(barbell_k4(), 3, 4) == pytest.approx(-1.0, abs=1e-15)


def test_leaf_raw_value_is_logged():
    rep = curvature_report(star(4))
    ec = rep.edges[(0, 1)]
    assert ec.ric == 0.0 and ec.raw == pytest.approx(0.5)


def test_report_k3():
    rep = curvature_report(complete(3))
    assert len(rep) == 3
    assert all(ec.ric == pytest.approx(1.5) for ec in rep.edges.values())
    assert rep.min_edge == (0, 1) and rep.max_edge == (0, 1)


def test_report_disjoint_k3_p4():
    S = np.zeros((7, 7), dtype=np.int8)
    S[:3, :3] = complete(3)
    S[3:, 3:] = path(4)
    rep = curvature_report(S)
    assert len(rep) == 3 + 3
    assert rep.min_edge == (3, 4)  # P4 edges are all 0; lexicographic first
    assert rep[rep.min_edge] == 0.0
    assert rep.max_edge == (0, 1)


def test_report_empty():
    with pytest.raises(EmptyGraph):
        curvature_report(np.zeros((3, 3)))


def test_candidate_far_away_is_unchanged():
    S = np.zeros((9, 9), dtype=np.int8)
    S[:4, :4] = path(4)
    S[6, 7] = S[7, 6] = 1
    assert curvature_with_candidate(S, (1, 2), (7, 8)) == balanced_forman(S, 1, 2)


def test_candidate_closes_four_cycle():
    S = path(4)
    aug = S.copy()
    aug[0, 3] = aug[3, 0] = 1
    assert curvature_with_candidate(S, (1, 2), (0, 3)) == forman_bruteforce(aug, 1, 2) == pytest.approx(1.0)
    assert np.array_equal(S, path(4))  # input untouched


def test_candidate_errors():
    with pytest.raises(CandidateAlreadyEdge):
        curvature_with_candidate(path(4), (1, 2), (0, 1))
    with pytest.raises(NotAnEdge):
        curvature_with_candidate(path(4), (0, 2), (0, 3))


@given(st.integers(2, 10), st.sampled_from([0.2, 0.4, 0.6]), st.integers(0, 2**32 - 1))
def test_matches_bruteforce_and_bounds(n, p, seed):
    S = random_symmetric(np.random.default_rng(seed), n, p)
    if not S.any():
        return
    rep = curvature_report(S)
    for (i, j), ec in rep.edges.items():
        assert ec.ric == pytest.approx(forman_bruteforce(S, i, j), abs=1e-12)
        assert balanced_forman(S, j, i) == pytest.approx(ec.ric, abs=1e-12)
        assert ec.ric >= -2
        s = ec.structure
        assert (s.gamma_max == 0) == (s.four_cycles_i + s.four_cycles_j == 0)
        assert s.triangles <= min(s.d_i, s.d_j) - 1


def test_candidate_matches_full_recompute():
    rng = np.random.default_rng(99)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(3, 11))
        S = random_symmetric(rng, n, 0.4)
        edges = np.argwhere(np.triu(S, 1))
        non_edges = [(k, l) for k in range(n) for l in range(k + 1, n) if not S[k, l]]
        if not len(edges) or not non_edges:
            continue
        i, j = edges[rng.integers(len(edges))]
        k, l = non_edges[rng.integers(len(non_edges))]
        aug = S.copy()
        aug[k, l] = aug[l, k] = 1
        assert curvature_with_candidate(S, (i, j), (k, l)) == pytest.approx(
            curvature_report(aug)[(i, j)], abs=1e-12)
        checked += 1
    assert checked > 80


@given(st.integers(0, 2**32 - 1))
def test_locality(seed):
    rng = np.random.default_rng(seed)
    S = random_symmetric(rng, 10, 0.3)
    edges = np.argwhere(np.triu(S, 1))
    if not len(edges):
        return
    i, j = edges[0]
    near = set(np.flatnonzero(S[i])) | set(np.flatnonzero(S[j])) | {i, j}
    two_hop = set(near)
    for v in near:
        two_hop |= set(np.flatnonzero(S[v]))
    far = [v for v in range(10) if v not in two_hop]
    if len(far) < 2:
        return
    T = S.copy()
    a, b = far[:2]
    T[a, b] = T[b, a] = 1 - T[a, b]
    assert balanced_forman(T, i, j) == balanced_forman(S, i, j)


def test_report_csv(tmp_path):
    save_report_csv(curvature_report(complete(3)), tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "i,j,ric,d_i,d_j,triangles,sq_i,sq_j,gamma_max"
    assert lines[1:] == ["0,1,1.5,2,2,1,0,0,0", "0,2,1.5,2,2,1,0,0,0", "1,2,1.5,2,2,1,0,0,0"]
