"""Balanced Forman curvature on undirected (symmetric, loop-free) adjacencies."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CandidateAlreadyEdge, EmptyGraph, NotAnEdge, ValidationError


@dataclass(frozen=True)
class EdgeStructure:
    d_i: int
    d_j: int
    triangles: int
    four_cycles_i: int
    four_cycles_j: int
    gamma_max: int


@dataclass(frozen=True)
class EdgeCurvature:
    ric: float
    raw: float  # value of the formula before the leaf-edge convention
    structure: EdgeStructure


@dataclass
class CurvatureReport:
    edges: dict[tuple[int, int], EdgeCurvature]
    min_edge: tuple[int, int]
    max_edge: tuple[int, int]

    def __getitem__(self, edge):
        i, j = edge
        return self.edges[(min(i, j), max(i, j))].ric

    def __len__(self):
        return len(self.edges)

    def rows(self):
        for (i, j), ec in sorted(self.edges.items()):
            s = ec.structure
            yield (i, j, ec.ric, s.d_i, s.d_j, s.triangles, s.four_cycles_i, s.four_cycles_j, s.gamma_max)


def _neighbours(S: np.ndarray, v: int) -> set[int]:
    return set(np.flatnonzero(S[v]).tolist())


def _as_adjacency(S) -> np.ndarray:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError("adjacency must be square")
    return S


def edge_structure(S, i: int, j: int) -> EdgeStructure:
    S = _as_adjacency(S)
    if i == j or not S[i, j]:
        raise NotAnEdge(f"({i}, {j}) is not an edge")
    ni, nj = _neighbours(S, i), _neighbours(S, j)
    common = ni & nj
    # endpoints of diagonal-free 4-cycles i-k-l-j: k adjacent to i only, l adjacent to j only
    only_i = ni - nj - {j}
    only_j = nj - ni - {i}
    gamma = 0
    sq_i = 0
    for k in only_i:
        carried = len(_neighbours(S, k) & only_j)
        if carried:
            sq_i += 1
            gamma = max(gamma, carried)
    sq_j = 0
    for l in only_j:
        carried = len(_neighbours(S, l) & only_i)
        if carried:
            sq_j += 1
            gamma = max(gamma, carried)
    return EdgeStructure(len(ni), len(nj), len(common), sq_i, sq_j, gamma)


def forman_from_structure(s: EdgeStructure) -> tuple[float, float]:
    """Return ``(ric, raw)``; ric is 0 on edges touching a degree-1 node."""
    d_max, d_min = max(s.d_i, s.d_j), min(s.d_i, s.d_j)
    raw = 2 / s.d_i + 2 / s.d_j - 2 + 2 * s.triangles / d_max + s.triangles / d_min
    if s.gamma_max > 0:
        raw += (s.four_cycles_i + s.four_cycles_j) / (s.gamma_max * d_max)
    return (0.0 if d_min == 1 else raw), raw


def balanced_forman(S, i: int, j: int) -> float:
    return forman_from_structure(edge_structure(S, i, j))[0]


def _edge_curvature(S, i, j) -> EdgeCurvature:
    s = edge_structure(S, i, j)
    ric, raw = forman_from_structure(s)
    return EdgeCurvature(ric, raw, s)


def curvature_report(S) -> CurvatureReport:
    """Curvature of every undirected edge, keyed ``(i, j)`` with ``i < j``."""
    S = _as_adjacency(S)
    iu, ju = np.nonzero(np.triu(S, 1))
    if len(iu) == 0:
        raise EmptyGraph("graph has no edges")
    edges = {(int(i), int(j)): _edge_curvature(S, int(i), int(j)) for i, j in zip(iu, ju)}
    keys = sorted(edges)
    # min/max scan in lexicographic order keeps the first edge among ties
    min_edge = min(keys, key=lambda e: edges[e].ric)
    max_edge = max(keys, key=lambda e: edges[e].ric)
    return CurvatureReport(edges, min_edge, max_edge)


def curvature_with_candidate(S, base_edge, candidate) -> float:
    """Curvature of ``base_edge`` after adding the undirected edge ``candidate``."""
    S = _as_adjacency(S)
    i, j = base_edge
    k, l = candidate
    if i == j or not S[i, j]:
        raise NotAnEdge(f"({i}, {j}) is not an edge")
    if k == l:
        raise ValidationError("candidate may not be a self-loop")
    if S[k, l]:
        raise CandidateAlreadyEdge(f"({k}, {l}) is already an edge")
    aug = S.copy()
    aug[k, l] = aug[l, k] = 1
    return balanced_forman(aug, i, j)


def save_report_csv(report: CurvatureReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("i,j,ric,d_i,d_j,triangles,sq_i,sq_j,gamma_max\n")
        for i, j, ric, *rest in report.rows():
            fh.write(f"{i},{j},{ric:.12g}," + ",".join(str(x) for x in rest) + "\n")
