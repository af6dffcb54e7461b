"""Causality-informed stochastic discrete Ricci flow.

Each iteration finds the most negatively curved edge of the symmetrised
graph, scores every supporting edge ``k -> l`` (``k`` in the closed ball of
one endpoint, ``l`` in the closed ball of the other) by its curvature gain
times the transfer entropy ``k -> l``, samples one edge from a tempered
softmax of those scores, and optionally prunes the most positively curved
edge when it is also causally weak.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .curvature import CurvatureReport, balanced_forman, curvature_report, curvature_with_candidate
from .entropy import TEMatrix
from .errors import EmptyCandidates, EmptyGraph, NoCandidates, NotAnEdge, ValidationError
from .graph import CausalGraph, symmetrized_view

# curvature sums of fractions can land a few ulps below an exact 0
RIC_TOL = 1e-12


@dataclass
class RewireConfig:
    tau: float = 20.0
    max_iterations: int | None = None  # None -> number of nodes
    c_plus: float | None = None
    c_minus: float | None = None
    seed: int = 0
    curvature_floor: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValidationError(f"tau must be > 0, got {self.tau}")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValidationError(f"max_iterations must be >= 0, got {self.max_iterations}")

    @property
    def removal_enabled(self) -> bool:
        return self.c_plus is not None and self.c_minus is not None


@dataclass
class IterationRecord:
    iteration: int
    bottleneck_edge: tuple[int, int]
    bottleneck_ric: float
    candidates: list[tuple[int, int, float]]
    sampled_edge: tuple[int, int]
    sampled_x: float
    bottleneck_ric_after_add: float
    removed_edge: tuple[int, int] | None = None
    removed_directed: list[tuple[int, int]] = field(default_factory=list)
    removed_ric: float | None = None
    removed_te: float | None = None

    @property
    def candidates_evaluated(self) -> int:
        return len(self.candidates)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["candidates_evaluated"] = self.candidates_evaluated
        return json.loads(json.dumps(d))  # tuples -> lists, stable for equality after reload


@dataclass
class RewiringLog:
    records: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = ""

    def __len__(self):
        return len(self.records)

    @property
    def removals(self) -> int:
        return sum(r.removed_edge is not None for r in self.records)

    def save_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            fh.write(json.dumps({"stop_reason": self.stop_reason}) + "\n")


def _closed_ball(S: np.ndarray, v: int) -> list[int]:
    return sorted(set(np.flatnonzero(S[v]).tolist()) | {v})


def candidate_improvements(g: CausalGraph, te: TEMatrix, bottleneck) -> list[tuple[tuple[int, int], float]]:
    """Score supporting edges ``(k, l)`` for the bottleneck ``(i, j)``.

    ``x_kl = (Ric after adding k-l - Ric before) * TE(k -> l)`` where the TE
    is read as ``te.values[l, k]`` (row = effect). Pairs that already exist
    as directed edges ``k -> l`` are skipped; a pair whose reverse exists
    does not change the undirected topology and scores 0.
    """
    i, j = bottleneck
    S = symmetrized_view(g)
    if i == j or not S[i, j]:
        raise NotAnEdge(f"({i}, {j}) is not an edge of the symmetrised graph")
    base = balanced_forman(S, i, j)
    out = []
    for k in _closed_ball(S, i):
        for l in _closed_ball(S, j):
            if k == l or g.adj[l, k]:
                continue
            if S[k, l]:
                gain = 0.0
            else:
                gain = curvature_with_candidate(S, (i, j), (k, l)) - base
            out.append(((k, l), gain * float(te.values[l, k])))
    if not out:
        raise NoCandidates(f"no candidate edges around ({i}, {j})")
    return out


def softmax_probabilities(x, tau: float) -> np.ndarray:
    z = tau * np.asarray(x, dtype=float)
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def sample_edge(candidates, tau: float, rng: np.random.Generator) -> tuple[int, int]:
    if not candidates:
        raise EmptyCandidates("cannot sample from an empty candidate list")
    probs = softmax_probabilities([x for _, x in candidates], tau)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return tuple(candidates[min(idx, len(candidates) - 1)][0])


def removal_step(g: CausalGraph, te: TEMatrix, report: CurvatureReport, c_plus, c_minus):
    """Drop the most positively curved edge if it is also causally weak.

    Mutates ``g.adj``. The TE of an undirected pair is the largest TE over
    its present directed edges, so an edge with TE >= ``c_minus`` in either
    direction is never removed. Returns ``(pair, directed_removed, ric, te)``
    or ``None``.
    """
    if c_plus is None or c_minus is None:
        return None
    i, j = report.max_edge
    ric = report.edges[(i, j)].ric
    present = [(src, dst) for src, dst in ((j, i), (i, j)) if g.adj[dst, src]]
    weight = max(float(te.values[dst, src]) for src, dst in present)
    if ric > c_plus and weight < c_minus:
        for src, dst in present:
            g.adj[dst, src] = 0
        return (i, j), present, ric, weight
    return None


def rewire(g: CausalGraph, te: TEMatrix, cfg: RewireConfig) -> tuple[CausalGraph, RewiringLog]:
    if g.edge_count == 0:
        raise EmptyGraph("cannot rewire a graph without edges")
    out = g.copy()
    log = RewiringLog()
    rng = np.random.default_rng(cfg.seed)
    budget = g.n if cfg.max_iterations is None else cfg.max_iterations
    log.stop_reason = "max_iterations"
    for it in range(budget):
        S = symmetrized_view(out)
        if not S.any():
            log.stop_reason = "empty_graph"
            break
        report = curvature_report(S)
        i, j = report.min_edge
        ric = report.edges[(i, j)].ric
        if ric >= cfg.curvature_floor - RIC_TOL:
            log.stop_reason = "curvature_floor"
            break
        try:
            candidates = candidate_improvements(out, te, (i, j))
        except NoCandidates:
            log.stop_reason = "no_candidates"
            break
        if max(x for _, x in candidates) <= 0:
            log.stop_reason = "no_positive_candidate"
            break
        k, l = sample_edge(candidates, cfg.tau, rng)
        x_kl = dict(candidates)[(k, l)]
        out.adj[l, k] = 1
        rec = IterationRecord(
            iteration=it,
            bottleneck_edge=(i, j),
            bottleneck_ric=ric,
            candidates=[(a, b, x) for (a, b), x in candidates],
            sampled_edge=(k, l),
            sampled_x=x_kl,
            bottleneck_ric_after_add=balanced_forman(symmetrized_view(out), i, j),
        )
        if cfg.removal_enabled:
            removed = removal_step(out, te, curvature_report(symmetrized_view(out)), cfg.c_plus, cfg.c_minus)
            if removed is not None:
                rec.removed_edge, rec.removed_directed, rec.removed_ric, rec.removed_te = removed
        log.records.append(rec)
    out.rewired = True
    out.rewiring_log = [r.to_dict() for r in log.records]
    return out, log
