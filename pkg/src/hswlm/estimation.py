"""Estimating hierarchical significant-words language models.

Every entity starts from its pooled MLE model. Each outer iteration then runs
a top-down specification pass (parsimonize against every ancestor, farthest
first) and a bottom-up generalization pass (parsimonize against the combined
descendants at each distance, farthest first), until no model moves by more
than ``outer_tolerance`` in L1.

Internally the models live in one dense ``entities x vocabulary`` matrix; the
public functions accept and return :class:`~hswlm.langmodel.ModelSet`.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .corpus import Corpus, Hierarchy
from .langmodel import EmptyModelError, ModelSet, SparseLM, mle_entity
from .parsimony import AllPrunedError, ParsimonyConfig, combine_background_rows, parsimonize_dense

logger = logging.getLogger(__name__)


class InitializationError(ValueError):
    pass


class EstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EstimationConfig:
    parsimony: ParsimonyConfig = field(default_factory=ParsimonyConfig)
    outer_tolerance: float = 1e-4
    max_outer_iters: int = 10
    floor: bool = False
    threads: int = 1

    def __post_init__(self):
        if not self.outer_tolerance > 0:
            raise ValueError("outer_tolerance must be > 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    stage: str
    entity: str
    l1_change: float
    support_size: int


@dataclass
class EstimationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def to_tsv(self) -> str:
        lines = ["iteration\tstage\tentity\tl1_change\tsupport_size"]
        for r in self.records:
            lines.append(f"{r.iteration}\t{r.stage}\t{r.entity}\t{r.l1_change:.12g}\t{r.support_size}")
        return "\n".join(lines) + "\n"


class _DenseModels:
    """Row-per-entity model matrix over a fixed sorted vocabulary."""

    def __init__(self, hierarchy: Hierarchy, terms: list[str], matrix: np.ndarray):
        self.hierarchy = hierarchy
        self.terms = terms
        self.row = {e: i for i, e in enumerate(hierarchy.bfs_order())}
        self.matrix = matrix

    @classmethod
    def from_modelset(cls, models: ModelSet, hierarchy: Hierarchy) -> "_DenseModels":
        missing = [e for e in hierarchy.bfs_order() if e not in models]
        if missing:
            raise ValueError(f"no model for entity {missing[0]!r}")
        terms = sorted(set().union(*(models[e] for e in hierarchy.bfs_order())))
        index = {t: i for i, t in enumerate(terms)}
        matrix = np.vstack([models[e].dense(index) for e in hierarchy.bfs_order()])
        return cls(hierarchy, terms, matrix)

    def to_modelset(self, iteration: int) -> ModelSet:
        out = {}
        terms = np.asarray(self.terms, dtype=object)
        for e, i in self.row.items():
            v = self.matrix[i]
            nz = np.flatnonzero(v)
            out[e] = SparseLM.from_arrays(terms[nz].tolist(), v[nz])
        return ModelSet(out, iteration)

    def copy(self) -> "_DenseModels":
        return _DenseModels(self.hierarchy, self.terms, self.matrix.copy())


def initialize(corpus: Corpus) -> ModelSet:
    """MLE model for every entity (root, internal and leaf)."""
    models = {}
    for e in corpus.hierarchy.bfs_order():
        try:
            models[e] = mle_entity(corpus, e)
        except EmptyModelError as exc:
            raise InitializationError(f"entity {e!r} has no tokens beneath it") from exc
    return ModelSet(models, 0)


def _parsimonize_row(state: _DenseModels, entity: str, target: np.ndarray, background: np.ndarray,
                     config: EstimationConfig) -> np.ndarray:
    try:
        out, _ = parsimonize_dense(target, background, config.parsimony)
    except AllPrunedError as exc:
        if not config.floor:
            raise EstimationError(f"every term of entity {entity!r} was pruned") from exc
        out = np.zeros_like(target)
        out[int(np.argmax(exc.theta))] = 1.0
    return out


def _specify_entity(state: _DenseModels, entity: str, config: EstimationConfig) -> np.ndarray:
    hier = state.hierarchy
    current = state.matrix[state.row[entity]]
    for l in range(hier.depth(entity), 0, -1):
        anc = hier.ancestor_at(entity, l)
        current = _parsimonize_row(state, entity, current, state.matrix[state.row[anc]], config)
    return current


def _generalize_entity(state: _DenseModels, entity: str, config: EstimationConfig) -> np.ndarray:
    hier = state.hierarchy
    current = state.matrix[state.row[entity]]
    for l in range(hier.height(entity), 0, -1):
        desc = hier.descendants_at(entity, l)
        rows = state.matrix[[state.row[d] for d in desc]]
        try:
            background = combine_background_rows(rows)
        except ValueError as exc:
            raise EstimationError(f"degenerate background for entity {entity!r} at distance {l}") from exc
        current = _parsimonize_row(state, entity, current, background, config)
    return current


def _run_levels(state: _DenseModels, levels: list[list[str]], work: Callable, stage: str,
                iteration: int, config: EstimationConfig, trace: EstimationTrace | None) -> float:
    """Apply ``work`` level by level; entities inside one level are independent."""
    worst = 0.0
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for level in levels:
            if pool is not None and len(level) > 1:
                results = list(pool.map(lambda e: work(state, e, config), level))
            else:
                results = [work(state, e, config) for e in level]
            for e, new in zip(level, results):
                i = state.row[e]
                change = _kernels.l1(new, state.matrix[i])
                state.matrix[i] = new
                worst = max(worst, change)
                if trace is not None:
                    trace.records.append(
                        TraceRecord(iteration, stage, e, change, int(np.count_nonzero(new))))
    finally:
        if pool is not None:
            pool.shutdown()
    return worst


def _specification(state, iteration, config, trace):
    # top-down by depth; the root has no ancestors and is left alone
    levels = state.hierarchy.by_depth()
    return _run_levels(state, levels, _specify_entity, "specification", iteration, config, trace)


def _generalization(state, iteration, config, trace):
    # bottom-up: popping a BFS-ordered stack visits deeper levels first
    levels = [list(reversed(level)) for level in reversed(state.hierarchy.by_depth())]
    return _run_levels(state, levels, _generalize_entity, "generalization", iteration, config, trace)


def specification_pass(models: ModelSet, hierarchy: Hierarchy, config: EstimationConfig | None = None) -> ModelSet:
    """One top-down pass parsimonizing each entity toward its ancestors."""
    config = config or EstimationConfig()
    state = _DenseModels.from_modelset(models, hierarchy)
    _specification(state, models.iteration, config, None)
    return state.to_modelset(models.iteration)


def generalization_pass(models: ModelSet, hierarchy: Hierarchy, config: EstimationConfig | None = None) -> ModelSet:
    """One bottom-up pass parsimonizing each entity toward its descendants."""
    config = config or EstimationConfig()
    state = _DenseModels.from_modelset(models, hierarchy)
    _generalization(state, models.iteration, config, None)
    return state.to_modelset(models.iteration)


def iterate(models: ModelSet, hierarchy: Hierarchy, config: EstimationConfig | None = None,
            trace: EstimationTrace | None = None) -> tuple[ModelSet, float]:
    """One specification + generalization round; returns the largest L1 move."""
    config = config or EstimationConfig()
    state = _DenseModels.from_modelset(models, hierarchy)
    before = state.matrix.copy()
    it = models.iteration + 1
    _specification(state, it, config, trace)
    _generalization(state, it, config, trace)
    moved = max((_kernels.l1(state.matrix[i], before[i]) for i in range(len(before))), default=0.0)
    return state.to_modelset(it), moved


def estimate_hswlm(corpus: Corpus, config: EstimationConfig | None = None) -> tuple[ModelSet, EstimationTrace]:
    """Full estimation: MLE initialisation, then alternate passes to a fixed point.

    Hitting ``max_outer_iters`` is not an error; ``trace.converged`` tells
    whether the tolerance was reached.
    """
    config = config or EstimationConfig()
    hier = corpus.hierarchy
    init = initialize(corpus)
    state = _DenseModels.from_modelset(init, hier)
    trace = EstimationTrace()
    n = len(state.matrix)
    for it in range(1, config.max_outer_iters + 1):
        before = state.matrix.copy()
        _specification(state, it, config, trace)
        _generalization(state, it, config, trace)
        moved = max(_kernels.l1(state.matrix[i], before[i]) for i in range(n))
        trace.iterations = it
        logger.debug("outer iteration %d: max L1 change %.3g", it, moved)
        if moved < config.outer_tolerance:
            trace.converged = True
            break
    return state.to_modelset(trace.iterations), trace
