"""Parsimonization of a language model against one or more backgrounds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .langmodel import EmptyModelError, SparseLM


class AllPrunedError(ValueError):
    """Pruning removed every term of a parsimonized model."""

    def __init__(self, message: str, theta=None, entity: str | None = None):
        super().__init__(message)
        self.theta = theta
        self.entity = entity


class DegenerateBackgroundError(ValueError):
    pass


@dataclass(frozen=True)
class ParsimonyConfig:
    """EM settings.

    ``lam`` weighs the model being re-estimated against the background;
    lower values strip more mass.
    """

    lam: float = 0.1
    em_tolerance: float = 1e-6
    max_em_iters: int = 50
    prune_epsilon: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam!r}")
        if not self.em_tolerance > 0:
            raise ValueError("em_tolerance must be > 0")
        if self.max_em_iters < 1:
            raise ValueError("max_em_iters must be >= 1")
        if self.prune_epsilon < 0:
            raise ValueError("prune_epsilon must be >= 0")


def combine_background_rows(rows: np.ndarray) -> np.ndarray:
    """Normalised product-sum combination of dense background rows."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] == 0:
        raise ValueError("need at least one background model")
    if rows.shape[0] == 1:
        return rows[0].copy()
    score = _kernels.combine_rows(rows)
    total = score.sum()
    if not total > 0:
        raise DegenerateBackgroundError("every term carries probability one in two or more backgrounds")
    return score / total


def combine_backgrounds(models: Sequence[SparseLM]) -> SparseLM:
    """Merge background models so that terms specific to one of them dominate.

    A term scores high when it is likely under one model and unlikely under
    all the others; the scores are then normalised. A single model is
    returned unchanged.
    """
    models = list(models)
    if not models:
        raise ValueError("need at least one background model")
    if len(models) == 1:
        return models[0]
    terms = sorted(set().union(*models))
    index = {t: i for i, t in enumerate(terms)}
    rows = np.vstack([m.dense(index) for m in models])
    return SparseLM.from_arrays(terms, combine_background_rows(rows))


def parsimonize_dense(target: np.ndarray, background: np.ndarray, config: ParsimonyConfig,
                      *, prune: bool = True) -> tuple[np.ndarray, int]:
    """Parsimonize aligned dense vectors; zeros in ``target`` stay zero.

    Returns the new dense vector (normalised, pruned) and the number of EM
    iterations run. Raises :class:`AllPrunedError` carrying the unpruned
    estimate when nothing survives pruning.
    """
    support = np.flatnonzero(target > 0)
    if support.size == 0:
        raise EmptyModelError("cannot parsimonize an empty model")
    theta, n_iter = _kernels.em_parsimonize(
        target[support], background[support], config.lam, config.em_tolerance, config.max_em_iters)
    out = np.zeros_like(target, dtype=np.float64)
    out[support] = theta
    if prune and config.prune_epsilon > 0:
        keep = out >= config.prune_epsilon
        if not keep.any():
            raise AllPrunedError("every term fell below the pruning threshold", theta=out)
        out = np.where(keep, out, 0.0)
        out /= out.sum()
    return out, n_iter


def parsimonize(target: SparseLM, background: SparseLM, config: ParsimonyConfig,
                *, prune: bool = True) -> SparseLM:
    """Re-estimate ``target`` with the mass explained by ``background`` removed.

    The EM starts from ``target`` and only ever redistributes mass within its
    support, so terms found only in the background never enter the result.
    """
    if len(target) == 0:
        raise EmptyModelError("cannot parsimonize an empty model")
    terms = list(target)
    t = np.fromiter(target.values(), dtype=np.float64, count=len(terms))
    b = np.fromiter((background.prob(x) for x in terms), dtype=np.float64, count=len(terms))
    out, _ = parsimonize_dense(t, b, config, prune=prune)
    keep = out > 0
    return SparseLM.from_arrays([x for x, k in zip(terms, keep) if k], out[keep])
