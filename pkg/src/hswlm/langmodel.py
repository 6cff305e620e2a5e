"""Sparse, normalised term distributions and the operations on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .corpus import Corpus

NORM_TOL = 1e-9


class EmptyModelError(ValueError):
    pass


class SparseLM(Mapping):
    """Immutable probability distribution over terms.

    Only strictly positive entries are stored; looking up an absent term
    gives 0.0 through :meth:`prob` (and ``KeyError`` through ``[]``, as for
    any mapping). Entries are kept in term order so iteration is
    deterministic.

    Parameters
    ----------
    probs : mapping of str to float
        Term probabilities. Zeros are dropped, negatives rejected.
    normalize : bool
        Rescale to sum to one instead of validating the sum.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs: Mapping[str, float] | Iterable[tuple[str, float]], *, normalize: bool = False):
        items = probs.items() if isinstance(probs, Mapping) else probs
        clean = {}
        for term, p in items:
            p = float(p)
            if not math.isfinite(p) or p < 0:
                raise ValueError(f"invalid probability {p!r} for term {term!r}")
            if p > 0:
                clean[term] = p
        if not clean:
            raise EmptyModelError("a language model needs at least one term with positive mass")
        total = math.fsum(clean.values())
        if normalize:
            clean = {t: p / total for t, p in clean.items()}
        elif abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self._probs = MappingProxyType(dict(sorted(clean.items())))

    @classmethod
    def from_counts(cls, counts: Mapping[str, float]) -> "SparseLM":
        return cls(counts, normalize=True)

    @classmethod
    def from_arrays(cls, terms, values, *, normalize: bool = True) -> "SparseLM":
        return cls(zip(terms, np.asarray(values, dtype=float).tolist()), normalize=normalize)

    def __getitem__(self, term: str) -> float:
        return self._probs[term]

    def __iter__(self):
        return iter(self._probs)

    def __len__(self) -> int:
        return len(self._probs)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SparseLM):
            return dict(self._probs) == dict(other._probs)
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._probs.items()))

    def __repr__(self) -> str:
        head = ", ".join(f"{t!r}: {p:.4g}" for t, p in list(self._probs.items())[:5])
        more = ", ..." if len(self) > 5 else ""
        return f"SparseLM({{{head}{more}}}, support={len(self)})"

    @property
    def support_size(self) -> int:
        return len(self._probs)

    def prob(self, term: str) -> float:
        return self._probs.get(term, 0.0)

    def as_dict(self) -> dict[str, float]:
        return dict(self._probs)

    def dense(self, index: Mapping[str, int], size: int | None = None) -> np.ndarray:
        """Probabilities laid out on a term index; terms outside it are dropped."""
        out = np.zeros(len(index) if size is None else size)
        for t, p in self._probs.items():
            i = index.get(t)
            if i is not None:
                out[i] = p
        return out


@dataclass(frozen=True)
class ModelSet:
    models: Mapping[str, SparseLM]
    iteration: int = 0

    def __post_init__(self):
        object.__setattr__(self, "models", MappingProxyType(dict(self.models)))

    def __getitem__(self, entity_id: str) -> SparseLM:
        return self.models[entity_id]

    def __contains__(self, entity_id: object) -> bool:
        return entity_id in self.models

    def __iter__(self):
        return iter(self.models)

    def __len__(self) -> int:
        return len(self.models)

    def replace(self, updates: Mapping[str, SparseLM], iteration: int | None = None) -> "ModelSet":
        merged = dict(self.models)
        merged.update(updates)
        return ModelSet(merged, self.iteration if iteration is None else iteration)


def mle_entity(corpus: Corpus, entity: str) -> SparseLM:
    """Pooled maximum-likelihood model of everything below ``entity``."""
    counts = corpus.counts(entity)
    if not counts:
        raise EmptyModelError(f"entity {entity!r} has no tokens beneath it")
    return SparseLM.from_counts(counts)


def mixture(p: SparseLM, q: SparseLM, lam: float) -> SparseLM:
    """``lam * p + (1 - lam) * q``."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"mixture weight must lie in (0, 1), got {lam!r}")
    terms = sorted(set(p) | set(q))
    return SparseLM({t: lam * p.prob(t) + (1.0 - lam) * q.prob(t) for t in terms}, normalize=True)


def _kl_to_midpoint(p: SparseLM, q: SparseLM) -> float:
    acc = []
    for t, pt in p.items():
        m = 0.5 * (pt + q.prob(t))
        acc.append(pt * math.log2(pt / m))
    return math.fsum(acc)


def js_divergence(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """Jensen-Shannon divergence in bits; 0 for equal, 1 for disjoint models."""
    if not isinstance(p, SparseLM):
        p = SparseLM(p)
    if not isinstance(q, SparseLM):
        q = SparseLM(q)
    jsd = 0.5 * _kl_to_midpoint(p, q) + 0.5 * _kl_to_midpoint(q, p)
    return min(1.0, max(0.0, jsd))


def l1_distance(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    terms = set(p) | set(q)
    return math.fsum(abs(p.get(t, 0.0) - q.get(t, 0.0)) for t in terms)


def top_k(p: Mapping[str, float], k: int) -> list[tuple[str, float]]:
    """The ``k`` most probable terms, ties broken lexicographically."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return sorted(p.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def truncate(p: Mapping[str, float], k: int) -> SparseLM:
    """Renormalised distribution over the top ``k`` terms of ``p``."""
    return SparseLM(top_k(p, k), normalize=True)
