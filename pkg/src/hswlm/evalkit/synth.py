"""Planted-vocabulary corpora with a known answer.

Every entity owns a disjoint set of planted terms, the root's set being the
shared general vocabulary. A document under a leaf draws each token by first
picking a layer according to ``proportions`` and then a term uniformly from
the planted set of the leaf's ancestor on that layer. A second period is
produced by rotating the layer-2 entities to the next layer-1 parent (a
government/opposition swap for two statuses) while keeping all vocabularies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import Corpus, Document, Hierarchy

ROOT = "root"


@dataclass(frozen=True)
class SynthSpec:
    fanouts: tuple[int, ...] = (2, 3, 5)
    planted_terms: int = 20
    general_terms: int = 100
    docs_per_leaf: int = 20
    doc_length: int = 50
    # general, then one weight per layer below the root
    proportions: tuple[float, ...] = (0.2, 0.6, 0.15, 0.05)
    periods: int = 2
    seed: int = 42

    def __post_init__(self):
        counts = (*self.fanouts, self.planted_terms, self.general_terms,
                  self.docs_per_leaf, self.doc_length, self.periods)
        if not self.fanouts or any(c < 1 for c in counts):
            raise ValueError("all counts must be >= 1")
        if len(self.proportions) != len(self.fanouts) + 1:
            raise ValueError("need one proportion for the general set plus one per layer")
        if any(p < 0 for p in self.proportions) or abs(sum(self.proportions) - 1.0) > 1e-9:
            raise ValueError("proportions must be non-negative and sum to 1")


@dataclass
class SynthCorpus:
    periods: dict[str, Corpus]
    planted: dict[str, frozenset]
    labels: dict[str, str] = field(default_factory=dict)
    layers: dict[str, int] = field(default_factory=dict)


def entity_id(layer: int, index: int) -> str:
    return f"n{layer}x{index}"


def _planted_sets(spec: SynthSpec) -> tuple[list[list[str]], dict[str, frozenset]]:
    planted = {ROOT: frozenset(f"gen{k:03d}" for k in range(spec.general_terms))}
    layers = [[ROOT]]
    n = 1
    for layer, fan in enumerate(spec.fanouts, 1):
        n *= fan
        ids = [entity_id(layer, i) for i in range(n)]
        layers.append(ids)
        for e in ids:
            planted[e] = frozenset(f"{e}t{k:02d}" for k in range(spec.planted_terms))
    return layers, planted


def _hierarchy(spec: SynthSpec, layers: list[list[str]], shift: int) -> Hierarchy:
    edges: list[tuple[str, str | None]] = [(ROOT, None)]
    for layer in range(1, len(layers)):
        fan = spec.fanouts[layer - 1]
        parents = layers[layer - 1]
        for i, e in enumerate(layers[layer]):
            p = i // fan
            if layer == 2 and shift:
                p = (p + shift) % len(parents)
            edges.append((e, parents[p]))
    # parents listed before children keeps declaration order stable
    edges.sort(key=lambda ec: 0 if ec[1] is None else 1 + int(ec[0][1:ec[0].index("x")]))
    return Hierarchy.from_edges(edges)


def synth_corpus(spec: SynthSpec) -> SynthCorpus:
    """Generate one corpus per period plus the planted term sets."""
    layers, planted = _planted_sets(spec)
    sorted_sets = {e: sorted(s) for e, s in planted.items()}
    rng = np.random.default_rng(spec.seed)
    props = np.asarray(spec.proportions, dtype=float)
    periods = {}
    for period in range(spec.periods):
        hier = _hierarchy(spec, layers, period)
        docs = {}
        for leaf in hier.leaves():
            chain = [ROOT]
            for l in range(hier.depth(leaf) - 1, -1, -1):
                chain.append(hier.ancestor_at(leaf, l) if l else leaf)
            vocab = [t for e in chain for t in sorted_sets[e]]
            weights = np.concatenate([np.full(len(sorted_sets[e]), props[i] / len(sorted_sets[e]))
                                      for i, e in enumerate(chain)])
            weights /= weights.sum()
            for d in range(spec.docs_per_leaf):
                draw = rng.choice(len(vocab), size=spec.doc_length, p=weights)
                doc_id = f"p{period}{leaf}d{d:03d}"
                docs[doc_id] = Document(doc_id, leaf, tuple(vocab[j] for j in draw))
        periods[f"period{period}"] = Corpus(hier, docs)
    labels = {}
    depth_of = {e: l for l, ids in enumerate(layers) for e in ids}
    if len(layers) > 2:
        label_layer = len(layers) - 2
        first = next(iter(periods.values())).hierarchy
        for leaf in layers[-1]:
            labels[leaf] = first.ancestor_at(leaf, len(layers) - 1 - label_layer)
    return SynthCorpus(periods, planted, labels, depth_of)
