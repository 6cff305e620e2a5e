"""Feature weighting schemes: raw TF, IG-selected TF and HSWLM-weighted TF."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..corpus import Corpus
from ..estimation import EstimationConfig, estimate_hswlm
from ..langmodel import SparseLM


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledInstance:
    id: str
    features: Mapping[str, float]
    label: str


def l2_normalize(weights: Mapping[str, float]) -> dict[str, float]:
    norm = math.sqrt(math.fsum(w * w for w in weights.values()))
    if norm == 0:
        return {}
    return {t: w / norm for t, w in sorted(weights.items()) if w > 0}


def label_of(corpus: Corpus, leaf: str, label_depth: int | None = None) -> str:
    """Class of ``leaf``: its ancestor at ``label_depth`` (default: its parent)."""
    hier = corpus.hierarchy
    d = hier.depth(leaf)
    if label_depth is None:
        label_depth = d - 1
    if not 0 <= label_depth < d:
        raise EvaluationError(f"leaf {leaf!r} at depth {d} has no ancestor at depth {label_depth}")
    return hier.ancestor_at(leaf, d - label_depth)


def _entropy(counts: Iterable[int]) -> float:
    counts = [c for c in counts if c]
    n = sum(counts)
    if n == 0:
        return 0.0
    return -math.fsum(c / n * math.log2(c / n) for c in counts)


def information_gain_weights(instances: Sequence[LabeledInstance]) -> dict[str, float]:
    """IG (bits) of term presence with respect to the class label."""
    labels = Counter(x.label for x in instances)
    if len(labels) < 2:
        raise EvaluationError("information gain needs at least two classes")
    n = len(instances)
    h_class = _entropy(labels.values())
    present: dict[str, Counter] = {}
    for x in instances:
        for t, w in x.features.items():
            if w > 0:
                present.setdefault(t, Counter())[x.label] += 1
    out = {}
    for t, with_t in sorted(present.items()):
        n_with = sum(with_t.values())
        without = [labels[c] - with_t.get(c, 0) for c in labels]
        h_cond = n_with / n * _entropy(with_t.values()) + (n - n_with) / n * _entropy(without)
        out[t] = max(0.0, h_class - h_cond)
    return out


def tf_vector(corpus: Corpus, leaf: str) -> dict[str, float]:
    return {t: float(c) for t, c in sorted(corpus.leaf_counts(leaf).items())}


class FeatureScheme:
    """Turns leaves into labelled, L2-normalised feature vectors.

    Subclasses fit their resources on a training corpus only; ``transform``
    then never looks at anything but the leaf's own text.
    """

    name = "base"

    def fit(self, corpus: Corpus, leaves: Sequence[str], label_depth: int | None = None) -> "FeatureScheme":
        return self

    def weights(self, tf: Mapping[str, float]) -> dict[str, float]:
        raise NotImplementedError

    def transform(self, corpus: Corpus, leaves: Sequence[str], label_depth: int | None = None) -> list[LabeledInstance]:
        return [LabeledInstance(leaf, l2_normalize(self.weights(tf_vector(corpus, leaf))),
                                label_of(corpus, leaf, label_depth))
                for leaf in leaves]


class TfScheme(FeatureScheme):
    name = "tf"

    def weights(self, tf):
        return dict(tf)


@dataclass
class IgScheme(FeatureScheme):
    top_n: int = 1000
    scores: dict[str, float] = field(default_factory=dict)
    selected: frozenset = frozenset()
    name = "ig"

    def fit(self, corpus, leaves, label_depth=None):
        raw = [LabeledInstance(leaf, tf_vector(corpus, leaf), label_of(corpus, leaf, label_depth))
               for leaf in leaves]
        self.scores = information_gain_weights(raw)
        ranked = sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))[: self.top_n]
        self.selected = frozenset(t for t, s in ranked if s > 0)
        if not self.selected:
            raise EvaluationError("no term carries information about the labels")
        return self

    def weights(self, tf):
        return {t: w for t, w in tf.items() if t in self.selected}


@dataclass
class HswlmScheme(FeatureScheme):
    """Weight a term by its count times its summed probability in the class HSWLMs."""

    config: EstimationConfig = field(default_factory=EstimationConfig)
    class_models: dict[str, SparseLM] = field(default_factory=dict)
    term_weight: dict[str, float] = field(default_factory=dict)
    name = "hswlm"

    def fit(self, corpus, leaves, label_depth=None):
        train = corpus.restrict_leaves(leaves)
        models, _ = estimate_hswlm(train, self.config)
        classes = sorted({label_of(train, leaf, label_depth) for leaf in leaves})
        self.class_models = {c: models[c] for c in classes}
        acc: dict[str, float] = {}
        for m in self.class_models.values():
            for t, p in m.items():
                acc[t] = acc.get(t, 0.0) + p
        if not acc:
            raise EvaluationError("HSWLM class models are empty")
        self.term_weight = dict(sorted(acc.items()))
        return self

    def weights(self, tf):
        return {t: w * self.term_weight[t] for t, w in tf.items() if t in self.term_weight}


def make_scheme(name: str, *, top_n: int = 1000, config: EstimationConfig | None = None) -> FeatureScheme:
    if name == "tf":
        return TfScheme()
    if name == "ig":
        return IgScheme(top_n=top_n)
    if name == "hswlm":
        return HswlmScheme(config=config or EstimationConfig())
    raise ValueError(f"unknown scheme {name!r}")


def build_features(corpus: Corpus, leaves: Sequence[str], scheme: FeatureScheme,
                   label_depth: int | None = None) -> list[LabeledInstance]:
    """Feature vectors for ``leaves`` under an already fitted ``scheme``."""
    return scheme.transform(corpus, leaves, label_depth)


def features_to_tsv(instances: Sequence[LabeledInstance]) -> str:
    lines = ["id\tlabel\tfeatures"]
    for x in instances:
        feats = " ".join(f"{t}:{w:.12g}" for t, w in x.features.items())
        lines.append(f"{x.id}\t{x.label}\t{feats}")
    return "\n".join(lines) + "\n"
