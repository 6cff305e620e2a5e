"""Within-period and cross-period classification, and feature diversity."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ..corpus import Corpus
from ..estimation import EstimationConfig, estimate_hswlm
from ..langmodel import SparseLM, js_divergence, mle_entity, truncate
from .classifier import EvalReport, evaluate, merge_reports, train_linear
from .features import (EvaluationError, FeatureScheme, LabeledInstance, information_gain_weights,
                       label_of, make_scheme, tf_vector)
from .splits import kfold

SCHEMES = ("tf", "ig", "hswlm")


@dataclass(frozen=True)
class ClassifierSettings:
    epochs: int = 50
    learning_rate: float = 0.1
    seed: int = 42
    top_n: int = 1000
    label_depth: int | None = None
    estimation: EstimationConfig = field(default_factory=EstimationConfig)

    def scheme(self, name: str) -> FeatureScheme:
        return make_scheme(name, top_n=self.top_n, config=self.estimation)


def _train_eval(train: Corpus, train_leaves, test: Corpus, test_leaves, scheme: FeatureScheme,
                settings: ClassifierSettings, classes) -> EvalReport:
    scheme.fit(train, train_leaves, settings.label_depth)
    train_x = scheme.transform(train, train_leaves, settings.label_depth)
    test_x = scheme.transform(test, test_leaves, settings.label_depth)
    model = train_linear(train_x, settings.epochs, settings.learning_rate, settings.seed)
    return evaluate(model, test_x, classes)


def kfold_eval(corpus: Corpus, scheme: str, settings: ClassifierSettings | None = None, k: int = 5) -> EvalReport:
    """Stratified k-fold evaluation inside one corpus; resources refit per fold."""
    settings = settings or ClassifierSettings()
    leaves = corpus.hierarchy.leaves()
    labels = [label_of(corpus, leaf, settings.label_depth) for leaf in leaves]
    classes = sorted(set(labels))
    folds = kfold(leaves, labels, k, settings.seed)
    reports = []
    for f, test_leaves in enumerate(folds):
        train_leaves = [leaf for g, fold in enumerate(folds) if g != f for leaf in fold]
        reports.append(_train_eval(corpus, train_leaves, corpus, test_leaves,
                                   settings.scheme(scheme), settings, classes))
    return merge_reports(reports)


def cross_period_eval(train_corpus: Corpus, test_corpus: Corpus, scheme: str,
                      settings: ClassifierSettings | None = None) -> EvalReport:
    """Fit every resource on ``train_corpus``, score on ``test_corpus``."""
    settings = settings or ClassifierSettings()
    train_leaves = train_corpus.hierarchy.leaves()
    test_leaves = test_corpus.hierarchy.leaves()
    train_labels = {label_of(train_corpus, leaf, settings.label_depth) for leaf in train_leaves}
    test_labels = {label_of(test_corpus, leaf, settings.label_depth) for leaf in test_leaves}
    if train_labels != test_labels:
        raise EvaluationError(
            f"label spaces differ: {sorted(train_labels ^ test_labels)[:5]}")
    return _train_eval(train_corpus, train_leaves, test_corpus, test_leaves,
                       settings.scheme(scheme), settings, sorted(train_labels))


def transfer_table(periods: Mapping[str, Corpus], schemes: Sequence[str] = SCHEMES,
                   settings: ClassifierSettings | None = None, k: int = 5) -> dict:
    """Macro accuracy for every (train period, scheme, test period).

    Diagonal cells use k-fold inside the period, off-diagonal cells train on
    one period and test on the other.
    """
    settings = settings or ClassifierSettings()
    table = {}
    for train_name, train in periods.items():
        for scheme in schemes:
            for test_name, test in periods.items():
                if train_name == test_name:
                    rep = kfold_eval(train, scheme, settings, k)
                else:
                    rep = cross_period_eval(train, test, scheme, settings)
                table[(train_name, scheme, test_name)] = rep
    return table


def transfer_table_tsv(table: Mapping, periods: Sequence[str], schemes: Sequence[str] = SCHEMES) -> str:
    cols = [(s, p) for s in schemes for p in periods]
    lines = ["train\t" + "\t".join(f"{s}:{p}" for s, p in cols)]
    for train in periods:
        cells = [f"{table[(train, s, p)].macro_accuracy * 100:.12g}" for s, p in cols]
        lines.append(train + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"


# -- diversity ---------------------------------------------------------------

CASES = ("different_class_same_period", "same_class_different_period", "different_class_different_period")


def class_distributions(corpus: Corpus, settings: ClassifierSettings | None = None,
                        models=None) -> dict[str, dict[str, SparseLM]]:
    """Per-class term distributions under each weighting: scheme -> class -> model.

    TF is the pooled MLE of the class; IG weights each class term by
    IG(t) * p(t|class); HSWLM is the class's estimated model.
    """
    settings = settings or ClassifierSettings()
    leaves = corpus.hierarchy.leaves()
    labels = {leaf: label_of(corpus, leaf, settings.label_depth) for leaf in leaves}
    classes = sorted(set(labels.values()))
    ig = information_gain_weights(
        [LabeledInstance(leaf, tf_vector(corpus, leaf), labels[leaf]) for leaf in leaves])
    if models is None:
        models, _ = estimate_hswlm(corpus, settings.estimation)
    out: dict[str, dict[str, SparseLM]] = {"tf": {}, "ig": {}, "hswlm": {}}
    for c in classes:
        tf = mle_entity(corpus, c)
        out["tf"][c] = tf
        scored = {t: ig.get(t, 0.0) * p for t, p in tf.items()}
        out["ig"][c] = SparseLM(scored, normalize=True)
        out["hswlm"][c] = models[c]
    return out


@dataclass
class DiversityReport:
    rows: list[tuple[str, str, str, str, str, str, float]]  # scheme, case, period_a, class_a, period_b, class_b, jsd

    def mean(self, scheme: str, case: str) -> float:
        vals = [r[-1] for r in self.rows if r[0] == scheme and r[1] == case]
        return sum(vals) / len(vals) if vals else float("nan")

    def table(self) -> dict[str, dict[str, float]]:
        schemes = list(dict.fromkeys(r[0] for r in self.rows))
        return {case: {s: self.mean(s, case) for s in schemes} for case in CASES}

    def to_tsv(self) -> str:
        schemes = list(dict.fromkeys(r[0] for r in self.rows))
        lines = ["case\t" + "\t".join(schemes)]
        for case, vals in self.table().items():
            lines.append(case + "\t" + "\t".join(f"{vals[s]:.12g}" for s in schemes))
        return "\n".join(lines) + "\n"

    def pairs_tsv(self) -> str:
        lines = ["scheme\tcase\tperiod_a\tclass_a\tperiod_b\tclass_b\tjsd"]
        lines += ["\t".join(map(str, r[:-1])) + f"\t{r[-1]:.12g}" for r in self.rows]
        return "\n".join(lines) + "\n"


def diversity_report(distributions: Mapping[str, Mapping[str, Mapping[str, SparseLM]]],
                     top_k: int = 500) -> DiversityReport:
    """JS divergence between class distributions truncated to their top ``top_k`` terms.

    ``distributions`` maps period -> scheme -> class -> model. Every unordered
    pair of (period, class) keys is compared within each scheme.
    """
    rows = []
    periods = list(distributions)
    schemes = list(dict.fromkeys(s for p in periods for s in distributions[p]))
    for scheme in schemes:
        keys = [(p, c) for p in periods for c in sorted(distributions[p][scheme])]
        trunc = {key: truncate(distributions[key[0]][scheme][key[1]], top_k) for key in keys}
        for a, b in itertools.combinations(keys, 2):
            if a[0] == b[0]:
                case = CASES[0]
            elif a[1] == b[1]:
                case = CASES[1]
            else:
                case = CASES[2]
            rows.append((scheme, case, a[0], a[1], b[0], b[1], js_divergence(trunc[a], trunc[b])))
    return DiversityReport(rows)
