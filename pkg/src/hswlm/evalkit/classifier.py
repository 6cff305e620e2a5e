"""One-vs-rest linear classifier trained with hinge-loss SGD."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .features import EvaluationError, LabeledInstance


@dataclass
class LinearModel:
    classes: list[str]
    vocabulary: dict[str, int]
    weights: np.ndarray  # classes x features
    bias: np.ndarray

    def _matrix(self, instances: Sequence[LabeledInstance]) -> np.ndarray:
        X = np.zeros((len(instances), len(self.vocabulary)))
        for i, x in enumerate(instances):
            for t, w in x.features.items():
                j = self.vocabulary.get(t)
                if j is not None:
                    X[i, j] = w
        return X

    def decision(self, instances: Sequence[LabeledInstance]) -> np.ndarray:
        return self._matrix(instances) @ self.weights.T + self.bias

    def predict(self, instances: Sequence[LabeledInstance]) -> list[str]:
        scores = self.decision(instances)
        # argmax picks the first maximum, i.e. the lexicographically smallest class
        return [self.classes[j] for j in np.argmax(scores, axis=1)]


def train_linear(instances: Sequence[LabeledInstance], epochs: int = 50, learning_rate: float = 0.1,
                 seed: int = 42, reg: float = 1e-4) -> LinearModel:
    """Fit one hinge-loss separator per class by plain SGD.

    Shuffling comes from ``seed`` only, so repeated calls agree bit for bit.
    """
    counts = Counter(x.label for x in instances)
    if len(counts) < 2:
        raise EvaluationError("a classifier needs at least two classes")
    classes = sorted(counts)
    vocab = {t: i for i, t in enumerate(sorted({t for x in instances for t in x.features}))}
    model = LinearModel(classes, vocab, np.zeros((len(classes), len(vocab))), np.zeros(len(classes)))
    X = model._matrix(instances)
    Y = -np.ones((len(instances), len(classes)))
    for i, x in enumerate(instances):
        Y[i, classes.index(x.label)] = 1.0
    rng = np.random.default_rng(seed)
    W, b = model.weights, model.bias
    for epoch in range(epochs):
        lr = learning_rate / (1.0 + epoch * 0.1)
        for i in rng.permutation(len(instances)):
            x, y = X[i], Y[i]
            margin = y * (W @ x + b)
            active = margin < 1.0
            W *= 1.0 - lr * reg
            if active.any():
                W[active] += lr * y[active, None] * x[None, :]
                b[active] += lr * y[active]
    return model


@dataclass
class EvalReport:
    classes: list[str]
    confusion: np.ndarray  # rows: true class, columns: predicted
    fold_accuracies: list[float]

    @property
    def recall(self) -> dict[str, float]:
        rows = self.confusion.sum(axis=1)
        return {c: (self.confusion[i, i] / rows[i] if rows[i] else 0.0) for i, c in enumerate(self.classes)}

    @property
    def precision(self) -> dict[str, float]:
        cols = self.confusion.sum(axis=0)
        return {c: (self.confusion[i, i] / cols[i] if cols[i] else 0.0) for i, c in enumerate(self.classes)}

    @property
    def macro_accuracy(self) -> float:
        """Per-class accuracy averaged over classes that have test instances."""
        rows = self.confusion.sum(axis=1)
        present = rows > 0
        if not present.any():
            return 0.0
        return float(np.mean(np.diag(self.confusion)[present] / rows[present]))


def evaluate(model: LinearModel, instances: Sequence[LabeledInstance],
             classes: Sequence[str] | None = None) -> EvalReport:
    classes = list(classes or model.classes)
    pos = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for x, pred in zip(instances, model.predict(instances)):
        confusion[pos[x.label], pos[pred]] += 1
    report = EvalReport(classes, confusion, [])
    report.fold_accuracies.append(report.macro_accuracy)
    return report


def merge_reports(reports: Sequence[EvalReport]) -> EvalReport:
    classes = reports[0].classes
    confusion = sum(r.confusion for r in reports)
    folds = [a for r in reports for a in r.fold_accuracies]
    return EvalReport(list(classes), confusion, folds)


def accuracy(model: LinearModel, instances: Sequence[LabeledInstance]) -> float:
    preds = model.predict(instances)
    return float(np.mean([p == x.label for p, x in zip(preds, instances)]))
