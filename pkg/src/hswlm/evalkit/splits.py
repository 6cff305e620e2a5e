"""Deterministic stratified k-fold splitting."""

from __future__ import annotations

from typing import Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def kfold(items: Sequence[T], labels: Sequence[str], k: int = 5, seed: int = 42) -> list[list[T]]:
    """Partition ``items`` into ``k`` disjoint, class-stratified folds.

    Members of each class (classes in sorted order) are shuffled with
    ``seed`` and dealt round-robin; the dealer position carries over between
    classes so fold sizes never differ by more than one. Items keep their
    input order inside a fold.
    """
    n = len(items)
    if len(labels) != n:
        raise ValueError("items and labels differ in length")
    if k < 1 or k > n:
        raise ValueError(f"cannot split {n} items into {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = [0] * n
    slot = 0
    for cls in sorted(set(labels)):
        members = [i for i in range(n) if labels[i] == cls]
        for i in rng.permutation(members):
            fold_of[int(i)] = slot % k
            slot += 1
    return [[items[i] for i in range(n) if fold_of[i] == f] for f in range(k)]
