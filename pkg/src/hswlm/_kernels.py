"""Numeric inner loops for parsimonization.

Every kernel has two implementations: a numba-compiled loop and a vectorised
numpy version. The active one is chosen once at import time; set
``HSWLM_DISABLE_NUMBA=1`` (or run without numba installed) to force numpy.
Both paths are importable directly so they can be cross-checked.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_DISABLED = os.environ.get("HSWLM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def em_parsimonize_numpy(target, background, lam, tol, max_iter):
    """Run the parsimonization EM on aligned, compact arrays.

    ``target`` holds the fixed entity probabilities over the support being
    re-estimated, ``background`` the background probabilities of the same
    terms (zero allowed). Returns ``(theta, n_iter)``.
    """
    theta = target.copy()
    n_iter = 0
    rest = (1.0 - lam) * background
    for _ in range(max_iter):
        n_iter += 1
        weighted = lam * theta
        e = target * weighted / (weighted + rest)
        new = e / e.sum()
        change = np.abs(new - theta).sum()
        theta = new
        if change < tol:
            break
    return theta, n_iter


def _em_parsimonize_loop(target, background, lam, tol, max_iter):
    n = target.shape[0]
    theta = target.copy()
    e = np.empty(n)
    n_iter = 0
    for _ in range(max_iter):
        n_iter += 1
        total = 0.0
        for i in range(n):
            w = lam * theta[i]
            e[i] = target[i] * w / (w + (1.0 - lam) * background[i])
            total += e[i]
        change = 0.0
        for i in range(n):
            v = e[i] / total
            change += abs(v - theta[i])
            theta[i] = v
        if change < tol:
            break
    return theta, n_iter


def combine_rows_numpy(rows):
    """Product-sum combination of background rows (k x V), unnormalised.

    score[t] = sum_i rows[i, t] * prod_{j != i} (1 - rows[j, t])
    """
    rows = np.asarray(rows, dtype=np.float64)
    comp = 1.0 - rows
    k = rows.shape[0]
    prefix = np.ones_like(rows)
    suffix = np.ones_like(rows)
    if k > 1:
        prefix[1:] = np.cumprod(comp[:-1], axis=0)
        suffix[:-1] = np.cumprod(comp[::-1], axis=0)[::-1][1:]
    return (rows * prefix * suffix).sum(axis=0)


def _combine_rows_loop(rows):
    k, v = rows.shape
    out = np.zeros(v)
    prefix = np.empty(k)
    for t in range(v):
        acc = 1.0
        for i in range(k):
            prefix[i] = acc
            acc *= 1.0 - rows[i, t]
        acc = 1.0
        s = 0.0
        for i in range(k - 1, -1, -1):
            s += rows[i, t] * prefix[i] * acc
            acc *= 1.0 - rows[i, t]
        out[t] = s
    return out


def l1_numpy(p, q):
    return float(np.abs(p - q).sum())


def _l1_loop(p, q):
    s = 0.0
    for i in range(p.shape[0]):
        s += abs(p[i] - q[i])
    return s


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    em_parsimonize_jit = _jit(_em_parsimonize_loop)
    combine_rows_jit = _jit(_combine_rows_loop)
    l1_jit = _jit(_l1_loop)
else:  # pragma: no cover
    em_parsimonize_jit = _em_parsimonize_loop
    combine_rows_jit = _combine_rows_loop
    l1_jit = _l1_loop


if USE_NUMBA:
    def em_parsimonize(target, background, lam, tol, max_iter):
        theta, n_iter = em_parsimonize_jit(
            np.ascontiguousarray(target, dtype=np.float64),
            np.ascontiguousarray(background, dtype=np.float64),
            float(lam), float(tol), int(max_iter),
        )
        return theta, int(n_iter)

    def combine_rows(rows):
        return combine_rows_jit(np.ascontiguousarray(rows, dtype=np.float64))

    def l1(p, q):
        return float(l1_jit(np.ascontiguousarray(p, dtype=np.float64),
                            np.ascontiguousarray(q, dtype=np.float64)))
else:
    def em_parsimonize(target, background, lam, tol, max_iter):
        return em_parsimonize_numpy(
            np.asarray(target, dtype=np.float64),
            np.asarray(background, dtype=np.float64),
            float(lam), float(tol), int(max_iter),
        )

    combine_rows = combine_rows_numpy
    l1 = l1_numpy
