import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from hswlm import _kernels
from hswlm.langmodel import SparseLM, l1_distance
from hswlm.parsimony import (AllPrunedError, DegenerateBackgroundError, ParsimonyConfig, combine_backgrounds,
                             parsimonize)


# -- independent oracles ---------------------------------------------------------

def brute_em(target, background, lam, iters):
    """Plain dict EM, one iterate per step; returns every iterate."""
    theta = dict(target)
    history = [dict(theta)]
    for _ in range(iters):
        e = {t: target[t] * lam * theta[t] / (lam * theta[t] + (1 - lam) * background.get(t, 0.0))
             for t in target}
        z = math.fsum(e.values())
        theta = {t: v / z for t, v in e.items()}
        history.append(dict(theta))
    return history


def kkt_optimum(target, background, lam):
    """Maximiser of sum_t T(t) log(lam*x(t) + (1-lam) B(t)) over the simplex on supp(T).

    Stationarity gives lam*x = max(0, T/mu - (1-lam) B); mu is found by bisection.
    """
    def mass(inv_mu):
        return sum(max(0.0, target[t] * inv_mu - (1 - lam) * background.get(t, 0.0)) / lam for t in target)
    lo, hi = 0.0, 1.0
    while mass(hi) < 1.0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if mass(mid) < 1.0 else (lo, mid)
    inv_mu = 0.5 * (lo + hi)
    return {t: max(0.0, target[t] * inv_mu - (1 - lam) * background.get(t, 0.0)) / lam for t in target}


def brute_combine(models):
    terms = sorted(set().union(*models))
    score = {}
    for t in terms:
        s = 0.0
        for i, mi in enumerate(models):
            prod = mi.get(t, 0.0)
            for j, mj in enumerate(models):
                if j != i:
                    prod *= 1.0 - mj.get(t, 0.0)
            s += prod
        score[t] = s
    z = sum(score.values())
    if z == 0:
        raise ZeroDivisionError
    return {t: v / z for t, v in score.items() if v > 0}


def lm(**probs):
    return SparseLM(probs)


@st.composite
def distributions(draw, vocab="abc", min_size=1):
    terms = sorted(draw(st.sets(st.sampled_from(vocab), min_size=min_size)))
    weights = [draw(st.floats(0.02, 1.0)) for _ in terms]
    return SparseLM(dict(zip(terms, weights)), normalize=True)


EXACT = ParsimonyConfig(lam=0.5, em_tolerance=1e-15, max_em_iters=100_000, prune_epsilon=0.0)


class TestCombineBackgrounds:
    def test_single_is_identity(self):
        b = lm(x=0.7, y=0.3)
        assert combine_backgrounds([b]) == b

    def test_disjoint_singletons(self):
        assert combine_backgrounds([lm(x=1.0), lm(y=1.0)]).as_dict() == {"x": 0.5, "y": 0.5}

    def test_identical_pair(self):
        # scores: x = 2 * 0.6 * 0.4 = 0.48, y = 2 * 0.4 * 0.6 = 0.48
        out = combine_backgrounds([lm(x=0.6, y=0.4), lm(x=0.6, y=0.4)])
        assert out.as_dict() == pytest.approx({"x": 0.5, "y": 0.5}, abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateBackgroundError):
            combine_backgrounds([lm(x=1.0), lm(x=1.0)])

    def test_empty(self):
        with pytest.raises(ValueError):
            combine_backgrounds([])

    @settings(suppress_health_check=[HealthCheck.too_slow])
    @given(st.lists(distributions(vocab="abcde"), min_size=2, max_size=6))
    def test_matches_quadratic_oracle(self, models):
        try:
            expected = brute_combine(models)
        except ZeroDivisionError:
            with pytest.raises(DegenerateBackgroundError):
                combine_backgrounds(models)
            return
        got = combine_backgrounds(models)
        assert set(got) == set(expected)
        assert got.as_dict() == pytest.approx(expected, rel=1e-9, abs=1e-12)


class TestParsimonize:
    def test_fixed_point(self):
        p = lm(a=0.2, b=0.3, c=0.5)
        out = parsimonize(p, p, ParsimonyConfig(lam=0.3), prune=False)
        assert l1_distance(out, p) < 1e-12

    def test_one_iteration_hand_value(self):
        # e_a = 0.5 * 0.25 / 0.70 = 0.178571..., e_b = 0.5 * 0.25 / 0.30 = 0.416666...
        out = parsimonize(lm(a=0.5, b=0.5), lm(a=0.9, b=0.1),
                          ParsimonyConfig(lam=0.5, max_em_iters=1, prune_epsilon=0.0))
        assert out["a"] == pytest.approx(0.3, abs=1e-9)
        assert out["b"] == pytest.approx(0.7, abs=1e-9)

    def test_converged_matches_brute_force_and_optimum(self):
        t, b = lm(a=0.5, b=0.5), lm(a=0.9, b=0.1)
        out = parsimonize(t, b, EXACT)
        brute = brute_em(t, b, 0.5, 20_000)[-1]
        assert l1_distance(out, brute) <= 1e-8
        assert l1_distance(out, kkt_optimum(t, b, 0.5)) <= 1e-8
        assert out.as_dict() == pytest.approx({"a": 0.1, "b": 0.9}, abs=1e-8)

    def test_background_only_terms_never_enter(self):
        assert parsimonize(lm(a=1.0), lm(b=1.0), ParsimonyConfig()).as_dict() == {"a": 1.0}

    def test_lambda_to_one(self):
        t, b = lm(a=0.2, b=0.3, c=0.5), lm(a=0.6, b=0.3, c=0.1)
        out = parsimonize(t, b, ParsimonyConfig(lam=1 - 1e-9), prune=False)
        assert l1_distance(out, t) < 1e-6

    def test_all_pruned(self):
        cfg = ParsimonyConfig(lam=0.5, prune_epsilon=0.9)
        with pytest.raises(AllPrunedError):
            parsimonize(lm(a=0.5, b=0.5), lm(a=0.5, b=0.5), cfg)

    def test_pruning_drops_small_terms(self):
        t = lm(a=0.45, b=0.45, c=0.1)
        b = lm(c=1.0)
        out = parsimonize(t, b, ParsimonyConfig(lam=0.5, prune_epsilon=1e-3, max_em_iters=500, em_tolerance=1e-12))
        assert set(out) == {"a", "b"}
        assert math.fsum(out.values()) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("bad", [dict(lam=0.0), dict(lam=1.0), dict(em_tolerance=0.0),
                                     dict(max_em_iters=0), dict(prune_epsilon=-1.0)])
    def test_config_validation(self, bad):
        with pytest.raises(ValueError):
            ParsimonyConfig(**bad)


class TestEMProperties:
    @settings(max_examples=200)
    @given(distributions(min_size=3), distributions(min_size=3), st.floats(0.05, 0.95))
    def test_matches_brute_force_per_iteration(self, t, b, lam):
        history = brute_em(t, b, lam, 15)
        terms = list(t)
        tv = np.array([t[x] for x in terms])
        bv = np.array([b.prob(x) for x in terms])
        for k in range(1, 16):
            theta, n = _kernels.em_parsimonize(tv, bv, lam, 0.0, k)
            assert n == k
            np.testing.assert_allclose(theta, [history[k][x] for x in terms], rtol=1e-10, atol=1e-14)

    @settings(max_examples=200)
    @given(distributions(min_size=3), distributions(min_size=3), st.floats(0.05, 0.95))
    def test_lowest_ratio_term_shrinks_every_iteration(self, t, b, lam):
        history = brute_em(t, b, lam, 30)
        ratios = {x: t[x] / b[x] for x in t}
        if len(set(ratios.values())) < len(ratios):
            return
        low = min(ratios, key=ratios.get)
        for prev, cur in zip(history, history[1:]):
            if sum(abs(cur[x] - prev[x]) for x in t) < 1e-12:
                break
            assert cur[low] < prev[low]

    @settings(max_examples=200)
    @given(distributions(min_size=3), distributions(min_size=3), st.floats(0.05, 0.95))
    def test_first_step_direction(self, t, b, lam):
        # after one step a term grows iff its responsibility exceeds the target-weighted mean
        resp = {x: lam * t[x] / (lam * t[x] + (1 - lam) * b[x]) for x in t}
        mean = math.fsum(t[x] * resp[x] for x in t)
        step = brute_em(t, b, lam, 1)[1]
        for x in t:
            if abs(resp[x] - mean) > 1e-9:
                assert (step[x] > t[x]) == (resp[x] > mean)

    @settings(max_examples=200)
    @given(distributions(vocab="abcde", min_size=2), distributions(vocab="abcde"), st.floats(0.05, 0.95))
    def test_log_likelihood_non_decreasing(self, t, b, lam):
        def loglik(theta):
            return math.fsum(t[x] * math.log(lam * theta[x] + (1 - lam) * b.prob(x))
                             for x in t if lam * theta[x] + (1 - lam) * b.prob(x) > 0)
        values = [loglik(h) for h in brute_em(t, b, lam, 40)]
        for a, c in zip(values, values[1:]):
            assert c >= a - 1e-12

    @settings(max_examples=100)
    @given(distributions(vocab="abcde"), distributions(vocab="abcde"), st.floats(0.05, 0.95))
    def test_support_and_normalisation(self, t, b, lam):
        cfg = ParsimonyConfig(lam=lam, prune_epsilon=1e-5)
        try:
            out = parsimonize(t, b, cfg)
        except AllPrunedError:
            return
        assert set(out) <= set(t)
        assert math.fsum(out.values()) == pytest.approx(1.0, abs=1e-9)
        raw = parsimonize(t, b, cfg, prune=False)
        assert math.fsum(raw.values()) == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=200)
    @given(distributions(min_size=3), distributions(min_size=3), st.floats(0.05, 0.95))
    def test_most_specific_term_ends_boosted(self, t, b, lam):
        ratios = {x: t[x] / b[x] for x in t}
        high = max(ratios, key=ratios.get)
        out = parsimonize(t, b, ParsimonyConfig(lam=lam, em_tolerance=1e-14, max_em_iters=100_000), prune=False)
        assert out[high] >= t[high] - 1e-12
