import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from hmmsprt.deterministic import (
    SINK,
    average_observation,
    build_pair_hmm,
    exact_exponents,
    is_deterministic,
)
from hmmsprt.errors import NotDeterministic
from hmmsprt.examples import two_state
from hmmsprt.graph import scc_decompose
from hmmsprt.logexpr import NEG_INF, LogExpr
from hmmsprt.model import dirac, embedded_chain, make_hmm
from hmmsprt.sprt import loglik_series, slope_estimate
from hmmsprt.support_chain import ExponentClass, exponent_profile


def random_deterministic(n, k, rng):
    """Each (state, letter) gets at most one target; weights are small integers."""
    states = [f"s{i}" for i in range(n)]
    letters = [chr(ord("a") + i) for i in range(k)]
    mats = [[[0] * n for _ in range(n)] for _ in range(k)]
    for q in range(n):
        used = [a for a in range(k) if rng.random() < 0.7] or [rng.randrange(k)]
        w = [rng.randint(1, 3) for _ in used]
        for a, wa in zip(used, w):
            mats[a][q][rng.randrange(n)] = F(wa, sum(w))
    return make_hmm(states, letters, {letters[a]: mats[a] for a in range(k)})


def test_is_deterministic(ex):
    assert is_deterministic(ex["det1"].hmm)
    assert is_deterministic(ex["det2"].hmm)
    assert is_deterministic(ex["intro"].hmm)
    assert is_deterministic(ex["multilimit"].hmm)
    assert not is_deterministic(ex["qual_start"].hmm)
    assert not is_deterministic(ex["sleep"].hmm)


def test_not_deterministic_raises(ex):
    with pytest.raises(NotDeterministic):
        build_pair_hmm(ex["qual_start"].hmm, "s1", "s4")
    with pytest.raises(NotDeterministic):
        exact_exponents(ex["sleep"].hmm, "1", "6")


def test_det1_pair_hmm(ex):
    p = build_pair_hmm(ex["det1"].hmm, "q1", "q2")
    assert set(p.states) == {("q1", "q2"), ("q2", "q1")}
    assert set(p.observations) == {LogExpr.log(F(1, 2)), LogExpr.log(2)}
    for q in range(len(p.states)):
        assert sum(p.hmm.psi[o][q][r] for o in range(len(p.observations)) for r in range(len(p.states))) == 1


def test_det2_pair_hmm(ex):
    p = build_pair_hmm(ex["det2"].hmm, "q1", "q2")
    assert set(p.states) == {("q1", "q2"), ("q2", "q2"), SINK}
    assert NEG_INF in p.observations
    sink = p.states.index(SINK)
    o_inf = p.observations.index(NEG_INF)
    assert p.hmm.psi[o_inf][sink][sink] == 1


def test_same_state_gives_zero_observations(ex):
    for name in ("det1", "det2", "intro"):
        h = ex[name].hmm
        for q in h.states:
            p = build_pair_hmm(h, q, q)
            assert all(o.is_zero for o in p.observations)
            (e,) = exact_exponents(h, q, q)
            assert e.value.is_zero and e.probability == 1


def test_average_observation_two_state():
    h = two_state()
    p = build_pair_hmm(h, "s1", "s2")
    dec = scc_decompose(embedded_chain(p.hmm).graph())
    (k,) = dec.bottom
    got = average_observation(p, dec.components[k])
    want = LogExpr.log(F(2, 3)).scale(F(1, 2)) + LogExpr.log(F(4, 3)).scale(F(1, 2))
    assert got == want
    assert got == LogExpr.log(F(8, 9)).scale(F(1, 2))


def test_det_examples_exact(ex):
    (e,) = exact_exponents(ex["det1"].hmm, "q1", "q2")
    assert e.value == -LogExpr.log(2).scale(F(1, 3)) and e.probability == 1
    assert e.cls is ExponentClass.NEG_FINITE
    es = exact_exponents(ex["det2"].hmm, "q1", "q2")
    assert [(str(x.value), x.probability) for x in es] == [("-inf", F(1, 2)), ("0", F(1, 2))]
    assert sum(x.probability for x in es) == 1


def test_det_matches_expected_strings(ex):
    for name in ("det1", "det2"):
        f = ex[name]
        es = exact_exponents(f.hmm, "q1", "q2")
        assert [(str(x.value), x.probability) for x in es] == f.expected["exponents"]


@pytest.mark.parametrize("seed", range(25))
def test_agrees_with_support_chain(seed):
    rng = random.Random(seed)
    h = random_deterministic(rng.randint(1, 4), 2, rng)
    q1, q2 = rng.choice(h.states), rng.choice(h.states)
    es = exact_exponents(h, q1, q2)
    assert sum(e.probability for e in es) == 1
    assert len(es) <= h.n_states**2 + 1
    by_cls = {}
    for e in es:
        by_cls[e.cls] = by_cls.get(e.cls, 0) + e.probability
    prof = exponent_profile(h, dirac(h, q1), dirac(h, q2)).by_class()
    assert ExponentClass.UNKNOWN_FINITE not in prof
    assert by_cls == prof


@pytest.mark.parametrize("seed", range(25))
def test_exponents_sorted_and_nonpositive(seed):
    rng = random.Random(100 + seed)
    h = random_deterministic(rng.randint(1, 4), 3, rng)
    es = exact_exponents(h, rng.choice(h.states), rng.choice(h.states))
    vals = [float(e.value) for e in es]
    assert vals == sorted(vals)
    assert all(e.value.sign() <= 0 for e in es)
    assert len({e.value for e in es}) == len(es)


def test_slope_matches_exact_value(ex):
    h = ex["det1"].hmm
    (e,) = exact_exponents(h, "q1", "q2")
    pi1, pi2 = dirac(h, "q1"), dirac(h, "q2")
    slopes = [slope_estimate(loglik_series(h, pi2, pi1, pi2, 20_000, seed=s)) for s in range(5)]
    m = np.mean([s.slope for s in slopes])
    se = math.sqrt(sum(s.stderr**2 for s in slopes)) / len(slopes)
    assert abs(m - float(e.value)) <= 4 * se + 1e-3


def test_multilimit_exact_finite_exponent(ex):
    h = ex["multilimit"].hmm
    es = exact_exponents(h, "s1", "s4")
    assert [(e.value, e.probability) for e in es] == [
        (LogExpr.log(F(8, 9)).scale(F(1, 2)), F(1, 2)),
        (LogExpr(), F(1, 2)),
    ]
