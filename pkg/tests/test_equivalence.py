import itertools
import random
from fractions import Fraction as F

import pytest

from conftest import random_models
from hmmsprt.equivalence import (
    Distinguishable,
    NotDistinguishable,
    Unknown,
    are_equivalent,
    distinguishability,
    tv_mass_series,
    tv_min_mass,
)
from hmmsprt.errors import CapExceeded, ClassificationIncomplete
from hmmsprt.model import dirac, dist_after, make_hmm, trace_prob, uniform
from hmmsprt.support_chain import prob_E0


def lumpable():
    """``x`` and ``y`` behave identically; ``z`` does not."""
    return make_hmm(
        ["x", "y", "z"], ["a", "b"],
        {
            "a": [["1/4", "1/4", 0], [0, "1/2", 0], [0, 0, "2/3"]],
            "b": [[0, "1/2", 0], ["1/2", 0, 0], [0, 0, "1/3"]],
        },
    )


def test_are_equivalent_examples(intro):
    pi = uniform(intro)
    assert are_equivalent(intro, pi, pi)
    assert not are_equivalent(intro, dirac(intro, "q1"), dirac(intro, "q2"))
    h = lumpable()
    assert are_equivalent(h, dirac(h, "x"), dirac(h, "y"))
    assert not are_equivalent(h, dirac(h, "x"), dirac(h, "z"))


def test_equivalence_matches_enumeration():
    h = lumpable()
    pairs = [("x", "y"), ("x", "z"), ("y", "z")]
    for s, t in pairs:
        p1, p2 = dirac(h, s), dirac(h, t)
        eq = are_equivalent(h, p1, p2)
        agree = all(
            trace_prob(h, p1, w) == trace_prob(h, p2, w)
            for n in range(h.n_states + 1)
            for w in itertools.product(h.alphabet, repeat=n)
        )
        assert eq == agree
        assert are_equivalent(h, p2, p1) == eq


def test_distinguishability_examples(ex):
    f = ex["intro"]
    assert isinstance(distinguishability(f.hmm, f.dists["pi1"], f.dists["pi2"]), Distinguishable)
    f = ex["sleep"]
    assert isinstance(distinguishability(f.hmm, f.dists["pi1"], f.dists["pi2"]), Distinguishable)
    f = ex["det2"]
    v = distinguishability(f.hmm, f.dists["pi1"], f.dists["pi2"])
    assert isinstance(v, NotDistinguishable) and v.witness == ("a",)


def test_witness_is_sound():
    h = lumpable()
    p1, p2 = uniform(h, ["x", "z"]), dirac(h, "y")
    v = distinguishability(h, p1, p2)
    assert isinstance(v, NotDistinguishable)
    w = v.witness
    assert trace_prob(h, p1, w) > 0 and trace_prob(h, p2, w) > 0
    assert are_equivalent(h, v.mu, v.nu)
    x, y = dist_after(h, p1, w), dist_after(h, p2, w)
    assert all(a > 0 for a, m in zip(x, v.mu) if m)
    assert all(b > 0 for b, n in zip(y, v.nu) if n)


def test_budget_gives_unknown(ex):
    f = ex["qual_start"]
    assert isinstance(distinguishability(f.hmm, f.dists["pi1"], f.dists["pi2"], budget=1), Unknown)
    with pytest.raises(ValueError):
        distinguishability(f.hmm, f.dists["pi1"], f.dists["pi2"], budget=0)


def test_tv_min_mass_examples(intro):
    p1, p2 = dirac(intro, "q1"), dirac(intro, "q2")
    assert tv_min_mass(intro, p1, p2, 0) == 1
    assert tv_min_mass(intro, p1, p2, 1) == F(2, 3)
    assert tv_mass_series(intro, p1, p2, 3) == [1, F(2, 3), F(2, 3), F(14, 27)]
    pi = uniform(intro)
    assert tv_mass_series(intro, pi, pi, 4) == [1] * 5
    with pytest.raises(CapExceeded):
        tv_min_mass(intro, p1, p2, 30, cap=1000)


def brute_min_mass(h, p1, p2, n):
    return sum(
        min(trace_prob(h, p1, w), trace_prob(h, p2, w)) for w in itertools.product(h.alphabet, repeat=n)
    )


@pytest.mark.parametrize("h", random_models(6, seed=8))
def test_tv_mass_matches_brute_force_and_decreases(h):
    rng = random.Random(h.n_states)
    p1 = dirac(h, rng.choice(h.states))
    p2 = uniform(h)
    series = tv_mass_series(h, p1, p2, 5)
    for n, b in enumerate(series):
        assert b == brute_min_mass(h, p1, p2, n)
    assert all(b1 <= b0 for b0, b1 in zip(series, series[1:]))
    if isinstance(distinguishability(h, p1, p2), Distinguishable):
        assert not are_equivalent(h, p1, p2)
    if are_equivalent(h, p1, p2):
        assert series == [1] * 6


def test_distinguishable_iff_no_zero_exponent(ex):
    for name, f in ex.items():
        v = distinguishability(f.hmm, f.dists["pi1"], f.dists["pi2"])
        try:
            p0 = prob_E0(f.hmm, f.dists["pi1"], f.dists["pi2"])
        except ClassificationIncomplete:
            continue
        assert isinstance(v, Distinguishable) == (p0 == 0), name


@pytest.mark.parametrize("h", random_models(15, seed=9))
def test_distinguishable_iff_no_zero_exponent_random(h):
    p1, p2 = dirac(h, h.states[0]), uniform(h)
    v = distinguishability(h, p1, p2)
    assert isinstance(v, Distinguishable) == (prob_E0(h, p1, p2) == 0)
