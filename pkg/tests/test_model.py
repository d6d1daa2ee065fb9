import itertools
import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_models
from hmmsprt.errors import InvalidDistribution, ModelFormatError, NegativeEntry, NonStochastic, UnknownSymbol
from hmmsprt.model import (
    as_dist,
    dirac,
    dump_model,
    embedded_chain,
    identity,
    make_hmm,
    make_rng,
    mat_mul,
    parse_model,
    psi_word,
    restrict,
    sample_run,
    support,
    support_step,
    to_fraction,
    trace_prob,
    uniform,
    validate_hmm,
    vec_mat,
)


def intro_raw():
    return {
        "states": ["q1", "q2"],
        "alphabet": ["a", "b"],
        "transitions": {"a": [["1/3", 0], [0, "2/3"]], "b": [[0, "2/3"], ["1/3", 0]]},
    }


def test_validate_intro_accepted():
    h = validate_hmm(intro_raw())
    assert h.n_states == 2 and h.alphabet == ("a", "b")


def test_identity_single_letter_accepted():
    h = validate_hmm({"states": ["x", "y"], "alphabet": ["a"], "transitions": {"a": [[1, 0], [0, 1]]}})
    assert h.psi[0] == identity(2)


def test_non_stochastic_names_row_and_deficit():
    raw = intro_raw()
    raw["transitions"]["b"][0][1] = "1/2"
    with pytest.raises(NonStochastic) as e:
        validate_hmm(raw)
    assert e.value.state == "q1" and e.value.deficit == F(1, 6)
    assert "q1" in str(e.value)


def test_negative_entry_and_unknown_letter():
    raw = intro_raw()
    raw["transitions"]["a"][0][0] = "-1/3"
    with pytest.raises(NegativeEntry):
        validate_hmm(raw)
    raw = intro_raw()
    raw["transitions"]["c"] = [[0, 0], [0, 0]]
    with pytest.raises(UnknownSymbol):
        validate_hmm(raw)


def test_parser_rejects_unknown_keys_and_bad_shapes():
    raw = intro_raw()
    raw["comment"] = "x"
    with pytest.raises(ModelFormatError):
        parse_model(raw)
    raw = intro_raw()
    raw["transitions"]["a"] = [["1/3", 0]]
    with pytest.raises(ModelFormatError):
        parse_model(raw)
    with pytest.raises(ModelFormatError):
        parse_model({"states": [], "alphabet": ["a"], "transitions": {}})


def test_dump_parse_roundtrip():
    raw = intro_raw()
    raw["initial_distributions"] = {"pi1": {"q1": "1"}, "mix": {"q1": "1/4", "q2": "3/4"}}
    h, dists = parse_model(raw)
    h2, d2 = parse_model(json.loads(json.dumps(dump_model(h, dists))))
    assert h2.psi == h.psi and d2 == dists


def test_to_fraction_forms():
    assert to_fraction("2/6") == F(1, 3)
    assert to_fraction("0.25") == F(1, 4)
    assert to_fraction(3) == 3
    with pytest.raises(ModelFormatError):
        to_fraction(True)


def test_distributions():
    h = validate_hmm(intro_raw())
    assert as_dist(h, "q2") == (0, 1)
    assert as_dist(h, {"q1": "1/2", "q2": "1/2"}) == uniform(h)
    with pytest.raises(InvalidDistribution):
        as_dist(h, {"q1": "1/2"})


def test_psi_word_examples(intro):
    assert psi_word(intro, []) == identity(2)
    assert psi_word(intro, "aba")[0][1] == F(4, 27)


def test_trace_prob_examples(intro):
    assert trace_prob(intro, dirac(intro, "q1"), "aba") == F(4, 27)
    assert trace_prob(intro, dirac(intro, "q2"), "aba") == F(2, 27)
    assert trace_prob(intro, uniform(intro), "") == 1


words = st.lists(st.sampled_from("ab"), max_size=4)


@given(words, words)
def test_psi_word_is_a_morphism(u, v):
    h = make_hmm(["q1", "q2"], ["a", "b"], intro_raw()["transitions"])
    assert psi_word(h, u + v) == mat_mul(psi_word(h, u), psi_word(h, v))


@pytest.mark.parametrize("h", random_models(6, seed=1))
def test_trace_probs_sum_to_one_and_shrink(h):
    pi = uniform(h)
    for n in range(5):
        total = sum(trace_prob(h, pi, w) for w in itertools.product(h.alphabet, repeat=n))
        assert total == 1
    for w in itertools.product(h.alphabet, repeat=3):
        for a in h.alphabet:
            assert trace_prob(h, pi, w + (a,)) <= trace_prob(h, pi, w)


def test_support_step(ex):
    h = ex["qual_start"].hmm
    assert support_step(h, {"s1"}, "a") == {"s2"}
    assert support_step(h, set(), "a") == frozenset()


@pytest.mark.parametrize("h", random_models(8, seed=2))
def test_support_step_matches_belief_support(h):
    pi = uniform(h, h.states[: max(1, h.n_states // 2)])
    for a in h.alphabet:
        assert support_step(h, support(h, pi), a) == support(h, vec_mat(pi, h.matrix(a)))


def test_embedded_chain(intro):
    assert embedded_chain(intro).matrix == ((F(1, 3), F(2, 3)), (F(1, 3), F(2, 3)))
    single = make_hmm(["s"], ["a"], {"a": [[1]]})
    assert embedded_chain(single).matrix == ((1,),)
    for h in random_models(5, seed=3):
        assert all(sum(row) == 1 for row in embedded_chain(h).matrix)


def test_sample_run_contract(intro):
    run = sample_run(intro, dirac(intro, "q1"), 0, make_rng(5))
    assert len(run) == 0 and run.states == ("q1",)
    r1 = sample_run(intro, uniform(intro), 50, make_rng(7))
    r2 = sample_run(intro, uniform(intro), 50, make_rng(7))
    assert r1.states == r2.states and r1.word == r2.word


def test_sample_run_first_letter_frequency(intro):
    n = 100_000
    rng = make_rng(11)
    hits = sum(sample_run(intro, dirac(intro, "q1"), 1, rng).word[0] == "a" for _ in range(n))
    p = 1 / 3
    assert abs(hits / n - p) <= 3 * (p * (1 - p) / n) ** 0.5


def test_sample_run_follows_positive_transitions():
    for h in random_models(5, seed=4):
        run = sample_run(h, uniform(h), 30, make_rng(1))
        for k, a in enumerate(run.letter_ids):
            assert h.psi[a][run.state_ids[k]][run.state_ids[k + 1]] > 0


def test_restrict(intro):
    full = restrict(intro, intro.states)
    assert full.psi == intro.psi
    one = restrict(intro, {"q1"})
    assert one.psi == (((F(1, 3),),), ((F(0),),))
    empty = restrict(intro, set())
    assert empty.n_states == 0


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1), st.integers(0, 50))
def test_streams_are_reproducible(seed, stream):
    assert make_rng(seed, stream).random() == make_rng(seed, stream).random()
