import math
import random
from fractions import Fraction as F

import pytest

from hmmsprt.equivalence import Distinguishable, distinguishability
from hmmsprt.errors import EmptyAfterTrimming, ModelFormatError
from hmmsprt.examples import (
    paper_examples,
    pspace_instance,
    random_hmm,
    random_instance,
    sleep_model,
    sleep_raw_psi,
    sleep_row_factors,
)
from hmmsprt.gadgets import (
    MortalityInstance,
    is_mortal,
    mortality_to_e0_gadget,
    mortality_to_einf_gadget,
    parse_instance,
    trim_dead_states,
)
from hmmsprt.model import dump_model, parse_model
from hmmsprt.sprt import Thresholds, mc_sprt
from hmmsprt.support_chain import prob_E0, prob_Einf

IDENTITY = MortalityInstance.from_rows(["x", "y"], ["a"], {"a": [[1, 0], [0, 1]]})


def test_registry(ex):
    assert len(ex) >= 8
    for name, f in ex.items():
        assert f.name == name and f.citation
        for key in ("pi1", "pi2"):
            d = f.dists[key]
            assert sum(d) == 1 and all(x >= 0 for x in d)
        h2, d2 = parse_model(dump_model(f.hmm, f.dists))
        assert h2.psi == f.hmm.psi
        assert d2 == f.dists


def test_registry_is_rebuilt_identically():
    a, b = paper_examples(), paper_examples()
    assert {k: a[k].hmm.psi for k in a} == {k: b[k].hmm.psi for k in b}


def test_sleep_rows_and_entries():
    raw = sleep_raw_psi()
    assert raw[0][0][0] == F("0.793") * F("0.9172")
    h, pi1, pi2 = sleep_model()
    for q in range(10):
        assert sum(h.psi[a][q][r] for a in range(5) for r in range(10)) == 1
    factors = sleep_row_factors()
    assert h.psi[0][0][0] == raw[0][0][0] / factors[0]
    # no mass crosses between the two blocks
    assert all(h.psi[a][q][r] == 0 for a in range(5) for q in range(5) for r in range(5, 10))
    assert all(h.psi[a][q][r] == 0 for a in range(5) for q in range(5, 10) for r in range(5))


def test_sleep_rescaling_is_small():
    assert all(abs(c - 1) < F(1, 100) for c in sleep_row_factors())


def test_sleep_distinguishable():
    h, pi1, pi2 = sleep_model()
    assert isinstance(distinguishability(h, pi1, pi2), Distinguishable)


def test_pspace_instance_gadgets():
    inst = pspace_instance()
    assert is_mortal(inst)
    h, p1, p2 = mortality_to_einf_gadget(inst)
    assert prob_Einf(h, p1, p2) == 1
    h, p1, p2 = mortality_to_e0_gadget(inst)
    assert prob_E0(h, p1, p2) == F(3, 4)


def test_identity_instance_gadgets():
    assert not is_mortal(IDENTITY)
    h, p1, p2 = mortality_to_einf_gadget(IDENTITY)
    assert prob_Einf(h, p1, p2) == 0
    h, p1, p2 = mortality_to_e0_gadget(IDENTITY)
    assert prob_E0(h, p1, p2) == 1


def test_gadgets_are_stochastic():
    for inst in (pspace_instance(), IDENTITY):
        for g in (mortality_to_einf_gadget, mortality_to_e0_gadget):
            h, p1, p2 = g(inst)
            for q in range(h.n_states):
                assert sum(h.psi[a][q][r] for a in range(h.n_letters) for r in range(h.n_states)) == 1


def test_fresh_names_avoid_clashes():
    inst = MortalityInstance.from_rows(["fresh", "q_bot", "q2"], ["a", "$"], {
        "a": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "$": [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
    })
    h, _, _ = mortality_to_einf_gadget(inst)
    assert len(set(h.states)) == 4
    h, _, _ = mortality_to_e0_gadget(inst)
    assert len(set(h.states)) == 5 and len(set(h.alphabet)) == 3


def test_trimming():
    inst = MortalityInstance.from_rows(["x", "y", "z"], ["a"], {"a": [[0, 1, 0], [0, 0, 1], [0, 0, 0]]})
    assert trim_dead_states(inst) == []
    with pytest.raises(EmptyAfterTrimming):
        mortality_to_einf_gadget(inst)
    assert is_mortal(inst)
    inst = MortalityInstance.from_rows(["x", "y"], ["a"], {"a": [[1, 1], [0, 0]]})
    assert trim_dead_states(inst) == [0]


def test_parse_instance():
    good = pspace_instance().to_dict()
    assert parse_instance(good).phi == pspace_instance().phi
    for bad in (
        {**good, "transitions": {"a": [[0, 2], [0, 1]], "b": [[1, 1], [0, 0]]}},
        {**good, "transitions": {"a": [[0, True], [0, 1]], "b": [[1, 1], [0, 0]]}},
        {**good, "extra": 1},
        {"states": ["q0"]},
        [1, 2],
    ):
        with pytest.raises(ModelFormatError):
            parse_instance(bad)


@pytest.mark.parametrize("seed", range(30))
def test_gadget_soundness_small(seed):
    rng = random.Random(seed)
    inst = random_instance(rng.randint(1, 4), rng.randint(1, 3), rng)
    mortal = is_mortal(inst)
    try:
        h, p1, p2 = mortality_to_einf_gadget(inst)
        assert prob_Einf(h, p1, p2) == (1 if mortal else 0)
    except EmptyAfterTrimming:
        assert mortal
    h, p1, p2 = mortality_to_e0_gadget(inst)
    assert (prob_E0(h, p1, p2) < 1) == mortal


def test_einf_gadget_simulation():
    th = Thresholds(-math.inf, math.inf, 0.0, 0.0)
    h, p1, p2 = mortality_to_einf_gadget(pspace_instance())
    st = mc_sprt(h, p1, p2, th=th, replicas=2000, max_steps=500, seed=1)
    assert st.by_kind["zero"].count == st.replicas
    h, p1, p2 = mortality_to_einf_gadget(IDENTITY)
    st = mc_sprt(h, p1, p2, th=th, replicas=500, max_steps=500, seed=1)
    assert st.by_kind["zero"].count == 0


def test_random_hmm_is_valid():
    rng = random.Random(5)
    for _ in range(50):
        h = random_hmm(rng.randint(1, 5), rng.randint(1, 3), rng)
        for q in range(h.n_states):
            assert sum(h.psi[a][q][r] for a in range(h.n_letters) for r in range(h.n_states)) == 1
