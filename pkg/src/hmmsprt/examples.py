"""Named example models with their known answers, the sleep-stage HMM pair, and random generators."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction as F

from .gadgets import MortalityInstance, mortality_to_e0_gadget
from .model import ZERO, Hmm, dirac, make_hmm

log = logging.getLogger(__name__)

# Sleep-stage transition matrices (healthy, diseased) and the shared emission matrix.
_SLEEP_T1 = [
    ["0.793", "0.099", "0.035", "0.064", "0.009"],
    ["0.078", "0.769", "0.006", "0.144", "0.003"],
    ["0.018", "0.004", "0.833", "0.134", "0.012"],
    ["0.022", "0.094", "0.054", "0.827", "0.002"],
    ["0.011", "0.005", "0.035", "0.005", "0.945"],
]
# printed column-stochastic; used transposed
_SLEEP_T2_PRINTED = [
    ["0.641", "0.109", "0.031", "0.040", "0.015"],
    ["0.202", "0.699", "0.008", "0.089", "0.003"],
    ["0.026", "0.002", "0.823", "0.062", "0.035"],
    ["0.123", "0.189", "0.114", "0.808", "0.016"],
    ["0.007", "0.001", "0.024", "0.001", "0.931"],
]
_SLEEP_O = [
    ["0.9172", "0.0803", "0", "0.0002", "0.0024"],
    ["0.0719", "0.8606", "0", "0.0665", "0.0010"],
    ["0", "0.0007", "0.8546", "0.1055", "0.0392"],
    ["0.0008", "0.0998", "0.0663", "0.8257", "0.0075"],
    ["0.0109", "0.0094", "0.1046", "0.0334", "0.8416"],
]
SLEEP_LETTERS = tuple(f"a{k}" for k in range(1, 6))
SLEEP_STATES = tuple(str(i) for i in range(1, 11))


def _rational(rows):
    return [[F(x) for x in row] for row in rows]


def sleep_transitions() -> tuple[list, list]:
    """The two 5x5 stage transition matrices as exact rationals (the second one transposed)."""
    t2 = _rational(_SLEEP_T2_PRINTED)
    return _rational(_SLEEP_T1), [list(col) for col in zip(*t2)]


def sleep_emissions() -> list:
    return _rational(_SLEEP_O)


def sleep_raw_psi() -> list:
    """``psi[k][i][j] = T[i][j] * O[i][k]`` on the 10 block-diagonal states, before renormalisation."""
    t1, t2 = sleep_transitions()
    o = sleep_emissions()
    psi = []
    for k in range(5):
        m = [[ZERO] * 10 for _ in range(10)]
        for off, t in ((0, t1), (5, t2)):
            for i in range(5):
                for j in range(5):
                    m[off + i][off + j] = t[i][j] * o[i % 5][k]
        psi.append(m)
    return psi


def sleep_row_factors() -> list[F]:
    """Exact row sums of the raw product; the model divides each row by its factor."""
    raw = sleep_raw_psi()
    return [sum((raw[k][q][r] for k in range(5) for r in range(10)), ZERO) for q in range(10)]


def sleep_model():
    """``(hmm, pi1, pi2)``: healthy block on states 1-5, diseased on 6-10, Dirac on 1 and 6."""
    raw = sleep_raw_psi()
    factors = sleep_row_factors()
    for q, c in enumerate(factors):
        if c != 1:
            log.info("sleep model: row %s rescaled by 1/%s (%.6f)", SLEEP_STATES[q], c, float(c))
    psi = {
        a: [[raw[k][q][r] / factors[q] for r in range(10)] for q in range(10)]
        for k, a in enumerate(SLEEP_LETTERS)
    }
    h = make_hmm(SLEEP_STATES, SLEEP_LETTERS, psi)
    return h, dirac(h, "1"), dirac(h, "6")


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    hmm: Hmm
    dists: dict
    expected: dict = field(default_factory=dict)
    citation: str = ""
    instance: MortalityInstance | None = None


def _intro():
    return make_hmm(
        ["q1", "q2"], ["a", "b"],
        {"a": [["1/3", 0], [0, "2/3"]], "b": [[0, "2/3"], ["1/3", 0]]},
    )


def two_state(p1=F(1, 3), p2=F(1, 2)) -> Hmm:
    """Two absorbing states emitting ``a`` with probabilities ``p1`` and ``p2``."""
    p1, p2 = F(p1), F(p2)
    return make_hmm(
        ["s1", "s2"], ["a", "b"],
        {"a": [[p1, 0], [0, p2]], "b": [[1 - p1, 0], [0, 1 - p2]]},
    )


def _multilimit(s3_dead_b: bool = False):
    s3a, s3b = ("1", 0) if s3_dead_b else ("1/2", "1/2")
    return make_hmm(
        ["s1", "s2", "s3", "s4"], ["a", "b"],
        {
            "a": [[0, "1/4", 0, 0], [0, "1/3", 0, 0], [0, 0, s3a, 0], [0, 0, 0, "1/2"]],
            "b": [[0, 0, "3/4", 0], [0, "2/3", 0, 0], [0, 0, s3b, 0], [0, 0, 0, "1/2"]],
        },
    )


def _qual_start():
    return make_hmm(
        ["s1", "s2", "s3", "s4", "s5"], ["a", "b"],
        {
            "a": [
                [0, "1/4", 0, 0, 0],
                [0, 0, 0, 0, 1],
                [0, 0, "1/2", 0, 0],
                [0, 0, 0, "1/2", 0],
                [0, "1/3", 0, 0, "1/3"],
            ],
            "b": [
                [0, 0, "3/4", 0, 0],
                [0, 0, 0, 0, 0],
                [0, 0, "1/2", 0, 0],
                [0, 0, 0, "1/2", 0],
                [0, 0, 0, 0, "1/3"],
            ],
        },
    )


def _det1():
    return make_hmm(
        ["q1", "q2"], ["a", "b"],
        {"a": [["2/3", 0], [0, "1/3"]], "b": [[0, "1/3"], ["2/3", 0]]},
    )


def _det2():
    return make_hmm(
        ["q1", "q2"], ["a", "b"],
        {"a": [[0, 1], [0, "1/2"]], "b": [[0, 0], [0, "1/2"]]},
    )


def pspace_instance() -> MortalityInstance:
    """Two states, ``phi(ab) = 0``."""
    return MortalityInstance.from_rows(
        ["q0", "q1"], ["a", "b"],
        {"a": [[0, 1], [0, 1]], "b": [[1, 1], [0, 0]]},
    )


def _pair(h, d1, d2):
    return {"pi1": dirac(h, d1), "pi2": dirac(h, d2)}


def paper_examples() -> dict[str, Fixture]:
    out = {}

    def add(name, h, dists, expected, citation, instance=None):
        out[name] = Fixture(name, h, dists, expected, citation, instance)

    h = _intro()
    add(
        "intro", h, _pair(h, "q1", "q2"),
        {
            "trace_prob_pi1_aba": F(4, 27),
            "trace_prob_pi2_aba": F(2, 27),
            "ratio_after_aba": F(2),
            "tv_masses": [F(1), F(2, 3), F(2, 3), F(14, 27)],
            "distinguishable": True,
        },
        "running two-state example with letters a, b",
    )
    h = two_state()
    add(
        "two_state", h, _pair(h, "s1", "s2"),
        {"p1": F(1, 3), "p2": F(1, 2), "distinguishable": True},
        "two absorbing states; Wald stopping-time formula",
    )
    h = _multilimit()
    add(
        "multilimit", h, _pair(h, "s1", "s4"),
        {"profile": {"negative-finite": F(1, 2), "0": F(1, 2)}, "finite_exponent": "(1/2) ln (8/9)"},
        "example with a zero and a finite negative exponent",
    )
    h = _multilimit(s3_dead_b=True)
    add(
        "mortality_wald", h, _pair(h, "s1", "s4"),
        {"prob_Einf": F(1, 2), "profile": {"-inf": F(1, 2), "negative-finite": F(1, 2)}},
        "example where the likelihood hits zero with probability 1/2",
    )
    h = _qual_start()
    add(
        "qual_start", h, _pair(h, "s1", "s4"),
        {
            "supports": [(), ("s1",), ("s2",), ("s3",), ("s5",), ("s2", "s5")],
            "classes": {"-inf", "0", "negative-finite"},
            "profile": {"-inf": F(1, 4), "0": F(1, 2), "negative-finite": F(1, 4)},
        },
        "five-state example with all three exponent classes",
    )
    h = _det1()
    add(
        "det1", h, _pair(h, "q1", "q2"),
        {"exponents": [("(-1/3) ln 2", F(1))]},
        "first deterministic example",
    )
    h = _det2()
    add(
        "det2", h, _pair(h, "q1", "q2"),
        {"exponents": [("-inf", F(1, 2)), ("0", F(1, 2))]},
        "second deterministic example",
    )
    inst = pspace_instance()
    h, p1, p2 = mortality_to_e0_gadget(inst)
    add(
        "pspace_fig", h, {"pi1": p1, "pi2": p2},
        {"mortal": True, "prob_E0_below_one": True},
        "mortality-to-E0 reduction on a two-state instance",
        inst,
    )
    h, p1, p2 = sleep_model()
    add(
        "sleep", h, {"pi1": p1, "pi2": p2},
        {"distinguishable": True, "slope_approx": -0.008},
        "sleep-stage HMMs, healthy vs diseased",
    )
    return out


def random_hmm(n: int, k: int, rng: random.Random, density: float = 0.4, max_weight: int = 3) -> Hmm:
    """Random HMM with small integer weights; each row gets at least one edge."""
    states = [f"s{i}" for i in range(n)]
    letters = [chr(ord("a") + i) for i in range(k)]
    mats = [[[0] * n for _ in range(n)] for _ in range(k)]
    for q in range(n):
        cells = [(a, r) for a in range(k) for r in range(n) if rng.random() < density]
        if not cells:
            cells = [(rng.randrange(k), rng.randrange(n))]
        weights = [rng.randint(1, max_weight) for _ in cells]
        total = sum(weights)
        for (a, r), w in zip(cells, weights):
            mats[a][q][r] = F(w, total)
    return make_hmm(states, letters, {letters[a]: mats[a] for a in range(k)})


def random_instance(n: int, k: int, rng: random.Random, density: float = 0.35) -> MortalityInstance:
    states = [f"q{i}" for i in range(n)]
    letters = [chr(ord("a") + i) for i in range(k)]
    phi = {a: [[int(rng.random() < density) for _ in range(n)] for _ in range(n)] for a in letters}
    return MortalityInstance.from_rows(states, letters, phi)
