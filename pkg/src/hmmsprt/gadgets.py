"""Mortality instances and their reductions to HMM pairs.

An instance assigns a 0/1 matrix to each letter and asks whether some word's
product is the zero matrix. The two constructions here turn an instance into
an HMM with initial distributions such that mortality shows up either as
``P(E_-inf) = 1`` or as ``P(E_0) < 1``.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .errors import EmptyAfterTrimming, ModelFormatError
from .model import ZERO, Hmm, MatrixSystem, make_system, uniform

FRESH = "fresh"
BOTTOM = "q_bot"
SOURCE = "q2"
DOLLAR = "$"


@dataclass(frozen=True, eq=False)
class MortalityInstance:
    states: tuple
    alphabet: tuple
    phi: tuple  # phi[a][q][r] in {0, 1}

    def __post_init__(self):
        for m in self.phi:
            for row in m:
                if any(x not in (0, 1) for x in row):
                    raise ModelFormatError("mortality matrices must be 0/1")
        self.system  # shape checks

    @cached_property
    def system(self) -> MatrixSystem:
        psi = tuple(tuple(tuple(Fraction(x) for x in row) for row in m) for m in self.phi)
        return MatrixSystem(tuple(self.states), tuple(self.alphabet), psi)

    @classmethod
    def from_rows(cls, states: Sequence, alphabet: Sequence, phi: Mapping) -> "MortalityInstance":
        system = make_system(states, alphabet, phi)
        if any(x not in (0, 1) for m in system.psi for row in m for x in row):
            raise ModelFormatError("mortality matrices must be 0/1")
        mats = tuple(tuple(tuple(int(x) for x in row) for row in m) for m in system.psi)
        return cls(system.states, system.alphabet, mats)

    def to_dict(self) -> dict:
        return {
            "states": [str(s) for s in self.states],
            "alphabet": [str(a) for a in self.alphabet],
            "transitions": {str(a): [list(row) for row in m] for a, m in zip(self.alphabet, self.phi)},
        }


def parse_instance(raw: Mapping) -> MortalityInstance:
    """Read the model-like file layout: ``states``, ``alphabet``, ``transitions`` of 0/1 integers."""
    if not isinstance(raw, Mapping):
        raise ModelFormatError("instance must be a mapping")
    extra = set(raw) - {"states", "alphabet", "transitions"}
    if extra:
        raise ModelFormatError(f"unknown keys: {sorted(extra)}")
    for key in ("states", "alphabet", "transitions"):
        if key not in raw:
            raise ModelFormatError(f"missing key {key!r}")
    for rows in raw["transitions"].values():
        for row in rows:
            if any(isinstance(x, bool) or x not in (0, 1) for x in row):
                raise ModelFormatError("mortality matrices must hold the integers 0 and 1")
    return MortalityInstance.from_rows(raw["states"], raw["alphabet"], raw["transitions"])


def is_mortal(m: MortalityInstance) -> bool:
    """Brute force over supports: can the full state set be driven to the empty set?"""
    s = m.system
    full = (1 << s.n_states) - 1
    if full == 0:
        return True
    seen = {full}
    queue = deque([full])
    while queue:
        mask = queue.popleft()
        for a in range(s.n_letters):
            nxt = s.delta(mask, a)
            if nxt == 0:
                return True
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def _uniformize(states, alphabet, edges) -> Hmm:
    """HMM whose rows spread mass evenly over the listed ``(letter, target)`` edges."""
    n = len(states)
    sid = {s: i for i, s in enumerate(states)}
    lid = {a: i for i, a in enumerate(alphabet)}
    psi = [[[ZERO] * n for _ in range(n)] for _ in alphabet]
    for q, out in edges.items():
        w = Fraction(1, len(out))
        for a, r in out:
            psi[lid[a]][sid[q]][sid[r]] += w
    return Hmm(tuple(states), tuple(alphabet), tuple(tuple(tuple(r) for r in mat) for mat in psi))


def _edges(m: MortalityInstance, keep) -> dict:
    return {
        m.states[q]: [
            (m.alphabet[a], m.states[r])
            for a in range(len(m.alphabet))
            for r in keep
            if m.phi[a][q][r]
        ]
        for q in keep
    }


def trim_dead_states(m: MortalityInstance) -> list[int]:
    """Indices left after repeatedly dropping states whose rows are zero for every letter."""
    keep = list(range(len(m.states)))
    while True:
        alive = [q for q in keep if any(m.phi[a][q][r] for a in range(len(m.alphabet)) for r in keep)]
        if alive == keep:
            return keep
        keep = alive


def mortality_to_einf_gadget(m: MortalityInstance):
    """``(hmm, pi1, pi2)`` with ``P_pi2(E_-inf)`` equal to 1 if ``m`` is mortal and 0 otherwise.

    Raises :class:`EmptyAfterTrimming` when trimming removes every state; such
    an instance is always mortal.
    """
    keep = trim_dead_states(m)
    if not keep:
        raise EmptyAfterTrimming("every state has a zero row after trimming; the instance is mortal")
    states = [m.states[q] for q in keep]
    fresh = FRESH
    while fresh in states:
        fresh += "'"
    edges = _edges(m, keep)
    edges[fresh] = [(a, fresh) for a in m.alphabet]
    h = _uniformize(states + [fresh], m.alphabet, edges)
    return h, uniform(h, states), uniform(h, [fresh])


def mortality_to_e0_gadget(m: MortalityInstance):
    """``(hmm, pi1, pi2)`` with ``P_pi2(E_0) < 1`` if ``m`` is mortal and ``= 1`` otherwise.

    Adds a sink reached from every state by a fresh letter and a source that
    loops on every old letter.
    """
    names = set(m.states)
    bot, src, dollar = BOTTOM, SOURCE, DOLLAR
    while bot in names:
        bot += "'"
    while src in names or src == bot:
        src += "'"
    while dollar in m.alphabet:
        dollar += "$"
    keep = range(len(m.states))
    edges = _edges(m, keep)
    for q in m.states:
        edges[q].append((dollar, bot))
    edges[src] = [(a, src) for a in m.alphabet] + [(dollar, bot)]
    edges[bot] = [(dollar, bot)]
    states = list(m.states) + [bot, src]
    h = _uniformize(states, list(m.alphabet) + [dollar], edges)
    return h, uniform(h, m.states), uniform(h, [src])
