"""Exact HMMs and matrix systems, words, runs, and the trace semantics.

States and letters are named at the interface (any hashable label, usually
strings) and handled as dense indices internally. Probabilities are
:class:`fractions.Fraction`; the float views used by Monte Carlo code are
derived lazily and cached.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidDistribution,
    ModelFormatError,
    NegativeEntry,
    NonStochastic,
    UnknownSymbol,
)
from .graph import Digraph

Matrix = tuple  # tuple of tuples of Fraction
Dist = tuple  # tuple of Fraction over the states, in state order

ZERO = Fraction(0)
ONE = Fraction(1)


def to_fraction(x) -> Fraction:
    """Parse a probability written as ``"p/q"``, an integer, a decimal string or a Fraction."""
    if isinstance(x, bool):
        raise ModelFormatError(f"not a rational: {x!r}")
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, float):
        # floats are taken at their shortest decimal repr, not their binary value
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelFormatError(f"not a rational: {x!r}") from exc
    raise ModelFormatError(f"not a rational: {x!r}")


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def zeros(n: int) -> Matrix:
    return tuple((ZERO,) * n for _ in range(n))


def mat_mul(x: Matrix, y: Matrix) -> Matrix:
    cols = list(zip(*y)) if y else []
    return tuple(tuple(sum((a * b for a, b in zip(row, col)), ZERO) for col in cols) for row in x)


def mat_add(x: Matrix, y: Matrix) -> Matrix:
    return tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(x, y))


def vec_mat(v: Sequence[Fraction], m: Matrix) -> tuple:
    n = len(m[0]) if m else 0
    out = [ZERO] * n
    for vi, row in zip(v, m):
        if vi:
            for j, mij in enumerate(row):
                if mij:
                    out[j] += vi * mij
    return tuple(out)


def mat_vec(m: Matrix, v: Sequence[Fraction]) -> tuple:
    return tuple(sum((a * b for a, b in zip(row, v)), ZERO) for row in m)


@dataclass(frozen=True, eq=False)
class MatrixSystem:
    """Nonnegative matrices ``psi[a]`` over a common state set; row sums are free."""

    states: tuple
    alphabet: tuple
    psi: tuple  # psi[a][q][r], letters and states by index

    def __post_init__(self):
        n = len(self.states)
        if len(set(self.states)) != n:
            raise ModelFormatError("duplicate state names")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ModelFormatError("duplicate letters")
        if len(self.psi) != len(self.alphabet):
            raise ModelFormatError("need exactly one matrix per letter")
        for a, m in enumerate(self.psi):
            if len(m) != n or any(len(row) != n for row in m):
                raise ModelFormatError(
                    f"matrix for letter {self.alphabet[a]!r} must be {n}x{n}"
                )
            for q, row in enumerate(m):
                for r, x in enumerate(row):
                    if not isinstance(x, Fraction):
                        raise ModelFormatError("matrix entries must be Fractions")
                    if x < 0:
                        raise NegativeEntry(self.alphabet[a], self.states[q], self.states[r], x)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_letters(self) -> int:
        return len(self.alphabet)

    @cached_property
    def state_index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def letter_index(self) -> dict:
        return {a: i for i, a in enumerate(self.alphabet)}

    def state_id(self, s) -> int:
        try:
            return self.state_index[s]
        except (KeyError, TypeError):
            raise UnknownSymbol(s, "state") from None

    def letter_id(self, a) -> int:
        try:
            return self.letter_index[a]
        except (KeyError, TypeError):
            raise UnknownSymbol(a, "letter") from None

    def letter_ids(self, word: Iterable) -> list[int]:
        return [self.letter_id(a) for a in word]

    def matrix(self, letter) -> Matrix:
        return self.psi[self.letter_id(letter)]

    @cached_property
    def float_psi(self) -> np.ndarray:
        """``(letters, n, n)`` float64 view."""
        arr = np.zeros((self.n_letters, self.n_states, self.n_states))
        for a, m in enumerate(self.psi):
            for q, row in enumerate(m):
                for r, x in enumerate(row):
                    if x:
                        arr[a, q, r] = float(x)
        return arr

    @cached_property
    def pattern(self) -> np.ndarray:
        """Exact zero pattern of ``psi`` as a boolean array."""
        arr = np.zeros((self.n_letters, self.n_states, self.n_states), dtype=np.bool_)
        for a, m in enumerate(self.psi):
            for q, row in enumerate(m):
                for r, x in enumerate(row):
                    arr[a, q, r] = x > 0
        return arr

    @cached_property
    def succ_masks(self) -> tuple:
        """``succ_masks[a][q]``: bitmask of states ``r`` with ``psi[a][q][r] > 0``."""
        out = []
        for m in self.psi:
            out.append(tuple(sum(1 << r for r, x in enumerate(row) if x) for row in m))
        return tuple(out)

    def delta(self, mask: int, a: int) -> int:
        """Bitmask successor of a support bitmask under letter index ``a``."""
        succ = self.succ_masks[a]
        out = 0
        q = 0
        while mask:
            if mask & 1:
                out |= succ[q]
            mask >>= 1
            q += 1
        return out

    def mask_of(self, states: Iterable) -> int:
        return sum(1 << self.state_id(s) for s in set(states))

    def states_of(self, mask: int) -> frozenset:
        return frozenset(self.states[i] for i in range(self.n_states) if mask >> i & 1)

    def total(self) -> Matrix:
        """``sum_a psi[a]``."""
        n = self.n_states
        acc = [[ZERO] * n for _ in range(n)]
        for m in self.psi:
            for q, row in enumerate(m):
                for r, x in enumerate(row):
                    if x:
                        acc[q][r] += x
        return tuple(tuple(row) for row in acc)

    def graph(self) -> Digraph:
        """Underlying digraph over states: an edge wherever some letter has positive weight."""
        t = self.total()
        return Digraph(
            self.states,
            tuple(frozenset(r for r, x in enumerate(row) if x) for row in t),
        )

    def with_labels(self, states=None, alphabet=None) -> "MatrixSystem":
        return type(self)(
            tuple(states) if states is not None else self.states,
            tuple(alphabet) if alphabet is not None else self.alphabet,
            self.psi,
        )

    def __repr__(self):
        return f"{type(self).__name__}(states={list(self.states)}, alphabet={list(self.alphabet)})"


class Hmm(MatrixSystem):
    """A matrix system whose total ``sum_a psi[a]`` is row-stochastic."""

    def __post_init__(self):
        super().__post_init__()
        if not self.states or not self.alphabet:
            raise ModelFormatError("states and alphabet must be nonempty")
        for q, row in enumerate(self.total()):
            s = sum(row, ZERO)
            if s != 1:
                raise NonStochastic(self.states[q], 1 - s)

    @cached_property
    def sampling_tables(self):
        """Per state: cumulative probabilities over the positive (letter, next) pairs.

        Returns ``(cum, letter, nxt, length)``; row ``q`` is valid up to
        ``length[q]``. Cumulative sums are exact before conversion, so the
        last entry of each row is exactly 1.0.
        """
        n = self.n_states
        rows = []
        for q in range(n):
            pairs = [(a, r, self.psi[a][q][r]) for a in range(self.n_letters) for r in range(n)
                     if self.psi[a][q][r]]
            rows.append(pairs)
        k = max(len(p) for p in rows)
        cum = np.ones((n, k))
        letter = np.zeros((n, k), dtype=np.int64)
        nxt = np.zeros((n, k), dtype=np.int64)
        length = np.zeros(n, dtype=np.int64)
        for q, pairs in enumerate(rows):
            acc = ZERO
            for j, (a, r, p) in enumerate(pairs):
                acc += p
                cum[q, j] = float(acc)
                letter[q, j] = a
                nxt[q, j] = r
            length[q] = len(pairs)
        return cum, letter, nxt, length


def _matrix_from_rows(rows, n: int, letter) -> Matrix:
    if not isinstance(rows, (list, tuple)) or len(rows) != n:
        raise ModelFormatError(f"transitions[{letter!r}] must have {n} rows")
    out = []
    for row in rows:
        if not isinstance(row, (list, tuple)) or len(row) != n:
            raise ModelFormatError(f"transitions[{letter!r}] rows must have {n} entries")
        out.append(tuple(to_fraction(x) for x in row))
    return tuple(out)


def make_hmm(states: Sequence, alphabet: Sequence, transitions: Mapping) -> Hmm:
    """Build an Hmm from ``letter -> row-major matrix``; entries may be strings."""
    states, alphabet = tuple(states), tuple(alphabet)
    for a in transitions:
        if a not in alphabet:
            raise UnknownSymbol(a, "letter")
    n = len(states)
    psi = []
    for a in alphabet:
        if a in transitions:
            psi.append(_matrix_from_rows(transitions[a], n, a))
        else:
            psi.append(zeros(n))
    return Hmm(states, alphabet, tuple(psi))


def make_system(states: Sequence, alphabet: Sequence, transitions: Mapping) -> MatrixSystem:
    states, alphabet = tuple(states), tuple(alphabet)
    n = len(states)
    psi = tuple(
        _matrix_from_rows(transitions[a], n, a) if a in transitions else zeros(n)
        for a in alphabet
    )
    return MatrixSystem(states, alphabet, psi)


_MODEL_KEYS = {"states", "alphabet", "transitions", "initial_distributions"}


def validate_hmm(raw: Mapping) -> Hmm:
    """Check a parsed model description and return the Hmm it describes."""
    return parse_model(raw)[0]


def parse_model(raw: Mapping) -> tuple[Hmm, dict]:
    """Like :func:`validate_hmm` but also returns the named initial distributions."""
    if not isinstance(raw, Mapping):
        raise ModelFormatError("model description must be a mapping")
    extra = set(raw) - _MODEL_KEYS
    if extra:
        raise ModelFormatError(f"unknown keys: {sorted(extra)}")
    for key in ("states", "alphabet", "transitions"):
        if key not in raw:
            raise ModelFormatError(f"missing key {key!r}")
    states, alphabet = raw["states"], raw["alphabet"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise ModelFormatError("states must be a list of strings")
    if not isinstance(alphabet, list) or not all(isinstance(a, str) for a in alphabet):
        raise ModelFormatError("alphabet must be a list of strings")
    if not states or not alphabet:
        raise ModelFormatError("states and alphabet must be nonempty")
    if not isinstance(raw["transitions"], Mapping):
        raise ModelFormatError("transitions must map letters to matrices")
    h = make_hmm(states, alphabet, raw["transitions"])
    dists = {}
    for name, weights in (raw.get("initial_distributions") or {}).items():
        if not isinstance(weights, Mapping):
            raise ModelFormatError(f"initial distribution {name!r} must map states to rationals")
        dists[name] = as_dist(h, {s: to_fraction(x) for s, x in weights.items()})
    return h, dists


def fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dump_model(h: MatrixSystem, dists: Mapping | None = None) -> dict:
    """Inverse of :func:`parse_model` (labels are stringified)."""
    out = {
        "states": [str(s) for s in h.states],
        "alphabet": [str(a) for a in h.alphabet],
        "transitions": {
            str(a): [[fraction_str(x) for x in row] for row in h.psi[i]]
            for i, a in enumerate(h.alphabet)
        },
    }
    if dists:
        out["initial_distributions"] = {
            name: {str(s): fraction_str(p) for s, p in zip(h.states, d) if p}
            for name, d in dists.items()
        }
    return out


# distributions


def as_dist(h: MatrixSystem, spec) -> Dist:
    """Coerce ``spec`` into a distribution over ``h.states``.

    Accepts a full weight vector, a mapping ``state -> weight`` (missing
    states get 0) or a single state label (Dirac).
    """
    n = h.n_states
    if isinstance(spec, Mapping):
        w = [ZERO] * n
        for s, p in spec.items():
            w[h.state_id(s)] += to_fraction(p)
    elif isinstance(spec, (list, tuple)) and len(spec) == n and not _is_state(h, spec):
        w = [to_fraction(p) for p in spec]
    else:
        w = [ZERO] * n
        w[h.state_id(spec)] = ONE
    if any(p < 0 for p in w):
        raise InvalidDistribution("negative weight")
    if sum(w, ZERO) != 1:
        raise InvalidDistribution(f"weights sum to {sum(w, ZERO)}, not 1")
    return tuple(w)


def _is_state(h: MatrixSystem, x) -> bool:
    try:
        return x in h.state_index
    except TypeError:
        return False


def dirac(h: MatrixSystem, state) -> Dist:
    w = [ZERO] * h.n_states
    w[h.state_id(state)] = ONE
    return tuple(w)


def uniform(h: MatrixSystem, states: Iterable | None = None) -> Dist:
    idx = sorted({h.state_id(s) for s in (h.states if states is None else states)})
    if not idx:
        raise InvalidDistribution("uniform over the empty set")
    w = [ZERO] * h.n_states
    for i in idx:
        w[i] = Fraction(1, len(idx))
    return tuple(w)


def support(h: MatrixSystem, v: Sequence) -> frozenset:
    return frozenset(h.states[i] for i, x in enumerate(v) if x)


def support_mask(v: Sequence) -> int:
    return sum(1 << i for i, x in enumerate(v) if x)


# semantics


def psi_word(h: MatrixSystem, word: Iterable) -> Matrix:
    """Exact ``psi(a1)...psi(an)``; the empty word gives the identity."""
    out = identity(h.n_states)
    for a in h.letter_ids(word):
        out = mat_mul(out, h.psi[a])
    return out


def dist_after(h: MatrixSystem, pi: Sequence, word: Iterable) -> tuple:
    """Exact row vector ``pi psi(w)``."""
    v = tuple(pi)
    for a in h.letter_ids(word):
        v = vec_mat(v, h.psi[a])
    return v


def trace_prob(h: MatrixSystem, pi: Sequence, word: Iterable) -> Fraction:
    """Probability of the cylinder ``w Sigma^omega`` from ``pi``, i.e. ``||pi psi(w)||``."""
    return sum(dist_after(h, pi, word), ZERO)


def support_step(h: MatrixSystem, states: Iterable, letter) -> frozenset:
    """States reachable from ``states`` by one ``letter``-transition."""
    return h.states_of(h.delta(h.mask_of(states), h.letter_id(letter)))


@dataclass(frozen=True)
class MarkovChain:
    states: tuple
    matrix: Matrix

    def __post_init__(self):
        for q, row in enumerate(self.matrix):
            s = sum(row, ZERO)
            if s != 1:
                raise NonStochastic(self.states[q], 1 - s)

    def __len__(self):
        return len(self.states)

    def graph(self) -> Digraph:
        return Digraph(
            self.states, tuple(frozenset(r for r, x in enumerate(row) if x) for row in self.matrix)
        )


def embedded_chain(h: Hmm) -> MarkovChain:
    """The state process ``(Q, sum_a psi(a))``."""
    return MarkovChain(h.states, h.total())


@dataclass(frozen=True)
class Run:
    """Finite run prefix ``q0 a1 q1 ... an qn`` stored as indices."""

    system: Hmm
    state_ids: tuple
    letter_ids: tuple

    def __len__(self):
        return len(self.letter_ids)

    @property
    def states(self) -> tuple:
        return tuple(self.system.states[i] for i in self.state_ids)

    @property
    def word(self) -> tuple:
        return tuple(self.system.alphabet[a] for a in self.letter_ids)


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """PCG64 generator; stream ``i`` of master seed ``s`` is seeded from ``SeedSequence([s, i])``."""
    entropy = [int(seed)] if stream is None else [int(seed), int(stream)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def initial_cdf(pi: Sequence) -> np.ndarray:
    acc = ZERO
    out = np.empty(len(pi))
    for i, p in enumerate(pi):
        acc += Fraction(p)
        out[i] = float(acc)
    return out


def draw_index(cdf: np.ndarray, u: float, limit: int | None = None) -> int:
    """Smallest ``j`` with ``u < cdf[j]``, clamped to the last valid slot."""
    k = len(cdf) if limit is None else limit
    j = int(np.searchsorted(cdf[:k], u, side="right"))
    return min(j, k - 1)


def sample_initial(pi: Sequence, rng: np.random.Generator) -> int:
    cdf = initial_cdf(pi)
    q = draw_index(cdf, rng.random())
    # guard against landing on a zero-weight state through rounding at the top
    while not pi[q]:
        q -= 1
    return q


def sample_run(h: Hmm, pi: Sequence, n: int, rng: np.random.Generator) -> Run:
    """Draw a run of ``n`` steps from ``P_pi``.

    One uniform picks the initial state, then one uniform per step picks a
    ``(letter, next state)`` pair; the numba kernels consume the stream the
    same way, so both paths produce the same run for the same generator.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    pi = as_dist(h, pi)
    cum, letter, nxt, length = h.sampling_tables
    q = sample_initial(pi, rng)
    qs, ls = [q], []
    for u in rng.random(n):
        k = length[q]
        j = min(int(np.searchsorted(cum[q, :k], u, side="right")), k - 1)
        ls.append(int(letter[q, j]))
        q = int(nxt[q, j])
        qs.append(q)
    return Run(h, tuple(qs), tuple(ls))


def restrict(m: MatrixSystem, keep: Iterable) -> MatrixSystem:
    """Principal sub-system on ``keep`` (kept in the original state order)."""
    idx = sorted({m.state_id(s) for s in keep})
    psi = tuple(tuple(tuple(mat[q][r] for r in idx) for q in idx) for mat in m.psi)
    return MatrixSystem(tuple(m.states[i] for i in idx), m.alphabet, psi)
