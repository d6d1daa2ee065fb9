"""Lyapunov systems and the candidate set of likelihood exponents.

Every finite likelihood exponent of an HMM is a difference
``lambda(S1_R) - lambda(S2_R)`` for some right-bottom SCC ``R`` of the
self-product graph. The Lyapunov exponents themselves are only estimated, by
Monte Carlo along words emitted by the driving HMM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import AlphabetMismatch, AllTrajectoriesDead
from .graph import Digraph, is_strongly_connected, scc_decompose
from .model import ONE, ZERO, Hmm, MatrixSystem, make_rng
from .sprt import run_replicas

DEFAULT_STEPS = 10**5
DEFAULT_REPLICAS = 32


def product_graph(m1: MatrixSystem, m2: MatrixSystem) -> Digraph:
    """Graph on ``Q1 x Q2`` with an edge when one letter moves both sides.

    Node ``(i, j)`` has index ``i * |Q2| + j`` and label ``(state_i, state_j)``.
    """
    if tuple(m1.alphabet) != tuple(m2.alphabet):
        raise AlphabetMismatch("product_graph needs both systems over the same alphabet")
    n1, n2 = m1.n_states, m2.n_states
    succ = [set() for _ in range(n1 * n2)]
    s1, s2 = m1.succ_masks, m2.succ_masks
    for a in range(m1.n_letters):
        for i in range(n1):
            ri = [r for r in range(n1) if s1[a][i] >> r & 1]
            if not ri:
                continue
            for j in range(n2):
                rj = [r for r in range(n2) if s2[a][j] >> r & 1]
                for r1 in ri:
                    for r2 in rj:
                        succ[i * n2 + j].add(r1 * n2 + r2)
    labels = tuple((x, y) for x in m1.states for y in m2.states)
    return Digraph(labels, tuple(frozenset(s) for s in succ))


@dataclass(frozen=True)
class RightBottomScc:
    pairs: frozenset  # (i, j) state-index pairs of the self-product
    right: frozenset  # projection onto the second component, a bottom SCC of the embedded chain

    def labels(self, h: Hmm) -> list[tuple]:
        return sorted((h.states[i], h.states[j]) for i, j in self.pairs)


def right_bottom_sccs(h: Hmm) -> list[RightBottomScc]:
    """SCCs ``R`` of the self-product whose right projection is a bottom SCC of ``h``."""
    bottoms = {frozenset(c) for c in scc_decompose(h.graph()).bottom_components()}
    n = h.n_states
    out = []
    for comp in scc_decompose(product_graph(h, h)).components:
        pairs = frozenset(divmod(v, n) for v in comp)
        right = frozenset(j for _, j in pairs)
        if right in bottoms:
            out.append(RightBottomScc(pairs, right))
    out.sort(key=lambda r: sorted(r.pairs))
    return out


@dataclass(frozen=True, eq=False)
class GeneralizedLyapunovSystem:
    """Matrix system ``m`` driven by the strongly connected HMM ``driver``.

    ``c`` is a set of ``(m state index, driver state index)`` pairs forming a
    bottom SCC of the product graph of ``m`` and ``driver``.
    """

    m: MatrixSystem
    driver: Hmm
    c: frozenset

    def check(self) -> None:
        if not is_strongly_connected(self.driver.graph()):
            raise ValueError("driver HMM must be strongly connected")
        g = product_graph(self.m, self.driver)
        dec = scc_decompose(g)
        n2 = self.driver.n_states
        ids = {i * n2 + j for i, j in self.c}
        k = dec.component_of[next(iter(ids))]
        if set(dec.components[k]) != ids or k not in dec.bottom:
            raise ValueError("c must be a bottom SCC of the product graph")

    def start(self) -> tuple[int, int]:
        return min(self.c)


@dataclass(frozen=True, eq=False)
class LyapunovSystem:
    m: MatrixSystem
    rho: tuple  # Fraction per letter, all positive

    def check(self) -> None:
        if any(p <= 0 for p in self.rho) or sum(self.rho, ZERO) != 1:
            raise ValueError("rho must be a full-support distribution")
        if not is_strongly_connected(self.m.graph()):
            raise ValueError("matrix system must have a strongly connected graph")


def _extended_hmm(h: Hmm, keep: frozenset) -> Hmm:
    """``h`` on ``keep`` emitting ``(letter, next state)``; ``keep`` must be closed."""
    idx = sorted(keep)
    pos = {q: i for i, q in enumerate(idx)}
    letters, psi = [], []
    for a in range(h.n_letters):
        for r in idx:
            mat = [[ZERO] * len(idx) for _ in idx]
            for q in idx:
                mat[pos[q]][pos[r]] = h.psi[a][q][r]
            letters.append((h.alphabet[a], h.states[r]))
            psi.append(tuple(tuple(row) for row in mat))
    return Hmm(tuple(h.states[q] for q in idx), tuple(letters), tuple(psi))


def _lifted_system(h: Hmm, nodes: list[tuple], right: list[int]) -> MatrixSystem:
    """Pair system on ``nodes`` with ``(a, r2)`` moving the left part by ``psi(a)`` and pinning the right to ``r2``."""
    pos = {v: i for i, v in enumerate(nodes)}
    letters, psi = [], []
    for a in range(h.n_letters):
        for r2 in right:
            mat = [[ZERO] * len(nodes) for _ in nodes]
            for (q1, _q2), i in pos.items():
                for r1 in range(h.n_states):
                    p = h.psi[a][q1][r1]
                    j = pos.get((r1, r2))
                    if p and j is not None:
                        mat[i][j] = p
            letters.append((h.alphabet[a], h.states[r2]))
            psi.append(tuple(tuple(row) for row in mat))
    labels = tuple((h.states[q1], h.states[q2]) for q1, q2 in nodes)
    return MatrixSystem(labels, tuple(letters), tuple(psi))


def diagonal_scc(h: Hmm, right: frozenset) -> frozenset:
    """The self-product SCC holding the diagonal of ``right`` (one SCC, since ``right`` is strongly connected)."""
    return _diagonal_scc_cached(h, right)


@lru_cache(maxsize=256)
def _diagonal_scc_cached(h: Hmm, right: frozenset) -> frozenset:
    n = h.n_states
    dec = scc_decompose(product_graph(h, h))
    q = min(right)
    comp = dec.components[dec.component_of[q * n + q]]
    return frozenset(divmod(v, n) for v in comp)


def build_generalized_systems(h: Hmm, r: RightBottomScc):
    """``(S1, S2)``: numerator system over ``R`` and denominator system over the diagonal SCC."""
    right = sorted(r.right)
    driver = _extended_hmm(h, r.right)
    dpos = {q: i for i, q in enumerate(right)}
    out = []
    for comp in (r.pairs, diagonal_scc(h, r.right)):
        nodes = sorted(comp)
        m = _lifted_system(h, nodes, right)
        c = frozenset((i, dpos[q2]) for i, (_q1, q2) in enumerate(nodes))
        out.append(GeneralizedLyapunovSystem(m, driver, c))
    return tuple(out)


@dataclass(frozen=True)
class Atoms:
    """Interval atoms of ``[0,1)``: ``bounds[k] <= u < bounds[k+1]`` is atom ``k``."""

    bounds: tuple

    @property
    def lengths(self) -> tuple:
        return tuple(b - a for a, b in zip(self.bounds, self.bounds[1:]))


def _driver_pairs(driver: Hmm, p: int) -> list[tuple[int, int, Fraction]]:
    return [
        (b, q, driver.psi[b][p][q])
        for b in range(driver.n_letters)
        for q in range(driver.n_states)
        if driver.psi[b][p][q]
    ]


def generalized_to_plain(s: GeneralizedLyapunovSystem) -> LyapunovSystem:
    """Equivalent Lyapunov system over the interval atoms induced by the driver's transition ``[0,1)`` split."""
    d = s.driver
    cuts = {ZERO, ONE}
    layouts = []
    for p in range(d.n_states):
        acc = ZERO
        lay = []
        for b, q, w in _driver_pairs(d, p):
            lay.append((acc, acc + w, b, q))
            acc += w
            cuts.add(acc)
        layouts.append(lay)
    bounds = tuple(sorted(cuts))
    atoms = Atoms(bounds)
    nodes = sorted(s.c)
    pos = {v: i for i, v in enumerate(nodes)}
    psi = []
    for lo in bounds[:-1]:
        mat = [[ZERO] * len(nodes) for _ in nodes]
        for (q1, q2), i in pos.items():
            # which (letter, next driver state) does this atom mean from q2?
            b, r2 = next((b, q) for a0, a1, b, q in layouts[q2] if a0 <= lo < a1)
            for r1 in range(s.m.n_states):
                x = s.m.psi[b][q1][r1]
                j = pos.get((r1, r2))
                if x and j is not None:
                    mat[i][j] = x
        psi.append(tuple(tuple(row) for row in mat))
    labels = tuple((s.m.states[a], d.states[b]) for a, b in nodes)
    letters = tuple(f"[{a},{b})" for a, b in zip(bounds, bounds[1:]))
    return LyapunovSystem(MatrixSystem(labels, letters, tuple(psi)), atoms.lengths)


def atom_letters(ls: LyapunovSystem) -> list[tuple[Fraction, Fraction]]:
    out = []
    for name in ls.m.alphabet:
        a, b = name[1:-1].split(",")
        out.append((Fraction(a), Fraction(b)))
    return out


@dataclass(frozen=True)
class LyapunovEstimate:
    mean: float | None
    stderr: float | None
    n: int
    replicas: int
    dead_fraction: float
    values: tuple = ()  # per replica, -inf for dead trajectories


def _walk_tables(s):
    """Driver tables and the matrix-letter lookup for either kind of system."""
    if isinstance(s, LyapunovSystem):
        k = len(s.rho)
        cum = np.empty((1, k))
        acc = ZERO
        for i, p in enumerate(s.rho):
            acc += p
            cum[0, i] = float(acc)
        nxt = np.zeros((1, k), dtype=np.int64)
        length = np.array([k], dtype=np.int64)
        letter_of = np.arange(k, dtype=np.int64).reshape(1, k)
        return cum, nxt, length, letter_of
    cum, letter, nxt, length = s.driver.sampling_tables
    if tuple(s.m.alphabet) != tuple(s.driver.alphabet):
        raise AlphabetMismatch("matrix system and driver must share the alphabet")
    return cum, nxt, length, letter


def _walk_many(s, start, n: int, replicas: int, seed: int, threads: int) -> np.ndarray:
    cum, nxt, length, letter_of = _walk_tables(s)
    m = s.m
    if isinstance(s, LyapunovSystem):
        q0, p0 = (start if start is not None else 0), 0
    else:
        q0, p0 = start if start is not None else s.start()
    v0 = np.zeros(m.n_states)
    v0[q0] = 1.0
    phi, pattern = m.float_psi, m.pattern

    def one(i):
        acc, dead = _kernels.lyap_walk(phi, pattern, cum, nxt, length, letter_of, p0, v0, n, make_rng(seed, i))
        return acc / n if dead < 0 else -math.inf

    return np.array(run_replicas(one, replicas, threads))


def _estimate(values: np.ndarray, n: int) -> LyapunovEstimate:
    alive = values[np.isfinite(values)]
    dead = 1 - len(alive) / len(values)
    if len(alive) == 0:
        return LyapunovEstimate(None, None, n, len(values), dead, tuple(values))
    se = float(alive.std(ddof=1) / math.sqrt(len(alive))) if len(alive) > 1 else 0.0
    return LyapunovEstimate(float(alive.mean()), se, n, len(values), dead, tuple(values))


def mc_lyapunov(
    s,
    start=None,
    n: int = DEFAULT_STEPS,
    replicas: int = DEFAULT_REPLICAS,
    seed: int = 0,
    threads: int = 1,
) -> LyapunovEstimate:
    """Estimate ``lim (1/n) ln |e_start Phi(w_n)|``.

    ``start`` is a state index for a plain system and an ``(m state, driver
    state)`` pair for a generalized one; it defaults to the first state /
    the smallest pair of ``c``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    est = _estimate(_walk_many(s, start, n, replicas, seed, threads), n)
    if est.mean is None:
        raise AllTrajectoriesDead(f"all {replicas} trajectories reached the zero vector")
    return est


@dataclass(frozen=True)
class Candidate:
    scc: RightBottomScc
    systems: tuple
    numerator: LyapunovEstimate
    denominator: LyapunovEstimate
    diff: float | None  # None when the numerator always dies
    diff_stderr: float | None


def candidate_exponents(
    h: Hmm,
    n: int = DEFAULT_STEPS,
    replicas: int = DEFAULT_REPLICAS,
    seed: int = 0,
    threads: int = 1,
) -> list[Candidate]:
    """One Monte Carlo difference estimate per right-bottom SCC.

    Both systems of a pair share the driving HMM, so they are run on the
    same random words (same seeds) and the difference's standard error comes
    from the paired per-replica differences. Finite negative likelihood
    exponents are among these differences.
    """
    out = []
    for r in right_bottom_sccs(h):
        s1, s2 = build_generalized_systems(h, r)
        v1 = _walk_many(s1, None, n, replicas, seed, threads)
        v2 = _walk_many(s2, None, n, replicas, seed, threads)
        e1, e2 = _estimate(v1, n), _estimate(v2, n)
        ok = np.isfinite(v1) & np.isfinite(v2)
        if ok.sum() == 0:
            diff = se = None
        else:
            d = v1[ok] - v2[ok]
            diff = float(d.mean())
            se = float(d.std(ddof=1) / math.sqrt(len(d))) if len(d) > 1 else 0.0
        out.append(Candidate(r, (s1, s2), e1, e2, diff, se))
    return out
