"""Exact likelihood exponents of deterministic HMMs.

With Dirac initial distributions the two beliefs of a deterministic HMM stay
Dirac, so the pair of current states together with the log-ratio increment
forms an HMM over ``Q x Q`` plus a sink. Each bottom SCC's exponent is its
stationary average increment, an exact :class:`LogExpr`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .errors import NotDeterministic
from .graph import scc_decompose
from .linalg import hitting_probabilities, stationary_distribution
from .logexpr import NEG_INF, LogExpr, linear_combination
from .model import ONE, ZERO, Hmm, MarkovChain, embedded_chain
from .support_chain import ExponentClass

SINK = "⊥"


def is_deterministic(h: Hmm) -> bool:
    """Every row of every letter matrix has at most one nonzero entry."""
    return all(sum(1 for x in row if x) <= 1 for m in h.psi for row in m)


@dataclass(frozen=True, eq=False)
class PairHmm:
    """States are ``(q1, q2)`` label pairs plus :data:`SINK`; letters are :class:`LogExpr` values."""

    hmm: Hmm
    start: int

    @property
    def states(self):
        return self.hmm.states

    @property
    def observations(self):
        return self.hmm.alphabet


def build_pair_hmm(h: Hmm, q1, q2) -> PairHmm:
    """The log-ratio-labelled pair HMM reachable from ``(q1, q2)``."""
    if not is_deterministic(h):
        raise NotDeterministic("build_pair_hmm needs a deterministic HMM")
    start = (h.state_id(q1), h.state_id(q2))
    n = h.n_states
    succ1 = [[next((r for r, x in enumerate(h.psi[a][q]) if x), None) for q in range(n)] for a in range(h.n_letters)]
    index = {start: 0}
    order = [start]
    edges: list[dict] = [{}]  # edges[i][(obs, j)] = prob
    queue = deque([start])
    while queue:
        node = queue.popleft()
        i = index[node]
        if node == SINK:
            edges[i][(NEG_INF, i)] = ONE
            continue
        a1, a2 = node
        out: dict = {}
        for a in range(h.n_letters):
            r2 = succ1[a][a2]
            if r2 is None:
                continue
            p2 = h.psi[a][a2][r2]
            r1 = succ1[a][a1]
            if r1 is None:
                target, obs = SINK, NEG_INF
            else:
                target, obs = (r1, r2), LogExpr.log(h.psi[a][a1][r1] / p2)
            if target not in index:
                index[target] = len(order)
                order.append(target)
                edges.append({})
                queue.append(target)
            key = (obs, index[target])
            out[key] = out.get(key, ZERO) + p2
        edges[i] = out

    obs_list = sorted({o for e in edges for o, _ in e}, key=lambda o: (not o.neg_inf, o.terms))
    oid = {o: k for k, o in enumerate(obs_list)}
    m = len(order)
    psi = [[[ZERO] * m for _ in range(m)] for _ in obs_list]
    for i, e in enumerate(edges):
        for (o, j), p in e.items():
            psi[oid[o]][i][j] += p
    labels = tuple(SINK if v == SINK else (h.states[v[0]], h.states[v[1]]) for v in order)
    hat = Hmm(labels, tuple(obs_list), tuple(tuple(tuple(r) for r in mat) for mat in psi))
    return PairHmm(hat, 0)


def average_observation(a_hat: PairHmm, component) -> LogExpr:
    """Stationary mean of the log-ratio increment on a bottom SCC (given as state indices)."""
    hat = a_hat.hmm
    nodes = sorted(component)
    if any(hat.states[i] == SINK for i in nodes):
        return NEG_INF
    pos = {v: k for k, v in enumerate(nodes)}
    t = embedded_chain(hat).matrix
    sub = tuple(tuple(t[i][j] for j in nodes) for i in nodes)
    mu = stationary_distribution(MarkovChain(tuple(hat.states[i] for i in nodes), sub))
    weights, exprs = [], []
    for o_id, obs in enumerate(hat.alphabet):
        mat = hat.psi[o_id]
        for i in nodes:
            mass = sum(mat[i], ZERO)
            if mass:
                weights.append(mu[pos[i]] * mass)
                exprs.append(obs)
    return linear_combination(weights, exprs)


@dataclass(frozen=True)
class ExactExponent:
    value: LogExpr
    probability: Fraction
    sccs: tuple

    @property
    def cls(self) -> ExponentClass:
        if self.value.neg_inf:
            return ExponentClass.NEG_INF
        if self.value.is_zero:
            return ExponentClass.ZERO
        return ExponentClass.NEG_FINITE


def exact_exponents(h: Hmm, q1, q2) -> list[ExactExponent]:
    """All likelihood exponents for ``e_q1`` vs ``e_q2`` with their exact probabilities.

    Bottom SCCs with equal exponent are merged; the list is sorted from
    ``-inf`` upwards.
    """
    a_hat = build_pair_hmm(h, q1, q2)
    chain = embedded_chain(a_hat.hmm)
    dec = scc_decompose(chain.graph())
    groups: dict[LogExpr, list[int]] = {}
    for k in sorted(dec.bottom):
        val = average_observation(a_hat, dec.components[k])
        groups.setdefault(val, []).append(k)
    vals = list(groups)
    targets = [frozenset().union(*(dec.components[k] for k in groups[v])) for v in vals]
    iota = [ZERO] * len(chain)
    iota[a_hat.start] = ONE
    probs = hitting_probabilities(chain, iota, targets)
    out = [ExactExponent(v, p, tuple(groups[v])) for v, p in zip(vals, probs) if p]
    out.sort(key=lambda e: (not e.value.neg_inf, float(e.value)))
    return out
