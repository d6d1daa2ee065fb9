"""The Markov chain over (numerator support, denominator state) and its exponent classes.

A run sampled from ``pi2`` drives the pair ``(supp(pi1 psi(w)), current state)``
into some bottom SCC, and the SCC alone fixes the limit of ``(1/n) ln L_n``:
``-inf`` when the support is empty, ``0`` when the support carries a
distribution that cannot be told apart from the current state, and a finite
negative number otherwise.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .equivalence import DEFAULT_BUDGET, Distinguishable, NotDistinguishable, distinguishability
from .errors import ClassificationIncomplete, NodeCapExceeded
from .graph import Digraph, scc_decompose, SccDecomposition
from .linalg import hitting_probabilities
from .model import ZERO, Hmm, as_dist, dirac, fraction_str, make_rng, sample_run, support_mask, uniform
from .sprt import loglik_series

DEFAULT_NODE_CAP = 10**5


class ExponentClass(str, Enum):
    NEG_INF = "-inf"
    ZERO = "0"
    NEG_FINITE = "negative-finite"
    UNKNOWN_FINITE = "unknown-finite"


@dataclass(frozen=True, eq=False)
class SupportChain:
    hmm: Hmm
    nodes: tuple  # (support bitmask, state index)
    rows: tuple  # rows[i]: {j: probability}
    iota: tuple
    scc: SccDecomposition
    class_of_bottom: dict  # component index -> ExponentClass

    def __len__(self):
        return len(self.nodes)

    def sparse_rows(self) -> list[dict]:
        return list(self.rows)

    def label(self, i: int) -> tuple:
        mask, q = self.nodes[i]
        return self.hmm.states_of(mask), self.hmm.states[q]

    def bottom_sccs(self) -> list[int]:
        return sorted(self.scc.bottom)

    def members(self, k: int) -> list[int]:
        return sorted(self.scc.components[k])

    def supports(self) -> set[frozenset]:
        return {self.hmm.states_of(m) for m, _ in self.nodes}

    def support_edges(self) -> set[tuple]:
        """Edges of the S-projection: ``S -> S'`` whenever some node pair has positive weight."""
        out = set()
        for i, row in enumerate(self.rows):
            for j in row:
                out.add((self.hmm.states_of(self.nodes[i][0]), self.hmm.states_of(self.nodes[j][0])))
        return out


def build_support_chain(
    h: Hmm,
    pi1,
    pi2,
    node_cap: int = DEFAULT_NODE_CAP,
    budget: int = DEFAULT_BUDGET,
) -> SupportChain:
    """Materialise the part reachable from ``iota((supp pi1, q)) = pi2(q)`` and classify its bottom SCCs."""
    pi1, pi2 = as_dist(h, pi1), as_dist(h, pi2)
    s0 = support_mask(pi1)
    index: dict[tuple, int] = {}
    nodes: list[tuple] = []
    rows: list[dict] = []
    queue = deque()

    def intern(node):
        i = index.get(node)
        if i is None:
            if len(nodes) >= node_cap:
                raise NodeCapExceeded(f"support chain exceeds the node cap of {node_cap}")
            i = index[node] = len(nodes)
            nodes.append(node)
            rows.append({})
            queue.append(i)
        return i

    iota = {}
    for q, p in enumerate(pi2):
        if p:
            iota[intern((s0, q))] = p
    while queue:
        i = queue.popleft()
        mask, q = nodes[i]
        row: dict[int, Fraction] = {}
        for a in range(h.n_letters):
            succ = h.psi[a][q]
            nmask = None
            for r, p in enumerate(succ):
                if p:
                    if nmask is None:
                        nmask = h.delta(mask, a)
                    j = intern((nmask, r))
                    row[j] = row.get(j, ZERO) + p
        rows[i] = row

    iota_vec = tuple(iota.get(i, ZERO) for i in range(len(nodes)))
    g = Digraph(tuple(range(len(nodes))), tuple(frozenset(r) for r in rows))
    dec = scc_decompose(g)
    chain_classes = {}
    for k in dec.bottom:
        chain_classes[k] = classify_bottom_scc(h, [nodes[i] for i in dec.components[k]], budget)
    return SupportChain(h, tuple(nodes), tuple(rows), iota_vec, dec, chain_classes)


def classify_bottom_scc(h: Hmm, component, budget: int = DEFAULT_BUDGET) -> ExponentClass:
    """Exponent class of a bottom SCC given as ``(support bitmask, state index)`` nodes."""
    component = list(component)
    if any(mask == 0 for mask, _ in component):
        return ExponentClass.NEG_INF
    mask, q = min(component)
    verdict = distinguishability(h, uniform(h, h.states_of(mask)), dirac(h, h.states[q]), budget)
    if isinstance(verdict, Distinguishable):
        return ExponentClass.NEG_FINITE
    if isinstance(verdict, NotDistinguishable):
        return ExponentClass.ZERO
    return ExponentClass.UNKNOWN_FINITE


def _class_probability(chain: SupportChain, cls: ExponentClass) -> Fraction:
    comps = [k for k, c in chain.class_of_bottom.items() if c is cls]
    if not comps:
        return ZERO
    target = frozenset().union(*(chain.scc.components[k] for k in comps))
    return hitting_probabilities(chain, chain.iota, [target])[0]


def prob_E0(h: Hmm, pi1, pi2, chain: SupportChain | None = None, **kw) -> Fraction:
    """Exact probability under ``pi2`` that ``L_n`` converges to a positive limit (exponent 0)."""
    chain = chain or build_support_chain(h, pi1, pi2, **kw)
    if ExponentClass.UNKNOWN_FINITE in chain.class_of_bottom.values():
        raise ClassificationIncomplete("a bottom SCC could not be classified within the budget")
    return _class_probability(chain, ExponentClass.ZERO)


def prob_Einf(h: Hmm, pi1, pi2, chain: SupportChain | None = None, **kw) -> Fraction:
    """Exact probability under ``pi2`` that ``L_n`` eventually hits 0."""
    chain = chain or build_support_chain(h, pi1, pi2, **kw)
    return _class_probability(chain, ExponentClass.NEG_INF)


@dataclass(frozen=True)
class ProfileEntry:
    cls: ExponentClass
    probability: Fraction
    sccs: tuple  # bottom-SCC component indices in this entry


@dataclass(frozen=True)
class ExponentProfile:
    entries: tuple
    chain: SupportChain

    @property
    def n_states(self) -> int:
        return self.chain.hmm.n_states

    def by_class(self) -> dict:
        out: dict[ExponentClass, Fraction] = {}
        for e in self.entries:
            out[e.cls] = out.get(e.cls, ZERO) + e.probability
        return out

    def handle_count(self) -> int:
        """Zero and -inf count once each; every finite negative bottom SCC is its own handle."""
        return len(self.entries)

    @property
    def bound(self) -> int:
        return self.n_states**2 + 1


def exponent_profile(h: Hmm, pi1, pi2, chain: SupportChain | None = None, **kw) -> ExponentProfile:
    """Probability of each exponent class; finite negative SCCs are kept separate.

    Probabilities are exact and sum to 1. ``UNKNOWN_FINITE`` entries appear
    (one per SCC) if the distinguishability budget ran out.
    """
    chain = chain or build_support_chain(h, pi1, pi2, **kw)
    groups: list[tuple[ExponentClass, tuple]] = []
    for cls in (ExponentClass.NEG_INF, ExponentClass.ZERO):
        ks = tuple(k for k in chain.bottom_sccs() if chain.class_of_bottom[k] is cls)
        if ks:
            groups.append((cls, ks))
    for k in chain.bottom_sccs():
        cls = chain.class_of_bottom[k]
        if cls in (ExponentClass.NEG_FINITE, ExponentClass.UNKNOWN_FINITE):
            groups.append((cls, (k,)))
    targets = [frozenset().union(*(chain.scc.components[k] for k in ks)) for _, ks in groups]
    probs = hitting_probabilities(chain, chain.iota, targets)
    entries = tuple(ProfileEntry(cls, p, ks) for (cls, ks), p in zip(groups, probs) if p)
    return ExponentProfile(entries, chain)


def to_dot(chain: SupportChain) -> str:
    """Graphviz rendering; bottom SCCs are clustered and labelled with their class."""
    h = chain.hmm

    def name(i):
        s, q = chain.label(i)
        inner = ",".join(str(x) for x in h.states if x in s) or "∅"
        return f"{{{inner}}}, {q}"

    lines = ["digraph support_chain {", "  rankdir=LR;", '  node [shape=box, fontname="monospace"];']
    for i in range(len(chain)):
        attrs = f'label="{name(i)}"'
        if chain.iota[i]:
            attrs += ", penwidth=2"
        lines.append(f"  n{i} [{attrs}];")
    for k in chain.bottom_sccs():
        cls = chain.class_of_bottom[k]
        lines.append(f"  subgraph cluster_{k} {{")
        lines.append(f'    label="bottom SCC {k}: {cls.value}";')
        for i in chain.members(k):
            lines.append(f"    n{i};")
        lines.append("  }")
    for i, row in enumerate(chain.rows):
        for j, p in sorted(row.items()):
            lines.append(f'  n{i} -> n{j} [label="{fraction_str(p)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SlopeSample:
    scc: int | None  # bottom SCC holding the final node, None if not yet absorbed
    slope: float  # -inf once the likelihood is zero


def sample_bottom_slopes(
    h: Hmm,
    pi1,
    pi2,
    chain: SupportChain,
    n: int = 10**4,
    runs: int = 20,
    seed: int = 0,
) -> list[SlopeSample]:
    """Simulate runs from ``pi2``, recording where each ends in the chain and its slope ``ln L_n / n``.

    The support-chain walk and the log-likelihood series see the same word
    because both draw from stream ``(seed, i)``.
    """
    pi1, pi2 = as_dist(h, pi1), as_dist(h, pi2)
    index = {node: i for i, node in enumerate(chain.nodes)}
    comp_of = chain.scc.component_of
    out = []
    for i in range(runs):
        run = sample_run(h, pi2, n, make_rng(seed, i))
        mask = support_mask(pi1)
        for a in run.letter_ids:
            mask = h.delta(mask, a)
        k = comp_of[index[(mask, run.state_ids[-1])]]
        series = loglik_series(h, pi2, pi1, pi2, n, seed=seed, stream=i)
        out.append(SlopeSample(k if k in chain.scc.bottom else None, float(series[-1]) / n))
    return out
