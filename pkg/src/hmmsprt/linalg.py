"""Exact rational linear algebra: solves, echelon forms, Markov-chain quantities, LP feasibility."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NotIrreducible, Singular, TargetNotClosed
from .graph import Digraph, induced, is_strongly_connected, reachable, scc_decompose
from .model import ONE, ZERO, Hmm, MarkovChain, mat_vec

Vector = tuple


def solve_linear(a: Sequence[Sequence], b: Sequence) -> Vector:
    """Solve ``a x = b`` exactly by Gauss-Jordan elimination."""
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("solve_linear needs a square system")
    m = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise Singular(f"matrix is singular (no pivot in column {col})")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        prow = [x / p for x in m[col]]
        m[col] = prow
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], prow)]
    return tuple(row[n] for row in m)


def rref(rows: Iterable[Sequence]) -> tuple[list[Vector], list[int]]:
    """Reduced row echelon form with zero rows dropped; returns ``(rows, pivot columns)``."""
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        m[r] = [x / p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return [tuple(row) for row in m[:r]], pivots


class EchelonBasis:
    """Incrementally maintained basis in reduced echelon form."""

    def __init__(self, dim: int):
        self.dim = dim
        self.rows: list[list[Fraction]] = []
        self.pivots: list[int] = []

    def reduce(self, v: Sequence) -> list[Fraction]:
        w = [Fraction(x) for x in v]
        for row, p in zip(self.rows, self.pivots):
            if w[p]:
                f = w[p]
                w = [x - f * y for x, y in zip(w, row)]
        return w

    def __contains__(self, v) -> bool:
        return not any(self.reduce(v))

    def add(self, v: Sequence) -> bool:
        """Add ``v`` if independent; returns whether the basis grew."""
        w = self.reduce(v)
        p = next((i for i, x in enumerate(w) if x), None)
        if p is None:
            return False
        w = [x / w[p] for x in w]
        for i, row in enumerate(self.rows):
            if row[p]:
                f = row[p]
                self.rows[i] = [x - f * y for x, y in zip(row, w)]
        self.rows.append(w)
        self.pivots.append(p)
        return True

    def basis(self) -> list[Vector]:
        order = sorted(range(len(self.rows)), key=lambda i: self.pivots[i])
        return [tuple(self.rows[i]) for i in order]


def forward_space(h: Hmm) -> list[Vector]:
    """Basis (reduced echelon rows) of the span of ``psi(w) 1`` over all words ``w``."""
    basis = EchelonBasis(h.n_states)
    start = (ONE,) * h.n_states
    basis.add(start)
    queue = [start]
    while queue:
        v = queue.pop()
        for m in h.psi:
            w = mat_vec(m, v)
            if basis.add(w):
                queue.append(w)
    return basis.basis()


def stationary_distribution(mc: MarkovChain) -> Vector:
    """Unique ``mu`` with ``mu T = mu``, ``sum mu = 1`` on an irreducible chain."""
    n = len(mc)
    if not is_strongly_connected(mc.graph()):
        raise NotIrreducible("stationary_distribution needs a strongly connected chain")
    # equations (T^t - I) mu = 0 with the last one replaced by normalisation
    a = [[mc.matrix[j][i] - (ONE if i == j else ZERO) for j in range(n)] for i in range(n)]
    a[-1] = [ONE] * n
    b = [ZERO] * (n - 1) + [ONE]
    return solve_linear(a, b)


def _sparse_rows(chain) -> list[dict]:
    if hasattr(chain, "sparse_rows"):
        return chain.sparse_rows()
    return [{j: x for j, x in enumerate(row) if x} for row in chain.matrix]


def hitting_probabilities(chain, iota: Sequence, targets: Sequence[Iterable[int]]) -> list[Fraction]:
    """Probability of eventually entering each target set, starting from ``iota``.

    ``chain`` is a :class:`MarkovChain` or anything with ``sparse_rows()``
    (list of ``{successor: prob}``); targets are disjoint closed sets of node
    indices. Transient nodes are solved one SCC at a time in reverse
    topological order, so only the cyclic pieces need elimination.
    """
    rows = _sparse_rows(chain)
    n = len(rows)
    tsets = [frozenset(t) for t in targets]
    owner = {}
    for k, t in enumerate(tsets):
        for v in t:
            if v in owner:
                raise TargetNotClosed("target sets overlap")
            owner[v] = k
            if any(w not in t for w in rows[v]):
                raise TargetNotClosed(f"target {k} is not closed (node {v} leaves it)")
    k = len(tsets)
    g = Digraph(tuple(range(n)), tuple(frozenset(r) for r in rows))
    start = [i for i, p in enumerate(iota) if p]
    live = reachable(g, start)
    sub = induced(g, live)
    ids = sorted(live)
    dec = scc_decompose(sub)

    value: dict[int, list[Fraction]] = {}
    for comp in dec.components:  # sinks first
        nodes = [ids[i] for i in sorted(comp)]
        if nodes[0] in owner:
            for v in nodes:
                e = [ZERO] * k
                e[owner[v]] = ONE
                value[v] = e
            continue
        inside = {v: i for i, v in enumerate(nodes)}
        m = len(nodes)
        a = [[ZERO] * m for _ in range(m)]
        rhs = [[ZERO] * k for _ in range(m)]
        for i, v in enumerate(nodes):
            a[i][i] += ONE
            for w, p in rows[v].items():
                if w in inside:
                    a[i][inside[w]] -= p
                else:
                    for t, x in enumerate(value[w]):
                        if x:
                            rhs[i][t] += p * x
        if m == 1 and not a[0][0]:
            # a closed singleton outside every target never hits one
            value[nodes[0]] = [ZERO] * k
            continue
        try:
            cols = [solve_linear(a, [r[t] for r in rhs]) for t in range(k)]
        except Singular:
            # a closed non-target SCC: it can never reach a target
            if all(w in inside for v in nodes for w in rows[v]):
                for v in nodes:
                    value[v] = [ZERO] * k
                continue
            raise
        for i, v in enumerate(nodes):
            value[v] = [cols[t][i] for t in range(k)]

    out = [ZERO] * k
    for i in start:
        for t in range(k):
            out[t] += Fraction(iota[i]) * value[i][t]
    return out


def lp_feasible(a: Sequence[Sequence], b: Sequence) -> Vector | None:
    """Find ``x >= 0`` with ``a x = b`` exactly, or return ``None``.

    Phase one of the simplex method with Bland's rule on the artificial
    problem; degenerate cycling cannot occur.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    rows = []
    for row, bi in zip(a, b):
        row = [Fraction(x) for x in row]
        bi = Fraction(bi)
        if bi < 0:
            row, bi = [-x for x in row], -bi
        rows.append(row + [bi])
    if m == 0:
        return (ZERO,) * n
    # tableau columns: n originals, m artificials, rhs
    tab = [row[:n] + [ONE if i == j else ZERO for j in range(m)] + [row[n]] for i, row in enumerate(rows)]
    basis = [n + i for i in range(m)]
    width = n + m
    cost = [ZERO] * n + [ONE] * m
    while True:
        # reduced costs r_j = c_j - c_B B^-1 A_j
        red = []
        for j in range(width):
            s = cost[j] - sum((cost[basis[i]] * tab[i][j] for i in range(m)), ZERO)
            red.append(s)
        enter = next((j for j in range(width) if red[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][width] / tab[i][enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # unbounded cannot happen in phase one
            break
        r = best[1]
        p = tab[r][enter]
        tab[r] = [x / p for x in tab[r]]
        for i in range(m):
            if i != r and tab[i][enter]:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[r])]
        basis[r] = enter
    x = [ZERO] * width
    for i, j in enumerate(basis):
        x[j] = tab[i][width]
    if any(x[n:]):
        return None
    return tuple(x[:n])
