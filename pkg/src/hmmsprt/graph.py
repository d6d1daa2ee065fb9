"""Directed graphs over dense integer nodes: SCCs, condensation, reachability."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence


@dataclass(frozen=True)
class Digraph:
    """A digraph whose nodes are ``0..n-1``; ``labels[i]`` names node ``i``."""

    labels: tuple
    succ: tuple  # succ[i]: frozenset of successor indices

    def __post_init__(self):
        n = len(self.labels)
        if len(self.succ) != n:
            raise ValueError("succ must have one entry per node")
        for i, s in enumerate(self.succ):
            for j in s:
                if not 0 <= j < n:
                    raise ValueError(f"edge {i}->{j} references a missing node")

    @classmethod
    def from_edges(cls, labels: Sequence[Hashable], edges: Iterable[tuple[int, int]]) -> "Digraph":
        succ = [set() for _ in labels]
        for i, j in edges:
            succ[i].add(j)
        return cls(tuple(labels), tuple(frozenset(s) for s in succ))

    def __len__(self) -> int:
        return len(self.labels)

    def edges(self):
        for i, s in enumerate(self.succ):
            for j in sorted(s):
                yield i, j

    def index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}


@dataclass(frozen=True)
class SccDecomposition:
    components: tuple  # tuple of frozensets of node indices
    component_of: tuple  # node index -> component index
    condensation: tuple  # component index -> frozenset of successor components
    bottom: frozenset = field(default=frozenset())

    def is_bottom(self, k: int) -> bool:
        return k in self.bottom

    def bottom_components(self) -> list[frozenset]:
        return [self.components[k] for k in sorted(self.bottom)]


def scc_decompose(g: Digraph) -> SccDecomposition:
    """Tarjan's algorithm, iterative so deep chains don't hit the recursion limit.

    Components come out in reverse topological order of the condensation
    (sinks first); trivial SCCs are included.
    """
    n = len(g)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[frozenset] = []
    counter = 0
    succ = [sorted(s) for s in g.succ]

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            if pos < len(succ[v]):
                work[-1] = (v, pos + 1)
                w = succ[v][pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(frozenset(comp))

    component_of = [0] * n
    for k, comp in enumerate(comps):
        for v in comp:
            component_of[v] = k
    cond = [set() for _ in comps]
    for v in range(n):
        for w in g.succ[v]:
            if component_of[v] != component_of[w]:
                cond[component_of[v]].add(component_of[w])
    bottom = frozenset(k for k, s in enumerate(cond) if not s)
    return SccDecomposition(
        components=tuple(comps),
        component_of=tuple(component_of),
        condensation=tuple(frozenset(s) for s in cond),
        bottom=bottom,
    )


def reachable(g: Digraph, sources: Iterable[int]) -> frozenset:
    """Forward closure of ``sources`` (the sources themselves included)."""
    seen = set(sources)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in g.succ[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return frozenset(seen)


def is_strongly_connected(g: Digraph) -> bool:
    if len(g) == 0:
        return False
    if len(reachable(g, [0])) != len(g):
        return False
    pred = [set() for _ in range(len(g))]
    for i, j in g.edges():
        pred[j].add(i)
    rev = Digraph(g.labels, tuple(frozenset(p) for p in pred))
    return len(reachable(rev, [0])) == len(g)


def induced(g: Digraph, nodes: Iterable[int]) -> Digraph:
    """Subgraph induced by ``nodes``, re-indexed in increasing original order."""
    keep = sorted(set(nodes))
    pos = {v: i for i, v in enumerate(keep)}
    succ = tuple(frozenset(pos[w] for w in g.succ[v] if w in pos) for v in keep)
    return Digraph(tuple(g.labels[v] for v in keep), succ)


def topological_order(cond: Sequence[frozenset]) -> list[int] | None:
    """Kahn's algorithm on a condensation; ``None`` if a cycle exists."""
    indeg = [0] * len(cond)
    for s in cond:
        for k in s:
            indeg[k] += 1
    queue = deque(k for k, d in enumerate(indeg) if d == 0)
    order = []
    while queue:
        k = queue.popleft()
        order.append(k)
        for m in cond[k]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    return order if len(order) == len(cond) else None
