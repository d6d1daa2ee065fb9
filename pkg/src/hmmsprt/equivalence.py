"""Trace equivalence, distinguishability and the total-variation mass bound."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import CapExceeded
from .linalg import forward_space, lp_feasible
from .model import ZERO, Hmm, MatrixSystem, as_dist, support_mask, vec_mat

DEFAULT_BUDGET = 10**5
DEFAULT_TV_CAP = 10**6


def _dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), ZERO)


def are_equivalent(h: Hmm, pi1, pi2, basis: Sequence | None = None) -> bool:
    """Whether ``pi1`` and ``pi2`` give every word the same probability.

    ``pi1``, ``pi2`` may be unnormalised nonnegative vectors; the test is that
    their difference annihilates the forward space.
    """
    basis = forward_space(h) if basis is None else basis
    diff = [Fraction(a) - Fraction(b) for a, b in zip(pi1, pi2)]
    return all(_dot(diff, f) == 0 for f in basis)


@dataclass(frozen=True)
class Distinguishable:
    explored: int

    def __str__(self):
        return "distinguishable"


@dataclass(frozen=True)
class NotDistinguishable:
    """``witness`` leads to supports carrying equivalent distributions ``mu``, ``nu``."""

    witness: tuple
    mu: tuple
    nu: tuple
    explored: int

    def __str__(self):
        return f"not distinguishable (witness {''.join(map(str, self.witness)) or 'ε'})"


@dataclass(frozen=True)
class Unknown:
    explored: int

    def __str__(self):
        return f"unknown (budget exhausted after {self.explored} pairs)"


def _equivalent_on_supports(h: Hmm, mask1: int, mask2: int, basis) -> tuple | None:
    """Distributions ``mu`` on ``mask1`` and ``nu`` on ``mask2`` that are equivalent, if any."""
    n = h.n_states
    s1 = [i for i in range(n) if mask1 >> i & 1]
    s2 = [i for i in range(n) if mask2 >> i & 1]
    a = [[Fraction(1)] * len(s1) + [ZERO] * len(s2)]
    b = [Fraction(1)]
    for f in basis:
        a.append([f[i] for i in s1] + [-f[j] for j in s2])
        b.append(ZERO)
    x = lp_feasible(a, b)
    if x is None:
        return None
    mu = [ZERO] * n
    nu = [ZERO] * n
    for k, i in enumerate(s1):
        mu[i] = x[k]
    for k, j in enumerate(s2):
        nu[j] = x[len(s1) + k]
    return tuple(mu), tuple(nu)


def distinguishability(h: Hmm, pi1, pi2, budget: int = DEFAULT_BUDGET):
    """Decide whether the total variation distance of ``pi1`` and ``pi2`` is 1.

    Explores the pairs of supports ``(supp pi1 psi(w), supp pi2 psi(w))``
    reachable with both parts nonempty. The pair is not distinguishable iff
    some reachable support pair carries two equivalent distributions, which
    is an exact LP feasibility question. The search space is finite, so
    :class:`Unknown` only comes back when ``budget`` pairs were examined.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    pi1, pi2 = as_dist(h, pi1), as_dist(h, pi2)
    basis = forward_space(h)
    start = (support_mask(pi1), support_mask(pi2))
    parent = {start: None}
    queue = deque([start])
    explored = 0
    while queue:
        if explored >= budget:
            return Unknown(explored)
        pair = queue.popleft()
        explored += 1
        found = _equivalent_on_supports(h, pair[0], pair[1], basis)
        if found is not None:
            word = []
            node = pair
            while parent[node] is not None:
                node, a = parent[node]
                word.append(h.alphabet[a])
            return NotDistinguishable(tuple(reversed(word)), found[0], found[1], explored)
        for a in range(h.n_letters):
            nxt = (h.delta(pair[0], a), h.delta(pair[1], a))
            if nxt[0] and nxt[1] and nxt not in parent:
                parent[nxt] = (pair, a)
                queue.append(nxt)
    return Distinguishable(explored)


def tv_mass_series(h: MatrixSystem, pi1, pi2, n: int, cap: int = DEFAULT_TV_CAP) -> list[Fraction]:
    """``[B_0, ..., B_n]`` with ``B_k = sum over words of length k of min(P1(w), P2(w))``.

    Pairs ``(x, y)`` are merged up to positive scaling (the summand is
    homogeneous) and pairs with a zero side or with ``x == y`` are settled
    early, so the enumeration cap is only a guard.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if h.n_letters**n > cap:
        raise CapExceeded(f"|alphabet|^n = {h.n_letters}^{n} exceeds the cap {cap}")
    x0 = tuple(Fraction(p) for p in pi1)
    y0 = tuple(Fraction(p) for p in pi2)
    settled = ZERO  # mass of branches with x == y; their summand never changes
    level: dict[tuple, Fraction] = {}

    def push(store, x, y, w):
        sx, sy = sum(x, ZERO), sum(y, ZERO)
        if not sx or not sy:
            return ZERO
        if x == y:
            return w * sx
        z = sx + sy
        key = (tuple(v / z for v in x), tuple(v / z for v in y))
        store[key] = store.get(key, ZERO) + w * z
        return ZERO

    settled += push(level, x0, y0, Fraction(1))
    out = []
    for k in range(n + 1):
        out.append(settled + sum((w * min(sum(x, ZERO), sum(y, ZERO)) for (x, y), w in level.items()), ZERO))
        if k == n:
            break
        nxt: dict[tuple, Fraction] = {}
        for (x, y), w in level.items():
            for m in h.psi:
                settled += push(nxt, vec_mat(x, m), vec_mat(y, m), w)
        level = nxt
    return out


def tv_min_mass(h: MatrixSystem, pi1, pi2, n: int, cap: int = DEFAULT_TV_CAP) -> Fraction:
    return tv_mass_series(h, pi1, pi2, n, cap)[-1]
