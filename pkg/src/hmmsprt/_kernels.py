"""numba inner loops for sampling runs while tracking beliefs in the log domain.

All kernels consume the generator exactly like :func:`hmmsprt.model.sample_run`:
one uniform for the initial state, then one uniform per step.
"""

import numpy as np
from numba import njit

TINY = np.finfo(np.float64).tiny

# verdict codes
UNDECIDED = 0
PI1 = 1
PI2 = 2


@njit(cache=True, nogil=True)
def _draw_initial(cdf, weights, u):
    n = cdf.shape[0]
    j = 0
    while j < n - 1 and u >= cdf[j]:
        j += 1
    while weights[j] == 0.0 and j > 0:
        j -= 1
    return j


@njit(cache=True, nogil=True)
def _draw_step(cum, length, q, u):
    k = length[q]
    j = 0
    while j < k - 1 and u >= cum[q, j]:
        j += 1
    return j


@njit(cache=True, nogil=True)
def _advance(v, supp, psi, pattern, a, out, out_supp):
    """``out = v psi[a]`` with exact support propagation; returns (sum, supp nonempty)."""
    n = v.shape[0]
    for r in range(n):
        out[r] = 0.0
        out_supp[r] = False
    for q in range(n):
        if supp[q]:
            vq = v[q]
            for r in range(n):
                if pattern[a, q, r]:
                    out[r] += vq * psi[a, q, r]
                    out_supp[r] = True
    total = 0.0
    alive = False
    for r in range(n):
        if out_supp[r]:
            alive = True
            if out[r] <= 0.0:
                out[r] = TINY
            total += out[r]
    return total, alive


@njit(cache=True, nogil=True)
def sprt_walk(psi, pattern, cum, letter, nxt, length, cdf, weights, x0, y0, lo, hi, max_steps, rng):
    """Sample one run and run the SPRT on it.

    Returns ``(verdict, stopped_at, log_ratio, x_dead_step)``; ``stopped_at``
    is -1 when undecided and ``x_dead_step`` is -1 if the numerator mass never
    vanished before stopping.
    """
    n = x0.shape[0]
    x = x0.copy()
    y = y0.copy()
    xs = x0 > 0.0
    ys = y0 > 0.0
    sx = x.sum()
    sy = y.sum()
    x /= sx
    y /= sy
    corr = np.log(sx) - np.log(sy)
    bx = np.empty(n)
    by = np.empty(n)
    bxs = np.empty(n, dtype=np.bool_)
    bys = np.empty(n, dtype=np.bool_)
    q = _draw_initial(cdf, weights, rng.random())
    for step in range(1, max_steps + 1):
        j = _draw_step(cum, length, q, rng.random())
        a = letter[q, j]
        q = nxt[q, j]
        tx, x_alive = _advance(x, xs, psi, pattern, a, bx, bxs)
        ty, y_alive = _advance(y, ys, psi, pattern, a, by, bys)
        if not x_alive:
            return PI2, step, -np.inf, step
        if not y_alive:
            return PI1, step, np.inf, -1
        corr += np.log(tx) - np.log(ty)
        for r in range(n):
            x[r] = bx[r] / tx
            y[r] = by[r] / ty
            xs[r] = bxs[r]
            ys[r] = bys[r]
        if corr <= lo:
            return PI2, step, corr, -1
        if corr >= hi:
            return PI1, step, corr, -1
    return UNDECIDED, -1, corr, -1


@njit(cache=True, nogil=True)
def loglik_walk(psi, pattern, cum, letter, nxt, length, cdf, weights, x0, y0, steps, rng):
    """Log-likelihood ratio after each of ``steps`` sampled letters (index 0 is the start)."""
    n = x0.shape[0]
    out = np.empty(steps + 1)
    x = x0.copy()
    y = y0.copy()
    xs = x0 > 0.0
    ys = y0 > 0.0
    sx = x.sum()
    sy = y.sum()
    x /= sx
    y /= sy
    corr = np.log(sx) - np.log(sy)
    out[0] = corr
    bx = np.empty(n)
    by = np.empty(n)
    bxs = np.empty(n, dtype=np.bool_)
    bys = np.empty(n, dtype=np.bool_)
    q = _draw_initial(cdf, weights, rng.random())
    x_dead = False
    y_dead = False
    for step in range(1, steps + 1):
        j = _draw_step(cum, length, q, rng.random())
        a = letter[q, j]
        q = nxt[q, j]
        if x_dead or y_dead:
            out[step] = out[step - 1]
            continue
        tx, x_alive = _advance(x, xs, psi, pattern, a, bx, bxs)
        ty, y_alive = _advance(y, ys, psi, pattern, a, by, bys)
        if not x_alive:
            x_dead = True
            out[step] = -np.inf
            continue
        if not y_alive:
            y_dead = True
            out[step] = np.inf
            continue
        corr += np.log(tx) - np.log(ty)
        for r in range(n):
            x[r] = bx[r] / tx
            y[r] = by[r] / ty
            xs[r] = bxs[r]
            ys[r] = bys[r]
        out[step] = corr
    return out


@njit(cache=True, nogil=True)
def lyap_walk(phi, pattern, h_cum, h_nxt, h_length, m_letter_of, p0, v0, steps, rng):
    """Growth of ``v0 Phi(w_n)`` along a word emitted by a driving HMM.

    The driving chain starts in ``p0`` and its ``j``-th outgoing pair from
    state ``p`` feeds matrix ``m_letter_of[p, j]`` of the matrix system.
    Returns ``(log_norm, dead_step)`` with ``dead_step = -1`` if the vector
    stayed nonzero.
    """
    n = v0.shape[0]
    v = v0.copy()
    vs = v0 > 0.0
    s = v.sum()
    v /= s
    acc = np.log(s)
    bv = np.empty(n)
    bvs = np.empty(n, dtype=np.bool_)
    p = p0
    for step in range(1, steps + 1):
        j = _draw_step(h_cum, h_length, p, rng.random())
        a = m_letter_of[p, j]
        p = h_nxt[p, j]
        t, alive = _advance(v, vs, phi, pattern, a, bv, bvs)
        if not alive:
            return -np.inf, step
        acc += np.log(t)
        for r in range(n):
            v[r] = bv[r] / t
            vs[r] = bvs[r]
    return acc, -1
