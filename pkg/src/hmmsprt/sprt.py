"""Likelihood-ratio tracking, the sequential probability ratio test and its Monte Carlo harness."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import BadErrorBounds, HitNegInfinity, ImpossibleObservation
from .model import ZERO, Hmm, as_dist, initial_cdf, make_rng, sample_run, support_mask, vec_mat

DEFAULT_MAX_STEPS = 10**6
TINY = np.finfo(np.float64).tiny


def log_fraction(x: Fraction) -> float:
    """Natural log of a positive rational without overflowing on huge numerators."""
    return math.log(x.numerator) - math.log(x.denominator)


@dataclass(frozen=True)
class Thresholds:
    lower: float  # A = ln(alpha / (1 - beta))
    upper: float  # B = ln((1 - alpha) / beta)
    alpha: float
    beta: float

    def decide(self, log_ratio: float):
        """Verdict for one value of ln L, or ``None`` to keep reading."""
        if log_ratio <= self.lower:
            return Verdict.PI2
        if log_ratio >= self.upper:
            return Verdict.PI1
        return None


def thresholds(alpha: float, beta: float) -> Thresholds:
    if not (0 < alpha < 1 and 0 < beta < 1) or alpha + beta >= 1:
        raise BadErrorBounds(f"need alpha, beta in (0,1) with alpha + beta < 1, got {alpha}, {beta}")
    lo = math.log(alpha) - math.log1p(-beta)
    hi = math.log1p(-alpha) - math.log(beta)
    return Thresholds(lo, hi, float(alpha), float(beta))


def thresholds_from_log(log_alpha: float, log_beta: float) -> Thresholds:
    """Thresholds for error bounds given on the log scale (e.g. ``ln alpha = -800``)."""
    if not (log_alpha < 0 and log_beta < 0):
        raise BadErrorBounds("log error bounds must be negative")
    alpha, beta = math.exp(log_alpha), math.exp(log_beta)
    if alpha + beta >= 1:
        raise BadErrorBounds("need alpha + beta < 1")
    lo = log_alpha - math.log1p(-beta)
    hi = math.log1p(-alpha) - log_beta
    return Thresholds(lo, hi, alpha, beta)


class Verdict(str, Enum):
    PI1 = "pi1"
    PI2 = "pi2"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class BeliefPair:
    """Unnormalised numerator/denominator beliefs after ``n`` letters.

    In exact mode ``x`` and ``y`` are Fractions rescaled jointly by
    ``1/(|x|+|y|)``, so their ratio is exactly ``L_n``. In float mode each
    side is normalised separately and the removed log-scale difference is
    kept in ``log_correction``; zero patterns are tracked exactly through the
    support bitmasks so underflow cannot fake a zero.
    """

    x: tuple
    y: tuple
    log_correction: float = 0.0
    n: int = 0
    x_dead: bool = False
    exact: bool = True
    x_mask: int = 0
    y_mask: int = 0

    def log_ratio(self) -> float:
        if self.x_dead:
            return -math.inf
        if not self.y_mask:
            return math.inf
        if self.exact:
            return log_fraction(self.ratio())
        return self.log_correction

    def ratio(self) -> Fraction:
        """Exact ``L_n`` (exact mode only)."""
        if not self.exact:
            raise ValueError("ratio() needs an exact tracker")
        if self.x_dead:
            return ZERO
        return sum(self.x, ZERO) / sum(self.y, ZERO)


def tracker_start(pi1: Sequence, pi2: Sequence, exact: bool = True) -> BeliefPair:
    m1, m2 = support_mask(pi1), support_mask(pi2)
    if exact:
        x, y = tuple(Fraction(p) for p in pi1), tuple(Fraction(p) for p in pi2)
        z = sum(x, ZERO) + sum(y, ZERO)
        return BeliefPair(tuple(v / z for v in x), tuple(v / z for v in y), 0.0, 0, not m1, True, m1, m2)
    x, y = np.array([float(p) for p in pi1]), np.array([float(p) for p in pi2])
    corr = math.log(x.sum()) - math.log(y.sum()) if m1 else 0.0
    return BeliefPair(tuple(x / x.sum()) if m1 else tuple(x), tuple(y / y.sum()), corr, 0, not m1, False, m1, m2)


def tracker_step(t: BeliefPair, h: Hmm, letter) -> BeliefPair:
    """Feed one letter; raises ImpossibleObservation if the denominator dies."""
    a = h.letter_id(letter)
    y_mask = h.delta(t.y_mask, a)
    if not y_mask:
        raise ImpossibleObservation(letter, t.n + 1)
    x_mask = h.delta(t.x_mask, a) if not t.x_dead else 0
    if t.exact:
        y = vec_mat(t.y, h.psi[a])
        x = vec_mat(t.x, h.psi[a]) if x_mask else (ZERO,) * h.n_states
        z = sum(x, ZERO) + sum(y, ZERO)
        return BeliefPair(
            tuple(v / z for v in x), tuple(v / z for v in y), 0.0, t.n + 1, not x_mask, True, x_mask, y_mask
        )
    m = h.float_psi[a]
    y = _floor_support(np.asarray(t.y) @ m, y_mask)
    if not x_mask:
        return BeliefPair(t.x, tuple(y / y.sum()), t.log_correction, t.n + 1, True, False, 0, y_mask)
    x = _floor_support(np.asarray(t.x) @ m, x_mask)
    sx, sy = x.sum(), y.sum()
    corr = t.log_correction + math.log(sx) - math.log(sy)
    return BeliefPair(tuple(x / sx), tuple(y / sy), corr, t.n + 1, False, False, x_mask, y_mask)


def _floor_support(v: np.ndarray, mask: int) -> np.ndarray:
    for i in range(len(v)):
        if mask >> i & 1 and v[i] <= 0.0:
            v[i] = TINY
    return v


@dataclass(frozen=True)
class SprtOutcome:
    verdict: Verdict
    stopped_at: int | None
    final_log_ratio: float


def run_sprt(
    h: Hmm,
    pi1,
    pi2,
    th: Thresholds,
    stream: Iterable,
    max_steps: int = DEFAULT_MAX_STEPS,
    exact: bool = False,
) -> SprtOutcome:
    """Read letters from ``stream`` until ln L leaves ``[A, B]`` (boundaries stop)."""
    t = tracker_start(as_dist(h, pi1), as_dist(h, pi2), exact)
    lr = t.log_ratio()
    for letter in stream:
        if t.n >= max_steps:
            break
        t = tracker_step(t, h, letter)
        lr = t.log_ratio()
        v = th.decide(lr)
        if v is not None:
            return SprtOutcome(v, t.n, lr)
    return SprtOutcome(Verdict.UNDECIDED, None, lr)


def n_bottom(h: Hmm, pi1, stream: Iterable, max_steps: int = DEFAULT_MAX_STEPS) -> int | None:
    """First step at which the numerator mass is exactly zero, if within ``max_steps``."""
    mask = support_mask(as_dist(h, pi1))
    if not mask:
        return 0
    for n, letter in enumerate(stream, start=1):
        if n > max_steps:
            break
        mask = h.delta(mask, h.letter_id(letter))
        if not mask:
            return n
    return None


# Monte Carlo


def _kernel_args(h: Hmm, sampler: Sequence):
    cum, letter, nxt, length = h.sampling_tables
    cdf = initial_cdf(sampler)
    weights = np.array([float(p) for p in sampler])
    return h.float_psi, h.pattern, cum, letter, nxt, length, cdf, weights


def _float_vec(pi: Sequence) -> np.ndarray:
    return np.array([float(p) for p in pi])


def _chunks(n: int, k: int) -> list[range]:
    k = max(1, min(k, n))
    step = -(-n // k)
    return [range(i, min(n, i + step)) for i in range(0, n, step)]


def run_replicas(fn, replicas: int, threads: int = 1) -> list:
    """Apply ``fn(i)`` for ``i < replicas``, optionally on a thread pool; results in order."""
    if threads <= 1 or replicas <= 1:
        return [fn(i) for i in range(replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda r: [fn(i) for i in r], _chunks(replicas, threads))
        return [x for part in parts for x in part]


@dataclass(frozen=True)
class ReplicaRecord:
    replica: int
    verdict: Verdict
    stopped_at: int | None
    final_log_ratio: float
    kind: str  # "zero", "threshold" or "undecided"


@dataclass(frozen=True)
class ClassStats:
    count: int
    mean_n: float | None
    stderr_n: float | None


@dataclass(frozen=True)
class SprtStats:
    replicas: int
    sampler: str
    thresholds: Thresholds
    counts: dict
    error_rate: float  # fraction of runs deciding for the hypothesis that did not generate them
    error_stderr: float
    undecided_fraction: float
    mean_n: float | None  # over terminated runs
    stderr_n: float | None
    quantiles_n: dict
    by_kind: dict
    records: list = field(repr=False)


def _mean_se(xs: np.ndarray):
    if len(xs) == 0:
        return None, None
    se = float(xs.std(ddof=1) / math.sqrt(len(xs))) if len(xs) > 1 else 0.0
    return float(xs.mean()), se


def mc_sprt(
    h: Hmm,
    pi1,
    pi2,
    alpha: float | None = None,
    beta: float | None = None,
    replicas: int = 1000,
    max_steps: int = DEFAULT_MAX_STEPS,
    seed: int = 0,
    sampler: str = "pi2",
    threads: int = 1,
    th: Thresholds | None = None,
) -> SprtStats:
    """Simulate ``replicas`` independent SPRT runs; replica ``i`` uses stream ``(seed, i)``."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if th is None:
        th = thresholds(alpha, beta)
    if sampler not in ("pi1", "pi2"):
        raise ValueError("sampler must be 'pi1' or 'pi2'")
    pi1, pi2 = as_dist(h, pi1), as_dist(h, pi2)
    args = _kernel_args(h, pi1 if sampler == "pi1" else pi2)
    x0, y0 = _float_vec(pi1), _float_vec(pi2)

    def one(i):
        rng = make_rng(seed, i)
        code, stop, lr, dead = _kernels.sprt_walk(*args, x0, y0, th.lower, th.upper, max_steps, rng)
        verdict = {_kernels.PI1: Verdict.PI1, _kernels.PI2: Verdict.PI2}.get(code, Verdict.UNDECIDED)
        if verdict is Verdict.UNDECIDED:
            kind = "undecided"
        elif dead > 0:
            kind = "zero"
        else:
            kind = "threshold"
        return ReplicaRecord(i, verdict, stop if stop >= 0 else None, float(lr), kind)

    records = run_replicas(one, replicas, threads)
    return summarize(records, sampler, th)


def summarize(records: list[ReplicaRecord], sampler: str, th: Thresholds) -> SprtStats:
    k = len(records)
    counts = {v.value: sum(r.verdict is v for r in records) for v in Verdict}
    wrong = Verdict.PI1 if sampler == "pi2" else Verdict.PI2
    err = counts[wrong.value] / k
    err_se = math.sqrt(err * (1 - err) / k)
    stopped = np.array([r.stopped_at for r in records if r.stopped_at is not None], dtype=float)
    mean_n, se_n = _mean_se(stopped)
    quant = {}
    if len(stopped):
        for q in (0.1, 0.5, 0.9):
            quant[str(q)] = float(np.quantile(stopped, q))
    by_kind = {}
    for kind in ("zero", "threshold", "undecided"):
        rs = [r for r in records if r.kind == kind]
        ns = np.array([r.stopped_at for r in rs if r.stopped_at is not None], dtype=float)
        m, se = _mean_se(ns)
        by_kind[kind] = ClassStats(len(rs), m, se)
    return SprtStats(
        replicas=k,
        sampler=sampler,
        thresholds=th,
        counts=counts,
        error_rate=err,
        error_stderr=err_se,
        undecided_fraction=counts[Verdict.UNDECIDED.value] / k,
        mean_n=mean_n,
        stderr_n=se_n,
        quantiles_n=quant,
        by_kind=by_kind,
        records=records,
    )


# log-likelihood series


def loglik_series(h: Hmm, sampler, pi1, pi2, n: int, seed: int = 0, exact: bool = False, stream: int | None = None):
    """Sample a run of ``n`` letters from ``sampler`` and return ``ln L_0 .. ln L_n``.

    The float path and the exact path draw the same run for the same seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sampler, pi1, pi2 = as_dist(h, sampler), as_dist(h, pi1), as_dist(h, pi2)
    rng = make_rng(seed, stream)
    if not exact:
        return _kernels.loglik_walk(*_kernel_args(h, sampler), _float_vec(pi1), _float_vec(pi2), n, rng)

    run = sample_run(h, sampler, n, rng)
    t = tracker_start(pi1, pi2, exact=True)
    out = np.empty(n + 1)
    out[0] = t.log_ratio()
    for k, a in enumerate(run.letter_ids, start=1):
        if t.x_dead:
            out[k] = -math.inf
            continue
        t = tracker_step(t, h, h.alphabet[a])
        out[k] = t.log_ratio()
    return out


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    steps: int
    stderr: float


def slope_estimate(series, burn_in_fraction: float = 0.1, batches: int = 20) -> SlopeEstimate:
    """Average slope of ``series`` (values indexed by step) after a burn-in.

    The standard error comes from batch means of the increments.
    """
    v = np.asarray(series, dtype=float)
    if v.ndim == 2:
        v = v[:, 1]
    n = len(v) - 1
    start = int(burn_in_fraction * n)
    tail = v[start:]
    if np.isneginf(tail).any():
        raise HitNegInfinity("series reaches -inf after the burn-in")
    if not np.isfinite(tail).all():
        raise ValueError("series must be finite after the burn-in")
    steps = n - start
    if steps <= 0:
        raise ValueError("no steps left after the burn-in")
    slope = (tail[-1] - tail[0]) / steps
    k = min(batches, steps)
    edges = np.linspace(0, steps, k + 1).astype(int)
    rates = [(tail[b] - tail[a]) / (b - a) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    se = float(np.std(rates, ddof=1) / math.sqrt(len(rates))) if len(rates) > 1 else 0.0
    return SlopeEstimate(float(slope), steps, se)
