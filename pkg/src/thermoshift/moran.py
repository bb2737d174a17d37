"""Good-word sets, block schedules and the edit-then-glue point generator.

A point is built stage by stage: stage k repeats N_k blocks of length n_k,
each block a word whose periodic empirical measure is close to the stage
target, edited into the good set F and glued.  Stage masses grow fast
enough that each stage dominates the empirical measure at its end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from thermoshift.edit_metric import GoodSet, MistakeFunction, nearest_in
from thermoshift.errors import ConstructionError, DomainError, ResourceError
from thermoshift.measures import (
    MarkovMeasure,
    block_entropy,
    distance_weights,
    distances_to,
    index_capacity,
    markov_entropy,
    periodic_frequencies,
    weak_star_distance,
)
from thermoshift.shift_spaces import SequencePrefix, Subshift, to_word

EPS_GRID = (0.4, 0.3, 0.2, 0.15, 0.1, 0.075, 0.05)


def surrogate_error(n: int, d: int, p: int) -> float:
    """Certified gap between D(E_n(x), mu) for x in [w] and the truncated
    D of the periodic empirical measure of w.

    Windows of length l <= d starting at 0..n-l lie inside w, so at most
    d - 1 of the n windows differ; indices past K = #cylinders of length <= d
    contribute at most 2^-K.
    """
    return (d - 1) / n + 0.5 ** index_capacity(p, d)


def measure_entropy(mu, d: int = 4) -> float:
    if isinstance(mu, MarkovMeasure):
        return markov_entropy(mu)
    d = min(d, mu.depth)
    return block_entropy(mu, d) - (block_entropy(mu, d - 1) if d > 1 else 0.0)


@lru_cache(maxsize=64)
def _scored_words(X: Subshift, mu, n: int, d: int):
    if n < d:
        raise DomainError(f"block length {n} is below the depth {d}")
    words = X.language_array(n)
    if len(words) == 0:
        return words, np.zeros(0)
    freqs = periodic_frequencies(words, d, X.p)
    return words, distances_to(freqs, mu, X.p) + surrogate_error(n, d, X.p)


def good_word_array(X: Subshift, mu, eps: float, n: int, d: int) -> np.ndarray:
    words, score = _scored_words(X, mu, n, d)
    return words[score < eps]


def good_words(X: Subshift, mu, eps: float, n: int, d: int) -> set[tuple[int, ...]]:
    """{w in L_n : D(E_w, mu) + e(n, d) < eps}."""
    return {tuple(int(a) for a in w) for w in good_word_array(X, mu, eps, n, d)}


@dataclass(frozen=True)
class KatokReport:
    n: int
    count: int
    threshold: float
    passed: bool
    entropy: float


def katok_count_check(X: Subshift, mu, eps: float, delta: float, n: int, d: int = 2) -> KatokReport:
    h = measure_entropy(mu)
    count = len(good_word_array(X, mu, eps, n, d))
    threshold = math.exp(n * (h - delta))
    return KatokReport(n, count, threshold, count >= threshold and count > 0, h)


def katok_onset(X: Subshift, mu, eps: float, delta: float, n_range, d: int = 2) -> int | None:
    """Least N in n_range such that the count check passes for every n >= N in the range."""
    reports = [katok_count_check(X, mu, eps, delta, n, d) for n in n_range]
    onset = None
    for r in reports:
        if r.passed:
            onset = r.n if onset is None else onset
        else:
            onset = None
    return onset


# -- itineraries and schedules ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class Itinerary:
    """Target measures alpha_1..alpha_J on X, visited in order."""

    X: Subshift
    measures: tuple
    depth: int = 2
    chain_bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "measures", tuple(self.measures))
        if not self.measures:
            raise DomainError("an itinerary needs at least one measure")
        if any(m.p != self.X.p for m in self.measures):
            raise DomainError("itinerary measures must share the alphabet of X")
        if self.chain_bound is not None:
            for j, dist in enumerate(self.distances()):
                if dist > self.chain_bound:
                    raise DomainError(f"D(alpha_{j + 1}, alpha_{j + 2}) = {dist:.6g} exceeds the chain bound {self.chain_bound}")

    def distances(self) -> list[float]:
        K = index_capacity(self.X.p, self.depth)
        return [weak_star_distance(a, b, K, truncate=True)[0] for a, b in zip(self.measures, self.measures[1:])]

    def __len__(self):
        return len(self.measures)


@dataclass(frozen=True)
class Stage:
    target: int
    n: int
    N: int
    eps: float
    pool: int


@dataclass(frozen=True, eq=False)
class Schedule:
    stages: tuple
    g: MistakeFunction
    theta: float
    T: int

    @property
    def total_length(self) -> int:
        return sum(s.n * s.N for s in self.stages)

    def ratios(self) -> list[tuple[float, float]]:
        """Per stage boundary k: the next-block ratio and the cumulative ratio."""
        out = []
        lo = hi = 0.0
        for k in range(len(self.stages) - 1):
            s, nxt = self.stages[k], self.stages[k + 1]
            lo += (s.n - self.g(s.n)) * s.N
            hi += (s.n + self.g(s.n)) * s.N
            r1 = (nxt.n + self.g(nxt.n)) / lo
            r2 = hi / (lo + (nxt.n - self.g(nxt.n)) * nxt.N)
            out.append((r1, r2))
        return out

    def blocks(self):
        for k, s in enumerate(self.stages):
            for _ in range(s.N):
                yield k, s


def _choose_block(itinerary: Itinerary, mu, n: int, n_max: int, delta: float, eps_grid) -> tuple[int, float, int]:
    """Block length and tolerance for one target: the smallest grid tolerance
    whose good-word count reaches e^{n(h - delta)}, else the smallest with a
    nonempty good set."""
    X, d = itinerary.X, itinerary.depth
    h = measure_entropy(mu)
    for m in range(n, n_max + 1):
        pools = [(eps, len(good_word_array(X, mu, eps, m, d))) for eps in sorted(eps_grid)]
        nonempty = [(eps, c) for eps, c in pools if c > 0]
        if not nonempty:
            continue
        for eps, c in nonempty:
            if c >= math.exp(m * (h - delta)):
                return m, eps, c
        return m, nonempty[0][0], nonempty[0][1]
    raise ResourceError(f"no good words for a target at any block length in [{n}, {n_max}] and tolerance <= {max(eps_grid)}", budget=n_max)


def make_schedule(
    itinerary: Itinerary,
    g: MistakeFunction,
    theta: float,
    T: int,
    n: int = 16,
    n_max: int = 18,
    delta: float = 0.1,
    eps_grid=EPS_GRID,
    max_length: int | None = None,
) -> Schedule:
    """Greedy smallest repetition counts meeting both ratio bounds theta.

    Every itinerary stage is visited; the last stage is lengthened until the
    nominal length reaches T.  The total may not exceed ``max_length``
    (default 10 T).
    """
    if not 0 < theta < 0.25:
        raise DomainError("theta must lie in (0, 1/4)")
    if T < 1:
        raise DomainError("target length must be positive")
    max_length = 10 * T if max_length is None else max_length
    chosen = {}
    blocks = []
    for idx, mu in enumerate(itinerary.measures):
        key = id(mu)
        if key not in chosen:
            chosen[key] = _choose_block(itinerary, mu, n, n_max, delta, eps_grid)
        blocks.append((idx,) + chosen[key])
    for _, m, _, _ in blocks:
        if g(m) >= m:
            raise DomainError(f"mistake function value g({m}) = {g(m)} is not below the block length")

    counts: list[int] = []
    lo = hi = 0
    for k, (_, m, _, _) in enumerate(blocks):
        step = m - g(m)
        if k == 0:
            N = 1
        else:
            N = max(counts[-1] + 1, math.ceil((hi / theta - lo) / step - 1e-12))
        if k + 1 < len(blocks):
            nxt = blocks[k + 1][1]
            N = max(N, math.ceil(((nxt + g(nxt)) / theta - lo) / step - 1e-12))
        counts.append(N)
        lo += (m - g(m)) * N
        hi += (m + g(m)) * N
    total = sum(m * N for (_, m, _, _), N in zip(blocks, counts))
    if total < T:
        m = blocks[-1][1]
        counts[-1] += math.ceil((T - total) / m)
        total = sum(b[1] * N for b, N in zip(blocks, counts))
    if total > max_length:
        raise ResourceError(
            f"the cumulative ratio bound theta = {theta} forces a length of {total} > budget {max_length}",
            budget=max_length,
        )
    stages = tuple(Stage(idx, m, N, eps, pool) for (idx, m, eps, pool), N in zip(blocks, counts))
    sched = Schedule(stages, g, theta, T)
    for k, (r1, r2) in enumerate(sched.ratios()):
        if r1 > theta + 1e-12 or r2 > theta + 1e-12:
            raise ResourceError(f"ratio bound violated at stage {k + 1}: ({r1:.4g}, {r2:.4g}) > {theta}", budget=max_length)
    return sched


# -- generation -------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    j: int
    stage: int
    n: int
    length: int
    t: int


@dataclass(frozen=True, eq=False)
class MoranPoint:
    prefix: SequencePrefix
    segments: tuple
    log_choices: float
    stage_ends: tuple = field(default=())

    @property
    def counting_rate(self) -> float:
        """(1 / t) sum_j log |D'_j| over all blocks."""
        return self.log_choices / len(self.prefix)


def generate_point(X: Subshift, itinerary: Itinerary, schedule: Schedule, F: GoodSet, seed: int = 0) -> MoranPoint:
    if F.X != X or itinerary.X != X:
        raise DomainError("the good set and itinerary must live on the same subshift")
    rng = np.random.default_rng(seed)
    d = itinerary.depth
    out: list[int] = []
    segments = []
    stage_ends = []
    log_choices = 0.0
    state = X.initial_state()
    t = 0
    for j, (k, stage) in enumerate(schedule.blocks(), start=1):
        mu = itinerary.measures[stage.target]
        pool = good_word_array(X, mu, stage.eps, stage.n, d)
        if len(pool) == 0:
            raise ConstructionError(f"block {j} (stage {k + 1}) has an empty good-word set")
        w = tuple(int(a) for a in pool[rng.integers(len(pool))])
        v, _ = nearest_in(w, F)
        if abs(len(v) - stage.n) > schedule.g(stage.n):
            raise ConstructionError(f"block {j}: edited length {len(v)} deviates from {stage.n} by more than g = {schedule.g(stage.n)}")
        for a in v:
            state = X.advance(state, a)
            if state is None:
                raise ConstructionError(f"block {j}: glued word left the language")
        out.extend(v)
        t += len(v)
        log_choices += math.log(len(pool))
        segments.append(Segment(j, k, stage.n, len(v), t))
        if len(stage_ends) <= k:
            stage_ends.append(t)
        else:
            stage_ends[k] = t
    return MoranPoint(SequencePrefix(tuple(out), X), tuple(segments), log_choices, tuple(stage_ends))


# -- diagnostics ------------------------------------------------------------------


def _cylinder_vector(mu, p: int, d: int) -> np.ndarray:
    return np.concatenate([np.asarray(mu.cylinder_table(ell), dtype=float).ravel() for ell in range(1, d + 1)])


def empirical_vectors(x, ns, d: int, p: int) -> np.ndarray:
    """Rows: concatenated cylinder tables (lengths 1..d) of E_n(x) for n in ns."""
    w = np.asarray(to_word(x.word if isinstance(x, SequencePrefix) else x, p), dtype=np.int64)
    ns = np.asarray(ns, dtype=np.int64)
    if np.any(ns < 1) or np.any(ns + d - 1 > len(w)):
        raise DomainError("requested empirical measures need more symbols than the prefix has")
    if p**d > 1 << 16:
        raise ResourceError(f"p^d = {p ** d} cylinders exceed the diagnostic budget", budget=1 << 16)
    L = len(w) - d + 1
    idx = np.arange(L)[:, None] + np.arange(d)[None, :]
    codes = w[idx] @ (p ** np.arange(d - 1, -1, -1, dtype=np.int64))
    order = np.argsort(ns, kind="stable")
    rows = np.zeros((len(ns), p**d))
    counts = np.zeros(p**d)
    pos = 0
    for i in order:
        counts += np.bincount(codes[pos : ns[i]], minlength=p**d)
        pos = ns[i]
        rows[i] = counts / ns[i]
    tables = rows.reshape((len(ns),) + (p,) * d)
    parts = [tables.sum(axis=tuple(range(ell + 1, d + 1))).reshape(len(ns), -1) for ell in range(1, d + 1)]
    return np.concatenate(parts, axis=1)


@dataclass(frozen=True)
class ConvergenceReport:
    log: tuple
    stage_log: tuple
    summary: tuple
    tail: float

    def final(self) -> float:
        return self.log[-1][1]


def track_convergence(x, itinerary: Itinerary, schedule: Schedule, d: int, point: MoranPoint | None = None) -> ConvergenceReport:
    """D(E_{t_j}(x), alpha'_j) at every block end, truncated at the
    cylinders of length <= d (tail 2^-K reported separately).

    ``summary`` gives, for each itinerary measure, the least distance over
    the stage ends in the second half of the schedule.
    """
    p = itinerary.X.p
    word = x.word if isinstance(x, SequencePrefix) else to_word(x, p)
    segs = point.segments if point is not None else None
    if segs is None:
        ts, stages = [], []
        t = 0
        for k, s in schedule.blocks():
            t += s.n
            ts.append(t)
            stages.append(k)
        if t != len(word):
            raise DomainError(f"prefix length {len(word)} does not match the schedule length {t}")
    else:
        ts = [s.t for s in segs]
        stages = [s.stage for s in segs]
        if ts[-1] != len(word):
            raise DomainError(f"prefix length {len(word)} does not match the segment log {ts[-1]}")
    K = index_capacity(p, d)
    weights = np.concatenate(distance_weights(p, K))
    ns = np.minimum(np.asarray(ts), len(word) - d + 1)
    E = empirical_vectors(word, ns, d, p)
    targets = [_cylinder_vector(mu, p, d) for mu in itinerary.measures]
    dist = np.array([np.abs(E[i] - targets[itinerary_target(schedule, stages[i])]) @ weights for i in range(len(ts))])
    log = tuple((int(t), float(v), int(k)) for t, v, k in zip(ts, dist, stages))

    ends = {}
    for i, k in enumerate(stages):
        ends[k] = i
    stage_log = []
    for k in sorted(ends):
        i = ends[k]
        stage_log.append((k, int(ts[i]), tuple(float(np.abs(E[i] - tg) @ weights) for tg in targets)))
    late = [row for row in stage_log if row[0] >= len(stage_log) // 2]
    summary = tuple(min(row[2][m] for row in late) for m in range(len(targets)))
    return ConvergenceReport(log, tuple(stage_log), summary, 0.5**K)


def itinerary_target(schedule: Schedule, k: int) -> int:
    return schedule.stages[k].target
