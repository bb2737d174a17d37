"""Edit distance, edit balls, good-word sets and the edit-then-glue map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from thermoshift.errors import ConstructionError, DomainError, NotFoundError, ResourceError
from thermoshift.measures import cylinder_words, depth_for_index
from thermoshift.shift_spaces import DEFAULT_BUDGET, Subshift, to_word, word_str


def edit_distance(v, w) -> int:
    """Levenshtein distance (substitutions, insertions, deletions)."""
    v, w = to_word(v), to_word(w)
    if len(v) < len(w):
        v, w = w, v
    prev = list(range(len(w) + 1))
    for i, a in enumerate(v, start=1):
        cur = [i]
        for j, b in enumerate(w, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a != b)))
        prev = cur
    return prev[-1]


def single_edits(w: tuple[int, ...], p: int) -> set[tuple[int, ...]]:
    out = set()
    for i in range(len(w) + 1):
        for a in range(p):
            out.add(w[:i] + (a,) + w[i:])
    for i in range(len(w)):
        out.add(w[:i] + w[i + 1 :])
        for a in range(p):
            if a != w[i]:
                out.add(w[:i] + (a,) + w[i + 1 :])
    return out


def edit_layers(w, radius: int, p: int, budget: int = DEFAULT_BUDGET) -> list[set[tuple[int, ...]]]:
    """Words of A* at edit distance exactly 0, 1, ..., radius from w."""
    w = to_word(w, p)
    layers = [{w}]
    seen = {w}
    for _ in range(radius):
        nxt = set()
        for u in layers[-1]:
            nxt.update(single_edits(u, p))
        nxt -= seen
        seen |= nxt
        if len(seen) > budget:
            raise ResourceError(f"edit ball exceeds the budget of {budget} words", budget=budget)
        layers.append(nxt)
    return layers


def edit_ball(w, radius: int, X: Subshift, budget: int | None = None) -> set[tuple[int, ...]]:
    """All v in L(X) with d(v, w) <= radius."""
    if radius < 0:
        raise DomainError("radius must be non-negative")
    budget = DEFAULT_BUDGET if budget is None else budget
    layers = edit_layers(w, radius, X.p, budget)
    return {u for layer in layers for u in layer if X.contains(u)}


# -- ball-size bound -----------------------------------------------------------


def log_ball_bound(n: int, delta: float, C: float) -> float:
    """log of C n^C (e^{C delta} e^{-delta log delta})^n."""
    return math.log(C) + C * math.log(n) + n * (C * delta - delta * math.log(delta))


@dataclass(frozen=True)
class BallBoundReport:
    n: int
    delta: float
    radius: int
    count: int
    C: float
    bound: float
    C_fit: float
    worst: tuple


def fit_ball_constant(count: int, n: int, delta: float) -> float:
    """Least C >= 1 with count <= C n^C (e^{C delta} e^{-delta log delta})^n."""
    target = math.log(count)
    if log_ball_bound(n, delta, 1.0) >= target:
        return 1.0
    lo, hi = 1.0, 2.0
    while log_ball_bound(n, delta, hi) < target:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if log_ball_bound(n, delta, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def ball_bound_report(X: Subshift, n: int, delta: float, C: float | None = None, sample: int = 256, seed: int = 0) -> BallBoundReport:
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    radius = math.floor(delta * n + 1e-12)
    words = X.language(n)
    if len(words) > sample:
        rng = np.random.default_rng(seed)
        words = [words[i] for i in sorted(rng.choice(len(words), sample, replace=False))]
    count, worst = 0, ()
    for w in words:
        c = len(edit_ball(w, radius, X)) if radius > 0 else 1
        if c > count:
            count, worst = c, w
    C_fit = fit_ball_constant(count, n, delta)
    C_used = C_fit if C is None else C
    return BallBoundReport(n, delta, radius, count, C_used, math.exp(log_ball_bound(n, delta, C_used)), C_fit, worst)


# -- good sets -------------------------------------------------------------------


@dataclass(frozen=True)
class GoodSet:
    """A subset G of L(X): the whole language, words ending with a given
    word, words beginning and ending with it, or an explicit list."""

    X: Subshift
    kind: str = "whole"
    word: tuple = ()
    words: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in ("whole", "ends-with", "begins-and-ends-with", "explicit"):
            raise DomainError(f"unknown good-set kind {self.kind!r}")
        object.__setattr__(self, "word", to_word(self.word, self.X.p))
        object.__setattr__(self, "words", frozenset(to_word(w, self.X.p) for w in self.words))

    def _shape_ok(self, w: tuple[int, ...]) -> bool:
        if self.kind == "whole":
            return True
        if self.kind == "explicit":
            return w in self.words
        u = self.word
        if len(w) < len(u) or w[len(w) - len(u) :] != u:
            return False
        if self.kind == "begins-and-ends-with":
            return w[: len(u)] == u
        return True

    def contains(self, w) -> bool:
        w = to_word(w, self.X.p)
        return self._shape_ok(w) and self.X.contains(w)

    def of_length(self, n: int) -> list[tuple[int, ...]]:
        if self.kind == "explicit":
            return sorted(w for w in self.words if len(w) == n and self.X.contains(w))
        return [w for w in self.X.language(n) if self._shape_ok(w)]

    def upto(self, n_max: int) -> list[tuple[int, ...]]:
        return [w for n in range(1, n_max + 1) for w in self.of_length(n)]

    def description(self) -> dict:
        if self.kind == "whole":
            return {"kind": "whole"}
        if self.kind == "explicit":
            return {"kind": "explicit", "words": sorted(word_str(w) for w in self.words)}
        return {"kind": self.kind, "word": word_str(self.word)}


@dataclass(frozen=True)
class SpecificationReport:
    holds: bool
    max_gap: int
    first_failure: tuple | None
    pairs: int


def check_w_specification(G: GoodSet, tau: int, n_max: int) -> SpecificationReport:
    """For all v, w in G up to length n_max, look for u in L, |u| <= tau, with vuw in G."""
    words = G.upto(n_max)
    connectors = [u for k in range(tau + 1) for u in G.X.language(k)]
    max_gap, failure = 0, None
    for v in words:
        for w in words:
            for u in connectors:
                if G.contains(v + u + w):
                    max_gap = max(max_gap, len(u))
                    break
            else:
                if failure is None:
                    failure = (v, w)
    return SpecificationReport(failure is None, max_gap, failure, len(words) ** 2)


def check_free_concatenation(F: GoodSet, n_max: int) -> tuple[bool, tuple | None]:
    words = F.upto(n_max)
    for u in words:
        for w in words:
            if not F.contains(u + w):
                return False, (u, w)
    return True, None


# -- mistake functions and nearest good words -----------------------------------


@dataclass(frozen=True)
class MistakeFunction:
    """Non-decreasing g tabulated at n = 1..len(values).

    Beyond the table, ``tail`` is used if given, else the last value.
    """

    values: tuple
    tail: Callable[[int], int] | None = field(default=None, compare=False)
    raw: tuple = ()

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v < 0 for v in vals) or any(b < a for a, b in zip(vals, vals[1:])):
            raise DomainError("a mistake function must be non-negative and non-decreasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, g: Callable[[int], int], n_max: int) -> "MistakeFunction":
        return cls(tuple(g(n) for n in range(1, n_max + 1)), g)

    @classmethod
    def zero(cls, n_max: int = 1) -> "MistakeFunction":
        return cls((0,) * n_max, lambda n: 0)

    def __call__(self, n: int) -> int:
        if n < 1:
            return 0
        if n <= len(self.values):
            return self.values[n - 1]
        if self.tail is not None:
            return int(self.tail(n))
        return self.values[-1] if self.values else 0

    def table(self) -> list[tuple[int, int, float]]:
        return [(n, g, g / n) for n, g in enumerate(self.values, start=1)]


@lru_cache(maxsize=65536)
def _nearest_cached(w: tuple[int, ...], G: GoodSet, horizon: int):
    layers = [{w}]
    seen = {w}
    for d in range(horizon + 1):
        if d > 0:
            nxt = set()
            for u in layers[-1]:
                nxt.update(single_edits(u, G.X.p))
            nxt -= seen
            seen |= nxt
            layers.append(nxt)
        hits = [u for u in layers[-1] if G.contains(u)]
        if hits:
            return min(hits, key=lambda u: (len(u), u)), d
    return None


def nearest_in(w, G: GoodSet, horizon: int | None = None) -> tuple[tuple[int, ...], int]:
    """Closest member of G in edit distance; ties go to the shorter, then
    lexicographically smaller word."""
    w = to_word(w, G.X.p)
    if horizon is None:
        horizon = math.ceil(len(w) / 2) + 2
    hit = _nearest_cached(w, G, horizon)
    if hit is None:
        raise NotFoundError(f"no member of G within edit distance {horizon} of {word_str(w)}")
    return hit


def empirical_mistake_function(X: Subshift, G: GoodSet, n_max: int) -> MistakeFunction:
    """max over w in L_n of the distance to G, max-enveloped in n."""
    raw = []
    for n in range(1, n_max + 1):
        if G.kind == "whole":
            raw.append(0)
            continue
        # members of G are at distance 0; only the rest need a search
        raw.append(max((nearest_in(w, G)[1] for w in X.language(n) if not G.contains(w)), default=0))
    env = tuple(np.maximum.accumulate(raw).tolist()) if raw else ()
    return MistakeFunction(env, None, tuple(raw))


def glue(words: Iterable, G: GoodSet, g: MistakeFunction | None = None) -> tuple[tuple[int, ...], list[int]]:
    """Edit each word to its nearest member of G and concatenate."""
    out: list[int] = []
    lengths = []
    for w in words:
        w = to_word(w, G.X.p)
        v, d = nearest_in(w, G)
        if g is not None and abs(len(v) - len(w)) > g(len(w)):
            raise ConstructionError(f"segment length {len(v)} deviates from {len(w)} by more than g = {g(len(w))}")
        out.extend(v)
        lengths.append(len(v))
    return tuple(out), lengths


# -- discrepancy bounds for edited words -------------------------------------------


def birkhoff_discrepancy_bound(k: int, r: int, sup_norm: float, min_len: int) -> float:
    """Bound on |A_phi(v) - A_phi(w)| for periodic-extension Birkhoff averages
    of words at edit distance k.

    One edit changes at most r cyclic windows (substitution) or removes r-1 and
    creates r (insertion/deletion), so the sums move by at most 2r|phi| per
    edit while the lengths move by at most one.
    """
    if min_len < 1:
        raise DomainError("words must be nonempty")
    return (2 * r + 1) * k * sup_norm / min_len


def distribution_discrepancy_bound(k: int, p: int, K: int, min_len: int) -> float:
    """Bound on the K-truncated D between periodic empirical measures of words
    at edit distance k: each length-l cylinder frequency moves by at most
    (l + 1) k / min_len, capped at 1."""
    if min_len < 1:
        raise DomainError("words must be nonempty")
    total = 0.0
    for idx, u in enumerate(cylinder_words(p, K), start=1):
        total += 0.5**idx * min(1.0, (len(u) + 1) * k / min_len)
    return total


def index_depth(p: int, K: int) -> int:
    return depth_for_index(p, K)
