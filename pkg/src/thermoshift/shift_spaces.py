"""One-sided shift spaces over a finite alphabet and their languages.

Words are tuples of ints in ``range(p)``.  Every subshift is presented by a
deterministic automaton (``initial_state`` / ``advance``) whose accepted words
are exactly the admissible ones; membership, enumeration and counting all run
through it, so the three can never disagree.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import mpmath
import numpy as np

from thermoshift.errors import DomainError, ResourceError

DEFAULT_BUDGET = 2_000_000

_SYMBOLS = "0123456789abcdefghijklmnopqrstuvwxyz"

Word = tuple


def to_word(w, p: int | None = None) -> tuple[int, ...]:
    """Coerce a digit string or an int sequence to a word tuple."""
    if isinstance(w, str):
        try:
            symbols = tuple(_SYMBOLS.index(c) for c in w.strip().lower())
        except ValueError as exc:
            raise DomainError(f"unrecognised symbol in word {w!r}") from exc
    else:
        symbols = tuple(int(a) for a in w)
    if p is not None:
        for a in symbols:
            if not 0 <= a < p:
                raise DomainError(f"symbol {a} outside alphabet of size {p}")
    return symbols


def word_str(w: Sequence[int]) -> str:
    return "".join(_SYMBOLS[a] for a in w)


def all_words(p: int, n: int) -> list[tuple[int, ...]]:
    """All of A^n in lexicographic order."""
    return list(itertools.product(range(p), repeat=n))


def longest_common_prefix(u: Sequence[int], v: Sequence[int]) -> int:
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return k


def prefix_distance(u: Sequence[int], v: Sequence[int]) -> float:
    """The metric exp(-|u ^ v|) restricted to finite prefixes."""
    if tuple(u) == tuple(v):
        return 0.0
    return math.exp(-longest_common_prefix(u, v))


class LexOrder(enum.Enum):
    LESS = "less"
    EQUAL_PREFIX = "equal-prefix"
    GREATER = "greater"


def lex_compare(u: Sequence[int], v: Sequence[int]) -> LexOrder:
    """Compare on the common length; a prefix relation counts as equal."""
    for a, b in zip(u, v):
        if a < b:
            return LexOrder.LESS
        if a > b:
            return LexOrder.GREATER
    return LexOrder.EQUAL_PREFIX


class Subshift:
    """Base class; subclasses supply ``p``, ``kind`` and the automaton."""

    kind: str = "abstract"
    p: int

    def initial_state(self):
        raise NotImplementedError

    def advance(self, state, a: int):
        """Return the state after reading ``a``, or None if inadmissible."""
        raise NotImplementedError

    def contains(self, w) -> bool:
        w = to_word(w, self.p)
        state = self.initial_state()
        for a in w:
            state = self.advance(state, a)
            if state is None:
                return False
        return True

    def count(self, n: int) -> int:
        """|L_n|, computed by dynamic programming over automaton states."""
        if n < 0:
            raise DomainError("word length must be non-negative")
        layer = {self.initial_state(): 1}
        for _ in range(n):
            nxt: dict = {}
            for state, c in layer.items():
                for a in range(self.p):
                    s = self.advance(state, a)
                    if s is not None:
                        nxt[s] = nxt.get(s, 0) + c
            layer = nxt
        return sum(layer.values())

    def _check_budget(self, n: int, budget: int | None) -> None:
        budget = DEFAULT_BUDGET if budget is None else budget
        size = self.count(n)
        if size > budget:
            raise ResourceError(
                f"|L_{n}| = {size} exceeds the enumeration budget of {budget} words",
                budget=budget,
            )

    def language(self, n: int, budget: int | None = None) -> list[tuple[int, ...]]:
        """Admissible words of length n in lexicographic order."""
        if n < 0:
            raise DomainError("word length must be non-negative")
        self._check_budget(n, budget)
        layer = [((), self.initial_state())]
        for _ in range(n):
            nxt = []
            for w, state in layer:
                for a in range(self.p):
                    s = self.advance(state, a)
                    if s is not None:
                        nxt.append((w + (a,), s))
            layer = nxt
        return [w for w, _ in layer]

    def language_array(self, n: int, budget: int | None = None) -> np.ndarray:
        words = self.language(n, budget)
        return np.array(words, dtype=np.int8).reshape(len(words), n)

    def words_upto(self, n_max: int, budget: int | None = None, start: int = 1):
        """Length-then-lexicographic enumeration of L_start .. L_n_max."""
        out = []
        for n in range(start, n_max + 1):
            out.extend(self.language(n, budget))
        return out

    def description(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class SFT(Subshift):
    """Shift of finite type given by a list of forbidden words.

    The language consists of the words that avoid every forbidden word and
    extend to an infinite admissible sequence on the right.
    """

    p: int
    forbidden: tuple = ()
    kind = "sft"

    def __post_init__(self):
        if self.p < 2:
            raise DomainError("alphabet size must be at least 2")
        words = {to_word(f, self.p) for f in self.forbidden}
        if () in words:
            raise DomainError("the empty word cannot be forbidden")
        object.__setattr__(self, "forbidden", tuple(sorted(words, key=lambda f: (len(f), f))))

    @classmethod
    def from_transition_matrix(cls, matrix, states=None, p: int | None = None) -> "SFT":
        """Build from a 0/1 matrix over states = allowed length-m words.

        With ``states`` omitted the states are the symbols themselves.
        """
        A = np.asarray(matrix)
        if states is None:
            states = [(i,) for i in range(A.shape[0])]
        states = [to_word(s) for s in states]
        m = len(states[0])
        if any(len(s) != m for s in states) or A.shape != (len(states), len(states)):
            raise DomainError("states must be equal-length words matching the matrix")
        if p is None:
            p = max(max(s) for s in states) + 1
        p = max(p, 2)
        index = {s: i for i, s in enumerate(states)}
        forbidden = [w for w in all_words(p, m) if w not in index]
        for w in all_words(p, m + 1):
            u, v = w[:-1], w[1:]
            if u in index and v in index and not A[index[u], index[v]]:
                forbidden.append(w)
        return cls(p, tuple(forbidden))

    @cached_property
    def _forbidden_set(self) -> frozenset:
        return frozenset(self.forbidden)

    @cached_property
    def _forbidden_lengths(self) -> tuple[int, ...]:
        return tuple(sorted({len(f) for f in self.forbidden}))

    @cached_property
    def block_length(self) -> int:
        """Length of the blocks that serve as graph states."""
        longest = max(self._forbidden_lengths, default=1)
        return max(1, longest - 1)

    def _avoids(self, w: tuple[int, ...]) -> bool:
        fs = self._forbidden_set
        for L in self._forbidden_lengths:
            for i in range(len(w) - L + 1):
                if w[i : i + L] in fs:
                    return False
        return True

    def _suffix_ok(self, w: tuple[int, ...]) -> bool:
        fs = self._forbidden_set
        for L in self._forbidden_lengths:
            if len(w) >= L and w[-L:] in fs:
                return False
        return True

    @cached_property
    def _live(self) -> frozenset:
        k = self.block_length
        blocks = {w for w in itertools.product(range(self.p), repeat=k) if self._avoids(w)}
        succ = {
            u: [(u + (a,))[1:] for a in range(self.p) if self._suffix_ok(u + (a,))]
            for u in blocks
        }
        alive = set(blocks)
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if not any(v in alive for v in succ[u]):
                    alive.discard(u)
                    changed = True
        return frozenset(alive)

    @cached_property
    def _live_prefixes(self) -> frozenset:
        return frozenset(u[:i] for u in self._live for i in range(len(u) + 1))

    def initial_state(self):
        return ()

    def advance(self, state, a: int):
        w = state + (a,)
        if not self._suffix_ok(w):
            return None
        k = self.block_length
        w = w[-k:]
        if len(w) == k:
            return w if w in self._live else None
        return w if w in self._live_prefixes else None

    def contains(self, w) -> bool:
        w = to_word(w, self.p)
        if len(w) == 0:
            return bool(self._live)
        return super().contains(w)

    def description(self) -> dict:
        return {"kind": "sft", "alphabet": self.p, "forbidden": [word_str(f) for f in self.forbidden]}


@dataclass(frozen=True)
class FullShift(SFT):
    kind = "full"

    def __init__(self, p: int):
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "forbidden", ())
        self.__post_init__()

    def advance(self, state, a: int):
        return ()

    def count(self, n: int) -> int:
        if n < 0:
            raise DomainError("word length must be non-negative")
        return self.p**n

    def language_array(self, n: int, budget: int | None = None) -> np.ndarray:
        self._check_budget(n, budget)
        if n == 0:
            return np.zeros((1, 0), dtype=np.int8)
        grids = np.indices((self.p,) * n, dtype=np.int8)
        return grids.reshape(n, -1).T.copy()

    def description(self) -> dict:
        return {"kind": "full", "alphabet": self.p}

    def __repr__(self):
        return f"FullShift(p={self.p})"


# -- beta expansions ---------------------------------------------------------


def parse_beta(beta) -> mpmath.mpf:
    if isinstance(beta, str):
        key = beta.strip().lower()
        if key in ("golden", "phi"):
            return mpmath.phi
        try:
            return mpmath.mpf(key)
        except (ValueError, TypeError) as exc:
            raise DomainError(f"cannot parse beta value {beta!r}") from exc
    return mpmath.mpf(beta)


@dataclass(frozen=True)
class BetaExpansion:
    """Greedy expansion of 1 in base beta, with its quasi-greedy companion.

    ``period`` is set when the greedy expansion terminates (its last nonzero
    digit sits at ``terminates_at``, 1-based); the quasi-greedy expansion is
    then purely periodic with that block.  ``flagged`` lists 1-based
    positions whose remainder came within the guard of an integer.
    """

    beta: float
    greedy: tuple[int, ...]
    quasi_greedy: tuple[int, ...]
    terminates_at: int | None
    period: tuple[int, ...] | None
    flagged: tuple[int, ...]


def beta_expansion(beta, k: int, dps: int = 60, guard: float = 1e-12) -> BetaExpansion:
    b = parse_beta(beta)
    if not b > 1:
        raise DomainError(f"beta must exceed 1, got {beta!r}")
    if k < 1:
        raise DomainError("need at least one digit")
    dps = max(dps, int(k * math.log10(float(b))) + 30)
    greedy: list[int] = []
    flagged: list[int] = []
    terminates_at = None
    with mpmath.workdps(dps):
        b = parse_beta(beta)
        r = mpmath.mpf(1)
        for j in range(1, k + 1):
            if terminates_at is not None:
                greedy.append(0)
                continue
            t = b * r
            nearest = int(mpmath.nint(t))
            if abs(t - nearest) < guard:
                flagged.append(j)
                digit, r = nearest, mpmath.mpf(0)
            else:
                digit = int(mpmath.floor(t))
                r = t - digit
            greedy.append(digit)
            if r == 0:
                terminates_at = j
    period = None
    if terminates_at is not None:
        period = tuple(greedy[: terminates_at - 1]) + (greedy[terminates_at - 1] - 1,)
        quasi = tuple(period[i % len(period)] for i in range(k))
    else:
        quasi = tuple(greedy)
    return BetaExpansion(float(b), tuple(greedy), quasi, terminates_at, period, tuple(flagged))


@dataclass(frozen=True)
class BetaShift(Subshift):
    """Sequences all of whose shifts are lexicographically dominated by the
    quasi-greedy expansion of 1."""

    beta: object
    dps: int = 60
    guard: float = 1e-12
    _digits: dict = field(default_factory=dict, compare=False, repr=False, hash=False)
    kind = "beta"

    def __post_init__(self):
        if not parse_beta(self.beta) > 1:
            raise DomainError(f"beta must exceed 1, got {self.beta!r}")

    @cached_property
    def value(self) -> float:
        return float(parse_beta(self.beta))

    @cached_property
    def p(self) -> int:
        return int(mpmath.ceil(parse_beta(self.beta)))

    def expansion(self, k: int) -> BetaExpansion:
        return beta_expansion(self.beta, k, self.dps, self.guard)

    @cached_property
    def period(self) -> tuple[int, ...] | None:
        return self.expansion(64).period

    def quasi_greedy(self, k: int) -> tuple[int, ...]:
        """First k quasi-greedy digits (cached, extended on demand)."""
        if self.period is not None:
            q = self.period
            return tuple(q[i % len(q)] for i in range(k))
        cached = self._digits.get("q", ())
        if len(cached) < k:
            cached = self.expansion(max(k, 2 * len(cached), 64)).quasi_greedy
            self._digits["q"] = cached
        return cached[:k]

    def _digit(self, i: int) -> int:
        if self.period is not None:
            return self.period[i % len(self.period)]
        cached = self._digits.get("q", ())
        if i >= len(cached):
            cached = self.quasi_greedy(i + 1)
        return cached[i]

    def initial_state(self):
        return ()

    def advance(self, state, a: int):
        # state: lengths of suffixes still tied with a prefix of the expansion
        tied = []
        for length in state + (0,):
            d = self._digit(length)
            if a > d:
                return None
            if a == d:
                tied.append(length + 1)
        return tuple(sorted(set(tied)))

    def description(self) -> dict:
        return {"kind": "beta", "beta": str(self.beta)}


# -- S-gap shifts ------------------------------------------------------------


@dataclass(frozen=True)
class GapSet:
    """A set S of allowed gap lengths.

    kinds: ``finite`` (explicit ``values``), ``arithmetic``
    ({start + j*step : j >= 0}) and ``cofinite`` (all n >= 0 except ``values``).
    """

    kind: str
    values: tuple = ()
    start: int = 0
    step: int = 1

    def __post_init__(self):
        if self.kind not in ("finite", "arithmetic", "cofinite"):
            raise DomainError(f"unknown gap-set kind {self.kind!r}")
        vals = tuple(sorted({int(v) for v in self.values}))
        if any(v < 0 for v in vals):
            raise DomainError("gap lengths must be non-negative")
        object.__setattr__(self, "values", vals)
        if self.kind == "arithmetic" and (self.step < 1 or self.start < 0):
            raise DomainError("arithmetic gap set needs start >= 0 and step >= 1")
        if self.kind == "finite" and not vals:
            raise DomainError("gap set must be nonempty")

    @classmethod
    def finite(cls, values: Iterable[int]) -> "GapSet":
        return cls("finite", tuple(values))

    @classmethod
    def arithmetic(cls, start: int, step: int) -> "GapSet":
        return cls("arithmetic", (), start, step)

    @classmethod
    def cofinite(cls, exclude: Iterable[int] = ()) -> "GapSet":
        return cls("cofinite", tuple(exclude))

    @classmethod
    def naturals(cls) -> "GapSet":
        return cls("cofinite", ())

    def __contains__(self, n: int) -> bool:
        if n < 0:
            return False
        if self.kind == "finite":
            return n in self.values
        if self.kind == "arithmetic":
            return n >= self.start and (n - self.start) % self.step == 0
        return n not in self.values

    @property
    def sup(self) -> float:
        return float(self.values[-1]) if self.kind == "finite" else math.inf

    def elements(self, upto: int) -> list[int]:
        return [n for n in range(upto + 1) if n in self]

    def truncate(self, m: int) -> "GapSet":
        return GapSet.finite(self.elements(m))

    def series(self, x: float, terms: int = 200) -> tuple[float, float]:
        """Partial sum of sum_{n in S} x^-(n+1) over n <= terms, and a tail bound."""
        partial = math.fsum(x ** -(n + 1) for n in self.elements(terms))
        if self.kind == "finite" and self.sup <= terms:
            return partial, 0.0
        return partial, x ** -(terms + 1) / (x - 1)

    def description(self):
        if self.kind == "finite":
            return list(self.values)
        if self.kind == "arithmetic":
            return {"rule": "arithmetic", "start": self.start, "step": self.step}
        return {"rule": "cofinite", "exclude": list(self.values)}


@dataclass(frozen=True)
class SGapShift(Subshift):
    """Binary shift whose interior runs of 0s between 1s have lengths in S.

    A leading or trailing run 0^a is admissible iff some s in S has s >= a.
    ``zero_point=True`` additionally adds the fixed point 0^oo, so every 0^n
    is admissible.
    """

    gaps: GapSet
    zero_point: bool = False
    kind = "sgap"
    p = 2

    def initial_state(self):
        return (False, 0)

    def advance(self, state, a: int):
        seen, run = state
        if a == 0:
            if run + 1 <= self.gaps.sup or (self.zero_point and not seen):
                return (seen, run + 1)
            return None
        if a != 1:
            return None
        if seen:
            return (True, 0) if run in self.gaps else None
        return (True, 0) if run <= self.gaps.sup else None

    def description(self) -> dict:
        d = {"kind": "sgap", "gaps": self.gaps.description()}
        if self.zero_point:
            d["zero_point"] = True
        return d


@dataclass(frozen=True)
class SequencePrefix:
    """A finite-resolution point: an admissible prefix of some x in ``host``."""

    word: tuple
    host: Subshift

    def __post_init__(self):
        w = to_word(self.word, self.host.p)
        if not self.host.contains(w):
            raise DomainError(f"{word_str(w)} is not admissible in {self.host!r}")
        object.__setattr__(self, "word", w)

    def __len__(self):
        return len(self.word)


# -- inner approximation ----------------------------------------------------


def _periodic_leq(q: tuple[int, ...], a_digits) -> bool:
    """q^oo <= a in lex order, compared over a long enough prefix."""
    n = len(a_digits)
    for i in range(n):
        qi = q[i % len(q)]
        if qi != a_digits[i]:
            return qi < a_digits[i]
    return True


def _periodic_key(q: tuple[int, ...], length: int) -> tuple[int, ...]:
    return tuple(q[i % len(q)] for i in range(length))


def periodic_dominance_sft(q: tuple[int, ...], p: int) -> SFT:
    """SFT of all sequences whose shifts are all <= q^oo."""
    forbidden = []
    for i, qi in enumerate(q):
        for c in range(qi + 1, p):
            forbidden.append(q[:i] + (c,))
    return SFT(p, tuple(forbidden))


def inner_sft_approximation(X: Subshift, m: int, budget: int | None = None) -> SFT:
    """An SFT contained in X whose language grows with m."""
    if m < 1:
        raise DomainError("approximation level must be at least 1")
    if isinstance(X, SFT):
        return X
    if isinstance(X, SGapShift):
        T = X.gaps.truncate(m).values
        if not T:
            raise DomainError(f"S has no element <= {m}")
        top = T[-1]
        forbidden = [(1,) + (0,) * j + (1,) for j in range(top) if j not in T]
        forbidden.append((0,) * (top + 1))
        return SFT(2, tuple(forbidden))
    if isinstance(X, BetaShift):
        horizon = max(4 * m, 256)
        a = X.quasi_greedy(horizon)
        candidates = []
        for k in range(1, m + 1):
            s = a[:k]
            if _periodic_leq(s, a):
                candidates.append(s)
            elif s[-1] > 0:
                candidates.append(s[:-1] + (s[-1] - 1,))
        cmp_len = 2 * m + 2
        best = max(candidates, key=lambda q: _periodic_key(q, cmp_len))
        # shortest block generating the same periodic sequence
        for L in range(1, len(best) + 1):
            if len(best) % L == 0 and best == best[:L] * (len(best) // L):
                best = best[:L]
                break
        sft = periodic_dominance_sft(best, X.p)
        if budget is not None and X.p ** sft.block_length > budget:
            raise ResourceError("inner approximation exceeds the budget", budget=budget)
        return sft
    raise DomainError(f"no inner approximation for {type(X).__name__}")
