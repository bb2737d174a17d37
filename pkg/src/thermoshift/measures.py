"""Potentials, Markov and empirical measures, and the weak* distance.

Every measure exposes ``cylinder_table(l)``: the masses of all length-l
cylinders as an array of shape ``(p,) * l`` (lexicographic when flattened).
Everything else is built on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from thermoshift.errors import DomainError
from thermoshift.shift_spaces import SequencePrefix, Subshift, all_words, to_word

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10


# -- potentials --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Potential:
    """Locally constant function of the first ``depth`` symbols.

    ``table`` has shape ``(p,) * depth``; entries on inadmissible words are
    never read and may be NaN.
    """

    p: int
    depth: int
    table: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise DomainError("potential depth must be at least 1")
        t = np.asarray(self.table, dtype=float)
        if t.shape != (self.p,) * self.depth:
            raise DomainError(f"table shape {t.shape} does not match p={self.p}, depth={self.depth}")
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    @classmethod
    def constant(cls, c: float, p: int = 2) -> "Potential":
        return cls(p, 1, np.full(p, float(c)))

    @classmethod
    def indicator(cls, word, p: int = 2) -> "Potential":
        """1 on the cylinder [word], 0 elsewhere."""
        w = to_word(word, p)
        t = np.zeros((p,) * len(w))
        t[w] = 1.0
        return cls(p, len(w), t)

    @classmethod
    def from_dict(cls, p: int, depth: int, values: dict) -> "Potential":
        t = np.full((p,) * depth, np.nan)
        for w, v in values.items():
            w = to_word(w, p)
            if len(w) != depth:
                raise DomainError(f"word {w} has length {len(w)}, expected {depth}")
            t[w] = float(v)
        return cls(p, depth, t)

    @classmethod
    def random(cls, p: int, depth: int, rng: np.random.Generator, scale: float = 1.0) -> "Potential":
        return cls(p, depth, rng.uniform(-scale, scale, size=(p,) * depth))

    def __call__(self, window) -> float:
        return float(self.table[tuple(window[: self.depth])])

    def lift(self, depth: int) -> "Potential":
        """Same function viewed as a depth-``depth`` potential."""
        if depth < self.depth:
            raise DomainError("cannot lower the depth of a potential")
        t = self.table.reshape(self.table.shape + (1,) * (depth - self.depth))
        return Potential(self.p, depth, np.broadcast_to(t, (self.p,) * depth))

    def _combine(self, other, op) -> "Potential":
        if isinstance(other, Potential):
            if other.p != self.p:
                raise DomainError("potentials over different alphabets")
            r = max(self.depth, other.depth)
            return Potential(self.p, r, op(self.lift(r).table, other.lift(r).table))
        return Potential(self.p, self.depth, op(self.table, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c: float) -> "Potential":
        return Potential(self.p, self.depth, self.table * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def values_on(self, X: Subshift) -> np.ndarray:
        """Values on L_depth(X); raises if any admissible entry is missing."""
        words = X.language(self.depth)
        vals = np.array([self.table[w] for w in words])
        if not np.all(np.isfinite(vals)):
            raise DomainError("potential table does not cover the language")
        return vals

    def sup_norm(self, X: Subshift | None = None) -> float:
        vals = self.values_on(X) if X is not None else self.table[np.isfinite(self.table)]
        return float(np.max(np.abs(vals)))

    def min_value(self, X: Subshift) -> float:
        return float(np.min(self.values_on(X)))

    def max_value(self, X: Subshift) -> float:
        return float(np.max(self.values_on(X)))


# -- measures ----------------------------------------------------------------


def _masses_from_pi(pi: np.ndarray, ell: int, k: int) -> np.ndarray:
    return pi.sum(axis=tuple(range(ell, k))) if ell < k else pi


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure with memory ``k``.

    ``P`` has shape ``(p,) * (k + 1)``: ``P[s + (a,)]`` is the probability
    of reading ``a`` after the length-k block ``s``.  ``pi`` has shape
    ``(p,) * k``.
    """

    p: int
    k: int
    P: np.ndarray
    pi: np.ndarray
    depth = None

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        pi = np.asarray(self.pi, dtype=float)
        if P.shape != (self.p,) * (self.k + 1) or pi.shape != (self.p,) * self.k:
            raise DomainError("transition/stationary arrays have the wrong shape")
        if np.any(P < -ROW_TOL) or np.any(pi < -ROW_TOL):
            raise DomainError("negative probabilities")
        P = np.clip(P, 0.0, None)
        pi = np.clip(pi, 0.0, None)
        rows = P.sum(axis=-1)
        if np.any(np.abs(rows - 1.0) > ROW_TOL):
            raise DomainError("transition rows must sum to 1")
        if abs(pi.sum() - 1.0) > ROW_TOL:
            raise DomainError("stationary vector must sum to 1")
        # pi P = pi on length-k blocks
        nxt = (pi[..., None] * P).sum(axis=0)
        if np.max(np.abs(nxt - pi)) > STATIONARY_TOL:
            raise DomainError("pi is not stationary for P")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def from_matrix(cls, p: int, states, matrix, pi=None) -> "MarkovMeasure":
        """From a state list (equal-length words) and a row-stochastic matrix.

        Edges must be overlapping shifts (u -> u[1:] + a); ``pi`` is computed
        when omitted and checked when given.
        """
        states = [to_word(s, p) for s in states]
        k = len(states[0])
        M = np.asarray(matrix, dtype=float)
        if M.shape != (len(states), len(states)):
            raise DomainError("matrix does not match the state list")
        P = np.zeros((p,) * (k + 1))
        for i, u in enumerate(states):
            for j, v in enumerate(states):
                if M[i, j] == 0:
                    continue
                if u[1:] != v[:-1]:
                    raise DomainError(f"edge {u}->{v} is not an overlapping shift")
                P[u + (v[-1],)] += M[i, j]
        listed = np.zeros((p,) * k, dtype=bool)
        for u in states:
            listed[u] = True
        P[~listed] = 1.0 / p  # never visited; keeps rows stochastic
        computed = stationary_vector(M)
        pi_arr = np.zeros((p,) * k)
        for i, u in enumerate(states):
            pi_arr[u] = computed[i]
        if pi is not None:
            given = np.asarray(pi, dtype=float)
            if np.max(np.abs(given - computed)) > STATIONARY_TOL:
                raise DomainError("supplied stationary vector does not match the matrix")
        return cls(p, k, P, pi_arr)

    @property
    def states(self) -> list[tuple[int, ...]]:
        return all_words(self.p, self.k)

    def transition_matrix(self) -> np.ndarray:
        """Dense matrix over all p^k blocks."""
        S = self.p**self.k
        M = np.zeros((S, S))
        Pf = self.P.reshape(S, self.p)
        for i in range(S):
            for a in range(self.p):
                j = (i * self.p + a) % S
                M[i, j] += Pf[i, a]
        return M

    def cylinder(self, w) -> float:
        w = to_word(w, self.p)
        if len(w) <= self.k:
            return float(_masses_from_pi(self.pi, len(w), self.k)[w]) if w else 1.0
        m = self.pi[w[: self.k]]
        for i in range(len(w) - self.k):
            m *= self.P[w[i : i + self.k + 1]]
        return float(m)

    def cylinder_table(self, ell: int) -> np.ndarray:
        if ell <= self.k:
            return _masses_from_pi(self.pi, ell, self.k)
        t = self.pi
        for _ in range(ell - self.k):
            lead = t.ndim - self.k
            t = t[..., None] * self.P.reshape((1,) * lead + self.P.shape)
        return t


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Cylinder-frequency table of finite depth (``n`` = sample length, if any)."""

    p: int
    depth: int
    freqs: np.ndarray
    n: int | None = None

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        if f.shape != (self.p,) * self.depth:
            raise DomainError("frequency table has the wrong shape")
        if np.any(f < 0) or abs(f.sum() - 1.0) > ROW_TOL:
            raise DomainError("frequencies must be non-negative and sum to 1")
        object.__setattr__(self, "freqs", f)

    def cylinder_table(self, ell: int) -> np.ndarray:
        if ell > self.depth:
            raise DomainError(f"empirical measure has depth {self.depth} < {ell}")
        return self.freqs.sum(axis=tuple(range(ell, self.depth))) if ell < self.depth else self.freqs

    def cylinder(self, w) -> float:
        w = to_word(w, self.p)
        if not w:
            return 1.0
        return float(self.cylinder_table(len(w))[w])

    def as_dict(self) -> dict:
        return {w: float(self.freqs[w]) for w in all_words(self.p, self.depth) if self.freqs[w] > 0}


def bernoulli(probs: Sequence[float]) -> MarkovMeasure:
    probs = np.asarray(probs, dtype=float)
    p = len(probs)
    return MarkovMeasure(p, 1, np.tile(probs, (p, 1)), probs)


def bernoulli_binary(q: float) -> MarkovMeasure:
    """Bernoulli measure on {0,1} with P(symbol 1) = q."""
    return bernoulli([1.0 - q, q])


def stationary_vector(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    A = np.vstack([M.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _word_of(x) -> tuple[int, ...]:
    return x.word if isinstance(x, SequencePrefix) else to_word(x)


def _window_codes(w: np.ndarray, ell: int, p: int, periodic: bool, n: int) -> np.ndarray:
    """Integer codes of the n windows of length ell (rows = words)."""
    idx = np.arange(n)[:, None] + np.arange(ell)[None, :]
    if periodic:
        idx %= w.shape[-1]
    windows = w[..., idx].astype(np.int64)
    weights = p ** np.arange(ell - 1, -1, -1, dtype=np.int64)
    return windows @ weights


def empirical_measure(x, n: int, d: int, p: int | None = None) -> EmpiricalMeasure:
    """Frequencies of the length-d windows starting at positions 0..n-1."""
    w = _word_of(x)
    if p is None:
        p = x.host.p if isinstance(x, SequencePrefix) else max(2, max(w, default=0) + 1)
    if n < 1 or d < 1:
        raise DomainError("n and d must be positive")
    if len(w) < n + d - 1:
        raise DomainError(f"prefix of length {len(w)} is shorter than n + d - 1 = {n + d - 1}")
    codes = _window_codes(np.asarray(w, dtype=np.int64), d, p, False, n)
    counts = np.bincount(codes, minlength=p**d).astype(float)
    return EmpiricalMeasure(p, d, (counts / n).reshape((p,) * d), n)


def periodic_empirical_measure(w, d: int, p: int) -> EmpiricalMeasure:
    """Empirical measure of the periodic point w^oo over one period.

    This is a shift-invariant measure, so its marginals are exactly consistent.
    """
    w = to_word(w, p)
    if not w:
        raise DomainError("empty word has no periodic extension")
    codes = _window_codes(np.asarray(w, dtype=np.int64), d, p, True, len(w))
    counts = np.bincount(codes, minlength=p**d).astype(float)
    return EmpiricalMeasure(p, d, (counts / len(w)).reshape((p,) * d), len(w))


def periodic_frequencies(words: np.ndarray, d: int, p: int) -> list[np.ndarray]:
    """Periodic-extension cylinder frequencies for many words at once.

    ``words`` is (N, n); returns, for each l = 1..d, an (N, p**l) array.
    """
    N, n = words.shape
    out = []
    for ell in range(1, d + 1):
        codes = _window_codes(words, ell, p, True, n)
        flat = (np.arange(N)[:, None] * p**ell + codes).ravel()
        counts = np.bincount(flat, minlength=N * p**ell).reshape(N, p**ell)
        out.append(counts / n)
    return out


# -- the weak* distance --------------------------------------------------------


def index_capacity(p: int, depth: int) -> int:
    """Number of cylinder indicators with word length <= depth."""
    return sum(p**ell for ell in range(1, depth + 1))


def depth_for_index(p: int, K: int) -> int:
    ell, total = 0, 0
    while total < K:
        ell += 1
        total += p**ell
    return ell


def cylinder_words(p: int, K: int) -> list[tuple[int, ...]]:
    """The words indexing f_1..f_K in length-then-lexicographic order."""
    out = []
    ell = 1
    while len(out) < K:
        out.extend(all_words(p, ell))
        ell += 1
    return out[:K]


def distance_weights(p: int, K: int) -> list[np.ndarray]:
    """Per-length weight vectors 2^-k, zero beyond index K."""
    weights = []
    start = 1
    for ell in range(1, depth_for_index(p, K) + 1):
        k = np.arange(start, start + p**ell)
        w = np.where(k <= K, np.power(0.5, k.astype(float)), 0.0)
        weights.append(w)
        start += p**ell
    return weights


def _depth_of(mu) -> float:
    d = getattr(mu, "depth", None)
    return math.inf if d is None else d


def weak_star_distance(mu, nu, K: int, truncate: bool = False) -> tuple[float, float]:
    """Partial sum of sum_k |mu(f_k) - nu(f_k)| / 2^k for k <= K, and the tail bound 2^-K.

    ``f_k`` are cylinder indicators in length-lex order.  If a measure is too
    shallow for index K, either raise (default) or truncate K and report the
    enlarged tail.
    """
    if mu.p != nu.p:
        raise DomainError("measures live on different alphabets")
    p = mu.p
    if K < 1:
        raise DomainError("K must be positive")
    shallow = min(_depth_of(mu), _depth_of(nu))
    need = depth_for_index(p, K)
    if need > shallow:
        usable = index_capacity(p, int(shallow))
        if not truncate:
            raise DomainError(f"measure depth {int(shallow)} supports at most K = {usable}")
        K = usable
    total = 0.0
    for ell, w in enumerate(distance_weights(p, K), start=1):
        diff = np.abs(mu.cylinder_table(ell).ravel() - nu.cylinder_table(ell).ravel())
        total += float(np.dot(w, diff))
    return total, 0.5**K


def distances_to(freqs: list[np.ndarray], mu, p: int) -> np.ndarray:
    """Truncated D between each row of ``periodic_frequencies`` output and mu."""
    d = len(freqs)
    K = index_capacity(p, d)
    weights = distance_weights(p, K)
    total = np.zeros(freqs[0].shape[0])
    for ell in range(1, d + 1):
        target = mu.cylinder_table(ell).ravel()
        total += np.abs(freqs[ell - 1] - target[None, :]) @ weights[ell - 1]
    return total


# -- entropy, integration, mixtures -----------------------------------------


def markov_entropy(mu: MarkovMeasure) -> float:
    """-sum pi_s P(s,a) log P(s,a), in nats."""
    P = mu.P
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P > 0, P * np.log(P), 0.0)
    return float(-(mu.pi[..., None] * plogp).sum())


def block_entropy(mu, d: int) -> float:
    t = mu.cylinder_table(d).ravel()
    t = t[t > 0]
    return float(-(t * np.log(t)).sum())


def integrate(phi: Potential, mu) -> float:
    if phi.p != mu.p:
        raise DomainError("potential and measure use different alphabets")
    if phi.depth > _depth_of(mu):
        raise DomainError(f"measure depth {mu.depth} is below the potential depth {phi.depth}")
    masses = mu.cylinder_table(phi.depth)
    with np.errstate(invalid="ignore"):
        vals = np.where(masses > 0, phi.table * masses, 0.0)
    if np.any(np.isnan(vals)):
        raise DomainError("potential is undefined on a charged cylinder")
    return float(vals.sum())


def mixture(measures, weights, depth: int | None = None) -> EmpiricalMeasure:
    """Cylinder-wise convex combination at a common depth."""
    weights = np.asarray(weights, dtype=float)
    if len(measures) != len(weights) or not measures:
        raise DomainError("need one weight per measure")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > ROW_TOL:
        raise DomainError("weights must be non-negative and sum to 1")
    p = measures[0].p
    if any(m.p != p for m in measures):
        raise DomainError("measures live on different alphabets")
    finite = [m.depth for m in measures if m.depth is not None]
    if depth is None:
        if not finite:
            raise DomainError("a common depth is required when mixing Markov measures")
        depth = min(finite)
    if finite and depth > min(finite):
        raise DomainError(f"common depth {depth} exceeds a component depth {min(finite)}")
    table = sum(a * m.cylinder_table(depth) for a, m in zip(weights, measures))
    table = table / table.sum()
    return EmpiricalMeasure(p, depth, table)


def birkhoff_sum(phi: Potential, x, n: int) -> float:
    w = _word_of(x)
    if len(w) < n + phi.depth - 1:
        raise DomainError(f"prefix of length {len(w)} is shorter than n + r - 1 = {n + phi.depth - 1}")
    return math.fsum(phi(w[i : i + phi.depth]) for i in range(n))


def periodic_birkhoff_average(phi: Potential, w) -> float:
    """(1/|w|) S_|w| phi along the periodic point w^oo."""
    w = to_word(w, phi.p)
    if not w:
        raise DomainError("empty word")
    ext = w * (phi.depth // len(w) + 2)
    return birkhoff_sum(phi, ext, len(w)) / len(w)


def sample_path(mu: MarkovMeasure, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """A length-n path of the stationary chain."""
    flat_pi = mu.pi.ravel()
    start = rng.choice(len(flat_pi), p=flat_pi)
    s = list(np.unravel_index(start, mu.pi.shape)) if mu.k else []
    out = [int(a) for a in s]
    u = rng.random(max(0, n - mu.k))
    for i in range(n - mu.k):
        row = mu.P[tuple(out[len(out) - mu.k :])]
        out.append(int(min(np.searchsorted(np.cumsum(row), u[i], side="right"), mu.p - 1)))
    return tuple(out[:n])


def random_markov_measure(X: Subshift, k: int, rng: np.random.Generator, concentration: float = 1.0) -> MarkovMeasure:
    """Memory-k Markov measure supported on L(X): Dirichlet rows over the
    admissible extensions of each admissible k-block.

    Only meaningful when k is at least the memory of X (an SFT's block length).
    """
    states = X.language(k)
    index = {s: i for i, s in enumerate(states)}
    M = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        nxt = [index[(s + (a,))[1:]] for a in range(X.p) if X.contains(s + (a,))]
        if not nxt:
            raise DomainError(f"block {s} has no admissible extension")
        M[i, nxt] = rng.dirichlet(np.full(len(nxt), concentration))
    return MarkovMeasure.from_matrix(X.p, states, M)
