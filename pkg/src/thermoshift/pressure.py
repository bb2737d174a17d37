"""Topological pressure: transfer matrices on SFTs, counting brackets
elsewhere, explicit cover sums, and the Bowen equation."""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import matrix_balance
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from thermoshift.errors import DomainError, NumericError, ResourceError
from thermoshift.measures import MarkovMeasure, Potential, stationary_vector
from thermoshift.shift_spaces import (
    DEFAULT_BUDGET,
    SFT,
    FullShift,
    GapSet,
    SGapShift,
    Subshift,
    inner_sft_approximation,
    to_word,
)

POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000


@dataclass(frozen=True)
class PressureEstimate:
    lower: float
    upper: float
    method: str
    n: int
    oracle: float | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper:
            raise NumericError(f"inverted bracket [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True, eq=False)
class TransferResult:
    """Perron data of the weighted transition matrix on K-blocks.

    ``component`` holds the state indices of the irreducible class that
    carries the spectral radius; ``reducible`` is True when the admissible
    graph is not a single irreducible class.
    """

    pressure: float
    states: list
    log_weights: np.ndarray
    right: np.ndarray
    left: np.ndarray
    component: np.ndarray
    reducible: bool
    block: int


def _as_sft(X: Subshift) -> SFT:
    if not isinstance(X, SFT):
        raise DomainError(f"transfer computations need an SFT, got {type(X).__name__}")
    return X


@lru_cache(maxsize=256)
def block_graph(X: SFT, K: int):
    """States L_K(X) and edges (i, j, w) for each w in L_{K+1}(X)."""
    states = X.language(K)
    index = {s: i for i, s in enumerate(states)}
    edges = [(index[w[:-1]], index[w[1:]], w) for w in X.language(K + 1)]
    return states, edges


def _block_size(X: SFT, phi: Potential | None) -> int:
    r = phi.depth if phi is not None else 1
    return max(X.block_length, r - 1, 1)


def weighted_graph(X: SFT, phi: Potential, K: int | None = None):
    """States and the matrix of log-weights phi(window); -inf marks no edge."""
    X = _as_sft(X)
    if phi.p != X.p:
        raise DomainError("potential and shift use different alphabets")
    K = _block_size(X, phi) if K is None else K
    states, edges = block_graph(X, K)
    W = np.full((len(states), len(states)), -np.inf)
    for i, j, w in edges:
        v = phi(w)
        if not math.isfinite(v):
            raise DomainError(f"potential undefined on admissible word {w[:phi.depth]}")
        W[i, j] = v
    return states, W, K


def _power(A: np.ndarray) -> tuple[float, np.ndarray]:
    """Perron root and vector of an irreducible non-negative matrix."""
    n = A.shape[0]
    # a diagonal similarity brings badly scaled entries (large |q| in the
    # spectrum solver) to the size of the root, so the shift below keeps
    # relative precision
    with np.errstate(invalid="ignore"):  # the unused permutation output is NaN
        A, T = matrix_balance(A, permute=False, separate=True)
    scale = T[0]
    rows = A.sum(axis=1)
    shift = 0.5 * (rows.min() + rows.max())
    B = A + shift * np.eye(n)
    x = np.ones(n) / n
    converged_at = None
    spread = math.inf
    for it in range(POWER_MAX_ITER):
        y = B @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        x = y / y.sum()
        if converged_at is None and hi - lo <= POWER_TOL * hi:
            converged_at = it
        # keep polishing while the Collatz-Wielandt bracket still shrinks
        if converged_at is not None and (hi - lo >= spread or it - converged_at > 200):
            rho = 0.5 * (lo + hi) - shift
            if rho <= 0:
                raise NumericError("non-positive Perron root")
            x = x * scale
            return rho, x / x.sum()
        spread = min(spread, hi - lo)
    raise NumericError(f"power iteration did not converge in {POWER_MAX_ITER} iterations")


def perron_log(W: np.ndarray):
    """log spectral radius of exp(W), with right/left vectors and the carrier class."""
    finite = np.isfinite(W)
    if not finite.any():
        raise DomainError("the transition graph has no edges")
    c = W[finite].max()
    A = np.where(finite, np.exp(np.where(finite, W - c, 0.0)), 0.0)
    ncomp, labels = connected_components(finite, directed=True, connection="strong")
    best = None
    for comp in range(ncomp):
        idx = np.flatnonzero(labels == comp)
        sub = A[np.ix_(idx, idx)]
        if not (sub > 0).any():
            continue
        rho, right = _power(sub)
        if best is None or rho > best[0] * (1 + 1e-12):
            _, left = _power(sub.T)
            best = (rho, idx, right, left)
    if best is None:
        raise DomainError("the transition graph has no cycles")
    rho, idx, r_sub, l_sub = best
    right = np.zeros(W.shape[0])
    left = np.zeros(W.shape[0])
    right[idx] = r_sub
    left[idx] = l_sub
    reducible = ncomp > 1
    return math.log(rho) + c, right, left, idx, reducible


def transfer(X: SFT, phi: Potential) -> TransferResult:
    states, W, K = weighted_graph(X, phi)
    logrho, right, left, idx, reducible = perron_log(W)
    return TransferResult(logrho, states, W, right, left, idx, reducible, K)


def transfer_pressure(X: SFT, phi: Potential) -> float:
    """P_X(phi) = log of the spectral radius of [exp phi(u.last(v))]."""
    return transfer(X, phi).pressure


def equilibrium_measure(X: SFT, phi: Potential, result: TransferResult | None = None) -> MarkovMeasure:
    """The Markov measure attaining h + integral of phi = P(phi).

    Transitions P(u,v) = M(u,v) r(v) / (rho r(u)) on the carrier class.
    """
    res = transfer(X, phi) if result is None else result
    p, K = X.p, res.block
    idx = res.component
    W = res.log_weights[np.ix_(idx, idx)]
    r = res.right[idx]
    with np.errstate(invalid="ignore"):
        M = np.where(np.isfinite(W), np.exp(np.where(np.isfinite(W), W - res.pressure, 0.0)), 0.0)
    Psub = M * r[None, :] / r[:, None]
    Psub /= Psub.sum(axis=1, keepdims=True)
    pi_sub = stationary_vector(Psub)
    P = np.full((p,) * (K + 1), 1.0 / p)
    pi = np.zeros((p,) * K)
    sub_states = [res.states[i] for i in idx]
    pos = {s: n for n, s in enumerate(sub_states)}
    for a_i, u in enumerate(sub_states):
        row = np.zeros(p)
        for a in range(p):
            v = u[1:] + (a,)
            if v in pos:
                row[a] = Psub[a_i, pos[v]]
        P[u] = row / row.sum()
        pi[u] = pi_sub[a_i]
    return MarkovMeasure(p, K, P, pi)


# -- counting ----------------------------------------------------------------


def _completion_bonus(X: Subshift, phi: Potential, astate, tail: tuple, steps: int, memo: dict) -> float:
    """max over admissible continuations of the next ``steps`` window values."""
    if steps == 0:
        return 0.0
    key = (astate, tail, steps)
    if key in memo:
        return memo[key]
    best = -math.inf
    for a in range(X.p):
        s = X.advance(astate, a)
        if s is None:
            continue
        window = tail + (a,)
        val = phi(window) + _completion_bonus(X, phi, s, window[1:], steps - 1, memo)
        best = max(best, val)
    memo[key] = best
    return best


def _log_partition(X: Subshift, phi: Potential, n: int, budget: int) -> float:
    """log sum_{w in L_n} exp(sup_[w] S_n phi), exact for locally constant phi."""
    r = phi.depth
    if n < r:
        raise DomainError(f"n = {n} must be at least the potential depth {r}")
    layer = {(X.initial_state(), ()): 0.0}
    for _ in range(n):
        nxt: dict = {}
        for (astate, tail), logw in layer.items():
            for a in range(X.p):
                s = X.advance(astate, a)
                if s is None:
                    continue
                window = tail + (a,)
                if len(window) == r:
                    val = logw + phi(window)
                    tail2 = window[1:]
                else:
                    val, tail2 = logw, window
                key = (s, tail2)
                nxt[key] = np.logaddexp(nxt[key], val) if key in nxt else val
        if len(nxt) > budget:
            raise ResourceError(f"counting state space exceeds the budget of {budget}", budget=budget)
        layer = nxt
    memo: dict = {}
    terms = [logw + _completion_bonus(X, phi, s, tail, r - 1, memo) for (s, tail), logw in layer.items()]
    terms = [t for t in terms if t > -math.inf]
    if not terms:
        raise DomainError(f"L_{n} is empty")
    return float(logsumexp(terms))


def counting_pressure(X: Subshift, phi: Potential | None = None, n: int = 16, budget: int | None = None) -> PressureEstimate:
    """(1/n) log of the weighted count of L_n, with an extrapolated lower value.

    ``upper`` is a true upper bound (subadditivity).  ``lower`` is the
    Richardson value 2*Z(2n) - Z(n), which removes the 1/n defect; it is an
    estimate, not a certificate.
    """
    budget = DEFAULT_BUDGET if budget is None else budget
    phi = Potential.constant(0.0, X.p) if phi is None else phi
    z_n = _log_partition(X, phi, n, budget) / n
    z_2n = _log_partition(X, phi, 2 * n, budget) / (2 * n)
    lower = min(2 * z_2n - z_n, z_n)
    return PressureEstimate(lower, z_n, "counting", n, notes={"upper_2n": z_2n})


def cylinder_sup(X: Subshift | None, phi: Potential, w) -> float:
    """sup over x in [w] of S_|w| phi(x)."""
    if X is None:
        X = FullShift(phi.p)
    w = to_word(w, X.p)
    r = phi.depth
    state = X.initial_state()
    for a in w:
        state = X.advance(state, a)
        if state is None:
            raise DomainError(f"{w} is not admissible")
    if len(w) < r - 1:
        raise DomainError("cover words must be at least as long as the potential depth")
    inside = math.fsum(phi(w[i : i + r]) for i in range(len(w) - r + 1))
    steps = min(r - 1, len(w))
    tail = w[len(w) - (r - 1) :] if r > 1 else ()
    return inside + _completion_bonus(X, phi, state, tail, steps, {})


def cover_pressure_sum(cover, t: float, phi: Potential, X: Subshift | None = None) -> float:
    """sum over [w] in the cover of exp(-t|w| + sup_[w] S_|w| phi)."""
    total = [(-t * len(to_word(w)) + cylinder_sup(X, phi, w)) for w in cover]
    return float(math.fsum(math.exp(v) for v in total))


# -- Bowen equation and entropy ------------------------------------------------


def bowen_dimension(X: SFT, phi: Potential, tol: float = 1e-12) -> float:
    """Root s of P(-s phi) = 0 by bisection on [0, P(0)/min phi]."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    phi_min = phi.min_value(X)
    if phi_min <= 0:
        raise DomainError("Bowen dimension needs a strictly positive potential")
    h = transfer_pressure(X, Potential.constant(0.0, X.p))
    if h <= tol * phi_min:
        return 0.0
    lo, hi = 0.0, h / phi_min
    while True:
        mid = 0.5 * (lo + hi)
        f = transfer_pressure(X, phi * -mid)
        if abs(f) <= tol * phi_min or hi - lo <= 4 * np.finfo(float).eps * max(1.0, hi):
            return mid
        if f > 0:
            lo = mid
        else:
            hi = mid


def gap_series(S: GapSet, x: float) -> float:
    """sum_{n in S} x^-(n+1), summed in closed form for infinite S."""
    if S.kind == "finite":
        return math.fsum(x ** -(n + 1) for n in S.values)
    if S.kind == "arithmetic":
        return x ** -(S.start + 1) / (1.0 - x ** -S.step)
    return 1.0 / (x - 1.0) - math.fsum(x ** -(n + 1) for n in S.values)


def gap_series_root(S: GapSet, tol: float = 1e-15) -> float:
    """The x > 1 solving sum_{n in S} x^-(n+1) = 1 (x = 1 if none exceeds 1).

    An independent entropy oracle for S-gap shifts: log x = h_top.
    """
    lo, hi = 1.0, 2.0
    if S.kind == "finite" and len(S.values) <= 1:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap_series(S, mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def entropy(X: Subshift, n: int = 18, m: int = 10, budget: int | None = None):
    """h_top(X): exact for SFTs, otherwise a bracket.

    The bracket's lower end is the entropy of the inner SFT at level m
    (a sub-system, hence a certified lower bound) and its upper end is the
    counting bound at length n.  For S-gap shifts the gap-series root is
    attached as an independent oracle.
    """
    if isinstance(X, SFT):
        return transfer_pressure(X, Potential.constant(0.0, X.p))
    zero = Potential.constant(0.0, X.p)
    upper = counting_pressure(X, zero, n, budget).upper
    inner = inner_sft_approximation(X, m, budget)
    # the spectral radius is resolved to POWER_TOL; widen by that much so
    # rounding cannot push the lower end above the true value
    lower = transfer_pressure(inner, zero) - POWER_TOL
    oracle = None
    if isinstance(X, SGapShift):
        oracle = math.log(gap_series_root(X.gaps))
    return PressureEstimate(min(lower, upper), upper, "counting+inner-sft", n, oracle, {"m": m})
