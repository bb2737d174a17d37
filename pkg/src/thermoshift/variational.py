"""Conditional variational principles for Birkhoff level sets on SFTs.

The level-set pressure sup{h(mu) + int phi : int psi = alpha} is computed two
ways: through Legendre duality with the transfer pressure, and by direct
constrained search over Markov transition matrices.  The second route shares
no code with the first beyond the block graph, and serves as its oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from thermoshift.errors import DomainError, InfeasibleError
from thermoshift.measures import MarkovMeasure, Potential, integrate, markov_entropy
from thermoshift.pressure import (
    _block_size,
    block_graph,
    equilibrium_measure,
    transfer,
    transfer_pressure,
)
from thermoshift.shift_spaces import SFT, Subshift, inner_sft_approximation

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectrumPoint:
    alpha: float
    value: float
    q: float
    witness: MarkovMeasure | None
    boundary: bool = False
    approximation: int | None = None


@dataclass(frozen=True)
class SpectrumDomain:
    lower: float
    upper: float
    components: tuple = ()

    @property
    def degenerate(self) -> bool:
        return self.upper - self.lower <= 1e-12

    def __contains__(self, alpha: float) -> bool:
        return self.lower - 1e-12 <= alpha <= self.upper + 1e-12


@dataclass(frozen=True)
class IrregularResult:
    empty: bool
    value: float | None = None
    diagnostic: tuple = field(default_factory=tuple)


def _serve(X: Subshift, m: int) -> tuple[SFT, int | None]:
    if isinstance(X, SFT):
        return X, None
    return inner_sft_approximation(X, m), m


def _common_block(X: SFT, *pots: Potential) -> int:
    return max(_block_size(X, f) for f in pots)


def _edge_arrays(X: SFT, K: int, *pots: Potential):
    states, edges = block_graph(X, K)
    src = np.array([e[0] for e in edges])
    dst = np.array([e[1] for e in edges])
    vals = [np.array([f(e[2]) for e in edges]) for f in pots]
    return states, src, dst, vals


# -- spectrum domain: min/max mean cycle (Karp) ------------------------------


def _karp_min_mean(W: np.ndarray) -> float:
    """Minimum cycle mean of a strongly connected graph (inf = no edge)."""
    n = W.shape[0]
    D = np.full((n + 1, n), np.inf)
    D[0, 0] = 0.0
    for k in range(1, n + 1):
        D[k] = (D[k - 1][:, None] + W).min(axis=0)
    best = np.inf
    for v in range(n):
        if not np.isfinite(D[n, v]):
            continue
        ks = [k for k in range(n) if np.isfinite(D[k, v])]
        worst = max((D[n, v] - D[k, v]) / (n - k) for k in ks)
        best = min(best, worst)
    return float(best)


def spectrum_domain(X: Subshift, psi: Potential, m: int = 10) -> SpectrumDomain:
    """[min, max] of int psi over invariant measures = extreme cycle means."""
    from scipy.sparse.csgraph import connected_components

    Y, _ = _serve(X, m)
    K = _common_block(Y, psi)
    states, src, dst, (w,) = _edge_arrays(Y, K, psi)
    n = len(states)
    W = np.full((n, n), np.inf)
    W[src, dst] = w
    ncomp, labels = connected_components(np.isfinite(W), directed=True, connection="strong")
    comps = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        sub = W[np.ix_(idx, idx)]
        if not np.isfinite(sub).any():
            continue
        lo = _karp_min_mean(sub)
        hi = -_karp_min_mean(np.where(np.isfinite(sub), -sub, np.inf))
        comps.append((lo, hi))
    if not comps:
        raise DomainError("the shift carries no invariant measure")
    lo = min(c[0] for c in comps)
    hi = max(c[1] for c in comps)
    return SpectrumDomain(lo, hi, tuple(comps))


# -- Legendre route --------------------------------------------------------------


def _q_bracket(X: SFT, phi: Potential, gap: float) -> float:
    return (abs(transfer_pressure(X, phi)) + phi.sup_norm(X) + math.log(X.p)) / gap


def _level_at(X: SFT, phi: Potential, psi: Potential, q: float):
    res = transfer(X, phi + psi * q)
    mu = equilibrium_measure(X, phi + psi * q, res)
    return res.pressure, mu, integrate(psi, mu)


def spectrum_legendre(X: Subshift, phi: Potential, psi: Potential, alpha: float, m: int = 10) -> SpectrumPoint:
    """inf_q P(phi + q psi) - q alpha, with the equilibrium witness at the optimal q."""
    Y, level = _serve(X, m)
    dom = spectrum_domain(Y, psi)
    if alpha not in dom:
        raise DomainError(f"alpha = {alpha} lies outside the spectrum domain [{dom.lower}, {dom.upper}]")
    if dom.degenerate:
        raise DomainError(f"the spectrum domain [{dom.lower}, {dom.upper}] is a single point")
    gap = min(alpha - dom.lower, dom.upper - alpha)
    if gap <= BOUNDARY_TOL:
        return _boundary_point(Y, phi, psi, alpha, dom, level)

    def slope(q):
        return _level_at(Y, phi, psi, q)[2] - alpha

    Q = max(1.0, _q_bracket(Y, phi, gap))
    for _ in range(60):
        if slope(-Q) < 0 < slope(Q):
            break
        Q *= 2.0
    q = brentq(slope, -Q, Q, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    pressure, mu, level_value = _level_at(Y, phi, psi, q)
    value = markov_entropy(mu) + integrate(phi, mu)
    return SpectrumPoint(alpha, value, q, mu, False, level)


def _boundary_point(X: SFT, phi, psi, alpha, dom, level) -> SpectrumPoint:
    """One-sided limit of P(phi + q psi) - q alpha as q -> +-inf."""
    sign = 1.0 if alpha >= 0.5 * (dom.lower + dom.upper) else -1.0
    prev = math.inf
    q = sign
    value, mu = None, None
    for _ in range(40):
        pressure, mu, _ = _level_at(X, phi, psi, q)
        value = pressure - q * alpha
        if abs(value - prev) < 1e-10:
            break
        prev = value
        q *= 2.0
    return SpectrumPoint(alpha, value, q, mu, True, level)


# -- direct route ------------------------------------------------------------------


def _row_layout(n_states: int, src: np.ndarray):
    rows = [np.flatnonzero(src == u) for u in range(n_states)]
    if any(len(r) == 0 for r in rows):
        raise DomainError("every state needs an outgoing edge")
    return rows


def _simplex_grid(m: int, g: int) -> np.ndarray:
    """Interior points of the (m-1)-simplex on a resolution-g lattice."""
    if m == 1:
        return np.ones((1, 1))
    pts = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            pts.append(prefix + [remaining])
            return
        for c in range(1, remaining - slots + 2):
            rec(prefix + [c], remaining - c, slots - 1)

    rec([], g, m)
    return np.array(pts, dtype=float) / g


def _evaluate_batch(P_edges, src, dst, n, phi_e, psi_e):
    """Stationary vector, entropy, and integrals for a batch of edge laws."""
    B = P_edges.shape[0]
    M = np.zeros((B, n, n))
    np.add.at(M, (slice(None), src, dst), P_edges)
    A = np.transpose(M, (0, 2, 1)) - np.eye(n)[None]
    A[:, -1, :] = 1.0
    rhs = np.zeros((B, n))
    rhs[:, -1] = 1.0
    pi = np.linalg.solve(A, rhs[..., None])[..., 0]
    flow = pi[:, src] * P_edges
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P_edges > 0, P_edges * np.log(P_edges), 0.0)
    h = -(pi[:, src] * plogp).sum(axis=1)
    return h + flow @ phi_e, flow @ psi_e


def spectrum_direct(X: SFT, phi: Potential, psi: Potential, alpha: float, grid: int = 200) -> float:
    """Grid search over transition matrices, then a constrained local refinement."""
    if not isinstance(X, SFT):
        raise DomainError("spectrum_direct works on SFTs")
    if grid < 10:
        raise DomainError("grid must be at least 10")
    K = _common_block(X, phi, psi)
    states, src, dst, (phi_e, psi_e) = _edge_arrays(X, K, phi, psi)
    n = len(states)
    if n > 4:
        raise DomainError(f"direct search supports at most 4 states, got {n}")
    rows = _row_layout(n, src)
    free = [r for r in rows if len(r) > 1]
    dims = sum(len(r) - 1 for r in free)
    per_dim = grid if dims <= 2 else max(10, int(round(2e5 ** (1.0 / dims))))
    factors = [_simplex_grid(len(r), per_dim) for r in free]
    sizes = [len(f) for f in factors]
    total = int(np.prod(sizes)) if sizes else 1
    mesh = np.indices(sizes).reshape(len(sizes), -1).T if sizes else np.zeros((1, 0), dtype=int)
    P_edges = np.ones((total, len(src)))
    for col, (r, f) in enumerate(zip(free, factors)):
        P_edges[:, r] = f[mesh[:, col]]
    objective, level = _evaluate_batch(P_edges, src, dst, n, phi_e, psi_e)
    spread = max(float(psi_e.max() - psi_e.min()), 1e-12)
    feasible = np.abs(level - alpha) <= spread / per_dim
    if not feasible.any():
        raise InfeasibleError(f"no grid point has int psi within {spread / per_dim:g} of {alpha}")
    best = int(np.flatnonzero(feasible)[np.argmax(objective[feasible])])
    grid_value = float(objective[best])

    # refine: softmax logits per free row, equality constraint on int psi
    def unpack(z):
        Pe = np.ones(len(src))
        pos = 0
        for r in free:
            logits = z[pos : pos + len(r)]
            e = np.exp(logits - logits.max())
            Pe[r] = e / e.sum()
            pos += len(r)
        return Pe[None, :]

    z0 = np.concatenate([np.log(P_edges[best, r]) for r in free]) if free else np.zeros(0)
    if not free:
        return grid_value
    res = minimize(
        lambda z: -_evaluate_batch(unpack(z), src, dst, n, phi_e, psi_e)[0][0],
        z0,
        method="SLSQP",
        constraints=[{"type": "eq", "fun": lambda z: _evaluate_batch(unpack(z), src, dst, n, phi_e, psi_e)[1][0] - alpha}],
        options={"ftol": 1e-14, "maxiter": 500},
    )
    obj, lev = _evaluate_batch(unpack(res.x), src, dst, n, phi_e, psi_e)
    if abs(lev[0] - alpha) <= 1e-9 and np.isfinite(obj[0]):
        return float(max(obj[0], grid_value if abs(level[best] - alpha) <= 1e-9 else -np.inf))
    return grid_value


# -- dimension spectrum and irregular set ----------------------------------


def dimension_spectrum(X: Subshift, phi: Potential, psi: Potential, alpha: float, tol: float = 1e-10, m: int = 10) -> float:
    """Root s of sup{h - s int phi : int psi = alpha} = 0, by bisection."""
    Y, _ = _serve(X, m)
    phi_min = phi.min_value(Y)
    if phi_min <= 0:
        raise DomainError("dimension spectra need a strictly positive potential")

    def F(s):
        return spectrum_legendre(Y, phi * -s, psi, alpha).value

    top = F(0.0)
    if top <= tol * phi_min:
        return 0.0
    lo, hi = 0.0, top / phi_min
    while True:
        mid = 0.5 * (lo + hi)
        f = F(mid)
        if abs(f) <= tol * phi_min or hi - lo <= 4 * np.finfo(float).eps * max(1.0, hi):
            return mid
        if f > 0:
            lo = mid
        else:
            hi = mid


def alpha_grid(X: SFT, phi: Potential, psi: Potential, points: int = 41) -> np.ndarray:
    """Uniform interior grid of the spectrum domain with the equilibrium level
    of phi swapped in for its nearest node."""
    dom = spectrum_domain(X, psi)
    alphas = np.linspace(dom.lower, dom.upper, points + 2)[1:-1]
    star = integrate(psi, equilibrium_measure(X, phi))
    if dom.lower + BOUNDARY_TOL < star < dom.upper - BOUNDARY_TOL:
        alphas[np.argmin(np.abs(alphas - star))] = star
    return np.sort(alphas)


def spectrum_grid(X: Subshift, phi: Potential, psi: Potential, alphas) -> list[SpectrumPoint]:
    return [spectrum_legendre(X, phi, psi, float(a)) for a in alphas]


def irregular_pressure(X: Subshift, phi: Potential, psi: Potential, levels: int = 5, nu_shift: float = 0.25, m: int = 10) -> IrregularResult:
    """Either the irregular set is empty, or it carries the full pressure.

    The diagnostic mixes the equilibrium state mu of phi with a second
    ergodic measure nu (the equilibrium state of phi + q psi for a small q,
    chosen so that int psi differs), and reports the infimum of h + int phi
    over the segment between mu and p_n nu + (1 - p_n) mu for p_n = 2^-n.
    Entropy is affine on invariant measures, so the segment values are
    exact convex combinations.
    """
    Y, _ = _serve(X, m)
    dom = spectrum_domain(Y, psi)
    if dom.degenerate:
        return IrregularResult(True)
    P = transfer_pressure(Y, phi)
    mu = equilibrium_measure(Y, phi)
    f_mu = markov_entropy(mu) + integrate(phi, mu)
    level_mu = integrate(psi, mu)
    q = nu_shift / max(psi.sup_norm(Y), 1e-12)
    for _ in range(60):
        nu = equilibrium_measure(Y, phi + psi * q)
        if abs(integrate(psi, nu) - level_mu) > 1e-9:
            break
        q *= 2.0
    f_nu = markov_entropy(nu) + integrate(phi, nu)
    ts = np.linspace(0.0, 1.0, 101)
    diagnostic = []
    for n in range(1, levels + 1):
        p_n = 2.0**-n
        f_nu_n = p_n * f_nu + (1 - p_n) * f_mu
        inf_val = float(np.min(ts * f_nu_n + (1 - ts) * f_mu))
        diagnostic.append((n, p_n, inf_val))
    return IrregularResult(False, P, tuple(diagnostic))
