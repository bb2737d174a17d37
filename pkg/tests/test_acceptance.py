"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

import io
import itertools
import math
import random
from contextlib import redirect_stdout

import numpy as np
import pytest

from thermoshift import config
from thermoshift.cli import main
from thermoshift.edit_metric import ball_bound_report, edit_distance, empirical_mistake_function
from thermoshift.measures import Potential, bernoulli_binary, integrate, markov_entropy, random_markov_measure
from thermoshift.moran import generate_point, katok_count_check, make_schedule, track_convergence
from thermoshift.pressure import (
    bowen_dimension,
    counting_pressure,
    entropy,
    equilibrium_measure,
    gap_series_root,
    transfer_pressure,
)
from thermoshift.shift_spaces import SFT, BetaShift, FullShift, GapSet, SGapShift, all_words, inner_sft_approximation
from thermoshift.variational import alpha_grid, dimension_spectrum, irregular_pressure, spectrum_direct, spectrum_legendre
from thermoshift.verify import data_path

FULL = FullShift(2)
GOLDEN = SFT(2, ("11",))
LOG_GOLDEN = math.log((1 + math.sqrt(5)) / 2)
ZERO = Potential.constant(0.0)
ONE = Potential.indicator("1")
LOG2 = Potential.constant(math.log(2))


def H(a):
    return -a * math.log(a) - (1 - a) * math.log(1 - a)


@pytest.fixture
def report(capsys):
    def emit(label, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {label}] {'PASS' if passed else 'FAIL'}: {detail}")
        assert passed, detail

    return emit


def test_criterion_01_entropy_exactness(report):
    errs = [abs(entropy(FullShift(p)) - math.log(p)) for p in (2, 3, 5)]
    err_g = abs(entropy(GOLDEN) - LOG_GOLDEN)
    fib = {1: 1, 2: 1}
    for k in range(3, 23):
        fib[k] = fib[k - 1] + fib[k - 2]
    counts = all(GOLDEN.count(n) == fib[n + 2] for n in range(21))
    ok = max(errs) <= 1e-10 and err_g <= 1e-9 and counts
    report(1, ok, f"full-shift err {max(errs):.2e}, golden err {err_g:.2e}, |L_n| = F_(n+2) for n <= 20: {counts}")


def test_criterion_02_language_identity_literal(report):
    sg, sft = SGapShift(GapSet.finite([0, 1])), SFT(2, ("11",))
    first_diff = next((n for n in range(13) if set(sg.language(n)) != set(sft.language(n))), None)
    beta = all(BetaShift("2").language(n) == FULL.language(n) for n in range(13))
    ok = first_diff is None and beta
    detail = f"SGap{{0,1}} vs Sft(11) literal set equality first differs at n = {first_diff}"
    if first_diff is not None:
        only = sorted(set(sg.language(first_diff)) - set(sft.language(first_diff)))
        detail += f" (e.g. {''.join(map(str, only[0]))} only in SGap{{0,1}})"
    report(2, ok, detail + f"; Beta(2) = Full(2) for n <= 12: {beta}")


def test_criterion_02_language_identity_relabelled(report):
    sg, sft = SGapShift(GapSet.finite([0, 1])), SFT(2, ("11",))
    flip = all({tuple(1 - a for a in w) for w in sg.language(n)} == set(sft.language(n)) for n in range(13))
    beta = all(BetaShift("2").language(n) == FULL.language(n) for n in range(13))
    report("2 (relabelled 0<->1)", flip and beta, f"SGap{{0,1}} = Sft(11) after swapping symbols: {flip}; Beta(2) = Full(2): {beta}")


def test_criterion_03_sgap_series(report):
    parts, ok = [], True
    for S in ([0, 1], [1, 2], [0, 2, 4]):
        est = entropy(SGapShift(GapSet.finite(S)), n=18)
        root = math.log(gap_series_root(GapSet.finite(S)))
        good = est.lower <= root <= est.upper and est.width <= 0.05
        ok &= good
        parts.append(f"S={S}: [{est.lower:.5f}, {est.upper:.5f}] root {root:.5f}")
    report(3, ok, "; ".join(parts))


def test_criterion_04_beta_convergence(report):
    parts, ok = [], True
    for b in ("1.5", "golden", "2.5"):
        X = BetaShift(b)
        zero = Potential.constant(0.0, X.p)
        upper = counting_pressure(X, zero, 18).upper
        lower = transfer_pressure(inner_sft_approximation(X, 10), zero)
        target = math.log(X.value)
        good = lower - 1e-12 <= target <= upper and upper - lower <= 0.06
        ok &= good
        parts.append(f"beta={b}: [{lower:.5f}, {upper:.5f}] log beta {target:.5f}")
    report(4, ok, "; ".join(parts))


def test_criterion_05_pressure_properties(report):
    rng = np.random.default_rng(2024)
    shift_err = 0.0
    for _ in range(20):
        phi = Potential.random(2, 2, rng)
        c = float(rng.uniform(-3, 3))
        shift_err = max(shift_err, abs(transfer_pressure(GOLDEN, phi + c) - transfer_pressure(GOLDEN, phi) - c))
    phi = Potential.random(2, 2, rng)
    P = transfer_pressure(GOLDEN, phi)
    excess = max(markov_entropy(mu) + integrate(phi, mu) - P for mu in (random_markov_measure(GOLDEN, 1 + i % 3, rng) for i in range(100)))
    eq = equilibrium_measure(GOLDEN, phi)
    gap = abs(markov_entropy(eq) + integrate(phi, eq) - P)
    ok = shift_err <= 1e-10 and excess <= 1e-8 and gap <= 1e-6
    report(5, ok, f"shift identity err {shift_err:.2e}, max h+int phi-P over 100 measures {excess:.3e}, equilibrium gap {gap:.2e}")


def test_criterion_06_conditional_variational(report):
    err = max(abs(spectrum_legendre(FULL, ZERO, ONE, a / 10).value - H(a / 10)) for a in range(1, 10))
    direct = 0.0
    for X, alphas in ((FULL, (0.2, 0.35, 0.5, 0.65, 0.8)), (GOLDEN, (0.1, 0.2, 0.25, 0.3, 0.4))):
        for a in alphas:
            direct = max(direct, abs(spectrum_direct(X, ZERO, ONE, a) - spectrum_legendre(X, ZERO, ONE, a).value))
    report(6, err <= 1e-6 and direct <= 1e-3, f"Legendre vs H(alpha) {err:.2e}, direct vs Legendre {direct:.2e}")


def test_criterion_07_envelope(report):
    rng = np.random.default_rng(7)
    errs = []
    for _ in range(3):
        phi, psi = Potential.random(2, 1, rng), Potential.random(2, 1, rng)
        best = max(spectrum_legendre(FULL, phi, psi, float(a)).value for a in alpha_grid(FULL, phi, psi, 41))
        errs.append(abs(best - transfer_pressure(FULL, phi)))
    report(7, max(errs) <= 1e-6, f"max over 41-point grid vs pressure: {', '.join(f'{e:.2e}' for e in errs)}")


def test_criterion_08_bowen(report):
    e1 = abs(bowen_dimension(FULL, LOG2) - 1)
    e2 = abs(bowen_dimension(GOLDEN, LOG2) - LOG_GOLDEN / math.log(2))
    e3 = max(abs(dimension_spectrum(FULL, LOG2, ONE, a) - H(a) / math.log(2)) for a in (0.25, 0.5, 0.75))
    report(8, e1 <= 1e-10 and e2 <= 1e-8 and e3 <= 1e-6, f"Full(2) {e1:.2e}, golden {e2:.2e}, spectrum {e3:.2e}")


def test_criterion_09_irregular(report):
    parts, ok = [], True
    for name, X in (("Full(2)", FULL), ("golden", GOLDEN)):
        res = irregular_pressure(X, ZERO, ONE)
        P = transfer_pressure(X, ZERO)
        n5 = res.diagnostic[4]
        good = not res.empty and abs(res.value - P) <= 1e-12 and n5[1] == 2.0**-5 and n5[2] > P - 1e-3
        ok &= good
        parts.append(f"{name}: value {res.value:.9f}, inf at n=5 {n5[2]:.9f}")
    empty = irregular_pressure(FULL, ZERO, Potential.constant(0.4)).empty
    report(9, ok and empty, "; ".join(parts) + f"; constant psi gives empty: {empty}")


def edit_search(v, w, p=2):
    """Exhaustive breadth-first search over edit sequences applied to v."""
    frontier, seen = {v}, {v}
    d = 0
    while w not in frontier:
        nxt = set()
        for u in frontier:
            for i in range(len(u) + 1):
                for a in range(p):
                    nxt.add(u[:i] + (a,) + u[i:])
            for i in range(len(u)):
                nxt.add(u[:i] + u[i + 1 :])
                for a in range(p):
                    nxt.add(u[:i] + (a,) + u[i + 1 :])
        frontier = nxt - seen
        seen |= frontier
        d += 1
    return d


def test_criterion_10_edit_metric(report):
    words = [w for n in range(6) for w in all_words(2, n)]
    D = {(v, w): edit_distance(v, w) for v in words for w in words}
    axioms = all(D[v, w] == D[w, v] and (D[v, w] == 0) == (v == w) and D[v, w] >= 0 for v, w in D)
    tri = all(D[u, w] <= D[u, v] + D[v, w] for u, v, w in itertools.product(words, repeat=3))
    rng = random.Random(10)
    pairs = [tuple(tuple(rng.randrange(2) for _ in range(rng.randrange(7))) for _ in range(2)) for _ in range(500)]
    agree = all(edit_distance(v, w) == edit_search(v, w) for v, w in pairs)
    report(10, axioms and tri and agree, f"{len(words)} words, {len(D)} pairs: axioms {axioms}, triangle {tri}; DP = search on 500 pairs: {agree}")


def test_criterion_11_ball_bound(report):
    C, cases = 1.0, 0
    for X in (FULL, GOLDEN):
        for n in range(1, 11):
            for delta in (0.1, 0.2):
                C = max(C, ball_bound_report(X, n, delta).C_fit)
                cases += 1
    report(11, C <= 6, f"single constant C = {C:.4g} covers {cases} cases")


def test_criterion_12_katok(report):
    reps = [katok_count_check(FULL, bernoulli_binary(0.5), 0.5, 0.1, n) for n in range(12, 19)]
    worst = min(r.count / r.threshold for r in reps)
    report(12, all(r.passed for r in reps), f"n = 12..18 all pass: {all(r.passed for r in reps)}, least count/threshold {worst:.3g}")


def test_criterion_13_moran(report):
    X, F = config.load_shift(data_path("full2.json"))
    g = empirical_mistake_function(X, F, 18)
    it = config.load_itinerary(X, data_path("itinerary_half.json"))
    sched = make_schedule(it, g, 0.2, 100_000)
    pt = generate_point(X, it, sched, F, seed=0)
    rep = track_convergence(pt.prefix, it, sched, 4, pt)
    seg_ok = all(abs(s.length - s.n) <= g(s.n) for s in pt.segments)
    h = markov_entropy(it.measures[0])
    rate_ok = pt.counting_rate >= h - 0.15
    it2 = config.load_itinerary(X, data_path("itinerary_two.json"))
    sched2 = make_schedule(it2, g, 0.2, 100_000)
    pt2 = generate_point(X, it2, sched2, F, seed=0)
    rep2 = track_convergence(pt2.prefix, it2, sched2, 4, pt2)
    both = max(rep2.summary[:2]) <= 0.1
    ok = rep.final() <= 0.05 and seg_ok and both and rate_ok
    report(
        13,
        ok,
        f"final D {rep.final():.4f}, |l_j - n_j| <= g(n_j): {seg_ok}, "
        f"two-target late minima {rep2.summary[0]:.4f}/{rep2.summary[1]:.4f}, counting rate {pt.counting_rate:.4f} vs h - 0.15 = {h - 0.15:.4f}",
    )


def test_criterion_14_determinism(report):
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        with redirect_stdout(buf):
            code = main(["verify", "--seed", "3"])
        outs.append((code, buf.getvalue()))
    same = outs[0] == outs[1]
    report(14, same and outs[0][0] == 0, f"byte-identical verify output: {same}, exit code {outs[0][0]}")
