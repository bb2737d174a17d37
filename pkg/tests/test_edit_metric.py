import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermoshift.edit_metric import (
    GoodSet,
    MistakeFunction,
    ball_bound_report,
    birkhoff_discrepancy_bound,
    check_free_concatenation,
    check_w_specification,
    distribution_discrepancy_bound,
    edit_ball,
    edit_distance,
    empirical_mistake_function,
    glue,
    log_ball_bound,
    nearest_in,
)
from thermoshift.errors import DomainError, NotFoundError, ResourceError
from thermoshift.measures import Potential, index_capacity, periodic_birkhoff_average, periodic_empirical_measure, weak_star_distance
from thermoshift.shift_spaces import SFT, FullShift, GapSet, SGapShift, all_words, to_word

GOLDEN = SFT(2, ("11",))


def edit_search(v, w, p=2, cap=6):
    """Breadth-first search over single edits applied to v (independent of the DP)."""
    v, w = to_word(v), to_word(w)
    frontier, seen = {v}, {v}
    for d in range(cap + 1):
        if w in frontier:
            return d
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
    raise AssertionError("cap too small")


def test_edit_distance_examples():
    assert edit_distance("0110", "0110") == 0
    assert edit_distance("000", "") == 3
    assert edit_distance("0110", "0101") == 2
    assert edit_search("0110", "0101") == 2


def test_dp_matches_edit_search_on_random_pairs():
    rng = random.Random(7)
    for _ in range(300):
        v = tuple(rng.randrange(2) for _ in range(rng.randrange(7)))
        w = tuple(rng.randrange(2) for _ in range(rng.randrange(7)))
        assert edit_distance(v, w) == edit_search(v, w)


def test_metric_axioms_exhaustive_to_length_4():
    words = [w for n in range(5) for w in all_words(2, n)]
    D = {(v, w): edit_distance(v, w) for v in words for w in words}
    for (v, w), d in D.items():
        assert d == D[w, v]
        assert (d == 0) == (v == w)
        assert d >= abs(len(v) - len(w))
    for u, v, w in itertools.product(words, repeat=3):
        assert D[u, w] <= D[u, v] + D[v, w]


@settings(max_examples=300, deadline=None)
@given(*[st.lists(st.integers(0, 1), max_size=6) for _ in range(4)])
def test_concatenation_subadditive(u, v, u2, v2):
    assert edit_distance(u + v, u2 + v2) <= edit_distance(u, u2) + edit_distance(v, v2)


def test_edit_ball_examples():
    assert edit_ball("01", 0, FullShift(2)) == {(0, 1)}
    assert edit_ball("0", 1, FullShift(2)) == {to_word(w) for w in ["", "0", "1", "00", "01", "10"]}
    ball = edit_ball("11", 1, GOLDEN)
    expected = {w for n in range(4) for w in GOLDEN.language(n) if edit_distance(w, "11") <= 1}
    assert ball == expected
    assert to_word("11") not in ball


def test_edit_ball_matches_brute_force():
    for w in ["0101", "1001", "00"]:
        for r in (1, 2):
            expected = {u for n in range(len(w) + r + 1) for u in GOLDEN.language(n) if edit_distance(u, w) <= r}
            assert edit_ball(w, r, GOLDEN) == expected


def test_edit_ball_budget():
    with pytest.raises(ResourceError):
        edit_ball("0101010101", 3, FullShift(2), budget=500)
    with pytest.raises(DomainError):
        edit_ball("01", -1, FullShift(2))


def test_ball_bound_report():
    rep = ball_bound_report(FullShift(2), 6, 1 / 6)
    exhaustive = max(len(edit_ball(w, 1, FullShift(2))) for w in all_words(2, 6))
    assert rep.count == exhaustive
    assert rep.C_fit <= 4
    assert rep.count <= rep.bound * (1 + 1e-12)
    small = ball_bound_report(FullShift(2), 4, 0.2)
    assert small.radius == 0 and small.count == 1
    g = ball_bound_report(GOLDEN, 8, 0.25)
    assert math.isfinite(g.C_fit) and g.count <= math.exp(log_ball_bound(8, 0.25, g.C_fit)) * (1 + 1e-9)


def test_fitted_constant_is_least():
    rep = ball_bound_report(FullShift(2), 10, 0.3)
    if rep.C_fit > 1:
        assert math.exp(log_ball_bound(10, 0.3, rep.C_fit * (1 - 1e-6))) < rep.count


def test_w_specification_examples():
    whole = check_w_specification(GoodSet(FullShift(2)), 0, 5)
    assert whole.holds and whole.max_gap == 0
    ends0 = GoodSet(GOLDEN, "ends-with", "0")
    assert check_w_specification(ends0, 0, 5).holds
    fail = check_w_specification(GoodSet(GOLDEN), 0, 5)
    assert not fail.holds and fail.first_failure == ((1,), (1,))
    fixed = check_w_specification(GoodSet(GOLDEN), 1, 5)
    assert fixed.holds and fixed.max_gap == 1


def test_free_concatenation_examples():
    assert check_free_concatenation(GoodSet(FullShift(2)), 5) == (True, None)
    assert check_free_concatenation(GoodSet(GOLDEN, "ends-with", "0"), 5) == (True, None)
    assert check_free_concatenation(GoodSet(GOLDEN), 5) == (False, ((1,), (1,)))


def brute_nearest(w, G, max_len):
    cands = [u for n in range(max_len + 1) for u in G.X.language(n) if G.contains(u)]
    best = min(edit_distance(u, w) for u in cands)
    return min((u for u in cands if edit_distance(u, w) == best), key=lambda u: (len(u), u)), best


def test_nearest_in_examples():
    E = GoodSet(GOLDEN, "ends-with", "0")
    assert nearest_in("0100", E) == ((0, 1, 0, 0), 0)
    assert nearest_in("11", E) == ((1, 0), 1)
    assert nearest_in("11", E) == brute_nearest("11", E, 3)
    assert nearest_in("111", E) == brute_nearest("111", E, 5)
    assert nearest_in("111", E) == ((1, 0), 2)


def test_nearest_in_matches_brute_force():
    B = GoodSet(SGapShift(GapSet.finite([0, 2])), "begins-and-ends-with", "1")
    for w in B.X.language(5):
        assert nearest_in(w, B) == brute_nearest(w, B, 8)


def test_nearest_in_not_found():
    G = GoodSet(FullShift(2), "explicit", words=frozenset(["0000000000"]))
    with pytest.raises(NotFoundError):
        nearest_in("1", G)


def test_mistake_function_examples():
    assert empirical_mistake_function(FullShift(2), GoodSet(FullShift(2)), 6).values == (0,) * 6
    g = empirical_mistake_function(GOLDEN, GoodSet(GOLDEN, "ends-with", "0"), 8)
    assert max(g.values) <= 1
    S = SGapShift(GapSet.finite([0, 2]))
    B = GoodSet(S, "begins-and-ends-with", "1")
    g2 = empirical_mistake_function(S, B, 8)
    brute = [max(brute_nearest(w, B, n + 4)[1] for w in S.language(n)) for n in range(1, 9)]
    assert g2.raw == tuple(brute)
    assert list(g2.values) == list(np.maximum.accumulate(brute))
    ratios = [r for _, _, r in g2.table()]
    assert ratios[-1] < ratios[0]


def test_mistake_function_must_be_monotone():
    with pytest.raises(DomainError):
        MistakeFunction((1, 0))
    g = MistakeFunction.from_callable(lambda n: math.ceil(math.sqrt(n)), 10)
    assert g(16) == 4 and g(3) == 2


def test_glue_examples():
    word, lengths = glue(["0110", "10"], GoodSet(FullShift(2)))
    assert word == to_word("011010") and lengths == [4, 2]
    E = GoodSet(GOLDEN, "ends-with", "0")
    assert glue(["11", "11"], E) == (to_word("1010"), [2, 2])
    assert glue(["0100"], E) == (to_word("0100"), [4])


def test_glue_output_is_admissible():
    E = GoodSet(GOLDEN, "ends-with", "0")
    g = empirical_mistake_function(GOLDEN, E, 10)
    rng = np.random.default_rng(3)
    words = [GOLDEN.language(n)[rng.integers(GOLDEN.count(n))] for n in rng.integers(1, 10, size=30)]
    glued, lengths = glue(words, E, g)
    assert GOLDEN.contains(glued)
    assert all(abs(l - len(w)) <= g(len(w)) for l, w in zip(lengths, words))


def _pairs_up_to(L, k_max):
    words = [w for n in range(1, L + 1) for w in all_words(2, n)]
    for v in words:
        for w in words:
            k = edit_distance(v, w)
            if 1 <= k <= k_max:
                yield v, w, k


@pytest.mark.parametrize("r", [1, 2])
def test_birkhoff_discrepancy_bound_holds_exhaustively(r):
    phi = Potential.random(2, r, np.random.default_rng(r), scale=1.0)
    norm = phi.sup_norm()
    avg = {}
    worst = 0.0
    for v, w, k in _pairs_up_to(7, 2):
        for u in (v, w):
            if u not in avg:
                avg[u] = periodic_birkhoff_average(phi, u)
        diff = abs(avg[v] - avg[w])
        bound = birkhoff_discrepancy_bound(k, r, norm, min(len(v), len(w)))
        assert diff <= bound + 1e-12
        worst = max(worst, diff / bound)
    assert worst > 0.2  # the bound is not vacuous on this range


def test_distribution_discrepancy_bound_holds_exhaustively():
    K = index_capacity(2, 3)
    emp = {}
    for v, w, k in _pairs_up_to(7, 2):
        for u in (v, w):
            if u not in emp:
                emp[u] = periodic_empirical_measure(u, 3, 2)
        d, _ = weak_star_distance(emp[v], emp[w], K)
        assert d <= distribution_discrepancy_bound(k, 2, K, min(len(v), len(w))) + 1e-12


def test_discrepancy_bounds_vanish_for_sublinear_edits():
    vals = [birkhoff_discrepancy_bound(int(math.sqrt(n)), 2, 1.0, n) for n in (10, 100, 10_000, 10**6)]
    assert all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-2
    vals = [distribution_discrepancy_bound(int(math.sqrt(n)), 2, 14, n) for n in (10, 100, 10_000, 10**6)]
    assert all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-2
