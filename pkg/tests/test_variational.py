import math

import numpy as np
import pytest

from thermoshift.errors import DomainError
from thermoshift.measures import Potential, integrate, markov_entropy
from thermoshift.pressure import bowen_dimension, transfer_pressure
from thermoshift.shift_spaces import SFT, FullShift
from thermoshift.variational import (
    alpha_grid,
    dimension_spectrum,
    irregular_pressure,
    spectrum_direct,
    spectrum_domain,
    spectrum_legendre,
)

GOLDEN = SFT(2, ("11",))
LOG_GOLDEN = math.log((1 + math.sqrt(5)) / 2)
ZERO = Potential.constant(0.0)
ONE = Potential.indicator("1")
LOG2 = Potential.constant(math.log(2))


def H(a):
    return -a * math.log(a) - (1 - a) * math.log(1 - a)


def test_domain_examples():
    d = spectrum_domain(FullShift(2), ONE)
    assert (d.lower, d.upper) == pytest.approx((0.0, 1.0), abs=1e-14)
    d = spectrum_domain(GOLDEN, ONE)
    assert (d.lower, d.upper) == pytest.approx((0.0, 0.5), abs=1e-14)
    d = spectrum_domain(FullShift(2), Potential.constant(0.7))
    assert d.degenerate and d.lower == pytest.approx(0.7)


def test_domain_matches_periodic_orbit_averages():
    rng = np.random.default_rng(0)
    psi = Potential.random(2, 2, rng)
    d = spectrum_domain(GOLDEN, psi)
    # cycles of length <= 8 in the golden graph realise both extremes
    from thermoshift.measures import periodic_birkhoff_average

    avgs = [periodic_birkhoff_average(psi, w) for n in range(1, 9) for w in GOLDEN.language(n) if GOLDEN.contains(w + w)]
    assert min(avgs) == pytest.approx(d.lower, abs=1e-12)
    assert max(avgs) == pytest.approx(d.upper, abs=1e-12)


def test_legendre_examples():
    pt = spectrum_legendre(FullShift(2), ZERO, ONE, 0.5)
    assert pt.value == pytest.approx(math.log(2), abs=1e-10)
    assert pt.witness.cylinder("1") == pytest.approx(0.5, abs=1e-9)
    assert spectrum_legendre(FullShift(2), ZERO, ONE, 0.25).value == pytest.approx(0.562335, abs=1e-6)
    assert spectrum_legendre(FullShift(2), ONE, ONE, 0.25).value == pytest.approx(H(0.25) + 0.25, abs=1e-8)


def test_legendre_matches_binary_entropy():
    for k in range(1, 10):
        assert spectrum_legendre(FullShift(2), ZERO, ONE, k / 10).value == pytest.approx(H(k / 10), abs=1e-6)


def test_legendre_outside_domain():
    with pytest.raises(DomainError, match=r"\[0.0, 0.5\]"):
        spectrum_legendre(GOLDEN, ZERO, ONE, 0.7)


def test_direct_route_examples():
    assert spectrum_direct(FullShift(2), ZERO, ONE, 0.5) == pytest.approx(math.log(2), abs=1e-4)
    leg = spectrum_legendre(GOLDEN, ZERO, ONE, 0.25).value
    assert spectrum_direct(GOLDEN, ZERO, ONE, 0.25) == pytest.approx(leg, abs=1e-3)


def test_witness_feasibility():
    rng = np.random.default_rng(1)
    phi, psi = Potential.random(2, 2, rng), Potential.random(2, 2, rng)
    dom = spectrum_domain(GOLDEN, psi)
    for a in np.linspace(dom.lower, dom.upper, 9)[1:-1]:
        pt = spectrum_legendre(GOLDEN, phi, psi, float(a))
        assert abs(integrate(psi, pt.witness) - a) <= 1e-6
        assert pt.value == pytest.approx(markov_entropy(pt.witness) + integrate(phi, pt.witness), abs=1e-6)
        assert pt.witness.cylinder("11") == 0


def test_spectrum_is_concave_and_below_pressure():
    rng = np.random.default_rng(2)
    phi, psi = Potential.random(2, 2, rng), Potential.random(2, 2, rng)
    alphas = alpha_grid(GOLDEN, phi, psi)
    vals = np.array([spectrum_legendre(GOLDEN, phi, psi, float(a)).value for a in alphas])
    P = transfer_pressure(GOLDEN, phi)
    assert np.all(vals <= P + 1e-9)
    # concavity on the grid: chords lie below the graph
    for i in range(1, len(alphas) - 1):
        a0, a1, a2 = alphas[i - 1], alphas[i], alphas[i + 1]
        chord = vals[i - 1] + (vals[i + 1] - vals[i - 1]) * (a1 - a0) / (a2 - a0)
        assert vals[i] >= chord - 1e-8


def test_envelope_recovers_pressure():
    rng = np.random.default_rng(3)
    for _ in range(3):
        phi, psi = Potential.random(2, 1, rng), Potential.random(2, 1, rng)
        best = max(spectrum_legendre(FullShift(2), phi, psi, float(a)).value for a in alpha_grid(FullShift(2), phi, psi))
        assert best == pytest.approx(transfer_pressure(FullShift(2), phi), abs=1e-6)


def test_dimension_examples():
    assert dimension_spectrum(FullShift(2), LOG2, ONE, 0.5) == pytest.approx(1.0, abs=1e-8)
    assert dimension_spectrum(FullShift(2), LOG2, ONE, 0.25) == pytest.approx(0.811278, abs=1e-6)
    c = 1.7
    for a in (0.2, 0.6):
        assert dimension_spectrum(FullShift(2), Potential.constant(c), ONE, a) == pytest.approx(H(a) / c, abs=1e-8)


def test_dimension_spectrum_below_bowen_dimension():
    rng = np.random.default_rng(4)
    phi = Potential(2, 2, rng.uniform(0.5, 2.0, size=(2, 2)))
    top = bowen_dimension(GOLDEN, phi)
    for a in (0.1, 0.25, 0.4):
        assert dimension_spectrum(GOLDEN, phi, ONE, a) <= top + 1e-9


def test_irregular_examples():
    assert irregular_pressure(FullShift(2), ZERO, ZERO).empty
    res = irregular_pressure(FullShift(2), ZERO, ONE)
    assert not res.empty and res.value == pytest.approx(math.log(2), abs=1e-12)
    diag = [v for _, _, v in res.diagnostic]
    assert all(b >= a for a, b in zip(diag, diag[1:]))
    assert diag[-1] > math.log(2) - 1e-3
    g = irregular_pressure(GOLDEN, ZERO, ONE)
    assert g.value == pytest.approx(LOG_GOLDEN, abs=1e-12)
    assert g.diagnostic[4][2] > LOG_GOLDEN - 1e-3
