import math

import numpy as np
import pytest

from qsppricer import (
    ChebyshevPolynomial,
    ConvergenceError,
    NormViolationError,
    PhaseFactors,
    find_phases,
    su2_eval,
    verify_phases,
)


def _wx_product(phases, a):
    """Independent 2x2 oracle: the +phi and -phi sequence average."""
    s = math.sqrt(max(0.0, 1.0 - a * a))
    w = np.array([[a, 1j * s], [1j * s, a]])
    out = 0.0
    for sign in (1.0, -1.0):
        m = np.eye(2, dtype=complex)
        for phi in phases:
            e = np.diag([np.exp(1j * sign * phi), np.exp(-1j * sign * phi)])
            m = m @ e @ w
        out += m[0, 0] / 2.0
    return out


def test_su2_single_phase_is_identity_polynomial():
    pf = PhaseFactors((0.0,))
    assert abs(su2_eval(pf, 0.3)) == pytest.approx(0.3, abs=1e-15)


def test_su2_all_zero_phases_realize_chebyshev():
    for d in (1, 2, 3, 5, 8):
        pf = PhaseFactors((0.0,) * d)
        for theta in np.linspace(0.01, 3.13, 100):
            a = math.cos(theta)
            assert su2_eval(pf, a).real == pytest.approx(math.cos(d * theta), abs=1e-12)


def test_su2_at_one_with_zero_phases():
    # W(1) is the identity, so the bare product is a pure phase; with zero
    # phases the averaged value is exactly 1
    for d in (1, 4, 9):
        assert abs(su2_eval(PhaseFactors((0.0,) * d), 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_su2_matches_independent_product():
    rng = np.random.default_rng(11)
    for d in (1, 2, 5):
        phases = tuple(rng.uniform(-math.pi, math.pi, d))
        pf = PhaseFactors(phases)
        for a in rng.uniform(-1, 1, 20):
            assert su2_eval(pf, a) == pytest.approx(_wx_product(phases, a), abs=1e-12)


def test_su2_rejects_outside_domain():
    with pytest.raises(ValueError):
        su2_eval(PhaseFactors((0.0,)), 1.5)


def test_su2_unitarity_of_reduction():
    # |value|^2 never exceeds 1 for any phases and signal
    rng = np.random.default_rng(5)
    for _ in range(50):
        d = int(rng.integers(1, 12))
        pf = PhaseFactors(tuple(rng.uniform(-math.pi, math.pi, d)))
        a = float(rng.uniform(-1, 1))
        assert abs(su2_eval(pf, a)) <= 1.0 + 1e-12


def test_su2_value_is_trig_polynomial_of_bounded_degree():
    rng = np.random.default_rng(23)
    d = 6
    pf = PhaseFactors(tuple(rng.uniform(-math.pi, math.pi, d)))
    n = 8 * d
    theta = 2 * math.pi * np.arange(n) / n
    vals = np.array([su2_eval(pf, math.cos(t)).real for t in theta])
    spead = np.abs(np.fft.rfft(vals)) / n
    assert np.all(spead[d + 1:] <= 1e-9)


def test_su2_even_parity(autocall_paper_phases):
    for a in np.linspace(0, 1, 25):
        left = abs(su2_eval(autocall_paper_phases, -a))
        right = abs(su2_eval(autocall_paper_phases, a))
        assert left == pytest.approx(right, abs=1e-12)


# ---------------------------------------------------------------------------
# find_phases


def test_find_phases_t2_equivalent_to_zero():
    poly = ChebyshevPolynomial("even", 2, (0.0, 1.0))
    pf = find_phases(poly, tol=1e-10)
    assert pf.residual <= 1e-10
    for a in np.linspace(-1, 1, 50):
        assert su2_eval(pf, a).real == pytest.approx(2 * a * a - 1, abs=1e-10)


def test_find_phases_d20(autocall_paper_poly, autocall_paper_phases):
    assert autocall_paper_phases.residual <= 1e-8
    xs = np.linspace(0, 1, 1000)
    devs = [abs(su2_eval(autocall_paper_phases, x).real - autocall_paper_poly.eval(x))
            for x in xs]
    assert max(devs) <= 1e-8


def test_find_phases_rejects_norm_violation():
    poly = ChebyshevPolynomial("even", 4, (0.0, 0.0, 1.0000001))
    with pytest.raises(NormViolationError):
        find_phases(poly)


def test_find_phases_rejects_degree_zero():
    poly = ChebyshevPolynomial("even", 0, (0.5,))
    with pytest.raises(ValueError):
        find_phases(poly)


def test_find_phases_odd_parity():
    poly = ChebyshevPolynomial("odd", 3, (0.0, 0.9))
    pf = find_phases(poly, tol=1e-10)
    for a in np.linspace(-1, 1, 50):
        want = 0.9 * (4 * a**3 - 3 * a)
        assert su2_eval(pf, a).real == pytest.approx(want, abs=1e-9)


def test_phase_serialization_round_trip(autocall_paper_phases):
    back = PhaseFactors.from_json(autocall_paper_phases.to_json())
    assert back == autocall_paper_phases
    assert back.convention == "wx-real-pm"


# ---------------------------------------------------------------------------
# verify_phases


def test_verify_passes_for_found_phases(autocall_paper_poly, autocall_paper_phases):
    report = verify_phases(autocall_paper_phases, autocall_paper_poly, 1000, 1e-7)
    assert report.passed
    assert report.max_dev <= 1e-7


def test_verify_round_trip_at_ten_tol(autocall_paper_poly):
    pf = find_phases(autocall_paper_poly, tol=1e-8)
    assert verify_phases(pf, autocall_paper_poly, 1000, 1e-7).passed


def test_verify_detects_perturbation(autocall_paper_poly, autocall_paper_phases):
    bent = list(autocall_paper_phases.phases)
    bent[7] += 1e-2
    report = verify_phases(PhaseFactors(tuple(bent)), autocall_paper_poly, 1000, 1e-6)
    assert not report.passed


def test_verify_rejects_tiny_sample_count(autocall_paper_poly, autocall_paper_phases):
    with pytest.raises(ValueError):
        verify_phases(autocall_paper_phases, autocall_paper_poly, 50, 1e-6)


def test_convergence_error_carries_residual():
    err = ConvergenceError(1e-3, 1e-10)
    assert err.residual == 1e-3
