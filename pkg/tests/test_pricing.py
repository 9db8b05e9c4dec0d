import math

import numpy as np
import pytest

from qsppricer import (
    Autocallable,
    BinaryPayoff,
    ChebyshevPolynomial,
    EuropeanCall,
    FixedPointFormat,
    PhaseFactors,
    ProjectorSpec,
    StateVector,
    autocall_target,
    build_autocallable_indicators,
    build_autocallable_pipeline,
    build_call_pipeline,
    call_target,
    classical_price_autocallable,
    classical_price_call,
    find_phases,
    fit_minimax,
    normal_grid_probs,
    price_pipeline,
    probability,
    quantum_price,
    run,
    su2_eval,
)
from qsppricer.pricing import PathSpaceError
from qsppricer.simulator import pattern_amplitude, permutation_map


FMT6 = FixedPointFormat(6, 3, signed=True)


def _call(s0=100.0, k=100.0, fmt=FMT6, probs=None, f_max=None):
    if probs is None:
        probs = normal_grid_probs(fmt)
    return EuropeanCall(s0, k, fmt, probs, f_max=f_max)


# ---------------------------------------------------------------------------
# classical call oracle


def test_call_strike_at_grid_top_prices_zero():
    k = 100.0 * math.exp(FMT6.max_value)
    c = _call(k=k, f_max=1.0)
    assert classical_price_call(c) == 0.0


def test_call_delta_distribution_single_term():
    probs = np.zeros(64)
    code = FMT6.encode(1.5)
    probs[code] = 1.0
    c = _call(probs=probs)
    f_max = c.effective_f_max()
    want = (100.0 * math.exp(1.5) - 100.0) / f_max
    assert classical_price_call(c) == pytest.approx(want, rel=1e-14)


def test_call_price_is_the_normalized_sum():
    c = _call()
    total = sum(
        p * max(0.0, 100.0 * math.exp(FMT6.decode(i)) - 100.0)
        for i, p in enumerate(c.probs)
    ) / c.effective_f_max()
    assert classical_price_call(c) == pytest.approx(total, rel=1e-14)


def test_call_price_monotone_in_strike():
    probs = normal_grid_probs(FMT6)
    f_max = 100.0 * math.exp(8.0)
    prices = [classical_price_call(_call(k=k, probs=probs, f_max=f_max))
              for k in (80.0, 100.0, 120.0)]
    assert prices[0] >= prices[1] >= prices[2]


def test_call_prices_normalized():
    for k in (60.0, 100.0, 140.0):
        assert 0.0 <= classical_price_call(_call(k=k)) <= 1.0


def test_call_contract_validation():
    with pytest.raises(ValueError):
        _call(k=100.0 * math.exp(FMT6.max_value) + 1.0)
    with pytest.raises(ValueError):
        EuropeanCall(100.0, 100.0, FMT6, np.full(64, 1.0))


# ---------------------------------------------------------------------------
# call pipeline


def test_call_pipeline_otm_mass_prices_zero():
    probs = np.zeros(64)
    probs[FMT6.encode(-2.0)] = 0.5
    probs[FMT6.encode(-0.125)] = 0.5
    c = _call(probs=probs, f_max=100.0 * math.exp(8.0) - 100.0)
    poly = fit_minimax(call_target(c), 8, "even", cap=0.9995)
    pipe = build_call_pipeline(c, poly, find_phases(poly))
    assert quantum_price(pipe.circuit, pipe.success, pipe.initial) <= 1e-10
    assert classical_price_call(c) == 0.0


def test_call_pipeline_exact_polynomial_payoff():
    """A pipeline driven by a known polynomial reproduces the direct
    summation of p_i P(g_i)^2 over the in-the-money branch exactly."""
    fmt = FixedPointFormat(4, 2, signed=True)
    probs = normal_grid_probs(fmt, 0.0, 0.8)
    c = EuropeanCall(100.0, 100.0, fmt, probs, f_max=1.0)
    poly = ChebyshevPolynomial("even", 4, (0.1, -0.3, 0.45), cap=1.0, max_err=0.0)
    pf = find_phases(poly, tol=1e-12)
    pipe = build_call_pipeline(c, poly, pf)
    got = quantum_price(pipe.circuit, pipe.success, pipe.initial)
    want = 0.0
    for code in range(16):
        r = fmt.decode(code)
        if r > 0.0 and probs[code] > 0:
            g = math.sqrt(code / 16.0)
            want += probs[code] * poly.eval(g) ** 2
    assert got == pytest.approx(want, abs=1e-8)


def test_call_pipeline_against_oracle_small():
    fmt = FixedPointFormat(5, 3, signed=True)
    c = EuropeanCall(100.0, 95.0, fmt, normal_grid_probs(fmt),
                     f_max=100.0 * math.exp(2.0 ** 3) - 95.0)
    poly = fit_minimax(call_target(c), 12, "even", cap=0.9995)
    pipe = build_call_pipeline(c, poly, find_phases(poly))
    pair = price_pipeline(pipe, classical_price_call(c))
    assert pair.within_budget, (pair.abs_err, pair.budget)


def test_call_pipeline_nonzero_strike_shift_uses_adder():
    # strike well below spot: the in-the-money branch starts at negative
    # returns, so the encoding must shift through an extra register
    fmt = FixedPointFormat(4, 2, signed=True)
    c = EuropeanCall(100.0, 70.0, fmt, normal_grid_probs(fmt, 0.0, 0.8))
    poly, pf = _fit_pair(call_target(c), 12)
    pipe = build_call_pipeline(c, poly, pf)
    assert "shifted" in pipe.circuit.registers
    pair = price_pipeline(pipe, classical_price_call(c))
    assert pair.within_budget, (pair.abs_err, pair.budget)


def _fit_pair(target, degree):
    poly = fit_minimax(target, degree, "even", cap=0.9995)
    return poly, find_phases(poly)


# ---------------------------------------------------------------------------
# classical autocallable oracle


FMT3 = FixedPointFormat(3, 2, signed=True)


def _autocall(binaries, barrier=1.2, k_t=1.0, fmt=FMT3, n_steps=2, std=0.5):
    marg = normal_grid_probs(fmt, 0.0, std)
    return Autocallable(n_steps, fmt, (marg,) * n_steps, binaries,
                        barrier=barrier, k_t=k_t)


def test_autocall_always_firing_binary():
    # threshold return below every grid value: the t=1 binary always pays
    c = _autocall((BinaryPayoff(threshold=math.exp(-3.0), t=1, payout=0.7),))
    assert classical_price_autocallable(c) == pytest.approx(0.7, abs=1e-14)


def test_autocall_nothing_fires_prices_zero():
    # barrier return above every grid value and no binaries
    c = _autocall((), barrier=math.exp(3.0))
    assert classical_price_autocallable(c) == 0.0


def test_autocall_oracle_matches_hand_enumeration():
    c = _autocall((BinaryPayoff(threshold=1.1, t=1, payout=0.5),), barrier=1.3, k_t=0.9)
    probs = c.path_probs()
    total = 0.0
    for path in range(64):
        r1 = FMT3.decode(path & 7)
        r2 = FMT3.decode((path >> 3) & 7)
        p = probs[path]
        if r1 > math.log(1.1):
            total += p * 0.5
        elif max(r1, r2) > math.log(1.3):
            total += p * (1.0 - max(0.0, 0.9 - math.exp(r2)))
    assert classical_price_autocallable(c) == pytest.approx(total, rel=1e-12)


def test_autocall_path_space_capped():
    fmt = FixedPointFormat(6, 3, signed=True)
    marg = normal_grid_probs(fmt)
    c = Autocallable(4, fmt, (marg,) * 4, (), barrier=1.2, k_t=1.0)
    with pytest.raises(PathSpaceError):
        classical_price_autocallable(c)


def test_autocall_validation():
    with pytest.raises(ValueError):
        _autocall((BinaryPayoff(1.1, 5, 0.5),))  # timestep out of range
    with pytest.raises(ValueError):
        _autocall((BinaryPayoff(1.1, 1, 1.5),))  # unnormalized payout
    with pytest.raises(ValueError):
        _autocall((), k_t=0.0)


def test_autocall_joint_table_accepted():
    joint = np.zeros(64)
    joint[5] = 1.0
    c = Autocallable(2, FMT3, (), (), barrier=1.2, k_t=1.0, joint_probs=joint)
    assert c.path_probs()[5] == 1.0


# ---------------------------------------------------------------------------
# indicator circuit


def _indicator_truth(contract, returns):
    fired = []
    any_fired = False
    for b in contract.binaries:
        s = returns[b.t - 1] > math.log(b.threshold) and not any_fired
        fired.append(s)
        any_fired = any_fired or s
    crossed = any(r > math.log(contract.barrier) for r in returns)
    return fired, crossed and not any_fired


def test_indicators_exhaustive_t2_n2():
    fmt = FixedPointFormat(2, 2, signed=True)
    marg = np.full(4, 0.25)
    c = Autocallable(2, fmt, (marg, marg),
                     (BinaryPayoff(threshold=1.5, t=1, payout=0.5),),
                     barrier=1.2, k_t=1.0)
    circ = build_autocallable_indicators(c)
    for path in range(16):
        out = permutation_map(circ, path)
        r = [fmt.decode(path & 3), fmt.decode((path >> 2) & 3)]
        s_want, b_want = _indicator_truth(c, r)
        assert (out >> 4) & 1 == int(s_want[0]), (path, r)
        assert (out >> 5) & 1 == int(b_want), (path, r)
        assert out >> 6 == 0, "pool not restored"
        assert out & 15 == path, "returns modified"


def test_indicator_exclusivity_t3_n3():
    fmt = FixedPointFormat(3, 2, signed=True)
    marg = np.full(8, 0.125)
    c = Autocallable(
        3, fmt, (marg,) * 3,
        (BinaryPayoff(1.3, 1, 0.5), BinaryPayoff(1.1, 2, 0.4)),
        barrier=1.05, k_t=1.0,
    )
    circ = build_autocallable_indicators(c)
    base = 9  # qubits: r(9), s(2), b_last(1)
    for path in range(512):
        out = permutation_map(circ, path)
        bits = [(out >> base) & 1, (out >> (base + 1)) & 1, (out >> (base + 2)) & 1]
        assert sum(bits) <= 1, (path, bits)
        r = [fmt.decode((path >> (3 * t)) & 7) for t in range(3)]
        s_want, b_want = _indicator_truth(c, r)
        assert bits == [int(s_want[0]), int(s_want[1]), int(b_want)]


def test_indicator_first_trigger_blocks_later():
    fmt = FixedPointFormat(2, 2, signed=True)
    marg = np.full(4, 0.25)
    c = Autocallable(2, fmt, (marg, marg),
                     (BinaryPayoff(1.5, 1, 0.5), BinaryPayoff(1.2, 2, 0.4)),
                     barrier=1.1, k_t=1.0)
    circ = build_autocallable_indicators(c)
    # r1 = 1.0 > ln 1.5? no wait: thresholds are return levels; r1 = 1.0 means
    # e^1 = 2.72 > 1.5, so s_1 fires and s_2 must stay 0 whatever r2 is
    for code2 in range(4):
        path = fmt.encode(1.0) | (code2 << 2)
        out = permutation_map(circ, path)
        assert (out >> 4) & 1 == 1
        assert (out >> 5) & 1 == 0
        assert (out >> 6) & 1 == 0


# ---------------------------------------------------------------------------
# autocallable pipeline


def test_autocall_pipeline_binary_only():
    c = _autocall((BinaryPayoff(threshold=math.exp(-3.0), t=1, payout=0.49),),
                  barrier=math.exp(3.0))
    poly, pf = _fit_pair(autocall_target(c), 8)
    pipe = build_autocallable_pipeline(c, poly, pf)
    q = quantum_price(pipe.circuit, pipe.success, pipe.initial)
    assert q == pytest.approx(0.49, abs=1e-10)


def test_autocall_pipeline_t2_small_grid():
    fmt = FixedPointFormat(2, 2, signed=True)
    marg = normal_grid_probs(fmt, 0.0, 0.7)
    c = Autocallable(2, fmt, (marg, marg),
                     (BinaryPayoff(threshold=1.4, t=1, payout=0.6),),
                     barrier=1.2, k_t=1.0)
    poly, pf = _fit_pair(autocall_target(c), 12)
    pipe = build_autocallable_pipeline(c, poly, pf)
    pair = price_pipeline(pipe, classical_price_autocallable(c))
    assert pair.within_budget, (pair.abs_err, pair.budget)
    assert pair.abs_err <= 2 * poly.max_err + 1e-8


def test_autocall_pipeline_strike_below_one():
    fmt = FixedPointFormat(3, 2, signed=True)
    marg = normal_grid_probs(fmt, 0.0, 0.6)
    c = Autocallable(1, fmt, (marg,), (), barrier=1.05, k_t=0.8)
    poly, pf = _fit_pair(autocall_target(c), 12)
    pipe = build_autocallable_pipeline(c, poly, pf)
    pair = price_pipeline(pipe, classical_price_autocallable(c))
    assert pair.within_budget, (pair.abs_err, pair.budget)


def test_autocall_pipeline_rejects_odd_degree():
    c = _autocall(())
    poly = ChebyshevPolynomial("odd", 3, (0.1, 0.2), cap=1.0, max_err=0.0)
    with pytest.raises(Exception):
        build_autocallable_pipeline(c, poly, PhaseFactors((0.0, 0.0, 0.0)))


def test_autocall_clause_per_return_sweep_paper_config(autocall_paper_poly,
                                                       autocall_paper_phases):
    """Shifted encoding + QSP apply sqrt(1 - (1 - e^r)) per on-grid negative
    return, within the fit budget (single-run superposition sweep)."""
    from qsppricer.builders import emit_const_adder, emit_qsp, emit_u_sqrt
    from qsppricer.ir import Circuit
    from qsppricer.simulator import inject_distribution

    fmt = FixedPointFormat(6, 6, signed=True)  # integer returns in [-32, 32)
    m = 5
    circ = Circuit(6 + m + m + 1 + 1 + 1 + 1)
    r = tuple(range(6))
    shifted = tuple(range(6, 6 + m))
    j_reg = tuple(range(11, 11 + m))
    result, carry, rot_flag, control = 16, 17, 18, 19
    dst = FixedPointFormat(m, 5)
    emit_const_adder(circ, r, fmt, shifted, dst, 32.0, (), allow_wrap=True)
    u = Circuit(circ.n_qubits)
    emit_u_sqrt(u, shifted, j_reg, result, carry)
    emit_qsp(circ, u, tuple(j_reg) + (result,), (result,),
             autocall_paper_phases, control, rot_flag)
    probs = np.full(64, 1 / 64)
    state = run(circ, inject_distribution(probs, r, circ.n_qubits))
    block = pattern_amplitude(
        state, {q: 0 for q in j_reg + (result, carry, rot_flag, control)})
    # axes: high qubits first; remaining qubits are (shifted, r): flatten and
    # index by [shifted_code, r_code]
    amps = block.reshape(1 << m, 1 << 6)
    for code in range(64):
        rv = fmt.decode(code)
        if rv >= 0:
            continue
        shifted_code = dst.encode(rv + 32.0)
        got = abs(amps[shifted_code, code]) * 8.0
        want = math.sqrt(1.0 - (1.0 - math.exp(rv)))
        assert got == pytest.approx(want, abs=1.1e-3), (rv, got, want)


# ---------------------------------------------------------------------------
# quantum_price trivials


def test_quantum_price_identity_projector():
    from qsppricer.ir import Circuit

    circ = Circuit(2)
    circ.h(0)
    assert quantum_price(circ, ProjectorSpec((), ())) == pytest.approx(1.0)


def test_quantum_price_empty_match():
    from qsppricer.ir import Circuit

    circ = Circuit(2)
    assert quantum_price(circ, ProjectorSpec((0,), (1,))) == 0.0
