"""Contracts, exact classical oracles, and the payoff-encoding pipelines.

Both pipelines share the same skeleton: probabilities are injected on the
log-return registers, comparator flags gate which branch of the payoff each
path belongs to, and the terminal nonlinear clause is applied by a QSP
sequence over the square-root block encoding of the shifted return register.
The success-projector probability of the final state then equals the
classical expectation up to the polynomial fit error.

Threshold and shift constants are snapped onto the register grid before any
circuit is built; the classical oracles use the raw thresholds, which agree
with the snapped comparisons on every representable return.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .builders import (
    BuildError,
    const_compare_scratch,
    emit_const_adder,
    emit_qsp,
    emit_signed_const_compare,
    emit_u_sqrt,
)
from .fixedpoint import FixedPointFormat
from .ir import Circuit
from .phases import PhaseFactors
from .polyapprox import ChebyshevPolynomial, TargetFunction
from .simulator import (
    DEFAULT_WIDTH_CAP,
    ProjectorSpec,
    StateVector,
    inject_distribution,
    probability,
    run,
)

PRICE_SLACK = 1e-8


class PathSpaceError(RuntimeError):
    """Exact enumeration would exceed the configured path budget."""


def normal_grid_probs(fmt: FixedPointFormat, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """Midpoint-mass discretization of a normal law onto the register grid,
    indexed by register code and renormalized."""
    res = fmt.resolution
    probs = np.empty(1 << fmt.n_bits)

    def cdf(v: float) -> float:
        return 0.5 * (1.0 + math.erf((v - mean) / (std * math.sqrt(2.0))))

    for code in range(1 << fmt.n_bits):
        v = fmt.decode(code)
        probs[code] = cdf(v + res / 2.0) - cdf(v - res / 2.0)
    return probs / probs.sum()


# ---------------------------------------------------------------------------
# European call


@dataclass(frozen=True)
class EuropeanCall:
    """Call contract on a discretized log-return grid.

    ``probs[code]`` is the probability of the return ``fmt.decode(code)``.
    ``f_max`` defaults to the maximum payoff on the грid.
    """

    s0: float
    k: float
    fmt: FixedPointFormat
    probs: np.ndarray
    f_max: float | None = None

    def __post_init__(self) -> None:
        if self.s0 <= 0 or self.k <= 0:
            raise ValueError("spot and strike must be positive")
        probs = np.asarray(self.probs, dtype=float)
        if len(probs) != 1 << self.fmt.n_bits:
            raise ValueError("need one probability per grid point")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        if self.k > self.s0 * math.exp(self.fmt.max_value):
            raise ValueError("strike above every representable price")
        if self.effective_f_max() <= 0:
            raise ValueError("f_max must be positive")

    def effective_f_max(self) -> float:
        if self.f_max is not None:
            return self.f_max
        return self.s0 * math.exp(self.fmt.max_value) - self.k


def classical_price_call(contract: EuropeanCall) -> float:
    """Normalized expectation sum(p_i * max(0, S_i - K)) / f_max."""
    f_max = contract.effective_f_max()
    total = 0.0
    for code, p in enumerate(np.asarray(contract.probs, dtype=float)):
        if p == 0.0:
            continue
        s = contract.s0 * math.exp(contract.fmt.decode(code))
        total += p * max(0.0, s - contract.k)
    return total / f_max


@dataclass(frozen=True)
class _CallPlan:
    """Grid-exact encoding constants for the call pipeline."""

    otm_threshold: float | None  # flag fires on r <= threshold; None: all ITM
    shift: float                 # on-grid, 0 when the ITM branch is already nonnegative
    scale_bits: int              # p of the register feeding u_sqrt
    m_bits: int                  # its width (0 means: reuse the return register)
    x_min: float
    x_max: float


def _plan_call(contract: EuropeanCall) -> _CallPlan:
    fmt = contract.fmt
    # S0 e^r > K exactly when r exceeds log(K/S0)
    strike_log = math.log(contract.k / contract.s0)
    if strike_log < fmt.min_value - 1e-12:
        thr = None
        itm_min = fmt.min_value
    else:
        thr = fmt.snap_down(strike_log)
        itm_min = thr + fmt.resolution
    if itm_min >= -1e-12:
        shift = 0.0
        scale_bits = fmt.int_bits
        m_bits = 0
    else:
        shift = -itm_min
        scale_bits = fmt.int_bits
        while fmt.max_value + shift >= 2.0 ** scale_bits - 1e-12:
            scale_bits += 1
        m_bits = scale_bits + (fmt.n_bits - fmt.int_bits)
    denom = 2.0 ** scale_bits
    x_min = math.sqrt(max(itm_min + shift, 0.0) / denom)
    x_max = math.sqrt((fmt.max_value + shift) / denom)
    return _CallPlan(thr, shift, scale_bits, m_bits, x_min, x_max)


def call_target(contract: EuropeanCall) -> TargetFunction:
    """The amplitude target the pipeline's polynomial must approximate.

    The domain covers exactly the in-the-money grid images, so the payoff
    argument stays nonnegative and at most f_max on it.
    """
    plan = _plan_call(contract)
    return TargetFunction.call_clause(
        contract.s0, contract.k, contract.effective_f_max(),
        plan.scale_bits, plan.shift,
        x_min=max(0.0, plan.x_min - 1e-12), x_max=min(1.0, plan.x_max + 1e-12),
    )


@dataclass
class PricingPipeline:
    circuit: Circuit
    success: ProjectorSpec
    initial: StateVector
    poly: ChebyshevPolynomial
    phases: PhaseFactors
    budget: float


def build_call_pipeline(
    contract: EuropeanCall, poly: ChebyshevPolynomial, phases: PhaseFactors
) -> PricingPipeline:
    """Comparator flag, optional shift adder, u_sqrt, and the QSP clause.

    The success projector keeps the in-the-money flag, so branches the
    comparator marked out of the money never contribute.
    """
    if len(phases.phases) != poly.degree:
        raise BuildError("phase count must equal the polynomial degree")
    plan = _plan_call(contract)
    fmt = contract.fmt
    n = fmt.n_bits

    use_adder = plan.m_bits > 0
    m = plan.m_bits if use_adder else n
    flag_scratch = 0
    if plan.otm_threshold is not None and plan.otm_threshold < fmt.max_value - 1e-12:
        flag_scratch = const_compare_scratch(fmt, plan.otm_threshold + fmt.resolution)
    pool_need = max(flag_scratch, m - 1 if use_adder else 0)

    circ = Circuit(
        n + 1 + (m if use_adder else 0) + m + 1 + 1 + 1 + 1 + pool_need
    )
    r = circ.add_register("r", n, fmt)
    flag = circ.add_register("flag", 1).qubits[0]
    shifted = circ.add_register("shifted", m).qubits if use_adder else r.qubits
    j_reg = circ.add_register("j", m).qubits
    result = circ.add_register("result", 1).qubits[0]
    carry = circ.add_register("carry", 1).qubits[0]
    rot_flag = circ.add_register("rot_flag", 1).qubits[0]
    control = circ.add_register("control", 1).qubits[0]
    pool = circ.add_register("pool", pool_need).qubits if pool_need else ()
    circ.restored_ancillas = (carry, rot_flag) + tuple(pool)

    # flag <- [r <= threshold]  (out of the money)
    if plan.otm_threshold is not None:
        if plan.otm_threshold >= fmt.max_value - 1e-12:
            circ.x(flag)  # threshold at the top of the grid: everything OTM
        else:
            emit_signed_const_compare(
                circ, r.qubits, fmt, plan.otm_threshold + fmt.resolution, flag, pool
            )

    if use_adder:
        dst_fmt = FixedPointFormat(m, plan.scale_bits)
        emit_const_adder(circ, r.qubits, fmt, shifted, dst_fmt, plan.shift, pool,
                         allow_wrap=True)

    u = Circuit(circ.n_qubits)
    emit_u_sqrt(u, shifted, j_reg, result, carry)
    in_pattern = tuple(j_reg) + (result,)
    success = emit_qsp(circ, u, in_pattern, (result,), phases, control, rot_flag)

    success = ProjectorSpec(success.qubits + (flag,), success.values + (0,))
    initial = inject_distribution(np.asarray(contract.probs, float), r.qubits, circ.n_qubits)
    budget = 2.0 * poly.max_err + PRICE_SLACK
    return PricingPipeline(circ, success, initial, poly, phases, budget)


# ---------------------------------------------------------------------------
# autocallable


@dataclass(frozen=True)
class BinaryPayoff:
    """Knockout coupon: fires at step ``t`` when the return exceeds
    ``threshold`` and no earlier coupon fired; pays normalized ``payout``."""

    threshold: float
    t: int
    payout: float


@dataclass(frozen=True)
class Autocallable:
    n_steps: int
    fmt: FixedPointFormat
    step_probs: tuple
    binaries: tuple[BinaryPayoff, ...]
    barrier: float
    k_t: float
    notional: float = 1.0
    joint_probs: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("need at least one timestep")
        if not 0.0 < self.k_t <= 1.0:
            raise ValueError("strike return K_T must lie in (0, 1]")
        if self.barrier <= 0.0:
            raise ValueError("barrier must be a positive return level")
        last_t = 0
        for b in self.binaries:
            if not 1 <= b.t <= self.n_steps:
                raise ValueError(f"binary timestep {b.t} outside 1..{self.n_steps}")
            if b.t <= last_t:
                raise ValueError("binary payoff timesteps must be strictly increasing")
            last_t = b.t
            if not 0.0 <= b.payout <= 1.0:
                raise ValueError("binary payouts must be normalized into [0, 1]")
            if b.threshold <= 0.0:
                raise ValueError("return thresholds must be positive")
        if self.joint_probs is None:
            if len(self.step_probs) != self.n_steps:
                raise ValueError("need one marginal per timestep")
            for p in self.step_probs:
                if len(np.asarray(p)) != 1 << self.fmt.n_bits:
                    raise ValueError("marginal length must match the grid")
        else:
            if len(self.joint_probs) != 1 << (self.fmt.n_bits * self.n_steps):
                raise ValueError("joint table length must be 2^(n*T)")

    def path_probs(self) -> np.ndarray:
        """Joint probabilities indexed by concatenated codes, step 1 lowest."""
        if self.joint_probs is not None:
            p = np.asarray(self.joint_probs, dtype=float)
        else:
            p = np.asarray(self.step_probs[0], dtype=float)
            for t in range(1, self.n_steps):
                p = np.kron(np.asarray(self.step_probs[t], dtype=float), p)
        return p / p.sum()


def _path_payoff(contract: Autocallable, returns: list[float]) -> float:
    """Payoff of one path under the triggered/barrier/otherwise clauses."""
    fired = False
    for b in contract.binaries:
        r = returns[b.t - 1]
        if r > math.log(b.threshold) and not fired:
            return b.payout
        if r > math.log(b.threshold):
            fired = True  # unreachable once fired is True; kept for clarity
        fired = fired or r > math.log(b.threshold)
    ln_b = math.log(contract.barrier)
    crossed = any(r > ln_b for r in returns)
    if crossed:
        f_t = math.exp(returns[-1])
        return 1.0 - max(0.0, contract.k_t - f_t)
    return 0.0


def classical_price_autocallable(contract: Autocallable, max_paths: int = 1 << 20) -> float:
    """Exact expectation by full path enumeration."""
    n = contract.fmt.n_bits
    n_paths = 1 << (n * contract.n_steps)
    if n_paths > max_paths:
        raise PathSpaceError(f"{n_paths} paths exceed the enumeration budget {max_paths}")
    probs = contract.path_probs()
    mask = (1 << n) - 1
    total = 0.0
    for path_code in range(n_paths):
        p = probs[path_code]
        if p == 0.0:
            continue
        returns = [
            contract.fmt.decode((path_code >> (n * t)) & mask)
            for t in range(contract.n_steps)
        ]
        total += p * _path_payoff(contract, returns)
    return total


@dataclass(frozen=True)
class _AutocallPlan:
    shift: float
    scale_bits: int
    m_bits: int
    x_max: float
    clause_threshold_code: int  # strict-less constant for [r_T < ln K_T]


def _plan_autocall(contract: Autocallable) -> _AutocallPlan:
    fmt = contract.fmt
    res = fmt.resolution
    ln_kt = math.log(contract.k_t)
    # strict [r < ln K_T] over grid codes: compare against the ceiling code
    floor_v = fmt.snap_down(ln_kt)
    c_star = floor_v if abs(floor_v - ln_kt) < 1e-12 else floor_v + res
    if c_star < fmt.min_value:
        raise BuildError("strike return below every representable log-return")
    scale_bits = fmt.int_bits - 1
    capacity = 2.0 ** scale_bits
    shift = fmt.snap_down(capacity - ln_kt)
    gated_max = c_star - res
    if shift < -fmt.min_value - 1e-12:
        raise BuildError("register range too wide for the clause capacity")
    x_max = math.sqrt(max(gated_max + shift, 0.0) / capacity)
    m_bits = scale_bits + (fmt.n_bits - fmt.int_bits)
    return _AutocallPlan(shift, scale_bits, m_bits, x_max, fmt.encode(c_star))


def autocall_target(contract: Autocallable) -> TargetFunction:
    """Final-clause amplitude target sqrt(1 - (K_T - e^{x^2 2^p} e^{-s}))."""
    plan = _plan_autocall(contract)
    x_sq = (plan.shift + math.log(contract.k_t)) / 2.0 ** plan.scale_bits
    x_star = min(1.0, math.sqrt(max(x_sq, 0.0)))
    return TargetFunction.autocall_clause(
        contract.k_t, plan.scale_bits, plan.shift,
        x_max=min(x_star, plan.x_max + 1e-12),
    )


def _indicator_cmp_scratch(contract: Autocallable) -> int:
    """Scratch the threshold comparisons of the indicator logic will use."""
    fmt = contract.fmt
    res = fmt.resolution
    need = 0
    levels = [math.log(b.threshold) for b in contract.binaries]
    levels.append(math.log(contract.barrier))
    for level in levels:
        thr = fmt.snap_down(level) + res
        if fmt.min_value + 1e-12 <= thr <= fmt.max_value + 1e-12:
            need = max(need, const_compare_scratch(fmt, thr))
    return need


def _indicator_pool_need(contract: Autocallable) -> int:
    return _indicator_cmp_scratch(contract) + contract.n_steps + 1


def build_autocallable_indicators(contract: Autocallable) -> Circuit:
    """Binary-trigger qubits and the barrier qubit, intermediates uncomputed.

    Register order: r_1..r_T, s_1..s_k, b_last, then pool scratch.  The
    circuit is a basis permutation, so truth tables can be checked exactly.
    """
    fmt = contract.fmt
    n = fmt.n_bits
    t_steps = contract.n_steps
    k = len(contract.binaries)
    pool_need = _indicator_pool_need(contract)
    circ = Circuit(n * t_steps + k + 1 + pool_need)
    r_regs = [circ.add_register(f"r{t + 1}", n, fmt) for t in range(t_steps)]
    s_reg = circ.add_register("s", k).qubits if k else ()
    b_last = circ.add_register("b_last", 1).qubits[0]
    pool = circ.add_register("pool", pool_need).qubits
    circ.restored_ancillas = pool
    _emit_indicators(circ, contract, [r.qubits for r in r_regs], s_reg, b_last, pool)
    return circ


def _emit_indicators(circ, contract, r_qubits, s_qubits, b_last, pool) -> None:
    fmt = contract.fmt
    res = fmt.resolution
    n_cmp = _indicator_cmp_scratch(contract)
    cmp_scratch = pool[:n_cmp]
    temps = pool[n_cmp:]

    def above(reg, level_log, target):
        """target ^= [value(reg) > level_log]"""
        thr = fmt.snap_down(level_log) + res
        if thr > fmt.max_value + 1e-12:
            return  # never above
        if thr < fmt.min_value + 1e-12:
            circ.x(target)  # always above
            return
        emit_signed_const_compare(circ, reg, fmt, thr, target, cmp_scratch)
        circ.x(target)

    def below_or_equal(reg, level_log, target):
        """target ^= [value(reg) <= level_log]"""
        thr = fmt.snap_down(level_log) + res
        if thr > fmt.max_value + 1e-12:
            circ.x(target)  # always at or below
            return
        if thr < fmt.min_value + 1e-12:
            return  # never
        emit_signed_const_compare(circ, reg, fmt, thr, target, cmp_scratch)

    # binary triggers: s_i = [r > K_i] and no earlier trigger
    for i, b in enumerate(contract.binaries):
        reg = r_qubits[b.t - 1]
        if i == 0:
            above(reg, math.log(b.threshold), s_qubits[0])
        else:
            tmp = temps[0]
            above(reg, math.log(b.threshold), tmp)
            controls = (tmp,) + tuple(s_qubits[:i])
            circ.mcx(controls, s_qubits[i], (1,) + (0,) * i)
            above(reg, math.log(b.threshold), tmp)  # uncompute (self-inverse)

    # barrier: crossed at least once and no binary fired
    ln_b = math.log(contract.barrier)
    b_temps = temps[: contract.n_steps]
    all_below = temps[contract.n_steps]
    for t in range(contract.n_steps):
        below_or_equal(r_qubits[t], ln_b, b_temps[t])
    circ.mcx(tuple(b_temps), all_below, (1,) * contract.n_steps)
    circ.mcx((all_below,) + tuple(s_qubits), b_last, (0,) * (1 + len(s_qubits)))
    # uncompute
    circ.mcx(tuple(b_temps), all_below, (1,) * contract.n_steps)
    for t in range(contract.n_steps):
        below_or_equal(r_qubits[t], ln_b, b_temps[t])


def build_autocallable_pipeline(
    contract: Autocallable, poly: ChebyshevPolynomial, phases: PhaseFactors
) -> PricingPipeline:
    """Indicators, payoff rotations, and the strike-gated QSP clause.

    The QSP rotations are gated on (barrier qubit AND strike flag), so the
    operator acts as the identity on every other branch; this requires the
    even polynomial degree the targets already have.
    """
    if len(phases.phases) != poly.degree:
        raise BuildError("phase count must equal the polynomial degree")
    if poly.degree % 2 != 0:
        raise BuildError("gated QSP clause needs an even-degree polynomial")
    plan = _plan_autocall(contract)
    fmt = contract.fmt
    n = fmt.n_bits
    t_steps = contract.n_steps
    k = len(contract.binaries)
    m = plan.m_bits

    clause_scratch = const_compare_scratch(fmt, fmt.decode(plan.clause_threshold_code))
    pool_need = max(_indicator_pool_need(contract), clause_scratch, m - 1)
    width = n * t_steps + k + 1 + 1 + 1 + 1 + m + m + 1 + 1 + 1 + 1 + pool_need
    circ = Circuit(width)
    r_regs = [circ.add_register(f"r{t + 1}", n, fmt) for t in range(t_steps)]
    s_reg = circ.add_register("s", k).qubits if k else ()
    b_last = circ.add_register("b_last", 1).qubits[0]
    payoff = circ.add_register("payoff", 1).qubits[0]
    flag = circ.add_register("flag", 1).qubits[0]
    gate_q = circ.add_register("clause_gate", 1).qubits[0]
    shifted = circ.add_register("shifted", m).qubits
    j_reg = circ.add_register("j", m).qubits
    result = circ.add_register("result", 1).qubits[0]
    carry = circ.add_register("carry", 1).qubits[0]
    rot_flag = circ.add_register("rot_flag", 1).qubits[0]
    control = circ.add_register("control", 1).qubits[0]
    pool = circ.add_register("pool", pool_need).qubits
    circ.restored_ancillas = (carry, rot_flag) + tuple(pool)

    r_qubits = [reg.qubits for reg in r_regs]
    _emit_indicators(circ, contract, r_qubits, s_reg, b_last, pool)

    # payoff qubit: |1> means zero payout
    circ.x(payoff)
    for i, b in enumerate(contract.binaries):
        circ.cry(s_reg[i], payoff, -2.0 * math.asin(math.sqrt(b.payout)))
    circ.cnot(b_last, payoff)

    # strike flag and the clause gate
    c_star = fmt.decode(plan.clause_threshold_code)
    emit_signed_const_compare(circ, r_qubits[-1], fmt, c_star, flag, pool)
    circ.toffoli(b_last, flag, gate_q)

    dst_fmt = FixedPointFormat(m, plan.scale_bits)
    emit_const_adder(circ, r_qubits[-1], fmt, shifted, dst_fmt, plan.shift, pool,
                     allow_wrap=True)

    u = Circuit(circ.n_qubits)
    emit_u_sqrt(u, shifted, j_reg, result, carry)
    in_pattern = tuple(j_reg) + (result,)
    qsp_success = emit_qsp(circ, u, in_pattern, (result,), phases, control,
                           rot_flag, gate_qubit=gate_q)

    success = ProjectorSpec(qsp_success.qubits + (payoff,), qsp_success.values + (0,))
    reg_order = tuple(q for reg in r_qubits for q in reg)
    initial = inject_distribution(contract.path_probs(), reg_order, circ.n_qubits)
    budget = 2.0 * poly.max_err + PRICE_SLACK
    return PricingPipeline(circ, success, initial, poly, phases, budget)


# ---------------------------------------------------------------------------
# price extraction


@dataclass(frozen=True)
class PricePair:
    classical: float
    quantum: float
    budget: float

    @property
    def abs_err(self) -> float:
        return abs(self.classical - self.quantum)

    @property
    def within_budget(self) -> bool:
        return self.abs_err <= self.budget

    def to_json(self) -> str:
        return json.dumps(
            {
                "classical": float(self.classical),
                "quantum": float(self.quantum),
                "abs_err": float(self.abs_err),
                "budget": float(self.budget),
                "within_budget": bool(self.within_budget),
            },
            sort_keys=True,
        )


def quantum_price(
    circuit: Circuit,
    projector: ProjectorSpec,
    initial: StateVector | None = None,
    width_cap: int = DEFAULT_WIDTH_CAP,
) -> float:
    """Exact success probability read from the statevector."""
    final = run(circuit, initial, width_cap=width_cap)
    return probability(final, projector)


def price_pipeline(pipeline: PricingPipeline, classical: float,
                   width_cap: int = DEFAULT_WIDTH_CAP) -> PricePair:
    q = quantum_price(pipeline.circuit, pipeline.success, pipeline.initial, width_cap)
    return PricePair(classical, q, pipeline.budget)
