"""Builders for every unitary in the payoff-encoding pipeline.

The comparator follows the subtract-and-restore pattern: complement one
register, run a majority carry chain for ``a + ~b + 1``, copy out the carry
(whose negation is ``a < b``), and run the inverse chain.  The serial
expansion simulated here is linear depth; the declared cost metadata carries
the Toffoli-depth ``2*floor(log2(n-1)) + 5`` of the logarithmic-depth
carry-lookahead layering the design stands in for.

Phase placement in the QSP operator: the stored wx-convention phases
(phi_1..phi_d) map onto projector-rotation angles

    psi_k = phi_k - pi/2,   psi_1 += d * pi/2,

and the sequence applies, in time order for j = 1..d: the signal unitary
(U for odd j, U-adjoint for even j) followed by the angle psi_{d+1-j} on the
output projector (odd j) or the input projector (even j), with the sign of
every angle selected by the Hadamard-conjugated control qubit.  With this
mapping the success amplitude equals the real realized value of
``phases.su2_eval`` exactly, which the test suite pins down degree by degree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .fixedpoint import FixedPointFormat
from .ir import Circuit, Gate, GateCosts
from .phases import PhaseFactors
from .simulator import ProjectorSpec, permutation_map


class BuildError(ValueError):
    """Circuit construction cannot satisfy the requested layout."""


def comparator_toffoli_depth(n: int) -> int:
    """Declared Toffoli depth of the log-depth comparator layering."""
    if n < 1:
        raise BuildError("comparator needs n >= 1")
    if n == 1:
        return 2
    return 2 * int(math.floor(math.log2(n - 1))) + 5 if n >= 2 else 2


# ---------------------------------------------------------------------------
# comparator


def _emit_comparator_raw(circ: Circuit, a: tuple[int, ...], b: tuple[int, ...],
                         result: int, carry: int) -> None:
    """result ^= [a < b] for equal-width unsigned registers; carry restored."""
    n = len(a)
    if n != len(b) or n < 1:
        raise BuildError("comparator needs two equal nonempty registers")
    for q in b:
        circ.x(q)
    circ.x(carry)
    chain = [carry] + list(a[:-1])
    maj_ops = list(zip(chain, b, a))
    for c, bq, aq in maj_ops:
        circ.cnot(aq, bq)
        circ.cnot(aq, c)
        circ.toffoli(c, bq, aq)
    circ.cnot(a[-1], result)
    circ.x(result)
    for c, bq, aq in reversed(maj_ops):
        circ.toffoli(c, bq, aq)
        circ.cnot(aq, c)
        circ.cnot(aq, bq)
    circ.x(carry)
    for q in b:
        circ.x(q)


def comparator_gate(n: int) -> Gate:
    """Composite ``|a>|b>|0> -> |a>|b>|a<b>`` over 2n+2 local qubits.

    Local layout: a = 0..n-1, b = n..2n-1, result = 2n, carry = 2n+1.
    """
    body = Circuit(2 * n + 2)
    _emit_comparator_raw(body, tuple(range(n)), tuple(range(n, 2 * n)), 2 * n, 2 * n + 1)
    costs = GateCosts(toffoli_count=2 * n, toffoli_depth=comparator_toffoli_depth(n))
    return Gate("composite", tuple(range(2 * n + 2)), name=f"cmp{n}", body=body, costs=costs)


def emit_comparator(circ: Circuit, a: tuple[int, ...], b: tuple[int, ...],
                    result: int, carry: int) -> None:
    gate = comparator_gate(len(a))
    circ.append(Gate(gate.kind, tuple(a) + tuple(b) + (result, carry),
                     name=gate.name, body=gate.body, costs=gate.costs))


def build_comparator(n: int) -> Circuit:
    """Standalone strict-less-than comparator circuit."""
    if n < 1:
        raise BuildError("comparator needs n >= 1")
    circ = Circuit(2 * n + 2)
    ra = circ.add_register("a", n)
    rb = circ.add_register("b", n)
    rres = circ.add_register("result", 1)
    rcarry = circ.add_register("carry", 1)
    circ.restored_ancillas = rcarry.qubits
    emit_comparator(circ, ra.qubits, rb.qubits, rres.qubits[0], rcarry.qubits[0])
    return circ


# ---------------------------------------------------------------------------
# compare against a classical constant


def emit_const_compare(circ: Circuit, a: tuple[int, ...], const_code: int,
                       result: int, scratch: tuple[int, ...]) -> None:
    """result ^= [a < const] for an unsigned register; scratch restored.

    The carry chain of ``a + ~const + 1`` is folded against the constant bits,
    holding carries on scratch only where they depend on the register.
    """
    n = len(a)
    if const_code <= 0:
        return
    if const_code >= (1 << n):
        circ.x(result)
        return

    emitted: list[Gate] = []

    def rec(gate: Gate) -> None:
        emitted.append(gate)
        circ.append(gate)

    def maj_step(carrier, aq: int, k: int, slot: int):
        """Next carrier = maj(a, k, carrier); returns descriptor."""
        if carrier[0] == "const":
            cv = carrier[1]
            if cv == 0:
                # maj(a, k, 0) = a & k
                return ("const", 0) if k == 0 else ("qubit", aq)
            # maj(a, k, 1) = a | k
            return ("const", 1) if k == 1 else ("qubit", aq)
        cq = carrier[1]
        if k == 0:
            rec(Gate("toffoli", (aq, cq, slot)))
        else:
            rec(Gate("x", (aq,)))
            rec(Gate("x", (cq,)))
            rec(Gate("toffoli", (aq, cq, slot)))
            rec(Gate("x", (slot,)))
            rec(Gate("x", (cq,)))
            rec(Gate("x", (aq,)))
        return ("qubit", slot)

    kbits = [((~const_code) >> i) & 1 for i in range(n)]
    carrier = ("const", 1)
    used = 0
    for i in range(n):
        slot = scratch[used] if used < len(scratch) else -1
        nxt = maj_step(carrier, a[i], kbits[i], slot)
        if nxt[0] == "qubit" and nxt[1] == slot:
            used += 1
        carrier = nxt
    if used > len(scratch):
        raise BuildError("constant comparator ran out of scratch qubits")

    # result = NOT carry_out
    if carrier[0] == "const":
        if carrier[1] == 0:
            circ.x(result)
    else:
        circ.cnot(carrier[1], result)
        circ.x(result)
    for gate in reversed(emitted):
        circ.append(gate)


def emit_signed_const_compare(circ: Circuit, a: tuple[int, ...], fmt: FixedPointFormat,
                              threshold: float, result: int,
                              scratch: tuple[int, ...]) -> None:
    """result ^= [value(a) < threshold] for a two's complement register.

    The threshold must be on the register grid.  Comparison runs in biased
    order: flipping the sign bit maps two's complement onto a monotone
    unsigned code.  Thresholds at 0 and one step above 0 reduce to sign-bit
    forms that need no scratch.
    """
    if not fmt.signed:
        emit_const_compare(circ, a, fmt.encode(threshold), result, scratch)
        return
    code = fmt.encode(threshold)
    sign = a[-1]
    if code == 0:
        circ.cnot(sign, result)  # [r < 0] is the sign bit
        return
    if code == 1:
        circ.cnot(sign, result)  # [r <= 0] = negative or exactly zero
        circ.mcx(a, result, (0,) * len(a))
        return
    bias = 1 << (fmt.n_bits - 1)
    circ.x(sign)
    emit_const_compare(circ, a, code ^ bias, result, scratch)
    circ.x(sign)


def const_compare_scratch(fmt: FixedPointFormat, threshold: float) -> int:
    """Scratch qubits the threshold comparison will actually use."""
    code = fmt.encode(threshold)
    n = fmt.n_bits
    if fmt.signed:
        if code in (0, 1):
            return 0
        code ^= 1 << (n - 1)
    if code <= 0 or code >= (1 << n):
        return 0
    # the carry chain stays folded until the first set bit of the constant
    low = (code & -code).bit_length() - 1
    return max(0, n - 1 - low)


# ---------------------------------------------------------------------------
# out-of-place constant adder


def _emit_add_carry_chain(circ: Circuit, bits: tuple[int, ...], sbits: list[int],
                          scratch: tuple[int, ...], carry_in_one: bool,
                          record: list[Gate]) -> list:
    """Carries of bits + s (+1 if carry_in_one) into scratch slots.

    One slot is reserved per position so the compute and uncompute chains
    stay structurally aligned.  Returns carrier descriptors for positions
    1..m-1 ("const" folded or scratch qubit).
    """

    def rec(gate: Gate) -> None:
        record.append(gate)
        circ.append(gate)

    m = len(bits)
    carriers: list = []
    carrier = ("const", 1 if carry_in_one else 0)
    for i in range(m - 1):
        slot = scratch[i]
        k = sbits[i]
        if carrier[0] == "const":
            cv = carrier[1]
            if cv == 0 and k == 0:
                carrier = ("const", 0)
            elif cv == 1 and k == 1:
                carrier = ("const", 1)
            elif cv == 0 and k == 1:
                rec(Gate("cnot", (bits[i], slot)))
                carrier = ("qubit", slot)
            else:  # cv == 1, k == 0: carry = bit
                rec(Gate("cnot", (bits[i], slot)))
                carrier = ("qubit", slot)
        else:
            cq = carrier[1]
            if k == 0:
                rec(Gate("toffoli", (bits[i], cq, slot)))
            else:
                rec(Gate("x", (bits[i],)))
                rec(Gate("x", (cq,)))
                rec(Gate("toffoli", (bits[i], cq, slot)))
                rec(Gate("x", (slot,)))
                rec(Gate("x", (cq,)))
                rec(Gate("x", (bits[i],)))
            carrier = ("qubit", slot)
        carriers.append(carrier)
    return carriers


def emit_const_adder(circ: Circuit, src: tuple[int, ...], src_fmt: FixedPointFormat,
                     dst: tuple[int, ...], dst_fmt: FixedPointFormat, shift: float,
                     scratch: tuple[int, ...], allow_wrap: bool = False) -> None:
    """|x>|0>_m -> |x>|x + shift>_m with the destination unsigned.

    The source may be two's complement; its bits are sign-extended into the
    destination before the in-place constant addition, so the modular sum
    lands on the correct unsigned code whenever x + shift fits the
    destination range.  ``allow_wrap`` skips the range validation for
    pipelines whose out-of-range branches are gated off downstream.
    """
    m = len(dst)
    if src_fmt.resolution != dst_fmt.resolution:
        raise BuildError("adder requires matching fractional resolution")
    if not allow_wrap:
        lo = src_fmt.min_value + shift
        hi = src_fmt.max_value + shift
        if lo < -1e-12 or hi > dst_fmt.max_value + 1e-12:
            raise BuildError(
                f"x + {shift} spans [{lo}, {hi}], outside the destination range "
                f"[0, {dst_fmt.max_value}]"
            )

    s_code = round(shift / dst_fmt.resolution)
    if abs(shift / dst_fmt.resolution - s_code) > 1e-9:
        raise BuildError(f"shift {shift} is not on the destination grid")
    s_code %= 1 << m

    n = len(src)
    for i in range(min(n, m)):
        circ.cnot(src[i], dst[i])
    if src_fmt.signed:
        for i in range(n, m):
            circ.cnot(src[-1], dst[i])

    if s_code == 0:
        return
    if len(scratch) < m - 1:
        raise BuildError("constant adder needs m-1 scratch qubits")
    sbits = [(s_code >> i) & 1 for i in range(m)]

    # carries from pre-add destination bits
    record: list[Gate] = []
    carriers = _emit_add_carry_chain(circ, dst, sbits, scratch, False, record)
    # apply the sum bits
    for i in range(m):
        if sbits[i]:
            circ.x(dst[i])
        if i >= 1:
            carrier = carriers[i - 1]
            if carrier[0] == "qubit":
                circ.cnot(carrier[1], dst[i])
            elif carrier[1] == 1:
                circ.x(dst[i])
    # the subtraction carries of the post-add bits equal the complemented
    # addition carries; flip the slots and replay that chain reversed
    for carrier in carriers:
        if carrier[0] == "qubit":
            circ.x(carrier[1])
    probe = Circuit(circ.n_qubits)
    record2: list[Gate] = []
    not_sbits = [1 - b for b in sbits]
    _emit_add_carry_chain(probe, dst, not_sbits, scratch, True, record2)
    for gate in reversed(record2):
        circ.append(gate)


def build_const_adder(src_fmt: FixedPointFormat, shift: float,
                      dst_fmt: FixedPointFormat) -> Circuit:
    """Standalone adder circuit: registers src, dst, scratch."""
    n, m = src_fmt.n_bits, dst_fmt.n_bits
    circ = Circuit(n + m + max(m - 1, 0))
    rs = circ.add_register("src", n, src_fmt)
    rd = circ.add_register("dst", m, dst_fmt)
    rx = circ.add_register("scratch", max(m - 1, 1)) if m > 1 else None
    scratch = rx.qubits if rx else ()
    if rx:
        circ.restored_ancillas = rx.qubits
    emit_const_adder(circ, rs.qubits, src_fmt, rd.qubits, dst_fmt, shift, scratch)
    return circ


# ---------------------------------------------------------------------------
# square-root amplitude encoding


@dataclass(frozen=True)
class BlockEncoding:
    """A signal unitary with its input/output projector patterns.

    ``in_pattern`` lists the ancillas that define the input projector
    (all |0>); ``out_pattern`` the qubits of the output projector.  The
    amplitude of the output pattern on register code v is ``signal(v)``.
    """

    circuit: Circuit
    value_qubits: tuple[int, ...]
    in_pattern: tuple[int, ...]
    out_pattern: tuple[int, ...]
    scale_bits: int

    def signal(self, code: int) -> float:
        return math.sqrt(code / float(1 << self.scale_bits))


def emit_u_sqrt(circ: Circuit, value: tuple[int, ...], j_reg: tuple[int, ...],
                result: int, carry: int) -> None:
    """Uniform superposition on j, compare, flip: P(result=0) = code/2^n."""
    if len(j_reg) != len(value):
        raise BuildError("u_sqrt ancilla register must match the value register width")
    for q in j_reg:
        circ.h(q)
    emit_comparator(circ, j_reg, value, result, carry)
    circ.x(result)


def build_u_sqrt(fmt: FixedPointFormat) -> BlockEncoding:
    """Comparator-based encoding of sqrt(code/2^n) into the result qubit.

    The stored value enters as a plain bit string; a register with p integer
    digits therefore encodes sqrt(x / 2^p) for on-grid x.
    """
    n = fmt.n_bits
    circ = Circuit(2 * n + 2)
    rv = circ.add_register("value", n, fmt)
    rj = circ.add_register("j", n)
    rres = circ.add_register("result", 1)
    rcarry = circ.add_register("carry", 1)
    circ.restored_ancillas = rcarry.qubits
    emit_u_sqrt(circ, rv.qubits, rj.qubits, rres.qubits[0], rcarry.qubits[0])
    return BlockEncoding(
        circuit=circ,
        value_qubits=rv.qubits,
        in_pattern=rj.qubits + rres.qubits,
        out_pattern=rres.qubits,
        scale_bits=n,
    )


def u_sqrt_exact_probability(fmt: FixedPointFormat, code: int) -> Fraction:
    """Exact rational P(result=0) by driving the comparator expansion over
    every superposition branch as a basis permutation."""
    n = fmt.n_bits
    circ = Circuit(2 * n + 2)
    emit_comparator(circ, tuple(range(n, 2 * n)), tuple(range(n)), 2 * n, 2 * n + 1)
    circ.x(2 * n)
    hits = 0
    for j in range(1 << n):
        basis = code | (j << n)
        out = permutation_map(circ, basis)
        if (out >> (2 * n)) & 1 == 0:
            hits += 1
    return Fraction(hits, 1 << n)


# ---------------------------------------------------------------------------
# rotation-based encoding


def build_u_sin(fmt: FixedPointFormat) -> BlockEncoding:
    """n controlled Ry rotations encoding sin(x) into one ancilla."""
    n = fmt.n_bits
    circ = Circuit(n + 1)
    rv = circ.add_register("value", n, fmt)
    ranc = circ.add_register("anc", 1)
    anc = ranc.qubits[0]
    circ.ry(anc, math.pi)
    for i, q in enumerate(rv.qubits):
        weight = fmt.resolution * (1 << i)
        circ.cry(q, anc, -2.0 * weight)
    return BlockEncoding(
        circuit=circ,
        value_qubits=rv.qubits,
        in_pattern=ranc.qubits,
        out_pattern=ranc.qubits,
        scale_bits=0,
    )


def u_sin_amplitude(fmt: FixedPointFormat, code: int) -> float:
    x = code * fmt.resolution
    return math.sin(x)


# ---------------------------------------------------------------------------
# projector-controlled rotations


def emit_projector_rotation(circ: Circuit, pattern: tuple[int, ...], phi: float,
                            flag: int | None = None) -> None:
    """e^{i phi (2 Pi - I)} for the all-zeros projector on ``pattern``."""
    if not pattern:
        raise BuildError("projector needs a nonempty qubit subset")
    if len(pattern) == 1:
        circ.zphase(pattern[0], -phi)
        return
    if flag is None:
        raise BuildError("multi-qubit projector rotation needs a flag ancilla")
    circ.mcx(pattern, flag, (0,) * len(pattern))
    circ.zphase(flag, phi)
    circ.mcx(pattern, flag, (0,) * len(pattern))


def build_projector_rotation(n_pattern: int, phi: float) -> Circuit:
    """Standalone rotation; layout: pattern qubits then flag (if needed)."""
    extra = 1 if n_pattern > 1 else 0
    circ = Circuit(n_pattern + extra)
    rp = circ.add_register("pattern", n_pattern)
    flag = None
    if extra:
        rf = circ.add_register("flag", 1)
        flag = rf.qubits[0]
        circ.restored_ancillas = rf.qubits
    emit_projector_rotation(circ, rp.qubits, phi, flag)
    return circ


def _emit_signed_zphase(circ: Circuit, target: int, phi: float,
                        gate_qubit: int | None) -> None:
    """zphase(phi) on target, optionally only when gate_qubit is |1>."""
    if gate_qubit is None:
        circ.zphase(target, phi)
    else:
        circ.zphase(target, phi / 2.0)
        circ.cnot(gate_qubit, target)
        circ.zphase(target, -phi / 2.0)
        circ.cnot(gate_qubit, target)


def emit_controlled_projector_rotation(
    circ: Circuit,
    pattern: tuple[int, ...],
    phi: float,
    control: int,
    flag: int | None = None,
    gate_qubit: int | None = None,
) -> None:
    """Apply e^{+i phi (2 Pi - I)} when control=|0> and the -phi version when
    control=|1>, i.e. exp(-i phi Z_flag Z_control) after the pattern flag."""
    if len(pattern) == 1:
        q = pattern[0]
        circ.cnot(q, control)
        _emit_signed_zphase(circ, control, -phi, gate_qubit)
        circ.cnot(q, control)
        return
    if flag is None:
        raise BuildError("multi-qubit projector rotation needs a flag ancilla")
    circ.mcx(pattern, flag, (0,) * len(pattern))
    circ.cnot(flag, control)
    _emit_signed_zphase(circ, control, phi, gate_qubit)
    circ.cnot(flag, control)
    circ.mcx(pattern, flag, (0,) * len(pattern))


# ---------------------------------------------------------------------------
# the full QSP operator


def circuit_angles(phases: PhaseFactors) -> list[float]:
    """Projector-rotation angles realizing the stored wx-convention phases."""
    d = len(phases.phases)
    psi = [p - math.pi / 2.0 for p in phases.phases]
    psi[0] += d * math.pi / 2.0
    return psi


def emit_qsp(
    circ: Circuit,
    u: Circuit,
    in_pattern: tuple[int, ...],
    out_pattern: tuple[int, ...],
    phases: PhaseFactors,
    control: int,
    flag: int | None = None,
    gate_qubit: int | None = None,
) -> ProjectorSpec:
    """Interleave U / U-adjoint with sign-selected projector rotations.

    Returns the success projector: input pattern for even degree, output
    pattern for odd degree, always joined with the control qubit.  When
    ``gate_qubit`` is given the rotations only fire on its |1> branch, so the
    whole operator collapses to the identity elsewhere; that requires an even
    degree (U applications must cancel in pairs).
    """
    d = len(phases.phases)
    if d < 1:
        raise BuildError("QSP needs at least one phase")
    if gate_qubit is not None and d % 2 == 1:
        raise BuildError("gated QSP needs an even degree")
    psi = circuit_angles(phases)
    u_adj = u.adjoint()
    circ.h(control)
    for j in range(1, d + 1):
        block = u if j % 2 == 1 else u_adj
        circ.extend(block.gates)
        pattern = out_pattern if j % 2 == 1 else in_pattern
        emit_controlled_projector_rotation(
            circ, pattern, psi[d - j], control, flag, gate_qubit
        )
    circ.h(control)
    success = in_pattern if d % 2 == 0 else out_pattern
    return ProjectorSpec.zeros(tuple(success) + (control,))


def build_qsp(block: BlockEncoding, phases: PhaseFactors) -> tuple[Circuit, ProjectorSpec]:
    """Standalone QSP operator around a block encoding.

    Appends a control qubit (and a pattern flag when the input projector
    spans several qubits) to the block's own register layout.
    """
    base = block.circuit
    need_flag = len(block.in_pattern) > 1 or len(block.out_pattern) > 1
    width = base.n_qubits + 1 + (1 if need_flag else 0)
    circ = Circuit(width)
    circ.registers = dict(base.registers)
    control = base.n_qubits
    flag = base.n_qubits + 1 if need_flag else None
    restored = list(base.restored_ancillas)
    if flag is not None:
        restored.append(flag)
    circ.restored_ancillas = tuple(restored)
    success = emit_qsp(circ, base, block.in_pattern, block.out_pattern,
                       phases, control, flag)
    return circ, success


# ---------------------------------------------------------------------------
# amplitude amplification iterate


def emit_phase_flip(circ: Circuit, pattern: ProjectorSpec, flag: int) -> None:
    """-1 on the pattern subspace (up to a global phase)."""
    circ.mcx(pattern.qubits, flag, pattern.values)
    circ.zphase(flag, math.pi / 2.0)
    circ.mcx(pattern.qubits, flag, pattern.values)


def build_grover_q(a: Circuit, good: ProjectorSpec) -> Circuit:
    """Amplitude-amplification iterate Q = A S_0 A-adjoint S_good.

    One extra qubit serves as the reflection flag.  Global phase is not
    normalized; probabilities follow sin^2((2k+1) theta) exactly.
    """
    width = a.n_qubits + 1
    circ = Circuit(width)
    circ.registers = dict(a.registers)
    flag = a.n_qubits
    circ.restored_ancillas = (flag,)
    emit_phase_flip(circ, good, flag)
    circ.extend(a.adjoint().gates)
    emit_phase_flip(circ, ProjectorSpec.zeros(range(a.n_qubits)), flag)
    circ.extend(a.gates)
    return circ
