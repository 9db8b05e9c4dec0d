"""Dense statevector execution of circuits, plus an exact basis-permutation
path for reversible-logic checks.

Little-endian indexing throughout: qubit k is bit k of the amplitude index.
Gate application works on reshaped views of the amplitude array, so each gate
costs one pass over the 2^w amplitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ir import Circuit, Gate

DEFAULT_WIDTH_CAP = 26
_SQRT_HALF = 1.0 / math.sqrt(2.0)


class CapacityError(RuntimeError):
    """Requested width exceeds the configured simulator cap."""


@dataclass(frozen=True)
class ProjectorSpec:
    """Required bit values on a qubit subset (e.g. the success pattern)."""

    qubits: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.qubits) != len(self.values):
            raise ValueError("one required value per qubit")

    @classmethod
    def zeros(cls, qubits) -> "ProjectorSpec":
        qs = tuple(qubits)
        return cls(qs, (0,) * len(qs))


@dataclass
class StateVector:
    amps: np.ndarray
    n_qubits: int

    @classmethod
    def zero_state(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, n_qubits)

    @classmethod
    def basis_state(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.n_qubits)


def _view(amps: np.ndarray, w: int) -> np.ndarray:
    return amps.reshape([2] * w)


def _axis(q: int, w: int) -> int:
    return w - 1 - q


def _slicer(w: int, fixed: dict[int, int]) -> tuple:
    idx: list = [slice(None)] * w
    for q, v in fixed.items():
        idx[_axis(q, w)] = v
    return tuple(idx)


def _apply_gate(amps: np.ndarray, w: int, gate: Gate) -> None:
    v = _view(amps, w)
    kind = gate.kind
    if kind == "h":
        q = gate.qubits[0]
        a0 = v[_slicer(w, {q: 0})].copy()
        a1 = v[_slicer(w, {q: 1})]
        v[_slicer(w, {q: 0})] = (a0 + a1) * _SQRT_HALF
        v[_slicer(w, {q: 1})] = (a0 - a1) * _SQRT_HALF
    elif kind == "x":
        q = gate.qubits[0]
        a0 = v[_slicer(w, {q: 0})].copy()
        v[_slicer(w, {q: 0})] = v[_slicer(w, {q: 1})]
        v[_slicer(w, {q: 1})] = a0
    elif kind in ("cnot", "toffoli", "mcx"):
        *controls, target = gate.qubits
        pol = gate.ctrl_state if kind == "mcx" else (1,) * len(controls)
        fixed = {c: p for c, p in zip(controls, pol)}
        s0 = _slicer(w, {**fixed, target: 0})
        s1 = _slicer(w, {**fixed, target: 1})
        tmp = v[s0].copy()
        v[s0] = v[s1]
        v[s1] = tmp
    elif kind == "zphase":
        q = gate.qubits[0]
        phi = gate.params[0]
        v[_slicer(w, {q: 0})] *= np.exp(-1j * phi)
        v[_slicer(w, {q: 1})] *= np.exp(1j * phi)
    elif kind in ("ry", "cry"):
        theta = gate.params[0]
        c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
        if kind == "ry":
            target = gate.qubits[0]
            fixed: dict[int, int] = {}
        else:
            ctrl, target = gate.qubits
            fixed = {ctrl: 1}
        s0 = _slicer(w, {**fixed, target: 0})
        s1 = _slicer(w, {**fixed, target: 1})
        a0 = v[s0].copy()
        a1 = v[s1]
        v[s0] = c * a0 - s * a1
        v[s1] = s * a0 + c * a1
    elif kind == "composite":
        mapping = gate.qubits
        for sub in gate.body.gates:
            _apply_gate(amps, w, _remap(sub, mapping))
    else:
        raise ValueError(f"cannot simulate gate kind {kind!r}")


def _remap(gate: Gate, mapping: tuple[int, ...]) -> Gate:
    return Gate(gate.kind, tuple(mapping[q] for q in gate.qubits), gate.params,
                gate.ctrl_state, gate.name, gate.body, gate.costs)


def run(
    circuit: Circuit,
    initial: StateVector | None = None,
    width_cap: int = DEFAULT_WIDTH_CAP,
    check_norm: bool = False,
) -> StateVector:
    """Apply the circuit's gates in order to ``initial`` (default |0...0>)."""
    if circuit.n_qubits > width_cap:
        raise CapacityError(
            f"{circuit.n_qubits} qubits exceed the width cap {width_cap}"
        )
    state = StateVector.zero_state(circuit.n_qubits) if initial is None else initial.copy()
    if state.n_qubits != circuit.n_qubits:
        raise ValueError("initial state width does not match circuit")
    for gate in circuit.gates:
        _apply_gate(state.amps, state.n_qubits, gate)
        if check_norm:
            n = state.norm()
            if abs(n - 1.0) > 1e-12:
                raise AssertionError(f"norm drifted to {n} after {gate.kind}")
    return state


def probability(state: StateVector, projector: ProjectorSpec) -> float:
    """Total probability of basis states matching the projector pattern."""
    w = state.n_qubits
    for q in projector.qubits:
        if not 0 <= q < w:
            raise ValueError(f"projector qubit {q} outside width {w}")
    v = _view(state.amps, w)
    sub = v[_slicer(w, dict(zip(projector.qubits, projector.values)))]
    return float(np.sum(np.abs(sub) ** 2))


def pattern_amplitude(state: StateVector, fixed: dict[int, int]) -> np.ndarray:
    """Amplitude block with the given qubits fixed (debug/verification aid)."""
    return _view(state.amps, state.n_qubits)[_slicer(state.n_qubits, fixed)].copy()


def inject_distribution(
    probs: np.ndarray,
    register_qubits: tuple[int, ...],
    n_qubits: int,
) -> StateVector:
    """State with amplitude sqrt(p_i) on register basis state i, ancillas |0>."""
    probs = np.asarray(probs, dtype=float)
    if len(probs) != 1 << len(register_qubits):
        raise ValueError("need one probability per register basis state")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    for code, p in enumerate(probs):
        if p == 0.0:
            continue
        idx = 0
        for bit, q in enumerate(register_qubits):
            if (code >> bit) & 1:
                idx |= 1 << q
        amps[idx] = math.sqrt(p)
    return StateVector(amps, n_qubits)


# ---------------------------------------------------------------------------
# exact path for reversible logic


def permutation_map(circuit: Circuit, basis_in: int) -> int:
    """Exact image of a computational basis state under an X-type circuit.

    Raises if the circuit contains amplitude-mixing gates; phases are also
    rejected since a basis state would pick up a sign this map cannot carry.
    """
    state = basis_in
    for gate in circuit.flat_gates():
        if gate.kind == "x":
            state ^= 1 << gate.qubits[0]
        elif gate.kind in ("cnot", "toffoli", "mcx"):
            *controls, target = gate.qubits
            pol = gate.ctrl_state if gate.kind == "mcx" else (1,) * len(controls)
            if all(((state >> c) & 1) == p for c, p in zip(controls, pol)):
                state ^= 1 << target
        else:
            raise ValueError(f"{gate.kind} is not a basis permutation gate")
    return state


def circuit_unitary(circuit: Circuit, width_cap: int = 12) -> np.ndarray:
    """Dense matrix by column simulation; guarded to small widths."""
    if circuit.n_qubits > width_cap:
        raise CapacityError(f"unitary extraction capped at {width_cap} qubits")
    dim = 1 << circuit.n_qubits
    u = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        state = run(circuit, StateVector.basis_state(circuit.n_qubits, col))
        u[:, col] = state.amps
    return u
