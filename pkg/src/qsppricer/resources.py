"""Clifford+T accounting over the gate IR.

Cost model:
  * Toffoli: T-count 7, T-depth 1 (ancilla-assisted decomposition).
  * Multi-controlled X with k controls: a ladder of 2(k-2)+1 Toffolis
    (k-2 ancillas), counted serially.
  * Arbitrary-angle rotations (ry, cry, zphase): T-count and T-depth both
    ceil(3 * log2(1 / eps_R)); a controlled rotation counts as one synthesis
    unit.  Angles landing on Clifford multiples are free.
  * Everything else Clifford, free.
  * Composite gates with declared GateCosts resolve against the same
    constants; composites without metadata are expanded.

T-depth is as-late-as-possible layering over the gate list: a gate starts at
the largest busy-depth among its operands and advances all of them by its own
depth.  Clifford gates are transparent.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .ir import Circuit, Gate


class AccountingError(ValueError):
    """Gate kind or parameters outside the cost model."""


@dataclass(frozen=True)
class ResourceCount:
    t_count: int
    t_depth: int
    logical_qubits: int

    def __post_init__(self) -> None:
        if min(self.t_count, self.t_depth, self.logical_qubits) < 0:
            raise ValueError("resource counts must be nonnegative")
        if self.t_depth > self.t_count:
            raise ValueError("T-depth cannot exceed T-count")

    def to_json(self) -> str:
        return json.dumps(
            {"t_count": self.t_count, "t_depth": self.t_depth,
             "logical_qubits": self.logical_qubits},
            sort_keys=True,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ResourceCount":
        return cls(int(d["t_count"]), int(d["t_depth"]), int(d["logical_qubits"]))


@dataclass(frozen=True)
class CostRules:
    toffoli_t_count: int = 7
    toffoli_t_depth: int = 1
    rotation_epsilon: float = 1e-10
    clifford_angle_tol: float = 1e-12

    def rotation_t(self) -> int:
        if not 0 < self.rotation_epsilon < 1:
            raise AccountingError(f"rotation epsilon must be in (0,1), got {self.rotation_epsilon}")
        return math.ceil(3.0 * math.log2(1.0 / self.rotation_epsilon))

    @classmethod
    def from_dict(cls, d: dict) -> "CostRules":
        return cls(
            toffoli_t_count=int(d.get("toffoli_t_count", 7)),
            toffoli_t_depth=int(d.get("toffoli_t_depth", 1)),
            rotation_epsilon=float(d.get("rotation_epsilon", 1e-10)),
        )


def rotation_t_depth(eps_r: float) -> int:
    """Synthesis T-depth of a single rotation at precision eps_r."""
    return math.ceil(3.0 * math.log2(1.0 / eps_r))


def _is_clifford_angle(angle: float, period: float, tol: float) -> bool:
    r = angle % period
    return min(r, period - r) <= tol


def _gate_cost(gate: Gate, rules: CostRules) -> tuple[int, int]:
    """(t_count, t_depth) of one gate."""
    kind = gate.kind
    if kind in ("h", "x", "cnot"):
        return 0, 0
    if kind == "toffoli":
        return rules.toffoli_t_count, rules.toffoli_t_depth
    if kind == "mcx":
        k = len(gate.qubits) - 1
        if k <= 1:
            return 0, 0
        ladder = 2 * (k - 2) + 1
        return ladder * rules.toffoli_t_count, ladder * rules.toffoli_t_depth
    if kind == "zphase":
        # zphase(phi) is Rz(2 phi); Clifford when phi is a multiple of pi/4
        if _is_clifford_angle(gate.params[0], math.pi / 4.0, rules.clifford_angle_tol):
            return 0, 0
        r = rules.rotation_t()
        return r, r
    if kind in ("ry", "cry"):
        if _is_clifford_angle(gate.params[0], math.pi / 2.0, rules.clifford_angle_tol):
            return 0, 0
        r = rules.rotation_t()
        return r, r
    if kind == "composite":
        if gate.costs is not None:
            c = gate.costs
            r = rules.rotation_t() if c.rotation_count else 0
            count = c.toffoli_count * rules.toffoli_t_count + c.rotation_count * r
            depth = c.toffoli_depth * rules.toffoli_t_depth + c.rotation_depth * r
            return count, depth
        return None  # expand
    raise AccountingError(f"no cost rule for gate kind {kind!r}")


def _mcx_ancillas(gate: Gate) -> int:
    if gate.kind != "mcx":
        return 0
    return max(len(gate.qubits) - 3, 0)


def count_resources(circuit: Circuit, rules: CostRules | None = None) -> ResourceCount:
    if rules is None:
        rules = CostRules()
    t_count = 0
    depth: dict[int, int] = {}
    has_toffoli = False
    max_mcx_anc = 0

    def visit(gate: Gate, mapping: tuple[int, ...] | None) -> None:
        nonlocal t_count, has_toffoli, max_mcx_anc
        qubits = gate.qubits if mapping is None else tuple(mapping[q] for q in gate.qubits)
        cost = _gate_cost(gate, rules)
        if cost is None:
            for sub in gate.body.gates:
                visit(sub, qubits)
            return
        gc, gd = cost
        if gate.kind == "toffoli" or (gate.kind == "mcx" and len(gate.qubits) >= 3):
            has_toffoli = True
        if gate.kind == "composite" and gate.costs and gate.costs.toffoli_count:
            has_toffoli = True
        max_mcx_anc = max(max_mcx_anc, _mcx_ancillas(gate))
        t_count += gc
        start = max((depth.get(q, 0) for q in qubits), default=0)
        for q in qubits:
            depth[q] = start + gd

    for gate in circuit.gates:
        visit(gate, None)

    t_depth = max(depth.values(), default=0)
    extra = (1 if has_toffoli else 0) + max_mcx_anc
    return ResourceCount(t_count, t_depth, circuit.n_qubits + extra)
