"""Gate-level circuit representation shared by the simulator and the
resource accountant.

Qubit order is little-endian: qubit k holds bit k of a basis-state index.
Gate kinds:

    h, x            single qubit Cliffords
    cnot, toffoli   controlled X with 1 or 2 positive controls
    mcx             controlled X with arbitrary control polarities
    zphase          diag(e^{-i phi}, e^{i phi})
    ry, cry         Y-rotation [[cos t/2, -sin t/2], [sin t/2, cos t/2]], optionally controlled
    composite       named subcircuit with optional declared resource costs

Angles are stored exactly; synthesis precision only enters the resource
rules, never the simulation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

from .fixedpoint import FixedPointFormat

GATE_KINDS = {"h", "x", "cnot", "toffoli", "mcx", "zphase", "ry", "cry", "composite"}


@dataclass(frozen=True)
class GateCosts:
    """Declared Clifford+T structure of a composite gate.

    ``toffoli_depth`` reflects the layering of the construction the composite
    stands for, which may be shallower than the serial expansion used for
    simulation.
    """

    toffoli_count: int
    toffoli_depth: int
    rotation_count: int = 0
    rotation_depth: int = 0


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    ctrl_state: tuple[int, ...] = ()
    name: str = ""
    body: "Circuit | None" = None
    costs: GateCosts | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate operands in {self.kind} gate: {self.qubits}")
        if self.kind == "mcx" and len(self.ctrl_state) != len(self.qubits) - 1:
            raise ValueError("mcx needs one polarity per control qubit")
        if self.kind == "composite" and self.body is None:
            raise ValueError("composite gate needs a body circuit")

    def adjoint(self) -> "Gate":
        if self.kind in ("h", "x", "cnot", "toffoli", "mcx"):
            return self
        if self.kind in ("zphase", "ry", "cry"):
            return Gate(self.kind, self.qubits, tuple(-p for p in self.params),
                        self.ctrl_state, self.name)
        if self.kind == "composite":
            return Gate("composite", self.qubits, self.params, self.ctrl_state,
                        self.name + "_dg", self.body.adjoint(), self.costs)
        raise ValueError(self.kind)


@dataclass(frozen=True)
class Register:
    name: str
    qubits: tuple[int, ...]
    fmt: FixedPointFormat | None = None

    @property
    def width(self) -> int:
        return len(self.qubits)


@dataclass
class Circuit:
    """Ordered gate list over a fixed qubit count, with named registers and
    a manifest of ancillas that must start and end in |0>."""

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    registers: dict[str, Register] = field(default_factory=dict)
    restored_ancillas: tuple[int, ...] = ()

    def add_register(self, name: str, width: int, fmt: FixedPointFormat | None = None) -> Register:
        if name in self.registers:
            raise ValueError(f"register {name!r} already exists")
        used = sum(r.width for r in self.registers.values())
        if used + width > self.n_qubits:
            raise ValueError(f"register {name!r} does not fit in {self.n_qubits} qubits")
        reg = Register(name, tuple(range(used, used + width)), fmt)
        self.registers[name] = reg
        return reg

    def _check(self, qubits: tuple[int, ...]) -> None:
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"qubit {q} out of range for width {self.n_qubits}")

    def append(self, gate: Gate) -> None:
        self._check(gate.qubits)
        self.gates.append(gate)

    def extend(self, gates) -> None:
        for g in gates:
            self.append(g)

    # emitters
    def h(self, q: int) -> None:
        self.append(Gate("h", (q,)))

    def x(self, q: int) -> None:
        self.append(Gate("x", (q,)))

    def cnot(self, control: int, target: int) -> None:
        self.append(Gate("cnot", (control, target)))

    def toffoli(self, c1: int, c2: int, target: int) -> None:
        self.append(Gate("toffoli", (c1, c2, target)))

    def mcx(self, controls: tuple[int, ...], target: int,
            ctrl_state: tuple[int, ...] | None = None) -> None:
        if ctrl_state is None:
            ctrl_state = (1,) * len(controls)
        self.append(Gate("mcx", tuple(controls) + (target,), ctrl_state=tuple(ctrl_state)))

    def zphase(self, q: int, phi: float) -> None:
        self.append(Gate("zphase", (q,), (phi,)))

    def ry(self, q: int, theta: float) -> None:
        self.append(Gate("ry", (q,), (theta,)))

    def cry(self, control: int, target: int, theta: float) -> None:
        self.append(Gate("cry", (control, target), (theta,)))

    def adjoint(self) -> "Circuit":
        out = Circuit(self.n_qubits, registers=dict(self.registers),
                      restored_ancillas=self.restored_ancillas)
        out.gates = [g.adjoint() for g in reversed(self.gates)]
        return out

    def flat_gates(self) -> Iterator[Gate]:
        """Gates with composites expanded to global qubit indices."""
        for g in self.gates:
            if g.kind == "composite":
                mapping = g.qubits
                for sub in g.body.flat_gates():
                    yield Gate(sub.kind, tuple(mapping[q] for q in sub.qubits),
                               sub.params, sub.ctrl_state, sub.name)
            else:
                yield g

    def to_json(self) -> str:
        def gate_dict(g: Gate) -> dict:
            d: dict = {"kind": g.kind, "qubits": list(g.qubits)}
            if g.params:
                d["params"] = list(g.params)
            if g.ctrl_state:
                d["ctrl_state"] = list(g.ctrl_state)
            if g.name:
                d["name"] = g.name
            if g.body is not None:
                d["body"] = json.loads(g.body.to_json())
            if g.costs is not None:
                d["costs"] = {
                    "toffoli_count": g.costs.toffoli_count,
                    "toffoli_depth": g.costs.toffoli_depth,
                    "rotation_count": g.costs.rotation_count,
                    "rotation_depth": g.costs.rotation_depth,
                }
            return d

        return json.dumps(
            {
                "n_qubits": self.n_qubits,
                "gates": [gate_dict(g) for g in self.gates],
                "registers": {
                    name: {"qubits": list(r.qubits)} for name, r in self.registers.items()
                },
                "restored_ancillas": list(self.restored_ancillas),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        data = json.loads(text) if isinstance(text, str) else text

        def parse_gate(d: dict) -> Gate:
            body = cls.from_json(json.dumps(d["body"])) if "body" in d else None
            costs = None
            if "costs" in d:
                costs = GateCosts(**d["costs"])
            return Gate(
                d["kind"], tuple(d["qubits"]), tuple(d.get("params", ())),
                tuple(d.get("ctrl_state", ())), d.get("name", ""), body, costs,
            )

        circ = cls(data["n_qubits"])
        circ.registers = {
            name: Register(name, tuple(r["qubits"])) for name, r in data["registers"].items()
        }
        circ.restored_ancillas = tuple(data.get("restored_ancillas", ()))
        for gd in data["gates"]:
            circ.append(parse_gate(gd))
        return circ
