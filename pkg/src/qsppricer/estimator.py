"""End-to-end fault-tolerant resource arithmetic.

Totals multiply a per-iterate resource row by the worst-case oracle-query
count of iterative amplitude estimation,

    N(eps, alpha) = floor( (1.4/eps) * ln( (2/alpha) * log2(pi/(4 eps)) ) ),

truncated to an integer.  The published per-iterate rows for the three
payoff-encoding methods are bundled so the headline totals and clock rates
can be reproduced without rebuilding the full pipeline.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .resources import ResourceCount


@dataclass(frozen=True)
class MethodRow:
    """Per-iterate resources of one payoff-encoding method."""

    label: str
    per_q: ResourceCount

    def __post_init__(self) -> None:
        if min(self.per_q.t_count, self.per_q.t_depth, self.per_q.logical_qubits) <= 0:
            raise ValueError(f"method row {self.label!r} needs positive entries")


# Published per-iterate rows: lookup-table arithmetic baseline and the two
# rotation/comparator encodings (including the distribution-loading block).
TABLE1_ROWS = (
    MethodRow("Arithmetic", ResourceCount(t_count=6_600_000, t_depth=36_000, logical_qubits=19_200)),
    MethodRow("QSP-U_sin", ResourceCount(t_count=605_000, t_depth=75_000, logical_qubits=4_700)),
    MethodRow("QSP-U_sqrt", ResourceCount(t_count=414_000, t_depth=7_800, logical_qubits=4_700)),
)


def iqae_query_count(eps: float, alpha: float) -> int:
    """Worst-case oracle queries to estimate an amplitude within eps at
    confidence 1 - alpha."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    bound = (1.4 / eps) * math.log((2.0 / alpha) * math.log2(math.pi / (4.0 * eps)))
    return int(bound)


def rotation_budget(eps_total: float, d: int, n: int) -> float:
    """Per-rotation synthesis precision when d*n rotations share the budget."""
    if eps_total <= 0 or d <= 0 or n <= 0:
        raise ValueError("rotation budget needs positive inputs")
    return eps_total / (d * n)


@dataclass(frozen=True)
class AdvantageReport:
    label: str
    n_queries: int
    total_t_depth: int
    total_t_count: int
    logical_qubits: int
    clock_rate_hz: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "label": self.label,
                "n_queries": self.n_queries,
                "total_t_depth": self.total_t_depth,
                "total_t_count": self.total_t_count,
                "logical_qubits": self.logical_qubits,
                "clock_rate_hz": self.clock_rate_hz,
            },
            sort_keys=True,
        )


def advantage_report(
    row: MethodRow, eps: float, alpha: float, classical_time_s: float = 1.0
) -> AdvantageReport:
    """Totals and the T-gate clock rate matching a classical baseline."""
    if classical_time_s <= 0:
        raise ValueError("classical baseline time must be positive")
    n = iqae_query_count(eps, alpha)
    total_depth = n * row.per_q.t_depth
    return AdvantageReport(
        label=row.label,
        n_queries=n,
        total_t_depth=total_depth,
        total_t_count=n * row.per_q.t_count,
        logical_qubits=row.per_q.logical_qubits,
        clock_rate_hz=total_depth / classical_time_s,
    )


def compare_methods(
    rows: tuple[MethodRow, ...] | list[MethodRow], baseline_label: str = "Arithmetic"
) -> dict[str, dict[str, float]]:
    """Per-resource ratios baseline/candidate (>1 means the candidate wins)."""
    if len(rows) < 2:
        raise ValueError("need a baseline and at least one candidate")
    by_label = {r.label: r for r in rows}
    if baseline_label not in by_label:
        raise ValueError(f"baseline {baseline_label!r} not among rows")
    base = by_label[baseline_label].per_q
    out: dict[str, dict[str, float]] = {}
    for row in rows:
        out[row.label] = {
            "t_depth": base.t_depth / row.per_q.t_depth,
            "t_count": base.t_count / row.per_q.t_count,
            "logical_qubits": base.logical_qubits / row.per_q.logical_qubits,
        }
    return out


def markdown_table(
    rows: tuple[MethodRow, ...] | list[MethodRow], baseline_label: str = "Arithmetic"
) -> str:
    """Comparison table with the per-resource improvement of the last row."""
    ratios = compare_methods(rows, baseline_label)
    best = rows[-1].label
    header = "| Resource | " + " | ".join(r.label for r in rows) + " | Improvement |"
    sep = "|" + "---|" * (len(rows) + 2)
    lines = [header, sep]
    for field, name in (("t_depth", "T-depth"), ("t_count", "T-count"),
                        ("logical_qubits", "# Qubits")):
        vals = " | ".join(f"{getattr(r.per_q, field):,}" for r in rows)
        lines.append(f"| {name} | {vals} | {ratios[best][field]:.1f}x |")
    return "\n".join(lines)


def rows_from_json(text: str) -> list[MethodRow]:
    data = json.loads(text)
    return [MethodRow(d["label"], ResourceCount.from_dict(d)) for d in data]
