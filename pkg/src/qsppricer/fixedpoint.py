"""Fixed-point register formats and the value <-> bitstring codec.

A register of ``n_bits`` qubits stores a scalar with ``int_bits`` digits to
the left of the binary point.  Unsigned registers cover ``[0, 2**int_bits)``;
signed registers use two's complement and cover
``[-2**(int_bits-1), 2**(int_bits-1))``.  An optional classical ``shift``
records an offset that was added to the raw value before encoding, so a
register can also represent biased quantities like ``r + s``.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FixedPointFormat:
    """Layout of a fixed-point register.

    Attributes:
        n_bits: total register width in qubits.
        int_bits: digits to the left of the binary point (0 <= int_bits <= n_bits).
        signed: two's complement interpretation when True.
        shift: classical offset applied before encoding (>= 0, 0 when unused).
    """

    n_bits: int
    int_bits: int
    signed: bool = False
    shift: float = 0.0

    def __post_init__(self) -> None:
        if self.n_bits < 1:
            raise ValueError(f"register width must be >= 1, got {self.n_bits}")
        if not 0 <= self.int_bits <= self.n_bits:
            raise ValueError(
                f"int_bits must lie in [0, n_bits], got {self.int_bits} for width {self.n_bits}"
            )
        if self.shift < 0:
            raise ValueError(f"shift must be >= 0, got {self.shift}")

    @property
    def resolution(self) -> float:
        return 2.0 ** (self.int_bits - self.n_bits)

    @property
    def min_value(self) -> float:
        lo = -(2.0 ** (self.int_bits - 1)) if self.signed else 0.0
        return lo - self.shift

    @property
    def max_value(self) -> float:
        """Largest representable value (inclusive)."""
        hi = 2.0 ** self.int_bits if not self.signed else 2.0 ** (self.int_bits - 1)
        return hi - self.resolution - self.shift

    def decode(self, code: int) -> float:
        """Value stored by an n-bit integer code, after removing the shift."""
        if not 0 <= code < (1 << self.n_bits):
            raise ValueError(f"code {code} out of range for {self.n_bits}-bit register")
        raw = code
        if self.signed and (code >> (self.n_bits - 1)) & 1:
            raw = code - (1 << self.n_bits)
        return raw * self.resolution - self.shift

    def encode(self, value: float) -> int:
        """Integer code of a value; the value must sit exactly on the grid."""
        scaled = (value + self.shift) / self.resolution
        code = round(scaled)
        if abs(scaled - code) > 1e-9:
            raise ValueError(f"{value} is not representable on the {self} grid")
        if self.signed:
            lo, hi = -(1 << (self.n_bits - 1)), (1 << (self.n_bits - 1)) - 1
            if not lo <= code <= hi:
                raise ValueError(f"{value} outside signed range of {self}")
            return code & ((1 << self.n_bits) - 1)
        if not 0 <= code < (1 << self.n_bits):
            raise ValueError(f"{value} outside unsigned range of {self}")
        return code

    def snap_down(self, value: float) -> float:
        """Largest on-grid value <= value (ignoring range clipping)."""
        import math

        scaled = (value + self.shift) / self.resolution
        return math.floor(scaled + 1e-12) * self.resolution - self.shift

    def all_values(self) -> list[float]:
        return [self.decode(c) for c in range(1 << self.n_bits)]
