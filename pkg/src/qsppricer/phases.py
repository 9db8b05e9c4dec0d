"""Phase factors realizing a definite-parity polynomial as a QSP amplitude.

Convention ("wx-real-pm"): for phases (phi_1..phi_d) and signal value
``a = cos(theta)`` the realized value is

    value(a) = Re <0| e^{i phi_1 Z} W(a) e^{i phi_2 Z} W(a) ... e^{i phi_d Z} W(a) |0>

with ``W(a) = [[a, i sqrt(1-a^2)], [i sqrt(1-a^2), a]]``.  The real part is
what the full interferometric circuit produces: it runs the +phi and -phi
sequences selected by a Hadamard-conjugated control qubit, and the two
branches are complex conjugates of each other.  All-zero phases therefore
realize the Chebyshev polynomial T_d(a) exactly.

Phase finding is least-squares over the d free angles at Chebyshev-node
samples, Levenberg-Marquardt with the analytic Jacobian, started from the
configuration realizing ``c_lead * T_d`` (arccos of the leading coefficient
on the first angle).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .polyapprox import ChebyshevPolynomial

CONVENTION = "wx-real-pm"
_MAX_RESTARTS = 6


class NormViolationError(ValueError):
    """Polynomial magnitude exceeds 1 somewhere on [-1, 1]."""


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"phase optimization stalled at residual {residual:.3e} (tol {tol:.1e})")
        self.residual = residual


@dataclass(frozen=True)
class PhaseFactors:
    """Ordered phases plus the convention tag and the synthesis residual."""

    phases: tuple[float, ...]
    convention: str = CONVENTION
    residual: float = float("nan")

    def __len__(self) -> int:
        return len(self.phases)

    def to_json(self) -> str:
        return json.dumps(
            {"convention": self.convention, "phases": list(self.phases), "residual": self.residual},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PhaseFactors":
        d = json.loads(text)
        return cls(tuple(d["phases"]), d["convention"], d["residual"])


@dataclass(frozen=True)
class SU2Trace:
    a: float
    value: complex


def _sequence_values(phases: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Re <0|prod_k e^{i phi_k Z} W(a)|0> for each sample, vectorized over a."""
    s = np.sqrt(np.clip(1.0 - a * a, 0.0, None))
    w00 = a.astype(complex)
    w01 = 1j * s
    e = np.exp(1j * phases)
    m00 = np.ones_like(w00)
    m01 = np.zeros_like(w00)
    m10 = np.zeros_like(w00)
    m11 = np.ones_like(w00)
    # accumulate left-to-right: M <- M @ (E(phi_k) W)
    for ek in e:
        b00 = ek * w00
        b01 = ek * w01
        b10 = np.conj(ek) * w01
        b11 = np.conj(ek) * w00
        n00 = m00 * b00 + m01 * b10
        n01 = m00 * b01 + m01 * b11
        n10 = m10 * b00 + m11 * b10
        n11 = m10 * b01 + m11 * b11
        m00, m01, m10, m11 = n00, n01, n10, n11
    return m00.real


def _sequence_values_grad(phases: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and d(value)/d(phi_k); suffix products reused across k."""
    d = len(phases)
    m = len(a)
    s = np.sqrt(np.clip(1.0 - a * a, 0.0, None))
    w00 = a.astype(complex)
    w01 = 1j * s
    e = np.exp(1j * phases)

    suf00 = np.empty((d + 1, m), complex)
    suf01 = np.empty((d + 1, m), complex)
    suf10 = np.empty((d + 1, m), complex)
    suf11 = np.empty((d + 1, m), complex)
    suf00[d] = 1.0
    suf01[d] = 0.0
    suf10[d] = 0.0
    suf11[d] = 1.0
    for k in range(d - 1, -1, -1):
        b00 = e[k] * w00
        b01 = e[k] * w01
        b10 = np.conj(e[k]) * w01
        b11 = np.conj(e[k]) * w00
        suf00[k] = b00 * suf00[k + 1] + b01 * suf10[k + 1]
        suf01[k] = b00 * suf01[k + 1] + b01 * suf11[k + 1]
        suf10[k] = b10 * suf00[k + 1] + b11 * suf10[k + 1]
        suf11[k] = b10 * suf01[k + 1] + b11 * suf11[k + 1]
    values = suf00[0].real

    # d/dphi_k inserts iZ before the k-th block: Re[i (P_{k-1} Z S_k)_{00}]
    grad = np.empty((m, d))
    p00 = np.ones(m, complex)
    p01 = np.zeros(m, complex)
    for k in range(d):
        grad[:, k] = -np.imag(p00 * suf00[k] - p01 * suf10[k])
        b00 = e[k] * w00
        b01 = e[k] * w01
        b10 = np.conj(e[k]) * w01
        b11 = np.conj(e[k]) * w00
        n00 = p00 * b00 + p01 * b10
        n01 = p00 * b01 + p01 * b11
        p00, p01 = n00, n01
    return values, grad


def su2_eval(phases: PhaseFactors, a: float) -> complex:
    """Realized polynomial value at signal ``a`` from the 2x2 reduction."""
    if abs(a) > 1.0 + 1e-12:
        raise ValueError(f"signal value {a} outside [-1, 1]")
    val = _sequence_values(np.asarray(phases.phases, dtype=float), np.array([float(a)]))
    return complex(val[0])


def polynomial_max_abs(poly: ChebyshevPolynomial, n_samples: int = 4001) -> float:
    xs = np.linspace(-1.0, 1.0, n_samples)
    return float(np.max(np.abs(poly.eval(xs))))


def find_phases(poly: ChebyshevPolynomial, tol: float = 1e-8, seed: int = 0) -> PhaseFactors:
    """Compute phases whose realized amplitude matches ``poly`` within ``tol``.

    Raises NormViolationError if max|P| > 1 on [-1, 1], and ConvergenceError
    (carrying the best residual) if no restart reaches the tolerance.  The
    restart perturbations draw from a generator seeded with ``seed``, so the
    result is reproducible.
    """
    d = poly.degree
    if d < 1:
        raise ValueError("QSP sequence needs degree >= 1")
    if polynomial_max_abs(poly) > 1.0 + 1e-12:
        raise NormViolationError(
            f"max|P| = {polynomial_max_abs(poly):.9f} exceeds 1; refit with a smaller cap"
        )

    n_nodes = d + 50
    a = np.cos(np.linspace(0.0, np.pi / 2, n_nodes))
    targets = poly.eval(a)

    lead = float(np.clip(poly.coeffs[-1], -1.0, 1.0))
    init = np.zeros(d)
    init[0] = math.acos(lead)
    rng = np.random.default_rng(seed)

    best_phases, best_dev = None, math.inf
    for attempt in range(_MAX_RESTARTS):
        x0 = init if attempt == 0 else init + rng.normal(0.0, 0.05 * attempt, d)
        res = least_squares(
            lambda p: _sequence_values_grad(p, a)[0] - targets,
            x0,
            jac=lambda p: _sequence_values_grad(p, a)[1],
            method="lm",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        dev = float(np.max(np.abs(_sequence_values(res.x, a) - targets)))
        if dev < best_dev:
            best_phases, best_dev = res.x, dev
        if best_dev <= tol:
            break
    if best_dev > tol:
        raise ConvergenceError(best_dev, tol)
    return PhaseFactors(tuple(float(p) for p in best_phases), CONVENTION, best_dev)


@dataclass(frozen=True)
class VerifyReport:
    max_dev: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps({"max_dev": self.max_dev, "pass": self.passed}, sort_keys=True)


def verify_phases(
    phases: PhaseFactors,
    poly: ChebyshevPolynomial,
    n_samples: int = 1000,
    tol: float = 1e-7,
) -> VerifyReport:
    """Max deviation | |realized| - |P| | over uniform samples of [0, 1]."""
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    xs = np.linspace(0.0, 1.0, n_samples)
    realized = _sequence_values(np.asarray(phases.phases, dtype=float), xs)
    dev = float(np.max(np.abs(np.abs(realized) - np.abs(poly.eval(xs)))))
    return VerifyReport(dev, dev <= tol)
