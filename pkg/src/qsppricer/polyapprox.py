"""Near-minimax Chebyshev approximation of payoff amplitude targets.

The targets all share the shape ``f(x) = sqrt((A*exp(x^2 * 2^p)*exp(-s) - B)/C)``
on ``x in [0, 1]``: the composition of the square-root amplitude produced by the
comparator-based encoding with the exponential payoff map.  The fit is the
discrete minimax problem on Chebyshev nodes,

    min_c  max_j |f(x_j) - P(x_j)|   s.t.  |P(x_j)| <= cap,

with ``P`` a definite-parity Chebyshev series.  It is solved exactly as a
linear program (epigraph form).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.optimize import linprog


class InvalidTargetError(ValueError):
    """Target is not a valid amplitude function on its domain."""


class FitInfeasibleError(RuntimeError):
    """The LP constraint set admits no solution."""


# ---------------------------------------------------------------------------
# targets


@dataclass(frozen=True)
class TargetFunction:
    """Amplitude target ``sqrt((A e^{x^2 2^p} e^{-s} - B)/C)`` on
    ``[x_min, x_max]``.

    The domain is the set of inputs the encoding can actually produce: the
    strike gate keeps part of [0, 1] unreachable (``x_max`` below 1 for the
    capped autocallable clause, ``x_min`` above 0 when the lowest in-the-money
    return sits above the shift origin).  The squared value is evaluated in an
    expm1 form when B > 0 so that errors stay far below the 1e-4 scale of the
    fit metric near the zero of the numerator.
    """

    form: str
    a: float
    b: float
    c: float
    p: int
    s: float
    x_min: float = 0.0
    x_max: float = 1.0
    label: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.p < 0:
            raise InvalidTargetError(f"p must be >= 0, got {self.p}")
        if self.s < 0:
            raise InvalidTargetError(f"s must be >= 0, got {self.s}")
        if self.c <= 0:
            raise InvalidTargetError(f"C must be > 0, got {self.c}")
        if self.b > 0 and self.a <= 0:
            raise InvalidTargetError("A must be positive when B > 0")
        if not 0 <= self.x_min < self.x_max <= 1.0:
            raise InvalidTargetError(
                f"domain [{self.x_min}, {self.x_max}] must sit inside [0, 1]"
            )
        self._validate_range()

    @classmethod
    def general_exp(cls, a: float, b: float, c: float, p: int, s: float,
                    x_max: float = 1.0) -> "TargetFunction":
        return cls("general_exp", a, b, c, p, s, x_max=x_max)

    @classmethod
    def call_clause(
        cls, s0: float, k: float, f_max: float, p: int, s: float,
        x_min: float = 0.0, x_max: float = 1.0,
    ) -> "TargetFunction":
        """European call payoff amplitude: A=S0, B=K, C=f_max.

        The domain bounds follow the encoding: with the f_max of a truncated
        grid the amplitude exceeds 1 beyond the largest representable return,
        and below the strike the payoff argument goes negative, so the fit
        region must stop at both ends.
        """
        if s0 <= 0 or k <= 0 or f_max <= 0:
            raise InvalidTargetError("call clause needs S0, K, f_max > 0")
        return cls("call_clause", s0, k, f_max, p, abs(s), x_min=x_min, x_max=x_max,
                   label={"s0": s0, "k": k, "f_max": f_max})

    @classmethod
    def autocall_clause(cls, k_t: float, p: int, s: float,
                        x_max: float | None = None) -> "TargetFunction":
        """Final autocallable clause ``sqrt(1 - (K_T - e^{x^2 2^p} e^{-s}))``.

        This is the general form with A=1, B=K_T-1, C=1.  The clause is only
        reached for returns below the strike threshold, so the valid domain
        ends at ``x* = sqrt((s + ln K_T)/2^p)`` where the amplitude hits 1;
        by default the domain is capped there.
        """
        if not 0 < k_t <= 1.0:
            raise InvalidTargetError(f"K_T must lie in (0, 1], got {k_t}")
        x_sq = (s + math.log(k_t)) / 2.0 ** p
        x_star = min(1.0, math.sqrt(max(x_sq, 0.0)))
        if x_max is None:
            x_max = x_star
        if x_max <= 0.0:
            raise InvalidTargetError("shift s leaves no valid domain for this K_T")
        return cls("autocall_clause", 1.0, k_t - 1.0, 1.0, p, s,
                   x_max=x_max, label={"k_t": k_t})

    def value_squared(self, x: float) -> float:
        u = x * x * (2.0 ** self.p) - self.s
        if self.b > 0.0:
            # A e^u - B = B expm1(u + ln(A/B)), accurate when A e^u ~ B
            num = self.b * math.expm1(u + math.log(self.a) - math.log(self.b))
        else:
            num = self.a * math.exp(u) - self.b
        return num / self.c

    def __call__(self, x: float) -> float:
        v = self.value_squared(x)
        if v < -1e-9:
            raise InvalidTargetError(f"target is imaginary at x={x}: f^2={v}")
        return math.sqrt(max(v, 0.0))

    def _validate_range(self) -> None:
        xs = np.linspace(self.x_min, self.x_max, 2001)
        vals = np.array([self.value_squared(float(x)) for x in xs])
        if not np.all(np.isfinite(vals)):
            raise InvalidTargetError("target is not finite on its domain")
        if vals.min() < -1e-9 or vals.max() > 1.0 + 1e-9:
            raise InvalidTargetError(
                f"target squared range [{vals.min():.4g}, {vals.max():.4g}] leaves "
                f"[0, 1] on [{self.x_min}, {self.x_max}]"
            )


# ---------------------------------------------------------------------------
# grid and polynomial


@dataclass(frozen=True)
class ChebyshevGrid:
    """Chebyshev nodes ``-cos(j pi/(M-1))`` restricted to [0, 1], ascending."""

    m: int
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def make_grid(m: int) -> ChebyshevGrid:
    if m < 2:
        raise ValueError(f"grid needs at least 2 nodes, got {m}")
    j = np.arange(m)
    pts = -np.cos(j * np.pi / (m - 1))
    pts = pts[pts >= -1e-12]
    pts = np.unique(np.clip(pts, 0.0, 1.0))
    return ChebyshevGrid(m, pts)


@dataclass(frozen=True)
class ChebyshevPolynomial:
    """Definite-parity Chebyshev series.

    Even parity stores coefficients of T_0, T_2, ..., T_degree; odd parity
    stores T_1, T_3, ..., T_degree.  ``cap`` is the magnitude bound used
    during the fit and ``max_err`` the error re-measured on a dense grid.
    """

    parity: str
    degree: int
    coeffs: tuple[float, ...]
    cap: float = 1.0
    max_err: float = float("nan")

    def __post_init__(self) -> None:
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.parity == "even" and self.degree % 2 != 0:
            raise ValueError("even parity needs an even degree")
        if self.parity == "odd" and self.degree % 2 != 1:
            raise ValueError("odd parity needs an odd degree")
        expected = self.degree // 2 + 1 if self.parity == "even" else (self.degree + 1) // 2
        if len(self.coeffs) != expected:
            raise ValueError(
                f"{self.parity} degree-{self.degree} series needs {expected} coefficients, "
                f"got {len(self.coeffs)}"
            )

    def full_coeffs(self) -> np.ndarray:
        """Coefficients of T_0..T_degree with zeros in the wrong-parity slots."""
        full = np.zeros(self.degree + 1)
        if self.parity == "even":
            full[::2] = self.coeffs
        else:
            full[1::2] = self.coeffs
        return full

    def eval(self, x):
        """Clenshaw evaluation; accepts scalars or arrays in [-1, 1]."""
        arr = np.asarray(x, dtype=float)
        if np.any(np.abs(arr) > 1.0 + 1e-12):
            raise ValueError("evaluation point outside [-1, 1]")
        out = _cheb.chebval(arr, self.full_coeffs())
        return float(out) if np.isscalar(x) or arr.ndim == 0 else out

    def __call__(self, x):
        return self.eval(x)

    def to_json(self) -> str:
        return json.dumps(
            {
                "parity": self.parity,
                "degree": self.degree,
                "coeffs": list(self.coeffs),
                "cap": self.cap,
                "max_err": self.max_err,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ChebyshevPolynomial":
        d = json.loads(text)
        return cls(d["parity"], d["degree"], tuple(d["coeffs"]), d["cap"], d["max_err"])


def _basis_matrix(x: np.ndarray, degree: int, parity: str) -> np.ndarray:
    if parity == "even":
        orders = np.arange(0, degree + 1, 2)
    else:
        orders = np.arange(1, degree + 1, 2)
    theta = np.arccos(np.clip(x, -1.0, 1.0))
    return np.cos(np.outer(theta, orders))


# ---------------------------------------------------------------------------
# fit


def fit_minimax(
    target: TargetFunction | Callable[[float], float],
    degree: int,
    parity: str = "even",
    cap: float = 0.999,
    grid_m: int | None = None,
) -> ChebyshevPolynomial:
    """Fit a bounded definite-parity Chebyshev series to ``target``.

    The objective runs over the grid nodes inside the target's domain; the
    magnitude constraint ``|P| <= cap`` is enforced on the whole [0, 1] grid
    so the result stays admissible for phase-factor synthesis.
    """
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    min_deg = 2 if parity == "even" else 1
    if degree < min_deg or degree % 2 != (0 if parity == "even" else 1):
        raise ValueError(f"degree {degree} inconsistent with {parity} parity")
    if not 0.0 < cap <= 1.0:
        raise ValueError(f"cap must lie in (0, 1], got {cap}")
    if grid_m is None:
        grid_m = max(501, 10 * (degree + 1))
    if grid_m < 5 * (degree + 1):
        raise ValueError(f"grid_m={grid_m} too sparse for degree {degree}")

    x_min = getattr(target, "x_min", 0.0)
    x_max = getattr(target, "x_max", 1.0)
    grid = make_grid(grid_m)
    x = grid.points
    basis = _basis_matrix(x, degree, parity)
    in_domain = (x <= x_max + 1e-12) & (x >= x_min - 1e-12)
    if in_domain.sum() < basis.shape[1] + 1:
        raise InvalidTargetError("target domain covers too few grid nodes")
    f_vals = np.array([float(target(xi)) for xi in x[in_domain]])
    if not np.all(np.isfinite(f_vals)):
        raise InvalidTargetError("target evaluation produced non-finite values")

    ncoef = basis.shape[1]
    b_obj = basis[in_domain]
    n_obj = b_obj.shape[0]
    ones = np.ones((n_obj, 1))
    cost = np.zeros(ncoef + 1)
    cost[-1] = 1.0

    def solve(cap_now: float) -> ChebyshevPolynomial:
        a_ub = np.vstack(
            [
                np.hstack([b_obj, -ones]),
                np.hstack([-b_obj, -ones]),
                np.hstack([basis, np.zeros((len(x), 1))]),
                np.hstack([-basis, np.zeros((len(x), 1))]),
            ]
        )
        b_ub = np.hstack(
            [f_vals, -f_vals, np.full(len(x), cap_now), np.full(len(x), cap_now)]
        )
        res = linprog(
            cost,
            A_ub=a_ub,
            b_ub=b_ub,
            bounds=[(None, None)] * ncoef + [(0.0, None)],
            method="highs",
        )
        if res.status == 2:
            raise FitInfeasibleError(f"minimax constraints infeasible: {res.message}")
        if res.status != 0:
            raise FitInfeasibleError(f"LP solve failed: {res.message}")
        return ChebyshevPolynomial(parity, degree, tuple(res.x[:ncoef]), cap=cap)

    # the grid constraint can overshoot between nodes; tighten until the
    # dense magnitude stays below 1 so phase factors remain admissible
    probe = np.linspace(0.0, 1.0, 4 * grid_m)
    cap_now = cap
    for _ in range(4):
        poly = solve(cap_now)
        dense_max = float(np.max(np.abs(poly.eval(probe))))
        if dense_max <= 1.0 + 1e-12:
            break
        cap_now -= 1.5 * (dense_max - cap_now)
        if cap_now <= 0:
            raise FitInfeasibleError("cannot keep |P| below 1 at this degree")
    else:
        raise FitInfeasibleError("inter-node overshoot keeps |P| above 1")

    dense = np.linspace(x_min, x_max, 10 * grid_m)
    err = float(np.max(np.abs(np.array([float(target(xi)) for xi in dense]) - poly.eval(dense))))
    return replace(poly, max_err=err)


def max_error(
    poly: ChebyshevPolynomial,
    target: TargetFunction | Callable[[float], float],
    n_samples: int = 10_000,
) -> float:
    """Max |f - P| over uniform samples of the target's domain."""
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples for a trustworthy maximum")
    xs = np.linspace(getattr(target, "x_min", 0.0), getattr(target, "x_max", 1.0), n_samples)
    f_vals = np.array([float(target(xi)) for xi in xs])
    return float(np.max(np.abs(f_vals - poly.eval(xs))))


def dump_fit_csv(
    path: str,
    target: TargetFunction | Callable[[float], float],
    poly: ChebyshevPolynomial,
    n_samples: int = 1000,
) -> None:
    """Write (x, f(x), P(x), |f-P|) rows for external plotting."""
    xs = np.linspace(getattr(target, "x_min", 0.0), getattr(target, "x_max", 1.0), n_samples)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "f", "P", "abs_err"])
        for xi in xs:
            fv = float(target(float(xi)))
            pv = float(poly.eval(float(xi)))
            writer.writerow([repr(float(xi)), repr(fv), repr(pv), repr(abs(fv - pv))])
