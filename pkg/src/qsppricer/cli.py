"""Batch command line: fit, phases, verify, simulate, price-call,
price-autocall, resources.

Configuration comes from a TOML file plus flag overrides; every run writes
UTF-8 JSON/CSV/Markdown into --out-dir.  Outputs are deterministic for a
fixed config and seed.

Exit codes: 0 success, 2 result outside the requested budget/tolerance,
3 infeasible fit or phase synthesis, 4 simulator capacity, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EX_OK = 0
EX_BUDGET = 2
EX_INFEASIBLE = 3
EX_CAPACITY = 4
EX_USAGE = 64


def _load_toml(path: str) -> dict:
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    return path


def _target_from_config(spec: dict):
    from .polyapprox import TargetFunction

    form = spec.get("form")
    if form == "autocall_clause":
        return TargetFunction.autocall_clause(spec["k_t"], spec["p"], spec["s"])
    if form == "call_clause":
        return TargetFunction.call_clause(
            spec["s0"], spec["k"], spec["f_max"], spec["p"], spec["s"]
        )
    if form == "general_exp":
        return TargetFunction.general_exp(
            spec["a"], spec["b"], spec["c"], spec["p"], spec["s"]
        )
    raise KeyError(f"unknown target form {form!r}")


def cmd_fit(args, config: dict) -> int:
    from .polyapprox import FitInfeasibleError, InvalidTargetError, dump_fit_csv, fit_minimax

    section = config.get("fit", {})
    try:
        target = _target_from_config(section["target"])
        degree = args.degree or section.get("degree", 20)
        cap = section.get("cap", 0.999)
        parity = section.get("parity", "even")
        budget = args.budget or section.get("budget", 1e-3)
        poly = fit_minimax(target, degree, parity, cap)
    except (KeyError, InvalidTargetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    except FitInfeasibleError as exc:
        print(f"fit infeasible: {exc}", file=sys.stderr)
        return EX_INFEASIBLE
    out = Path(args.out_dir)
    _write(out, "poly.json", poly.to_json())
    dump_fit_csv(out / "fit.csv", target, poly, n_samples=section.get("csv_samples", 1001))
    print(f"degree {poly.degree} max_err {poly.max_err:.6e} budget {budget:.1e}")
    return EX_OK if poly.max_err <= budget else EX_BUDGET


def cmd_phases(args, config: dict) -> int:
    from .phases import ConvergenceError, NormViolationError, find_phases
    from .polyapprox import ChebyshevPolynomial

    try:
        poly = ChebyshevPolynomial.from_json(Path(args.poly).read_text())
    except (OSError, KeyError, ValueError) as exc:
        print(f"error reading polynomial: {exc}", file=sys.stderr)
        return EX_USAGE
    tol = config.get("phases", {}).get("tol", 1e-8)
    try:
        pf = find_phases(poly, tol=tol, seed=args.seed)
    except (NormViolationError, ConvergenceError) as exc:
        print(f"phase synthesis failed: {exc}", file=sys.stderr)
        return EX_INFEASIBLE
    _write(Path(args.out_dir), "phases.json", pf.to_json())
    print(f"degree {len(pf)} residual {pf.residual:.3e}")
    return EX_OK


def cmd_verify(args, config: dict) -> int:
    from .phases import PhaseFactors, verify_phases
    from .polyapprox import ChebyshevPolynomial

    section = config.get("verify", {})
    try:
        poly = ChebyshevPolynomial.from_json(Path(args.poly).read_text())
        pf = PhaseFactors.from_json(Path(args.phases).read_text())
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    report = verify_phases(pf, poly, section.get("n_samples", 1000), section.get("tol", 1e-7))
    _write(Path(args.out_dir), "verify.json", report.to_json())
    print(f"max_dev {report.max_dev:.3e} pass {report.passed}")
    return EX_OK if report.passed else EX_BUDGET


def cmd_simulate(args, config: dict) -> int:
    from .ir import Circuit
    from .simulator import CapacityError, ProjectorSpec, StateVector, probability, run

    try:
        circ = Circuit.from_json(Path(args.circuit).read_text())
        pairs = [p.split(":") for p in args.projector.split(",")] if args.projector else []
        proj = ProjectorSpec(tuple(int(q) for q, _ in pairs), tuple(int(v) for _, v in pairs))
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        initial = None
        if args.initial is not None:
            initial = StateVector.basis_state(circ.n_qubits, args.initial)
        state = run(circ, initial, width_cap=args.width_cap)
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EX_CAPACITY
    result = {"n_qubits": circ.n_qubits, "norm": state.norm()}
    if pairs:
        result["probability"] = probability(state, proj)
    _write(Path(args.out_dir), "simulate.json", json.dumps(result, sort_keys=True))
    print(json.dumps(result, sort_keys=True))
    return EX_OK


def _fit_and_phases(target, degree: int, cap: float, tol: float, seed: int):
    from .phases import find_phases
    from .polyapprox import fit_minimax

    poly = fit_minimax(target, degree, "even", cap)
    return poly, find_phases(poly, tol=tol, seed=seed)


def cmd_price_call(args, config: dict) -> int:
    import numpy as np

    from .fixedpoint import FixedPointFormat
    from .pricing import (
        EuropeanCall,
        build_call_pipeline,
        call_target,
        classical_price_call,
        normal_grid_probs,
        price_pipeline,
    )
    from .simulator import CapacityError

    section = config.get("call", {})
    try:
        fmt = FixedPointFormat(section["n_bits"], section["int_bits"], signed=True)
        probs = (
            np.asarray(section["probs"], dtype=float)
            if "probs" in section
            else normal_grid_probs(fmt, section.get("mean", 0.0), section.get("std", 1.0))
        )
        contract = EuropeanCall(section["s0"], section["k"], fmt, probs,
                                f_max=section.get("f_max"))
        degree = args.degree or section.get("degree", 16)
        cap = section.get("cap", 0.999)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    poly, pf = _fit_and_phases(call_target(contract), degree, cap,
                               section.get("phase_tol", 1e-8), args.seed)
    pipeline = build_call_pipeline(contract, poly, pf)
    try:
        pair = price_pipeline(pipeline, classical_price_call(contract), args.width_cap)
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EX_CAPACITY
    out = Path(args.out_dir)
    _write(out, "poly.json", poly.to_json())
    _write(out, "phases.json", pf.to_json())
    _write(out, "price.json", pair.to_json())
    print(pair.to_json())
    return EX_OK if pair.within_budget else EX_BUDGET


def cmd_price_autocall(args, config: dict) -> int:
    import numpy as np

    from .fixedpoint import FixedPointFormat
    from .pricing import (
        Autocallable,
        BinaryPayoff,
        autocall_target,
        build_autocallable_pipeline,
        classical_price_autocallable,
        normal_grid_probs,
        price_pipeline,
    )
    from .simulator import CapacityError

    section = config.get("autocall", {})
    try:
        fmt = FixedPointFormat(section["n_bits"], section["int_bits"], signed=True)
        n_steps = section["n_steps"]
        if "step_probs" in section:
            step_probs = tuple(np.asarray(p, dtype=float) for p in section["step_probs"])
        else:
            marg = normal_grid_probs(fmt, section.get("mean", 0.0), section.get("std", 0.5))
            step_probs = (marg,) * n_steps
        binaries = tuple(
            BinaryPayoff(b["threshold"], b["t"], b["payout"])
            for b in section.get("binaries", [])
        )
        contract = Autocallable(
            n_steps, fmt, step_probs, binaries,
            barrier=section["barrier"], k_t=section["k_t"],
            notional=section.get("notional", 1.0),
        )
        degree = args.degree or section.get("degree", 20)
        cap = section.get("cap", 0.9995)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    poly, pf = _fit_and_phases(autocall_target(contract), degree, cap,
                               section.get("phase_tol", 1e-8), args.seed)
    pipeline = build_autocallable_pipeline(contract, poly, pf)
    try:
        pair = price_pipeline(pipeline, classical_price_autocallable(contract), args.width_cap)
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EX_CAPACITY
    out = Path(args.out_dir)
    _write(out, "poly.json", poly.to_json())
    _write(out, "phases.json", pf.to_json())
    notional = {"classical": contract.notional * pair.classical,
                "quantum": contract.notional * pair.quantum}
    _write(out, "price.json", json.dumps(
        {**json.loads(pair.to_json()), "notional_value": notional}, sort_keys=True))
    print(pair.to_json())
    return EX_OK if pair.within_budget else EX_BUDGET


def cmd_resources(args, config: dict) -> int:
    from .estimator import TABLE1_ROWS, advantage_report, markdown_table, rows_from_json

    section = config.get("resources", {})
    rows = TABLE1_ROWS
    if args.rows:
        try:
            rows = tuple(rows_from_json(Path(args.rows).read_text()))
        except (OSError, KeyError, ValueError) as exc:
            print(f"error reading rows: {exc}", file=sys.stderr)
            return EX_USAGE
    eps = args.epsilon or section.get("epsilon", 1e-3)
    alpha = args.alpha or section.get("alpha", 0.32)
    baseline = section.get("baseline", rows[0].label)
    out = Path(args.out_dir)
    reports = [advantage_report(row, eps, alpha, section.get("classical_time_s", 1.0))
               for row in rows]
    _write(out, "advantage.json",
           json.dumps([json.loads(r.to_json()) for r in reports], sort_keys=True))
    _write(out, "comparison.md", markdown_table(rows, baseline))
    for r in reports:
        print(f"{r.label}: n_queries {r.n_queries} t_depth {r.total_t_depth:.3g} "
              f"t_count {r.total_t_count:.3g} rate {r.clock_rate_hz / 1e6:.1f} MHz")
    return EX_OK


def main(argv: list[str] | None = None) -> int:
    threads = os.environ.get("QSPPRICER_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    parser = argparse.ArgumentParser(prog="qsppricer", description=__doc__)
    parser.add_argument("--config", default=None, help="TOML configuration file")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument("--degree", type=int, default=None)
    parser.add_argument("--budget", type=float, default=None)
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--width-cap", type=int, default=26)
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("fit")
    p = sub.add_parser("phases")
    p.add_argument("--poly", required=True)
    p = sub.add_parser("verify")
    p.add_argument("--poly", required=True)
    p.add_argument("--phases", required=True)
    p = sub.add_parser("simulate")
    p.add_argument("--circuit", required=True)
    p.add_argument("--initial", type=int, default=None)
    p.add_argument("--projector", default="", help="comma-separated qubit:value pairs")
    sub.add_parser("price-call")
    sub.add_parser("price-autocall")
    p = sub.add_parser("resources")
    p.add_argument("--rows", default=None, help="JSON file of method rows")

    args = parser.parse_args(argv)
    config: dict = {}
    if args.config:
        try:
            config = _load_toml(args.config)
        except Exception as exc:
            print(f"error reading config: {exc}", file=sys.stderr)
            return EX_USAGE

    handlers = {
        "fit": cmd_fit,
        "phases": cmd_phases,
        "verify": cmd_verify,
        "simulate": cmd_simulate,
        "price-call": cmd_price_call,
        "price-autocall": cmd_price_autocall,
        "resources": cmd_resources,
    }
    return handlers[args.command](args, config)


if __name__ == "__main__":
    sys.exit(main())
