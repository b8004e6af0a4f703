"""Command-line experiment runner.

Subcommands ``integrate``, ``stability-map``, ``sweep`` and ``experiment``
write CSV/JSON artifacts into ``--output-dir``. Exit status is 0 when every
solve completes, 1 on a solver failure and 2 for an invalid request.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .controller import I_CONTROLLER, PI_CONTROLLER, ControllerConfig
from .estimators import ESTIMATOR_KINDS
from .integrator import default_k, final_error, gronwall_bound, solve
from .problems import PROBLEMS, make_problem
from .stability import stability_map
from .tableau import make_tableau

TRACE_COLUMNS = ("step_index", "t", "dt", "w", "accepted", "raw_norm", "gronwall_increment")
MAP_COLUMNS = ("phi", "r", "z_re", "z_im", "spectral_radius")
SWEEP_COLUMNS = ("parameter", "n_accepted", "n_rejected", "error", "gronwall_bound", "total_steps")

EXIT_OK, EXIT_SOLVER, EXIT_INVALID = 0, 1, 2


class InvalidSpec(ValueError):
    pass


@dataclass
class ExperimentSpec:
    name: str
    problem: str = "hairer_wanner"
    method: str = "bs3"
    estimator: str = "embedded"
    beta: tuple = PI_CONTROLLER
    k: Optional[int] = None
    tol: float = 1e-4
    mode: str = "eps"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise InvalidSpec(f"tol must be positive, got {self.tol!r}")
        if self.estimator not in ESTIMATOR_KINDS:
            raise InvalidSpec(f"unknown estimator {self.estimator!r}")
        try:
            tab = make_tableau(self.method)
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from None
        if self.estimator == "embedded" and not tab.has_embedded:
            raise InvalidSpec(f"method {self.method!r} has no embedded weights")
        if self.problem not in PROBLEMS:
            raise InvalidSpec(f"unknown problem {self.problem!r}; known problems: {sorted(PROBLEMS)}")
        if self.k is None:
            self.k = default_k(self.method, self.estimator)

    def controller(self) -> ControllerConfig:
        try:
            return ControllerConfig(beta=tuple(self.beta), k=int(self.k), mode=self.mode)
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from None


def fmt(x) -> str:
    """17 significant digits; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) for v in row])


def _problem(spec: ExperimentSpec):
    params = {k: v for k, v in spec.extra.items() if k in ("phi", "N", "c", "t_end")}
    try:
        return make_problem(spec.problem, **params)
    except TypeError as exc:
        raise InvalidSpec(f"bad parameters for {spec.problem!r}: {exc}") from None


def _run_one(spec: ExperimentSpec, problem=None):
    P = _problem(spec) if problem is None else problem
    residual = spec.estimator != "embedded"
    L = spec.extra.get("L", P.L) if residual else None
    tau = spec.tol
    trace = solve(P, spec.method, spec.estimator, spec.controller(), tau, tau, L=L)
    err = final_error(trace, P) if P.reference is not None else None
    bound = gronwall_bound(trace, L) if (L is not None and trace.gronwall_enabled) else None
    return trace, err, bound


def run_integrate(spec: ExperimentSpec, out: Path) -> int:
    """Write ``<name>_trace.csv`` and ``<name>_summary.json``; return the exit status."""
    trace, err, bound = _run_one(spec)
    rows = (
        (i, r.t, r.dt, r.w, r.accepted, r.raw_norm, r.gronwall_increment) for i, r in enumerate(trace.records)
    )
    _write_csv(out / f"{spec.name}_trace.csv", TRACE_COLUMNS, rows)
    summary = {
        "name": spec.name,
        "problem": spec.problem,
        "method": trace.method,
        "estimator": spec.estimator,
        "beta": list(spec.controller().beta),
        "k": spec.k,
        "tol": spec.tol,
        "mode": spec.mode,
        "n_accepted": trace.n_accepted,
        "n_rejected": trace.n_rejected,
        "n_rhs": trace.n_rhs,
        "t_final": trace.t_final,
        "status": trace.status,
        "message": trace.message,
    }
    if err is not None:
        summary["final_error"] = _json_float(err)
    if bound is not None:
        summary["gronwall_bound"] = _json_float(bound)
    with open(out / f"{spec.name}_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if trace.ok else EXIT_SOLVER


def run_stability_map(spec: ExperimentSpec, out: Path, n_phi: int = 256, reconstruction: str = "central") -> int:
    """Write ``<name>_map.csv``; missing boundary points get empty fields."""
    from .stability import default_phi_grid

    pts = stability_map(spec.method, spec.estimator, spec.controller(), default_phi_grid(n_phi), reconstruction)
    rows = (
        (p.phi, p.r, None if p.z is None else p.z.real, None if p.z is None else p.z.imag, p.spectral_radius)
        for p in pts
    )
    _write_csv(out / f"{spec.name}_map.csv", MAP_COLUMNS, rows)
    return EXIT_OK


def _threads() -> int:
    raw = os.environ.get("RK_CERTIFY_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidSpec(f"RK_CERTIFY_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def sweep_rows(spec: ExperimentSpec, parameter: str, values) -> list:
    """Solve once per value of ``parameter`` (``tol`` or ``phi``); rows keep the order of ``values``."""
    if parameter not in ("tol", "phi"):
        raise InvalidSpec(f"sweep parameter must be 'tol' or 'phi', got {parameter!r}")
    values = [float(v) for v in values]
    if not values:
        raise InvalidSpec("empty sweep")

    def one(v):
        if parameter == "tol":
            s = ExperimentSpec(**{**asdict(spec), "tol": v})
        else:
            s = ExperimentSpec(**{**asdict(spec), "extra": {**spec.extra, "phi": v}})
        trace, err, bound = _run_one(s)
        return (v, trace.n_accepted, trace.n_rejected, err, bound, trace.n_accepted + trace.n_rejected), trace.ok

    with ThreadPoolExecutor(max_workers=min(_threads(), len(values))) as pool:
        results = list(pool.map(one, values))
    return results


def run_sweep(spec: ExperimentSpec, out: Path, parameter: str, values) -> int:
    results = sweep_rows(spec, parameter, values)
    _write_csv(out / f"{spec.name}_sweep.csv", SWEEP_COLUMNS, (row for row, _ in results))
    return EXIT_OK if all(ok for _, ok in results) else EXIT_SOLVER


# canned configurations

_TABLE_COLUMNS = [
    ("embedded", "i", I_CONTROLLER),
    ("residual_l1", "i", I_CONTROLLER),
    ("residual_l2", "i", I_CONTROLLER),
    ("embedded", "pi", PI_CONTROLLER),
    ("residual_l1", "pi", PI_CONTROLLER),
    ("residual_l2", "pi", PI_CONTROLLER),
]


def _table(tag: str, method: str, out: Path) -> int:
    status = EXIT_OK
    for est, ctrl, beta in _TABLE_COLUMNS:
        spec = ExperimentSpec(f"{tag}_{est}_{ctrl}", "hairer_wanner", method, est.replace("_", "-"), beta)
        status = max(status, run_integrate(spec, out))
    return status


def _experiment_table1(out):
    return _table("table1", "heun2_euler1", out)


def _experiment_table2(out):
    return _table("table2", "bs3", out)


def _experiment_krogh(out):
    status = EXIT_OK
    phis = np.linspace(0.0, math.pi, 65)
    for est in ("embedded", "residual-l1"):
        for ctrl, beta in (("i", I_CONTROLLER), ("pi", PI_CONTROLLER)):
            spec = ExperimentSpec(f"krogh_{est.replace('-', '_')}_{ctrl}", "krogh", "bs3", est, beta)
            status = max(status, run_sweep(spec, out, "phi", phis))
    return status


def _experiment_rigidbody(out):
    status = EXIT_OK
    tols = [10.0**-e for e in range(4, 10)]
    for est in ("embedded", "residual-l1", "residual-l2"):
        spec = ExperimentSpec(f"rigidbody_{est.replace('-', '_')}", "rigid_body", "bs3", est, PI_CONTROLLER)
        status = max(status, run_sweep(spec, out, "tol", tols))
    return status


def _experiment_lipschitz(out):
    status = EXIT_OK
    tols = [10.0**-e for e in range(3, 8)]
    for prob in ("lipschitz_linear", "lipschitz_nonlinear"):
        for method in ("heun2_euler1", "bs3"):
            spec = ExperimentSpec(f"{prob}_{method}", prob, method, "residual-l2", PI_CONTROLLER)
            status = max(status, run_sweep(spec, out, "tol", tols))
    return status


def _experiment_bbm(out):
    status = EXIT_OK
    for est in ("embedded", "residual-l1", "residual-l2"):
        spec = ExperimentSpec(f"bbm_{est.replace('-', '_')}", "bbm", "bs3", est, PI_CONTROLLER, extra={"N": 256})
        status = max(status, run_integrate(spec, out))
    return status


def _experiment_advection(out):
    status = EXIT_OK
    for est in ("embedded", "residual-l1", "residual-l2"):
        spec = ExperimentSpec(f"advection_{est.replace('-', '_')}", "advection", "bs3", est, PI_CONTROLLER)
        status = max(status, run_integrate(spec, out))
    return status


def _experiment_maps(out):
    configs = [
        ("map_heun2_residual_pi", "heun2_euler1", "residual-l1", PI_CONTROLLER),
        ("map_heun2_embedded_pi", "heun2_euler1", "embedded", PI_CONTROLLER),
        ("map_heun2_residual_i", "heun2_euler1", "residual-l1", I_CONTROLLER),
        ("map_heun2_embedded_i", "heun2_euler1", "embedded", I_CONTROLLER),
        ("map_bs3_central_l1_i", "bs3", "residual-l1", I_CONTROLLER),
        ("map_bs3_central_l2_i", "bs3", "residual-l2", I_CONTROLLER),
        ("map_bs3_central_l1_pi", "bs3", "residual-l1", PI_CONTROLLER),
        ("map_bs3_central_l2_pi", "bs3", "residual-l2", PI_CONTROLLER),
        ("map_bs3_embedded_i", "bs3", "embedded", I_CONTROLLER),
        ("map_bs3_embedded_pi", "bs3", "embedded", PI_CONTROLLER),
    ]
    for name, method, est, beta in configs:
        run_stability_map(ExperimentSpec(name, method=method, estimator=est, beta=beta), out)
    return EXIT_OK


EXPERIMENTS = {
    "table1": _experiment_table1,
    "table2": _experiment_table2,
    "krogh": _experiment_krogh,
    "rigidbody": _experiment_rigidbody,
    "bbm": _experiment_bbm,
    "lipschitz": _experiment_lipschitz,
    "advection": _experiment_advection,
    "maps": _experiment_maps,
}


def _parse_beta(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"beta must be comma-separated numbers, got {text!r}") from None
    if not 1 <= len(vals) <= 3:
        raise argparse.ArgumentTypeError("beta takes one to three entries")
    return vals


def _parse_floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser):
    p.add_argument("--method", default="bs3")
    p.add_argument("--estimator", default="embedded", choices=ESTIMATOR_KINDS)
    p.add_argument("--beta", type=_parse_beta, default=PI_CONTROLLER, help="b1,b2[,b3]")
    p.add_argument("--k", type=int, default=None, help="order exponent (default p or p+1)")
    p.add_argument("--tol", type=float, default=1e-4, help="tau_a = tau_r")
    p.add_argument("--mode", default="eps", choices=("eps", "epus"))
    p.add_argument("--output-dir", type=Path, default=Path("."))
    p.add_argument("--name", default=None)


def _problem_args(p: argparse.ArgumentParser):
    p.add_argument("--problem", default="hairer_wanner", choices=sorted(PROBLEMS))
    p.add_argument("--phi", type=float, default=None, help="Krogh parameter")
    p.add_argument("--N", type=int, default=None, help="grid size for the PDE problems")
    p.add_argument("--L", type=float, default=None, help="one-sided Lipschitz constant override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rkcertify", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="one adaptive solve")
    _common(p)
    _problem_args(p)

    p = sub.add_parser("stability-map", help="controller spectral radius along the stability boundary")
    _common(p)
    p.add_argument("--n-phi", type=int, default=256)
    p.add_argument("--reconstruction", default="central", choices=("central", "left"))

    p = sub.add_parser("sweep", help="tolerance or Krogh-parameter sweep")
    _common(p)
    _problem_args(p)
    p.add_argument("--parameter", required=True, choices=("tol", "phi"))
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--values", type=_parse_floats)
    grp.add_argument("--linspace", type=_parse_floats, help="start,stop,count")

    p = sub.add_parser("experiment", help="canned configurations")
    p.add_argument("id", choices=sorted(EXPERIMENTS))
    p.add_argument("--output-dir", type=Path, default=Path("."))
    return parser


def _spec_from_args(args, default_name: str) -> ExperimentSpec:
    extra = {}
    for key in ("phi", "N", "L"):
        val = getattr(args, key, None)
        if val is not None:
            extra[key] = val
    return ExperimentSpec(
        name=args.name or default_name,
        problem=getattr(args, "problem", "hairer_wanner"),
        method=args.method,
        estimator=args.estimator,
        beta=args.beta,
        k=args.k,
        tol=args.tol,
        mode=args.mode,
        extra=extra,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.output_dir
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "experiment":
            return EXPERIMENTS[args.id](out)
        if args.command == "integrate":
            return run_integrate(_spec_from_args(args, args.problem), out)
        if args.command == "stability-map":
            spec = _spec_from_args(args, f"{args.method}_{args.estimator}")
            if args.n_phi < 1:
                raise InvalidSpec("--n-phi must be positive")
            return run_stability_map(spec, out, args.n_phi, args.reconstruction)
        if args.command == "sweep":
            if args.linspace is not None:
                if len(args.linspace) != 3 or args.linspace[2] < 1:
                    raise InvalidSpec("--linspace takes start,stop,count")
                values = np.linspace(args.linspace[0], args.linspace[1], int(args.linspace[2]))
            else:
                values = args.values
            return run_sweep(_spec_from_args(args, f"{args.problem}_{args.parameter}"), out, args.parameter, values)
    except (InvalidSpec, ValueError) as exc:
        print(f"rkcertify: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    parser.error(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
