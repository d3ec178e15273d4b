"""Command-line interface.

Subcommands: trace-constant, min-penalty, verify, run, convergence.
Exit codes: 0 success, 1 verification failure, 2 usage or config error.
The DG_THREADS environment variable caps the BLAS worker count; it is
applied before the numeric stack loads, so it must be set in the calling
environment (not from Python after import).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

# cap BLAS threads before numpy is first imported by the compute modules
if "DG_THREADS" in os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["DG_THREADS"])

__all__ = ["main", "entry"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgdiss",
        description=(
            "DG viscous-dissipation toolkit: sharp trace constants, minimal "
            "penalties, verification suites, scenario runs with energy "
            "ledgers, and convergence sweeps. Set DG_THREADS to cap the "
            "BLAS worker count."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace-constant", help="sharp two-endpoint trace constant")
    p.add_argument("--order", type=int, required=True, help="polynomial order k (0..12)")
    p.add_argument("--samples", type=int, default=200, help="random sharpness-probe samples")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("min-penalty", help="minimal interior-penalty parameter")
    p.add_argument("--family", required=True, choices=["q-dg", "rt-hdg"])
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--empirical", action="store_true",
                   help="also probe the assembled minimum on a mesh")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--cells", type=int, default=4)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--samples", type=int, default=40, help="random fields per configuration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda-factor", type=float, default=1.0,
                   help="penalty as a multiple of lambda*; < 1 is expected to fail")
    p.add_argument("--example3", action="store_true",
                   help="print the single-cell exact values and exit")

    p = sub.add_parser("run", help="run a scenario from a JSON config")
    p.add_argument("--config", required=True, help="path to the scenario JSON file")
    p.add_argument("--output", default=None, help="override the configured ledger path")

    p = sub.add_parser("convergence", help="heat-equation refinement study")
    p.add_argument("--problem", default="heat", choices=["heat"])
    p.add_argument("--orders", default="1,2,3", help="comma-separated polynomial orders")
    p.add_argument("--meshes", default="4,8,16", help="comma-separated cell counts")
    p.add_argument("--nu", type=float, default=0.02)
    p.add_argument("--t-end", type=float, default=0.25)
    p.add_argument("--dt-base", type=float, default=5e-3,
                   help="time step on the coarsest mesh; scales with h^2")
    p.add_argument("--ic", default="sine", choices=["sine", "constant"])
    p.add_argument("--projection-only", action="store_true",
                   help="measure projection errors only, no time stepping")
    return parser


def cmd_trace_constant(args) -> int:
    from .trace_constants import rayleigh_sharpness_probe, sharp_trace_constant

    if not 0 <= args.order <= 12:
        print(f"error: --order must be in 0..12, got {args.order}", file=sys.stderr)
        return 2
    tc = sharp_trace_constant(args.order)
    formula = tc.formula
    rel = abs(tc.value - formula) / formula
    probe = rayleigh_sharpness_probe(args.order, args.samples, args.seed)
    print(f"C2 = {formula:g}")
    print(f"lambda_max(A) = {tc.value:.17g} (relative error {rel:.3e})")
    print(f"sharpness probe ({args.samples} samples) = {probe:.17g}")
    if rel > 1e-9:
        print("error: eigenvalue does not match (k+1)(k+2) within 1e-9", file=sys.stderr)
        return 1
    return 0


def cmd_min_penalty(args) -> int:
    from .trace_constants import empirical_min_penalty, min_penalty

    rec = min_penalty(args.family, args.order)
    print(f"lambda_star = {rec.lambda_star:g}")
    if args.empirical:
        if args.family != "q-dg":
            print("error: --empirical probes the assembled Q-DG forms only", file=sys.stderr)
            return 2
        from .dgcore import DgSpace
        from .mesh import build_mesh

        mesh = build_mesh(args.dim, [args.cells] * args.dim, [1.0] * args.dim)
        space = DgSpace(mesh, args.order)
        if space.mesh.n_cells * space.n_modes > 3000:
            print("error: empirical probe limited to <= 3000 dofs", file=sys.stderr)
            return 2
        value = empirical_min_penalty(space)
        print(f"empirical = {value:.12g} (dim={args.dim}, cells={args.cells})")
    return 0


def cmd_verify(args) -> int:
    from .verify import example3_numbers, run_suites

    if args.example3:
        vals = example3_numbers()
        print(f"a_h(u*,u*)    = {vals['a_h']:.17g}")
        print(f"grad_energy   = {vals['grad_energy']:.17g}")
        print(f"a_num_broken  = {vals['a_num_broken']:.17g}")
        print(f"a_num_sigma   = {vals['a_num_sigma']:.17g}")
        return 0
    results = run_suites(args.samples, args.seed, args.lambda_factor)
    width = max(len(r.name) for r in results)
    failures = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.detail}")
        if not r.passed:
            failures.append(r.name)
    if failures:
        print(f"failed suites: {', '.join(failures)}", file=sys.stderr)
        return 1
    return 0


def cmd_run(args) -> int:
    from .simulate import ConfigError, ScenarioConfig, run_scenario

    try:
        with open(args.config, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read config {args.config}: {e}", file=sys.stderr)
        return 2
    try:
        config = ScenarioConfig.from_dict(raw)
    except ConfigError as e:
        for msg in e.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    result = run_scenario(config, args.output)
    out = args.output if args.output is not None else config.output
    last = result.samples[-1]
    print(f"steps = {len(result.samples)}")
    print(f"lambda = {result.lam:.17g} (lambda* = {result.lambda_star:.17g})")
    print(f"K(t_end) = {last.kinetic_energy:.17g}")
    if out is not None:
        print(f"ledger = {out}")
    return 0


def cmd_convergence(args) -> int:
    from .simulate import convergence_sweep

    orders = [int(s) for s in args.orders.split(",") if s]
    meshes = [int(s) for s in args.meshes.split(",") if s]
    if len(meshes) < 2:
        print("error: need at least two mesh levels", file=sys.stderr)
        return 2
    ic = "sine_product" if args.ic == "sine" else "constant"
    rows = convergence_sweep(
        orders, meshes, nu=args.nu, t_end=args.t_end, dt_base=args.dt_base,
        projection_only=args.projection_only, ic_name=ic,
    )
    print(f"{'k':>3} {'N':>6} {'L2 error':>14} {'rate':>8} {'a_num_sigma':>14}")
    ok = True
    by_order = {}
    for row in rows:
        by_order.setdefault(row["order"], []).append(row)
        rate = row["rate"]
        exact = row["error"] < 1e-12
        rate_str = "exact" if exact else ("-" if rate is None else f"{rate:8.3f}")
        a_num = "-" if row["a_num_sigma"] is None else f"{row['a_num_sigma']:.6e}"
        print(f"{row['order']:>3} {row['cells']:>6} {row['error']:>14.6e} {rate_str:>8} {a_num:>14}")
    for k, krows in by_order.items():
        if any(r["error"] < 1e-12 for r in krows):
            continue  # exact regime, no rate to check
        last_rate = krows[-1]["rate"]
        if last_rate is None or abs(last_rate - (k + 1)) > 0.2:
            print(f"rate check failed for k={k}: observed {last_rate}", file=sys.stderr)
            ok = False
        nums = [r["a_num_sigma"] for r in krows if r["a_num_sigma"] is not None]
        if nums and any(b >= a for a, b in zip(nums, nums[1:])):
            print(f"a_num_sigma not strictly decreasing for k={k}: {nums}", file=sys.stderr)
            ok = False
    return 0 if ok else 1


_COMMANDS = {
    "trace-constant": cmd_trace_constant,
    "min-penalty": cmd_min_penalty,
    "verify": cmd_verify,
    "run": cmd_run,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
