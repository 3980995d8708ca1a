"""Command-line front end: ``nlcollapse <command> [flags]``.

Exit codes: classify returns 0 when the box collapses, 1 when it does not and
2 on bad input; the other commands return 0 on success and nonzero otherwise.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import boxes, collapse, protocols, slices, verification

EXIT_OK, EXIT_NO, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2))


def _load_box(args) -> boxes.NonlocalBox:
    if args.named:
        try:
            return boxes.named_box(args.named)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    if args.box:
        try:
            return boxes.load_box(args.box)
        except (OSError, json.JSONDecodeError, boxes.BoxFormatError) as exc:
            raise InputError(f"cannot read box {args.box}: {exc}") from None
    raise InputError("give a box with --named or --box")


def _load_valid_box(args) -> boxes.NonlocalBox:
    box = _load_box(args)
    report = boxes.validate(box, args.tol_box)
    if not report.ok:
        _dump(report.to_json())
        raise InputError(f"invalid box: {report.summary()}")
    return box


# -- commands -------------------------------------------------------------------

def cmd_validate(args) -> int:
    box = _load_box(args)
    report = boxes.validate(box, args.tol_box)
    out = report.to_json()
    out["locally_uniform"] = report.ok and boxes.is_locally_uniform(box, args.tol_box)
    _dump(out)
    return EXIT_OK if report.ok else EXIT_NO


def cmd_classify(args) -> int:
    box = _load_valid_box(args)
    result = collapse.classify_box(box)
    out = {"name": box.name} if box.name else {}
    out.update(result.to_json())
    _dump(out)
    return EXIT_OK if result.collapses else EXIT_NO


def cmd_iterate(args) -> int:
    box = _load_valid_box(args)
    result = collapse.classify_box(box)
    try:
        trace = collapse.iterate(args.mu0, result.params, tol=args.tol, max_steps=args.max_steps)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lines = [f"{k} {mu!r}" for k, mu in enumerate(trace.mus)]
    print("\n".join(lines))
    summary = trace.to_json()
    summary.update(mu0=args.mu0, mu_star=result.params.mu_star, collapses=result.collapses,
                   relabeling=result.relabeling.label())
    print(json.dumps(summary))
    return EXIT_OK if trace.converged else EXIT_NO


def cmd_simulate(args) -> int:
    box = _load_valid_box(args)
    if args.function:
        try:
            f = protocols.BooleanFunction.load(args.function)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read function {args.function}: {exc}") from None
        if args.m is not None and args.m != f.m:
            raise InputError(f"--m {args.m} does not match the function's m={f.m}")
    else:
        f = protocols.BooleanFunction.inner_product(args.m or 1)
    mode = "monte_carlo" if args.mode == "mc" else "exact"
    if mode == "monte_carlo" and args.seed is None:
        raise InputError("monte-carlo mode needs an explicit --seed for reproducibility")
    try:
        config = protocols.ProtocolConfig(args.k, f.m, box, mode, args.samples, args.seed)
        report = protocols.run_protocol(config, f, args.x, args.y)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = report.to_json()
    shared, copies = collapse.resource_count(args.k, f.m)
    out.update(k=args.k, m=f.m, n=f.n, X=args.x, Y=args.y,
               expected_shared_bits=shared, expected_box_copies=copies)
    _dump(out)
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.resolution < 2:
        raise InputError("--resolution must be at least 2")
    try:
        if args.slice == "case1":
            spec = slices.case1_spec(args.resolution)
        elif args.slice == "case2":
            spec = slices.case2_spec(args.resolution)
        else:
            spec = slices.load_slice_spec(args.slice, args.resolution)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"bad slice: {exc}") from None
    points = slices.scan(spec)
    if args.out:
        slices.write_csv(points, args.out)
    else:
        slices.write_csv(points, sys.stdout)
    dis = slices.disagreements(points)
    print(json.dumps({"points": len(points), "collapsing": sum(p.collapses_general for p in points),
                      "disagreements": len(dis)}), file=sys.stderr)
    return EXIT_OK if not dis else EXIT_NO


def cmd_verify(args) -> int:
    results = verification.run_all()
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_NO


# -- parser ----------------------------------------------------------------------

def _box_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--named", help=f"one of {', '.join(boxes.NAMED_BOXES)}")
    g.add_argument("--box", help="box JSON file")
    p.add_argument("--box-tol", dest="tol_box", type=float, default=boxes.DEFAULT_TOL,
                   help="validation tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlcollapse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a box against the non-signalling constraints")
    _box_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", help="A, B and the collapse verdict for a box")
    _box_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("iterate", help="iterate the bias map of a box")
    _box_flags(p)
    p.add_argument("--mu0", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-steps", type=int, default=collapse.DEFAULT_MAX_STEPS)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("simulate", help="run the level-k protocol")
    _box_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=None, help="input length (default 1, or the function's)")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--function", help="Boolean function JSON (default: inner product on m bits)")
    p.add_argument("--x", type=int, default=0, help="Alice's string as an integer")
    p.add_argument("--y", type=int, default=0, help="Bob's string as an integer")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="grid scan of a slice, written as CSV")
    p.add_argument("--slice", default="case1", help="case1, case2 or a slice JSON file")
    p.add_argument("--resolution", type=int, default=201)
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="run the built-in oracle cross-checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except boxes.InvalidBoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
