"""Command-line front end.

Exit status: 0 on success or PASS (UNKNOWN included), 1 on FAIL,
2 on malformed input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from . import __version__
from .chain import run_chain
from .classes import check_dap, check_hp, check_jep, check_ndap, load_class
from .ctprocess import jump_rates, simulate_ct
from .descriptors import (infer_class, kernel_from_descriptor, load_json_arg, measure_from_descriptor,
                          sampler_from_descriptor)
from .errors import ExchMarkovError, MalformedInputError
from .kernels import check_conjugation_invariance, check_consistency
from .levyito import classify_kernel, classify_measure
from .limits import density, project_trajectory
from .structures import FiniteStructure
from .verdict import Verdict

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def validate_structure_file(path: str) -> FiniteStructure:
    """Read and validate a JSON structure file; errors name the relation and tuple."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise MalformedInputError(f"{path}: cannot read: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return FiniteStructure.from_dict(data)
    except ExchMarkovError as exc:
        raise MalformedInputError(f"{path}: {exc}") from exc


def _write_lines(lines: list[str], out: str | None, meta: dict) -> None:
    text = "".join(line + "\n" for line in lines)
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(out + ".meta.json", "w", encoding="utf-8") as fh:
        fh.write(_dumps(meta) + "\n")


def _meta(args: argparse.Namespace) -> dict:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return {"tool": "exchmarkov", "version": __version__, "config": config}


def _verdict_exit(v: Verdict, extra: dict | None = None) -> int:
    print(v.status.upper())
    payload = v.to_json()
    if extra:
        payload |= extra
    print(_dumps(payload))
    return EXIT_FAIL if v.failed else EXIT_OK


# ---------------------------------------------------------------------------
# commands

def cmd_simulate_chain(args) -> int:
    M0 = validate_structure_file(args.init)
    d = load_json_arg(args.mu, "mu")
    cls = load_class(args.cls) if args.cls else infer_class(M0)
    mu = sampler_from_descriptor(d, "mu", cls)
    traj = run_chain(mu, M0, args.steps, args.seed)
    _write_lines([_dumps(S.to_dict()) for S in traj.states], args.out, _meta(args))
    return EXIT_OK


def cmd_simulate_ct(args) -> int:
    M0 = validate_structure_file(args.init)
    lam = measure_from_descriptor(load_json_arg(args.lam, "lambda"))
    traj = simulate_ct(lam, M0, args.tmax, args.seed)
    _write_lines([_dumps(r) for r in traj.to_records()], args.out, _meta(args))
    return EXIT_OK


def cmd_rates(args) -> int:
    S = validate_structure_file(args.state)
    lam = measure_from_descriptor(load_json_arg(args.lam, "lambda"))
    row = jump_rates(lam, S, samples=args.samples, seed=args.seed)
    print(_dumps(row.to_json() | {"meta": _meta(args)}))
    return EXIT_OK


def cmd_check_class(args) -> int:
    K = load_class(args.cls, enum_bound=args.enum_bound)
    if args.prop == "hp":
        v = check_hp(K, args.n)
    elif args.prop == "jep":
        v = check_jep(K, args.n, args.search_bound or 2 * args.n)
    elif args.prop == "dap":
        v = check_dap(K, args.n, args.search_bound)
    else:
        v = check_ndap(K, args.n)
    return _verdict_exit(v, {"class": K.id, "prop": args.prop, "n": args.n})


def cmd_check_kernel(args) -> int:
    d = load_json_arg(args.kernel, "kernel")
    cls = load_class(args.cls) if args.cls else None
    F = kernel_from_descriptor(d, "kernel", cls)
    if args.check == "consistency":
        v = check_consistency(F, args.n, seed=args.seed)
    else:
        v = check_conjugation_invariance(F, args.n, seed=args.seed)
    return _verdict_exit(v, {"check": args.check, "n": args.n})


def cmd_classify_kernel(args) -> int:
    F = kernel_from_descriptor(load_json_arg(args.kernel, "kernel"), "kernel")
    print(_dumps(classify_kernel(F, args.n, args.eps, seed=args.seed)))
    return EXIT_OK


def cmd_classify_measure(args) -> int:
    import warnings

    lam = measure_from_descriptor(load_json_arg(args.lam, "lambda"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = classify_measure(lam, args.n, args.eps, args.samples, args.seed)
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    print(_dumps(report))
    return EXIT_OK


def cmd_density(args) -> int:
    S = validate_structure_file(args.probe)
    M = validate_structure_file(args.inp)
    if S.sig != M.sig:
        raise MalformedInputError("probe: signature differs from the input structure")
    est = density(S, M, args.samples, args.seed, exact_max_n=-1 if args.sampled else 12)
    print(_dumps(est.to_json()))
    return EXIT_OK


def _read_trajectory(path: str):
    from .chain import Trajectory
    from .ctprocess import CTTrajectory

    try:
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise MalformedInputError(f"traj: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"traj: invalid JSON line: {exc}") from exc
    if not rows:
        raise MalformedInputError("traj: empty trajectory")
    if all(isinstance(r, dict) and "t" in r and "state" in r for r in rows):
        states = [FiniteStructure.from_dict(r["state"]) for r in rows]
        jumps = [(float(r["t"]), S) for r, S in zip(rows[1:], states[1:])]
        return CTTrajectory(states[0].n, states[0], jumps)
    states = [FiniteStructure.from_dict(r) for r in rows]
    return Trajectory(states[0].n, states)


def cmd_project(args) -> int:
    traj = _read_trajectory(args.traj)
    raw = load_json_arg(args.probes, "probes")
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise MalformedInputError("probes: expected a nonempty list of structures")
    probes = []
    for i, p in enumerate(raw):
        try:
            probes.append(FiniteStructure.from_dict(p))
        except ExchMarkovError as exc:
            raise MalformedInputError(f"probes[{i}]: {exc}") from exc
    records = project_trajectory(traj, probes, args.samples, args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", "probe_id", "estimate", "stderr"])
    for r in records:
        writer.writerow([repr(r["time"]), r["probe_id"], repr(r["estimate"]), repr(r["stderr"])])
    _write_lines(buf.getvalue().splitlines(), args.out, _meta(args))
    return EXIT_OK


# ---------------------------------------------------------------------------

def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exchmarkov", description="Exchangeable Markov processes on structures.")
    p.add_argument("--version", action="version", version=f"exchmarkov {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate-chain", help="run a discrete-time chain")
    s.add_argument("--mu", required=True, help="sampler descriptor (file, JSON, or name)")
    s.add_argument("--init", required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--class", dest="cls")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate_chain)

    s = sub.add_parser("simulate-ct", help="simulate a continuous-time process")
    s.add_argument("--lambda", dest="lam", required=True)
    s.add_argument("--init", required=True)
    s.add_argument("--tmax", type=float, required=True)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate_ct)

    s = sub.add_parser("rates", help="print a row of jump rates")
    s.add_argument("--lambda", dest="lam", required=True)
    s.add_argument("--state", required=True)
    s.add_argument("--samples", type=int, default=4000)
    s.add_argument("--seed", type=_seed, default=0)
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("check-class", help="check HP/JEP/DAP/n-DAP")
    s.add_argument("--class", dest="cls", required=True)
    s.add_argument("--prop", choices=["hp", "jep", "dap", "ndap"], required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--enum-bound", type=int, default=5)
    s.add_argument("--search-bound", type=int)
    s.set_defaults(func=cmd_check_class)

    s = sub.add_parser("check-kernel", help="check coherence or conjugation invariance")
    s.add_argument("--kernel", required=True)
    s.add_argument("--check", choices=["consistency", "conjugation"], default="consistency")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--class", dest="cls")
    s.add_argument("--seed", type=_seed, default=0)
    s.set_defaults(func=cmd_check_kernel)

    s = sub.add_parser("classify-kernel", help="core and Lévy–Itô type of a kernel")
    s.add_argument("--kernel", required=True)
    s.add_argument("--n", type=int, default=60)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--seed", type=_seed, default=0)
    s.set_defaults(func=cmd_classify_kernel)

    s = sub.add_parser("classify-measure", help="Lévy–Itô type of each component of a rate measure")
    s.add_argument("--lambda", dest="lam", required=True)
    s.add_argument("--n", type=int, default=60)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--seed", type=_seed, default=0)
    s.set_defaults(func=cmd_classify_measure)

    s = sub.add_parser("density", help="density of a probe structure in a structure")
    s.add_argument("--probe", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--sampled", action="store_true", help="force Monte Carlo even for small inputs")
    s.set_defaults(func=cmd_density)

    s = sub.add_parser("project", help="probe densities along a trajectory")
    s.add_argument("--traj", required=True)
    s.add_argument("--probes", required=True)
    s.add_argument("--samples", type=int, default=5_000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_project)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ExchMarkovError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
