"""Command-line interface: state generation, disentangling runs, verification.

Subcommands: gen-state, disentangle, verify, export, info.  Exit codes:
0 success, 1 usage error, 2 I/O error, 3 invariant violation detected.
Reports are byte-stable for fixed seed and flags (wall-clock data goes to the
run manifest, never into report.json).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .driver import (DisentangleConfig, OptimizerOptions, disentangle)
from .entropy import tail_weight
from .gates import export_gate_list, load_circuit, save_circuit
from .mps import (GammaLambdaMPS, InvariantViolation, load_mps, mps_from_dict,
                  save_mps)
from .states import (CODES, HamiltonianSpec, aklt, cluster, ed_ground_state,
                     ghz, logical_bell)
from .verification import (fourth_moment_check, gradient_moment_stats,
                           prep_error_check, rank_bound_check,
                           second_moment_check)

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INVARIANT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _manifest(command: str, args: argparse.Namespace, inputs: list[str],
              outputs: list[str], config: dict | None = None) -> dict:
    return {
        "command": command,
        "argv": sys.argv[1:],
        "config": config or {},
        "inputs": inputs,
        "outputs": outputs,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }


def _print_state_summary(mps: GammaLambdaMPS) -> None:
    dims = mps.bond_dims()
    tails = [tail_weight(s) for s in mps.lambdas]
    print(f"sites: {mps.n}")
    print("bond dims:", " ".join(str(d) for d in dims))
    print("tail weights:", " ".join(f"{t:.3e}" for t in tails))


# ---------------------------------------------------------------------------
# gen-state
# ---------------------------------------------------------------------------

def cmd_gen_state(args) -> int:
    fam = args.family
    if fam == "ghz":
        state = ghz(args.n)
    elif fam == "cluster":
        state = cluster(args.n)
    elif fam == "aklt":
        state = aklt(args.n)
    elif fam == "logical-bell":
        code = CODES.get(args.code)
        if code is None:
            raise ValueError(f"unknown code {args.code!r}; options: {sorted(CODES)}")
        state = logical_bell(code, args.layout)
    else:
        couplings = {}
        for key in ("hx", "hz", "jz", "t", "u", "n_up", "n_down"):
            val = getattr(args, key, None)
            if val is not None:
                couplings[key] = val
        result = ed_ground_state(HamiltonianSpec(fam.replace("-", "_"), args.n, couplings))
        state = result.mps
        print(f"ground energy: {result.energy:.12f}"
              + (" (degenerate manifold, deterministic pick)" if result.degenerate else ""))
    save_mps(state, args.output)
    _write_json(args.output + ".manifest.json",
                _manifest("gen-state", args, [], [args.output]))
    _print_state_summary(state)
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# disentangle
# ---------------------------------------------------------------------------

def _parse_alpha(text: str | None):
    if text in (None, "", "default"):
        return None
    parts = [float(x) for x in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def cmd_disentangle(args) -> int:
    mps = load_mps(args.input)
    config = DisentangleConfig(
        max_layers=args.layers,
        max_bond=args.bond_cap,
        cutoff=args.cutoff,
        alpha_schedule=_parse_alpha(args.alpha),
        optimizer=OptimizerOptions(restarts=args.restarts),
        target_tail=args.target_tail,
        target_eps_site=args.target_eps_site,
        seed=args.seed,
        threads=args.threads,
    )
    circuit, report, _ = disentangle(mps, config)

    outdir = args.output
    os.makedirs(outdir, exist_ok=True)
    paths = {name: os.path.join(outdir, name) for name in
             ("input.mps.json", "circuit.json", "report.json", "tails.csv",
              "manifest.json")}
    save_mps(mps, paths["input.mps.json"])
    save_circuit(circuit, paths["circuit.json"])
    _write_json(paths["report.json"], report.to_dict())
    with open(paths["tails.csv"], "w") as fh:
        fh.write(report.tails_csv())
    manifest = _manifest("disentangle", args, [args.input], sorted(paths.values()),
                         config.describe())
    manifest["layer_seconds"] = report.layer_seconds
    _write_json(paths["manifest.json"], manifest)

    print(f"layers run: {report.layers_run}"
          + (f" (converged at layer {report.converged_layer})"
             if report.converged_layer is not None else " (no early convergence)"))
    print(f"eps: {report.eps:.6e}")
    print(f"eps_site: {report.eps_site:.6e}")
    print(f"max bond dimension: {report.max_bond_seen}")
    print(f"wrote {outdir}/")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_rank_bound(args) -> dict:
    out = rank_bound_check(trials=args.trials, seed=args.seed)
    out["check"] = "rank-bound"
    out["status"] = "pass" if out["ok"] else "fail"
    return out

def _verify_prep_error(args) -> dict:
    if args.run:
        mps = load_mps(os.path.join(args.run, "input.mps.json"))
        circuit = load_circuit(os.path.join(args.run, "circuit.json"))
        with open(os.path.join(args.run, "report.json")) as fh:
            rep = json.load(fh)
        result = prep_error_check(mps, circuit, rep["eps"], rep["reverse_p_max"])
        cases = [result]
    else:
        from .driver import _overlap_error_detail
        from .mps import canonicalize
        rng = np.random.default_rng(args.seed)
        cases = []
        for _ in range(args.runs):
            n = int(rng.choice([6, 8, 10]))
            v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            state = canonicalize(v / np.linalg.norm(v))
            cap = int(rng.choice([2, 4]))
            cut = float(rng.choice([1e-3, 1e-5]))
            cfg = DisentangleConfig(max_layers=4, max_bond=cap, cutoff=cut,
                                    seed=int(rng.integers(1 << 30)))
            circuit, report, _ = disentangle(state, cfg)
            cases.append(prep_error_check(state, circuit, report.eps,
                                          report.reverse_p_max))
    return {
        "check": "prep-error",
        "cases": cases,
        "status": "pass" if all(c["ok"] for c in cases) else "fail",
    }

def _verify_grad_stats(args) -> dict:
    d = args.bond_dim
    if args.spectrum == "flat":
        m = d if args.center_dim == "D" else 2 * d
        lam = np.ones(m) / np.sqrt(m)
    else:
        p = np.array([float(x) for x in args.spectrum.split(",")])
        if np.any(p <= 0):
            raise ValueError("spectrum weights must be positive")
        lam = np.sqrt(p / p.sum())
    stats = gradient_moment_stats(d, lam, samples=args.samples, seed=args.seed)
    out = stats.to_dict()
    out["check"] = "grad-stats"
    mean_ok = bool(np.all(stats.mean_z_scores() < 5.0))
    out["status"] = ("flagged" if stats.sign_flag else
                     ("pass" if mean_ok else "fail"))
    out["mean_zero_within_5_sigma"] = mean_ok
    if stats.sign_flag:
        out["note"] = ("closed-form variance is negative for this non-flat "
                       "spectrum while the sampled variance is nonnegative; "
                       "reported as a discrepancy, Monte Carlo is ground truth")
    return out

def _verify_haar(args) -> dict:
    second = second_moment_check(args.dim, samples=args.samples, seed=args.seed)
    fourth = fourth_moment_check(args.dim, samples=args.samples, seed=args.seed)
    ok = second["max_z"] < 3.0 and fourth["max_z"] < 3.0
    return {
        "check": "haar-moments",
        "second_moment": second,
        "fourth_moment": fourth,
        "status": "pass" if ok else "fail",
    }


def cmd_verify(args) -> int:
    runners = {
        "rank-bound": _verify_rank_bound,
        "prep-error": _verify_prep_error,
        "grad-stats": _verify_grad_stats,
        "haar-moments": _verify_haar,
    }
    result = runners[args.check](args)
    text = json.dumps(result, indent=1, sort_keys=True, default=float)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.output}")
    print(f"{result['check']}: {result['status']}")
    if not args.output:
        print(text)
    return 0 if result["status"] in ("pass", "flagged") else 1


# ---------------------------------------------------------------------------
# export / info
# ---------------------------------------------------------------------------

def cmd_export(args) -> int:
    circuit = load_circuit(args.input)
    text = export_gate_list(circuit, prepare=(args.direction == "prepare"))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        print(f"wrote {args.output} ({circuit.gate_count()} two-qubit gates)")
    else:
        sys.stdout.write(text)
    return 0


def cmd_info(args) -> int:
    with open(args.input) as fh:
        data = json.load(fh)
    if "gammas" in data:
        mps = mps_from_dict(data)
        print(f"{args.input}: MPS file")
        _print_state_summary(mps)
        deviations = mps.validate()
        print("canonical-form deviations:",
              " ".join(f"{k}={v:.2e}" for k, v in deviations.items()))
    elif "layers" in data:
        circuit = load_circuit(args.input)
        print(f"{args.input}: circuit file")
        print(f"sites: {circuit.n}, direction: {circuit.direction}")
        print(f"gate layers: {circuit.num_layers}, two-qubit gates: {circuit.gate_count()}")
        print(f"readoff layer: {'yes' if circuit.readoff is not None else 'no'}")
    elif "tails" in data:
        print(f"{args.input}: run report")
        for key in ("n", "layers_run", "converged_layer", "eps", "eps_site",
                    "max_bond_seen"):
            print(f"{key}: {data[key]}")
    else:
        raise ValueError("unrecognized file contents")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mpsprep",
                     description="Compile MPS into preparation circuits by "
                                 "variational disentangling.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-state", help="construct a benchmark state")
    g.add_argument("family", choices=["ghz", "cluster", "aklt", "logical-bell",
                                      "ising", "xy", "xxz", "fermi-hubbard"])
    g.add_argument("--n", type=int, default=8,
                   help="sites (spin-1 sites for aklt, electronic sites for fermi-hubbard)")
    g.add_argument("--hx", type=float, default=None)
    g.add_argument("--hz", type=float, default=None)
    g.add_argument("--jz", type=float, default=None)
    g.add_argument("--t", type=float, default=None)
    g.add_argument("--u", type=float, default=None)
    g.add_argument("--n-up", dest="n_up", type=int, default=None)
    g.add_argument("--n-down", dest="n_down", type=int, default=None)
    g.add_argument("--code", default="5_1_3", help="stabilizer code name")
    g.add_argument("--layout", choices=["separated", "interlaced"], default="separated")
    g.add_argument("-o", "--output", default="state.mps.json")
    g.set_defaults(func=cmd_gen_state)

    d = sub.add_parser("disentangle", help="optimize a disentangling circuit")
    d.add_argument("input", help="MPS JSON file")
    d.add_argument("--layers", type=int, default=16)
    d.add_argument("--bond-cap", dest="bond_cap", type=int, default=64)
    d.add_argument("--cutoff", type=float, default=1e-7)
    d.add_argument("--alpha", default="default",
                   help="Rényi schedule: a number, a comma list cycled per "
                        "layer, or 'default' (1/2 every third layer, else 1)")
    d.add_argument("--restarts", type=int, default=3)
    d.add_argument("--target-tail", dest="target_tail", type=float, default=1e-10)
    d.add_argument("--target-eps-site", dest="target_eps_site", type=float, default=0.0)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--threads", type=int, default=1)
    d.add_argument("-o", "--output", default="run",
                   help="output directory for circuit/report/tails/manifest")
    d.set_defaults(func=cmd_disentangle)

    v = sub.add_parser("verify", help="numeric checks of the bounds and statistics")
    v.add_argument("check", choices=["rank-bound", "prep-error", "grad-stats",
                                     "haar-moments"])
    v.add_argument("--trials", type=int, default=10000, help="rank-bound spectra")
    v.add_argument("--run", default=None, help="disentangle output dir (prep-error)")
    v.add_argument("--runs", type=int, default=5, help="fresh runs (prep-error)")
    v.add_argument("--bond-dim", dest="bond_dim", type=int, default=2)
    v.add_argument("--spectrum", default="flat",
                   help="'flat' or comma-separated squared weights")
    v.add_argument("--center-dim", dest="center_dim", choices=["D", "2D"], default="D",
                   help="length of the flat center spectrum relative to the bond dim")
    v.add_argument("--samples", type=int, default=100000)
    v.add_argument("--dim", type=int, default=4, help="unitary size (haar-moments)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("-o", "--output", default=None, help="write the JSON report here")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("export", help="write a circuit as a plain gate list")
    e.add_argument("input", help="circuit JSON file")
    e.add_argument("--direction", choices=["prepare", "disentangle"], default="prepare")
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(func=cmd_export)

    i = sub.add_parser("info", help="inspect an MPS, circuit, or report file")
    i.add_argument("input")
    i.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
