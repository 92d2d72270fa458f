"""Command-line entry point wiring all solvers and emitters together.

Every run is deterministic: randomness flows from --seed, and sub-streams
are split with numpy's SeedSequence(entropy=seed, spawn_key=(k,)).  Emitted
CSV and JSON files format floats with Python's shortest round-trip repr, so
reruns with the same inputs are byte-identical; a manifest.json records the
resolved configuration and a sha256 digest per output file.

Exit codes: 0 success, 1 domain or validation problem, 2 capability limit.
Errors print one machine-parsable line to stderr: error:<kind>:<message>.
"""

import argparse
import csv
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import CapabilityError, CliqueHubError, DomainError
from .motifs import WeightTable, hom_density, resolve_motif
from .planar import phi_region_emit, phi_solve
from .hamiltonian import EdgeFModel, edge_f_solve, load_hamiltonian, psi_solve
from .nmf import NmfProblem, nmf_solve, phi_np_solve
from .sampler import run_experiment
from . import finner


FIGURE_SCENARIOS = {
    "fig2A": (2.0, 15.0, 100.0),
    "fig2B": (2.0, 24.0, 100.0),
    "fig2C": (4.0, 25.0, 100.0),
    "fig2D": (4.0, 31.5, 100.0),
    "fig3": (12.0, 88.0, 1000.0),
}
FIGURE_FAMILY = ("K12", "C3", "C4")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error:usage:%s\n" % message.replace("\n", " "))
        raise SystemExit(1)


def _py(obj):
    """Coerce numpy scalars and arrays to plain Python containers."""
    if isinstance(obj, dict):
        return {str(k): _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _py(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _emit(args, payload):
    """Stdout is always one line of compact JSON; --json is the explicit
    form of the default and changes nothing."""
    print(json.dumps(_py(payload), separators=(",", ":")))


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def _cell(v):
    """One CSV cell: shortest round-trip repr for floats, plain otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


class Manifest:
    """Collects emitted files and writes the run record."""

    def __init__(self, argv, args, out_dir=None):
        self.command = list(argv)
        self.config = {k: v for k, v in sorted(vars(args).items())
                       if k != "func" and v is not None}
        self.seed = getattr(args, "seed", None)
        self.started = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self.out_dir = out_dir
        self.files = {}
        self.paths = []

    def resolve(self, name):
        if self.out_dir is not None:
            os.makedirs(self.out_dir, exist_ok=True)
            return os.path.join(self.out_dir, name)
        return name

    def add(self, path):
        self.files[os.path.basename(path)] = _sha256(path)
        self.paths.append(path)

    def write_text(self, name, text):
        path = self.resolve(name)
        with open(path, "w") as fh:
            fh.write(text)
        self.add(path)
        return path

    def write_bytes(self, name, blob):
        path = self.resolve(name)
        with open(path, "wb") as fh:
            fh.write(blob)
        self.add(path)
        return path

    def write_csv(self, name, header, rows):
        path = self.resolve(name)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        self.add(path)
        return path

    def finish(self):
        if not self.files:
            return None
        combined = hashlib.sha256()
        for name in sorted(self.files):
            combined.update(("%s:%s\n" % (name, self.files[name])).encode())
        body = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": __version__,
            "started": self.started,
            "finished": datetime.datetime.now(
                datetime.timezone.utc).isoformat(),
            "files": self.files,
            "digest": combined.hexdigest(),
        }
        if self.out_dir is not None:
            path = self.resolve("manifest.json")
        else:
            # without --out the record goes next to the files it hashes,
            # never into the current directory
            path = os.path.join(os.path.dirname(self.paths[0]),
                                "manifest.json")
        with open(path, "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _load_table(path):
    if path.endswith(".json"):
        with open(path) as fh:
            return WeightTable.from_json_dict(json.load(fh))
    with open(path, "rb") as fh:
        return WeightTable.from_bytes(fh.read())


def _motif_list(text):
    return [resolve_motif(name.strip()) for name in text.split(",")
            if name.strip()]


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as bad:
        raise DomainError("bad float list: %s" % bad)


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_hom_density(args, manifest):
    motif = resolve_motif(args.motif)
    table = _load_table(args.table)
    value = hom_density(motif, table, scale=args.scale, engine=args.engine)
    payload = {"motif": motif.name, "n": table.n, "scale": args.scale,
               "value": value}
    _emit(args, payload)
    return 0


def cmd_planar_phi(args, manifest):
    motifs = _motif_list(args.motifs)
    s = _float_list(args.s)
    sol = phi_solve(motifs, s)
    payload = {"value": float(sol.value),
               "optimizers": [[float(o.a), float(o.b)]
                              for o in sol.optimizers]}
    if args.emit_region or args.emit_curves:
        rows, curves = phi_region_emit(motifs, s)
        if args.emit_region:
            manifest.write_csv(args.emit_region,
                               ["a", "b", "feasible", "objective"],
                               [(a, b, int(ok), obj)
                                for a, b, ok, obj in rows])
        if args.emit_curves:
            doc = {"curves": [{"motif": k, "name": motifs[k].name,
                               "points": curves[k]}
                              for k in sorted(curves)]}
            manifest.write_text(args.emit_curves,
                               json.dumps(doc, separators=(",", ":")) + "\n")
    _emit(args, payload)
    return 0


def cmd_psi(args, manifest):
    spec = load_hamiltonian(args.hamiltonian)
    sol = psi_solve(spec, seed=args.seed)
    payload = {"psi": sol.psi, "psi_direct": sol.psi_direct,
               "psi_dual": sol.psi_dual, "duality_gap": sol.duality_gap,
               "optimizers": [list(o) for o in sol.optimizers],
               "s_star": [list(v) for v in sol.s_star],
               "warnings": list(sol.warnings)}
    _emit(args, payload)
    return 0


def _edge_f_row(motif, gamma, beta, shift):
    sol = edge_f_solve(EdgeFModel(motif, beta, gamma, shift))
    return sol


def cmd_edge_f(args, manifest):
    motif = resolve_motif(args.motif)
    if args.beta is None and not args.beta_grid:
        raise DomainError("edge-f wants --beta or --beta-grid")
    if args.beta_grid:
        try:
            lo, hi, step = (float(v) for v in args.beta_grid.split(":"))
        except ValueError:
            raise DomainError("--beta-grid wants lo:hi:step")
        if step <= 0 or hi < lo:
            raise DomainError("--beta-grid wants lo <= hi and step > 0")
        betas = []
        k = 0
        while lo + k * step <= hi + 1e-12:
            betas.append(lo + k * step)
            k += 1
    else:
        betas = [args.beta]
    rows = []
    last = None
    for beta in betas:
        sol = _edge_f_row(motif, args.gamma, beta, args.shift)
        rows.append((beta, sol.phase, sol.s_star, sol.a_star, sol.b_star,
                     sol.psi))
        last = sol
    if args.emit:
        manifest.write_csv(args.emit,
                           ["beta", "phase", "s_star", "a_star", "b_star",
                            "psi"], rows)
    payload = {"phase": last.phase, "s_star": last.s_star,
               "a_star": last.a_star, "b_star": last.b_star,
               "psi": last.psi, "beta_c": last.beta_c, "s_c": last.s_c,
               "rows": len(rows)}
    _emit(args, payload)
    return 0


def cmd_nmf(args, manifest):
    spec = load_hamiltonian(args.hamiltonian)
    prob = NmfProblem(args.n, args.p, spec=spec)
    sol = nmf_solve(prob, seed=args.seed)
    payload = {"value": sol.value,
               "iterations": sol.diagnostics["iterations"],
               "residuals": sol.grad_norm,
               "witness_value": sol.diagnostics["witness_value"],
               "warnings": list(sol.warnings)}
    if args.emit:
        manifest.write_bytes(args.emit, sol.table.to_bytes())
    _emit(args, payload)
    return 0


def cmd_phi_np(args, manifest):
    motifs = _motif_list(args.motifs)
    s = _float_list(args.s)
    prob = NmfProblem(args.n, args.p, s=s,
                      family=tuple(m.name for m in motifs))
    sol = phi_np_solve(prob, seed=args.seed)
    payload = {"value": sol.value,
               "iterations": len(sol.diagnostics["candidates"]),
               "residuals": sol.residual,
               "witness_value": sol.diagnostics["witness_value"],
               "selected": sol.diagnostics["selected"]}
    if args.emit:
        manifest.write_bytes(args.emit, sol.table.to_bytes())
    _emit(args, payload)
    return 0


def cmd_sample(args, manifest):
    config = {"n": args.n, "p": args.p, "sweeps": args.sweeps,
              "burnin": args.burnin, "chains": args.chains,
              "seed": args.seed, "thin": args.thin,
              "detect": bool(args.detect)}
    if args.hamiltonian:
        config["spec"] = load_hamiltonian(args.hamiltonian)
    if args.xi is not None:
        config["xi"] = args.xi
    if args.delta_hub is not None:
        config["delta_hub"] = args.delta_hub
    result = run_experiment(config)
    if args.emit_traj:
        manifest.write_csv(args.emit_traj, result.columns, result.rows)
    if args.emit_graph:
        final = result.tables[max(result.tables)]
        manifest.write_bytes(args.emit_graph, WeightTable(final).to_bytes())
    summary = _py(result.summary)
    payload = {"rows": len(result.rows), "summary": summary}
    _emit(args, payload)
    return 0


def cmd_finner_check(args, manifest):
    if args.instance is None and args.suite is None:
        raise DomainError("finner-check wants --instance or --suite")
    if args.instance is not None:
        inst = finner.load_instance(args.instance)
        value = finner.finner_integral(inst)
        ok = value <= 1.0 + 1e-10
        payload = {"integral": value, "bound_ok": ok,
                   "classes": [list(c) for c in inst.classes]}
        if args.recover:
            family, residuals = finner.recover_factors(inst)
            payload["residuals"] = residuals
            payload["factors"] = {
                ",".join(str(v) for v in members): h.ravel().tolist()
                for members, h in family.items()}
        _emit(args, payload)
        return 0 if ok else 1
    if args.suite != "random":
        raise DomainError("unknown suite %r" % args.suite)
    worst = 0.0
    for k in range(args.count):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=args.seed, spawn_key=(k,)))
        inst = finner.random_instance(rng)
        worst = max(worst, finner.finner_integral(inst))
    ok = worst <= 1.0 + 1e-10
    payload = {"count": args.count, "max_integral": worst, "all_ok": ok}
    _emit(args, payload)
    return 0 if ok else 1


def cmd_emit_figure(args, manifest):
    if args.scenario not in FIGURE_SCENARIOS:
        raise DomainError("unknown scenario %r (choices: %s)"
                          % (args.scenario,
                             ", ".join(sorted(FIGURE_SCENARIOS))))
    s = FIGURE_SCENARIOS[args.scenario]
    motifs = _motif_list(",".join(FIGURE_FAMILY))
    sol = phi_solve(motifs, s)
    rows, curves = phi_region_emit(motifs, s)
    manifest.write_csv("region.csv", ["a", "b", "feasible", "objective"],
                       [(a, b, int(ok), obj) for a, b, ok, obj in rows])
    curve_doc = {"curves": [{"motif": k, "name": motifs[k].name,
                             "points": curves[k]} for k in sorted(curves)]}
    manifest.write_text("curves.json",
                        json.dumps(curve_doc, separators=(",", ":")) + "\n")
    opt_rows = [(o.a, o.b, 0.5 * o.a + o.b, 0, 0.0) for o in sol.optimizers]
    runner = None
    taken = [(o.a, o.b) for o in sol.optimizers]
    for a, b, obj in sorted(sol.candidates, key=lambda r: r[2]):
        if any(abs(a - x) + abs(b - y) <= 1e-8 for x, y in taken):
            continue
        runner = (a, b, obj, 1, obj - sol.value)
        break
    if runner is not None:
        opt_rows.append(runner)
    manifest.write_csv("optimizers.csv",
                       ["a", "b", "objective", "near_tie", "gap"], opt_rows)
    line_doc = {"phi": sol.value, "coefficients": [0.5, 1.0],
                "equation": "0.5*a + b = phi", "s": list(s)}
    manifest.write_text("line.json",
                        json.dumps(line_doc, separators=(",", ":")) + "\n")
    payload = {"scenario": args.scenario, "phi": sol.value,
               "optimizers": [[o.a, o.b] for o in sol.optimizers],
               "rows": len(opt_rows)}
    _emit(args, payload)
    return 0


# ---------------------------------------------------------------------------
# parser assembly and dispatch


def _common(sub, seed=True, tol=True):
    if seed:
        sub.add_argument("--seed", type=int, default=0)
    if tol:
        sub.add_argument("--tol", type=float, default=None)
    sub.add_argument("--out", default=None, help="directory for emitted files")
    sub.add_argument("--json", action="store_true",
                     help="machine-readable stdout (already the default)")


def build_parser():
    parser = _Parser(prog="cliquehub",
                     description="clique-hub variational solvers, samplers, "
                                 "and inequality checks")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command")

    sub = subs.add_parser("hom-density", parents=[], help="motif density")
    sub.add_argument("--motif", required=True)
    sub.add_argument("--table", required=True)
    sub.add_argument("--scale", type=float, default=1.0)
    sub.add_argument("--engine", default="auto")
    _common(sub)
    sub.set_defaults(func=cmd_hom_density)

    sub = subs.add_parser("planar-phi", help="planar variational problem")
    sub.add_argument("--motifs", required=True)
    sub.add_argument("--s", required=True)
    sub.add_argument("--emit-region", default=None)
    sub.add_argument("--emit-curves", default=None)
    _common(sub)
    sub.set_defaults(func=cmd_planar_phi)

    sub = subs.add_parser("psi", help="tilted optimization value")
    sub.add_argument("--hamiltonian", required=True)
    _common(sub)
    sub.set_defaults(func=cmd_psi)

    sub = subs.add_parser("edge-f", help="single-motif phase solver")
    sub.add_argument("--motif", required=True)
    sub.add_argument("--gamma", type=float, required=True)
    sub.add_argument("--beta", type=float, default=None)
    sub.add_argument("--shift", type=float, default=1.0)
    sub.add_argument("--beta-grid", default=None, metavar="LO:HI:STEP")
    sub.add_argument("--emit", default=None)
    _common(sub)
    sub.set_defaults(func=cmd_edge_f)

    sub = subs.add_parser("nmf", help="mean-field upper bound")
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--hamiltonian", required=True)
    sub.add_argument("--emit", default=None)
    _common(sub)
    sub.set_defaults(func=cmd_nmf)

    sub = subs.add_parser("phi-np", help="entropy under density floors")
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--motifs", required=True)
    sub.add_argument("--s", required=True)
    sub.add_argument("--emit", default=None)
    _common(sub)
    sub.set_defaults(func=cmd_phi_np)

    sub = subs.add_parser("sample", help="heat-bath chains with detection")
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--hamiltonian", default=None)
    sub.add_argument("--sweeps", type=int, required=True)
    sub.add_argument("--burnin", type=int, default=0)
    sub.add_argument("--chains", type=int, default=1)
    sub.add_argument("--thin", type=int, default=1)
    sub.add_argument("--detect", action="store_true")
    sub.add_argument("--delta-hub", type=float, default=None)
    sub.add_argument("--xi", type=float, default=None)
    sub.add_argument("--emit-traj", default=None)
    sub.add_argument("--emit-graph", default=None)
    _common(sub)
    sub.set_defaults(func=cmd_sample)

    sub = subs.add_parser("finner-check", help="product inequality checks")
    sub.add_argument("--instance", default=None)
    sub.add_argument("--recover", action="store_true")
    sub.add_argument("--suite", default=None)
    sub.add_argument("--count", type=int, default=100)
    _common(sub)
    sub.set_defaults(func=cmd_finner_check)

    sub = subs.add_parser("emit-figure", help="figure data bundles")
    sub.add_argument("--scenario", required=True)
    _common(sub)
    sub.set_defaults(func=cmd_emit_figure)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return int(stop.code or 0)
    if getattr(args, "command", None) is None or not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        sys.stderr.write("error:usage:missing command\n")
        return 1
    manifest = Manifest(argv, args, out_dir=getattr(args, "out", None))
    try:
        code = args.func(args, manifest)
    except CapabilityError as exc:
        sys.stderr.write("error:capability:%s\n"
                         % str(exc).replace("\n", " "))
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write("error:domain:%s\n" % str(exc).replace("\n", " "))
        return 1
    except CliqueHubError as exc:
        sys.stderr.write("error:domain:%s\n" % str(exc).replace("\n", " "))
        return 1
    manifest.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
