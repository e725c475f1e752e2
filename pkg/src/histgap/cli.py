"""Command-line front end.

Every command resolves its parameters from an optional JSON ``--config``
file overridden by explicit flags, prints a JSON result to stdout and
writes artifacts to ``--out-dir``. Exit codes: 0 success, 2 invalid input,
3 resource limit, 4 solver non-convergence.
"""

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analysis.bounds import BoundParams, lemma_failure_bounds, low_tail_bound, net_sizes
from .analysis.designs import bhh_design_length, design_order
from .analysis.experiments import (DesignConfig, ExperimentReport, FHConfig, GapConfig, SplitConfig,
                                   _jsonable, amplitude_profile, cell_circuit, design_experiment,
                                   fh_experiment, gap_experiment, split_experiment)
from .errors import ConvergenceError, HistgapError, ResourceError, ValidationError
from .hamiltonian import DEFAULT_DIM_CAP, LocalHamiltonian, assemble, compile_feynman_kitaev, gamma_norm
from .history import (AmplitudeCheckParams, check_amplitudes_case1, check_amplitudes_case2,
                      random_generalized_instance, reduction_report, standard_history_state)
from .qcircuit import Circuit
from .rng import GENERATOR
from .spectral import ground_and_gap

EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_CONVERGENCE = 0, 2, 3, 4
S = argparse.SUPPRESS


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _formats(text):
    out = [x.strip() for x in text.split(",") if x.strip()]
    bad = sorted(set(out) - {"json", "csv"})
    if bad:
        raise argparse.ArgumentTypeError(f"unknown formats {bad}")
    return out


def _add_global(p):
    p.add_argument("--seed", type=int, default=S, help="master seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads (else $HISTGAP_THREADS, else 1)")
    p.add_argument("--memory-cap", type=int, default=DEFAULT_DIM_CAP, help="largest Hilbert-space dimension")
    p.add_argument("--out-dir", default=".", help="directory for artifacts")
    p.add_argument("--formats", type=_formats, default=["json", "csv"], help="comma list from {json,csv}")
    p.add_argument("--config", default=None, help="JSON file of parameters; flags override it")
    p.add_argument("--deterministic", action="store_true", help="omit timestamps from outputs")


def _add_circuit(p):
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--T", type=int, default=S)
    p.add_argument("--circuit", default=S, help="'random', 'identity' or a circuit JSON file")
    p.add_argument("--clock", choices=["register", "unary"], default=S)
    p.add_argument("--rescale", choices=["none", "by_T"], default=S)
    p.add_argument("--no-input-penalty", dest="include_input_penalty", action="store_false", default=S)
    p.add_argument("--no-propagation", dest="propagation", action="store_false", default=S)


def build_parser():
    parser = _Parser(prog="histgap", description="History-state Hamiltonian workbench")
    parser.add_argument("--version", action="version", version=f"histgap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", help="compile a circuit into a clock Hamiltonian")
    _add_global(p)
    _add_circuit(p)

    p = sub.add_parser("spectrum", help="ground energy and gap")
    _add_global(p)
    _add_circuit(p)
    p.add_argument("--hamiltonian", default=S, help="Hamiltonian JSON file (instead of compiling)")
    p.add_argument("--method", choices=["auto", "dense", "krylov"], default=S)
    p.add_argument("--levels", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)

    p = sub.add_parser("check-amplitudes", help="evaluate the amplitude conditions")
    _add_global(p)
    p.add_argument("--case", type=int, choices=[1, 2], default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--T", type=int, default=S)
    p.add_argument("--profile", default=S, help="uniform, geometric, zero_window, endpoint or a JSON list")
    p.add_argument("--profile-params", type=json.loads, default=S)
    for name, typ in [("r", int), ("r1", int), ("theta", float), ("C", float), ("q", int),
                      ("ratio-constant", float), ("constant-scale", float)]:
        p.add_argument(f"--{name}", type=typ, default=S)

    p = sub.add_parser("reduce", help="reduce a random generalised instance to standard form")
    _add_global(p)
    p.add_argument("--count", type=int, default=S)
    p.add_argument("--max-dim", type=int, default=S)
    p.add_argument("--k", type=int, default=S)

    p = sub.add_parser("experiment", help="seeded experiments")
    esub = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    e = esub.add_parser("gap")
    _add_global(e)
    for name in ("n", "d", "seeds", "r", "r1"):
        e.add_argument(f"--{name}", type=int, default=S)
    e.add_argument("--T", type=_int_list, default=S)
    e.add_argument("--circuit", choices=["random", "identity"], default=S)
    e.add_argument("--clock", choices=["register", "unary"], default=S)
    e.add_argument("--rescale", choices=["none", "by_T"], default=S)
    e.add_argument("--no-input-penalty", dest="include_input_penalty", action="store_false", default=S)
    e.add_argument("--no-propagation", dest="propagation", action="store_false", default=S)
    e.add_argument("--method", choices=["auto", "dense", "krylov"], default=S)
    e.add_argument("--delta", type=float, default=S)
    e.add_argument("--rhs-scale", type=float, default=S)
    e = esub.add_parser("split")
    _add_global(e)
    for name in ("n", "d", "T", "r", "x0", "seeds"):
        e.add_argument(f"--{name}", type=int, default=S)
    e.add_argument("--profile", default=S)
    e.add_argument("--profile-params", type=json.loads, default=S)
    e.add_argument("--clock", choices=["register", "unary"], default=S)
    e.add_argument("--rescale", choices=["none", "by_T"], default=S)
    e.add_argument("--no-witness-rider", dest="witness_rider", action="store_false", default=S)
    e = esub.add_parser("fh")
    _add_global(e)
    for name in ("n", "d", "k", "seeds", "grid", "lag", "haar-samples"):
        e.add_argument(f"--{name}", type=int, default=S)
    e.add_argument("--depths", type=_int_list, default=S)
    e.add_argument("--threshold", type=float, default=S)
    e = esub.add_parser("design")
    _add_global(e)
    e.add_argument("--kind", dest="ensemble", choices=["haar", "local_random_circuit"], default=S)
    for name in ("n", "d", "depth", "samples", "s"):
        e.add_argument(f"--{name}", type=int, default=S)

    p = sub.add_parser("bounds", help="evaluate closed-form bounds")
    _add_global(p)
    p.add_argument("--lemma", required=True, choices=["7", "9", "nets", "bhh", "design-order", "tail"])
    for name in ("n", "d", "k", "m", "T", "q", "q1", "r", "r1", "s", "r-circ", "lemma7-prefactor"):
        p.add_argument(f"--{name}", type=int, default=S)
    for name in ("delta", "gamma", "alpha-mass", "cross-sum", "eps", "eps-design"):
        p.add_argument(f"--{name}", type=Fraction, default=S)
    p.add_argument("--variant", choices=["s1_lemma8", "s_lemma9", "s_appendix"], default=S)
    p.add_argument("--value", type=float, default=S, help="r or r1 for design-order")
    for name in ("C", "a", "alpha-poly", "mu", "m-half"):
        p.add_argument(f"--{name}", type=Fraction, default=S)
    return parser


_GLOBAL = {"seed", "threads", "memory_cap", "out_dir", "formats", "config", "deterministic", "command", "kind"}


def resolve(args):
    """Merge the config file with explicitly given flags (flags win)."""
    params = {}
    if args.config:
        try:
            params.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    params.update({k: v for k, v in vars(args).items() if k not in _GLOBAL})
    if hasattr(args, "seed"):
        params["seed"] = args.seed
    params.setdefault("seed", 0)
    return params


def _emit(args, stem, payload, report=None):
    out = {"version": __version__, "generator": GENERATOR, "command": stem, **payload}
    text = json.dumps(_jsonable(out), indent=2, sort_keys=True)
    print(text)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in args.formats:
        (out_dir / f"{stem}.json").write_text(text + "\n")
    if report is not None and "csv" in args.formats:
        (out_dir / f"{stem}.csv").write_text(report.to_csv())


def _circuit_from(params):
    kind = params.get("circuit", "random")
    if kind not in ("random", "identity"):
        return Circuit.from_json(Path(kind).read_text())
    try:
        n, d, T = int(params["n"]), int(params["d"]), int(params["T"])
    except KeyError as exc:
        raise ValidationError(f"missing parameter {exc.args[0]!r}") from exc
    return cell_circuit(kind, n, d, T, int(params["seed"]))


def _compile(params, cap):
    circuit = _circuit_from(params)
    H = compile_feynman_kitaev(circuit, clock=params.get("clock", "register"),
                               include_input_penalty=params.get("include_input_penalty", True),
                               rescale=params.get("rescale", "none"),
                               propagation=params.get("propagation", True), cap=cap)
    return circuit, H


def cmd_compile(args, params):
    circuit, H = _compile(params, args.memory_cap)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "circuit.json").write_text(circuit.to_json() + "\n")
    (out_dir / "hamiltonian.json").write_text(H.to_json() + "\n")
    _emit(args, "compile", {"config": params, "m": H.m, "dims": list(H.dims), "dim": H.dim,
                            "terms": len(H.terms), "locality": H.locality, "gamma": gamma_norm(H).gamma})


def cmd_spectrum(args, params):
    if "hamiltonian" in params:
        H = LocalHamiltonian.from_json(Path(params["hamiltonian"]).read_text())
    else:
        H = _compile(params, args.memory_cap)[1]
    res = ground_and_gap(assemble(H, args.memory_cap), method=params.get("method", "auto"),
                         levels=params.get("levels", 2), tol=params.get("tol", 1e-8),
                         seed=int(params["seed"]))
    _emit(args, "spectrum", {"config": params, "result": res.to_dict()})
    if "csv" in args.formats:
        (Path(args.out_dir) / "spectrum.csv").write_text(res.to_csv())


def cmd_check_amplitudes(args, params):
    n, d, T = int(params.get("n", 2)), int(params.get("d", 2)), int(params["T"])
    profile = params.get("profile", "uniform")
    if isinstance(profile, str) and profile.startswith("["):
        profile = json.loads(profile)
    amps = amplitude_profile(T, profile, params.get("profile_params"))
    circuit = cell_circuit("identity", n, d, T, 0)
    hs = standard_history_state(circuit, amplitudes=amps)
    keys = {"r", "r1", "theta", "C", "q", "ratio_constant", "constant_scale"}
    cp = AmplitudeCheckParams(**{k: v for k, v in params.items() if k in keys})
    case = int(params.get("case", 1))
    report = check_amplitudes_case1(hs, cp) if case == 1 else check_amplitudes_case2(hs, cp)
    _emit(args, "check-amplitudes", {"config": params, "report": report})


def reduce_batch(count, seed, max_dim=1024, k=3, cap=DEFAULT_DIM_CAP):
    """Reduction reports for ``count`` random instances seeded ``seed, seed+1, ...``."""
    out = []
    for j in range(count):
        gen, H = random_generalized_instance(seed + j, max_dim=max_dim, k=k)
        rep = reduction_report(gen, H, cap)
        rep["seed"] = seed + j
        out.append(rep)
    return out


def cmd_reduce(args, params):
    reports = reduce_batch(int(params.get("count", 1)), int(params["seed"]), int(params.get("max_dim", 1024)),
                           int(params.get("k", 3)), args.memory_cap)
    report = ExperimentReport("reduce", params, list(reports[0]), reports)
    _emit(args, "reduce", {"config": params, "rows": reports,
                           "all_pass": all(r["gap_inequality_pass"] and r["locality_pass"] for r in reports)},
          report)


_EXPERIMENTS = {
    "gap": (GapConfig, gap_experiment),
    "split": (SplitConfig, split_experiment),
    "fh": (FHConfig, fh_experiment),
    "design": (DesignConfig, design_experiment),
}


def experiment_config(kind, params, cap):
    """Experiment config from resolved CLI parameters."""
    cls = _EXPERIMENTS[kind][0]
    params = dict(params)
    seed = params.pop("seed")
    if kind == "design":
        params["seed"] = seed
        if "ensemble" in params:
            params["kind"] = params.pop("ensemble")
    else:
        params["master_seed"] = seed
    if kind in ("gap", "split"):
        params.setdefault("cap", cap)
    return cls.from_dict(params)


def cmd_experiment(args, params):
    cfg = experiment_config(args.kind, params, args.memory_cap)
    report = _EXPERIMENTS[args.kind][1](cfg, threads=args.threads, deterministic=args.deterministic)
    out_dir = Path(args.out_dir)
    report.write(out_dir, f"experiment_{args.kind}", args.formats)
    print(report.to_json())


def evaluate_bounds(params):
    """Evaluate one bound family from a parameter mapping (shared by CLI and tests)."""
    which = str(params["lemma"])
    get = params.get
    if which in ("7", "9"):
        keys = ("n", "d", "k", "m", "T", "q", "q1", "r", "r1", "delta", "gamma", "eps_design", "alpha_mass",
                "cross_sum", "lemma7_prefactor")
        kw = {k: params[k] for k in keys if k in params}
        if "variant" in params:
            kw["s_variant"] = params["variant"]
        out = lemma_failure_bounds(BoundParams(**kw))
        pre = f"lemma{which}_"
        return {k: v for k, v in out.items() if k.startswith(pre) or k in ("s", "s1", "params")}
    if which == "nets":
        return net_sizes(int(get("m")), int(get("k")), int(get("d")), params["eps"],
                         n=get("n"), r_circ=get("r_circ"))
    if which == "bhh":
        return {"length": bhh_design_length(int(get("n")), int(get("d")), int(get("s")), params["eps"])}
    if which == "design-order":
        return {"order": design_order(params["value"], int(get("n")), int(get("d")),
                                      get("variant", "s_appendix"))}
    if which == "tail":
        return {"value": low_tail_bound(params["C"], params["a"], params["alpha_poly"], params["mu"],
                                        params["eps_design"], params["m_half"], params["delta"])}
    raise ValidationError(f"unknown bound family {which!r}")


def cmd_bounds(args, params):
    try:
        result = evaluate_bounds(params)
    except KeyError as exc:
        raise ValidationError(f"missing parameter {exc.args[0]!r}") from exc
    _emit(args, "bounds", {"config": params, "result": result})


_COMMANDS = {
    "compile": cmd_compile, "spectrum": cmd_spectrum, "check-amplitudes": cmd_check_amplitudes,
    "reduce": cmd_reduce, "experiment": cmd_experiment, "bounds": cmd_bounds,
}


def main(argv=None):
    """Run the CLI; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = resolve(args)
        _COMMANDS[args.command](args, params)
    except ResourceError as exc:
        print(f"histgap: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConvergenceError as exc:
        print(f"histgap: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (HistgapError, ValueError, TypeError, OSError) as exc:
        print(f"histgap: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
