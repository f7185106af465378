"""Command-line entry point.

Every command writes its outputs and a ``manifest.json`` into ``--out-dir``.
The manifest records the resolved parameters and a SHA-256 of each output;
``ricciframe replay manifest.json`` re-runs the command and checks the hashes.

Exit codes: 0 success, 2 usage error, 3 unreadable or malformed input,
4 invalid parameters or data, 5 replay mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cbed import CbedConfig, cbed_run
from .curvature import SOLVERS, WORKERS_ENV, CurvatureConfig, all_curvatures, default_workers, normalize_curvatures
from .dynamics import VARIANTS, ExperimentConfig, PropagationConfig, generic_initial_signal, label_propagation_experiment, propagate
from .framelet import build_exact_framelets
from .graph import LabeledPartition, build_normalized_laplacian, eigendecompose, generate, homophily_measure
from .io import (
    ParseError,
    format_coo,
    format_curvature,
    format_edge_list,
    format_histogram,
    read_edge_list,
    read_labels,
    to_json,
    write_text,
)
from .reweight import reweight_pipeline

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INVALID, EXIT_REPLAY = 0, 2, 3, 4, 5
MANIFEST = "manifest.json"


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


# -- helpers -----------------------------------------------------------------

def _offset(args) -> int:
    return 1 if args.one_based else 0


def _load_graph(args):
    return read_edge_list(args.graph, one_based=args.one_based)


def _curvature_cfg(args) -> CurvatureConfig:
    return CurvatureConfig(alpha=args.alpha, solver=args.solver, reg=args.reg, workers=args.workers)


def _scale(value: str):
    return value if value == "auto" else int(value)


def _variant_laplacian(g, variant: str, ccfg: CurvatureConfig):
    if variant == "plain":
        return build_normalized_laplacian(g)
    return reweight_pipeline(g, ccfg, variant).laplacian


# -- commands ------------------------------------------------------------------
# Each command returns ({filename: text}, [summary lines]).

def cmd_curvature(args):
    g = _load_graph(args)
    if g.num_edges == 0:
        raise ValueError("graph has no edges")
    cmap = normalize_curvatures(all_curvatures(g, _curvature_cfg(args)))
    off = _offset(args)
    outputs = {
        "curvature.txt": format_curvature(cmap.edges, cmap.values, cmap.normalized, off),
        "curvature_hist.csv": format_histogram(cmap.values),
    }
    summary = [f"edges: {g.num_edges}", f"min kappa: {cmap.min!r}", f"max kappa: {cmap.max!r}"]
    return outputs, summary


def cmd_reweight(args):
    g = _load_graph(args)
    if g.num_edges == 0:
        raise ValueError("graph has no edges")
    rg = reweight_pipeline(g, _curvature_cfg(args), args.variant)
    off = _offset(args)
    cmap = rg.curvature
    outputs = {
        "reweighted_edges.txt": format_edge_list(g.edges, rg.zeta_weights, off),
        "laplacian_coo.txt": format_coo(rg.laplacian),
        "curvature.txt": format_curvature(cmap.edges, cmap.values, cmap.normalized, off),
    }
    summary = [
        f"variant: {args.variant}",
        f"weights: min {float(rg.zeta_weights.min())!r} max {float(rg.zeta_weights.max())!r}",
        f"zero-weight edges: {len(rg.zero_edges)}",
    ]
    return outputs, summary


def cmd_cbed(args):
    g = _load_graph(args)
    cfg = CbedConfig(
        max_iterations=args.max_iter,
        target_kappa_upper=args.target_kappa,
        cuts_per_iteration=args.cuts,
        seed=args.seed,
        connectivity_guard=args.guard,
        curvature=_curvature_cfg(args),
    )
    pruned, report = cbed_run(g, cfg)
    off = _offset(args)
    outputs = {
        "rewired_edges.txt": format_edge_list(pruned.edges, pruned.weights if pruned.is_weighted() else None, off),
        "cbed_report.json": to_json(dict(report.to_dict(), removed=[[i + off, j + off] for i, j in report.removed])),
    }
    final = report.kappa_max[-1]
    summary = [
        f"terminated by: {report.terminated_by}",
        f"iterations: {report.iterations}",
        f"edges removed: {len(report.removed)}",
        f"final max kappa: {final!r}",
    ]
    if report.note:
        summary.append(report.note)
    return outputs, summary


def cmd_dynamics(args):
    g = _load_graph(args)
    lap = _variant_laplacian(g, args.variant, _curvature_cfg(args))
    decomp = eigendecompose(lap)
    system = build_exact_framelets(decomp, J=1, m=_scale(args.scale))
    cfg = PropagationConfig(theta=args.theta, steps=args.steps, mode=args.mode, nonlinearity=args.nonlinearity)
    h0 = generic_initial_signal(decomp, args.channels, args.seed)
    trace = propagate(lap, system, cfg, h0)
    report = {
        "regime": trace.regime,
        "rho": trace.rho,
        "final_energy": trace.final,
        "final_half_energy": trace.final / 2.0,
        "scale_m": system.m,
        "theta": args.theta,
        "steps": args.steps,
    }
    outputs = {"energy.csv": trace.to_csv(), "dynamics.json": to_json(report)}
    summary = [f"regime: {trace.regime}", f"rho: {trace.rho!r}", f"final energy: {trace.final!r}"]
    return outputs, summary


def _experiment_graph(args, seed):
    if args.generator:
        try:
            params = json.loads(args.params) if args.params else {}
        except json.JSONDecodeError as exc:
            raise _Failure(EXIT_INPUT, f"--params is not valid JSON: {exc}") from None
        g = generate(args.generator, params, seed=seed)
        if g.labels is None:
            raise ValueError(f"generator {args.generator!r} produced no labels")
        return g
    g = _load_graph(args)
    return g.with_labels(read_labels(args.labels, g.n, one_based=args.one_based))


def cmd_experiment(args):
    variants = args.variants
    cfg = ExperimentConfig(
        k=args.steps,
        theta=args.theta if args.theta == "auto" else float(args.theta),
        curvature=_curvature_cfg(args),
        cbed_target=args.target_kappa,
        cbed_iterations=args.max_iter,
        cbed_cuts=args.cuts,
    )
    rows = []
    for seed in range(args.seed, args.seed + args.seeds):
        g = _experiment_graph(args, seed)
        part = LabeledPartition.stratified(g.labels, args.train_fraction, seed)
        for v in variants:
            acc = label_propagation_experiment(g, part, v, cfg, seed=seed)
            rows.append({"variant": v, "seed": seed, "accuracy": acc})
    means = {v: float(np.mean([r["accuracy"] for r in rows if r["variant"] == v])) for v in variants}
    outputs = {"experiment.json": to_json({"rows": rows, "mean": means})}
    summary = [f"{v}: mean accuracy {means[v]:.4f}" for v in variants]
    return outputs, summary


def cmd_homophily(args):
    g = _load_graph(args)
    g = g.with_labels(read_labels(args.labels, g.n, one_based=args.one_based))
    h = homophily_measure(g)
    return {"homophily.json": to_json({"homophily": h, "nodes": g.n, "edges": g.num_edges})}, [f"H(G): {h!r}"]


COMMANDS = {
    "curvature": cmd_curvature,
    "reweight": cmd_reweight,
    "cbed": cmd_cbed,
    "dynamics": cmd_dynamics,
    "experiment": cmd_experiment,
    "homophily": cmd_homophily,
}
_PATH_PARAMS = ("graph", "labels")


# -- parser --------------------------------------------------------------------

def _workers(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return n


def _variants(value: str) -> list[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    bad = [v for v in names if v not in VARIANTS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown variant(s) {bad}; choose from {', '.join(VARIANTS)}")
    return names


def _theta_or_auto(value: str) -> str:
    if value != "auto":
        float(value)
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default="out", help="directory for outputs (default: out)")
    common.add_argument("--one-based", action="store_true", help="node ids in input files start at 1")
    common.add_argument("--workers", type=_workers, default=None,
                        help=f"curvature worker processes (default: ${WORKERS_ENV} or CPU count)")

    curv = argparse.ArgumentParser(add_help=False)
    curv.add_argument("--alpha", type=float, default=0.0, help="lazy mass kept at each node")
    curv.add_argument("--solver", choices=SOLVERS, default="exact")
    curv.add_argument("--reg", type=float, default=0.01, help="Sinkhorn regularization")

    dropping = argparse.ArgumentParser(add_help=False)
    dropping.add_argument("--target-kappa", type=float, default=0.7)
    dropping.add_argument("--max-iter", type=int, default=100)
    dropping.add_argument("--cuts", type=int, default=1)

    p = argparse.ArgumentParser(prog="ricciframe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("curvature", parents=[common, curv], help="edge curvature and histogram")
    s.add_argument("graph")

    s = sub.add_parser("reweight", parents=[common, curv], help="curvature-reweighted Laplacian")
    s.add_argument("graph")
    s.add_argument("--variant", choices=("hom", "het"), required=True)

    s = sub.add_parser("cbed", parents=[common, curv, dropping], help="curvature-based edge dropping")
    s.add_argument("graph")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--guard", action="store_true", help="never disconnect the graph")

    s = sub.add_parser("dynamics", parents=[common, curv], help="framelet energy dynamics")
    s.add_argument("graph")
    s.add_argument("--variant", choices=("plain", "hom", "het"), default="plain")
    s.add_argument("--theta", type=float, default=1.0, help="high-pass gain")
    s.add_argument("--steps", type=int, default=300)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--channels", type=int, default=4)
    s.add_argument("--scale", default="auto", help="coarsest scale m, or 'auto'")
    s.add_argument("--mode", choices=("spectral", "spatial"), default="spectral")
    s.add_argument("--nonlinearity", choices=("identity", "relu"), default="identity")

    s = sub.add_parser("experiment", parents=[common, curv, dropping], help="label-propagation accuracy table")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph")
    src.add_argument("--generator", help="synthetic graph kind, e.g. sbm or bipartite_blocks")
    s.add_argument("--params", help="generator parameters as JSON")
    s.add_argument("--labels", help="label file (with --graph)")
    s.add_argument("--variants", "--variant", dest="variants", type=_variants, default=list(VARIANTS))
    s.add_argument("--seeds", type=int, default=10, help="number of seeds")
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--steps", type=int, default=4, help="propagation depth")
    s.add_argument("--theta", type=_theta_or_auto, default="auto")
    s.add_argument("--train-fraction", type=float, default=0.3)

    s = sub.add_parser("homophily", parents=[common], help="label homophily of a graph")
    s.add_argument("graph")
    s.add_argument("labels")

    s = sub.add_parser("replay", help="re-run a manifest and verify its outputs")
    s.add_argument("manifest")
    s.add_argument("--out-dir", default=None, help="where to write (default: a replay/ dir next to the manifest)")
    return p


# -- running -------------------------------------------------------------------

def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _resolved(args) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("command", "out_dir")}
    for key in _PATH_PARAMS:
        if params.get(key):
            params[key] = str(Path(params[key]).resolve())
    return params


def _execute(command: str, params: dict, out_dir: Path) -> dict:
    args = argparse.Namespace(command=command, out_dir=str(out_dir), **params)
    start = time.perf_counter()
    outputs, summary = COMMANDS[command](args)
    duration = time.perf_counter() - start
    for name, text in outputs.items():
        write_text(out_dir / name, text)
    inputs = {k: params[k] for k in _PATH_PARAMS if params.get(k)}
    manifest = {
        "command": command,
        "inputs": inputs,
        "input_sha256": {k: hashlib.sha256(Path(p).read_bytes()).hexdigest() for k, p in inputs.items()},
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "duration_seconds": duration,
        "outputs": {name: _sha256(text) for name, text in sorted(outputs.items())},
    }
    write_text(out_dir / MANIFEST, to_json(manifest))
    for line in summary:
        print(line)
    return manifest


def _replay(args) -> int:
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
        command, params, expected = manifest["command"], manifest["parameters"], manifest["outputs"]
    except (OSError, ValueError, KeyError) as exc:
        raise _Failure(EXIT_INPUT, f"cannot read manifest {path}: {exc}") from None
    if command not in COMMANDS:
        raise _Failure(EXIT_INPUT, f"manifest names unknown command {command!r}")
    out_dir = Path(args.out_dir) if args.out_dir else path.parent / "replay"
    fresh = _execute(command, params, out_dir)
    diff = sorted(k for k in set(expected) | set(fresh["outputs"]) if expected.get(k) != fresh["outputs"].get(k))
    if diff:
        print(f"replay mismatch in: {', '.join(diff)}", file=sys.stderr)
        return EXIT_REPLAY
    print(f"replay identical: {len(expected)} outputs")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            return _replay(args)
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = default_workers()
        if args.command == "experiment":
            if args.graph and not args.labels:
                parser.error("--graph requires --labels")
            if args.seeds < 1:
                raise ValueError("--seeds must be >= 1")
        _execute(args.command, _resolved(args), Path(args.out_dir))
        return EXIT_OK
    except SystemExit as exc:
        return int(exc.code or 0)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
