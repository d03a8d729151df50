"""Command line entry point: ``gemd embed|eval|sweep|bench``.

Every subcommand exits 0 on success and 1 on any error, printing a one
line diagnostic instead of a traceback.
"""
import argparse
import io
import json
import os
import sys
import time

from . import __version__
from ._backend import backend_name, set_workers
from .eval import (AXES, DEFAULT_REG, ExperimentConfig, ablation_sweep, load_labels,
                   run_experiment, write_table)
from .files import atomic_write_text, read_embedding, sha256_file, write_embedding
from .graph import load_edge_list
from .solver import EmbeddingPair
from .ultimatewalk import (WalkConfig, benchmark_scaling, embed, loglog_fit, resolve_gamma,
                           resolve_walk_length)

DEFAULT_SEED = 42


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _walk_length(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("walk length must be >= 1")
    return value


def _gamma(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _walk_flags(p, mode_default):
    p.add_argument("--dim", type=int, default=64, help="embedding dimension K (default 64)")
    p.add_argument("--walk-length", type=_walk_length, default=7,
                   help="walk length L, or 'auto' for the estimated diameter (default 7)")
    p.add_argument("--trials", type=int, default=50, help="random walks per node m (default 50)")
    p.add_argument("--splits", type=int, default=1, help="data splits T, must divide --trials")
    p.add_argument("--p", type=float, default=1.0, help="return factor (default 1)")
    p.add_argument("--q", type=float, default=1.0, help="in-out factor (default 1)")
    p.add_argument("--gamma", type=_gamma, default=0.0,
                   help="warp nonlinearity, or 'auto' to symmetrize (default 0)")
    p.add_argument("--clip-c", type=float, default=100.0, help="clip constant c (default 100)")
    p.add_argument("--mode", choices=("closed", "scalable"), default=mode_default)
    p.add_argument("--directed", action="store_true", help="treat the edge list as directed")


def _common(p):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 42)")
    p.add_argument("--workers", type=int, default=None,
                   help="cap on worker threads; results do not depend on it")


def build_parser():
    parser = _Parser(prog="gemd", description="Warped graph embedding with UltimateWalk.")
    parser.add_argument("--version", action="version", version=f"gemd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="embed the nodes of an edge list")
    p.add_argument("--input", help="edge list: 'src dst [weight]' per line")
    p.add_argument("--output", help="embedding TSV to write")
    p.add_argument("--manifest", help="run manifest path (default: OUTPUT.manifest.json)")
    p.add_argument("--from-manifest", help="re-run the configuration recorded in a manifest")
    _walk_flags(p, "scalable")
    _common(p)

    p = sub.add_parser("eval", help="score an embedding by node classification")
    p.add_argument("--embedding", required=True)
    p.add_argument("--labels", required=True, help="'node<TAB>label1,label2,...' per line")
    p.add_argument("--ratio", type=float, default=0.5, help="labeling ratio (default 0.5)")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--reg", type=float, default=DEFAULT_REG, help="L2 strength on the mean log-loss")
    p.add_argument("--output", help="per-repeat TSV (default: stdout)")
    _common(p)

    p = sub.add_parser("sweep", help="ablation sweep over one parameter axis")
    p.add_argument("--input", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--grid", type=_float_list, required=True,
                   help="comma-separated values; the memory axis uses all (p, q) pairs")
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--reg", type=float, default=DEFAULT_REG)
    p.add_argument("--output", help="result TSV (default: stdout)")
    _walk_flags(p, "closed")
    _common(p)

    p = sub.add_parser("bench", help="time the scalable pipeline on random graphs")
    p.add_argument("--sizes", type=_float_list, required=True, help="edge counts, e.g. 1e4,2e4")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--walk-length", type=int, default=7)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--degree", type=float, default=10.0, help="average degree (fixes N/|E|)")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--backend", choices=("auto", "numba", "numpy"), default="auto")
    p.add_argument("--output", help="result TSV (default: stdout)")
    _common(p)
    return parser


# -- embed ----------------------------------------------------------------------

def _emit(text, path):
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def _embed_settings(args):
    if args.from_manifest:
        try:
            with open(args.from_manifest, encoding="utf-8") as fh:
                manifest = json.load(fh)
            cfg = manifest["config"]
            settings = dict(cfg)
            settings["input"] = args.input or manifest["input"]["path"]
            settings["output"] = args.output or manifest["output"]["path"]
            settings["expected_input_digest"] = manifest["input"]["sha256"]
        except OSError as exc:
            raise CliError(f"cannot read manifest {args.from_manifest}: {exc.strerror}")
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"malformed manifest {args.from_manifest}: {exc}")
        return settings
    if not args.input or not args.output:
        raise CliError("embed needs --input and --output (or --from-manifest)")
    return {
        "input": args.input, "output": args.output, "dim": args.dim,
        "walk_length": args.walk_length, "trials": args.trials, "splits": args.splits,
        "p": args.p, "q": args.q, "gamma": args.gamma, "clip_c": args.clip_c,
        "seed": args.seed, "mode": args.mode, "directed": args.directed,
        "dangling": "self-loop",
    }


def cmd_embed(args):
    s = _embed_settings(args)
    timings = {}
    t0 = time.perf_counter()
    digest_in = sha256_file(s["input"]) if os.path.isfile(s["input"]) else None
    if s.get("expected_input_digest") and digest_in != s["expected_input_digest"]:
        raise CliError(f"input {s['input']} does not match the digest recorded in the manifest")
    g = load_edge_list(s["input"], directed=bool(s["directed"]))
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cfg = WalkConfig(L=1, m=int(s["trials"]), T=int(s["splits"]), p=float(s["p"]),
                     q=float(s["q"]), clip_c=float(s["clip_c"]), seed=int(s["seed"]),
                     K=int(s["dim"]), dangling=s["dangling"])
    cfg = cfg.with_(L=resolve_walk_length(g, s["walk_length"], seed=cfg.seed))
    cfg = cfg.with_(gamma=resolve_gamma(g, cfg, s["gamma"], s["mode"]))
    timings["resolve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pair = embed(g, cfg, s["mode"])
    timings["embed"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    write_embedding(s["output"], g.ids, pair)
    timings["write"] = time.perf_counter() - t0

    resolved = {
        "dim": cfg.K, "walk_length": cfg.L, "trials": cfg.m, "splits": cfg.T,
        "p": cfg.p, "q": cfg.q, "gamma": cfg.gamma, "clip_c": cfg.clip_c, "seed": cfg.seed,
        "mode": s["mode"], "directed": bool(s["directed"]), "dangling": cfg.dangling,
    }
    manifest = {
        "tool": "gemd",
        "version": __version__,
        "command": "embed",
        "config": resolved,
        "requested": {"walk_length": s["walk_length"], "gamma": s["gamma"]},
        "input": {"path": os.path.abspath(s["input"]), "sha256": digest_in,
                  "nodes": g.n, "edges": g.n_edges},
        "output": {"path": os.path.abspath(s["output"]), "sha256": sha256_file(s["output"])},
        "seed": cfg.seed,
        "backend": backend_name(),
        "timings_seconds": timings,
    }
    path = args.manifest or s["output"] + ".manifest.json"
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"embedded {g.n} nodes (K={cfg.K}, L={cfg.L}, gamma={cfg.gamma:g}, mode={s['mode']}) "
          f"-> {s['output']}")
    return 0


# -- eval / sweep -------------------------------------------------------------------

def _experiment(args):
    return ExperimentConfig(ratio=args.ratio, repeats=args.repeats, seed=args.seed, reg=args.reg)


def cmd_eval(args):
    exp = _experiment(args)
    ids, F, F_hat = read_embedding(args.embedding)
    labels = load_labels(args.labels, ids)
    report = run_experiment(None, labels, EmbeddingPair(F, F_hat), exp)
    lines = ["repeat\tmacro_f1\tmicro_f1"]
    lines += [f"{i}\t{ma:.6f}\t{mi:.6f}" for i, (ma, mi) in enumerate(zip(report.macro, report.micro))]
    _emit("\n".join(lines) + "\n", args.output)
    print(report.summary())
    return 0


def cmd_sweep(args):
    if args.walk_length == "auto" or args.gamma == "auto":
        raise CliError("sweep needs explicit --walk-length and --gamma")
    exp = _experiment(args)
    g = load_edge_list(args.input, directed=args.directed)
    labels = load_labels(args.labels, g.ids)
    cfg = WalkConfig(L=args.walk_length, m=args.trials, T=args.splits, p=args.p, q=args.q,
                     clip_c=args.clip_c, seed=args.seed, K=args.dim, gamma=args.gamma)
    grid = args.grid
    if args.axis == "walk_length" and any(v != int(v) for v in grid):
        raise CliError("walk lengths must be integers")
    rows = ablation_sweep(args.axis, grid, g, labels, cfg, exp, mode=args.mode)
    buf = io.StringIO()
    header = ("p,q" if args.axis == "memory" else args.axis,
              "macro_mean", "macro_sd", "micro_mean", "micro_sd")
    write_table(rows, buf, header)
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_bench(args):
    sizes = [int(round(s)) for s in args.sizes]
    if not sizes or min(sizes) < 1:
        raise CliError("--sizes needs positive edge counts")
    cfg = WalkConfig(L=args.walk_length, m=args.trials, K=args.dim, seed=args.seed)
    backend = None if args.backend == "auto" else args.backend
    rows = benchmark_scaling(sizes, cfg, degree=args.degree, repeats=args.repeats,
                             seed=args.seed, backend=backend)
    text = "edges\tseconds\n" + "".join(f"{e}\t{t:.6f}\n" for e, t in rows)
    _emit(text, args.output)
    if len(rows) >= 2:
        slope, r2 = loglog_fit(rows)
        print(f"# log-log slope {slope:.3f}, R^2 {r2:.3f}", file=sys.stderr)
    return 0


COMMANDS = {"embed": cmd_embed, "eval": cmd_eval, "sweep": cmd_sweep, "bench": cmd_bench}


def _glue_list_values(argv):
    """``--grid -1,0,1`` would read as an option; pass it as ``--grid=-1,0,1``."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--grid", "--sizes"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_list_values(argv))
    try:
        set_workers(getattr(args, "workers", None))
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("gemd: interrupted", file=sys.stderr)
        return 1
    except Exception as exc:  # every failure becomes a diagnostic, never a traceback
        print(f"gemd {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
