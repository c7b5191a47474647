"""Command-line entry point: ``twembed <command> ...``."""
from __future__ import annotations

import argparse
import sys

from .chain import build_chain
from .cops import build_cop_decomposition
from .cuts import auto_tau, build_cut_family, parse_tau
from .embed import embed
from .graph import GraphError, graph_metrics
from .graphio import dump_json, format_edge_list, read_json
from .pipeline import ExperimentConfig, load_graph, run_pipeline, runs_to_csv, verify_artifact, working_graph
from .rng import RandomSource
from .shortcut import shortcut_partition


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tau_for(args, chain, g) -> int:
    mode, val = parse_tau(args.tau)
    if mode == "fixed":
        return val
    return auto_tau(max(chain.hop_bound, 1), graph_metrics(g).aspect_ratio, args.psi, val)


def cmd_gen(args):
    _emit(format_edge_list(load_graph(args.spec)), args.out)


def cmd_chain(args):
    g = working_graph(load_graph(args.graph))
    ch = build_chain(g, args.r, RandomSource(args.seed).child("chain"))
    _emit(dump_json(ch.to_dict()), args.out)


def cmd_cops(args):
    g = load_graph(args.graph)
    if args.delta is None:
        raise GraphError("--delta is required for cops")
    cd = build_cop_decomposition(g, args.delta, args.r, RandomSource(args.seed))
    _emit(dump_json(cd.to_dict()), args.out)


def cmd_shortcut(args):
    g = load_graph(args.graph)
    sp = shortcut_partition(g, args.epsilon, args.r, RandomSource(args.seed))
    _emit(dump_json(sp.to_dict()), args.out)


def cmd_cut(args):
    g = working_graph(load_graph(args.graph))
    rng = RandomSource(args.seed)
    ch = build_chain(g, args.r, rng.child("chain"))
    weights = [1.0] * g.n
    fam = build_cut_family(g, ch, weights, set(), args.psi, _tau_for(args, ch, g),
                           adaptive=True, tau_cap=max(g.n, 1))
    art = fam.to_dict()
    art["chain"] = ch.to_dict()
    art["weights"] = weights
    _emit(dump_json(art), args.out)


def cmd_embed(args):
    g = working_graph(load_graph(args.graph))
    rng = RandomSource(args.seed)
    ch = build_chain(g, args.r, rng.child("chain"))
    res = embed(g, args.r, args.psi, args.tau, rng, chain=ch)
    art = res.to_dict()
    art["chain"] = ch.to_dict()
    _emit(dump_json(art), args.out)


def cmd_verify(args):
    rep = verify_artifact(read_json(args.artifact), load_graph(args.graph))
    print(rep)
    return 0 if rep.valid else 1


def cmd_sweep(args):
    psis = [int(x) for x in str(args.psi).split(",")]
    bundles = []
    for psi in psis:
        cfg = ExperimentConfig(args.graph, seeds=args.seeds, base_seed=args.seed, r=args.r,
                               epsilon=args.epsilon, delta=args.delta, psi=psi, tau=args.tau,
                               pairs=args.pairs, artifacts_dir=args.artifacts, jobs=args.jobs)
        bundles.append(run_pipeline(cfg))
    if args.format == "csv":
        parts = [runs_to_csv(b["runs"], {"psi": b["config"]["psi"]}) for b in bundles]
        # one header for the whole table
        text = parts[0] + "".join(p.split("\n", 1)[1] for p in parts[1:]) if parts else ""
        _emit(text, args.out)
    else:
        _emit(dump_json(bundles[0] if len(bundles) == 1 else {"sweep": bundles}), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--seeds", type=int, default=1)
    common.add_argument("--r", type=int, default=5)
    common.add_argument("--epsilon", type=float, default=0.5)
    common.add_argument("--delta", type=float, default=None)
    common.add_argument("--psi", default=8, help="int; sweep also takes a comma list")
    common.add_argument("--tau", default="auto", help='int, "auto" or "auto:<c_tau>"')
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", default=None)
    common.add_argument("--jobs", type=int, default=1)

    p = argparse.ArgumentParser(prog="twembed", description="Clustering chains, balanced cuts and "
                                "bounded-treewidth embeddings of weighted graphs.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("gen", parents=[common], help="write a generated graph as an edge list")
    s.add_argument("spec")
    s.set_defaults(func=cmd_gen)
    for name, fn, hlp in [("chain", cmd_chain, "sample a clustering chain"),
                          ("cops", cmd_cops, "build a buffered cop decomposition"),
                          ("shortcut", cmd_shortcut, "sample a shortcut partition"),
                          ("cut", cmd_cut, "build a cut family with unit weights"),
                          ("embed", cmd_embed, "embed into a bounded-treewidth host")]:
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("graph", help="edge-list file or generator spec")
        s.set_defaults(func=fn)
    s = sub.add_parser("verify", parents=[common], help="re-verify a JSON artifact")
    s.add_argument("artifact")
    s.add_argument("graph")
    s.set_defaults(func=cmd_verify)
    s = sub.add_parser("sweep", parents=[common], help="seeded pipeline runs with summary")
    s.add_argument("graph")
    s.add_argument("--pairs", choices=["edges", "all"], default="edges")
    s.add_argument("--artifacts", default=None, help="directory for per-seed chain/embedding JSON")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "sweep":
        try:
            args.psi = int(args.psi)
        except ValueError:
            print("error: --psi must be an integer", file=sys.stderr)
            return 2
    try:
        rc = args.func(args)
    except (GraphError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
