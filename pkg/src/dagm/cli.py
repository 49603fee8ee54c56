"""Command line interface: ``dagm fit``, ``dagm generate``, ``dagm eval``.

Exit codes: 0 success, 1 I/O or parse errors, 2 invalid flags.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from dagm.communities import classify, dedup_mirrors, extract, read_communities, write_communities
from dagm.evaluation import match_score
from dagm.generator import forest_fire, generate, load_affiliation_spec, planted_figure3
from dagm.graph import GraphFormatError, load_edge_list, read_label_sets, write_communities as write_truth, write_edge_list
from dagm.optimizer import FitConfig, fit
from dagm.seeding import initialize_memberships, locally_minimal_neighborhoods
from dagm.selection import KSelectionConfig, select_k


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty K list")
    return sorted(set(values))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="detect communities in an edge list")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--select-k", type=_int_list, metavar="K1,K2,...")
    d = p.add_mutually_exclusive_group()
    d.add_argument("--directed", dest="directed", action="store_true", default=True)
    d.add_argument("--undirected", dest="directed", action="store_false")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--dedup-mirrors", action="store_true")
    p.add_argument("--fh", action="store_true", help="also write raw strengths to <out>.fh")
    p.add_argument("--out", default="dagm_out", help="output prefix")

    p = sub.add_parser("generate", help="write a synthetic graph")
    p.add_argument("--scenario", required=True)
    p.add_argument("--size", type=int, default=30)
    p.add_argument("--overlap", type=int, default=10)
    p.add_argument("--p-in", type=float, default=0.9)
    p.add_argument("--background", action="store_true")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--p-forward", type=float, default=0.36)
    p.add_argument("--p-backward", type=float, default=0.32)
    p.add_argument("--spec", help="affiliation file for --scenario spec-file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="dagm_graph", help="output prefix")

    p = sub.add_parser("eval", help="score detected communities against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--detected", required=True)
    p.add_argument("--metric", choices=["f1", "jaccard", "both"], default="both")
    p.add_argument("--side", choices=["out", "in", "union"], default="union")
    p.add_argument("--table", action="store_true", help="print the per-community best matches")
    return parser


def cmd_fit(args) -> int:
    if (args.k is None) == (args.select_k is None):
        raise UsageError("exactly one of --k and --select-k is required")
    if args.threads < 1 or args.max_iters < 1 or (args.k is not None and args.k < 1):
        raise UsageError("--k, --threads and --max-iters must be positive")
    with open(args.graph, encoding="utf-8") as fh:
        g = load_edge_list(fh, directed=args.directed)
    cfg = FitConfig(max_outer_iterations=args.max_iters, threads=args.threads, rng_seed=args.seed)
    if args.select_k is not None:
        selection = select_k(g, KSelectionConfig(args.select_k, rng_seed=args.seed), cfg)
        print(selection.table())
        K = selection.K
    else:
        K = args.k
    if K > g.node_count:
        raise UsageError(f"K={K} exceeds the node count {g.node_count}")
    m0 = initialize_memberships(g, K, locally_minimal_neighborhoods(g), args.seed)
    m, report = fit(g, K, m0, cfg)
    cs = classify(extract(m, g.node_count), args.gamma)
    if args.dedup_mirrors:
        cs = dedup_mirrors(cs)
    with open(f"{args.out}.communities", "w", encoding="utf-8") as fh:
        write_communities(cs, g, fh)
    with open(f"{args.out}.log", "w", encoding="utf-8") as fh:
        report.write_log(fh)
    if args.fh:
        with open(f"{args.out}.fh", "w", encoding="utf-8") as fh:
            rows, cols = np.nonzero((m.F > 0) | (m.H > 0))
            for u, c in zip(rows, cols):
                fh.write(f"{g.label(u)}\t{c}\t{m.F[u, c]:.10g}\t{m.H[u, c]:.10g}\n")
    counts = cs.counts()
    print(f"N\t{g.node_count}")
    print(f"E\t{g.edge_count}")
    print(f"K\t{K}")
    print(f"loglik\t{report.final_loglik:.6f}")
    print(f"communities\t{len(cs)}")
    print(f"cohesive\t{counts['cohesive']}")
    print(f"two_mode\t{counts['two_mode']}")
    return 0


def cmd_generate(args) -> int:
    truth = None
    if args.scenario == "figure3":
        g, truth = planted_figure3(args.size, args.overlap, args.p_in, args.seed, args.background)
    elif args.scenario == "forest-fire":
        g = forest_fire(args.n, args.p_forward, args.p_backward, args.seed)
    elif args.scenario == "spec-file":
        if not args.spec:
            raise UsageError("--scenario spec-file needs --spec")
        with open(args.spec, encoding="utf-8") as fh:
            aff, n = load_affiliation_spec(fh)
        g, truth = generate(aff, n, args.background, args.seed)
    else:
        raise UsageError(f"unknown scenario {args.scenario!r}")
    with open(f"{args.out}.edges", "w", encoding="utf-8") as fh:
        fh.write(f"# nodes {g.node_count} edges {g.edge_count}\n")
        write_edge_list(g, fh)
    if truth is not None:
        with open(f"{args.out}.truth", "w", encoding="utf-8") as fh:
            write_truth(truth, g, fh)
    print(f"N\t{g.node_count}")
    print(f"E\t{g.edge_count}")
    return 0


def cmd_eval(args) -> int:
    with open(args.truth, encoding="utf-8") as fh:
        truth = read_label_sets(fh)
    with open(args.detected, encoding="utf-8") as fh:
        detected = read_communities(fh)
    score = match_score(truth, detected, side=args.side)
    print(score.summary(args.metric))
    if args.table:
        for name in (["f1", "jaccard"] if args.metric == "both" else [args.metric]):
            print(score.table(name))
    return 0


COMMANDS = {"fit": cmd_fit, "generate": cmd_generate, "eval": cmd_eval}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dagm: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, GraphFormatError, ValueError) as exc:
        print(f"dagm: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
