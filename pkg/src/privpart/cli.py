"""Command line entry point: ``privpart <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from privpart.conformance import etc_precision, f1, generalization_kfold, token_fitness
from privpart.discovery import MINERS, discover, read_pnml, to_dot, write_pnml
from privpart.hierarchy import HierarchyError, derive_cooccurrence, derive_random, parse_mapping, write_mapping
from privpart.logio import CsvSchema, LogFormatError, read_dfg, read_log, write_dfg, write_xes
from privpart.partition import partition, write_partition
from privpart.pipeline import ORDERS, REFERENCES, ExperimentConfig, all_ok, parse_config, run, write_report
from privpart.privacy import DF_LAPLACE, MECHANISMS, VARIANT_TREE, MechanismError, PrivacyParams, anonymize_log, playout_dfg
from privpart.seeding import derive_rng
from privpart.synth import TOP_OPERATORS, SyntheticSpec, generate_synthetic

EXIT_OK, EXIT_ROWS_FAILED, EXIT_INPUT = 0, 1, 2
MECHANISM_ALIASES = {"df": DF_LAPLACE, "variants": VARIANT_TREE}


def _add_log_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--input", "-i", required=required, help="event log (.xes, .xes.gz or .csv)")
    p.add_argument("--format", choices=("auto", "xes", "csv"), default="auto")
    p.add_argument("--case-column", "--csv-case", dest="case_column", default="case")
    p.add_argument("--activity-column", "--csv-activity", dest="activity_column", default="activity")
    p.add_argument("--order-column", "--csv-order", dest="order_column", default="order")
    p.add_argument("--keep-lifecycle", action="store_true",
                   help="read lifecycle:transition start/complete (e.g. abstracted logs)")


def _load(args):
    schema = CsvSchema(args.case_column, args.activity_column, args.order_column)
    return read_log(args.input, args.format, schema, keep_lifecycle=args.keep_lifecycle)


def cmd_partition(args) -> int:
    log = _load(args)
    if args.hierarchy:
        h = parse_mapping(args.hierarchy)
    elif args.random_k:
        h = derive_random(log.activities, args.random_k, args.seed)
    else:
        h = derive_cooccurrence(log, args.cooccur_k, args.window)
    if args.hierarchy_out:
        write_mapping(h, args.hierarchy_out)
    result = partition(log, h)
    for path in write_partition(result, args.out_dir):
        print(path)
    return EXIT_OK


def cmd_anonymize(args) -> int:
    log = _load(args)
    params = PrivacyParams(args.epsilon, args.max_length, args.prune, args.seed)
    rng = derive_rng(args.seed, "anonymize", "log")
    try:
        mechanism = MECHANISM_ALIASES.get(args.mechanism, args.mechanism)
        part = anonymize_log(log, mechanism, params, rng)
    except MechanismError as exc:
        print(f"anonymization failed: {exc}", file=sys.stderr)
        return EXIT_ROWS_FAILED
    if args.dfg_out and part.dfg is not None:
        write_dfg(part.dfg, args.dfg_out)
    if args.out:
        out_log = part.log
        if out_log is None:
            n = args.playout or log.total_traces
            out_log = playout_dfg(part.dfg, n, args.max_length, derive_rng(args.seed, "playout"))
        write_xes(out_log, args.out)
    return EXIT_OK


def cmd_discover(args) -> int:
    if bool(args.input) == bool(args.dfg):
        raise ValueError("give exactly one of --input or --dfg")
    source = _load(args) if args.input else read_dfg(args.dfg)
    net = discover(source, args.miner, args.threshold)
    write_pnml(net, args.out)
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(to_dot(net))
    print(f"{len(net.places)} places, {len(net.transitions)} transitions -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    log = _load(args)
    net = read_pnml(args.model)
    fit = token_fitness(net, log)
    prec = etc_precision(net, log)
    out = {"fitness": fit, "precision": prec, "f1": f1(fit, prec)}
    if args.generalization_miner:
        out["generalization"] = generalization_kfold(
            log, args.k, args.generalization_miner, args.threshold, args.seed
        )
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_experiment(args) -> int:
    base = ExperimentConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = parse_config(fh.read())
    overrides = {
        "input": args.input, "format": args.format, "abstraction": args.abstraction,
        "mechanism": args.mechanism, "reference": args.reference, "repetitions": args.repetitions,
        "seed": args.seed, "threshold": args.threshold, "workers": args.workers,
        "dataset": args.dataset, "synthetic_traces": args.synthetic_traces,
    }
    if args.hierarchy:
        overrides["abstraction"] = f"mapping:{args.hierarchy}"
    elif args.random_k:
        overrides["abstraction"] = f"random:{args.random_k}"
    elif args.cooccur_k:
        overrides["abstraction"] = f"cooccur:{args.cooccur_k}"
    overrides["window"] = args.window
    if args.orders:
        overrides["orders"] = tuple(args.orders)
    if args.epsilons:
        overrides["epsilons"] = tuple(args.epsilons)
    if args.miners:
        overrides["miners"] = tuple(args.miners)
    if args.variant_pairs:
        pairs = []
        for item in args.variant_pairs:
            e, _, p = item.partition(":")
            pairs.append((float(e), float(p)))
        overrides["variant_pairs"] = tuple(pairs)
    if args.no_generalization:
        overrides["generalization"] = False
    config = replace(base, **{k: v for k, v in overrides.items() if v is not None})
    reports = run(config)
    if args.out:
        write_report(reports, args.out)
    else:
        write_report(reports, sys.stdout)
    return EXIT_OK if all_ok(reports) else EXIT_ROWS_FAILED


def cmd_synth(args) -> int:
    spec = SyntheticSpec(n_traces=args.traces, top=args.top)
    synth = generate_synthetic(spec, args.seed)
    write_xes(synth.log, args.out)
    if args.hierarchy_out:
        write_mapping(synth.hierarchy, args.hierarchy_out)
    print(f"{synth.log.total_traces} traces; model {synth.model}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privpart", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="split a log along an abstraction hierarchy")
    _add_log_args(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--hierarchy", help="child,parent CSV; use ⊤ for the root")
    group.add_argument("--random-k", type=int, help="random clustering into k sub-processes")
    group.add_argument("--cooccur-k", type=int, help="co-occurrence clustering into k sub-processes")
    p.add_argument("--window", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hierarchy-out", help="write the hierarchy used as child,parent CSV")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("anonymize", help="release a differentially private DFG or log")
    _add_log_args(p)
    p.add_argument("--mechanism", choices=MECHANISMS + tuple(MECHANISM_ALIASES), default=DF_LAPLACE)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--prune", type=float, default=1.0, help="variant_tree pruning threshold p")
    p.add_argument("--max-length", "--max-len", dest="max_length", type=int, default=50, help="variant_tree depth bound l")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="anonymized log (.xes); df_laplace plays the noisy DFG out")
    p.add_argument("--playout", type=int, help="number of traces to play out (default: input size)")
    p.add_argument("--dfg-out", help="anonymized DFG as source,target,weight CSV")
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("discover", help="mine a Petri net from a log or DFG")
    _add_log_args(p, required=False)
    p.add_argument("--dfg", help="DFG CSV instead of a log")
    p.add_argument("--miner", choices=MINERS, default="inductive")
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--out", required=True, help="PNML output")
    p.add_argument("--dot", help="also write Graphviz DOT")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("evaluate", help="fitness, precision and F1 of a PNML model on a log")
    _add_log_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--generalization-miner", choices=MINERS,
                   help="also compute k-fold generalization by re-mining with this miner")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run the full grid and write the CSV report")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--input", help="event log; omitted -> built-in synthetic log")
    p.add_argument("--format", choices=("auto", "xes", "csv"))
    p.add_argument("--dataset")
    p.add_argument("--synthetic-traces", type=int)
    p.add_argument("--abstraction", help="mapping:<file> | mapping:true | random:<k> | cooccur:<k>")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--hierarchy", help="shorthand for --abstraction mapping:<file>")
    group.add_argument("--random-k", type=int, help="shorthand for --abstraction random:<k>")
    group.add_argument("--cooccur-k", type=int, help="shorthand for --abstraction cooccur:<k>")
    p.add_argument("--window", type=int, help="co-occurrence window for cooccur:<k>")
    p.add_argument("--mechanism", choices=MECHANISMS)
    p.add_argument("--orders", nargs="+", choices=ORDERS)
    p.add_argument("--epsilons", nargs="+", type=float)
    p.add_argument("--variant-pairs", nargs="+", metavar="EPS:P")
    p.add_argument("--miners", nargs="+", choices=MINERS)
    p.add_argument("--threshold", type=float)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--reference", choices=REFERENCES)
    p.add_argument("--no-generalization", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", "-o", help="CSV report (default: stdout)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="generate the two-sub-process synthetic log")
    p.add_argument("--traces", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", choices=TOP_OPERATORS, default="sequence")
    p.add_argument("--out", required=True)
    p.add_argument("--hierarchy-out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LogFormatError, HierarchyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
