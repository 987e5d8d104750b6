"""Command-line entry point: ingest corpora, generate batches, estimate
from judgments, price the SRS baseline, and launch the annotation service.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .corpus import (
    CorpusError,
    StratificationScheme,
    build_corpus,
    load_corpus_bundle,
    parse_corpus_file,
    write_corpus_bundle,
)
from .cost import (
    CostError,
    CostParams,
    derive_params,
    run_srs_cost_simulation,
)
from .estimation import (
    EstimationError,
    EstimatorConfig,
    effective_judgments,
    load_judgments_file,
    recompute_on_cluster_complete,
)
from .sampling import (
    SamplingDesign,
    SamplingError,
    generate_static_batch,
    load_batch_file,
    make_labeler,
    write_batch_file,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2

_USER_ERRORS = (
    CorpusError,
    SamplingError,
    EstimationError,
    CostError,
    FileNotFoundError,
    ValueError,
)


def _fmt_int(n: int) -> str:
    return f"{n:,}"


def _stats_table(corpus) -> str:
    rows = [("Stratum", "Weight", "Clusters", "Triples")]
    for s in corpus.strata:
        rows.append(
            (s.name, f"{s.weight:.4f}", _fmt_int(len(s.clusters)), _fmt_int(s.size))
        )
    rows.append(("total", "1.0000", _fmt_int(corpus.n_clusters), _fmt_int(corpus.total_size)))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append(
            "  ".join(
                cell.ljust(widths[0]) if j == 0 else cell.rjust(widths[j])
                for j, cell in enumerate(row)
            )
        )
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _report_lines(report, per_stratum: bool) -> list[str]:
    def fmt(x, digits=4):
        return "n/a" if x is None else f"{x:.{digits}f}"

    lines = [
        f"judged: {_fmt_int(report.n_triples_judged)} triples "
        f"in {_fmt_int(report.n_clusters_judged)} complete clusters",
        f"estimate: {fmt(report.mu_ss)} +/- {fmt(report.moe)} "
        f"(CI [{fmt(report.ci_low)}, {fmt(report.ci_high)}], "
        f"target {report.epsilon}, converged: {'yes' if report.converged else 'no'})",
    ]
    if per_stratum and report.strata:
        rows = [("Stratum", "mu_hat", "MoE", "Clusters", "Triples")]
        for s in report.strata:
            rows.append(
                (
                    s.name or str(s.index),
                    fmt(s.mu_hat, 3),
                    fmt(s.moe, 3),
                    _fmt_int(s.n),
                    _fmt_int(s.n_triples),
                )
            )
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        for i, row in enumerate(rows):
            lines.append(
                "  ".join(
                    cell.ljust(widths[0]) if j == 0 else cell.rjust(widths[j])
                    for j, cell in enumerate(row)
                )
            )
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
    return lines


def _cmd_ingest(args) -> int:
    scheme = (
        StratificationScheme.from_file(args.scheme)
        if args.scheme
        else StratificationScheme.default()
    )
    triples = parse_corpus_file(args.corpus)
    corpus = build_corpus(triples, scheme)
    write_corpus_bundle(corpus, args.out)
    if args.json:
        print(
            json.dumps(
                {
                    "triples": corpus.total_size,
                    "clusters": corpus.n_clusters,
                    "hash": corpus.content_hash,
                    "strata": [
                        {
                            "name": s.name,
                            "weight": s.weight,
                            "clusters": len(s.clusters),
                            "triples": s.size,
                        }
                        for s in corpus.strata
                    ],
                }
            )
        )
    else:
        print(
            f"corpus: {_fmt_int(corpus.total_size)} triples, "
            f"{_fmt_int(corpus.n_clusters)} clusters, "
            f"{len(corpus.strata)} strata (hash {corpus.content_hash[:12]})"
        )
        print(_stats_table(corpus))
        print(f"bundle written to {args.out}")
    return EXIT_OK


def _cmd_batch(args) -> int:
    corpus = load_corpus_bundle(args.corpus)
    m = None if args.design in ("srs", "wcs") else args.m
    design = SamplingDesign(kind=args.design, m=m)
    labeler = make_labeler(args.labeler, seed=args.seed)
    gen = generate_static_batch(
        corpus, design, epsilon=args.epsilon, alpha=args.alpha,
        seed=args.seed, labeler=labeler,
        min_clusters_per_stratum=args.min_clusters,
    )
    write_batch_file(gen.batch, corpus, args.out)
    header = (
        f"seed={args.seed} design={design.kind} m={design.m} "
        f"epsilon={args.epsilon} alpha={args.alpha} labeler={args.labeler}"
    )
    if args.json:
        print(
            json.dumps(
                {
                    "seed": args.seed,
                    "design": design.kind,
                    "m": design.m,
                    "epsilon": args.epsilon,
                    "alpha": args.alpha,
                    "labeler": args.labeler,
                    "n_triples": gen.batch.n_triples,
                    "n_clusters": len(gen.batch.units),
                    "final_moe": gen.report.moe,
                    "converged": gen.report.converged,
                    "exhausted": gen.exhausted,
                    "out": args.out,
                }
            )
        )
    else:
        print(header)
        moe = "n/a" if gen.report.moe is None else f"{gen.report.moe:.4f}"
        status = "converged" if gen.report.converged else (
            "corpus exhausted before convergence" if gen.exhausted else "stopped"
        )
        print(
            f"batch: {_fmt_int(gen.batch.n_triples)} triples in "
            f"{_fmt_int(len(gen.batch.units))} sampled clusters; "
            f"final MoE {moe} ({status})"
        )
        print(f"batch written to {args.out}")
    return EXIT_OK


def _load_judged_batch(batch_path: str, judgments_path: str):
    loaded = load_batch_file(batch_path)
    doc = load_judgments_file(judgments_path)
    if doc.corpus_hash and doc.corpus_hash != loaded.batch.corpus_hash:
        raise ValueError(
            "judgments corpus hash does not match the batch "
            f"({doc.corpus_hash[:12]} vs {loaded.batch.corpus_hash[:12]})"
        )
    unknown = sorted(
        {j.triple_id for j in doc.judgments} - set(loaded.batch.triple_ids())
    )
    if unknown:
        shown = ", ".join(unknown[:10])
        more = "" if len(unknown) <= 10 else f" (+{len(unknown) - 10} more)"
        raise ValueError(f"judgments reference unknown triple ids: {shown}{more}")
    return loaded, doc


def _cmd_estimate(args) -> int:
    loaded, doc = _load_judged_batch(args.batch, args.judgments)
    batch = loaded.batch
    config = EstimatorConfig(alpha=batch.alpha, epsilon=batch.epsilon, m=batch.design.m)
    report = recompute_on_cluster_complete(doc.judgments, batch, config)
    if args.json:
        print(json.dumps(report.to_dict()))
        return EXIT_OK
    eff = effective_judgments(doc.judgments)
    touched = sum(
        1
        for u in batch.units
        if any(t in eff for t in u.triple_ids)
    )
    excluded = touched - report.n_clusters_judged
    print(f"batch: {args.batch} (design {batch.design.kind}, seed {batch.seed})")
    for line in _report_lines(report, args.per_stratum):
        print(line)
    if excluded:
        print(f"excluded: {excluded} partially judged clusters")
    return EXIT_OK


def _cmd_simulate_srs(args) -> int:
    loaded, doc = _load_judged_batch(args.batch, args.judgments)
    batch = loaded.batch
    eff = effective_judgments(doc.judgments)
    # annotation order: the batch file order restricted to judged triples
    order = [tid for tid in loaded.order() if tid in eff]
    if len(order) < 2:
        raise ValueError("need at least 2 judged triples to simulate")
    cluster_of = {
        tid: (unit.stratum, unit.surface)
        for unit in batch.units
        for tid in unit.triple_ids
    }
    design_order = [cluster_of[tid] for tid in order]

    if args.t_base is not None and args.delta is not None:
        params = CostParams.from_times(args.t_base, args.delta)
    else:
        timed = [(cluster_of[tid], eff[tid].elapsed_seconds) for tid in order]
        params = derive_params(timed)

    result = run_srs_cost_simulation(
        design_order, params, n_perms=args.perms, n_boot=args.boot, seed=args.seed
    )
    if args.raw_csv:
        with open(args.raw_csv, "w", encoding="utf-8") as fh:
            fh.write("permutation,switches,noswitches\n")
            n_t = result.design_counts.n_t
            for i, sw in enumerate(result.switch_counts):
                fh.write(f"{i},{sw},{max(n_t - 1, 0) - sw}\n")
    if args.json:
        print(json.dumps(result.to_dict()))
        return EXIT_OK
    d = result.to_dict()
    print(
        f"seed={args.seed} perms={args.perms} boot={args.boot} "
        f"t_base={params.t_base:.2f}s delta={params.delta_t_switch:.2f}s"
    )
    print(
        f"design order : {result.design_counts.n_sw} switches, "
        f"{result.design_counts.n_nosw} no-switch transitions, "
        f"{d['modeled_time_design_min']:.2f} min modeled"
    )
    print(
        f"srs baseline : {d['mean_switches']:.2f} switches "
        f"(95% bootstrap CI [{d['ci'][0]:.2f}, {d['ci'][1]:.2f}]), "
        f"{d['modeled_time_baseline_min']:.2f} min modeled"
    )
    print(
        f"efficiency   : ratio {d['ratio']:.3f}, "
        f"savings {d['savings_min']:.1f} min"
    )
    if args.raw_csv:
        print(f"raw distribution written to {args.raw_csv}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    corpus = load_corpus_bundle(args.corpus)
    data_dir = args.data_dir or os.environ.get("LINKAUDIT_DATA_DIR", "./linkaudit-data")
    app = create_app(corpus, data_dir, ui_dir=args.ui_dir)
    print(
        f"serving corpus {corpus.content_hash[:12]} "
        f"({_fmt_int(corpus.total_size)} triples) on {args.host}:{args.port}, "
        f"data dir {data_dir}"
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkaudit",
        description="Sampling-based accuracy auditing for entity-linking corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a corpus file and write a bundle")
    p.add_argument("--corpus", required=True, help="JSONL corpus file")
    p.add_argument("--scheme", help="JSON label->stratum map (default: built-in)")
    p.add_argument("--out", required=True, help="output bundle path")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("batch", help="generate a static annotation batch")
    p.add_argument("--corpus", required=True, help="corpus bundle")
    p.add_argument("--design", default="stwcs", choices=["stwcs", "twcs", "wcs", "srs"])
    p.add_argument("--m", type=int, default=5, help="per-cluster annotation cap")
    p.add_argument("--epsilon", type=float, default=0.05, help="target MoE")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument(
        "--labeler",
        default="alternating",
        help="synthetic verdicts: alternating | bernoulli:P | constant:V",
    )
    p.add_argument(
        "--min-clusters",
        dest="min_clusters",
        type=int,
        default=2,
        help="clusters per stratum required before the MoE stop is honored",
    )
    p.add_argument("--out", required=True, help="output batch path (JSONL)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("estimate", help="estimate accuracy from judgments")
    p.add_argument("--batch", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--per-stratum", action="store_true", dest="per_stratum")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser(
        "simulate-srs", help="price the annotation order against an SRS baseline"
    )
    p.add_argument("--judgments", required=True)
    p.add_argument("--batch", required=True)
    p.add_argument("--perms", type=int, default=1000)
    p.add_argument("--boot", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--t-base", type=float, dest="t_base", help="seconds per triple")
    p.add_argument("--delta", type=float, help="extra seconds per switch")
    p.add_argument("--raw-csv", dest="raw_csv", help="write raw switch counts CSV")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate_srs)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--corpus", required=True, help="corpus bundle")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8800)
    p.add_argument(
        "--data-dir",
        dest="data_dir",
        help="session storage dir (default: $LINKAUDIT_DATA_DIR or ./linkaudit-data)",
    )
    p.add_argument("--ui-dir", dest="ui_dir", help="static UI directory to mount at /ui")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception as exc:  # noqa: BLE001 - last resort, report and exit 2
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
