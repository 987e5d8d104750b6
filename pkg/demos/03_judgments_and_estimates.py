"""Simulate an expert annotating the batch in order and estimate accuracy.

Replays a planted ground truth (true accuracy printed at the end) through
the cluster-complete estimator, shows the live stopping decision, and
prints the final per-stratum table.

Needs demo-output/{bundle.json,batch.jsonl} from demos 01 and 02.

    python demos/03_judgments_and_estimates.py
"""
from pathlib import Path

from linkaudit import (
    EstimatorConfig,
    Judgment,
    JudgmentsDoc,
    load_corpus_bundle,
    recompute_on_cluster_complete,
)
from linkaudit.estimation import write_judgments_file
from linkaudit.sampling import load_batch_file

from demo_corpus import planted_truth

out = Path("demo-output")
corpus = load_corpus_bundle(str(out / "bundle.json"))
loaded = load_batch_file(str(out / "batch.jsonl"))
batch = loaded.batch

truth = planted_truth(list(corpus.triples.values()), accuracy=0.9)
true_mu = sum(truth.values()) / len(truth)

config = EstimatorConfig(alpha=batch.alpha, epsilon=batch.epsilon, m=batch.design.m)
log: list[Judgment] = []
stopped_at = None
report = None
for unit in batch.units:
    for tid in unit.triple_ids:
        verdict = "correct" if truth[tid] else "wrong_concept"
        log.append(Judgment(tid, verdict, elapsed_seconds=13.0, annotator_id="demo"))
    report = recompute_on_cluster_complete(log, batch, config)
    if report.converged and stopped_at is None:
        stopped_at = (report.n_clusters_judged, report.n_triples_judged)
        break

if stopped_at:
    print(
        f"converged after {stopped_at[0]:,} clusters / {stopped_at[1]:,} triples "
        f"({stopped_at[1] / batch.n_triples:.0%} of the batch)"
    )
else:
    print(
        "batch exhausted before the target: the planted errors are "
        "cluster-consistent, so real variance exceeds the sizing assumption; "
        "a live session would keep sampling"
    )
print(
    f"estimate: {report.mu_ss:.3f} +/- {report.moe:.4f} "
    f"(CI [{report.ci_low:.3f}, {report.ci_high:.3f}])"
)
print(f"planted truth: {true_mu:.3f}  covered: {report.ci_low <= true_mu <= report.ci_high}")

print(f"\n{'Stratum':<68} {'mu_hat':>6} {'MoE':>6} {'n':>4}")
for w, s in zip(report.weights, report.strata):
    mu = " n/a" if s.mu_hat is None else f"{s.mu_hat:.3f}"
    moe = "  n/a" if s.moe is None else f"{s.moe:.3f}"
    print(f"{s.name:<68} {mu:>6} {moe:>6} {s.n:>4}")

doc = JudgmentsDoc("demo-session", batch.corpus_hash, tuple(log))
write_judgments_file(doc, str(out / "judgments.json"))
print(f"\nwrote {out/'judgments.json'} ({len(log)} judgments)")
print("the CLI gives the identical report:")
print(f"  linkaudit estimate --batch {out/'batch.jsonl'} --judgments {out/'judgments.json'} --per-stratum")
