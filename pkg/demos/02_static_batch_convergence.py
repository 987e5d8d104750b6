"""Generate a static annotation batch sized by synthetic verdicts and
watch the margin of error converge cluster by cluster.

Needs demo-output/bundle.json from demos/01_corpus_and_strata.py.

    python demos/02_static_batch_convergence.py
"""
from pathlib import Path

from linkaudit import SamplingDesign, generate_static_batch, load_corpus_bundle
from linkaudit.sampling import make_labeler, write_batch_file

out = Path("demo-output")
corpus = load_corpus_bundle(str(out / "bundle.json"))
design = SamplingDesign("stwcs", m=5)

# the alternating labeler simulates accuracy 0.5 with per-triple alternation;
# it is the worst case for triple-level variance but keeps multi-triple
# cluster means packed around 1/2
alt = generate_static_batch(
    corpus, design, epsilon=0.05, alpha=0.05, seed=42, min_clusters_per_stratum=10
)
print(
    f"alternating sizing : {alt.batch.n_triples:>5,} triples "
    f"in {len(alt.batch.units):>4,} clusters (final MoE {alt.report.moe:.4f})"
)

# coin-flip verdicts also average 0.5 but let cluster means spread, which
# sizes the batch for corpora whose errors are cluster-consistent
gen = generate_static_batch(
    corpus,
    design,
    epsilon=0.05,
    alpha=0.05,
    seed=42,
    labeler=make_labeler("bernoulli:0.5", seed=42),
    min_clusters_per_stratum=10,
)
print(
    f"coin-flip sizing   : {gen.batch.n_triples:>5,} triples "
    f"in {len(gen.batch.units):>4,} clusters (final MoE {gen.report.moe:.4f})"
)

print("\nMoE trajectory of the coin-flip batch (every 10th completed cluster):")
for point in gen.trajectory[::10]:
    moe = "  n/a " if point.moe is None else f"{point.moe:.4f}"
    bar = "" if point.moe is None else "#" * int(point.moe * 200)
    print(f"  {point.units_done:>4} clusters {point.triples_done:>5} triples  MoE {moe}  {bar}")
last = gen.trajectory[-1]
print(f"  {last.units_done:>4} clusters {last.triples_done:>5} triples  MoE {last.moe:.4f}  <- stop")

write_batch_file(gen.batch, corpus, str(out / "batch.jsonl"))
print(f"\nwrote {out/'batch.jsonl'}")

gen2 = generate_static_batch(
    corpus,
    design,
    epsilon=0.05,
    alpha=0.05,
    seed=42,
    labeler=make_labeler("bernoulli:0.5", seed=42),
    min_clusters_per_stratum=10,
)
print(f"re-run with the same seed is identical: {gen2.batch == gen.batch}")
