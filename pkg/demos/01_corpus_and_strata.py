"""Build a corpus from a JSONL file and inspect its strata and clusters.

Writes demo-output/corpus.jsonl and demo-output/bundle.json, then prints
the per-stratum weight/cluster/triple table.

    python demos/01_corpus_and_strata.py
"""
from pathlib import Path

from linkaudit import build_corpus, parse_corpus_file, write_corpus_bundle
from linkaudit.corpus import StratificationScheme

from demo_corpus import sample_triples, write_corpus_jsonl

out = Path("demo-output")
out.mkdir(exist_ok=True)

print("generating a synthetic corpus shaped like the reference collection...")
write_corpus_jsonl(sample_triples(), out / "corpus.jsonl")

triples = parse_corpus_file(str(out / "corpus.jsonl"))
corpus = build_corpus(triples, StratificationScheme.default())
write_corpus_bundle(corpus, str(out / "bundle.json"))

print(f"\n{corpus.total_size:,} triples in {corpus.n_clusters:,} clusters")
print(f"content hash: {corpus.content_hash[:16]}\n")
print(f"{'Stratum':<68} {'Weight':>7} {'Clusters':>9} {'Triples':>8}")
for s in corpus.strata:
    print(f"{s.name:<68} {s.weight:>7.4f} {len(s.clusters):>9,} {s.size:>8,}")

largest = max(
    (c for s in corpus.strata for c in s.clusters), key=lambda c: c.size
)
print(
    f"\nlargest cluster: '{largest.surface}' "
    f"({largest.size} occurrences, stratum {corpus.strata[largest.stratum].name})"
)
print(f"\nwrote {out/'corpus.jsonl'} and {out/'bundle.json'}")
