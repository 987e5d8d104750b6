"""Shared demo fixture: a synthetic entity-linking corpus.

Builds a five-strata corpus whose stratum totals and cluster counts match
the reference collection the default scheme was designed around, with a
heavy-tailed cluster-size profile (many singleton surface forms, a few
very common ones) and a planted ground truth of known accuracy.
"""
from __future__ import annotations

import json

from linkaudit import ConceptLink, Mention, RandomSource, Triple
from linkaudit.corpus import triple_to_record

STRATUM_SHAPE = {
    # label: (triples, clusters) per stratum of the default scheme
    "DDF": (4105, 1321),
    "Microbiome": (2030, 514),
    "Human": (2078, 665),
    "Chemical": (1487, 802),
    "Drug": (1484, 814),
}


def skewed_sizes(total: int, n_clusters: int, rng: RandomSource) -> list[int]:
    """Heavy-tailed cluster sizes summing exactly to ``total``."""
    sizes = [1] * n_clusters
    weights = [1.0] * n_clusters
    running = float(n_clusters)
    for _ in range(total - n_clusters):
        u = rng.random() * running
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                sizes[i] += 1
                weights[i] += 1.0
                running += 1.0
                break
    return sorted(sizes, reverse=True)


def sample_triples(seed: int = 7) -> list[Triple]:
    rng = RandomSource(seed)
    triples = []
    serial = 0
    for label, (total, n_clusters) in STRATUM_SHAPE.items():
        for c, size in enumerate(skewed_sizes(total, n_clusters, rng)):
            surface = f"{label.lower()} mention {c:04d}"
            context = f"This abstract discusses {surface} and related findings."
            start = context.index(surface)
            for _ in range(size):
                triples.append(
                    Triple(
                        triple_id=f"t{serial:06d}",
                        mention=Mention(
                            document_id=f"doc-{serial % 400:04d}",
                            text_span=surface,
                            label=label,
                            location="abstract",
                            start_offset=start,
                            end_offset=start + len(surface),
                        ),
                        concept=ConceptLink(
                            uri=f"http://demo.example/concept/{label}/{c}",
                            resource="DEMO-VOCAB",
                            names=(surface.title(),),
                            definitions=(f"Demo concept for '{surface}'.",),
                        ),
                        context_text=context,
                    )
                )
                serial += 1
    return triples


def planted_truth(triples: list[Triple], accuracy: float, seed: int = 11) -> dict[str, int]:
    """Per-triple correctness with roughly cluster-consistent errors."""
    rng = RandomSource(seed)
    verdict_by_surface: dict[str, int] = {}
    truth = {}
    for t in triples:
        key = t.mention.text_span
        if key not in verdict_by_surface:
            verdict_by_surface[key] = 1 if rng.random() < accuracy else 0
        # a small fraction of within-cluster disagreement keeps it realistic
        flip = rng.random() < 0.05
        truth[t.triple_id] = verdict_by_surface[key] ^ int(flip)
    return truth


def write_corpus_jsonl(triples: list[Triple], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(json.dumps(triple_to_record(t), ensure_ascii=False) + "\n")
