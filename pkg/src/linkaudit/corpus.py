"""Corpus model: triples, surface-form normalization, strata, and clusters.

A corpus is an immutable partition of entity-linking triples. Each triple
belongs to exactly one stratum (decided by its entity label through a
stratification scheme) and, within that stratum, to exactly one cluster of
triples sharing the same normalized mention surface form.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

__all__ = [
    "Mention",
    "ConceptLink",
    "Triple",
    "StratificationScheme",
    "Cluster",
    "StratumInfo",
    "Corpus",
    "CorpusError",
    "CorpusParseError",
    "UnknownLabelError",
    "DuplicateIdError",
    "EmptyCorpusError",
    "normalize_surface",
    "assign_stratum",
    "build_corpus",
    "parse_corpus_file",
    "parse_corpus_lines",
    "triple_to_record",
    "record_to_triple",
    "write_corpus_bundle",
    "load_corpus_bundle",
    "DEFAULT_SCHEME",
]

LOCATIONS = ("title", "abstract")


class CorpusError(Exception):
    """Base class for corpus construction and parsing failures."""


class CorpusParseError(CorpusError):
    """A corpus file line could not be parsed; message names the line."""


class UnknownLabelError(CorpusError):
    """An entity label is not covered by the stratification scheme."""


class DuplicateIdError(CorpusError):
    """Two triples share the same triple_id."""


class EmptyCorpusError(CorpusError):
    """A corpus must contain at least one triple."""


@dataclass(frozen=True)
class Mention:
    """One entity mention: a text span at a character offset range.

    Offsets are code-point indices (whitespace included) within the named
    location of the source document.
    """

    document_id: str
    text_span: str
    label: str
    location: str
    start_offset: int
    end_offset: int

    def __post_init__(self) -> None:
        if not self.text_span:
            raise ValueError("mention text_span must be non-empty")
        if not (0 <= self.start_offset < self.end_offset):
            raise ValueError(
                f"invalid offsets [{self.start_offset}, {self.end_offset})"
            )
        if self.location not in LOCATIONS:
            raise ValueError(f"location must be one of {LOCATIONS}")


@dataclass(frozen=True)
class ConceptLink:
    """The concept a mention is linked to, with display metadata."""

    uri: str
    resource: str
    names: tuple[str, ...] = ()
    definitions: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.uri:
            raise ValueError("concept uri must be non-empty")


@dataclass(frozen=True)
class Triple:
    """One mention-to-concept linkage, the unit whose correctness is judged.

    ``context_text`` carries the full title/abstract text for display; it
    plays no role in stratification or clustering.
    """

    triple_id: str
    mention: Mention
    concept: ConceptLink
    context_text: str = ""


def normalize_surface(text: str) -> str:
    """Normalize a mention span to its surface form.

    Lowercases and collapses every whitespace run (spaces, tabs, newlines)
    to a single space, trimming the ends. Idempotent.
    """
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class StratificationScheme:
    """Deterministic label-to-stratum assignment.

    ``stratum_names`` fixes the stratum order; ``label_to_stratum`` maps
    case-normalized entity labels to indices in that order. Every label
    maps to exactly one stratum.
    """

    stratum_names: tuple[str, ...]
    label_to_stratum: dict[str, int]

    def __post_init__(self) -> None:
        owned = set(self.label_to_stratum.values())
        missing = [
            name for i, name in enumerate(self.stratum_names) if i not in owned
        ]
        if missing:
            raise ValueError(f"strata own no labels: {missing}")
        for label, idx in self.label_to_stratum.items():
            if not 0 <= idx < len(self.stratum_names):
                raise ValueError(f"label {label!r} maps to unknown stratum {idx}")

    @classmethod
    def from_label_map(cls, label_map: dict[str, str]) -> "StratificationScheme":
        """Build a scheme from a {label: stratum name} map.

        Stratum order is the order of first appearance in the map. Labels
        are matched case-insensitively after trimming; two spellings of the
        same label are rejected rather than silently merged.
        """
        names: list[str] = []
        label_to_stratum: dict[str, int] = {}
        for label, stratum in label_map.items():
            if stratum not in names:
                names.append(stratum)
            key = label.strip().lower()
            if not key:
                raise ValueError("empty label in stratification scheme")
            idx = names.index(stratum)
            if key in label_to_stratum and label_to_stratum[key] != idx:
                raise ValueError(f"label {label!r} maps to two strata")
            label_to_stratum[key] = idx
        return cls(tuple(names), label_to_stratum)

    @classmethod
    def from_file(cls, path: str) -> "StratificationScheme":
        with open(path, encoding="utf-8") as fh:
            label_map = json.load(fh)
        if not isinstance(label_map, dict):
            raise CorpusParseError("scheme file must be a JSON object")
        return cls.from_label_map(label_map)

    @classmethod
    def default(cls) -> "StratificationScheme":
        return cls.from_label_map(DEFAULT_LABEL_MAP)

    def stratum_of(self, label: str) -> int:
        key = label.strip().lower()
        try:
            return self.label_to_stratum[key]
        except KeyError:
            raise UnknownLabelError(
                f"label {label!r} is not covered by the stratification scheme"
            ) from None

    def to_label_map(self) -> dict[str, str]:
        return {
            label: self.stratum_names[idx]
            for label, idx in self.label_to_stratum.items()
        }


# Default five-strata grouping of the thirteen biomedical entity labels.
DEFAULT_LABEL_MAP: dict[str, str] = {
    "DDF": "DDF",
    "Microbiome": "Microbiome + Bacteria",
    "Bacteria": "Microbiome + Bacteria",
    "Human": "Human + Animal + Anatomical Location",
    "Animal": "Human + Animal + Anatomical Location",
    "Anatomical Location": "Human + Animal + Anatomical Location",
    "Chemical": "Chemical + Gene",
    "Gene": "Chemical + Gene",
    "Drug": "Drug + Dietary Supplement + Food + Biomedical/Statistical Technique",
    "Dietary Supplement": "Drug + Dietary Supplement + Food + Biomedical/Statistical Technique",
    "Food": "Drug + Dietary Supplement + Food + Biomedical/Statistical Technique",
    "Biomedical Technique": "Drug + Dietary Supplement + Food + Biomedical/Statistical Technique",
    "Statistical Technique": "Drug + Dietary Supplement + Food + Biomedical/Statistical Technique",
}

DEFAULT_SCHEME = StratificationScheme.from_label_map(DEFAULT_LABEL_MAP)


def assign_stratum(label: str, scheme: StratificationScheme) -> int:
    """Return the stratum index owning ``label`` (case-insensitive match)."""
    return scheme.stratum_of(label)


@dataclass(frozen=True)
class Cluster:
    """All triples of one stratum sharing a normalized surface form."""

    stratum: int
    surface: str
    triple_ids: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.triple_ids)


@dataclass(frozen=True)
class StratumInfo:
    """Per-stratum counts and the cluster list, in deterministic order."""

    index: int
    name: str
    size: int
    weight: float
    clusters: tuple[Cluster, ...]


@dataclass(frozen=True)
class Corpus:
    """An immutable stratum/cluster partition of a triple collection."""

    scheme: StratificationScheme
    triples: dict[str, Triple]
    strata: tuple[StratumInfo, ...]
    total_size: int
    content_hash: str
    # (stratum, surface) -> Cluster, and triple_id -> (stratum, surface)
    cluster_index: dict[tuple[int, str], Cluster] = field(repr=False, default_factory=dict)
    triple_cluster: dict[str, tuple[int, str]] = field(repr=False, default_factory=dict)

    @property
    def weights(self) -> list[float]:
        return [s.weight for s in self.strata]

    @property
    def n_clusters(self) -> int:
        return sum(len(s.clusters) for s in self.strata)

    def cluster_of(self, triple_id: str) -> Cluster:
        return self.cluster_index[self.triple_cluster[triple_id]]


def build_corpus(triples: list[Triple], scheme: StratificationScheme) -> Corpus:
    """Partition ``triples`` into strata and surface-form clusters.

    Clusters are keyed by (stratum, normalized surface form); the same
    surface in two strata yields two clusters. All orderings are
    deterministic: strata in scheme order, clusters by surface form,
    member triples by triple_id. Raises UnknownLabelError for labels the
    scheme does not cover and DuplicateIdError for repeated ids.
    """
    if not triples:
        raise EmptyCorpusError("empty corpus")

    by_id: dict[str, Triple] = {}
    members: dict[tuple[int, str], list[str]] = {}
    for t in triples:
        if t.triple_id in by_id:
            raise DuplicateIdError(f"duplicate triple_id {t.triple_id!r}")
        by_id[t.triple_id] = t
        h = assign_stratum(t.mention.label, scheme)
        key = (h, normalize_surface(t.mention.text_span))
        members.setdefault(key, []).append(t.triple_id)

    total = len(by_id)
    cluster_index: dict[tuple[int, str], Cluster] = {}
    triple_cluster: dict[str, tuple[int, str]] = {}
    strata: list[StratumInfo] = []
    for h, name in enumerate(scheme.stratum_names):
        surfaces = sorted(s for (hh, s) in members if hh == h)
        clusters = []
        size = 0
        for surface in surfaces:
            ids = tuple(sorted(members[(h, surface)]))
            cluster = Cluster(h, surface, ids)
            clusters.append(cluster)
            cluster_index[(h, surface)] = cluster
            for tid in ids:
                triple_cluster[tid] = (h, surface)
            size += len(ids)
        strata.append(StratumInfo(h, name, size, size / total, tuple(clusters)))

    corpus = Corpus(
        scheme=scheme,
        triples=by_id,
        strata=tuple(strata),
        total_size=total,
        content_hash=_content_hash(by_id, scheme),
        cluster_index=cluster_index,
        triple_cluster=triple_cluster,
    )
    assert abs(sum(corpus.weights) - 1.0) < 1e-12
    return corpus


def _content_hash(by_id: dict[str, Triple], scheme: StratificationScheme) -> str:
    """Stable hash of corpus content, independent of input ordering."""
    payload = {
        "scheme": {
            "strata": list(scheme.stratum_names),
            "labels": scheme.to_label_map(),
        },
        "triples": [triple_to_record(by_id[tid]) for tid in sorted(by_id)],
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# --- file formats ---------------------------------------------------------

_REQUIRED_FIELDS = (
    "triple_id", "doc_id", "text_span", "label", "location",
    "start", "end", "uri", "resource",
)


def triple_to_record(t: Triple) -> dict:
    """Serialize a triple to the corpus-file JSON schema."""
    return {
        "triple_id": t.triple_id,
        "doc_id": t.mention.document_id,
        "text_span": t.mention.text_span,
        "label": t.mention.label,
        "location": t.mention.location,
        "start": t.mention.start_offset,
        "end": t.mention.end_offset,
        "uri": t.concept.uri,
        "resource": t.concept.resource,
        "names": list(t.concept.names),
        "definitions": list(t.concept.definitions),
        "context_text": t.context_text,
    }


def record_to_triple(rec: dict) -> Triple:
    missing = [f for f in _REQUIRED_FIELDS if f not in rec]
    if missing:
        raise KeyError(missing[0])
    mention = Mention(
        document_id=str(rec["doc_id"]),
        text_span=str(rec["text_span"]),
        label=str(rec["label"]),
        location=str(rec["location"]),
        start_offset=int(rec["start"]),
        end_offset=int(rec["end"]),
    )
    concept = ConceptLink(
        uri=str(rec["uri"]),
        resource=str(rec["resource"]),
        names=tuple(rec.get("names") or ()),
        definitions=tuple(rec.get("definitions") or ()),
    )
    return Triple(
        triple_id=str(rec["triple_id"]),
        mention=mention,
        concept=concept,
        context_text=str(rec.get("context_text", "")),
    )


def parse_corpus_lines(lines, source: str = "<corpus>") -> list[Triple]:
    """Parse JSONL corpus content, one triple per line, preserving order.

    Blank lines are skipped. Errors carry the 1-based line number.
    """
    triples: list[Triple] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"{source}: line {lineno}: invalid JSON ({exc.msg})") from exc
        try:
            triples.append(record_to_triple(rec))
        except KeyError as exc:
            raise CorpusParseError(
                f"{source}: line {lineno}: missing required field {exc.args[0]!r}"
            ) from exc
        except (TypeError, ValueError) as exc:
            raise CorpusParseError(f"{source}: line {lineno}: {exc}") from exc
    return triples


def parse_corpus_file(path: str) -> list[Triple]:
    """Parse a JSONL corpus file into triples, in file order."""
    with open(path, encoding="utf-8") as fh:
        return parse_corpus_lines(fh, source=str(path))


BUNDLE_FORMAT = "linkaudit-corpus/1"


def write_corpus_bundle(corpus: Corpus, path: str) -> None:
    """Write a self-contained corpus bundle (scheme + triples, one JSON doc)."""
    doc = {
        "format": BUNDLE_FORMAT,
        "scheme": corpus.scheme.to_label_map(),
        "stratum_order": list(corpus.scheme.stratum_names),
        "content_hash": corpus.content_hash,
        "triples": [triple_to_record(corpus.triples[tid]) for tid in sorted(corpus.triples)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_corpus_bundle(path: str) -> Corpus:
    """Rebuild a corpus from a bundle written by :func:`write_corpus_bundle`."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != BUNDLE_FORMAT:
        raise CorpusParseError(f"{path}: not a corpus bundle")
    label_map = {label: stratum for label, stratum in doc["scheme"].items()}
    order = doc.get("stratum_order")
    if order:
        # restore the original stratum order before first-appearance kicks in
        rank = {name: i for i, name in enumerate(order)}
        label_map = dict(
            sorted(label_map.items(), key=lambda kv: rank.get(kv[1], len(rank)))
        )
    scheme = StratificationScheme.from_label_map(label_map)
    triples = [record_to_triple(rec) for rec in doc["triples"]]
    corpus = build_corpus(triples, scheme)
    stored = doc.get("content_hash")
    if stored and stored != corpus.content_hash:
        raise CorpusParseError(f"{path}: bundle content hash mismatch")
    return corpus
