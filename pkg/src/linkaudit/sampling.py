"""Seeded sampling primitives and the iterative three-stage cluster sampler.

The sampler draws a stratum proportionally to its size (with replacement),
a cluster inside it proportionally to cluster size (without replacement),
and finally up to ``m`` member triples uniformly without replacement.
Simple random sampling of individual triples is available as a baseline
design, and a batch generator runs either design until a margin-of-error
target is met under synthetic verdicts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import estimation
from .corpus import Corpus, Triple, record_to_triple, triple_to_record

__all__ = [
    "RandomSource",
    "SamplingDesign",
    "SamplerState",
    "SampleUnit",
    "SampleBatch",
    "BatchStratum",
    "LoadedBatch",
    "BatchGeneration",
    "TrajectoryPoint",
    "SamplingError",
    "ZeroTotalWeightError",
    "ClustersExhaustedError",
    "CorpusExhaustedError",
    "KTooLargeError",
    "pps_wr_pick",
    "pps_wor_pick",
    "srs_wor_sample",
    "stwcs_next",
    "srs_design_next",
    "generate_static_batch",
    "write_batch_file",
    "load_batch_file",
    "parse_batch_text",
    "AlternatingLabeler",
    "BernoulliLabeler",
    "ConstantLabeler",
    "MappingLabeler",
    "make_labeler",
]


class SamplingError(Exception):
    """Base class for sampling failures."""


class ZeroTotalWeightError(SamplingError):
    """All candidate weights are zero."""


class ClustersExhaustedError(SamplingError):
    """Every candidate cluster has already been sampled."""


class CorpusExhaustedError(SamplingError):
    """No unsampled unit remains anywhere in the corpus."""


class KTooLargeError(SamplingError):
    """Requested more draws than available items."""


class RandomSource:
    """Deterministic random stream: same seed, same draw sequence.

    Backed by numpy's PCG64. Child streams for parallel or auxiliary use
    are derived with :meth:`spawn`, which splits the underlying seed
    sequence; children are independent and reproducible from the seed.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self.seed_sequence = seed
            self.seed = seed.entropy
        else:
            self.seed = int(seed)
            self.seed_sequence = np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed_sequence))

    def random(self) -> float:
        return float(self.generator.random())

    def integers(self, low: int, high: int) -> int:
        """One integer uniform on [low, high)."""
        return int(self.generator.integers(low, high))

    def permutation(self, values) -> np.ndarray:
        return self.generator.permutation(values)

    def spawn(self, n: int) -> list["RandomSource"]:
        return [RandomSource(ss) for ss in self.seed_sequence.spawn(n)]


def pps_wr_pick(weights, rng: RandomSource) -> int:
    """Pick one index with probability proportional to its weight.

    Draws by cumulative-sum inversion over the given order, so the stream
    of random numbers consumed is one ``random()`` per call.
    """
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    total = float(sum(weights))
    if total <= 0.0:
        raise ZeroTotalWeightError("total weight is zero")
    u = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1  # guard against fp round-off at the top end


def pps_wor_pick(candidates, already_sampled, rng: RandomSource):
    """Successive-sampling PPS draw: one unsampled candidate id.

    ``candidates`` is a sequence of ``(id, size)``; sizes of already-drawn
    candidates are removed and the rest renormalized implicitly by the
    cumulative inversion.
    """
    open_ids = [cid for cid, _ in candidates if cid not in already_sampled]
    open_sizes = [size for cid, size in candidates if cid not in already_sampled]
    if not open_ids:
        raise ClustersExhaustedError("all candidates already sampled")
    return open_ids[pps_wr_pick(open_sizes, rng)]


def srs_wor_sample(ids, k: int, rng: RandomSource) -> list:
    """Uniform sample of k items without replacement, in draw order."""
    pool = list(ids)
    if not 0 <= k <= len(pool):
        raise KTooLargeError(f"cannot draw {k} from {len(pool)} items")
    for i in range(k):
        j = rng.integers(i, len(pool))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


@dataclass(frozen=True)
class SamplingDesign:
    """Which sampler runs and the per-cluster annotation cap ``m``.

    ``wcs`` is the unbounded-cap variant of ``twcs``; ``m`` is ignored for
    ``srs`` and must be ``None`` for ``wcs``.
    """

    kind: str = "stwcs"
    m: int | None = 5

    KINDS = ("srs", "twcs", "stwcs", "wcs")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.kind in ("twcs", "stwcs"):
            if self.m is None or self.m < 1:
                raise ValueError(f"{self.kind} requires m >= 1")
        if self.kind == "wcs" and self.m is not None:
            raise ValueError("wcs means an unbounded cap; leave m unset")

    @property
    def cap(self) -> int | None:
        """Effective per-cluster cap (None = annotate whole cluster)."""
        return None if self.kind in ("wcs", "srs") else self.m

    @property
    def clustered(self) -> bool:
        return self.kind != "srs"

    @property
    def stratified(self) -> bool:
        return self.kind == "stwcs"


@dataclass(frozen=True)
class SampleUnit:
    """One emitted draw: a cluster and the triples selected inside it."""

    stratum: int
    surface: str
    triple_ids: tuple[str, ...]

    @property
    def cluster_id(self) -> tuple[int, str]:
        return (self.stratum, self.surface)


class SamplerState:
    """Mutable bookkeeping for one sampling run over a fixed corpus.

    Candidate lists are frozen at construction in canonical order
    (stratum index, surface form, triple_id), so draws depend only on the
    seed, never on input-file ordering.
    """

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        # per-stratum [(surface, size)] in surface order
        self.candidates: list[list[tuple[str, int]]] = [
            [(c.surface, c.size) for c in s.clusters] for s in corpus.strata
        ]
        self.sampled: list[set[str]] = [set() for _ in corpus.strata]
        self.units: list[SampleUnit] = []
        # flat triple pool for the SRS design, swap-popped as triples leave
        self._triple_pool: list[str] | None = None

    def open_clusters(self, stratum: int) -> int:
        return len(self.candidates[stratum]) - len(self.sampled[stratum])

    @property
    def exhausted(self) -> bool:
        return all(self.open_clusters(h) == 0 for h in range(len(self.candidates)))

    def _pool(self) -> list[str]:
        if self._triple_pool is None:
            self._triple_pool = [
                tid
                for s in self.corpus.strata
                for c in s.clusters
                for tid in c.triple_ids
            ]
        return self._triple_pool


def stwcs_next(
    corpus: Corpus, state: SamplerState, m: int | None, rng: RandomSource
) -> SampleUnit:
    """Draw the next cluster unit: stratum PPS-WR, cluster PPS-WOR, triples SRS.

    Stratum weights stay fixed at the full stratum sizes; a stratum only
    leaves the pool once all its clusters are sampled. At most
    ``min(m, cluster size)`` triples are selected (all of them if ``m`` is
    None).
    """
    eligible = [
        h
        for h, s in enumerate(corpus.strata)
        if s.size > 0 and state.open_clusters(h) > 0
    ]
    if not eligible:
        raise CorpusExhaustedError("all clusters in all strata sampled")
    h = eligible[pps_wr_pick([corpus.strata[h].size for h in eligible], rng)]
    surface = pps_wor_pick(state.candidates[h], state.sampled[h], rng)
    cluster = corpus.cluster_index[(h, surface)]
    k = cluster.size if m is None else min(m, cluster.size)
    triple_ids = tuple(srs_wor_sample(cluster.triple_ids, k, rng))
    state.sampled[h].add(surface)
    unit = SampleUnit(h, surface, triple_ids)
    state.units.append(unit)
    return unit


def _pooled_next(
    corpus: Corpus, state: SamplerState, m: int | None, rng: RandomSource
) -> SampleUnit:
    """Unstratified cluster draw: PPS-WOR over every cluster in the corpus."""
    pooled = [
        ((h, surface), size)
        for h, per_stratum in enumerate(state.candidates)
        for surface, size in per_stratum
    ]
    sampled = {
        (h, surface)
        for h, surfaces in enumerate(state.sampled)
        for surface in surfaces
    }
    try:
        h, surface = pps_wor_pick(pooled, sampled, rng)
    except ClustersExhaustedError:
        raise CorpusExhaustedError("all clusters sampled") from None
    cluster = corpus.cluster_index[(h, surface)]
    k = cluster.size if m is None else min(m, cluster.size)
    triple_ids = tuple(srs_wor_sample(cluster.triple_ids, k, rng))
    state.sampled[h].add(surface)
    unit = SampleUnit(h, surface, triple_ids)
    state.units.append(unit)
    return unit


def srs_design_next(corpus: Corpus, state: SamplerState, rng: RandomSource) -> str:
    """Uniform draw of one not-yet-sampled triple id."""
    pool = state._pool()
    if not pool:
        raise CorpusExhaustedError("all triples sampled")
    i = rng.integers(0, len(pool))
    tid = pool[i]
    pool[i] = pool[-1]
    pool.pop()
    return tid


# --- synthetic labelers ----------------------------------------------------


class AlternatingLabeler:
    """Worst-case synthetic verdicts: correct/incorrect by draw parity."""

    def indicator(self, seq: int, triple_id: str) -> int:
        return 1 if seq % 2 == 0 else 0


class BernoulliLabeler:
    """Independent synthetic verdicts, correct with probability p."""

    def __init__(self, p: float, rng: RandomSource):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        self.p = p
        self.rng = rng

    def indicator(self, seq: int, triple_id: str) -> int:
        return 1 if self.rng.random() < self.p else 0


class ConstantLabeler:
    def __init__(self, value: int):
        if value not in (0, 1):
            raise ValueError("constant verdict must be 0 or 1")
        self.value = value

    def indicator(self, seq: int, triple_id: str) -> int:
        return self.value


class MappingLabeler:
    """Verdicts looked up from a known ground-truth map (simulations)."""

    def __init__(self, truth: dict[str, int]):
        self.truth = truth

    def indicator(self, seq: int, triple_id: str) -> int:
        return self.truth[triple_id]


def make_labeler(spec: str, seed: int | None = None):
    """Parse a labeler spec: ``alternating``, ``bernoulli:P``, ``constant:V``."""
    if spec == "alternating":
        return AlternatingLabeler()
    if spec.startswith("bernoulli:"):
        if seed is None:
            raise ValueError("bernoulli labeler needs a seed")
        return BernoulliLabeler(float(spec.split(":", 1)[1]), RandomSource(seed))
    if spec.startswith("constant:"):
        return ConstantLabeler(int(spec.split(":", 1)[1]))
    raise ValueError(f"unknown labeler spec {spec!r}")


# --- static batches --------------------------------------------------------


@dataclass(frozen=True)
class BatchStratum:
    """Stratum metadata copied into the batch header for self-containment."""

    name: str
    size: int
    weight: float
    n_clusters: int


@dataclass(frozen=True)
class SampleBatch:
    """An ordered, reproducible sequence of sample units."""

    seed: int
    design: SamplingDesign
    epsilon: float
    alpha: float
    corpus_hash: str
    strata: tuple[BatchStratum, ...]
    units: tuple[SampleUnit, ...]

    @property
    def n_triples(self) -> int:
        return sum(len(u.triple_ids) for u in self.units)

    def triple_ids(self) -> list[str]:
        return [tid for u in self.units for tid in u.triple_ids]

    def unit_of(self, triple_id: str) -> SampleUnit | None:
        for u in self.units:
            if triple_id in u.triple_ids:
                return u
        return None


@dataclass(frozen=True)
class TrajectoryPoint:
    """Estimate snapshot after one more cluster finished."""

    units_done: int
    triples_done: int
    moe: float | None
    converged: bool


@dataclass(frozen=True)
class BatchGeneration:
    """A generated batch plus the synthetic run that sized it."""

    batch: SampleBatch
    indicators: tuple[tuple[int, ...], ...]  # per unit, aligned with units
    trajectory: tuple[TrajectoryPoint, ...]
    report: "estimation.EstimateReport"
    exhausted: bool


def generate_static_batch(
    corpus: Corpus,
    design: SamplingDesign,
    epsilon: float,
    alpha: float,
    seed: int,
    labeler=None,
    min_clusters_per_stratum: int = 2,
) -> BatchGeneration:
    """Sample units until the margin of error under synthetic verdicts
    drops to ``epsilon``, and freeze the drawn sequence as a batch.

    Verdicts come from ``labeler`` (default: alternating correct/incorrect
    in draw order, the worst case for convergence). The margin of error is
    recomputed each time a cluster completes, so the batch always ends on
    a cluster boundary. Deterministic given (corpus, design, epsilon,
    alpha, seed, labeler).

    ``min_clusters_per_stratum`` is a warm-up floor: the stop rule is only
    honored once every populated stratum holds that many sampled clusters
    (for unstratified designs, the whole pool; for the SRS design, that
    many triples). The default of 2 is the bare minimum that defines the
    margin of error at all; raise it when sizing real campaigns, because
    variance estimated from very few clusters can collapse to zero and
    stop a run far too early.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must be in (0, 0.5)")
    if min_clusters_per_stratum < 2:
        raise ValueError("min_clusters_per_stratum must be at least 2")
    if labeler is None:
        labeler = AlternatingLabeler()
    rng = RandomSource(seed)
    state = SamplerState(corpus)
    config = estimation.EstimatorConfig(alpha=alpha, epsilon=epsilon, m=design.m)
    weights = corpus.weights

    units: list[SampleUnit] = []
    unit_indicators: list[tuple[int, ...]] = []
    trajectory: list[TrajectoryPoint] = []
    # per-stratum cluster means for stwcs; one pooled pseudo-stratum otherwise
    n_groups = len(corpus.strata) if design.stratified else 1
    means: list[list[float]] = [[] for _ in range(n_groups)]
    srs_indicators: list[int] = []
    seq = 0
    exhausted = False

    triples_per_group = [0 for _ in range(n_groups)]

    def checkpoint() -> estimation.EstimateReport:
        if design.kind == "srs":
            return estimation.srs_report(srs_indicators, config)
        group_weights = weights if design.stratified else [1.0]
        names = (
            [s.name for s in corpus.strata] if design.stratified else ["all"]
        )
        per_stratum = [
            estimation.estimate_stratum(
                means[h],
                config,
                index=h,
                name=names[h],
                n_triples=triples_per_group[h],
            )
            for h in range(n_groups)
        ]
        return estimation.stwcs_aggregate(
            per_stratum, group_weights, config, design=design.kind
        )

    while True:
        try:
            if design.kind == "srs":
                tid = srs_design_next(corpus, state, rng)
                cluster = corpus.cluster_of(tid)
                unit = SampleUnit(cluster.stratum, cluster.surface, (tid,))
            elif design.stratified:
                unit = stwcs_next(corpus, state, design.cap, rng)
            else:
                unit = _pooled_next(corpus, state, design.cap, rng)
        except CorpusExhaustedError:
            exhausted = True
            break

        inds = tuple(labeler.indicator(seq + i, tid) for i, tid in enumerate(unit.triple_ids))
        seq += len(unit.triple_ids)
        units.append(unit)
        unit_indicators.append(inds)
        if design.kind == "srs":
            srs_indicators.extend(inds)
        else:
            group = unit.stratum if design.stratified else 0
            means[group].append(sum(inds) / len(inds))
            triples_per_group[group] += len(inds)

        if design.kind == "srs":
            warm = len(srs_indicators) >= min_clusters_per_stratum
        elif design.stratified:
            warm = all(
                len(means[h]) >= min_clusters_per_stratum
                for h, s in enumerate(corpus.strata)
                if s.size > 0
            )
        else:
            warm = len(means[0]) >= min_clusters_per_stratum

        report = checkpoint()
        trajectory.append(
            TrajectoryPoint(len(units), seq, report.moe, report.converged)
        )
        if report.converged and warm:
            break

    batch = SampleBatch(
        seed=seed,
        design=design,
        epsilon=epsilon,
        alpha=alpha,
        corpus_hash=corpus.content_hash,
        strata=tuple(
            BatchStratum(s.name, s.size, s.weight, len(s.clusters))
            for s in corpus.strata
        ),
        units=tuple(units),
    )
    return BatchGeneration(
        batch=batch,
        indicators=tuple(unit_indicators),
        trajectory=tuple(trajectory),
        report=checkpoint(),
        exhausted=exhausted,
    )


# --- batch files -----------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_batch_file(batch: SampleBatch, corpus: Corpus, path: str) -> None:
    """Write a batch as JSONL: a header line, then one line per occurrence.

    Each line repeats the full triple payload so annotation can proceed
    from the batch file alone.
    """
    header = {
        "seed": batch.seed,
        "design": batch.design.kind,
        "m": batch.design.m,
        "epsilon": batch.epsilon,
        "alpha": batch.alpha,
        "corpus_hash": batch.corpus_hash,
        "strata": [
            {
                "name": s.name,
                "size": s.size,
                "weight": s.weight,
                "clusters": s.n_clusters,
            }
            for s in batch.strata
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dumps(header) + "\n")
        seq = 0
        for unit in batch.units:
            for tid in unit.triple_ids:
                rec = {
                    "seq": seq,
                    "stratum": batch.strata[unit.stratum].name,
                    "cluster_surface": unit.surface,
                    **triple_to_record(corpus.triples[tid]),
                }
                fh.write(_dumps(rec) + "\n")
                seq += 1


@dataclass(frozen=True)
class LoadedBatch:
    """A batch read back from disk, with the embedded triple payloads."""

    batch: SampleBatch
    triples: dict[str, Triple]

    def order(self) -> list[str]:
        return self.batch.triple_ids()


def load_batch_file(path: str) -> LoadedBatch:
    with open(path, encoding="utf-8") as fh:
        return parse_batch_text(fh.read(), source=str(path))


def parse_batch_text(text: str, source: str = "<batch>") -> LoadedBatch:
    lines = [line for line in (raw.strip() for raw in text.splitlines()) if line]
    if not lines:
        raise ValueError(f"{source}: empty batch file")
    header = json.loads(lines[0])
    for key in ("seed", "design", "epsilon", "alpha", "corpus_hash", "strata"):
        if key not in header:
            raise ValueError(f"{source}: batch header missing {key!r}")
    design = SamplingDesign(kind=header["design"], m=header.get("m"))
    strata = tuple(
        BatchStratum(s["name"], s["size"], s["weight"], s["clusters"])
        for s in header["strata"]
    )
    stratum_index = {s.name: i for i, s in enumerate(strata)}

    records = [json.loads(line) for line in lines[1:]]
    records.sort(key=lambda r: r["seq"])
    triples: dict[str, Triple] = {}
    keyed: list[tuple[tuple[int, str], str]] = []
    for rec in records:
        key = (stratum_index[rec["stratum"]], rec["cluster_surface"])
        keyed.append((key, rec["triple_id"]))
        triples[rec["triple_id"]] = record_to_triple(rec)

    if design.kind == "srs":
        # every occurrence is its own single-triple unit
        units = tuple(SampleUnit(h, surface, (tid,)) for (h, surface), tid in keyed)
    else:
        # clusters never repeat in a batch: group by cluster, draw order
        unit_ids: dict[tuple[int, str], list[str]] = {}
        for key, tid in keyed:
            unit_ids.setdefault(key, []).append(tid)
        units = tuple(
            SampleUnit(h, surface, tuple(ids))
            for (h, surface), ids in unit_ids.items()
        )
    batch = SampleBatch(
        seed=header["seed"],
        design=design,
        epsilon=header["epsilon"],
        alpha=header["alpha"],
        corpus_hash=header["corpus_hash"],
        strata=strata,
        units=units,
    )
    return LoadedBatch(batch=batch, triples=triples)
