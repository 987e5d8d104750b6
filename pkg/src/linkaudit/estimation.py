"""Accuracy estimators: per-stratum cluster estimates, the weighted
aggregate with its confidence interval, and convergence decisions.

The stratum-level estimator is the plain mean of sampled-cluster accuracy
means; its variance is estimated as the sample variance of those cluster
means divided by the number of clusters (a with-replacement approximation,
slightly conservative for without-replacement draws). Stratum estimates
combine linearly by stratum weight, and the margin of error is the
normal-quantile half-width of the aggregate's confidence interval.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from scipy import stats

if TYPE_CHECKING:  # avoid a runtime cycle; batches are duck-typed here
    from .sampling import SampleBatch

__all__ = [
    "VERDICTS",
    "Judgment",
    "JudgmentsDoc",
    "EstimatorConfig",
    "StratumEstimate",
    "EstimateReport",
    "EstimationError",
    "EmptyClusterError",
    "TooFewSamplesError",
    "verdict_to_indicator",
    "cluster_mean",
    "twcs_estimate",
    "estimate_stratum",
    "stwcs_aggregate",
    "srs_estimate",
    "srs_report",
    "effective_judgments",
    "recompute_on_cluster_complete",
    "write_judgments_file",
    "load_judgments_file",
]

# correct counts as 1; both failure modes count as 0 but stay distinguishable
# in exports for downstream curation
VERDICTS = ("correct", "wrong_concept", "overly_generic")


class EstimationError(Exception):
    """Base class for estimation failures."""


class EmptyClusterError(EstimationError):
    """A cluster mean needs at least one indicator."""


class TooFewSamplesError(EstimationError):
    """The SRS margin of error needs at least two judged triples."""


def verdict_to_indicator(verdict: str) -> int:
    """Map a verdict to the correctness indicator: correct -> 1, else 0."""
    if verdict not in VERDICTS:
        raise ValueError(f"unknown verdict {verdict!r}")
    return 1 if verdict == "correct" else 0


@dataclass(frozen=True)
class Judgment:
    """One expert verdict on one triple, with its wall-clock cost."""

    triple_id: str
    verdict: str
    elapsed_seconds: float
    annotator_id: str = ""
    submitted_at: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.elapsed_seconds < 0:
            raise ValueError("elapsed_seconds must be non-negative")

    def to_dict(self) -> dict:
        return {
            "triple_id": self.triple_id,
            "verdict": self.verdict,
            "elapsed_seconds": self.elapsed_seconds,
            "annotator_id": self.annotator_id,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "Judgment":
        return cls(
            triple_id=str(rec["triple_id"]),
            verdict=str(rec["verdict"]),
            elapsed_seconds=float(rec["elapsed_seconds"]),
            annotator_id=str(rec.get("annotator_id", "")),
            submitted_at=str(rec.get("submitted_at", "")),
        )


def effective_judgments(log: Iterable[Judgment]) -> dict[str, Judgment]:
    """Collapse a judgment log to one verdict per triple, last submission wins."""
    eff: dict[str, Judgment] = {}
    for j in log:
        eff[j.triple_id] = j
    return eff


@dataclass(frozen=True)
class EstimatorConfig:
    """Significance level, convergence target, and cluster cap."""

    alpha: float = 0.05
    epsilon: float = 0.05
    m: int | None = 5
    z: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "z", float(stats.norm.isf(self.alpha / 2.0)))


def cluster_mean(indicators: Sequence[int]) -> float:
    """Mean accuracy of the triples annotated in one cluster."""
    if not indicators:
        raise EmptyClusterError("cluster has no judged triples")
    return sum(indicators) / len(indicators)


def twcs_estimate(cluster_means: Sequence[float]) -> tuple[float, float | None]:
    """Mean of cluster means and its estimated variance (None when n < 2).

    The variance is s^2 / n with s^2 the (n-1)-denominator sample variance
    of the cluster means.
    """
    n = len(cluster_means)
    if n == 0:
        raise EmptyClusterError("no sampled clusters")
    mu = sum(cluster_means) / n
    if n < 2:
        return mu, None
    s2 = sum((x - mu) ** 2 for x in cluster_means) / (n - 1)
    return mu, s2 / n


@dataclass(frozen=True)
class StratumEstimate:
    """Stratum-level estimate over its fully-judged sampled clusters."""

    index: int
    name: str
    n: int  # fully-judged clusters
    mu_hat: float | None
    variance: float | None
    moe: float | None
    n_triples: int = 0
    cluster_means: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "name": self.name,
            "n_clusters": self.n,
            "n_triples": self.n_triples,
            "mu_hat": self.mu_hat,
            "variance": self.variance,
            "moe": self.moe,
        }


def estimate_stratum(
    cluster_means: Sequence[float],
    config: EstimatorConfig,
    index: int = 0,
    name: str = "",
    n_triples: int = 0,
) -> StratumEstimate:
    """Build the stratum estimate from its judged-cluster means."""
    n = len(cluster_means)
    if n == 0:
        return StratumEstimate(index, name, 0, None, None, None, n_triples)
    mu, var = twcs_estimate(cluster_means)
    moe = None if var is None else config.z * var**0.5
    return StratumEstimate(
        index, name, n, mu, var, moe, n_triples, tuple(cluster_means)
    )


@dataclass(frozen=True)
class EstimateReport:
    """The corpus-level estimate with its confidence interval and status."""

    design: str
    mu_ss: float | None
    moe: float | None
    ci_low: float | None
    ci_high: float | None
    converged: bool
    epsilon: float
    alpha: float
    z: float
    n_triples_judged: int
    n_clusters_judged: int
    strata: tuple[StratumEstimate, ...] = ()
    weights: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        strata = []
        for w, s in zip(self.weights, self.strata):
            rec = s.to_dict()
            rec["weight"] = w
            strata.append(rec)
        return {
            "design": self.design,
            "mu_ss": self.mu_ss,
            "moe": self.moe,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "converged": self.converged,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "z": self.z,
            "n_triples_judged": self.n_triples_judged,
            "n_clusters_judged": self.n_clusters_judged,
            "strata": strata,
        }


def stwcs_aggregate(
    stratum_estimates: Sequence[StratumEstimate],
    weights: Sequence[float],
    config: EstimatorConfig,
    design: str = "stwcs",
    n_triples_judged: int | None = None,
) -> EstimateReport:
    """Combine stratum estimates into the weighted corpus-level report.

    Every positive-weight stratum with at least one judged cluster
    contributes to the point estimate. The margin of error (and therefore
    convergence) is defined only once every positive-weight stratum has at
    least two judged clusters, since each variance term needs two.
    """
    if len(stratum_estimates) != len(weights):
        raise ValueError("one weight per stratum estimate required")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("stratum weights must sum to 1")

    with_data = [
        (w, s) for w, s in zip(weights, stratum_estimates) if w > 0 and s.n >= 1
    ]
    mu_ss = sum(w * s.mu_hat for w, s in with_data) if with_data else None

    moe = None
    positive = [(w, s) for w, s in zip(weights, stratum_estimates) if w > 0]
    if positive and all(s.n >= 2 for _, s in positive):
        moe = config.z * sum(w**2 * s.variance for w, s in positive) ** 0.5

    ci_low = ci_high = None
    if moe is not None and mu_ss is not None:
        ci_low, ci_high = mu_ss - moe, mu_ss + moe

    return EstimateReport(
        design=design,
        mu_ss=mu_ss,
        moe=moe,
        ci_low=ci_low,
        ci_high=ci_high,
        converged=moe is not None and moe <= config.epsilon,
        epsilon=config.epsilon,
        alpha=config.alpha,
        z=config.z,
        n_triples_judged=(
            sum(s.n_triples for s in stratum_estimates)
            if n_triples_judged is None
            else n_triples_judged
        ),
        n_clusters_judged=sum(s.n for s in stratum_estimates),
        strata=tuple(stratum_estimates),
        weights=tuple(weights),
    )


def srs_estimate(indicators: Sequence[int], config: EstimatorConfig) -> tuple[float, float]:
    """Sample mean and normal-approximation margin of error under SRS."""
    n = len(indicators)
    if n < 2:
        raise TooFewSamplesError("need at least 2 judged triples")
    p = sum(indicators) / n
    return p, config.z * (p * (1.0 - p) / n) ** 0.5


def srs_report(
    indicators: Sequence[int],
    config: EstimatorConfig,
    n_triples_judged: int | None = None,
) -> EstimateReport:
    """SRS report that degrades gracefully below the two-sample minimum."""
    n = len(indicators)
    mu = sum(indicators) / n if n else None
    moe = srs_estimate(indicators, config)[1] if n >= 2 else None
    return EstimateReport(
        design="srs",
        mu_ss=mu,
        moe=moe,
        ci_low=None if moe is None else mu - moe,
        ci_high=None if moe is None else mu + moe,
        converged=moe is not None and moe <= config.epsilon,
        epsilon=config.epsilon,
        alpha=config.alpha,
        z=config.z,
        n_triples_judged=n if n_triples_judged is None else n_triples_judged,
        n_clusters_judged=n,
    )


def recompute_on_cluster_complete(
    judgment_log: Iterable[Judgment],
    batch: "SampleBatch",
    config: EstimatorConfig,
) -> EstimateReport:
    """Estimate from a judgment log, counting only fully-judged clusters.

    Sample units whose every selected triple has an effective judgment
    enter the estimate; partially judged clusters are invisible to it
    (they still count toward ``n_triples_judged`` progress).
    """
    eff = effective_judgments(judgment_log)
    batch_ids = set(batch.triple_ids())
    n_judged = sum(1 for tid in eff if tid in batch_ids)

    complete: list = []
    for unit in batch.units:
        if all(tid in eff for tid in unit.triple_ids):
            complete.append(unit)

    def unit_mean(unit) -> float:
        return cluster_mean(
            [verdict_to_indicator(eff[tid].verdict) for tid in unit.triple_ids]
        )

    kind = batch.design.kind
    if kind == "srs":
        indicators = [
            verdict_to_indicator(eff[u.triple_ids[0]].verdict) for u in complete
        ]
        return srs_report(indicators, config, n_triples_judged=n_judged)

    if kind == "stwcs":
        means: list[list[float]] = [[] for _ in batch.strata]
        triples: list[int] = [0 for _ in batch.strata]
        for unit in complete:
            means[unit.stratum].append(unit_mean(unit))
            triples[unit.stratum] += len(unit.triple_ids)
        per_stratum = [
            estimate_stratum(
                means[h], config, index=h, name=s.name, n_triples=triples[h]
            )
            for h, s in enumerate(batch.strata)
        ]
        weights = [s.weight for s in batch.strata]
        return stwcs_aggregate(
            per_stratum, weights, config, n_triples_judged=n_judged
        )

    # twcs / wcs: one pooled pseudo-stratum
    pooled = [unit_mean(u) for u in complete]
    n_triples = sum(len(u.triple_ids) for u in complete)
    per_stratum = [
        estimate_stratum(pooled, config, index=0, name="all", n_triples=n_triples)
    ]
    return stwcs_aggregate(
        per_stratum, [1.0], config, design=kind, n_triples_judged=n_judged
    )


# --- judgments files -------------------------------------------------------


@dataclass(frozen=True)
class JudgmentsDoc:
    """The export/import/resume document: a session's full judgment log."""

    session_id: str
    corpus_hash: str
    judgments: tuple[Judgment, ...]

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "corpus_hash": self.corpus_hash,
            "judgments": [j.to_dict() for j in self.judgments],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "JudgmentsDoc":
        return cls(
            session_id=str(doc.get("session_id", "")),
            corpus_hash=str(doc.get("corpus_hash", "")),
            judgments=tuple(Judgment.from_dict(rec) for rec in doc["judgments"]),
        )


def write_judgments_file(doc: JudgmentsDoc, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_judgments_file(path: str) -> JudgmentsDoc:
    with open(path, encoding="utf-8") as fh:
        return JudgmentsDoc.from_dict(json.load(fh))
