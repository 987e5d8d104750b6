"""Context-switch accounting, the linear cost/time models, and the
uniform-permutation simulation used to price a simple-random-sampling
baseline on the same annotated triples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .sampling import RandomSource

__all__ = [
    "TransitionCounts",
    "CostParams",
    "SimulationResult",
    "EfficiencyReport",
    "CostError",
    "InsufficientDataError",
    "EmptySamplesError",
    "ZeroBaselineError",
    "count_switches",
    "cost_units",
    "time_minutes",
    "derive_params",
    "simulate_srs",
    "bootstrap_mean",
    "run_srs_cost_simulation",
    "efficiency_report",
]

DEFAULT_OUTLIER_CAP_S = 300.0
_PERM_BLOCK = 1000  # permutations per spawned child stream


class CostError(Exception):
    pass


class InsufficientDataError(CostError):
    """Not enough observed transitions to fit the time model."""


class EmptySamplesError(CostError):
    pass


class ZeroBaselineError(CostError):
    pass


@dataclass(frozen=True)
class TransitionCounts:
    """Switch/no-switch transition tallies over an annotation sequence."""

    n_t: int
    n_sw: int
    n_nosw: int

    def __post_init__(self) -> None:
        expected = max(self.n_t - 1, 0)
        if self.n_sw + self.n_nosw != expected:
            raise ValueError(
                f"transition counts must satisfy n_sw + n_nosw = {expected}"
            )


@dataclass(frozen=True)
class CostParams:
    """Two-level cost model parameters.

    ``c_t``/``c_s`` are abstract per-triple costs without/with a context
    switch; ``t_base``/``delta_t_switch`` are their wall-clock analogues
    in seconds.
    """

    c_t: float = 0.0
    c_s: float = 0.0
    t_base: float = 0.0
    delta_t_switch: float = 0.0

    def __post_init__(self) -> None:
        if min(self.c_t, self.c_s, self.t_base, self.delta_t_switch) < 0:
            raise ValueError("cost parameters must be non-negative")
        if self.c_s < self.c_t:
            raise ValueError("per-switch cost cannot be below base cost")

    @property
    def slowdown(self) -> float:
        return (self.t_base + self.delta_t_switch) / self.t_base

    @classmethod
    def from_times(cls, t_base: float, delta_t_switch: float) -> "CostParams":
        return cls(
            c_t=t_base,
            c_s=t_base + delta_t_switch,
            t_base=t_base,
            delta_t_switch=delta_t_switch,
        )


def count_switches(sequence: Sequence[Hashable]) -> TransitionCounts:
    """Count cluster-change transitions in an annotation order.

    The first triple produces no transition; every later one is a switch
    when its cluster id differs from its predecessor's.
    """
    n_t = len(sequence)
    n_sw = sum(1 for a, b in zip(sequence, sequence[1:]) if a != b)
    return TransitionCounts(n_t=n_t, n_sw=n_sw, n_nosw=max(n_t - 1, 0) - n_sw)


def cost_units(counts: TransitionCounts, params: CostParams) -> float:
    """cost = c_t * (n_t - n_sw) + c_s * n_sw"""
    return params.c_t * (counts.n_t - counts.n_sw) + params.c_s * counts.n_sw


def time_minutes(counts: TransitionCounts, params: CostParams) -> float:
    """time = n_t * t_base + n_sw * delta_t_switch, reported in minutes."""
    seconds = counts.n_t * params.t_base + counts.n_sw * params.delta_t_switch
    return seconds / 60.0


def derive_params(
    sequence: Sequence[tuple[Hashable, float]],
    outlier_cap_s: float = DEFAULT_OUTLIER_CAP_S,
) -> CostParams:
    """Fit the time model from an annotated (cluster_id, elapsed_s) sequence.

    The session's first triple counts as a switch (no prior context).
    Elapsed times above ``outlier_cap_s`` are treated as interruptions and
    excluded from the means.
    """
    switch_times: list[float] = []
    base_times: list[float] = []
    prev = None
    for i, (cluster, elapsed) in enumerate(sequence):
        is_switch = i == 0 or cluster != prev
        prev = cluster
        if elapsed > outlier_cap_s:
            continue
        (switch_times if is_switch else base_times).append(elapsed)
    if not base_times or not switch_times:
        raise InsufficientDataError(
            "need at least one switch and one no-switch observation"
        )
    t_base = sum(base_times) / len(base_times)
    t_switch = sum(switch_times) / len(switch_times)
    return CostParams.from_times(t_base, max(t_switch - t_base, 0.0))


def simulate_srs(
    cluster_labels: Sequence[Hashable], n_perms: int, rng: RandomSource
) -> np.ndarray:
    """Switch counts of uniform random permutations of the annotated triples.

    Permutations are generated in fixed-size blocks, each on a child
    stream split from ``rng``'s seed and merged in block order, so the
    result is reproducible and blocks could run in parallel.
    """
    if n_perms < 1:
        raise ValueError("n_perms must be >= 1")
    labels = list(cluster_labels)
    index = {lab: i for i, lab in enumerate(dict.fromkeys(labels))}
    codes = np.fromiter((index[lab] for lab in labels), dtype=np.int64)
    if len(codes) <= 1:
        return np.zeros(n_perms, dtype=np.int64)

    n_blocks = (n_perms + _PERM_BLOCK - 1) // _PERM_BLOCK
    children = rng.spawn(n_blocks)
    out = np.empty(n_perms, dtype=np.int64)
    done = 0
    for child in children:
        block = min(_PERM_BLOCK, n_perms - done)
        for i in range(block):
            perm = child.generator.permutation(codes)
            out[done + i] = int(np.count_nonzero(perm[1:] != perm[:-1]))
        done += block
    return out


def bootstrap_mean(
    samples: Sequence[float], n_boot: int, rng: RandomSource
) -> tuple[float, tuple[float, float]]:
    """Grand mean of with-replacement resample means, plus 2.5/97.5 percentiles."""
    if len(samples) == 0:
        raise EmptySamplesError("no samples to bootstrap")
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    arr = np.asarray(samples, dtype=float)
    means = np.empty(n_boot, dtype=float)
    done = 0
    while done < n_boot:  # chunked to bound memory on large n_boot
        chunk = min(2000, n_boot - done)
        draws = rng.generator.integers(0, len(arr), size=(chunk, len(arr)))
        means[done : done + chunk] = arr[draws].mean(axis=1)
        done += chunk
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(means.mean()), (float(lo), float(hi))


@dataclass(frozen=True)
class EfficiencyReport:
    ratio: float
    savings_min: float
    design_slower: bool


def efficiency_report(time_design_min: float, time_baseline_min: float) -> EfficiencyReport:
    """Design-to-baseline time ratio and absolute savings in minutes."""
    if time_baseline_min <= 0:
        raise ZeroBaselineError("baseline time must be positive")
    ratio = time_design_min / time_baseline_min
    return EfficiencyReport(
        ratio=ratio,
        savings_min=time_baseline_min - time_design_min,
        design_slower=ratio > 1.0,
    )


@dataclass(frozen=True)
class SimulationResult:
    """Everything the baseline comparison produced, ready for reporting."""

    n_perms: int
    n_boot: int
    seed: int
    switch_counts: np.ndarray
    mean_switches: float
    mean_noswitches: float
    ci: tuple[float, float]
    params: CostParams
    design_counts: TransitionCounts
    modeled_time_design_min: float
    modeled_time_baseline_min: float
    efficiency: EfficiencyReport

    def to_dict(self) -> dict:
        return {
            "n_perms": self.n_perms,
            "n_boot": self.n_boot,
            "seed": self.seed,
            "mean_switches": self.mean_switches,
            "mean_noswitches": self.mean_noswitches,
            "ci": list(self.ci),
            "t_base_s": self.params.t_base,
            "delta_switch_s": self.params.delta_t_switch,
            "modeled_time_design_min": self.modeled_time_design_min,
            "modeled_time_baseline_min": self.modeled_time_baseline_min,
            "ratio": self.efficiency.ratio,
            "savings_min": self.efficiency.savings_min,
        }


def run_srs_cost_simulation(
    design_order: Sequence[Hashable],
    params: CostParams,
    n_perms: int,
    n_boot: int,
    seed: int,
) -> SimulationResult:
    """Price the recorded annotation order against a simulated SRS baseline.

    Keeps the same annotated triples, permutes their order uniformly
    ``n_perms`` times, bootstraps the resulting switch counts, and runs
    both orders through the time model.
    """
    rng = RandomSource(seed)
    design_counts = count_switches(design_order)
    switch_counts = simulate_srs(design_order, n_perms, rng)
    mean_sw, ci = bootstrap_mean(switch_counts.astype(float), n_boot, rng)
    n_t = design_counts.n_t
    t_design = time_minutes(design_counts, params)
    # baseline time uses the fractional bootstrap mean, not the rounded count
    t_baseline = (n_t * params.t_base + mean_sw * params.delta_t_switch) / 60.0
    return SimulationResult(
        n_perms=n_perms,
        n_boot=n_boot,
        seed=seed,
        switch_counts=switch_counts,
        mean_switches=mean_sw,
        mean_noswitches=max(n_t - 1, 0) - mean_sw,
        ci=ci,
        params=params,
        design_counts=design_counts,
        modeled_time_design_min=t_design,
        modeled_time_baseline_min=t_baseline,
        efficiency=efficiency_report(t_design, t_baseline),
    )
