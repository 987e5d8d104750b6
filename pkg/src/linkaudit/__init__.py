"""linkaudit: sampling-based accuracy auditing for entity-linking corpora.

Estimate how accurate a large collection of mention-to-concept links is by
annotating only a small stratified cluster sample, with a margin-of-error
stopping rule and a context-switch cost model for the annotation effort.
"""

from .corpus import (
    ConceptLink,
    Corpus,
    Mention,
    StratificationScheme,
    Triple,
    build_corpus,
    load_corpus_bundle,
    normalize_surface,
    parse_corpus_file,
    write_corpus_bundle,
)
from .cost import (
    CostParams,
    TransitionCounts,
    bootstrap_mean,
    cost_units,
    count_switches,
    derive_params,
    efficiency_report,
    run_srs_cost_simulation,
    simulate_srs,
    time_minutes,
)
from .estimation import (
    EstimateReport,
    EstimatorConfig,
    Judgment,
    JudgmentsDoc,
    StratumEstimate,
    cluster_mean,
    estimate_stratum,
    recompute_on_cluster_complete,
    srs_estimate,
    stwcs_aggregate,
    twcs_estimate,
    verdict_to_indicator,
)
from .sampling import (
    RandomSource,
    SampleBatch,
    SampleUnit,
    SamplerState,
    SamplingDesign,
    generate_static_batch,
    load_batch_file,
    make_labeler,
    pps_wor_pick,
    pps_wr_pick,
    srs_wor_sample,
    stwcs_next,
    write_batch_file,
)

__version__ = "0.1.0"
