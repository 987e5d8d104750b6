import itertools
from collections import Counter

import pytest
from scipy import stats

from linkaudit.corpus import StratificationScheme, build_corpus
from linkaudit.estimation import EstimatorConfig
from linkaudit.sampling import (
    AlternatingLabeler,
    BernoulliLabeler,
    ClustersExhaustedError,
    ConstantLabeler,
    CorpusExhaustedError,
    KTooLargeError,
    MappingLabeler,
    RandomSource,
    SamplerState,
    SamplingDesign,
    ZeroTotalWeightError,
    generate_static_batch,
    load_batch_file,
    make_labeler,
    pps_wor_pick,
    pps_wr_pick,
    srs_design_next,
    srs_wor_sample,
    stwcs_next,
    write_batch_file,
)
from oracles import reference_moe_sequence
from synth import bernoulli_truth, make_corpus, make_triple


class TestRandomSource:
    def test_same_seed_same_stream(self):
        a = RandomSource(42)
        b = RandomSource(42)
        assert [a.random() for _ in range(50)] == [b.random() for _ in range(50)]

    def test_spawn_children_reproducible(self):
        kids1 = [c.random() for c in RandomSource(7).spawn(3)]
        kids2 = [c.random() for c in RandomSource(7).spawn(3)]
        assert kids1 == kids2
        assert len(set(kids1)) == 3


class TestPpsWrPick:
    def test_single_candidate(self):
        rng = RandomSource(0)
        assert all(pps_wr_pick([5.0], rng) == 0 for _ in range(20))

    def test_frequencies_match_weights(self):
        rng = RandomSource(123)
        hits = sum(pps_wr_pick([1, 3], rng) for _ in range(100_000))
        assert hits / 100_000 == pytest.approx(0.75, abs=0.01)

    def test_zero_total_weight(self):
        with pytest.raises(ZeroTotalWeightError):
            pps_wr_pick([0, 0], RandomSource(0))

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            pps_wr_pick([1, -1], RandomSource(0))


class TestPpsWorPick:
    def test_single_unsampled(self):
        assert pps_wor_pick([("a", 10)], set(), RandomSource(0)) == "a"

    def test_renormalized_frequencies(self):
        rng = RandomSource(99)
        candidates = [("a", 1), ("b", 1), ("c", 2)]
        hits = Counter(
            pps_wor_pick(candidates, {"a"}, rng) for _ in range(100_000)
        )
        assert hits["a"] == 0
        assert hits["c"] / 100_000 == pytest.approx(2 / 3, abs=0.01)

    def test_exhausted(self):
        with pytest.raises(ClustersExhaustedError):
            pps_wor_pick([("a", 1)], {"a"}, RandomSource(0))


class TestSrsWorSample:
    def test_full_draw_is_permutation(self):
        ids = ["a", "b", "c", "d"]
        out = srs_wor_sample(ids, 4, RandomSource(5))
        assert sorted(out) == ids

    def test_zero_draw(self):
        assert srs_wor_sample(["a"], 0, RandomSource(0)) == []

    def test_all_pairs_equally_likely(self):
        ids = ["a", "b", "c", "d"]
        rng = RandomSource(2024)
        counts = Counter(
            frozenset(srs_wor_sample(ids, 2, rng)) for _ in range(60_000)
        )
        expected = {frozenset(p) for p in itertools.combinations(ids, 2)}
        assert set(counts) == expected
        for pair in expected:
            assert counts[pair] / 60_000 == pytest.approx(1 / 6, abs=0.01)

    def test_k_too_large(self):
        with pytest.raises(KTooLargeError):
            srs_wor_sample(["a"], 2, RandomSource(0))


class TestStwcsNext:
    def test_small_cluster_taken_whole(self):
        corpus = make_corpus({"DDF": [3]})
        unit = stwcs_next(corpus, SamplerState(corpus), 5, RandomSource(1))
        assert len(unit.triple_ids) == 3

    def test_cap_applies(self):
        corpus = make_corpus({"DDF": [8]})
        unit = stwcs_next(corpus, SamplerState(corpus), 5, RandomSource(1))
        assert len(unit.triple_ids) == 5
        assert len(set(unit.triple_ids)) == 5
        cluster = corpus.cluster_index[(unit.stratum, unit.surface)]
        assert set(unit.triple_ids) <= set(cluster.triple_ids)

    def test_first_stage_marginals(self):
        corpus = make_corpus({"DDF": [30, 30, 30], "Human": [5, 5]})
        rng = RandomSource(77)
        hits = Counter(
            stwcs_next(corpus, SamplerState(corpus), 5, rng).stratum
            for _ in range(100_000)
        )
        assert hits[0] / 100_000 == pytest.approx(0.90, abs=0.01)

    def test_first_stage_chisquare(self):
        corpus = make_corpus({"DDF": [10, 10], "Human": [6, 6], "Gene": [4, 4]})
        rng = RandomSource(12)
        hits = Counter(
            stwcs_next(corpus, SamplerState(corpus), 5, rng).stratum
            for _ in range(100_000)
        )
        observed = [hits[s.index] for s in corpus.strata if s.size > 0]
        expected = [s.weight * 100_000 for s in corpus.strata if s.size > 0]
        assert stats.chisquare(observed, expected).pvalue > 0.001

    def test_no_cluster_twice_and_exhaustion(self):
        corpus = make_corpus({"DDF": [2, 3, 4], "Gene": [1, 5]})
        state = SamplerState(corpus)
        rng = RandomSource(9)
        seen_clusters = set()
        seen_triples = []
        for _ in range(5):
            unit = stwcs_next(corpus, state, 3, rng)
            assert unit.cluster_id not in seen_clusters
            assert 1 <= len(unit.triple_ids) <= 3
            seen_clusters.add(unit.cluster_id)
            seen_triples.extend(unit.triple_ids)
        assert len(seen_triples) == len(set(seen_triples))
        with pytest.raises(CorpusExhaustedError):
            stwcs_next(corpus, state, 3, rng)

    def test_depleted_stratum_leaves_pool(self):
        corpus = make_corpus({"DDF": [9], "Gene": [1]})
        state = SamplerState(corpus)
        rng = RandomSource(3)
        units = [stwcs_next(corpus, state, 10, rng) for _ in range(2)]
        assert {u.stratum for u in units} == {0, corpus.strata[3].index}


class TestSrsDesignNext:
    def test_last_remaining(self):
        corpus = make_corpus({"DDF": [1]})
        state = SamplerState(corpus)
        assert srs_design_next(corpus, state, RandomSource(0)) in corpus.triples

    def test_uniform_first_draw(self):
        corpus = make_corpus({"DDF": [2], "Gene": [3]})
        rng = RandomSource(8)
        hits = Counter(
            srs_design_next(corpus, SamplerState(corpus), rng)
            for _ in range(100_000)
        )
        for tid in corpus.triples:
            assert hits[tid] / 100_000 == pytest.approx(0.2, abs=0.01)

    def test_exhausted(self):
        corpus = make_corpus({"DDF": [2]})
        state = SamplerState(corpus)
        rng = RandomSource(0)
        srs_design_next(corpus, state, rng)
        srs_design_next(corpus, state, rng)
        with pytest.raises(CorpusExhaustedError):
            srs_design_next(corpus, state, rng)


class TestLabelers:
    def test_alternating(self):
        lab = AlternatingLabeler()
        assert [lab.indicator(i, "t") for i in range(4)] == [1, 0, 1, 0]

    def test_constant_and_bernoulli_bounds(self):
        assert ConstantLabeler(1).indicator(3, "t") == 1
        lab = BernoulliLabeler(0.5, RandomSource(1))
        draws = [lab.indicator(i, "t") for i in range(2000)]
        assert set(draws) == {0, 1}
        assert sum(draws) / 2000 == pytest.approx(0.5, abs=0.05)

    def test_make_labeler(self):
        assert isinstance(make_labeler("alternating"), AlternatingLabeler)
        assert isinstance(make_labeler("bernoulli:0.9", seed=1), BernoulliLabeler)
        assert isinstance(make_labeler("constant:0"), ConstantLabeler)
        with pytest.raises(ValueError):
            make_labeler("bernoulli:0.9")
        with pytest.raises(ValueError):
            make_labeler("nope")


class TestGenerateStaticBatch:
    def _corpus(self):
        return make_corpus(
            {
                "DDF": [5, 4, 6, 3, 5, 4],
                "Microbiome": [5, 5, 4, 6],
                "Human": [3, 5, 4, 4],
            }
        )

    def test_worst_case_converges_and_stops_on_cluster(self):
        corpus = self._corpus()
        gen = generate_static_batch(
            corpus, SamplingDesign("stwcs", 5), epsilon=0.2, alpha=0.05, seed=42
        )
        assert gen.report.converged
        assert gen.report.moe is not None and gen.report.moe <= 0.2
        # the previous checkpoint was not converged: stop is cluster-granular
        assert not gen.trajectory[-2].converged
        assert gen.trajectory[-1].converged

    def test_moe_trajectory_matches_reference(self):
        corpus = self._corpus()
        truth = bernoulli_truth(corpus, 0.8, seed=11)
        gen = generate_static_batch(
            corpus,
            SamplingDesign("stwcs", 5),
            epsilon=0.15,
            alpha=0.05,
            seed=7,
            labeler=MappingLabeler(truth),
        )
        stream = [
            (u.stratum, list(inds)) for u, inds in zip(gen.batch.units, gen.indicators)
        ]
        z = EstimatorConfig(alpha=0.05).z
        reference = reference_moe_sequence(stream, corpus.weights, z)
        got = [p.moe for p in gen.trajectory]
        assert len(reference) == len(got)
        for ref, val in zip(reference, got):
            if ref is None:
                assert val is None
            else:
                assert val == pytest.approx(ref, abs=1e-12)

    def test_two_cluster_threshold_example(self):
        # one stratum, two clusters of 3; alternating labels force means
        # around 1/2 and the MoE crosses 0.4 exactly at a cluster boundary
        corpus = make_corpus({"DDF": [3, 3]})
        gen = generate_static_batch(
            corpus, SamplingDesign("stwcs", 5), epsilon=0.4, alpha=0.05, seed=1
        )
        z = EstimatorConfig(alpha=0.05).z
        stream = [
            (u.stratum, list(inds)) for u, inds in zip(gen.batch.units, gen.indicators)
        ]
        reference = reference_moe_sequence(stream, corpus.weights, z)
        assert gen.report.moe == pytest.approx(reference[-1], abs=1e-12)
        assert gen.report.moe <= 0.4
        assert gen.trajectory[-1].units_done == len(gen.batch.units)

    def test_unit_sizes_and_uniqueness(self):
        corpus = self._corpus()
        gen = generate_static_batch(
            corpus, SamplingDesign("stwcs", 5), epsilon=0.1, alpha=0.05, seed=3
        )
        clusters = [u.cluster_id for u in gen.batch.units]
        assert len(clusters) == len(set(clusters))
        tids = gen.batch.triple_ids()
        assert len(tids) == len(set(tids))
        for unit in gen.batch.units:
            assert 1 <= len(unit.triple_ids) <= 5

    def test_adjacent_same_cluster_transitions(self):
        corpus = self._corpus()
        gen = generate_static_batch(
            corpus, SamplingDesign("stwcs", 5), epsilon=0.1, alpha=0.05, seed=3
        )
        order = [
            corpus.cluster_of(tid).surface + str(corpus.cluster_of(tid).stratum)
            for tid in gen.batch.triple_ids()
        ]
        same = sum(1 for a, b in zip(order, order[1:]) if a == b)
        assert same == sum(len(u.triple_ids) - 1 for u in gen.batch.units)

    def test_byte_identical_across_runs(self, tmp_path):
        corpus = self._corpus()
        paths = []
        for run in range(2):
            gen = generate_static_batch(
                corpus, SamplingDesign("stwcs", 5), epsilon=0.15, alpha=0.05, seed=42
            )
            path = tmp_path / f"batch{run}.jsonl"
            write_batch_file(gen.batch, corpus, str(path))
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_epsilon_validation(self):
        with pytest.raises(ValueError):
            generate_static_batch(
                self._corpus(), SamplingDesign("stwcs", 5), 0.6, 0.05, 1
            )

    def test_srs_design_batch(self):
        corpus = self._corpus()
        gen = generate_static_batch(
            corpus, SamplingDesign("srs", None), epsilon=0.2, alpha=0.05, seed=5
        )
        assert all(len(u.triple_ids) == 1 for u in gen.batch.units)
        assert gen.report.design == "srs"
        assert gen.report.converged

    def test_moe_trend_on_worst_case_labeler(self):
        # not monotone step to step, but the final MoE should not exceed
        # any checkpoint from the last ten clusters in 95% of seeds
        corpus = make_corpus({"DDF": [3] * 30, "Human": [3] * 30, "Gene": [3] * 30})
        design = SamplingDesign("stwcs", 5)
        ok = 0
        seeds = 40
        for seed in range(seeds):
            gen = generate_static_batch(
                corpus, design, epsilon=0.03, alpha=0.05, seed=seed
            )
            moes = [p.moe for p in gen.trajectory]
            final = moes[-1]
            window = [m for m in moes[-11:-1] if m is not None]
            ok += int(
                final is not None
                and bool(window)
                and all(final <= m + 1e-12 for m in window)
            )
        assert ok / seeds >= 0.95

    def test_exhaustion_flag_when_target_unreachable(self):
        # odd cluster sizes keep the alternating means off 1/2, so the
        # variance stays positive and the tiny target stays out of reach
        corpus = make_corpus({"DDF": [3, 3]})
        gen = generate_static_batch(
            corpus, SamplingDesign("stwcs", 5), epsilon=0.01, alpha=0.05, seed=2
        )
        assert gen.exhausted
        assert not gen.report.converged
        assert len(gen.batch.units) == 2


class TestBatchFile:
    def test_round_trip(self, tmp_path):
        corpus = make_corpus({"DDF": [4, 2], "Gene": [3, 3]})
        gen = generate_static_batch(
            corpus, SamplingDesign("stwcs", 3), epsilon=0.3, alpha=0.05, seed=6
        )
        path = tmp_path / "batch.jsonl"
        write_batch_file(gen.batch, corpus, str(path))
        loaded = load_batch_file(str(path))
        assert loaded.batch == gen.batch
        assert loaded.order() == gen.batch.triple_ids()
        tid = gen.batch.triple_ids()[0]
        assert loaded.triples[tid] == corpus.triples[tid]

    def test_srs_round_trip_keeps_singleton_units(self, tmp_path):
        # two draws from the same cluster must stay separate units in order
        triples = [make_triple(f"t{i}", "DDF", "one surface") for i in range(4)]
        corpus = build_corpus(triples, StratificationScheme.default())
        gen = generate_static_batch(
            corpus, SamplingDesign("srs", None), epsilon=0.45, alpha=0.05, seed=4
        )
        path = tmp_path / "batch.jsonl"
        write_batch_file(gen.batch, corpus, str(path))
        loaded = load_batch_file(str(path))
        assert loaded.batch.units == gen.batch.units
        assert loaded.order() == gen.batch.triple_ids()
