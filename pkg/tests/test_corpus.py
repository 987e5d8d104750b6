import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from linkaudit.corpus import (
    CorpusParseError,
    DuplicateIdError,
    EmptyCorpusError,
    StratificationScheme,
    UnknownLabelError,
    assign_stratum,
    build_corpus,
    load_corpus_bundle,
    normalize_surface,
    parse_corpus_file,
    triple_to_record,
    write_corpus_bundle,
)
from synth import make_corpus, make_triple


class TestNormalizeSurface:
    def test_already_normalized(self):
        assert normalize_surface("gut microbiome") == "gut microbiome"

    def test_case_and_whitespace(self):
        assert normalize_surface("  Parkinson's   Disease ") == "parkinson's disease"

    def test_tabs_and_newlines_collapse(self):
        assert normalize_surface("gut\t\nmicrobiome") == "gut microbiome"

    def test_empty(self):
        assert normalize_surface("") == ""
        assert normalize_surface("   ") == ""

    @given(st.text())
    def test_idempotent(self, s):
        assert normalize_surface(normalize_surface(s)) == normalize_surface(s)

    @given(st.lists(st.text(alphabet="aB c\t", min_size=1), min_size=1, max_size=5))
    def test_insensitive_to_case_and_spacing(self, words):
        a = " ".join(words)
        b = "  ".join(w.upper() for w in words)
        assert normalize_surface(a) == normalize_surface(b)


class TestScheme:
    def test_default_assignments(self):
        scheme = StratificationScheme.default()
        assert assign_stratum("DDF", scheme) == 0
        assert scheme.stratum_names[assign_stratum("bacteria", scheme)] == (
            "Microbiome + Bacteria"
        )
        assert scheme.stratum_names[assign_stratum(" Anatomical Location ", scheme)] == (
            "Human + Animal + Anatomical Location"
        )

    def test_unknown_label(self):
        with pytest.raises(UnknownLabelError):
            assign_stratum("virus", StratificationScheme.default())

    def test_label_cannot_map_twice(self):
        with pytest.raises(ValueError, match="two strata"):
            StratificationScheme.from_label_map({"Gene": "A", "gene": "B"})

    def test_case_duplicates_in_same_stratum_are_fine(self):
        scheme = StratificationScheme.from_label_map({"Gene": "A", "GENE": "A"})
        assert scheme.stratum_of("gEnE") == 0

    def test_from_file(self, tmp_path):
        path = tmp_path / "scheme.json"
        path.write_text(json.dumps({"X": "S1", "Y": "S2", "Z": "S1"}))
        scheme = StratificationScheme.from_file(str(path))
        assert scheme.stratum_names == ("S1", "S2")
        assert scheme.stratum_of("z") == 0


class TestBuildCorpus:
    def test_single_triple(self):
        corpus = build_corpus(
            [make_triple("t0", "DDF", "dementia")], StratificationScheme.default()
        )
        assert corpus.total_size == 1
        assert corpus.strata[0].size == 1
        assert corpus.strata[0].weight == 1.0
        assert corpus.n_clusters == 1

    def test_partition_property(self):
        corpus = make_corpus({"DDF": [3, 2, 1], "Human": [4], "Gene": [2, 2]})
        sizes = [c.size for s in corpus.strata for c in s.clusters]
        assert sum(sizes) == corpus.total_size == 14
        seen = [tid for s in corpus.strata for c in s.clusters for tid in c.triple_ids]
        assert sorted(seen) == sorted(corpus.triples)
        assert abs(sum(corpus.weights) - 1.0) < 1e-12

    def test_clusters_merge_case_and_whitespace(self):
        triples = [
            make_triple("a", "DDF", "Gut  Dysbiosis"),
            make_triple("b", "DDF", "gut dysbiosis"),
        ]
        corpus = build_corpus(triples, StratificationScheme.default())
        assert corpus.n_clusters == 1
        assert corpus.strata[0].clusters[0].triple_ids == ("a", "b")

    def test_same_surface_two_strata_two_clusters(self):
        triples = [
            make_triple("a", "Chemical", "serotonin"),
            make_triple("b", "Drug", "serotonin"),
        ]
        corpus = build_corpus(triples, StratificationScheme.default())
        assert corpus.n_clusters == 2

    def test_duplicate_id(self):
        t = make_triple("dup", "DDF", "x")
        with pytest.raises(DuplicateIdError):
            build_corpus([t, t], StratificationScheme.default())

    def test_unknown_label_propagates(self):
        with pytest.raises(UnknownLabelError):
            build_corpus(
                [make_triple("t0", "Virus", "x")], StratificationScheme.default()
            )

    def test_empty(self):
        with pytest.raises(EmptyCorpusError):
            build_corpus([], StratificationScheme.default())

    def test_deterministic_under_input_order(self):
        triples = [
            make_triple("a", "DDF", "x"),
            make_triple("b", "Gene", "y z"),
            make_triple("c", "DDF", "x"),
        ]
        c1 = build_corpus(triples, StratificationScheme.default())
        c2 = build_corpus(list(reversed(triples)), StratificationScheme.default())
        assert c1.content_hash == c2.content_hash
        assert c1.strata == c2.strata


class TestCorpusFile:
    def _write(self, tmp_path, records):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
        return str(path)

    def test_three_lines_in_order(self, tmp_path):
        recs = [
            triple_to_record(make_triple(f"t{i}", "DDF", f"surface {i}"))
            for i in range(3)
        ]
        triples = parse_corpus_file(self._write(tmp_path, recs))
        assert [t.triple_id for t in triples] == ["t0", "t1", "t2"]

    def test_missing_field_names_line(self, tmp_path):
        recs = [triple_to_record(make_triple(f"t{i}", "DDF", "s")) for i in range(3)]
        del recs[1]["uri"]
        with pytest.raises(CorpusParseError, match="line 2.*uri"):
            parse_corpus_file(self._write(tmp_path, recs))

    def test_bad_json_names_line(self, tmp_path):
        rec = triple_to_record(make_triple("t0", "DDF", "s"))
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(rec) + "\nnot json\n")
        with pytest.raises(CorpusParseError, match="line 2"):
            parse_corpus_file(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("")
        assert parse_corpus_file(str(path)) == []

    def test_bundle_round_trip(self, tmp_path):
        corpus = make_corpus({"DDF": [2, 1], "Human": [3]})
        path = tmp_path / "bundle.json"
        write_corpus_bundle(corpus, str(path))
        loaded = load_corpus_bundle(str(path))
        assert loaded.content_hash == corpus.content_hash
        assert loaded.strata == corpus.strata
        assert loaded.scheme.stratum_names == corpus.scheme.stratum_names
