import json

import pytest

from linkaudit.cli import main
from linkaudit.corpus import triple_to_record
from linkaudit.estimation import (
    EstimatorConfig,
    Judgment,
    JudgmentsDoc,
    recompute_on_cluster_complete,
    write_judgments_file,
)
from linkaudit.sampling import (
    MappingLabeler,
    SamplingDesign,
    generate_static_batch,
    load_batch_file,
    write_batch_file,
)
from synth import bernoulli_truth, make_corpus, make_triple


@pytest.fixture()
def corpus_file(tmp_path):
    records = []
    serial = 0
    for label, sizes in {"DDF": [3, 2], "Microbiome": [2], "Gene": [4]}.items():
        for c, size in enumerate(sizes):
            for _ in range(size):
                records.append(
                    triple_to_record(
                        make_triple(f"t{serial:03d}", label, f"{label} thing {c}")
                    )
                )
                serial += 1
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return path


@pytest.fixture()
def judged_batch(tmp_path):
    corpus = make_corpus({"DDF": [3, 4, 2], "Human": [5, 3], "Gene": [4, 4]})
    truth = bernoulli_truth(corpus, 0.8, seed=3)
    gen = generate_static_batch(
        corpus,
        SamplingDesign("stwcs", 3),
        epsilon=0.25,
        alpha=0.05,
        seed=9,
        labeler=MappingLabeler(truth),
    )
    batch_path = tmp_path / "batch.jsonl"
    write_batch_file(gen.batch, corpus, str(batch_path))
    judgments = tuple(
        Judgment(
            tid,
            "correct" if truth[tid] else "wrong_concept",
            elapsed_seconds=10.0 + (i % 3),
            annotator_id="ann",
            submitted_at=f"2025-06-01T10:{i:02d}:00+00:00",
        )
        for i, tid in enumerate(gen.batch.triple_ids())
    )
    judgments_path = tmp_path / "judgments.json"
    write_judgments_file(
        JudgmentsDoc("cli-test", gen.batch.corpus_hash, judgments), str(judgments_path)
    )
    return corpus, gen, batch_path, judgments_path


class TestIngest:
    def test_stats_table(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "bundle.json"
        code = main(
            ["ingest", "--corpus", str(corpus_file), "--out", str(out)]
        )
        captured = capsys.readouterr().out
        assert code == 0
        assert out.exists()
        assert "Stratum" in captured and "Weight" in captured
        assert "DDF" in captured
        assert "0.4545" in captured  # 5 of 11 triples

    def test_json_output(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "bundle.json"
        code = main(
            ["ingest", "--corpus", str(corpus_file), "--out", str(out), "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["triples"] == 11
        assert len(doc["strata"]) == 5

    def test_empty_corpus_errors(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        code = main(
            ["ingest", "--corpus", str(empty), "--out", str(tmp_path / "b.json")]
        )
        assert code == 1
        assert "empty corpus" in capsys.readouterr().err

    def test_unknown_label_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(json.dumps(triple_to_record(make_triple("t0", "Virus", "x"))))
        code = main(
            ["ingest", "--corpus", str(bad), "--out", str(tmp_path / "b.json")]
        )
        assert code == 1
        assert "Virus" in capsys.readouterr().err

    def test_custom_scheme(self, corpus_file, tmp_path, capsys):
        scheme = tmp_path / "scheme.json"
        scheme.write_text(json.dumps({"DDF": "S1", "Microbiome": "S1", "Gene": "S2"}))
        code = main(
            [
                "ingest",
                "--corpus",
                str(corpus_file),
                "--scheme",
                str(scheme),
                "--out",
                str(tmp_path / "b.json"),
                "--json",
            ]
        )
        assert code == 0
        assert len(json.loads(capsys.readouterr().out)["strata"]) == 2


class TestBatch:
    def test_generate_and_reload(self, corpus_file, tmp_path, capsys):
        bundle = tmp_path / "bundle.json"
        assert main(["ingest", "--corpus", str(corpus_file), "--out", str(bundle)]) == 0
        capsys.readouterr()
        out = tmp_path / "batch.jsonl"
        code = main(
            [
                "batch",
                "--corpus",
                str(bundle),
                "--epsilon",
                "0.3",
                "--seed",
                "42",
                "--out",
                str(out),
            ]
        )
        captured = capsys.readouterr().out
        assert code == 0
        assert "seed=42" in captured
        loaded = load_batch_file(str(out))
        assert loaded.batch.seed == 42
        assert loaded.batch.design.kind == "stwcs"

    def test_deterministic_output_bytes(self, corpus_file, tmp_path, capsys):
        bundle = tmp_path / "bundle.json"
        main(["ingest", "--corpus", str(corpus_file), "--out", str(bundle)])
        outs = []
        for name in ("b1.jsonl", "b2.jsonl"):
            out = tmp_path / name
            main(
                [
                    "batch",
                    "--corpus",
                    str(bundle),
                    "--epsilon",
                    "0.3",
                    "--seed",
                    "7",
                    "--out",
                    str(out),
                ]
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestEstimate:
    def test_human_output(self, judged_batch, capsys):
        _, _, batch_path, judgments_path = judged_batch
        code = main(
            [
                "estimate",
                "--batch",
                str(batch_path),
                "--judgments",
                str(judgments_path),
                "--per-stratum",
            ]
        )
        captured = capsys.readouterr().out
        assert code == 0
        assert "estimate:" in captured
        assert "Stratum" in captured
        assert "converged: yes" in captured

    def test_json_matches_library_recompute(self, judged_batch, capsys):
        _, gen, batch_path, judgments_path = judged_batch
        code = main(
            [
                "estimate",
                "--batch",
                str(batch_path),
                "--judgments",
                str(judgments_path),
                "--json",
            ]
        )
        assert code == 0
        got = json.loads(capsys.readouterr().out)
        doc = JudgmentsDoc(
            "x",
            gen.batch.corpus_hash,
            tuple(
                Judgment.from_dict(j)
                for j in json.loads(judgments_path.read_text())["judgments"]
            ),
        )
        config = EstimatorConfig(
            alpha=gen.batch.alpha, epsilon=gen.batch.epsilon, m=gen.batch.design.m
        )
        expected = recompute_on_cluster_complete(doc.judgments, gen.batch, config)
        assert got == expected.to_dict()

    def test_unknown_triples_listed(self, judged_batch, tmp_path, capsys):
        _, gen, batch_path, _ = judged_batch
        rogue = tmp_path / "rogue.json"
        write_judgments_file(
            JudgmentsDoc(
                "x",
                gen.batch.corpus_hash,
                (Judgment("ghost-1", "correct", 5.0),),
            ),
            str(rogue),
        )
        code = main(
            ["estimate", "--batch", str(batch_path), "--judgments", str(rogue)]
        )
        assert code == 1
        assert "ghost-1" in capsys.readouterr().err

    def test_incomplete_clusters_reported(self, judged_batch, tmp_path, capsys):
        _, gen, batch_path, _ = judged_batch
        first = gen.batch.units[0]
        partial = tmp_path / "partial.json"
        write_judgments_file(
            JudgmentsDoc(
                "x",
                gen.batch.corpus_hash,
                (Judgment(first.triple_ids[0], "correct", 5.0),),
            ),
            str(partial),
        )
        code = main(
            ["estimate", "--batch", str(batch_path), "--judgments", str(partial)]
        )
        captured = capsys.readouterr().out
        assert code == 0
        assert "excluded: 1 partially judged clusters" in captured


class TestSimulateSrs:
    def test_run_with_explicit_params(self, judged_batch, tmp_path, capsys):
        _, _, batch_path, judgments_path = judged_batch
        csv_path = tmp_path / "raw.csv"
        code = main(
            [
                "simulate-srs",
                "--batch",
                str(batch_path),
                "--judgments",
                str(judgments_path),
                "--perms",
                "200",
                "--boot",
                "500",
                "--seed",
                "5",
                "--t-base",
                "12.97",
                "--delta",
                "11.59",
                "--raw-csv",
                str(csv_path),
            ]
        )
        captured = capsys.readouterr().out
        assert code == 0
        assert "seed=5" in captured
        assert "efficiency" in captured
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "permutation,switches,noswitches"
        assert len(lines) == 201

    def test_derives_params_from_log(self, judged_batch, capsys):
        _, _, batch_path, judgments_path = judged_batch
        code = main(
            [
                "simulate-srs",
                "--batch",
                str(batch_path),
                "--judgments",
                str(judgments_path),
                "--perms",
                "100",
                "--boot",
                "200",
                "--seed",
                "1",
                "--json",
            ]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert 9.0 <= doc["t_base_s"] <= 13.0
        assert doc["n_perms"] == 100
        assert doc["modeled_time_baseline_min"] > 0
