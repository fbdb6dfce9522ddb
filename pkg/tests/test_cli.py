"""Command-line behaviour: every subcommand, exit codes, printed output.

Commands run in-process through ``main(argv)`` so the suite stays fast; a
single subprocess check at the end proves the installed console script is
wired to the same entry point.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from corpusprep.cli import main


def _write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    return str(path)


def _read_lines(path):
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle]


ET_SENTENCE = "Meie pere elab väikeses majas metsa serval järve lähedal vaikuses ja rahus."


class TestStats:
    def test_prints_counts_and_writes_report(self, capsys, tmp_path, fixture_corpus_path):
        report = str(tmp_path / "stats.jsonl")
        assert main(["stats", fixture_corpus_path, "--report", report]) == 0
        out = capsys.readouterr().out
        assert out.strip() == "documents 12  sentences 20  words 206"
        assert _read_lines(report) == [
            {"type": "stats", "documents": 12, "sentences": 20, "words": 206}
        ]

    def test_missing_input_exits_2(self, capsys, tmp_path):
        assert main(["stats", str(tmp_path / "absent.jsonl")]) == 2
        assert "error" in capsys.readouterr().err


class TestClean:
    def test_strips_markup(self, capsys, tmp_path):
        src = _write_jsonl(
            tmp_path / "in.jsonl",
            [
                {"id": "a", "text": "<p>tere <b>kallis</b> sõber</p>"},
                {"id": "b", "text": "puhas tekst siin"},
            ],
        )
        dst = str(tmp_path / "out.jsonl")
        assert main(["clean", src, dst]) == 0
        assert f"cleaned 2 documents -> {dst}" in capsys.readouterr().out
        rows = _read_lines(dst)
        assert rows[0]["text"] == "tere kallis sõber"
        assert rows[1]["text"] == "puhas tekst siin"


class TestDedup:
    def test_drops_case_variants_and_reports(self, capsys, tmp_path):
        src = _write_jsonl(
            tmp_path / "in.jsonl",
            [
                {"id": "a", "text": "Tere tulemast koju"},
                {"id": "b", "text": "hoopis teine jutt"},
                {"id": "c", "text": "TERE  tulemast   koju"},
            ],
        )
        dst = str(tmp_path / "out.jsonl")
        report = str(tmp_path / "drops.jsonl")
        assert main(["dedup", src, dst, "--report", report]) == 0
        assert "kept 2 documents, dropped 1 duplicates" in capsys.readouterr().out
        assert [row["id"] for row in _read_lines(dst)] == ["a", "b"]
        (drop,) = _read_lines(report)
        assert drop["id"] == "c"
        assert drop["reason"] == "Duplicate"


class TestFilter:
    def test_language_and_heuristics(self, capsys, tmp_path):
        src = _write_jsonl(
            tmp_path / "in.jsonl",
            [
                {"id": "et-long", "text": ET_SENTENCE},
                {"id": "en", "text": "The quick brown fox jumps over the lazy dog again today."},
                {"id": "short", "text": "Tere kallid sõbrad!"},
            ],
        )
        dst = str(tmp_path / "out.jsonl")
        report = str(tmp_path / "drops.jsonl")
        assert main(["filter", src, dst, "--report", report]) == 0
        assert [row["id"] for row in _read_lines(dst)] == ["et-long"]
        drops = {row["id"]: row for row in _read_lines(report)}
        assert drops["en"]["reason"] == "NonTargetLanguage"
        assert drops["en"]["detail"]["lang"] == "en"
        assert drops["short"]["reason"] == "TooFewWords"
        capsys.readouterr()

    def test_no_language_flag_skips_detection(self, capsys, tmp_path):
        src = _write_jsonl(
            tmp_path / "in.jsonl",
            [{"id": "en", "text": "The quick brown fox jumps over the lazy dog again today."}],
        )
        dst = str(tmp_path / "out.jsonl")
        assert main(["filter", src, dst, "--no-language"]) == 0
        assert [row["id"] for row in _read_lines(dst)] == ["en"]
        capsys.readouterr()

    def test_min_words_override(self, capsys, tmp_path):
        src = _write_jsonl(tmp_path / "in.jsonl", [{"id": "short", "text": "Tere kallid sõbrad!"}])
        dst = str(tmp_path / "out.jsonl")
        assert main(["filter", src, dst, "--min-words", "2", "--no-language"]) == 0
        assert [row["id"] for row in _read_lines(dst)] == ["short"]
        capsys.readouterr()


class TestTruecase:
    def test_builds_lexicon_from_lemmas_and_saves_it(self, capsys, tmp_path):
        src = _write_jsonl(
            tmp_path / "in.jsonl",
            [
                {
                    "id": "a",
                    "text": "Täna paistab päike ja Tallinn särab",
                    "lemmas": ["täna", "paistma", "päike", "ja", "Tallinn", "särama"],
                }
            ],
        )
        dst = str(tmp_path / "out.jsonl")
        lex = str(tmp_path / "casing.tsv")
        assert main(["truecase", src, dst, "--save-lexicon", lex]) == 0
        (row,) = _read_lines(dst)
        assert row["text"] == "täna paistab päike ja Tallinn särab"
        with open(lex, encoding="utf-8") as handle:
            entries = dict(line.split("\t")[:2] for line in handle)
        assert entries["tallinn"] == "Tallinn"
        assert entries["täna"] == "täna"
        capsys.readouterr()

    def test_external_lexicon_flag(self, capsys, tmp_path):
        lex = tmp_path / "casing.tsv"
        lex.write_text("tallinn\tTallinn\t3\n", encoding="utf-8")
        src = _write_jsonl(tmp_path / "in.jsonl", [{"id": "a", "text": "nägin tallinn eile"}])
        dst = str(tmp_path / "out.jsonl")
        assert main(["truecase", src, dst, "--lexicon", str(lex)]) == 0
        (row,) = _read_lines(dst)
        assert row["text"] == "nägin Tallinn eile"
        capsys.readouterr()


class TestBpe:
    def test_train_then_encode_ids_and_pieces(self, capsys, tmp_path):
        src = _write_jsonl(
            tmp_path / "corpus.jsonl",
            [{"id": "a", "text": "kala maja kala maja kala jala"}],
        )
        vocab_path = str(tmp_path / "vocab.txt")
        merges_path = str(tmp_path / "merges.txt")
        assert main([
            "bpe-train", src,
            "--vocab-size", "20",
            "--vocab", vocab_path,
            "--merges", merges_path,
        ]) == 0
        assert "trained 20 pieces" in capsys.readouterr().out

        assert main([
            "bpe-encode", "kala", "maja",
            "--vocab", vocab_path, "--merges", merges_path,
        ]) == 0
        ids_line = capsys.readouterr().out.strip()
        ids = [int(tok) for tok in ids_line.split()]
        assert ids, "encoder printed no ids"

        assert main([
            "bpe-encode", "kala", "maja",
            "--vocab", vocab_path, "--merges", merges_path, "--pieces",
        ]) == 0
        pieces_line = capsys.readouterr().out.strip()
        assert "".join(pieces_line.split()).replace("▁", " ").strip() == "kala maja"

    def test_encode_from_file(self, capsys, tmp_path):
        src = _write_jsonl(tmp_path / "corpus.jsonl", [{"id": "a", "text": "aa ab aa ab"}])
        vocab_path = str(tmp_path / "vocab.txt")
        merges_path = str(tmp_path / "merges.txt")
        assert main(["bpe-train", src, "--vocab-size", "12",
                     "--vocab", vocab_path, "--merges", merges_path]) == 0
        capsys.readouterr()
        lines = tmp_path / "lines.txt"
        lines.write_text("aa ab\nab aa\n", encoding="utf-8")
        assert main(["bpe-encode", "--input", str(lines),
                     "--vocab", vocab_path, "--merges", merges_path]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 2 and out[0] != out[1]

    def test_encode_without_text_or_input_exits_1(self, capsys, tmp_path):
        vocab_path = str(tmp_path / "vocab.txt")
        merges_path = str(tmp_path / "merges.txt")
        src = _write_jsonl(tmp_path / "corpus.jsonl", [{"id": "a", "text": "aa bb"}])
        assert main(["bpe-train", src, "--vocab-size", "12",
                     "--vocab", vocab_path, "--merges", merges_path]) == 0
        capsys.readouterr()
        assert main(["bpe-encode", "--vocab", vocab_path, "--merges", merges_path]) == 1
        assert "give text arguments or --input" in capsys.readouterr().err


class TestExamples:
    def test_make_then_read_examples(self, capsys, tmp_path, fixture_corpus_path):
        vocab_path = str(tmp_path / "vocab.txt")
        merges_path = str(tmp_path / "merges.txt")
        assert main(["bpe-train", fixture_corpus_path, "--vocab-size", "300",
                     "--vocab", vocab_path, "--merges", merges_path]) == 0
        out_dir = str(tmp_path / "shards")
        assert main([
            "make-examples", fixture_corpus_path,
            "--vocab", vocab_path, "--merges", merges_path,
            "--out-dir", out_dir,
            "--max-seq-length", "32", "--dupe-factor", "2", "--shards", "2",
            "--seed", "7",
        ]) == 0
        out = capsys.readouterr().out
        assert "shards under" in out
        shard_files = sorted(os.listdir(out_dir))
        assert shard_files == ["pretrain-0-of-2.tfrecord", "pretrain-1-of-2.tfrecord"]

        paths = [os.path.join(out_dir, name) for name in shard_files]
        assert main(["read-examples", *paths, "--limit", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3
        record = json.loads(lines[0])
        assert set(record) == {
            "input_ids", "input_mask", "segment_ids",
            "masked_lm_positions", "masked_lm_ids", "masked_lm_weights",
            "next_sentence_labels",
        }
        assert len(record["input_ids"]) == 32
        assert record["next_sentence_labels"] in (0, 1)


class TestScorers:
    def test_score_tags_hand_arithmetic(self, capsys, tmp_path):
        path = tmp_path / "tags.tsv"
        path.write_text(
            "koer\tN\tN\njookseb\tV\tV\nkiiresti\tA\tV\n\nkass\tN\tN\nmagab\tV\tV\n",
            encoding="utf-8",
        )
        report = str(tmp_path / "tags.jsonl")
        assert main(["score-tags", str(path), "--report", report]) == 0
        assert capsys.readouterr().out.strip() == "accuracy: 80.00%"
        assert _read_lines(report) == [{"type": "tagging", "accuracy": 0.8}]

    def test_score_ner_matches_reference_rendering(self, capsys, data_dir, tmp_path):
        fixture = os.path.join(data_dir, "ner_fixture.tsv")
        golden = os.path.join(data_dir, "ner_golden.txt")
        report = str(tmp_path / "ner.jsonl")
        assert main(["score-ner", fixture, "--report", report]) == 0
        with open(golden, encoding="utf-8") as handle:
            assert capsys.readouterr().out == handle.read()
        rows = _read_lines(report)
        assert rows[-1]["type"] == "ALL"
        assert rows[-1]["f1"] == 55.56

    def test_score_cls_hand_arithmetic(self, capsys, tmp_path):
        path = tmp_path / "cls.tsv"
        path.write_text("pos\tpos\nneg\tpos\npos\tpos\nneg\tneg\n", encoding="utf-8")
        assert main(["score-cls", str(path)]) == 0
        assert capsys.readouterr().out.strip() == "accuracy: 75.00%"


def _write_config(path, input_path, out_dir) -> str:
    path.write_text(
        "\n".join(
            [
                "[input]",
                f"path = {input_path}",
                "[output]",
                f"dir = {out_dir}",
                "[vocab]",
                "vocab_size = 300",
                "[examples]",
                "max_seq_length = 32",
                "dupe_factor = 2",
                "shards = 2",
                "seed = 7",
                "",
            ]
        ),
        encoding="utf-8",
    )
    return str(path)


class TestRun:
    def test_full_pipeline_from_config(self, capsys, tmp_path, fixture_corpus_path):
        out_dir = str(tmp_path / "out")
        config = _write_config(tmp_path / "job.conf", fixture_corpus_path, out_dir)
        assert main(["run", "--config", config]) == 0
        out = capsys.readouterr().out
        assert f"{'metric':<12}{'before':>14}{'after':>14}" in out
        assert "instances:" in out
        assert "Duplicate: 2" in out
        for name in ("cleaned.jsonl", "drops.jsonl", "report.jsonl", "vocab.txt", "merges.txt"):
            assert os.path.exists(os.path.join(out_dir, name)), name

    def test_flag_overrides_win_over_config(self, capsys, tmp_path, fixture_corpus_path):
        out_a = str(tmp_path / "a")
        config = _write_config(tmp_path / "job.conf", fixture_corpus_path, out_a)
        out_b = str(tmp_path / "b")
        assert main(["run", "--config", config, "--out-dir", out_b, "--shards", "3"]) == 0
        capsys.readouterr()
        assert not os.path.exists(out_a)
        shard_names = sorted(
            name for name in os.listdir(out_b) if name.endswith(".tfrecord")
        )
        assert shard_names == [f"pretrain-{i}-of-3.tfrecord" for i in range(3)]

    def test_seed_flag_only_counts_when_given(self, capsys, tmp_path, fixture_corpus_path):
        # same config seed spelled implicitly and explicitly must agree;
        # a different explicit seed must change the generated shards
        outs = {}
        for name, argv_extra in {
            "implicit": [],
            "explicit": ["--seed", "7"],
            "reseeded": ["--seed", "99"],
        }.items():
            out_dir = str(tmp_path / name)
            config = _write_config(tmp_path / f"{name}.conf", fixture_corpus_path, out_dir)
            assert main(["run", "--config", config, *argv_extra]) == 0
            capsys.readouterr()
            shard = os.path.join(out_dir, "pretrain-0-of-2.tfrecord")
            with open(shard, "rb") as handle:
                outs[name] = handle.read()
        assert outs["implicit"] == outs["explicit"]
        assert outs["implicit"] != outs["reseeded"]

    def test_bad_config_exits_1_with_diagnostics(self, capsys, tmp_path):
        config = tmp_path / "bad.conf"
        config.write_text("[input]\npath = x\nmaxseq = 4\n", encoding="utf-8")
        assert main(["run", "--config", str(config)]) == 1
        err = capsys.readouterr().err
        assert "config error:" in err
        assert "unknown key" in err

    def test_stage_failure_exits_2_with_stage_name(self, capsys, tmp_path, fixture_corpus_path):
        config = tmp_path / "job.conf"
        config.write_text(
            f"[input]\npath = {fixture_corpus_path}\n"
            f"[output]\ndir = {tmp_path / 'out'}\n"
            f"[filter]\nstopwords = {tmp_path / 'absent.txt'}\n",
            encoding="utf-8",
        )
        assert main(["run", "--config", str(config)]) == 2
        assert "stage heuristics failed" in capsys.readouterr().err


class TestArgumentErrors:
    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["frobnicate"]) == 1
        capsys.readouterr()

    def test_missing_required_flag_exits_1(self, capsys):
        assert main(["run"]) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_choice_exits_1(self, capsys, fixture_corpus_path):
        assert main(["stats", fixture_corpus_path, "--format", "parquet"]) == 1
        capsys.readouterr()


def test_console_script_is_installed(fixture_corpus_path):
    proc = subprocess.run(
        [sys.executable, "-m", "corpusprep.cli", "stats", fixture_corpus_path],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "documents 12" in proc.stdout
