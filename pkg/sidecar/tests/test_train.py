"""Config grid, pairs parsing, dry-run validation, and a real tiny run."""

import dataclasses
import math
from pathlib import Path

import pytest

from t2t_sidecar.train import (
    MARKUP_TOKENS,
    PairsFormatError,
    TrainConfig,
    TrainingUnavailable,
    grid_configs,
    read_pairs,
    train_model,
)

QANOM_FIXTURE = (
    Path(__file__).resolve().parents[2] / "tests" / "data" / "qanom_dev.jsonl"
)


def write_pairs(path, pairs):
    path.write_text("".join(f"{s}\t{t}\n" for s, t in pairs), encoding="utf-8")


class TestTrainConfig:
    def test_defaults_are_the_fixed_point(self):
        config = TrainConfig()
        assert config.learning_rate == 0.005
        assert config.dropout == 0.1
        assert config.effective_batch == 96
        assert config.epochs == 20
        assert config.beam == 5
        assert config.half_precision is False

    def test_rejects_off_grid_learning_rate(self):
        with pytest.raises(ValueError, match="learning rate"):
            TrainConfig(learning_rate=0.002)

    def test_rejects_off_grid_dropout(self):
        with pytest.raises(ValueError, match="dropout"):
            TrainConfig(dropout=0.5)

    def test_rejects_off_grid_batch(self):
        with pytest.raises(ValueError, match="effective batch"):
            TrainConfig(effective_batch=32)

    def test_rejects_nonpositive_epochs(self):
        with pytest.raises(ValueError, match="positive"):
            TrainConfig(epochs=0)

    def test_frozen(self):
        with pytest.raises(dataclasses.FrozenInstanceError):
            TrainConfig().learning_rate = 0.01


class TestGridConfigs:
    def test_twelve_unique_configs(self):
        configs = grid_configs()
        assert len(configs) == 12
        assert len(set(configs)) == 12

    def test_covers_every_combination(self):
        seen = {
            (c.learning_rate, c.dropout, c.effective_batch) for c in grid_configs()
        }
        assert seen == {
            (lr, dr, bs)
            for lr in (0.001, 0.005, 0.01)
            for dr in (0.1, 0.15)
            for bs in (96, 168)
        }

    def test_includes_the_default(self):
        assert TrainConfig() in grid_configs()

    def test_deterministic_order(self):
        assert grid_configs() == grid_configs()
        first = grid_configs()[0]
        assert (first.learning_rate, first.dropout, first.effective_batch) == (
            0.001,
            0.1,
            96,
        )


class TestReadPairs:
    def test_reads_source_target_lines(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        write_pairs(path, [("src one", "tgt one"), ("src two", "tgt two")])
        assert read_pairs(path) == [("src one", "tgt one"), ("src two", "tgt two")]

    def test_missing_tab(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("no tab here\n", encoding="utf-8")
        with pytest.raises(PairsFormatError, match="line 1"):
            read_pairs(path)

    def test_extra_tab(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\tc\n", encoding="utf-8")
        with pytest.raises(PairsFormatError, match="exactly one tab"):
            read_pairs(path)

    def test_empty_target(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("good\tpair\nbad\t\n", encoding="utf-8")
        with pytest.raises(PairsFormatError, match="line 2"):
            read_pairs(path)

    def test_blank_line(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\n\n", encoding="utf-8")
        with pytest.raises(PairsFormatError, match="line 2: empty line"):
            read_pairs(path)

    def test_empty_file_rejected_by_train(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("", encoding="utf-8")
        assert read_pairs(path) == []
        with pytest.raises(PairsFormatError, match="empty"):
            train_model(path, dry_run=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_pairs(tmp_path / "nowhere.tsv")


class TestDryRun:
    def test_byte_match_and_counts(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        write_pairs(path, [(f"source {i}", f"target {i}") for i in range(200)])
        report = train_model(path, dry_run=True)
        assert report["mode"] == "dry_run"
        assert report["pairs"] == 200
        assert report["byte_match"] is True
        assert len(report["sha256"]) == 64
        assert len(report["runs"]) == 1
        run = report["runs"][0]
        assert run["config"]["learning_rate"] == 0.005
        assert run["batches_per_epoch"] == math.ceil(200 / 96)
        assert run["optimizer_steps"] == math.ceil(200 / 96) * 20

    def test_matches_pairs_emitted_by_the_annotation_cli(self, tmp_path):
        if not QANOM_FIXTURE.exists():
            pytest.skip("annotation toolkit fixtures not present")
        cli = pytest.importorskip("qaparse.cli")
        out = tmp_path / "qanom_pairs.tsv"
        assert (
            cli.main(
                [
                    "prepare",
                    "--input",
                    str(QANOM_FIXTURE),
                    "--task",
                    "qanom",
                    "--output",
                    str(out),
                ]
            )
            == 0
        )
        emitted = out.read_text(encoding="utf-8")
        assert emitted.count("\n") == 3

        report = train_model(out, dry_run=True)
        assert report["pairs"] == 3
        assert report["byte_match"] is True

    def test_grid_dry_run_lists_twelve_runs(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        write_pairs(path, [("s", "t")] * 5)
        report = train_model(path, dry_run=True, grid=True)
        assert len(report["runs"]) == 12
        batches = {run["batches_per_epoch"] for run in report["runs"]}
        assert batches == {1}

    def test_grid_with_explicit_config_rejected(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        write_pairs(path, [("s", "t")])
        with pytest.raises(ValueError, match="grid"):
            train_model(path, config=TrainConfig(), grid=True, dry_run=True)

    def test_warns_when_runtime_missing(self, tmp_path, monkeypatch):
        import t2t_sidecar.train as train

        monkeypatch.setattr(train, "runtime_available", lambda: False)
        path = tmp_path / "pairs.tsv"
        write_pairs(path, [("s", "t")])
        report = train_model(path, dry_run=True)
        assert "only dry-run" in report["warning"]

    def test_warns_without_a_gpu(self, tmp_path):
        torch = pytest.importorskip("torch")
        if torch.cuda.is_available():
            pytest.skip("environment has a GPU")
        path = tmp_path / "pairs.tsv"
        write_pairs(path, [("s", "t")])
        report = train_model(path, dry_run=True)
        assert "no GPU" in report["warning"]


class TestRealTraining:
    def test_tiny_run_saves_a_loadable_checkpoint(self, tiny_checkpoint, tmp_path):
        transformers = pytest.importorskip("transformers")
        pairs_path = tmp_path / "pairs.tsv"
        pairs = [
            ("parse : Both were [PREDICATE] shot [PREDICATE] [SEP] shoot",
             "Who was shot ? </q> Both"),
            ("parse : Workers live near the site [SEP] live",
             "Who lives ? </q> Workers"),
        ] * 12
        write_pairs(pairs_path, pairs)

        config = TrainConfig(epochs=2)
        report = train_model(
            pairs_path,
            config=config,
            model_name=tiny_checkpoint,
            out_dir=tmp_path / "runs",
            micro_batch=4,
        )
        assert report["mode"] == "fixed"
        run = report["runs"][0]
        assert run["train_pairs"] + run["val_pairs"] == len(pairs)
        assert run["val_pairs"] >= 1
        assert isinstance(run["val_loss"], float)
        assert set(MARKUP_TOKENS) <= set(run["markup_tokens_added"])
        assert report["best"] == run["run_dir"]

        run_dir = Path(run["run_dir"])
        assert (run_dir / "config.json").exists()
        reloaded = transformers.AutoModelForSeq2SeqLM.from_pretrained(run_dir)
        tokenizer = transformers.AutoTokenizer.from_pretrained(run_dir)
        assert reloaded.config.vocab_size >= len(tokenizer)

    def test_unloadable_base_model(self, tmp_path):
        pytest.importorskip("transformers")
        pairs_path = tmp_path / "pairs.tsv"
        write_pairs(pairs_path, [("s", "t")])
        with pytest.raises(TrainingUnavailable, match="cannot load base model"):
            train_model(
                pairs_path,
                model_name=str(tmp_path / "no_such_model"),
                out_dir=tmp_path / "runs",
            )
