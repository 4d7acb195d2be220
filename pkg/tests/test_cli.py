"""CLI coverage: every subcommand end to end on miniature artifacts, plus
exit codes, stderr tags, config precedence, and byte-determinism.

All invocations go through cli.main(argv) in-process.
"""

import numpy as np
import pytest

from autoeq.cli import main
from autoeq.filters import load_settings
from autoeq.grid import GRID_SIZE
from autoeq.manifest import load_manifest, verify_outputs
from autoeq.audio_io import read_wav
from autoeq.spectrum import save_spectrum_csv
from autoeq.targets import load_bank


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Corpus, bank, datasets, and checkpoints shared by the tests below."""
    root = tmp_path_factory.mktemp("cliwork")
    corpus_dir = root / "corpus"
    assert main(["demo-corpus", "--out", str(corpus_dir), "--per-class", "2",
                 "--seed", "0", "--duration", "1.0"]) == 0
    corpus = corpus_dir / "corpus.csv"

    bank = root / "bank.bin"
    assert main(["build-targets", "--corpus", str(corpus), "--out", str(bank)]) == 0

    synth = root / "synth.bin"
    assert main(["gen-data", "--kind", "synthetic", "--n", "40", "--seed", "3",
                 "--out", str(synth)]) == 0

    real = root / "real.bin"
    assert main(["gen-data", "--kind", "realworld", "--corpus", str(corpus),
                 "--bank", str(bank), "--k", "2", "--out", str(real)]) == 0

    base = root / "base.bin"
    assert main(["train", "--arch", "mlp", "--stage", "base", "--data", str(synth),
                 "--out", str(base), "--epochs", "1", "--batch-size", "16"]) == 0

    ft = root / "ft.bin"
    assert main(["train", "--stage", "finetune", "--data", str(synth), "--out", str(ft),
                 "--in-ckpt", str(base), "--epochs", "1", "--batch-size", "16"]) == 0

    return {"root": root, "corpus": corpus, "corpus_dir": corpus_dir, "bank": bank,
            "synth": synth, "real": real, "base": base, "ft": ft}


class TestArtifacts:
    def test_demo_corpus_layout(self, work):
        rows = work["corpus"].read_text().strip().splitlines()
        assert len(rows) == 1 + 12  # header + 6 classes x 2
        assert work["corpus"].with_name("corpus.csv.manifest.json").exists()

    def test_bank_has_all_classes(self, work):
        bank = load_bank(work["bank"])
        assert len(bank.entries) == 6

    def test_realworld_count_is_k_plus_one_per_recording(self, work):
        from autoeq.datagen import load_dataset

        _, curves, params = load_dataset(work["real"])
        assert curves.shape == (12 * 3, GRID_SIZE)
        assert params is None

    def test_history_has_one_row_per_epoch(self, work):
        hist = work["root"] / "base.history.csv"
        lines = hist.read_text().strip().splitlines()
        assert lines[0] == "stage,epoch,mean_loss,lr"
        assert len(lines) == 2  # one epoch

    def test_train_manifest_records_io(self, work):
        manifest = load_manifest(str(work["base"]) + ".manifest.json")
        assert manifest["command"] == "train"
        assert "dataset" in manifest["inputs"]
        assert set(manifest["outputs"]) == {"checkpoint", "history"}
        assert verify_outputs(manifest) == []


class TestDeterminism:
    def test_gen_data_reruns_byte_identical(self, work, tmp_path):
        a, b, c = (tmp_path / n for n in ("a.bin", "b.bin", "c.bin"))
        for out, threads in ((a, "1"), (b, "1"), (c, "4")):
            assert main(["--threads", threads, "gen-data", "--kind", "synthetic",
                         "--n", "64", "--seed", "9", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_demo_corpus_rerun_byte_identical(self, work, tmp_path):
        again = tmp_path / "corpus2"
        assert main(["demo-corpus", "--out", str(again), "--per-class", "2",
                     "--seed", "0", "--duration", "1.0"]) == 0
        original = sorted(p.name for p in work["corpus_dir"].glob("*.wav"))
        for name in original:
            assert (again / name).read_bytes() == (work["corpus_dir"] / name).read_bytes()

    def test_train_rerun_byte_identical(self, work, tmp_path):
        out = tmp_path / "retrain.bin"
        assert main(["train", "--arch", "mlp", "--stage", "base", "--data",
                     str(work["synth"]), "--out", str(out), "--epochs", "1",
                     "--batch-size", "16"]) == 0
        assert out.read_bytes() == work["base"].read_bytes()


class TestEvalMatchRun:
    def test_eval_report(self, work, tmp_path, capsys):
        report = tmp_path / "report.csv"
        assert main(["eval", "--ckpt", str(work["ft"]), "--data", str(work["synth"]),
                     "--report", str(report)]) == 0
        printed = capsys.readouterr().out
        assert "MAE" in printed and "40 examples" in printed
        lines = report.read_text().strip().splitlines()
        assert lines[0] == "example,mae_db"
        assert len(lines) == 1 + 40 + 1
        assert lines[-1].startswith("aggregate,")
        aggregate = float(lines[-1].split(",")[1])
        per = np.array([float(l.split(",")[1]) for l in lines[1:-1]])
        assert aggregate == pytest.approx(per.mean(), rel=1e-6)

    def test_match_outputs(self, work, tmp_path):
        curve_csv = tmp_path / "curve.csv"
        save_spectrum_csv(curve_csv, np.zeros(GRID_SIZE))
        settings_path = tmp_path / "settings.csv"
        response_path = tmp_path / "response.csv"
        plot_path = tmp_path / "match.png"
        assert main(["match", "--curve", str(curve_csv), "--ckpt", str(work["ft"]),
                     "--out-settings", str(settings_path),
                     "--out-response", str(response_path), "--plot", str(plot_path)]) == 0
        settings = load_settings(settings_path)
        settings.validate_ranges()
        assert len(response_path.read_text().strip().splitlines()) == GRID_SIZE + 1
        assert plot_path.stat().st_size > 0

    def test_run_end_to_end(self, work, tmp_path):
        in_wav = work["corpus_dir"] / "bass_000.wav"
        out_wav = tmp_path / "eq" / "bass.wav"
        assert main(["run", "--in", str(in_wav), "--bank", str(work["bank"]),
                     "--ckpt", str(work["ft"]), "--out", str(out_wav),
                     "--class", "bass"]) == 0
        original, rate_in = read_wav(in_wav)
        processed, rate_out = read_wav(out_wav)
        assert rate_out == rate_in
        assert processed.shape == original.shape
        assert (tmp_path / "eq" / "bass.settings.csv").exists()
        assert (tmp_path / "eq" / "bass.diagnostics.csv").exists()
        manifest = load_manifest(str(out_wav) + ".manifest.json")
        assert set(manifest["outputs"]) == {"audio", "settings", "diagnostics"}

    def test_run_twice_byte_identical(self, work, tmp_path):
        in_wav = work["corpus_dir"] / "guitar_001.wav"
        outs = []
        for name in ("one.wav", "two.wav"):
            out = tmp_path / name
            assert main(["run", "--in", str(in_wav), "--bank", str(work["bank"]),
                         "--ckpt", str(work["ft"]), "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_run_dry_run_writes_no_audio(self, work, tmp_path):
        in_wav = work["corpus_dir"] / "voice_000.wav"
        out_wav = tmp_path / "dry.wav"
        assert main(["run", "--in", str(in_wav), "--bank", str(work["bank"]),
                     "--ckpt", str(work["ft"]), "--out", str(out_wav), "--dry-run"]) == 0
        assert not out_wav.exists()
        assert (tmp_path / "dry.settings.csv").exists()

    def test_run_unknown_class_is_data_error(self, work, tmp_path, capsys):
        in_wav = work["corpus_dir"] / "keys_000.wav"
        rc = main(["run", "--in", str(in_wav), "--bank", str(work["bank"]),
                   "--ckpt", str(work["ft"]), "--out", str(tmp_path / "x.wav"),
                   "--class", "theremin"])
        assert rc == 2
        assert "error[data]:" in capsys.readouterr().err

    def test_export_data(self, work, tmp_path):
        out = tmp_path / "dump.csv"
        assert main(["export-data", "--data", str(work["synth"]), "--out", str(out)]) == 0
        assert len(out.read_text().strip().splitlines()) == 41


class TestErrors:
    def test_finetune_without_checkpoint_is_usage_error(self, work, tmp_path, capsys):
        rc = main(["train", "--stage", "finetune", "--data", str(work["synth"]),
                   "--out", str(tmp_path / "x.bin")])
        assert rc == 1
        assert "error[usage]:" in capsys.readouterr().err

    def test_base_with_checkpoint_is_usage_error(self, work, tmp_path, capsys):
        rc = main(["train", "--arch", "mlp", "--stage", "base", "--data", str(work["synth"]),
                   "--in-ckpt", str(work["base"]), "--out", str(tmp_path / "x.bin")])
        assert rc == 1
        assert "error[usage]:" in capsys.readouterr().err

    def test_arch_conflict_is_usage_error(self, work, tmp_path, capsys):
        rc = main(["train", "--arch", "cnn", "--stage", "finetune", "--data",
                   str(work["synth"]), "--in-ckpt", str(work["base"]),
                   "--out", str(tmp_path / "x.bin")])
        assert rc == 1
        assert "error[usage]:" in capsys.readouterr().err

    def test_base_on_curve_only_dataset_is_data_error(self, work, tmp_path, capsys):
        rc = main(["train", "--arch", "mlp", "--stage", "base", "--data", str(work["real"]),
                   "--out", str(tmp_path / "x.bin")])
        assert rc == 2
        assert "error[data]:" in capsys.readouterr().err

    def test_missing_file_is_data_error(self, work, tmp_path, capsys):
        rc = main(["eval", "--ckpt", str(tmp_path / "nope.bin"), "--data", str(work["synth"])])
        assert rc == 2
        assert "error[data]:" in capsys.readouterr().err

    def test_bad_flags_are_usage_errors(self, capsys):
        assert main([]) == 1
        assert main(["no-such-command"]) == 1
        capsys.readouterr()

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert main(["train", "--help"]) == 0
        capsys.readouterr()

    def test_missing_corpus_file_listed(self, work, tmp_path, capsys):
        manifest = tmp_path / "corpus.csv"
        manifest.write_text("path,instrument_class\nghost.wav,bass\n")
        rc = main(["build-targets", "--corpus", str(manifest), "--out", str(tmp_path / "b.bin")])
        assert rc == 2
        assert "ghost.wav" in capsys.readouterr().err


class TestConfigFile:
    def test_config_value_applies(self, work, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs=2\nbatch_size=16  # small batches\n")
        out = tmp_path / "m.bin"
        assert main(["--config", str(cfg), "train", "--arch", "mlp", "--stage", "base",
                     "--data", str(work["synth"]), "--out", str(out)]) == 0
        lines = (tmp_path / "m.history.csv").read_text().strip().splitlines()
        assert len(lines) == 3  # header + 2 epochs

    def test_flag_beats_config(self, work, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs=2\nbatch_size=16\n")
        out = tmp_path / "m.bin"
        assert main(["--config", str(cfg), "train", "--arch", "mlp", "--stage", "base",
                     "--data", str(work["synth"]), "--out", str(out), "--epochs", "1"]) == 0
        lines = (tmp_path / "m.history.csv").read_text().strip().splitlines()
        assert len(lines) == 2

    def test_unknown_key_rejected(self, work, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("learning_rate=0.1\n")
        rc = main(["--config", str(cfg), "eval", "--ckpt", str(work["ft"]),
                   "--data", str(work["synth"])])
        assert rc == 2
        assert "unknown config key" in capsys.readouterr().err

    def test_malformed_line_rejected(self, work, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("just some words\n")
        rc = main(["--config", str(cfg), "eval", "--ckpt", str(work["ft"]),
                   "--data", str(work["synth"])])
        assert rc == 2
        assert "key=value" in capsys.readouterr().err
