"""Command-line surface for the whole toolkit.

Every artifact-producing subcommand writes a `<output>.manifest.json` sidecar
recording config, seeds, and sha256 fingerprints. Exit codes: 0 success,
1 usage error, 2 data error, 3 numerical failure; errors go to stderr with a
machine-parsable `error[<category>]:` prefix.

Tunables resolve as: command-line flag > config file (flat `key=value`
lines) > built-in default.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .audio_io import ANALYSIS_RATE_HZ, read_wav, write_wav_float32
from .datagen import (
    NoiseConfig,
    build_realworld_dataset,
    build_synthetic_dataset,
    export_dataset_csv,
    load_dataset,
    save_dataset,
)
from .democorpus import DEMO_CLASSES, build_demo_corpus
from .filters import cascade_response_db, save_settings
from .grid import log_frequency_grid
from .manifest import RunManifest
from .models import build_model, load_checkpoint, predict_eq, save_checkpoint
from .pipeline import auto_eq, write_diagnostics_csv
from .spectrum import load_spectrum_csv, save_spectrum_csv
from .targets import build_bank_from_corpus, export_bank_csv, load_bank, read_corpus_manifest, save_bank
from .training import TrainingConfig, finetune, per_sample_mae, train_base


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class NumericalError(Exception):
    pass


# ---------------------------------------------------------------------------
# config file + precedence
# ---------------------------------------------------------------------------

CONFIG_DEFAULTS = {
    "sigma": 3.0,
    "limit_db": 12.0,
    "lr": 1e-4,
    "batch_size": 128,
    "epochs": 3,
    "decay": 0.1,
    "lam": 1.0,
    "noise_amp": 0.25,
    "noise_smooth": 0.0,
    "seed": 0,
    "threads": 0,  # 0 = all available cores
}


def load_config(path) -> dict:
    """Flat `key=value` lines; '#' starts a comment; unknown keys rejected."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_DEFAULTS:
            known = ", ".join(sorted(CONFIG_DEFAULTS))
            raise DataError(f"{path}:{lineno}: unknown config key {key!r} (known: {known})")
        try:
            values[key] = type(CONFIG_DEFAULTS[key])(value.strip())
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _resolve(args, config: dict, key: str):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return config.get(key, CONFIG_DEFAULTS[key])


def _threads(args, config) -> int:
    n = int(_resolve(args, config, "threads"))
    return n if n > 0 else (os.cpu_count() or 1)


def _training_config(args, config) -> TrainingConfig:
    try:
        return TrainingConfig(
            lr=float(_resolve(args, config, "lr")),
            batch_size=int(_resolve(args, config, "batch_size")),
            epochs=int(_resolve(args, config, "epochs")),
            lr_decay_per_epoch=float(_resolve(args, config, "decay")),
            lam=float(_resolve(args, config, "lam")),
            seed=int(_resolve(args, config, "seed")),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _require_file(path, what: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{what} not found: {path}")
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_demo_corpus(args, config) -> int:
    manifest = RunManifest("demo-corpus", seeds={"seed": args.seed})
    out = build_demo_corpus(
        Path(args.out), per_class=args.per_class, seed=args.seed, duration_s=args.duration
    )
    manifest.config = {"per_class": args.per_class, "duration_s": args.duration}
    manifest.record_output("corpus_manifest", out)
    manifest.write(out)
    print(f"wrote demo corpus for {len(DEMO_CLASSES)} classes: {out}")
    return 0


def cmd_build_targets(args, config) -> int:
    corpus_path = _require_file(args.corpus, "corpus manifest")
    corpus = read_corpus_manifest(corpus_path)
    missing = [p for p, _ in corpus if not Path(p).is_file()]
    if missing:
        raise DataError("corpus audio missing: " + ", ".join(missing))

    bank = build_bank_from_corpus(corpus)
    save_bank(args.out, bank)
    manifest = RunManifest("build-targets")
    manifest.record_input("corpus_manifest", corpus_path)
    manifest.record_output("bank", args.out)
    if args.export_csv:
        export_bank_csv(args.export_csv, bank)
        manifest.record_output("bank_csv", args.export_csv)
    if args.plot:
        from .plotting import plot_bank

        plot_bank(args.plot, bank.entries)
        manifest.record_output("plot", args.plot)
    manifest.write(args.out)
    print(f"bank with {len(bank.entries)} classes: {', '.join(bank.class_names())}")
    return 0


def cmd_gen_data(args, config) -> int:
    manifest = RunManifest("gen-data", seeds={"seed": args.seed})
    if args.kind == "synthetic":
        if args.n is None:
            raise UsageError("--kind synthetic requires --n")
        noise = NoiseConfig(
            amplitude_db=float(_resolve(args, config, "noise_amp")),
            post_smooth_sigma=float(_resolve(args, config, "noise_smooth")),
        )
        curves, params = build_synthetic_dataset(
            args.n, noise=noise, seed=args.seed, threads=_threads(args, config)
        )
        meta = {
            "source": "synthetic",
            "seed": args.seed,
            "noise_amplitude_db": noise.amplitude_db,
            "noise_smooth_sigma": noise.post_smooth_sigma,
        }
        save_dataset(args.out, curves, params, meta)
        manifest.config = meta
    else:
        if not args.corpus or not args.bank:
            raise UsageError("--kind realworld requires --corpus and --bank")
        corpus = read_corpus_manifest(_require_file(args.corpus, "corpus manifest"))
        bank = load_bank(_require_file(args.bank, "target bank"))
        curves, sources, classes = build_realworld_dataset(corpus, bank, k_neighbors=args.k)
        meta = {"source": "realworld", "k_neighbors": args.k, "recordings": len(corpus)}
        save_dataset(args.out, curves, None, meta)
        manifest.config = meta
        manifest.record_input("corpus_manifest", args.corpus)
        manifest.record_input("bank", args.bank)
    manifest.record_output("dataset", args.out)
    manifest.write(args.out)
    print(f"wrote {curves.shape[0]} curves: {args.out}")
    return 0


def cmd_train(args, config) -> int:
    cfg = _training_config(args, config)
    _, curves, params = load_dataset(_require_file(args.data, "dataset"))

    if args.stage == "base":
        if args.in_ckpt:
            raise UsageError("--in-ckpt is only for --stage finetune; base training starts fresh")
        if args.arch is None:
            raise UsageError("--stage base requires --arch")
        if params is None:
            raise DataError("base training needs a dataset with parameter targets")
        model = build_model(args.arch, np.random.default_rng(cfg.seed))
        history = train_base(model, curves, params, cfg)
    else:
        if not args.in_ckpt:
            raise UsageError("--stage finetune requires --in-ckpt (a base checkpoint)")
        model, meta = load_checkpoint(_require_file(args.in_ckpt, "checkpoint"))
        if args.arch is not None and args.arch != model.arch:
            raise UsageError(f"--arch {args.arch} conflicts with checkpoint arch {model.arch}")
        history = finetune(model, curves, cfg)

    if not all(np.isfinite(history.epoch_losses)):
        raise NumericalError(f"non-finite training loss: {history.epoch_losses}")

    extra = {"stage": args.stage, "seed": cfg.seed, "epochs": cfg.epochs, "lr": cfg.lr}
    save_checkpoint(args.out, model, extra_meta=extra)
    history_path = args.history or str(Path(args.out).with_suffix("")) + ".history.csv"
    _write_history_csv(history_path, history)

    manifest = RunManifest("train", config=extra, seeds={"seed": cfg.seed})
    manifest.record_input("dataset", args.data)
    if args.in_ckpt:
        manifest.record_input("in_ckpt", args.in_ckpt)
    manifest.record_output("checkpoint", args.out)
    manifest.record_output("history", history_path)
    if args.plot:
        from .plotting import plot_history

        plot_history(args.plot, {history.stage: history.epoch_losses})
        manifest.record_output("plot", args.plot)
    manifest.write(args.out)
    print(history.summary())
    return 0


def _write_history_csv(path, history) -> None:
    lines = ["stage,epoch,mean_loss,lr"]
    for i, (loss, lr) in enumerate(zip(history.epoch_losses, history.epoch_lrs), start=1):
        lines.append(f"{history.stage},{i},{loss:.9g},{lr:.9g}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def cmd_eval(args, config) -> int:
    model, _ = load_checkpoint(_require_file(args.ckpt, "checkpoint"))
    _, curves, _ = load_dataset(_require_file(args.data, "dataset"))
    per = per_sample_mae(model, curves)
    mae = float(per.mean())
    if not np.isfinite(mae):
        raise NumericalError("evaluation produced a non-finite MAE")
    print(f"MAE {mae:.6f} dB over {curves.shape[0]} examples ({model.arch})")
    if args.report:
        lines = ["example,mae_db"]
        lines += [f"{i},{v:.9g}" for i, v in enumerate(per)]
        lines.append(f"aggregate,{mae:.9g}")
        report = Path(args.report)
        report.parent.mkdir(parents=True, exist_ok=True)
        report.write_text("\n".join(lines) + "\n")
        manifest = RunManifest("eval")
        manifest.record_input("checkpoint", args.ckpt)
        manifest.record_input("dataset", args.data)
        manifest.record_output("report", args.report)
        manifest.write(args.report)
    return 0


def cmd_match(args, config) -> int:
    model, _ = load_checkpoint(_require_file(args.ckpt, "checkpoint"))
    curve = load_spectrum_csv(_require_file(args.curve, "curve CSV"))
    settings = predict_eq(model, curve)
    save_settings(args.out_settings, settings)

    response = cascade_response_db(settings, log_frequency_grid(), float(ANALYSIS_RATE_HZ))
    response = response - response.mean()
    manifest = RunManifest("match")
    manifest.record_input("curve", args.curve)
    manifest.record_input("checkpoint", args.ckpt)
    manifest.record_output("settings", args.out_settings)
    if args.out_response:
        save_spectrum_csv(args.out_response, response)
        manifest.record_output("response", args.out_response)
    if args.plot:
        from .plotting import plot_match

        plot_match(args.plot, curve, response)
        manifest.record_output("plot", args.plot)
    manifest.write(args.out_settings)
    residual = float(np.mean(np.abs(curve - response)))
    print(f"matched response residual {residual:.4f} dB")
    return 0


def cmd_run(args, config) -> int:
    bank = load_bank(_require_file(args.bank, "target bank"))
    model, _ = load_checkpoint(_require_file(args.ckpt, "checkpoint"))
    samples, rate = read_wav(_require_file(args.in_wav, "input audio"))

    try:
        result, processed = auto_eq(
            samples,
            rate,
            bank,
            model,
            class_override=args.class_name,
            peak_normalize=args.peak_normalize,
            peak_design=args.peak_design,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not np.all(np.isfinite(processed)):
        raise NumericalError("processed audio contains non-finite samples")

    out = Path(args.out)
    stem = out.with_suffix("")
    manifest = RunManifest(
        "run",
        config={
            "class_override": args.class_name,
            "peak_normalize": args.peak_normalize,
            "peak_design": args.peak_design,
            "dry_run": args.dry_run,
        },
    )
    manifest.record_input("audio", args.in_wav)
    manifest.record_input("bank", args.bank)
    manifest.record_input("checkpoint", args.ckpt)

    if not args.dry_run:
        write_wav_float32(out, processed, rate)
        manifest.record_output("audio", out)
    settings_path = args.settings or f"{stem}.settings.csv"
    save_settings(settings_path, result.settings)
    manifest.record_output("settings", settings_path)
    diagnostics_path = args.diagnostics or f"{stem}.diagnostics.csv"
    write_diagnostics_csv(diagnostics_path, result)
    manifest.record_output("diagnostics", diagnostics_path)
    if args.plot:
        from .plotting import plot_match

        plot_match(args.plot, result.difference, result.predicted_response)
        manifest.record_output("plot", args.plot)
    manifest.write(out)
    print(
        f"class {result.predicted_class}; residual {result.residual_mae_db:.4f} dB; "
        + ("dry run, no audio written" if args.dry_run else f"wrote {out}")
    )
    return 0


def cmd_export_data(args, config) -> int:
    _, curves, params = load_dataset(_require_file(args.data, "dataset"))
    export_dataset_csv(args.out, curves, params)
    manifest = RunManifest("export-data")
    manifest.record_input("dataset", args.data)
    manifest.record_output("csv", args.out)
    manifest.write(args.out)
    print(f"exported {curves.shape[0]} rows: {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autoeq",
        description="Automatic four-band EQ: spectral analysis, neural matching, rendering.",
    )
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="COMMAND")

    p = sub.add_parser("demo-corpus", help="synthesize a labeled demo corpus of six classes")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--per-class", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=2.0, help="seconds per recording")
    p.set_defaults(func=cmd_demo_corpus)

    p = sub.add_parser("build-targets", help="average per-class spectra into a target bank")
    p.add_argument("--corpus", required=True, help="corpus manifest CSV (path,class)")
    p.add_argument("--out", required=True, help="output bank file")
    p.add_argument("--export-csv", help="also write the bank as CSV")
    p.add_argument("--plot", help="render bank curves to a PNG")
    p.set_defaults(func=cmd_build_targets)

    p = sub.add_parser("gen-data", help="generate a training dataset")
    p.add_argument("--kind", required=True, choices=["synthetic", "realworld"])
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, help="synthetic sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-amp", type=float, dest="noise_amp", help="per-bin noise std in dB")
    p.add_argument("--noise-smooth", type=float, dest="noise_smooth", help="noise smoothing sigma")
    p.add_argument("--corpus", help="realworld: corpus manifest")
    p.add_argument("--bank", help="realworld: target bank")
    p.add_argument("--k", type=int, default=4, help="realworld: neighbor classes per recording")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a matching model stage")
    p.add_argument("--arch", choices=["mlp", "cnn"])
    p.add_argument("--stage", required=True, choices=["base", "finetune"])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output checkpoint")
    p.add_argument("--in-ckpt", dest="in_ckpt", help="base checkpoint to fine-tune")
    p.add_argument("--history", help="history CSV path (default: <out>.history.csv)")
    p.add_argument("--plot", help="render the loss curve to a PNG")
    for key in ("lr", "decay", "lam"):
        p.add_argument(f"--{key}", type=float)
    for key in ("batch-size", "epochs", "seed"):
        p.add_argument(f"--{key}", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="mean absolute response error on a dataset")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", help="per-example MAE CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("match", help="EQ settings for one difference curve")
    p.add_argument("--curve", required=True, help="spectrum CSV on the canonical grid")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out-settings", dest="out_settings", required=True)
    p.add_argument("--out-response", dest="out_response", help="predicted response CSV")
    p.add_argument("--plot", help="render curve vs. response to a PNG")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("run", help="end-to-end auto-EQ of one recording")
    p.add_argument("--in", dest="in_wav", required=True, help="input WAV")
    p.add_argument("--bank", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True, help="output WAV (sidecars share its stem)")
    p.add_argument("--class", dest="class_name", help="skip classification, use this class")
    p.add_argument("--dry-run", action="store_true", help="settings and diagnostics only")
    p.add_argument("--peak-normalize", action="store_true", help="match output peak to input")
    p.add_argument("--peak-design", choices=["cookbook", "orfanidis"], default="cookbook")
    p.add_argument("--settings", help="settings document path")
    p.add_argument("--diagnostics", help="diagnostics CSV path")
    p.add_argument("--plot", help="render difference vs. response to a PNG")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export-data", help="dump a dataset file to CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        print("error[usage]: invalid arguments (see usage above)", file=sys.stderr)
        return 1

    try:
        config = load_config(_require_file(args.config, "config file")) if args.config else {}
        return args.func(args, config) or 0
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error[numerical]: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
