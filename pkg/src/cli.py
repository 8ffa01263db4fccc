"""CLI for organiq: train, generate and score."""
import argparse
import cProfile
import csv
import json
import logging
import os
import pstats
import sys
from io import StringIO
from pathlib import Path

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np

from analysis.metrics import PcaScores, Pixels, frechet_between
from handling_errors import ConfigurationError, OrganiqError
from handling_logging.logging_setup import setup_logging
from mnist import filter_class, read_idx_pair, read_pgm_dir, write_pgm
from organiq.gan import Ablations, Mode, TrainConfig, infer, train
from organiq.model_io import load_model, save_model, write_history

logger = logging.getLogger("organiq.cli")

MANIFEST_NAME = "manifest.csv"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _class_id(text: str) -> int:
    value = int(text)
    if not 0 <= value <= 9:
        raise argparse.ArgumentTypeError(f"class must be in 0-9, got {value}")
    return value


def resolve_threads(threads: int | None) -> int:
    """Worker-thread cap for training; defaults to the available parallelism."""
    return threads or os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="DEBUG output on stderr (and tracebacks on failure)")
    common.add_argument("--log-dir", type=Path, default=None, help="Directory for the rotating run logs (default ./logs)")

    parser = argparse.ArgumentParser(
        prog="organiq",
        description="Train a fully-quantum GAN on one image class, generate images and score them",
        epilog="Example: organiq train --images train-images-idx3-ubyte --labels train-labels-idx1-ubyte --class 3 --out model.json",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", parents=[common], help="Train a model on one class")
    p_train.add_argument("--images", required=True, type=Path, help="IDX image file")
    p_train.add_argument("--labels", required=True, type=Path, help="IDX label file")
    p_train.add_argument("--class", dest="class_id", required=True, type=_class_id, help="Class to train on (0-9)")
    p_train.add_argument("--out", required=True, type=Path, help="Model file to write")
    p_train.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.ORGANIQ.value)
    p_train.add_argument("--no-combined", action="store_true", help="Measure the generator and re-prepare its output for the discriminator")
    p_train.add_argument("--no-regularization", action="store_true", help="Plain L2 normalization instead of amplitude regularization")
    p_train.add_argument("--no-injection", action="store_true", help="Drop the fixed random phase-injection block")
    p_train.add_argument("--seed", type=_non_negative_int, default=0)
    p_train.add_argument("--iters", type=_non_negative_int, default=500, help="Training iterations")
    p_train.add_argument("--batch", type=_positive_int, default=20, help="Batch size")
    p_train.add_argument("--lr-g", type=float, default=0.05, help="Generator learning rate")
    p_train.add_argument("--lr-d", type=float, default=0.05, help="Discriminator learning rate")
    p_train.add_argument("--history", type=Path, default=None, help="Loss-history CSV (default: next to the model file)")
    p_train.add_argument("--eval-every", type=_positive_int, default=25, help="Validation interval in iterations")
    p_train.add_argument("--eval-count", type=_positive_int, default=50, help="Images generated per validation")
    p_train.add_argument("--layers", type=_positive_int, default=3)
    p_train.add_argument("--qubits", type=_positive_int, default=5)
    p_train.add_argument("--embed-qubits", type=_positive_int, default=3)
    p_train.add_argument("--threads", type=_positive_int, default=None, help="Cap on worker threads (default: available parallelism)")
    p_train.add_argument("--profile", "-p", action="store_true", help="Enable cProfile profiling and save detailed performance stats")
    p_train.add_argument("--benchmark", "-b", action="store_true", help="Print timing metrics after training")
    p_train.set_defaults(handler=cmd_train)

    p_generate = sub.add_parser("generate", parents=[common], help="Sample images from a trained model")
    p_generate.add_argument("--model", required=True, type=Path)
    p_generate.add_argument("--count", type=_positive_int, default=100)
    p_generate.add_argument("--out-dir", required=True, type=Path)
    p_generate.add_argument("--seed", type=_non_negative_int, default=0)
    p_generate.set_defaults(handler=cmd_generate)

    p_score = sub.add_parser("score", parents=[common], help="Fréchet distance of generated images to a real class")
    p_score.add_argument("--real-images", required=True, type=Path)
    p_score.add_argument("--real-labels", required=True, type=Path)
    p_score.add_argument("--class", dest="class_id", required=True, type=_class_id)
    p_score.add_argument("--generated", required=True, type=Path, help="Directory of PGM images")
    p_score.add_argument("--features", choices=["pixels", "pca"], default="pixels")
    p_score.add_argument("--model", type=Path, default=None, help="Model whose PCA defines the 'pca' features")
    p_score.set_defaults(handler=cmd_score)
    return parser


def _train_config(args: argparse.Namespace) -> TrainConfig:
    mode = Mode(args.mode)
    ablations = Ablations(args.no_combined, args.no_regularization, args.no_injection)
    if mode is Mode.BASELINE and ablations.any():
        logger.warning("Ablation flags are ignored in baseline mode")
        ablations = Ablations()
    return TrainConfig(
        n_qubits=args.qubits,
        n_layers=args.layers,
        n_embed=args.embed_qubits,
        iterations=args.iters,
        batch_size=args.batch,
        lr_g=args.lr_g,
        lr_d=args.lr_d,
        seed=args.seed,
        mode=mode,
        ablations=ablations,
        eval_every=args.eval_every,
        eval_count=args.eval_count,
        dataset_class=args.class_id,
    ).validate()


def _print_profile(profiler: cProfile.Profile, stats_file: Path) -> None:
    profiler.dump_stats(stats_file)
    s = StringIO()
    pstats.Stats(profiler, stream=s).sort_stats("cumulative").print_stats(20)
    print()
    print("=" * 80)
    print("TOP 20 FUNCTIONS BY CUMULATIVE TIME:")
    print("=" * 80)
    print(s.getvalue())
    print(f"Profile stats saved to: {stats_file}")
    print(f"To analyze: python -m pstats {stats_file}")


def _print_benchmark(metrics: dict) -> None:
    print("\n" + "=" * 80)
    print("BENCHMARK RESULTS")
    print("=" * 80)
    print(f"  PCA fit time: {metrics['fit_time']:.3f}s")
    print(f"  Training time: {metrics['train_time']:.3f}s")
    print(f"  Time per iteration: {metrics['time_per_iteration']:.3f}s")
    print(f"  Evaluation time: {metrics['eval_time']:.3f}s")
    print(f"  Total time: {metrics['total_time']:.3f}s")
    print("=" * 80)


def _format_score(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.6f}"


def cmd_train(args: argparse.Namespace) -> int:
    config = _train_config(args)
    logger.info("Resolved configuration: %s", json.dumps(config.to_dict(), sort_keys=True))

    class_set = filter_class(read_idx_pair(args.images, args.labels), args.class_id)
    logger.info("Loaded %d images of class %d from %s", len(class_set), args.class_id, args.images)

    profiler = None
    if args.profile:
        profiler = cProfile.Profile()
        profiler.enable()
    model, history, metrics = train(config, class_set.images, max_workers=resolve_threads(args.threads), return_metrics=True)
    if profiler is not None:
        profiler.disable()

    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, args.out)
    history_path = args.history if args.history is not None else args.out.with_suffix(".history.csv")
    write_history(history, history_path)
    logger.info("Model written to %s, history to %s", args.out, history_path)

    evaluated = [r.val_frechet for r in history if r.val_frechet is not None]
    print(f"final_frechet {_format_score(evaluated[-1] if evaluated else None)}")
    print(f"best_frechet {_format_score(metrics['best_frechet'])}")

    if profiler is not None:
        _print_profile(profiler, args.out.with_name(args.out.stem + "_profile.stats"))
    if args.benchmark:
        _print_benchmark(metrics)
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    logger.info("Resolved configuration: model=%s count=%d seed=%d out_dir=%s", args.model, args.count, args.seed, args.out_dir)
    model = load_model(args.model)
    images = infer(model, args.count, np.random.default_rng(args.seed))

    args.out_dir.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(args.count - 1)))
    with open(args.out_dir / MANIFEST_NAME, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["filename", "seed"])
        for i, image in enumerate(images):
            name = f"img_{i:0{width}d}.pgm"
            write_pgm(image, args.out_dir / name)
            writer.writerow([name, args.seed])
    logger.info("Wrote %d images to %s", len(images), args.out_dir)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    logger.info(
        "Resolved configuration: class=%d features=%s generated=%s model=%s",
        args.class_id, args.features, args.generated, args.model,
    )
    real = filter_class(read_idx_pair(args.real_images, args.real_labels), args.class_id)
    generated = read_pgm_dir(args.generated)
    mode = PcaScores(load_model(args.model).pca) if args.features == "pca" else Pixels()
    logger.info("Scoring %d generated against %d real images", len(generated), len(real))
    print(f"{frechet_between(real.images, generated.images, mode):.6f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "score" and args.features == "pca" and args.model is None:
        parser.error("--features pca requires --model")

    setup_logging(verbose=args.verbose, log_dir=args.log_dir)
    try:
        return args.handler(args)
    except ConfigurationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except (OrganiqError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
