"""Command line entry points: serve the HTTP API, or fine-tune on pairs."""

from __future__ import annotations

import argparse
import json
import sys

from .server import ServerSettings, create_app
from .train import PairsFormatError, TrainConfig, TrainingUnavailable, train_model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="t2t-sidecar")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the generate/classify/health server")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--echo", action="store_true", help="echo inputs back, no model")
    serve.add_argument("--model", default="", help="model name or checkpoint directory")
    serve.add_argument(
        "--defer-load",
        action="store_true",
        help="load the model on first request instead of at startup",
    )
    serve.add_argument(
        "--max-batch",
        type=int,
        default=64,
        help="largest accepted input list, advertised via X-Max-Batch",
    )

    train = sub.add_parser("train", help="fine-tune on a source<TAB>target pairs file")
    train.add_argument("--pairs", required=True)
    train.add_argument("--grid", action="store_true", help="sweep all 12 grid configs")
    train.add_argument("--dry-run", action="store_true", help="validate pairs, no model")
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--dropout", type=float, default=None)
    train.add_argument("--batch", type=int, default=None)
    train.add_argument("--half-precision", action="store_true")
    train.add_argument("--model", default="t5-small")
    train.add_argument("--out", default="runs")
    train.add_argument("--micro-batch", type=int, default=8)
    return parser


def _config_from_args(args) -> TrainConfig | None:
    overrides = {}
    if args.lr is not None:
        overrides["learning_rate"] = args.lr
    if args.dropout is not None:
        overrides["dropout"] = args.dropout
    if args.batch is not None:
        overrides["effective_batch"] = args.batch
    if args.half_precision:
        overrides["half_precision"] = True
    return TrainConfig(**overrides) if overrides else None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        try:
            settings = ServerSettings(
                echo=args.echo,
                model=args.model,
                defer_load=args.defer_load,
                max_batch=args.max_batch,
            )
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        import uvicorn

        uvicorn.run(create_app(settings), host=args.host, port=args.port)
        return 0

    try:
        config = _config_from_args(args)
        if args.grid and config is not None:
            raise ValueError("--grid cannot be combined with --lr/--dropout/--batch")
        report = train_model(
            args.pairs,
            config=config,
            grid=args.grid,
            dry_run=args.dry_run,
            model_name=args.model,
            out_dir=args.out,
            micro_batch=args.micro_batch,
        )
    except TrainingUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PairsFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
