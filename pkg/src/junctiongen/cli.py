"""Command-line entry point.

Subcommands: build-dataset, train, evaluate, sumo-convert, generate, serve.
Option precedence is CLI flag > JUNCTIONGEN_* environment variable > config
file value. All subcommands are deterministic given identical inputs and
seeds.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import Config, load_config
from .dataset import read_dataset, write_dataset
from .errors import DatasetIOError, DomainError, TrainingError
from .evaluation import RandomProjectionExtractor, evaluate_model
from .pipeline import GeneratorBundle, encode_png, generate_image
from .scenegraph import GraphVariant, encode_time
from .synthetic import make_synthetic_points
from .training import init_train_state, load_checkpoint, save_checkpoint, train_loop

ENV_PREFIX = "JUNCTIONGEN_"


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def _resolve_config(args: argparse.Namespace) -> Config:
    path = args.config or _env("CONFIG")
    if path is None:
        raise DomainError("no config given: pass --config or set JUNCTIONGEN_CONFIG")
    return load_config(path)


def _parse_splits(spec: str, total: int) -> list[str]:
    """Expand 'train:16,val:4' into a per-point split-name list."""
    names = []
    for part in spec.split(","):
        name, _, count = part.partition(":")
        if not count or not count.isdigit():
            raise DomainError(f"bad split spec {part!r}; expected name:count")
        names.extend([name] * int(count))
    if len(names) != total:
        raise DomainError(f"split spec covers {len(names)} points, dataset has {total}")
    return names


def cmd_build_dataset(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    points = make_synthetic_points(args.synthetic, config, seed=args.seed)
    splits = _parse_splits(args.splits, len(points)) if args.splits else None
    manifest = write_dataset(points, args.out, splits=splits)
    print(f"wrote {len(points)} points to {args.out} ({manifest['variant']} variant)")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.resume:
        state = load_checkpoint(args.resume)
    else:
        state = init_train_state(_resolve_config(args))
    steps_env = _env("STEPS")
    steps = (
        args.steps
        if args.steps is not None
        else int(steps_env) if steps_env is not None else state.config.training.steps
    )
    points = list(read_dataset(args.data, split=args.split))

    log_path = out / "losses.jsonl"
    with log_path.open("a") as log:
        def log_fn(step: int, losses: dict[str, float]) -> None:
            log.write(json.dumps({"step": step} | losses) + "\n")
            if step % 10 == 0 or step == steps:
                human = " ".join(f"{k}={v:.4f}" for k, v in losses.items())
                print(f"step {step}/{steps}: {human}")

        train_loop(state, points, steps, checkpoint_dir=out, log_fn=log_fn)
    save_checkpoint(state, out / "last.pt")
    print(f"finished at step {state.step}; checkpoints in {out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    bundle = GeneratorBundle.from_checkpoint(args.checkpoint)
    points = list(read_dataset(args.data, split=args.split))
    report = evaluate_model(
        bundle,
        points,
        extractor=RandomProjectionExtractor(dims=args.fid_dims, seed=args.seed),
        exclude_bus=args.exclude_bus,
        seed=args.seed,
    )
    report.save(args.out)
    print(
        f"evaluated {report.num_images} images ({report.num_failed} failed): "
        f"fid={report.fid:.4f} miou_mean={report.miou_mean} accuracy_mean={report.accuracy_mean}"
    )
    return 0


def cmd_sumo_convert(args: argparse.Namespace) -> int:
    from .sumobridge import (
        histogram_from_graphs,
        histogram_from_sizes,
        load_lane_correspondence,
        load_sim_frame,
        sim_frame_to_scene,
    )

    corr = load_lane_correspondence(args.lanes)
    states, timestamp = load_sim_frame(args.frames)
    if args.data:
        hist = histogram_from_graphs(p.graph for p in read_dataset(args.data))
    elif args.sizes:
        hist = histogram_from_sizes(json.loads(Path(args.sizes).read_text()))
    else:
        raise DomainError("need bbox statistics: pass --data DATASET or --sizes JSON")

    variant = GraphVariant(args.variant)
    entities, time, errors = sim_frame_to_scene(
        states, corr, hist, variant, timestamp=timestamp, seed=args.seed
    )
    for idx, msg in errors:
        print(f"skipped vehicle {idx}: {msg}", file=sys.stderr)

    failed = {idx for idx, _ in errors}
    kept_states = [s for i, s in enumerate(states) if i not in failed]
    seconds = timestamp if timestamp is not None else 43200.0
    payload = {
        "version": 1,
        "variant": variant.value,
        "time_seconds": seconds,
        "seed": args.seed,
        "entities": [
            {
                "class": e.entity_class.value,
                "bbox": [e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h],
                "color": list(s.color) if not isinstance(s.color, str) else s.color,
            }
            for e, s in zip(entities, kept_states)
        ],
        "skipped_vehicles": [{"index": i, "reason": m} for i, m in errors],
    }
    Path(args.out).write_text(json.dumps(payload, indent=2))
    print(f"converted {len(entities)}/{len(states)} vehicles -> {args.out}")
    return 0 if not errors or not args.strict else 1


def _load_bundle(args: argparse.Namespace) -> GeneratorBundle:
    checkpoint = args.checkpoint or _env("CHECKPOINT")
    if checkpoint:
        return GeneratorBundle.from_checkpoint(checkpoint)
    config = args.config or _env("CONFIG")
    if config:
        return GeneratorBundle.fresh(load_config(config), seed=0)
    raise DomainError(
        "no model source: pass --checkpoint (or JUNCTIONGEN_CHECKPOINT) "
        "or --config for a randomly initialized model"
    )


def cmd_generate(args: argparse.Namespace) -> int:
    from .service import SceneRequest, request_entities

    bundle = _load_bundle(args)
    try:
        req = SceneRequest.model_validate_json(Path(args.scene).read_text())
    except FileNotFoundError:
        raise DatasetIOError(f"scene file not found: {args.scene}") from None
    except ValueError as exc:
        raise DomainError(f"invalid scene request: {exc}") from None
    variant = bundle.config.model.variant
    if req.variant is not None and req.variant != variant.value:
        raise DomainError(
            f"scene variant {req.variant!r} does not match model variant {variant.value!r}"
        )
    seed = args.seed if args.seed is not None else req.seed
    image = generate_image(
        bundle, request_entities(req, variant), encode_time(req.seconds()), seed=seed
    )
    Path(args.out).write_bytes(encode_png(image))
    print(f"wrote {image.shape[1]}x{image.shape[0]} image to {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    bundle = _load_bundle(args)
    host = args.host or _env("HOST") or "127.0.0.1"
    port = args.port if args.port is not None else int(_env("PORT") or 8000)
    uvicorn.run(create_app(bundle), host=host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="junctiongen",
        description="Scene-graph-conditioned traffic junction image synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dataset", help="write a synthetic dataset with a manifest")
    p.add_argument("--config", help="model/training config (TOML or JSON)")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--synthetic", type=int, default=20, help="number of synthetic points")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", help="split spec like train:16,val:4")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="run adversarial training")
    p.add_argument("--config", help="config file; ignored with --resume")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="checkpoint/log directory")
    p.add_argument("--steps", type=int, help="total steps (overrides config)")
    p.add_argument("--split", help="train on one split only")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--exclude-bus", action="store_true")
    p.add_argument("--fid-dims", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sumo-convert", help="map simulator frames to a scene request")
    p.add_argument("--frames", required=True, help="simulator frame JSON")
    p.add_argument("--lanes", required=True, help="lane correspondence JSON")
    p.add_argument("--out", required=True, help="scene request JSON output")
    p.add_argument("--data", help="dataset to fit the bbox histogram from")
    p.add_argument("--sizes", help="JSON file of per-class [w, h] lists")
    p.add_argument("--variant", choices=[v.value for v in GraphVariant], default="discrete")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="exit nonzero on skipped vehicles")
    p.set_defaults(func=cmd_sumo_convert)

    p = sub.add_parser("generate", help="render one scene request to a PNG")
    p.add_argument("--scene", required=True, help="scene request JSON")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--checkpoint")
    p.add_argument("--config", help="fresh random-init model instead of a checkpoint")
    p.add_argument("--seed", type=int, help="overrides the request's seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("serve", help="start the HTTP generation service")
    p.add_argument("--checkpoint")
    p.add_argument("--config", help="fresh random-init model instead of a checkpoint")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, DatasetIOError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
