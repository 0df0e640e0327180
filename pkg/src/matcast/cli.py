"""Batch entry points: single transfers, plan execution, preprocessing
inspection, benchmark runs and serving.

Exit codes: 0 success, 1 validation problem, 2 backend failure. Parameter
flags mirror the GenerationParams field names one-to-one, and every
output image gets a JSON metadata sidecar so results stay auditable and
re-runnable.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from matcast import __version__
from matcast.errors import BackendError, MatcastError
from matcast.evaluation import DatasetManifest, IdentityPipeline, run_benchmark
from matcast.generation import GenerationParams, MaterialExemplar, Pipeline
from matcast.imaging import (
    InitMode,
    compose_init_image,
    load_image,
    load_mask,
    save_depth,
    save_image,
    save_mask,
)
from matcast.perception import estimate_depth, extract_foreground, load_registry

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BACKEND = 2


def _add_params_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("generation parameters")
    group.add_argument("--seed", type=int, default=0, help="generation seed (default 0)")
    group.add_argument("--steps", type=int, default=30)
    group.add_argument("--guidance-scale", type=float, default=5.0)
    group.add_argument("--material-scale", type=float, default=1.0)
    group.add_argument("--geometry-scale", type=float, default=1.0)
    group.add_argument(
        "--init-mode",
        choices=[m.value for m in InitMode],
        default=InitMode.FOREGROUND_GRAYSCALE.value,
    )
    group.add_argument("--working-size", type=int, default=1024)


def _add_backend_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("backends")
    group.add_argument("--backends", metavar="CONFIG", default=None,
                       help="backend registry config file (JSON)")
    group.add_argument("--encoder", default="mock-encoder")
    group.add_argument("--depth-backend", default="mock-depth")
    group.add_argument("--generator", default="mock-generator")
    group.add_argument("--foreground-backend", default="mock-foreground")


def _params_from_args(args: argparse.Namespace) -> GenerationParams:
    return GenerationParams(
        seed=args.seed,
        steps=args.steps,
        guidance_scale=args.guidance_scale,
        material_scale=args.material_scale,
        geometry_scale=args.geometry_scale,
        init_mode=InitMode(args.init_mode),
        working_size=args.working_size,
    )


def _pipeline_from_args(args: argparse.Namespace, feather: int | None = None) -> Pipeline:
    registry = load_registry(args.backends)
    pipeline = Pipeline(
        registry=registry,
        encoder=args.encoder,
        depth=args.depth_backend,
        generator=args.generator,
    )
    if feather is not None:
        pipeline = replace(pipeline, feather=feather)
    return pipeline


def _parse_crop(text: str | None) -> tuple[int, int, int, int] | None:
    if text is None:
        return None
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 4:
        raise MatcastError("crop must be four integers: x0,y0,x1,y1")
    return tuple(parts)


def _sidecar(path: Path, payload: dict) -> None:
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_transfer(args: argparse.Namespace) -> int:
    pipeline = _pipeline_from_args(args, feather=args.feather)
    params = _params_from_args(args)
    input_image = load_image(args.input)
    exemplar = MaterialExemplar(image=load_image(args.exemplar), crop=_parse_crop(args.crop))
    if args.mask is not None:
        mask = load_mask(args.mask)
    else:
        mask = extract_foreground(input_image, args.foreground_backend, pipeline.registry)
    result = pipeline.transfer(input_image, mask, exemplar, params)
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    save_image(result.image, output)
    _sidecar(output, {
        "params": result.params.to_record(),
        "request_digest": result.request_digest,
        "backend_ids": result.backend_ids,
        "condition_digests": result.condition_digests,
        "timings": result.timings,
        "feather": pipeline.feather,
    })
    return EXIT_OK


def cmd_preprocess(args: argparse.Namespace) -> int:
    registry = load_registry(args.backends)
    input_image = load_image(args.input)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.mask is not None:
        mask = load_mask(args.mask)
    else:
        mask = extract_foreground(input_image, args.foreground_backend, registry)
    depth = estimate_depth(input_image, args.depth_backend, registry)
    save_depth(depth, out_dir / "depth.png")
    save_mask(mask, out_dir / "mask.png")
    for mode in InitMode:
        composite = compose_init_image(input_image, mask, mode, seed=args.seed)
        save_image(composite, out_dir / f"init_{mode.value}.png")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    registry = load_registry(args.backends)
    manifest = DatasetManifest.load(args.manifest)
    params = _params_from_args(args)
    if args.pipeline == "identity":
        pipeline = IdentityPipeline()
    else:
        pipeline = Pipeline(
            registry=registry,
            encoder=args.encoder,
            depth=args.depth_backend,
            generator=args.generator,
        )
    report = run_benchmark(
        manifest,
        pipeline,
        params,
        metric_region="masked" if args.masked_metrics else "full",
        foreground_backend=args.foreground_backend,
        registry=registry,
        jobs=args.jobs,
    )
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(report.to_json())
    sys.stdout.write(report.render_table())
    return EXIT_OK if report.valid else EXIT_BACKEND


def cmd_plan(args: argparse.Namespace) -> int:
    from matcast.session import EditStep, SessionStore, add_step, apply_plan, new_session
    from matcast.store import AssetStore

    try:
        plan_doc = json.loads(Path(args.plan).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MatcastError(f"cannot read plan file: {exc}") from exc
    pipeline = _pipeline_from_args(args)
    store = AssetStore(args.storage)
    session_store = SessionStore(args.storage, assets=store)
    plan_root = Path(args.plan).parent

    base = store.put_image(load_image(plan_root / plan_doc["base_image"]))
    state = new_session(base.id)
    for item in plan_doc.get("steps", []):
        mask_record = store.put_mask(load_mask(plan_root / item["mask"]))
        exemplar_record = store.put_image(load_image(plan_root / item["exemplar"]), kind="exemplar")
        params = GenerationParams.from_record(item.get("params", {}))
        add_step(state, EditStep(
            region=mask_record.id,
            exemplar_image=exemplar_record.id,
            params=params,
            crop=tuple(item["crop"]) if item.get("crop") else None,
            feather=int(item.get("feather", 8)),
        ))
    apply_plan(state, pipeline, store, progress=None)
    session_store.save(state)
    failed = [i for i, s in enumerate(state.steps) if s.status == "failed"]
    if failed:
        for index in failed:
            sys.stderr.write(f"step {index} failed: {state.steps[index].error}\n")
        return EXIT_BACKEND
    if args.output:
        final = store.load_image(state.current_image_id())
        save_image(final, args.output)
    sys.stdout.write(state.id + "\n")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from matcast.service import create_app

    host, _, port = args.listen.rpartition(":")
    app = create_app(storage_root=args.storage, backend_config=args.backends, workers=args.workers)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matcast", description=__doc__)
    parser.add_argument("--version", action="version", version=f"matcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    transfer = sub.add_parser("transfer", help="transfer a material exemplar onto a masked object")
    transfer.add_argument("input", help="input image PNG")
    transfer.add_argument("exemplar", help="material exemplar PNG")
    transfer.add_argument("output", help="output PNG path")
    mask_group = transfer.add_mutually_exclusive_group(required=True)
    mask_group.add_argument("--mask", help="foreground mask PNG (8-bit single channel)")
    mask_group.add_argument("--auto-mask", action="store_true", help="extract the mask automatically")
    transfer.add_argument("--crop", help="exemplar crop as x0,y0,x1,y1")
    transfer.add_argument("--feather", type=int, default=8, help="paste-back feather in pixels")
    _add_params_args(transfer)
    _add_backend_args(transfer)
    transfer.set_defaults(fn=cmd_transfer)

    preprocess = sub.add_parser("preprocess", help="write depth, mask and all init composites")
    preprocess.add_argument("input")
    preprocess.add_argument("out_dir")
    preprocess.add_argument("--mask", default=None)
    preprocess.add_argument("--seed", type=int, default=0)
    _add_backend_args(preprocess)
    preprocess.set_defaults(fn=cmd_preprocess)

    evaluate = sub.add_parser("eval", help="run a benchmark manifest and write a report")
    evaluate.add_argument("manifest")
    evaluate.add_argument("--report", default="report.json")
    evaluate.add_argument("--pipeline", choices=["mock", "identity"], default="mock")
    evaluate.add_argument("--jobs", type=int, default=1)
    evaluate.add_argument("--masked-metrics", action="store_true",
                          help="restrict metrics to the mask region")
    _add_params_args(evaluate)
    _add_backend_args(evaluate)
    evaluate.set_defaults(fn=cmd_eval)

    plan = sub.add_parser("plan", help="execute an ordered multi-step edit plan")
    plan.add_argument("plan", help="plan JSON file")
    plan.add_argument("--storage", default="matcast-data")
    plan.add_argument("--output", default=None, help="write the final composite here")
    _add_backend_args(plan)
    plan.set_defaults(fn=cmd_plan)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--listen", default=None, help="host:port (default 127.0.0.1:8630)")
    serve.add_argument("--storage", default=None)
    serve.add_argument("--backends", default=None)
    serve.add_argument("--workers", type=int, default=2)
    serve.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve" and args.listen is None:
        import os

        args.listen = os.environ.get("MATCAST_LISTEN", "127.0.0.1:8630")
    try:
        return args.fn(args)
    except BackendError as exc:
        sys.stderr.write(f"backend error: {exc}\n")
        return EXIT_BACKEND
    except MatcastError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
