"""Command-line entry point: dataset generation, training, rendering, evaluation,
ablations, and mask/feature inspection.

Exit codes: 0 success, 2 configuration or contract error, 3 numerical failure
(NaN gradient, non-finite loss). Every command writes the fully resolved
configuration next to its outputs so runs are reproducible from
(config file, seed).

Config files are flat ``key = value`` text (``#`` comments allowed); keys are
``TrainConfig`` field names. Command-line flags override file values.
"""

import argparse
import dataclasses
import json
import sys
import types
from pathlib import Path

import numpy as np
import torch

from . import filters
from .datasets import load_dataset, make_dataset, save_dataset
from .errors import ConfigError, NumericError
from .field import AXES, MultiScaleField, PLANE_NAMES, ROLES
from .images import save_gray_png, save_png
from .metrics import MetricReport
from .render import RenderSettings, render_image
from .scenes import default_scene
from .training import TrainConfig, evaluate_field, run_ablation, train_loop

_TRAIN_FLAGS = {
    # flag dest -> TrainConfig field
    "steps": "total_steps",
    "warmup": "warmup_steps",
    "batch_rays": "batch_rays",
    "samples": "samples_per_ray",
    "lr_grid": "lr_grid",
    "lr_decoder": "lr_decoder",
    "lr_decay": "lr_decay_ratio",
    "seed": "seed",
    "grid_size": "grid_size",
    "rank_density": "rank_density",
    "rank_appearance": "rank_appearance",
    "mask_mode": "mask_mode",
    "epsilon": "epsilon",
    "mask_init": "mask_init",
    "dtype": "dtype",
    "log_every": "log_every",
    "eval_every": "eval_every",
    "no_mask": "no_mask",
    "no_lpf": "no_lpf",
    "shared_lpf": "shared_lpf",
    "baseline": "baseline",
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _parse_config_value(field_name: str, raw: str):
    text = raw.strip()
    ftype = _FIELD_TYPES[field_name]
    if ftype is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {field_name!r}: expected a boolean, got {raw!r}")
    if text.lower() in ("none", "null"):
        return None
    try:
        if ftype is int:
            return int(text)
        if ftype is float:
            return float(text)
        if isinstance(ftype, types.UnionType):
            member = next(t for t in ftype.__args__ if t is not type(None))
            return member(text)
    except ValueError as exc:
        raise ConfigError(f"config key {field_name!r}: {exc}") from exc
    return text


def read_config_file(path) -> dict:
    """Flat key = value config; unknown keys are errors."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_config_value(key, raw)
    return values


def resolve_train_config(args) -> TrainConfig:
    """defaults < config file < explicit command-line flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for dest, field_name in _TRAIN_FLAGS.items():
        flag_value = getattr(args, dest, None)
        if flag_value is not None and flag_value is not False:
            values[field_name] = flag_value
    return TrainConfig(**values)


def write_resolved_config(out_dir: Path, command: str, cfg: TrainConfig | None,
                          extras: dict) -> None:
    lines = [f"# resolved configuration ({command})"]
    for key, value in extras.items():
        lines.append(f"{key} = {value}")
    if cfg is not None:
        for key, value in cfg.to_dict().items():
            lines.append(f"{key} = {value}")
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n")


def _prepare_out_dir(path, force: bool = True) -> Path:
    out = Path(path)
    if out.exists() and not force and any(out.iterdir()):
        raise ConfigError(f"output directory {out} exists and is not empty (use --force)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_train_arguments(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--steps", type=int, help="total optimization steps")
    sub.add_argument("--warmup", type=int, help="spatial-domain steps before the DCT handoff")
    sub.add_argument("--batch-rays", dest="batch_rays", type=int, help="rays per step")
    sub.add_argument("--samples", type=int, help="quadrature samples per ray")
    sub.add_argument("--lr-grid", dest="lr_grid", type=float, help="factor/mask learning rate")
    sub.add_argument("--lr-decoder", dest="lr_decoder", type=float, help="decoder learning rate")
    sub.add_argument("--lr-decay", dest="lr_decay", type=float,
                     help="lr multiplier reached at the final step (1 = constant)")
    sub.add_argument("--seed", type=int, help="run seed")
    sub.add_argument("--grid-size", dest="grid_size", type=int, help="grid extent per axis")
    sub.add_argument("--rank-density", dest="rank_density", type=int)
    sub.add_argument("--rank-appearance", dest="rank_appearance", type=int)
    sub.add_argument("--mask-mode", dest="mask_mode", choices=["literal", "multiplicative"],
                     help="frequency mask reading (default literal)")
    sub.add_argument("--epsilon", type=float, help="mask gating threshold")
    sub.add_argument("--mask-init", dest="mask_init", type=float, help="mask initial value")
    sub.add_argument("--dtype", choices=["float32", "float64"])
    sub.add_argument("--log-every", dest="log_every", type=int)
    sub.add_argument("--eval-every", dest="eval_every", type=int,
                     help="probe-PSNR cadence (0 disables)")


def _write_history(out: Path, history: list) -> None:
    with open(out / "log.jsonl", "w") as fh:
        for record in history:
            fh.write(json.dumps(record) + "\n")


def _write_report(out: Path, report: MetricReport) -> None:
    (out / "metrics.json").write_text(report.to_json() + "\n")
    (out / "metrics.txt").write_text(report.to_text() + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_make_dataset(args) -> int:
    if args.full_res % 8 or args.full_res < 16:
        raise ConfigError(f"--full-res must be a multiple of 8 and >= 16, got {args.full_res}")
    out = _prepare_out_dir(args.out, force=args.force)
    scene = default_scene(args.seed)
    ds = make_dataset(
        scene=scene,
        n_train=args.views,
        n_test=args.test_views,
        full_res=args.full_res,
        supersample=args.supersample,
        seed=args.seed,
    )
    save_dataset(ds, out)
    write_resolved_config(out, "make-dataset", None, {
        "out": out, "full_res": args.full_res, "views": args.views,
        "test_views": args.test_views, "supersample": args.supersample,
        "seed": args.seed,
    })
    print(f"wrote {ds.num_scales}-scale dataset ({args.views} train / "
          f"{args.test_views} test views) to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_train_config(args)
    dataset = load_dataset(args.dataset)
    out = _prepare_out_dir(args.out)
    write_resolved_config(out, "train", cfg, {"dataset": args.dataset, "out": out})

    def report(record):
        probe = record.get("probe_psnr")
        extra = f" probe_psnr={probe}" if probe else ""
        print(f"step {record['step']:6d}  loss {record['loss']:.6f}  "
              f"[{record['phase']}]{extra}")

    field, history = train_loop(cfg, dataset, on_step=report)
    field.save_checkpoint(out / "checkpoint.ndgc", step=cfg.total_steps)
    _write_history(out, history)
    print(f"checkpoint written to {out / 'checkpoint.ndgc'}")
    return 0


def cmd_render(args) -> int:
    field, _ = MultiScaleField.load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.dataset)
    if not 0 <= args.scale < dataset.num_scales:
        raise ConfigError(f"--scale must be in [0, {dataset.num_scales}), got {args.scale}")
    cams = dataset.cameras(args.split)
    if not 0 <= args.view < len(cams):
        raise ConfigError(f"--view must be in [0, {len(cams)}), got {args.view}")
    cam = dataset.camera(args.split, args.scale, args.view)
    settings = RenderSettings(
        samples_per_ray=args.samples, background=dataset.background, jitter=False
    )
    img = render_image(field, cam, settings)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_png(out, img)
    print(f"rendered {args.split} view {args.view} at scale index {args.scale} -> {out}")
    return 0


def cmd_eval(args) -> int:
    field, _ = MultiScaleField.load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.dataset)
    out = _prepare_out_dir(args.out)
    report = evaluate_field(field, dataset, samples_per_ray=args.samples)
    _write_report(out, report)
    write_resolved_config(out, "eval", None, {
        "checkpoint": args.checkpoint, "dataset": args.dataset, "samples": args.samples,
    })
    print(report.to_text())
    return 0


def cmd_inspect(args) -> int:
    field, _ = MultiScaleField.load_checkpoint(args.checkpoint)
    out = _prepare_out_dir(args.out)
    with torch.no_grad():
        for s in range(field.num_scales):
            grids = field.spatial_factors(s)
            for role in ROLES:
                for ax in AXES:
                    plane = PLANE_NAMES[ax]
                    mask = field.masks[f"{role}_s{s}_plane_{plane}"].cpu().numpy()
                    save_gray_png(
                        out / f"mask_{role}_{plane}_s{s}.png", filters.to_grayscale_u8(mask)
                    )
                    feat = grids[f"{role}_plane_{plane}"].cpu().numpy()
                    magnitude = np.sqrt((feat**2).sum(axis=0))  # L2 across rank components
                    save_gray_png(
                        out / f"feature_{role}_{plane}_s{s}.png",
                        filters.to_grayscale_u8(magnitude),
                    )
    count = field.num_scales * len(ROLES) * 3
    print(f"wrote {count} mask images and {count} feature maps to {out}")
    return 0


def cmd_ablate(args) -> int:
    cfg = resolve_train_config(args)
    variant = args.variant.replace("-", "_")
    cfg = dataclasses.replace(
        cfg, no_mask=variant == "no_mask", no_lpf=variant == "no_lpf",
        shared_lpf=variant == "shared_lpf", baseline=False,
    )
    dataset = load_dataset(args.dataset)
    out = _prepare_out_dir(args.out)
    write_resolved_config(out, f"ablate:{args.variant}", cfg, {
        "dataset": args.dataset, "out": out, "variant": args.variant,
    })
    field, history, report = run_ablation(cfg, dataset)
    field.save_checkpoint(out / "checkpoint.ndgc", step=cfg.total_steps)
    _write_history(out, history)
    _write_report(out, report)
    print(report.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dctmip",
        description="Frequency-domain anti-aliased multi-scale grid radiance fields",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset", help="generate the synthetic multi-scale dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--full-res", dest="full_res", type=int, default=64,
                   help="full resolution in pixels (multiple of 8)")
    p.add_argument("--views", type=int, default=16, help="training views")
    p.add_argument("--test-views", dest="test_views", type=int, default=4)
    p.add_argument("--supersample", type=int, default=32,
                   help="sub-rays per pixel axis for the ground-truth oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="overwrite a non-empty directory")
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("train", help="train a field on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    _add_train_arguments(p)
    p.add_argument("--no-mask", dest="no_mask", action="store_true",
                   help="ablation: identity masks")
    p.add_argument("--no-lpf", dest="no_lpf", action="store_true",
                   help="ablation: all-pass filters")
    p.add_argument("--shared-lpf", dest="shared_lpf", action="store_true",
                   help="ablation: one sigma (n=2) for every scale")
    p.add_argument("--baseline", action="store_true",
                   help="no-anti-aliasing reference: stay in the spatial domain")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("render", help="render one dataset view from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--view", type=int, default=0)
    p.add_argument("--scale", type=int, default=0, help="scale index (0 = full resolution)")
    p.add_argument("--samples", type=int, default=64)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="per-scale PSNR/SSIM tables on the test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=64)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="export per-scale masks and feature maps as PNGs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("ablate", help="train and evaluate one ablation variant")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", required=True,
                   choices=["no-mask", "no-lpf", "shared-lpf"])
    _add_train_arguments(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
