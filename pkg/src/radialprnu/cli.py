"""Command-line surface: fingerprint building, attribution, simulation,
benchmarking."""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .adaptive import SearchDefaults
from .decision import (ALPHA_F_DEFAULT, H1, attribute, default_threshold,
                       replay_cpce)
from .denoise import DenoiserConfig
from .fingerprint import (FingerprintFormatError, estimate_fingerprint,
                          load_fingerprint, save_fingerprint)
from .planes import DomainError, Plane, load_image
from .simulate import (DistortionProfile, SyntheticScene, apply_profile,
                       flat_field, gradient_field, synth_image, synth_prnu)

EXIT_H0 = 0
EXIT_H1 = 1
EXIT_ERROR = 2

THREADS_ENV = "RADIALPRNU_THREADS"


def _load_config(path):
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _cfg_get(cfg, key, flag_value, default):
    """Flag beats config file beats default."""
    if flag_value is not None:
        return flag_value
    if key in cfg:
        return cfg[key]
    return default


def _fail(msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_ERROR)


@click.group()
def main():
    """PRNU camera attribution robust to radial lens-distortion correction."""


@main.command("fingerprint")
@click.argument("images", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--levels", type=int, default=None)
@click.option("--noise-variance", type=float, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None)
def cmd_fingerprint(images, out, levels, noise_variance, config_path):
    """Estimate a camera fingerprint from one or more same-size images."""
    cfg = _load_config(config_path)
    dcfg = DenoiserConfig(
        levels=int(_cfg_get(cfg, "levels", levels, 4)),
        noise_variance=float(_cfg_get(cfg, "noise_variance",
                                      noise_variance, 9.0)))
    try:
        planes = [load_image(p) for p in images]
        fp = estimate_fingerprint(planes, dcfg, label=str(out))
    except (DomainError, OSError, ValueError) as exc:
        _fail(str(exc))
    save_fingerprint(fp, out)
    m, n = fp.plane.shape
    click.echo(f"images: {len(images)}")
    click.echo(f"dimensions: {n}x{m}")
    click.echo(f"sigma2: {fp.sigma2:.6e}")


def _attribute_options(fn):
    opts = [
        click.option("--variant", type=click.Choice(
            ["inv", "dir", "2w", "id", "di"]), default=None),
        click.option("--model", type=click.Choice(["cubic", "linear"]),
                     default=None),
        click.option("--threshold", type=float, default=None),
        click.option("--fpr", type=click.Choice(["0.05", "0.01"]),
                     default=None),
        click.option("--r1-px", type=float, default=None),
        click.option("--delta-px", type=float, default=None),
        click.option("--alpha-f", type=float, default=None),
        click.option("--predictor-length", type=int, default=None),
        click.option("--step-size", type=float, default=None),
        click.option("--min-set-size", type=int, default=None),
        click.option("--initial-bound", type=float, default=None),
        click.option("--initial-step", type=float, default=None),
        click.option("--no-early-stop", is_flag=True, default=False),
        click.option("--config", "config_path",
                     type=click.Path(exists=True), default=None),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _resolve_run_config(cfg, variant, model, threshold, fpr, r1_px, delta_px,
                        alpha_f, predictor_length, step_size, min_set_size,
                        initial_bound, initial_step):
    variant = _cfg_get(cfg, "variant", variant, "inv")
    model = _cfg_get(cfg, "model", model, "cubic")
    fpr = float(_cfg_get(cfg, "fpr", fpr, "0.05"))
    threshold = _cfg_get(cfg, "threshold", threshold, None)
    if threshold is None:
        threshold = default_threshold(variant, model, fpr)
    defaults = SearchDefaults(
        predictor_length=int(_cfg_get(cfg, "predictor_length",
                                      predictor_length, 6)),
        step_size=float(_cfg_get(cfg, "step_size", step_size, 1.0)),
        min_set_size=int(_cfg_get(cfg, "min_set_size", min_set_size, 7)),
        model=model,
        initial_bound=float(_cfg_get(cfg, "initial_bound",
                                     initial_bound, 0.22)),
        initial_step=float(_cfg_get(cfg, "initial_step", initial_step, 0.01)))
    return dict(
        variant=variant, model=model, threshold=float(threshold),
        defaults=defaults,
        alpha_f=float(_cfg_get(cfg, "alpha_f", alpha_f, ALPHA_F_DEFAULT)),
        r1_px=float(_cfg_get(cfg, "r1_px", r1_px, 250.0)),
        delta_px=float(_cfg_get(cfg, "delta_px", delta_px, 64.0)))


@main.command("attribute")
@click.argument("fingerprint_path", type=click.Path(exists=True,
                                                    dir_okay=False))
@click.argument("image_path", type=click.Path(exists=True, dir_okay=False))
@_attribute_options
@click.option("--trace-csv", type=click.Path(dir_okay=False), default=None)
def cmd_attribute(fingerprint_path, image_path, trace_csv, no_early_stop,
                  config_path, **kw):
    """Test whether IMAGE carries the fingerprint; exit 1 on a match."""
    cfg = _load_config(config_path)
    run = _resolve_run_config(cfg, **kw)
    try:
        fp = load_fingerprint(fingerprint_path)
    except FingerprintFormatError as exc:
        _fail(str(exc))
    try:
        image = load_image(image_path)
        verdict = attribute(fp, image, early_stop=not no_early_stop,
                            keep_traces=trace_csv is not None, **run)
    except (DomainError, OSError, ValueError) as exc:
        _fail(str(exc))
    click.echo(verdict.to_json())
    if trace_csv:
        with open(trace_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "alpha_star", "phi", "energy", "q_count",
                        "lambda", "set_size", "skipped"])
            for t in verdict.traces:
                w.writerow([t.k, repr(t.alpha_star), repr(t.phi),
                            repr(t.energy), t.q_count, t.lam, t.set_size,
                            int(t.skipped)])
    sys.exit(EXIT_H1 if verdict.decision == H1 else EXIT_H0)


def parse_profile(text: str) -> DistortionProfile | None:
    """none | constant:A | affine:A,B | piecewise:R=A,R=A,..."""
    if text == "none":
        return None
    kind, _, body = text.partition(":")
    if kind == "constant":
        return DistortionProfile("constant", (float(body),))
    if kind == "affine":
        a, b = body.split(",")
        return DistortionProfile("affine", (float(a), float(b)))
    if kind == "piecewise":
        rs, vs = [], []
        for piece in body.split(","):
            r, v = piece.split("=")
            rs.append(float(r))
            vs.append(float(v))
        return DistortionProfile("piecewise", (tuple(rs), tuple(vs)))
    raise ValueError(f"cannot parse profile {text!r}")


@main.command("simulate")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--width", type=int, default=512)
@click.option("--height", type=int, default=512)
@click.option("--count", type=int, default=1)
@click.option("--scene", type=click.Choice(["flat", "gradient"]),
              default="flat")
@click.option("--prnu-strength", type=float, default=0.02)
@click.option("--prnu-seed", type=int, default=1)
@click.option("--theta-sigma", type=float, default=2.0)
@click.option("--profile", "profile_text", default="none",
              help="none, constant:A, affine:A,B or piecewise:R=A,R=A,...")
@click.option("--seed", type=int, default=0)
@click.option("--prefix", default="img")
def cmd_simulate(out_dir, width, height, count, scene, prnu_strength,
                 prnu_seed, theta_sigma, profile_text, seed, prefix):
    """Emit synthetic PNG images plus a JSON sidecar with the ground truth."""
    from PIL import Image

    try:
        prof = parse_profile(profile_text)
    except ValueError as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = synth_prnu(width, height, prnu_strength, prnu_seed)
    i0 = flat_field(width, height) if scene == "flat" else \
        gradient_field(width, height)
    names = []
    for i in range(count):
        img = synth_image(SyntheticScene(i0, k, theta_sigma, seed + i))
        if prof is not None:
            img = apply_profile(img, prof)
        arr = np.clip(np.round(img.values), 0, 255).astype(np.uint8)
        name = f"{prefix}_{i:03d}.png"
        Image.fromarray(arr, mode="L").save(out / name)
        names.append(name)
    sidecar = {
        "width": width, "height": height, "scene": scene,
        "prnu_strength": prnu_strength, "prnu_seed": prnu_seed,
        "theta_sigma": theta_sigma, "seed": seed, "profile": profile_text,
        "images": names,
    }
    with open(out / f"{prefix}_meta.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    click.echo(f"wrote {count} images to {out}")


@main.command("bench")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@_attribute_options
@click.option("--timing/--no-timing", default=True,
              help="include wall-time column (breaks byte-identical reruns)")
@click.option("--workers", type=int, default=None)
def cmd_bench(manifest, out_dir, no_early_stop, config_path, timing, workers,
              **kw):
    """Run attribution over a manifest; write a CSV report and figures.

    The manifest is TOML: a top-level ``fingerprint`` path and an ``images``
    array of tables with ``path`` and ``label`` ("H0" or "H1"). Relative
    paths resolve against the manifest directory.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .geometry import partition
    from .plots import save_alpha_profiles, save_cpce_trajectories

    cfg = _load_config(config_path)
    run = _resolve_run_config(cfg, **kw)
    with open(manifest, "rb") as fh:
        man = tomllib.load(fh)
    base = Path(manifest).parent
    try:
        fp = load_fingerprint(base / man["fingerprint"])
    except (KeyError, OSError, FingerprintFormatError) as exc:
        _fail(f"manifest fingerprint: {exc}")
    rows = man.get("images", [])
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1"))

    def one(row):
        path = base / row["path"]
        try:
            image = load_image(path)
            v = attribute(fp, image, early_stop=not no_early_stop, **run)
            return row, v, None
        except (OSError, DomainError, ValueError) as exc:
            return row, None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, rows))
    else:
        results = [one(r) for r in rows]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["image", "label", "decision", "cpce_max", "stop_index",
              "annuli_processed"]
    if timing:
        header.append("elapsed_ms")
    tp = fpos = npos = nneg = 0
    profiles = {}
    trajectories = {}
    pm, pn = fp.plane.shape
    part = partition(pn, pm, run["r1_px"], run["delta_px"])
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header + ["error"])
        for row, v, err in results:
            if err is not None:
                click.echo(f"{row['path']}: {err}", err=True)
                w.writerow([row["path"], row.get("label", "")]
                           + [""] * (len(header) - 2) + [err])
                continue
            label = row.get("label", "")
            if label == "H1":
                npos += 1
                tp += v.decision == "H1"
            elif label == "H0":
                nneg += 1
                fpos += v.decision == "H1"
            rec = [row["path"], label, v.decision, repr(v.cpce_max),
                   v.stop_index if v.stop_index is not None else "exhausted",
                   v.annuli_processed]
            if timing:
                rec.append(f"{v.elapsed_ms:.1f}")
            w.writerow(rec + [""])
            trajectories[row["path"]] = list(v.trajectory)
            profiles[row["path"]] = []
            for kk, a in sorted(v.alpha_profile.items()):
                if kk <= part.count:
                    rmid = part.inner_radii[kk - 1] + part.widths[kk - 1] / 2.0
                    profiles[row["path"]].append((rmid, a))
    with open(out / "alpha_profiles.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image", "r_mid", "alpha_star"])
        for name, pairs in profiles.items():
            for rmid, a in sorted(pairs):
                w.writerow([name, f"{rmid:.6f}", repr(a)])
    save_alpha_profiles(profiles, out / "alpha_profiles.png")
    save_cpce_trajectories(trajectories, run["threshold"],
                           out / "cpce_trajectories.png")
    tpr = tp / npos if npos else float("nan")
    fpr_rate = fpos / nneg if nneg else float("nan")
    click.echo(f"rows: {len(rows)}  TPR: {tpr:.3f}  FPR: {fpr_rate:.3f}  "
               f"threshold: {run['threshold']}")


if __name__ == "__main__":
    main()
