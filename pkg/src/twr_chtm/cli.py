"""Command-line front end.

    twr-chtm simulate    --config run.toml --out DIR [--seed N] [--jobs N]
    twr-chtm eval        --config run.toml DATASET [--out DIR]
    twr-chtm sweep-snr   --config run.toml DATASET [--out DIR] [--jobs N]
    twr-chtm sweep-order --config run.toml DATASET [--out DIR]
    twr-chtm render      MATRIX --out IMAGE [--colormap gray|viridis]
    twr-chtm inspect     MATRIX

Exit codes: 0 ok, 1 invalid input/config, 2 I/O failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, RunConfig
from .dsp import DopplerTimeMap
from .envelope import EnvelopeSet
from .evaluation import (CLASS_NAMES, CachedSample, LabeledSample, SampleSpec,
                         class_index, generate_dataset, make_presets, nearest_centroid, order_sweep,
                         separability, snr_sweep, stratified_split, _run_specs)
from .kinematics import Gait
from .matrixio import MatrixFormatError, MatrixKind, read_header, read_matrix, render, write_matrix

log = logging.getLogger("twr_chtm")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
MANIFEST = "manifest.json"
NOISE_REFERENCE = "noise power in dB relative to the mean power of the clean IF cube"


class ManifestError(ValueError):
    pass


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sample_specs(cfg: RunConfig):
    if cfg.dataset is None:
        armed = cfg.gait.pattern is Gait.ARMED
        label = class_index(0, armed)
        return [SampleSpec(f"{CLASS_NAMES[label]}-single", 0, armed, cfg.gait, cfg.seed)]
    ds = cfg.dataset
    return generate_dataset(make_presets(cfg.gait), ds.per_class, cfg.seed,
                            observation_time=cfg.observation_time, range_limits=ds.range_limits,
                            heading_jitter_deg=ds.heading_jitter_deg,
                            frequency_jitter=ds.frequency_jitter, phase_jitter=ds.phase_jitter)


@dataclass(frozen=True)
class _SimulateTask:
    cfg: RunConfig
    out: str

    def __call__(self, spec: SampleSpec) -> dict:
        cfg = self.cfg
        pipe = cfg.pipeline()
        cube = pipe.cube(spec)
        maps = pipe.maps_from_cube(cube, spec.gait)
        sample_dir = Path(self.out) / spec.sample_id
        sample_dir.mkdir(parents=True, exist_ok=True)
        common = {"config_hash": cfg.hash, "sample_id": spec.sample_id}
        time_axis = {"name": "slow_time", "unit": "s", "values": maps.dtm.slow_time_axis.tolist()}
        files = {}

        def put(name, kind, data, axes, **extra):
            path = sample_dir / f"{name}.chtm"
            write_matrix(path, kind, data, {**common, "axes": axes, **extra})
            files[name] = path.relative_to(self.out).as_posix()

        put("rtm", MatrixKind.RTM, maps.rtm.magnitudes,
            [{"name": "range", "unit": "m", "values": maps.rtm.range_axis.tolist()},
             {"name": "slow_time", "unit": "s", "values": maps.rtm.slow_time_axis.tolist()}])
        put("dtm", MatrixKind.DTM, maps.dtm.magnitudes,
            [{"name": "doppler", "unit": "Hz", "values": maps.dtm.doppler_axis.tolist()}, time_axis])
        for region, chtm in (("macro", maps.chtm_macro), ("micro", maps.chtm_micro)):
            put(f"chtm_{region}", MatrixKind.CHTM, chtm.values,
                [{"name": "order", "unit": "", "values": list(range(chtm.order_max + 1))}, time_axis],
                region=region, n_order=chtm.order_max, epsilon=chtm.epsilon, source=files["dtm"])
        env_path = sample_dir / "envelopes.csv"
        env_path.write_text(maps.envelopes.to_csv())
        files["envelopes"] = env_path.relative_to(self.out).as_posix()
        if cfg.save_cubes:
            scene = {"radar": cfg.to_dict()["radar"], "wall": cfg.to_dict()["wall"]}
            put("cube_real", MatrixKind.CUBE_REAL, cube.samples.real, [], **scene)
            put("cube_imag", MatrixKind.CUBE_IMAG, cube.samples.imag, [], **scene)
        return {**spec.to_dict(), "config_hash": cfg.hash, "files": files}


def cmd_simulate(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    specs = _sample_specs(cfg)
    log.info("simulating %d sample(s) into %s", len(specs), out)
    entries = _run_specs(_SimulateTask(cfg, str(out)), specs, jobs)
    manifest = {
        "format": 1,
        "config_hash": cfg.hash,
        "scene_hash": cfg.scene_hash,
        "seed": cfg.seed,
        "noise_reference": NOISE_REFERENCE,
        "classes": list(CLASS_NAMES),
        "config": cfg.to_dict(),
        "samples": entries,
    }
    _dump_json(out / MANIFEST, manifest)
    print(f"wrote {len(entries)} sample(s) to {out}")
    return manifest


def load_manifest(dataset: Path, cfg: RunConfig | None = None) -> dict:
    path = dataset / MANIFEST
    manifest = json.loads(path.read_text())
    if not manifest.get("samples"):
        raise ManifestError(f"{path} lists no samples")
    if cfg is not None and manifest.get("scene_hash") != cfg.scene_hash:
        raise ManifestError("dataset was simulated with a different configuration "
                            f"(scene hash {manifest.get('scene_hash')} != {cfg.scene_hash})")
    return manifest


def _load_features(dataset: Path, manifest: dict, region: str):
    """Per sample: (label, DTM features, ChTM features, DTM, envelopes)."""
    rows = []
    for entry in manifest["samples"]:
        files = entry["files"]
        dtm_file = read_matrix(dataset / files["dtm"])
        chtm_file = read_matrix(dataset / files[f"chtm_{region}"])
        axes = dtm_file.sidecar.get("axes") or []
        doppler = np.asarray(axes[0]["values"]) if axes else np.arange(dtm_file.shape[0])[::-1]
        times = np.asarray(axes[1]["values"]) if len(axes) > 1 else np.arange(dtm_file.shape[1])
        dtm = DopplerTimeMap(dtm_file.data, doppler, times, True)
        env = EnvelopeSet.from_csv((dataset / files["envelopes"]).read_text(), dtm_file.shape[0])
        if env.n_columns != dtm_file.shape[1]:
            raise ManifestError(f"{entry['sample_id']}: envelope length does not match its DTM")
        label = CLASS_NAMES.index(entry["label"])
        rows.append((label, dtm.normalized().magnitudes.ravel(), chtm_file.data.ravel(), dtm, env,
                     entry["sample_id"]))
    for k, name in ((1, "DTM"), (2, "ChTM")):
        lengths = {len(r[k]) for r in rows}
        if len(lengths) != 1:
            raise ManifestError(f"{name} feature lengths disagree across samples: {sorted(lengths)}")
    return rows


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def cmd_eval(cfg: RunConfig, dataset: Path, out: Path) -> None:
    manifest = load_manifest(dataset, cfg)
    rows = _load_features(dataset, manifest, cfg.chtm.region)
    labels = np.array([r[0] for r in rows])
    k = cfg.eval.k or None

    sep = io.StringIO()
    w = csv.writer(sep, lineterminator="\n")
    w.writerow(["representation", "d_inter", "d_intra", "n_classes", "n_samples"])
    acc_by_rep = {}
    train, test = stratified_split(labels, cfg.eval.test_fraction, cfg.eval.split_seed)
    for col, rep in ((1, "DTM"), (2, "ChTM")):
        if rep not in cfg.eval.representations:
            continue
        samples = [LabeledSample(r[0], r[col], r[5]) for r in rows]
        if len(np.unique(labels)) >= 2:
            report = separability(samples)
            w.writerow([rep, f"{report.d_inter:.6f}", f"{report.d_intra:.6f}", len(report.labels), len(samples)])
            print(f"{rep}: d_inter={report.d_inter:.4f} d_intra={report.d_intra:.4f}")
        if len(test) == 0:
            raise ManifestError("dataset too small for a train/test split (need >= 2 samples per class)")
        result = nearest_centroid([samples[i] for i in train], [samples[i] for i in test], k,
                                  labels=range(len(CLASS_NAMES)))
        acc_by_rep[rep] = result
        print(f"{rep}: accuracy={result.accuracy:.4f} on {len(test)} test samples")
        _write(out, f"confusion_{rep.lower()}.csv", _confusion_csv(result.confusion))

    acc = io.StringIO()
    w2 = csv.writer(acc, lineterminator="\n")
    reps = list(acc_by_rep)
    w2.writerow(["class", *reps])
    present = set(labels[test])
    for c, name in enumerate(CLASS_NAMES):
        w2.writerow([name, *(f"{acc_by_rep[r].per_class[c]:.4f}" if c in present else "" for r in reps)])
    w2.writerow(["overall", *(f"{acc_by_rep[r].accuracy:.4f}" for r in reps)])
    _write(out, "separability.csv", sep.getvalue())
    _write(out, "accuracy.csv", acc.getvalue())


def _confusion_csv(confusion: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\predicted", *CLASS_NAMES])
    for name, row in zip(CLASS_NAMES, confusion):
        w.writerow([name, *row.tolist()])
    return buf.getvalue()


def cmd_sweep_snr(cfg: RunConfig, dataset: Path, out: Path, jobs: int = 1) -> None:
    manifest = load_manifest(dataset, cfg)
    specs = [SampleSpec.from_dict(e) for e in manifest["samples"]]
    table = snr_sweep(specs, cfg.pipeline(), list(cfg.eval.snr_levels), cfg.eval.representations,
                      cfg.eval.split_seed, cfg.eval.test_fraction, jobs, cfg.chtm.region, cfg.eval.k or None)
    text = table.to_csv()
    _write(out, "sweep_snr.csv", text)
    sys.stdout.write(text)


def cmd_sweep_order(cfg: RunConfig, dataset: Path, out: Path) -> None:
    manifest = load_manifest(dataset, cfg)
    rows = _load_features(dataset, manifest, cfg.chtm.region)
    cached = [CachedSample(r[0], r[3], r[4], r[5]) for r in rows]
    table = order_sweep(cached, list(cfg.eval.orders), cfg.chtm.epsilon, cfg.eval.split_seed,
                        cfg.eval.test_fraction, cfg.chtm.region, cfg.eval.k or None)
    text = table.to_csv()
    _write(out, "sweep_order.csv", text)
    sys.stdout.write(text)


def cmd_render(matrix: Path, image: Path, colormap: str) -> None:
    mf = read_matrix(matrix, with_sidecar=False)
    image.parent.mkdir(parents=True, exist_ok=True)
    image.write_bytes(render(mf.data, colormap))
    print(f"wrote {image} ({mf.shape[1]}x{mf.shape[0]})")


def cmd_inspect(matrix: Path) -> None:
    header = read_header(matrix)
    for key in ("magic", "kind", "kind_name", "rows", "cols", "payload_bytes", "payload_ok"):
        print(f"{key}: {header[key]}")
    side = matrix.with_name(matrix.name + ".json")
    if side.exists():
        meta = json.loads(side.read_text())
        if "config_hash" in meta:
            print(f"config_hash: {meta['config_hash']}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twr-chtm", description="Through-wall radar gait maps and Chebyshev features")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dataset=False, jobs=False):
        sp.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        if dataset:
            sp.add_argument("dataset", type=Path, help="directory written by simulate")
            sp.add_argument("--out", type=Path, default=None, help="report directory (default: dataset)")
        else:
            sp.add_argument("--out", type=Path, default=None, help="output directory (default: config output)")
        if jobs:
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    common(sub.add_parser("simulate", help="simulate samples and write maps"), jobs=True)
    common(sub.add_parser("eval", help="separability and accuracy reports"), dataset=True)
    common(sub.add_parser("sweep-snr", help="accuracy versus injected noise"), dataset=True, jobs=True)
    common(sub.add_parser("sweep-order", help="accuracy versus Chebyshev order"), dataset=True)

    r = sub.add_parser("render", help="render a matrix file as PGM/PPM")
    r.add_argument("matrix", type=Path)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--colormap", choices=("gray", "viridis"), default="gray")

    i = sub.add_parser("inspect", help="print a matrix file header")
    i.add_argument("matrix", type=Path)
    return p


def _setup_logging() -> None:
    level = os.environ.get("CHTM_LOG", "error").lower()
    if level not in LOG_LEVELS:
        raise ConfigError(f"CHTM_LOG must be one of {', '.join(LOG_LEVELS)}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s", force=True)


def _run(args) -> None:
    if args.command == "render":
        return cmd_render(args.matrix, args.out, args.colormap)
    if args.command == "inspect":
        return cmd_inspect(args.matrix)
    cfg = cfgmod.load(args.config).with_seed(args.seed).validate()
    jobs = getattr(args, "jobs", 1)
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if args.command == "simulate":
        cmd_simulate(cfg, args.out or Path(cfg.output), jobs)
        return
    out = args.out or args.dataset
    if args.command == "eval":
        cmd_eval(cfg, args.dataset, out)
    elif args.command == "sweep-snr":
        cmd_sweep_snr(cfg, args.dataset, out, jobs)
    else:
        cmd_sweep_order(cfg, args.dataset, out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        _setup_logging()
        _run(args)
    except (ConfigError, ManifestError, MatrixFormatError) as exc:
        # corrupt matrix files count as I/O failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, MatrixFormatError) else EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except KeyError as exc:
        print(f"error: missing field {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
