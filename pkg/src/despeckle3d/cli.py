"""Batch command-line interface: synthesize fixtures, despeckle volumes,
evaluate metrics and benchmark the filter implementations.

Reports go to stdout as one JSON object per line; diagnostics go to stderr.
Exit codes: 0 success, 2 usage or validation error, 3 data-contract error
(dimension mismatch, degenerate or negative-intensity volumes), 4 I/O error.
"""

import argparse
import json
import platform
import statistics
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .io import VolumeFormatError, load_volume, save_volume
from .metrics import mse, smpi
from .obnlm import ObnlmParams, effective_threads, filter_obnlm, filter_obnlm_reference
from .speckle import PHANTOM_KINDS, PhantomSpec, SpeckleParams, apply_speckle, generate_phantom
from .volume import Volume3D, VolumeError, rescale_unit

SCHEMA_VERSION = 1

# config-file keys each subcommand accepts (other known keys are skipped so
# one file can drive a whole pipeline; unknown keys are rejected)
_CONFIG_KEYS = {
    "synth": {
        "kind", "dims", "level", "low", "high", "axis", "position", "center",
        "radius", "sigma", "gamma", "seed", "spacing",
    },
    "despeckle": {
        "block-radius", "search-radius", "block-step", "h", "gamma", "eps",
        "mode", "threads", "impl", "rescale",
    },
    "eval": {"metric"},
    "bench": {
        "block-radius", "search-radius", "block-step", "h", "gamma", "eps",
        "mode", "threads", "repeat", "rescale",
    },
}
_SWITCH_KEYS = {"rescale"}
_ALL_CONFIG_KEYS = set().union(*_CONFIG_KEYS.values())


def _report(obj):
    print(json.dumps(obj))


def _diag(message):
    print(f"despeckle3d: {message}", file=sys.stderr)


def _machine_descriptor():
    import os

    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
    }


def _parse_config_file(path):
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"invalid config line {lineno}: {line!r}")
        entries.append((key.strip().replace("_", "-"), value.strip()))
    return entries


def _config_argv(entries, command):
    """Turn config entries into argv flags placed before the user's flags.

    argparse keeps the last occurrence of a repeated option, so explicit
    command-line flags override the config.
    """
    allowed = _CONFIG_KEYS[command]
    argv = []
    for key, value in entries:
        if key not in _ALL_CONFIG_KEYS:
            raise ValueError(f"unknown config key: {key}")
        if key not in allowed:
            continue
        if key in _SWITCH_KEYS:
            lowered = value.lower()
            if lowered in ("1", "true", "yes", "on"):
                argv.append(f"--{key}")
            elif lowered not in ("0", "false", "no", "off"):
                raise ValueError(f"config key {key} expects a boolean, got {value!r}")
        else:
            argv.append(f"--{key}")
            argv.extend(value.split())
    return argv


def _apply_config(argv):
    if not argv or argv[0].startswith("-"):
        return argv
    command = argv[0]
    rest = argv[1:]
    config_path = None
    for i, token in enumerate(rest):
        if token == "--config":
            if i + 1 >= len(rest):
                raise ValueError("--config requires a path")
            config_path = rest[i + 1]
        elif token.startswith("--config="):
            config_path = token.split("=", 1)[1]
    if config_path is None or command not in _CONFIG_KEYS:
        return argv
    entries = _parse_config_file(config_path)
    return [command] + _config_argv(entries, command) + rest


def _require_exists(path):
    path = Path(path)
    if not path.exists():
        raise ValueError(f"input path not found: {path}")
    return path


def _obnlm_params(args) -> ObnlmParams:
    return ObnlmParams(
        block_radius=args.block_radius,
        search_radius=args.search_radius,
        block_step=args.block_step,
        h=args.h,
        gamma=args.gamma,
        eps=args.eps,
        mode=args.mode,
    )


def _add_obnlm_arguments(parser):
    parser.add_argument("--block-radius", type=int, default=1, help="block half-extent (side 2r+1)")
    parser.add_argument("--search-radius", type=int, default=3, help="search window half-width in center offsets")
    parser.add_argument("--block-step", type=int, default=1, help="stride between block centers")
    parser.add_argument("--h", type=float, default=0.4, help="smoothing strength")
    parser.add_argument("--gamma", type=float, default=0.5, help="noise-model exponent")
    parser.add_argument("--eps", type=float, default=1e-6, help="distance denominator guard")
    parser.add_argument("--mode", choices=("slice2d", "full3d"), default="slice2d")
    parser.add_argument("--rescale", action="store_true",
                        help="map intensities to [0, 1] before filtering and invert afterwards")
    parser.add_argument("--config", help="key = value parameter file; flags override")


def _list_volumes(directory):
    headers = sorted(Path(directory).glob("*.mhd"))
    if not headers:
        raise ValueError(f"no .mhd volumes found in {directory}")
    return headers


# ---------------------------------------------------------------- synth

def _cmd_synth(args) -> int:
    spec = PhantomSpec(
        kind=args.kind,
        dims=tuple(args.dims),
        level=args.level,
        low=args.low,
        high=args.high,
        axis=args.axis,
        position=args.position,
        center=tuple(args.center) if args.center is not None else None,
        radius=args.radius,
    )
    noise = SpeckleParams(sigma=args.sigma, gamma=args.gamma, seed=args.seed)
    spacing = tuple(args.spacing)

    clean = Volume3D(generate_phantom(spec).data, spacing)
    speckled = None if args.clean_only else apply_speckle(clean, noise)

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {"clean": str(save_volume(clean, out_dir / "clean.mhd"))}
    if speckled is not None:
        files["speckled"] = str(save_volume(speckled, out_dir / "speckled.mhd"))

    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "command": "synth",
        "phantom": {k: v for k, v in asdict(spec).items() if v is not None},
        "noise": asdict(noise),
        "spacing": spacing,
        "files": files,
    }
    (out_dir / "params.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    _report(sidecar)
    return 0


# ------------------------------------------------------------ despeckle

def _despeckle_one(volume, params, args):
    if args.rescale:
        scaled, lo, hi = rescale_unit(volume)
    else:
        scaled, lo, hi = volume, 0.0, 1.0

    start = time.perf_counter()
    if args.impl == "reference":
        filtered = filter_obnlm_reference(scaled, params)
    else:
        filtered = filter_obnlm(scaled, params, threads=args.threads)
    wall = time.perf_counter() - start

    if args.rescale:
        filtered = Volume3D(filtered.data * (hi - lo) + lo, filtered.spacing)
    return filtered, wall


def _cmd_despeckle(args) -> int:
    params = _obnlm_params(args)
    in_path = _require_exists(args.input)
    out_path = Path(args.output)

    if in_path.is_dir():
        pairs = [(h, out_path / h.name) for h in _list_volumes(in_path)]
        out_path.mkdir(parents=True, exist_ok=True)
    else:
        pairs = [(in_path, out_path)]
        out_path.parent.mkdir(parents=True, exist_ok=True)

    for src, dst in pairs:
        volume = load_volume(src)
        filtered, wall = _despeckle_one(volume, params, args)
        save_volume(filtered, dst)
        _report({
            "schema_version": SCHEMA_VERSION,
            "command": "despeckle",
            "input": str(src),
            "output": str(dst),
            "impl": args.impl,
            "threads": args.threads if args.impl == "optimized" else 1,
            "rescale": bool(args.rescale),
            "wall_seconds": wall,
            "params": asdict(params),
        })
    return 0


# ----------------------------------------------------------------- eval

def _eval_pair(metric, original, filtered):
    if metric == "smpi":
        # compare on a common [0, 1] scale fixed by the original volume
        lo = float(original.data.min())
        hi = float(original.data.max())
        if hi == lo:
            raise VolumeError("degenerate original: constant intensities cannot be rescaled")
        scale = hi - lo
        original = Volume3D((original.data - lo) / scale, original.spacing)
        filtered = Volume3D((filtered.data - lo) / scale, filtered.spacing)
        return smpi(original, filtered).to_dict()
    return {"mse": mse(original, filtered)}


def _cmd_eval(args) -> int:
    orig_path = _require_exists(args.original)
    filt_path = _require_exists(args.filtered)

    if orig_path.is_dir() != filt_path.is_dir():
        raise ValueError("original and filtered must both be files or both be directories")

    if orig_path.is_dir():
        orig_names = {h.name for h in _list_volumes(orig_path)}
        filt_names = {h.name for h in _list_volumes(filt_path)}
        common = sorted(orig_names & filt_names)
        if not common:
            raise ValueError("no matching .mhd volume names between the two directories")
        pairs = [(orig_path / name, filt_path / name) for name in common]
    else:
        pairs = [(orig_path, filt_path)]

    key = "smpi" if args.metric == "smpi" else "mse"
    values = []
    for orig_file, filt_file in pairs:
        result = _eval_pair(args.metric, load_volume(orig_file), load_volume(filt_file))
        values.append(result[key])
        _report({
            "schema_version": SCHEMA_VERSION,
            "command": "eval",
            "metric": args.metric,
            "original": str(orig_file),
            "filtered": str(filt_file),
            **result,
        })
    if len(pairs) > 1:
        mean = sum(values) / len(values)
        std = (sum((x - mean) ** 2 for x in values) / len(values)) ** 0.5
        _report({
            "schema_version": SCHEMA_VERSION,
            "command": "eval",
            "metric": args.metric,
            "count": len(values),
            "mean": mean,
            "std": std,
        })
    return 0


# ---------------------------------------------------------------- bench

def _cmd_bench(args) -> int:
    if args.repeat < 1:
        raise ValueError(f"repeat must be at least 1, got {args.repeat}")
    params = _obnlm_params(args)
    in_path = _require_exists(args.input)
    volume = load_volume(in_path)
    if args.rescale:
        volume, _, _ = rescale_unit(volume)

    # compile both implementations on a small crop so timings exclude jit
    # cost; the crop must still fit one block plus the mirror pad
    pad = params.block_radius + params.search_radius * params.block_step
    warm_dims = tuple(min(n, max(12, pad + 1)) for n in volume.dims)
    warm = Volume3D(np.ascontiguousarray(
        volume.data[:warm_dims[0], :warm_dims[1], :warm_dims[2]]))
    filter_obnlm_reference(warm, params)
    filter_obnlm(warm, params, threads=1)

    start = time.perf_counter()
    filter_obnlm_reference(volume, params)
    reference_seconds = time.perf_counter() - start

    optimized = []
    for threads in args.threads:
        runs = []
        for _ in range(args.repeat):
            start = time.perf_counter()
            filter_obnlm(volume, params, threads=threads)
            runs.append(time.perf_counter() - start)
        median = statistics.median(runs)
        optimized.append({
            "threads": threads,
            "effective_threads": effective_threads(threads),
            "median_wall_seconds": median,
            "speedup": reference_seconds / median,
        })

    _report({
        "schema_version": SCHEMA_VERSION,
        "command": "bench",
        "input": str(in_path),
        "dims": volume.dims,
        "repeat": args.repeat,
        "machine": _machine_descriptor(),
        "params": asdict(params),
        "reference": {"wall_seconds": reference_seconds},
        "optimized": optimized,
    })
    return 0


# --------------------------------------------------------------- parser

def _threads_list(raw):
    return [int(part) for part in raw.split(",") if part]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="despeckle3d",
        description="3D ultrasound speckle reduction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a clean/speckled phantom pair")
    synth.add_argument("--kind", choices=PHANTOM_KINDS, required=True)
    synth.add_argument("--dims", type=int, nargs=3, required=True, metavar=("NX", "NY", "NZ"))
    synth.add_argument("--level", type=float, default=0.5, help="constant phantom level")
    synth.add_argument("--low", type=float, default=0.25, help="low region / background / ramp start")
    synth.add_argument("--high", type=float, default=0.75, help="high region / inclusion / ramp end")
    synth.add_argument("--axis", type=int, default=0, help="split or ramp axis")
    synth.add_argument("--position", type=int, default=None, help="two-region split index")
    synth.add_argument("--center", type=float, nargs=3, default=None, help="inclusion center (voxels)")
    synth.add_argument("--radius", type=float, default=0.0, help="inclusion radius (voxels)")
    synth.add_argument("--sigma", type=float, default=0.2, help="noise std")
    synth.add_argument("--gamma", type=float, default=0.5, help="noise-model exponent")
    synth.add_argument("--seed", type=int, default=0, help="noise RNG seed")
    synth.add_argument("--spacing", type=float, nargs=3, default=(1.0, 1.0, 1.0))
    synth.add_argument("--clean-only", action="store_true", help="skip the speckled volume")
    synth.add_argument("--config", help="key = value parameter file; flags override")
    synth.add_argument("-o", "--output", required=True, help="output directory")
    synth.set_defaults(handler=_cmd_synth)

    despeckle = sub.add_parser("despeckle", help="filter a volume or a directory of volumes")
    despeckle.add_argument("input", help="volume header or directory of volumes")
    despeckle.add_argument("-o", "--output", required=True, help="output header or directory")
    despeckle.add_argument("--impl", choices=("reference", "optimized"), default="optimized")
    despeckle.add_argument("--threads", type=int, default=1)
    _add_obnlm_arguments(despeckle)
    despeckle.set_defaults(handler=_cmd_despeckle)

    evaluate = sub.add_parser("eval", help="score filtered volumes against originals")
    evaluate.add_argument("--metric", choices=("smpi", "mse"), required=True)
    evaluate.add_argument("original", help="original volume or directory")
    evaluate.add_argument("filtered", help="filtered volume or directory")
    evaluate.add_argument("--config", help="key = value parameter file; flags override")
    evaluate.set_defaults(handler=_cmd_eval)

    bench = sub.add_parser("bench", help="time the reference and optimized filters")
    bench.add_argument("input", help="volume header")
    bench.add_argument("--repeat", type=int, default=3, help="optimized runs per thread count")
    bench.add_argument("--threads", type=_threads_list, default=[1],
                       help="comma-separated thread counts, e.g. 1,4")
    _add_obnlm_arguments(bench)
    bench.set_defaults(handler=_cmd_bench)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        argv = _apply_config(argv)
        args = _build_parser().parse_args(argv)
        return args.handler(args)
    except VolumeError as exc:
        _diag(exc)
        return 3
    except VolumeFormatError as exc:
        _diag(exc)
        return 4
    except OSError as exc:
        _diag(exc)
        return 4
    except ValueError as exc:
        _diag(exc)
        return 2


def entrypoint():
    raise SystemExit(main())
