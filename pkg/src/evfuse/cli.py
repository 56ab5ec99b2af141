"""Command-line front end for the evfuse toolkit.

Conventions shared by every subcommand:

* exit status is 0 on success, 1 for usage errors, 2 for data/format errors;
* results go to stdout (or to files named by ``-o``/``--out-dir``);
* diagnostics are single-line JSON records on stderr, e.g.
  ``{"level": "warning", "msg": "..."}`` — never free-form prose;
* report JSON is serialized with sorted keys so identical inputs produce
  byte-identical bytes; ``--no-meta`` drops the provenance block (tool
  version, creation time, input paths) from reports that carry one.

The ``pipeline`` subcommand accepts ``--config FILE`` with a JSON object of
option defaults (keys match the long flag names with ``-`` replaced by
``_``); explicit command-line flags always win over config values.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import alignment, codec, frames, geometry, labels, optics, rate, sync, synth
from .alignment import AlignmentError
from .geometry import GeometryError
from .rate import RateError
from .streams import EventStream, StreamHeader, StreamError, validate_stream
from .sync import TooFewExposures
from .synth import InvalidSpec

OK = 0
USAGE_ERROR = 1
DATA_ERROR = 2

# Exceptions that mean "the inputs were bad", not "the invocation was bad".
_DATA_ERRORS = (
    StreamError,
    TooFewExposures,
    GeometryError,
    AlignmentError,
    RateError,
    InvalidSpec,
    OSError,
    ValueError,  # malformed CSV/JSON payloads (includes json.JSONDecodeError)
    KeyError,  # missing JSON fields / unknown preset names
)


def _diag(level: str, msg: str, **fields) -> None:
    """Write one single-line JSON diagnostic record to stderr."""
    rec = {"level": level, "msg": msg}
    rec.update(fields)
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(obj, path: str | None) -> None:
    """Write a JSON document to stdout or, when given, to ``path``."""
    text = _dump_json(obj)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_text(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _meta(**inputs) -> dict:
    clean = {k: v for k, v in inputs.items() if v is not None}
    return {
        "tool": f"evfuse {__version__}",
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "inputs": clean,
    }


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; this tool reserves 2 for
    data errors, so usage failures are remapped to status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        _diag("error", message, kind="usage")
        raise SystemExit(USAGE_ERROR)


def _usage_fail(message: str) -> "SystemExit":
    _diag("error", message, kind="usage")
    return SystemExit(USAGE_ERROR)


# -- small input parsers -----------------------------------------------------


def _parse_pair(text: str, name: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise _usage_fail(f"{name} expects 'X,Y', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise _usage_fail(f"{name} expects numbers, got {text!r}") from None


def _parse_wh(text: str, name: str) -> tuple:
    parts = text.lower().split("x")
    try:
        w, h = int(parts[0]), int(parts[1])
        if w <= 0 or h <= 0 or len(parts) != 2:
            raise ValueError
        return w, h
    except (ValueError, IndexError):
        raise _usage_fail(f"{name} expects 'WIDTHxHEIGHT', got {text!r}") from None


def _parse_custom_window(text: str) -> sync.CustomWindow:
    parts = text.split(":")
    if len(parts) != 3:
        raise _usage_fail(f"--custom expects 'anchor:pre_us:post_us', got {text!r}")
    try:
        return sync.CustomWindow(parts[0], int(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise _usage_fail(str(exc)) from None


def _parse_method(name: str) -> sync.SyncMethod:
    try:
        return sync.parse_method(name)
    except ValueError as exc:
        raise _usage_fail(str(exc)) from None


def _read_points_csv(path: str):
    """Correspondence CSV: ``src_x,src_y,dst_x,dst_y`` per line, one
    tolerated header line, ``#`` comments and blank lines skipped."""
    src, dst = [], []
    first_data_seen = False
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            if len(parts) < 4:
                raise ValueError
            vals = [float(v) for v in parts[:4]]
        except ValueError:
            if not first_data_seen:
                first_data_seen = True  # tolerated header line
                continue
            raise ValueError(f"points CSV line {line_no}: cannot parse {raw!r}") from None
        first_data_seen = True
        src.append(vals[0:2])
        dst.append(vals[2:4])
    if not src:
        raise ValueError(f"points CSV {path!r} contains no correspondences")
    return np.asarray(src, dtype=np.float64), np.asarray(dst, dtype=np.float64)


def _load_stream(path: str) -> EventStream:
    return codec.read_esf(path)


def _windows_from_args(stream: EventStream, args) -> list:
    """Shared window-construction logic for accumulate/pipeline."""
    if getattr(args, "windows", None):
        return sync.read_windows_csv(Path(args.windows).read_text(encoding="utf-8"))
    pairing = sync.triggers_to_exposures(stream.triggers, channel=args.channel)
    for a in pairing.anomalies:
        _diag("warning", "unpaired trigger edge", **a.to_json())
    if not pairing.exposures:
        raise TooFewExposures("no exposures found on the selected trigger channel")
    method = _parse_custom_window(args.custom) if getattr(args, "custom", None) else _parse_method(args.method)
    return sync.windows(pairing.exposures, method)


# -- subcommands -------------------------------------------------------------


def cmd_decode(args) -> int:
    stream = _load_stream(args.esf)
    _write_text(codec.write_csv(stream), args.csv)
    _diag(
        "info",
        "decoded stream",
        n_events=int(stream.events.shape[0]),
        n_triggers=int(stream.triggers.shape[0]),
        width=stream.header.width,
        height=stream.header.height,
    )
    return OK


def cmd_encode(args) -> int:
    text = Path(args.csv).read_text(encoding="utf-8")
    stream = codec.parse_csv(text, args.width, args.height)
    n_bytes = codec.write_esf(args.out, stream)
    _diag(
        "info",
        "encoded stream",
        n_events=int(stream.events.shape[0]),
        n_triggers=int(stream.triggers.shape[0]),
        n_bytes=n_bytes,
    )
    return OK


def cmd_info(args) -> int:
    stream = _load_stream(args.esf)
    ev, tr = stream.events, stream.triggers
    times = stream.merged_times()
    doc = {
        "width": stream.header.width,
        "height": stream.header.height,
        "n_events": int(ev.shape[0]),
        "n_triggers": int(tr.shape[0]),
        "t_first_us": int(times[0]) if times.size else None,
        "t_last_us": int(times[-1]) if times.size else None,
        "duration_us": int(times[-1] - times[0]) if times.size else 0,
        "file_bytes": Path(args.esf).stat().st_size,
    }
    _emit(doc, args.out)
    return OK


def cmd_validate(args) -> int:
    stream = _load_stream(args.esf)
    report = validate_stream(stream)
    _emit(report.to_json(), args.out)
    if not report.ok:
        _diag("error", "stream has structural findings", counts=report.counts())
        return DATA_ERROR
    return OK


def cmd_sync(args) -> int:
    stream = _load_stream(args.esf)
    pairing = sync.triggers_to_exposures(stream.triggers, channel=args.channel)
    for a in pairing.anomalies:
        _diag("warning", "unpaired trigger edge", **a.to_json())
    if args.exposures_out:
        Path(args.exposures_out).write_text(sync.write_exposures_csv(pairing.exposures), encoding="utf-8")
    method = _parse_custom_window(args.custom) if args.custom else _parse_method(args.method)
    wins = sync.windows(pairing.exposures, method)
    counts = sync.window_counts(stream.events, wins)
    _write_text(sync.write_windows_csv(wins), args.out)
    _diag(
        "info",
        "built sync windows",
        n_exposures=len(pairing.exposures),
        n_windows=len(wins),
        n_events_assigned=int(counts.sum()),
    )
    return OK


def cmd_accumulate(args) -> int:
    stream = _load_stream(args.esf)
    wins = _windows_from_args(stream, args)
    width, height = stream.header.width, stream.header.height
    out_dir = Path(args.out_dir)
    (out_dir).mkdir(parents=True, exist_ok=True)
    per_window = sync.assign_events(stream.events, wins)
    entries = []
    for w, sub in zip(wins, per_window):
        acc = frames.accumulate(sub, width, height, args.mode)
        image = frames.render_gray(acc, args.mode, args.clip)
        path = out_dir / f"frame_{w.frame_id}.{args.format}"
        frames.write_image(str(path), image)
        entries.append(
            {
                "frame_id": w.frame_id,
                "window": {"t0": w.t0, "t1": w.t1},
                "n_events": int(sub.shape[0]),
                "path": str(path),
            }
        )
    _emit({"mode": args.mode, "frames": entries}, args.out)
    return OK


def cmd_calibrate(args) -> int:
    src, dst = _read_points_csv(args.points)
    if args.no_ransac:
        h = geometry.estimate_homography(src, dst)
        mask = None
    else:
        h, mask = geometry.estimate_homography_ransac(
            src,
            dst,
            threshold_px=args.threshold_px,
            max_iterations=args.iterations,
            confidence=args.confidence,
            seed=args.seed,
            min_inliers=args.min_inliers,
        )
    report = geometry.reprojection_stats(h, src, dst, mask)
    if args.out:
        geometry.save_homography(args.out, h)
    doc = {"homography": geometry.homography_to_json(h)["h"], "report": report.to_json()}
    _emit(doc, args.report_out)
    return OK


def cmd_verify(args) -> int:
    ref = frames.read_image(args.reference).astype(np.float64)
    tgt = frames.read_image(args.target).astype(np.float64)
    if args.mode == "edges":
        res = alignment.edge_deviation(
            ref, tgt, args.radius, args.margin, smooth_sigma=args.smooth_sigma
        )
    elif args.mode == "intensity":
        res = alignment.match_deviation(ref, tgt, args.radius, args.margin, args.smooth_sigma)
    else:  # activity: reference is an accumulated event frame
        res = alignment.event_frame_deviation(
            ref, tgt, args.radius, args.margin, smooth_sigma=args.smooth_sigma
        )
    _emit(res.to_json(), args.out)
    return OK


def cmd_rate(args) -> int:
    stream = _load_stream(args.esf)
    report = rate.rate_report(
        stream, encoding=args.encoding, bin_us=args.bin_us, saturation_evps=args.saturation_evps
    )
    if report.saturated:
        _diag("warning", "stream exceeds the saturation rate in some bins", n_bins=len(report.saturated_bins))
    if args.series_out:
        series = rate.rate_series(stream.events, args.bin_us)
        lines = ["bin_start_us,count"]
        lines += [
            f"{(series.start_bin + i) * series.bin_us},{int(c)}" for i, c in enumerate(series.counts)
        ]
        Path(args.series_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _emit(report.to_json(), args.out)
    return OK


def cmd_erc(args) -> int:
    stream = _load_stream(args.esf)
    cfg = rate.ErcConfig(cap_evps=args.cap_evps, period_us=args.period_us)
    kept = rate.erc_filter(stream.events, cfg)
    filtered = EventStream(stream.header, kept, stream.triggers)
    n_bytes = codec.write_esf(args.out, filtered)
    doc = {
        "n_in": int(stream.events.shape[0]),
        "n_out": int(kept.shape[0]),
        "n_dropped": int(stream.events.shape[0] - kept.shape[0]),
        "cap_evps": args.cap_evps,
        "period_us": args.period_us,
        "out_bytes": n_bytes,
    }
    _emit(doc, None)
    return OK


def cmd_optics(args) -> int:
    if args.list:
        _emit(optics.load_presets(), args.out)
        return OK

    sensor = None
    if args.sensor:
        try:
            sensor = optics.get_sensor(args.sensor)
        except KeyError:
            raise _usage_fail(f"unknown sensor preset {args.sensor!r}") from None
    elif args.pitch_um:
        if args.size:
            w, h = _parse_wh(args.size, "--size")
        else:
            w, h = 1, 1  # extent math needs only the pitch
        sensor = optics.SensorSpec(w, h, args.pitch_um)

    if args.object_m is not None:
        if args.distance_m is None or args.focal_mm is None or sensor is None:
            raise _usage_fail("extent mode needs --object-m, --distance-m, --focal-mm and a sensor (--sensor or --pitch-um)")
        px = optics.object_extent_px(args.object_m, args.distance_m, args.focal_mm, sensor.pitch_um)
        print(f"{px:.2f} px")
        if px < optics.MIN_DETECTABLE_PX:
            _diag(
                "warning",
                "object spans fewer pixels than the detectability floor",
                extent_px=round(px, 3),
                min_px=optics.MIN_DETECTABLE_PX,
            )
        return OK

    if args.fov:
        if args.focal_mm is None or sensor is None or sensor.width <= 1:
            raise _usage_fail("fov mode needs --focal-mm and a full sensor (--sensor or --pitch-um with --size)")
        _emit(optics.field_of_view(sensor, args.focal_mm).to_json(), args.out)
        return OK

    if args.crop:
        if sensor is None:
            raise _usage_fail("crop mode needs a target sensor (--sensor)")
        try:
            reference = optics.get_sensor(args.reference)
        except KeyError:
            raise _usage_fail(f"unknown sensor preset {args.reference!r}") from None
        ratio = optics.crop_factor(reference, sensor)
        doc = {"reference": args.reference, "target": args.sensor, "crop_factor": round(ratio, 4)}
        if args.focal_mm is not None:
            doc["focal_mm"] = args.focal_mm
            doc["effective_focal_mm"] = round(optics.effective_focal(args.focal_mm, ratio), 2)
        _emit(doc, args.out)
        return OK

    raise _usage_fail("choose a mode: --object-m …, --fov, --crop, or --list")


def _spec_from_args(args) -> synth.SceneSpec:
    kwargs = dict(
        width=args.width,
        height=args.height,
        pattern=args.pattern,
        pattern_size=args.pattern_size,
        velocity=_parse_pair(args.velocity, "--velocity"),
        duration_s=args.duration_s,
        background=args.background,
        foreground=args.foreground,
        contrast=args.contrast,
        fps=args.fps,
        exposure_us=args.exposure_us,
        dt_us=args.dt_us,
        seed=args.seed,
    )
    if args.start:
        kwargs["start"] = _parse_pair(args.start, "--start")
    return synth.SceneSpec(**kwargs)


def _write_scene(out_dir: Path, result: synth.SceneResult) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    n_bytes = codec.write_esf(str(out_dir / "events.esf"), result.stream)
    (out_dir / "exposures.csv").write_text(sync.write_exposures_csv(result.exposures), encoding="utf-8")
    frame_dir = out_dir / "frames"
    frame_dir.mkdir(exist_ok=True)
    for i in range(result.frames.shape[0]):
        frames.write_pgm(str(frame_dir / f"frame_{i}.pgm"), result.frames[i])
    labels.write_labels_json(str(out_dir / "labels.json"), result.labels)
    geometry.save_homography(str(out_dir / "homography.json"), result.homography)
    return {
        "dir": str(out_dir),
        "n_events": int(result.stream.events.shape[0]),
        "n_triggers": int(result.stream.triggers.shape[0]),
        "n_frames": int(result.frames.shape[0]),
        "n_labels": len(result.labels),
        "esf_bytes": n_bytes,
    }


def cmd_synth(args) -> int:
    spec = _spec_from_args(args)
    result = synth.gen_scene(spec)
    summary = {"scene": _write_scene(Path(args.out_dir), result)}

    h = None
    if args.homography:
        h = geometry.load_homography(args.homography)
    elif args.translate:
        dx, dy = _parse_pair(args.translate, "--translate")
        h = np.array([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]])
    if h is not None:
        if not args.warped_dir:
            raise _usage_fail("--homography/--translate needs --warped-dir for the second view")
        warped = synth.warp_view(spec, h)
        summary["warped"] = _write_scene(Path(args.warped_dir), warped)

    # Reproducibility: record the generating parameters next to the data.
    spec_doc = {k: getattr(spec, k) for k in (
        "width", "height", "pattern", "pattern_size", "velocity", "duration_s",
        "background", "foreground", "contrast", "fps", "exposure_us", "dt_us", "seed", "start",
    )}
    spec_doc["velocity"] = list(spec_doc["velocity"])
    if spec_doc["start"] is not None:
        spec_doc["start"] = list(spec_doc["start"])
    Path(args.out_dir, "scene.json").write_text(_dump_json(spec_doc), encoding="utf-8")

    _emit(summary, args.out)
    return OK


def cmd_label_transfer(args) -> int:
    boxes = labels.read_labels_json(args.labels)
    h = geometry.load_homography(args.homography)
    if args.invert:
        h = np.linalg.inv(h)
    out_boxes = labels.transfer_boxes(h, boxes)
    if args.clip:
        w, hgt = _parse_wh(args.clip, "--clip")
        clipped = [labels.clip_box(b, w, hgt) for b in out_boxes]
        dropped = sum(1 for b in clipped if b is None)
        out_boxes = [b for b in clipped if b is not None]
        if dropped:
            _diag("warning", "boxes fell entirely outside the target canvas", n_dropped=dropped)
    labels.write_labels_json(args.out, out_boxes)
    _emit({"n_in": len(boxes), "n_out": len(out_boxes), "out": args.out}, None)
    return OK


# -- pipeline ----------------------------------------------------------------

_PIPELINE_DEFAULTS = {
    "frames_dir": None,
    "labels": None,
    "homography": None,
    "points": None,
    "invert_homography": False,
    "method": "m3",
    "channel": 0,
    "custom": None,
    "mode": "polarity",
    "clip": frames.DEFAULT_CLIP,
    "erc_cap_evps": None,
    "erc_period_us": rate.DEFAULT_ERC_PERIOD_US,
    "encoding": "esf1",
    "bin_us": rate.DEFAULT_BIN_US,
    "radius": 16,
    "margin": 32,
    "smooth_sigma": 2.0,
    "threshold_px": 2.0,
    "seed": 0,
    "jobs": 1,
}


def _resolve_pipeline_options(args) -> dict:
    """Merge defaults < config file < explicit flags (flags win)."""
    config = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = sorted(set(config) - set(_PIPELINE_DEFAULTS))
        if unknown:
            raise _usage_fail(f"unknown config keys: {', '.join(unknown)}")
    opts = {}
    for key, default in _PIPELINE_DEFAULTS.items():
        flag = getattr(args, key)
        if flag is not None:
            opts[key] = flag
        elif key in config:
            opts[key] = config[key]
        else:
            opts[key] = default
    return opts


def cmd_pipeline(args) -> int:
    opts = _resolve_pipeline_options(args)
    stream = _load_stream(args.events)
    width, height = stream.header.width, stream.header.height

    if opts["erc_cap_evps"]:
        cfg = rate.ErcConfig(cap_evps=int(opts["erc_cap_evps"]), period_us=int(opts["erc_period_us"]))
        kept = rate.erc_filter(stream.events, cfg)
        dropped = int(stream.events.shape[0] - kept.shape[0])
        if dropped:
            _diag("warning", "rate controller dropped events", n_dropped=dropped, cap_evps=cfg.cap_evps)
        stream = EventStream(stream.header, kept, stream.triggers)

    # Windows from the trigger channel (or an explicit windows CSV).
    ns = argparse.Namespace(
        windows=args.windows, channel=int(opts["channel"]), custom=opts["custom"], method=opts["method"]
    )
    wins = _windows_from_args(stream, ns)
    per_window = sync.assign_events(stream.events, wins)

    # Homography mapping RGB-frame coordinates into event coordinates.
    h = None
    calibration = None
    if opts["homography"]:
        h = geometry.load_homography(str(opts["homography"]))
        if opts["invert_homography"]:
            h = np.linalg.inv(h)
    elif opts["points"]:
        src, dst = _read_points_csv(str(opts["points"]))
        h, mask = geometry.estimate_homography_ransac(
            src, dst, threshold_px=float(opts["threshold_px"]), seed=int(opts["seed"])
        )
        calibration = geometry.reprojection_stats(h, src, dst, mask).to_json()

    rgb_boxes = {}
    if opts["labels"]:
        if h is None:
            raise _usage_fail("--labels needs a homography (--homography or --points)")
        for box in labels.read_labels_json(str(opts["labels"])):
            rgb_boxes.setdefault(box.frame_id, []).append(box)

    out_dir = Path(args.out_dir)
    frame_dir = out_dir / "frames"
    frame_dir.mkdir(parents=True, exist_ok=True)
    frames_dir = Path(str(opts["frames_dir"])) if opts["frames_dir"] else None

    def _one(pair):
        w, sub = pair
        activity = frames.accumulate(sub, width, height, "count")
        render_acc = activity if opts["mode"] == "count" else frames.accumulate(sub, width, height, opts["mode"])
        image = frames.render_gray(render_acc, opts["mode"], int(opts["clip"]))
        frames.write_pgm(str(frame_dir / f"frame_{w.frame_id}.pgm"), image)

        entry = {
            "frame_id": w.frame_id,
            "window": {"t0": w.t0, "t1": w.t1},
            "n_events": int(sub.shape[0]),
            "labels_out": [],
        }

        rgb = None
        if frames_dir is not None:
            rgb_path = frames_dir / f"frame_{w.frame_id}.pgm"
            if rgb_path.exists():
                rgb = frames.read_image(str(rgb_path)).astype(np.float64)
            else:
                _diag("warning", "no RGB frame for window", frame_id=w.frame_id, path=str(rgb_path))
        if rgb is not None:
            target = rgb if h is None else geometry.warp_image(h, rgb, out_shape=(height, width))
            try:
                res = alignment.event_frame_deviation(
                    activity,
                    target,
                    search_radius=int(opts["radius"]),
                    margin=int(opts["margin"]),
                    smooth_sigma=float(opts["smooth_sigma"]),
                )
                entry["deviation_px"] = round(res.deviation, 3)
                entry["offset"] = {"dx": round(res.dx, 3), "dy": round(res.dy, 3), "score": round(res.score, 4)}
            except AlignmentError as exc:
                _diag("warning", "alignment check unusable for frame", frame_id=w.frame_id, reason=str(exc))

        for box in rgb_boxes.get(w.frame_id, ()):
            moved = labels.clip_box(labels.transfer_box(h, box), width, height)
            if moved is not None:
                entry["labels_out"].append(moved.to_json())
        return entry

    jobs = max(1, int(opts["jobs"]))
    work = list(zip(wins, per_window))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_one, work))  # map() preserves frame order
    else:
        entries = [_one(p) for p in work]

    all_boxes = [labels.BoundingBox.from_json(b) for e in entries for b in e["labels_out"]]
    if rgb_boxes:
        labels.write_labels_json(str(out_dir / "labels.json"), all_boxes)

    summary = {
        "frames": entries,
        "rate": rate.rate_report(stream, encoding=str(opts["encoding"]), bin_us=int(opts["bin_us"])).to_json(),
    }
    if calibration is not None:
        summary["calibration"] = calibration
    deviations = [e["deviation_px"] for e in entries if "deviation_px" in e]
    if deviations:
        summary["deviation_median_px"] = round(float(np.median(deviations)), 3)
    if not args.no_meta:
        summary["meta"] = _meta(events=args.events, frames_dir=opts["frames_dir"], labels=opts["labels"])

    text = _dump_json(summary)
    (out_dir / "summary.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evfuse", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"evfuse {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    p = add("decode", cmd_decode, "decode an ESF-1 file to debug CSV")
    p.add_argument("esf", help="input .esf file")
    p.add_argument("--csv", default=None, metavar="PATH", help="CSV output path (default: stdout)")

    p = add("encode", cmd_encode, "encode debug CSV back into an ESF-1 file")
    p.add_argument("--csv", required=True, metavar="PATH", help="CSV input path")
    p.add_argument("--width", type=int, required=True, help="sensor width in pixels")
    p.add_argument("--height", type=int, required=True, help="sensor height in pixels")
    p.add_argument("-o", "--out", required=True, help="output .esf path")

    p = add("info", cmd_info, "print stream geometry, counts, and time span as JSON")
    p.add_argument("esf")
    p.add_argument("-o", "--out", default=None)

    p = add("validate", cmd_validate, "check time order, bounds, and trigger pairing")
    p.add_argument("esf")
    p.add_argument("-o", "--out", default=None)

    p = add("sync", cmd_sync, "pair trigger edges into exposures and build event windows")
    p.add_argument("esf")
    p.add_argument("--method", default="m3", help="m1|m2|m3|m4 or exposure|frame_leading|centered|midpoint")
    p.add_argument("--custom", default=None, metavar="ANCHOR:PRE:POST", help="custom window, e.g. midpoint:5000:5000")
    p.add_argument("--channel", type=int, default=0, help="trigger channel (default 0)")
    p.add_argument("--exposures-out", default=None, metavar="CSV", help="also write the exposure table")
    p.add_argument("-o", "--out", default=None, help="windows CSV output (default: stdout)")

    p = add("accumulate", cmd_accumulate, "accumulate events into per-frame images")
    p.add_argument("esf")
    p.add_argument("--windows", default=None, metavar="CSV", help="window CSV (frame_id,t0_us,t1_us)")
    p.add_argument("--method", default="m3", help="sync method when --windows is not given")
    p.add_argument("--custom", default=None, metavar="ANCHOR:PRE:POST")
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--mode", default="polarity", choices=["count", "polarity", "binary"])
    p.add_argument("--clip", type=int, default=frames.DEFAULT_CLIP, help="full-scale event count for rendering")
    p.add_argument("--format", default="pgm", choices=["pgm", "png"])
    p.add_argument("-d", "--out-dir", required=True, help="directory for frame_<id> images")
    p.add_argument("-o", "--out", default=None, help="summary JSON (default: stdout)")

    p = add("calibrate", cmd_calibrate, "fit a homography to point correspondences")
    p.add_argument("--points", required=True, metavar="CSV", help="src_x,src_y,dst_x,dst_y per line")
    p.add_argument("--no-ransac", action="store_true", help="plain least-squares fit on all points")
    p.add_argument("--threshold-px", type=float, default=2.0)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--confidence", type=float, default=0.999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-inliers", type=int, default=5)
    p.add_argument("-o", "--out", default=None, metavar="H.json", help="write the fitted homography")
    p.add_argument("--report-out", default=None, help="report JSON (default: stdout)")

    p = add("verify", cmd_verify, "measure alignment deviation between two images")
    p.add_argument("reference", help="reference image (PGM/PNG)")
    p.add_argument("target", help="target image (PGM/PNG)")
    p.add_argument("--mode", default="edges", choices=["edges", "intensity", "activity"],
                   help="edges: Canny both; intensity: raw; activity: reference is an event-count frame")
    p.add_argument("--radius", type=int, default=16, help="integer search radius in px")
    p.add_argument("--margin", type=int, default=32, help="template inset from the reference border")
    p.add_argument("--smooth-sigma", type=float, default=1.0)
    p.add_argument("-o", "--out", default=None)

    p = add("rate", cmd_rate, "report event rate and bandwidth under an encoding")
    p.add_argument("esf")
    p.add_argument("--encoding", default="esf1", choices=["esf1", "fixed8"])
    p.add_argument("--bin-us", type=int, default=rate.DEFAULT_BIN_US)
    p.add_argument("--saturation-evps", type=float, default=rate.DEFAULT_SATURATION_EVPS)
    p.add_argument("--series-out", default=None, metavar="CSV", help="per-bin counts (bin_start_us,count)")
    p.add_argument("-o", "--out", default=None)

    p = add("erc", cmd_erc, "simulate the event-rate controller and write the thinned stream")
    p.add_argument("esf")
    p.add_argument("--cap-evps", type=int, default=rate.DEFAULT_ERC_CAP_EVPS)
    p.add_argument("--period-us", type=int, default=rate.DEFAULT_ERC_PERIOD_US)
    p.add_argument("-o", "--out", required=True, help="output .esf path")

    p = add("optics", cmd_optics, "lens/sensor resolvability math")
    p.add_argument("--sensor", default=None, help="sensor preset name (see --list)")
    p.add_argument("--pitch-um", type=float, default=None, help="pixel pitch for a custom sensor")
    p.add_argument("--size", default=None, metavar="WxH", help="custom sensor resolution (for --fov)")
    p.add_argument("--object-m", type=float, default=None, help="object size in meters (extent mode)")
    p.add_argument("--distance-m", type=float, default=None)
    p.add_argument("--focal-mm", type=float, default=None)
    p.add_argument("--fov", action="store_true", help="report field of view")
    p.add_argument("--crop", action="store_true", help="report crop factor vs --reference")
    p.add_argument("--reference", default="ximea", help="reference sensor for --crop (default: ximea)")
    p.add_argument("--list", action="store_true", help="dump sensor/lens presets as JSON")
    p.add_argument("-o", "--out", default=None)

    p = add("synth", cmd_synth, "generate a synthetic scene (events, frames, labels)")
    p.add_argument("-d", "--out-dir", required=True)
    p.add_argument("--width", type=int, default=240)
    p.add_argument("--height", type=int, default=180)
    p.add_argument("--pattern", default="disk", choices=["disk", "rect", "checker"])
    p.add_argument("--pattern-size", type=float, default=40.0)
    p.add_argument("--velocity", default="120,0", metavar="VX,VY", help="pattern velocity in px/s")
    p.add_argument("--duration-s", type=float, default=0.35)
    p.add_argument("--background", type=float, default=40.0)
    p.add_argument("--foreground", type=float, default=200.0)
    p.add_argument("--contrast", type=float, default=0.25)
    p.add_argument("--fps", type=float, default=20.0)
    p.add_argument("--exposure-us", type=int, default=5000)
    p.add_argument("--dt-us", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", default=None, metavar="X,Y", help="pattern center at t=0 (default: centered sweep)")
    p.add_argument("--homography", default=None, metavar="H.json", help="render a second view through this homography")
    p.add_argument("--translate", default=None, metavar="DX,DY", help="shortcut: second view offset in px")
    p.add_argument("--warped-dir", default=None, help="output directory for the second view")
    p.add_argument("-o", "--out", default=None)

    p = add("label-transfer", cmd_label_transfer, "map bounding boxes through a homography")
    p.add_argument("--labels", required=True, metavar="JSON")
    p.add_argument("--homography", required=True, metavar="H.json")
    p.add_argument("--invert", action="store_true", help="apply the inverse mapping")
    p.add_argument("--clip", default=None, metavar="WxH", help="clip boxes to this canvas, dropping outsiders")
    p.add_argument("-o", "--out", required=True, help="output labels JSON")

    p = add("pipeline", cmd_pipeline, "events + frames -> windows, renders, labels, checks, rate")
    p.add_argument("--events", required=True, metavar="ESF")
    p.add_argument("-d", "--out-dir", required=True)
    p.add_argument("--config", default=None, metavar="JSON", help="option defaults; explicit flags win")
    p.add_argument("--windows", default=None, metavar="CSV", help="explicit windows instead of trigger pairing")
    p.add_argument("--frames-dir", default=None, help="directory of RGB frame_<id>.pgm images")
    p.add_argument("--labels", default=None, metavar="JSON", help="RGB-side boxes to transfer")
    p.add_argument("--homography", default=None, metavar="H.json", help="maps RGB coords to event coords")
    p.add_argument("--invert-homography", action="store_const", const=True, default=None,
                   help="the file stores event->RGB; invert it")
    p.add_argument("--points", default=None, metavar="CSV", help="estimate the homography from correspondences")
    p.add_argument("--method", default=None, help="sync method (default m3)")
    p.add_argument("--custom", default=None, metavar="ANCHOR:PRE:POST")
    p.add_argument("--channel", type=int, default=None)
    p.add_argument("--mode", default=None, choices=["count", "polarity", "binary"])
    p.add_argument("--clip", type=int, default=None)
    p.add_argument("--erc-cap-evps", type=int, default=None, help="pre-filter through the rate controller")
    p.add_argument("--erc-period-us", type=int, default=None)
    p.add_argument("--encoding", default=None, choices=["esf1", "fixed8"])
    p.add_argument("--bin-us", type=int, default=None)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--margin", type=int, default=None)
    p.add_argument("--smooth-sigma", type=float, default=None)
    p.add_argument("--threshold-px", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help="frame worker threads (default 1)")
    p.add_argument("--no-meta", action="store_true", help="omit the provenance block for byte-identical output")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except _DATA_ERRORS as exc:
        msg = str(exc) or exc.__class__.__name__
        _diag("error", msg, kind=exc.__class__.__name__)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
