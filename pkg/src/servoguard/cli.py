"""Command-line front end: generate datasets, score them, run ROC sweeps.

Three subcommands wire the pipeline end to end.  ``generate`` writes a
synthetic multi-day dataset as CSV with metadata and ground-truth
labels.  ``detect`` scores an existing dataset against its first day
and emits a report plus a per-day distance table.  ``roc`` averages
detection rates over repeated scenario draws for a percentile sweep.
Every run writes run_manifest.json with the fully resolved config, and
a manifest can be fed back through --config to reproduce the run.
"""

import argparse
import json
import os
import sys

from .detect import (DEFAULT_PERCENTILES, METHODS, DetectorConfig, detect_days,
                     roc_experiment, write_distance_csv, write_report_json,
                     write_roc_csv)
from .errors import DataFormatError, ParameterError
from .features import COMBINATION_MODES, WINDOW_KINDS, StftConfig
from .signals import (DAY_TOKENS, ScenarioSchedule, default_schedule,
                      generate_scenario, read_csv, read_metadata, write_csv)

# flat config keys, their type tag, and defaults; flags override these
_CONFIG_SPEC = {
    "stft.window_len": ("int", 200),
    "stft.hop": ("int", 20),
    "stft.window": ("str", "hann"),
    "stft.combinations": ("str", "pairwise_products"),
    "align.mu": ("float", 0.5),
    "align.embed_dim": ("int", 0),
    "align.gate": ("float", 1.0),
    "align.normalize": ("str", "spectral"),
    "align.scale_target": ("float", 2.0),
    "align.std_floor": ("float", 1e-2),
    "pca.energy": ("float", 0.95),
    "pca.components": ("int", 0),
    "detect.method": ("str", "align"),
    "detect.percentile": ("float", 0.95),
    "detect.calibration_days": ("int", 20),
    "detect.calibration_mode": ("str", "op_sweep"),
    "detect.calibration_freq_lo": ("int", 3),
    "detect.calibration_freq_hi": ("int", 14),
    "detect.calibration_indices": ("opt_int_list", None),
    "scenario.days": ("str_list", None),
    "scenario.n_samples": ("int", 300),
    "scenario.seed": ("int", 0),
    "scenario.trailing_o1": ("bool", False),
    "roc.percentiles": ("float_list", list(DEFAULT_PERCENTILES)),
    "roc.repetitions": ("int", 10),
    "io.data": ("opt_str", None),
    "io.svg": ("bool", False),
}


class _Parser(argparse.ArgumentParser):
    # usage mistakes are config errors, exit code 1, not argparse's 2
    def error(self, message):
        raise ParameterError(message)


def _check_type(key, value, tag):
    if tag == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParameterError("config key %s must be an integer, got %r" % (key, value))
        return value
    if tag == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParameterError("config key %s must be a number, got %r" % (key, value))
        return float(value)
    if tag == "str":
        if not isinstance(value, str):
            raise ParameterError("config key %s must be a string, got %r" % (key, value))
        return value
    if tag == "bool":
        if not isinstance(value, bool):
            raise ParameterError("config key %s must be true or false, got %r" % (key, value))
        return value
    if tag == "opt_str":
        if value is not None and not isinstance(value, str):
            raise ParameterError("config key %s must be a string or null, got %r" % (key, value))
        return value
    if tag == "str_list":
        if value is None:
            return None
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ParameterError("config key %s must be a list of strings, got %r" % (key, value))
        return list(value)
    if tag == "float_list":
        if (not isinstance(value, list) or not value
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            raise ParameterError("config key %s must be a non-empty list of numbers, got %r"
                                 % (key, value))
        return [float(v) for v in value]
    if tag == "opt_int_list":
        if value is None:
            return None
        if (not isinstance(value, list)
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
            raise ParameterError("config key %s must be a list of integers or null, got %r"
                                 % (key, value))
        return list(value)
    raise ParameterError("unhandled config type %r" % (tag,))


def load_config(path=None):
    """Resolved flat config: defaults, then the JSON file's overrides.

    A run_manifest.json (an object with "subcommand" and "config" keys)
    is accepted directly, so past runs replay as-is.  Unknown keys are
    rejected.
    """
    cfg = {k: spec[1] for k, spec in _CONFIG_SPEC.items()}
    if path is None:
        return cfg
    try:
        with open(path) as fh:
            loaded = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError("config %s is not valid JSON: %s" % (path, exc))
    if not isinstance(loaded, dict):
        raise ParameterError("config %s must hold a JSON object" % (path,))
    if set(loaded) >= {"subcommand", "config"} and isinstance(loaded.get("config"), dict):
        loaded = loaded["config"]
    for key, value in loaded.items():
        if key not in _CONFIG_SPEC:
            raise ParameterError("unknown config key %r in %s" % (key, path))
        cfg[key] = _check_type(key, value, _CONFIG_SPEC[key][0])
    return cfg


def _apply_overrides(cfg, args):
    flag_map = {
        "seed": "scenario.seed",
        "method": "detect.method",
        "mu": "align.mu",
        "embed_dim": "align.embed_dim",
        "window": "stft.window_len",
        "hop": "stft.hop",
        "combinations": "stft.combinations",
        "reps": "roc.repetitions",
        "n_samples": "scenario.n_samples",
        "percentile": "detect.percentile",
        "calibration_mode": "detect.calibration_mode",
        "data": "io.data",
    }
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "svg", None):
        cfg["io.svg"] = True
    if getattr(args, "trailing_o1", None):
        cfg["scenario.trailing_o1"] = True
    if getattr(args, "percentiles", None) is not None:
        cfg["roc.percentiles"] = _parse_float_list(args.percentiles)
    if getattr(args, "days", None) is not None:
        cfg["scenario.days"] = [t.strip() for t in args.days.split(",") if t.strip()]
    if getattr(args, "calibration_indices", None) is not None:
        cfg["detect.calibration_indices"] = _parse_int_list(args.calibration_indices)
    return cfg


def _parse_float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ParameterError("expected a comma-separated list of numbers, got %r" % (text,))
    if not values:
        raise ParameterError("expected at least one number, got %r" % (text,))
    return values


def _parse_int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ParameterError("expected a comma-separated list of integers, got %r" % (text,))


def detector_config(cfg):
    """DetectorConfig assembled from a resolved flat config."""
    stft = StftConfig(window_len=cfg["stft.window_len"], hop=cfg["stft.hop"],
                      window=cfg["stft.window"], combinations=cfg["stft.combinations"])
    config = DetectorConfig(
        stft=stft, mu=cfg["align.mu"], embed_dim=cfg["align.embed_dim"],
        gate=cfg["align.gate"], normalize=cfg["align.normalize"],
        scale_target=cfg["align.scale_target"], std_floor=cfg["align.std_floor"],
        pca_energy=cfg["pca.energy"], pca_components=cfg["pca.components"],
        percentile=cfg["detect.percentile"],
        calibration_days=cfg["detect.calibration_days"],
        calibration_mode=cfg["detect.calibration_mode"],
        calibration_freq_lo=cfg["detect.calibration_freq_lo"],
        calibration_freq_hi=cfg["detect.calibration_freq_hi"],
        n_samples=cfg["scenario.n_samples"])
    config.validate()
    return config


def _scenario_schedule(cfg):
    if cfg["scenario.days"] is None:
        schedule = default_schedule(rng_seed=cfg["scenario.seed"],
                                    trailing_healthy_day=cfg["scenario.trailing_o1"])
    else:
        days = tuple(cfg["scenario.days"])
        if cfg["scenario.trailing_o1"]:
            days = days + ("O1",)
        schedule = ScenarioSchedule(days=days, rng_seed=cfg["scenario.seed"])
    schedule.validate()
    return schedule


def _write_manifest(out_dir, subcommand, cfg, outputs, extra=None):
    manifest = {"subcommand": subcommand, "config": cfg, "outputs": sorted(outputs)}
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _labels_path(dataset_path):
    root, _ = os.path.splitext(dataset_path)
    return root + ".labels.csv"


def _write_labels(traces, labels, dataset_path):
    with open(_labels_path(dataset_path), "w") as fh:
        fh.write("day,label\n")
        for trace, label in zip(traces, labels):
            fh.write("%d,%s\n" % (trace.day, "true" if label else "false"))


def _read_labels(dataset_path, traces):
    path = _labels_path(dataset_path)
    if not os.path.exists(path):
        return None
    by_day = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "day,label":
            raise DataFormatError("labels file %s must start with 'day,label'" % (path,))
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2 or parts[1] not in ("true", "false"):
                raise DataFormatError("labels file %s row %d is malformed" % (path, ln))
            try:
                day = int(parts[0])
            except ValueError:
                raise DataFormatError("labels file %s row %d has a bad day index" % (path, ln))
            by_day[day] = parts[1] == "true"
    try:
        return [by_day[t.day] for t in traces]
    except KeyError as exc:
        raise DataFormatError("labels file %s is missing day %s" % (path, exc))


def cmd_generate(cfg, out_dir):
    schedule = _scenario_schedule(cfg)
    traces, labels = generate_scenario(schedule, cfg["scenario.n_samples"])
    dataset = os.path.join(out_dir, "dataset.csv")
    write_csv(traces, dataset, extra_metadata={
        "schedule_days": list(schedule.days),
        "rng_seed": schedule.rng_seed,
    })
    _write_labels(traces, labels, dataset)
    outputs = ["dataset.csv", "dataset.meta.json", "dataset.labels.csv"]
    _write_manifest(out_dir, "generate", cfg, outputs)
    return outputs


def cmd_detect(cfg, out_dir):
    data = cfg["io.data"]
    if data is None:
        raise ParameterError("detect needs a dataset; pass --data or set io.data")
    traces = read_csv(data)
    if not traces:
        raise DataFormatError("dataset %s holds no traces" % (data,))
    meta = read_metadata(data)
    labels = _read_labels(data, traces)
    config = detector_config(cfg)
    base_token = "O1"
    days_meta = meta.get("schedule_days")
    if isinstance(days_meta, list) and days_meta and days_meta[0] in DAY_TOKENS:
        base_token = days_meta[0]
    rng_seed = meta.get("rng_seed", cfg["scenario.seed"])
    if not isinstance(rng_seed, int):
        rng_seed = cfg["scenario.seed"]
    indices = None
    cal_days = cfg["detect.calibration_indices"]
    if cal_days is not None:
        day_pos = {t.day: i for i, t in enumerate(traces)}
        indices = []
        for day in cal_days:
            if day not in day_pos:
                raise ParameterError("calibration day %r is not in the dataset" % (day,))
            indices.append(day_pos[day])
    report = detect_days(traces, method=cfg["detect.method"], config=config,
                         labels=labels, rng_seed=rng_seed, base_token=base_token,
                         calibration_indices=indices)
    report_path = os.path.join(out_dir, "report.json")
    dist_path = os.path.join(out_dir, "distances.csv")
    write_report_json(report, report_path)
    write_distance_csv(report, dist_path)
    outputs = ["report.json", "distances.csv"]
    if cfg["io.svg"]:
        _plot_distances(dist_path, os.path.join(out_dir, "distances.svg"))
        outputs.append("distances.svg")
    _write_manifest(out_dir, "detect", cfg, outputs)
    return outputs


def cmd_roc(cfg, out_dir):
    schedule = _scenario_schedule(cfg)
    config = detector_config(cfg)
    reps = cfg["roc.repetitions"]
    rows = roc_experiment(schedule, percentiles=cfg["roc.percentiles"],
                          repetitions=reps, config=config)
    roc_path = os.path.join(out_dir, "roc.csv")
    write_roc_csv(rows, roc_path)
    outputs = ["roc.csv"]
    if cfg["io.svg"]:
        _plot_roc(roc_path, os.path.join(out_dir, "roc.svg"))
        outputs.append("roc.svg")
    _write_manifest(out_dir, "roc", cfg, outputs, extra={"averaged": reps > 1})
    return outputs


def _read_csv_rows(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


def _plot_distances(csv_path, svg_path):
    # plots always re-read the emitted CSV so they can never alter it
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, rows = _read_csv_rows(csv_path)
    col = {name: i for i, name in enumerate(header)}
    days = [int(r[col["day"]]) for r in rows]
    dist = [float(r[col["distance"]]) for r in rows]
    thr = float(rows[0][col["threshold"]]) if rows else 0.0
    method = rows[0][col["method"]] if rows else ""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(days, dist, marker="o", label="distance (%s)" % method)
    ax.axhline(thr, color="tab:red", linestyle="--", label="threshold")
    ax.set_xlabel("day")
    ax.set_ylabel("distance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)


def _plot_roc(csv_path, svg_path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, rows = _read_csv_rows(csv_path)
    col = {name: i for i, name in enumerate(header)}
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for method in sorted({r[col["method"]] for r in rows}):
        pts = [(float(r[col["fpr"]]), float(r[col["tpr"]]))
               for r in rows if r[col["method"]] == method]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.plot([0, 1], [0, 1], color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)


def _add_shared_flags(parser):
    parser.add_argument("--config", help="JSON config or a previous run_manifest.json")
    parser.add_argument("--seed", type=int, help="scenario RNG seed")
    parser.add_argument("--out", default=".", help="output directory (default: .)")
    parser.add_argument("--method", choices=METHODS, help="detector to run")
    parser.add_argument("--mu", type=float, help="correspondence weight in [0, 1]")
    parser.add_argument("--embed-dim", type=int, dest="embed_dim",
                        help="embedding width (0 = automatic)")
    parser.add_argument("--window", type=int, help="STFT window length")
    parser.add_argument("--hop", type=int, help="STFT hop")
    parser.add_argument("--combinations", choices=COMBINATION_MODES,
                        help="channel combination mode")
    parser.add_argument("--percentiles", help="comma-separated list, e.g. 0.5,0.75")
    parser.add_argument("--reps", type=int, help="ROC repetitions")
    parser.add_argument("--svg", action="store_true", default=None,
                        help="also write an SVG plot")


def build_parser():
    parser = _Parser(prog="servoguard",
                     description="Task-insensitive anomaly detection for servo axes.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("generate", help="write a synthetic multi-day dataset")
    _add_shared_flags(gen)
    gen.add_argument("--days", help="comma-separated day tokens from %s" % (DAY_TOKENS,))
    gen.add_argument("--n-samples", type=int, dest="n_samples",
                     help="samples per day (default 300)")
    gen.add_argument("--trailing-o1", action="store_true", default=None,
                     dest="trailing_o1", help="append a trailing healthy O1 day")

    det = sub.add_parser("detect", help="score a dataset against its first day")
    _add_shared_flags(det)
    det.add_argument("--data", help="dataset CSV produced by generate")
    det.add_argument("--percentile", type=float, help="decision percentile in (0, 1)")
    det.add_argument("--calibration-mode", choices=("op_sweep", "same_op"),
                     dest="calibration_mode", help="synthetic calibration family")
    det.add_argument("--calibration-indices", dest="calibration_indices",
                     help="comma-separated day numbers to calibrate on instead")

    roc = sub.add_parser("roc", help="average detection rates over repeated draws")
    _add_shared_flags(roc)
    roc.add_argument("--n-samples", type=int, dest="n_samples",
                     help="samples per day (default 300)")

    return parser


_RUNNERS = {"generate": cmd_generate, "detect": cmd_detect, "roc": cmd_roc}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        outputs = _RUNNERS[args.subcommand](cfg, out_dir)
    except ParameterError as exc:
        print("error: %s" % (exc,), file=sys.stderr)
        return 1
    except (DataFormatError, OSError) as exc:
        print("error: %s" % (exc,), file=sys.stderr)
        return 2
    for name in outputs:
        print(os.path.join(out_dir, name))
    return 0


if __name__ == "__main__":
    sys.exit(main())
