"""CSV, JSON and SVG output for ensemble results.

Floats are written with ``repr`` so files round-trip exactly.
"""

import csv
import json
from pathlib import Path

import numpy as np

CURVES = "curves.csv"
SUMMARY = "summary.csv"
CONFIG = "config.json"
PROVENANCE = "provenance.json"


def _f(x):
    return repr(float(x))


def write_curves(res, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "t", "mean_td", "std_td"])
        for i, size in enumerate(res.sizes):
            for t, m, s in zip(res.times, res.mean[i], res.std[i]):
                w.writerow([size, _f(t), _f(m), _f(s)])


def write_summary(res, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "n_sites", "max_mean_td", "std_at_max", "t_at_max", "n_samples",
                    "n_failed", "redfield_min_eigenvalue", "max_trace_drift"])
        failed = {s: 0 for s in res.sizes}
        for size, _, _ in res.failures:
            failed[size] += 1
        for i, size in enumerate(res.sizes):
            w.writerow([size, res.n_sites[i], _f(res.max_mean[i]), _f(res.std_at_max[i]),
                        _f(res.times[res.argmax[i]]), res.n_ok[i], failed[size],
                        _f(res.redfield_min_eigenvalue[i]), _f(res.max_trace_drift[i])])


def read_curves(path):
    """``{size: (t, mean, std)}`` parsed back from ``curves.csv``."""
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(int(r["size"]), []).append(
                (float(r["t"]), float(r["mean_td"]), float(r["std_td"])))
    return {k: tuple(np.array(col) for col in zip(*v)) for k, v in rows.items()}


def read_summary(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def summary_from_curves(curves):
    """Recompute (max mean, std at max, t at max) per size from parsed curves."""
    out = {}
    for size, (t, mean, std) in curves.items():
        i = int(np.argmax(mean))
        out[size] = (float(mean[i]), float(std[i]), float(t[i]))
    return out


def emit_report(res, out_dir, plots=True):
    """Write curves, summary, config echo and figures into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_curves(res, out / CURVES)
    write_summary(res, out / SUMMARY)
    (out / CONFIG).write_text(res.config.to_json() + "\n", encoding="utf-8")
    (out / PROVENANCE).write_text(json.dumps(res.provenance, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    files = [out / CURVES, out / SUMMARY, out / CONFIG, out / PROVENANCE]
    if plots:
        from .plotting import plot_curves, plot_max_vs_size
        files.append(plot_curves(res, out / "trace_distance.svg"))
        files.append(plot_max_vs_size(res, out / "max_vs_size.svg"))
    return files
