#!/usr/bin/env python3
"""Batch figure tool for the experiment CSV outputs.

Reads the documented CSV schemas (see ../docs/formats.md) and renders
publication-style figures:

  ratio          two-panel divergence-ratio plot with large-t insets
  concentration  log-scale decay of 1 - ball mass with a fitted-rate label
  merging        decay of the filter merging distance
  attractor      attractor-mass curves over time, one line per depth s

Driven by a JSON job file:

    python figures.py --job job.json

    {"kind": "ratio", "inputs": ["ratio_a.csv", "ratio_b.csv"],
     "output": "fig.png", "style": {"titles": ["system A", "system B"]}}

The tool consumes serialized outputs only; it embeds no simulation or
inference code.  Renders are pure functions of (CSV bytes, style): rerunning
a job writes byte-identical images.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# deterministic ids/dates for svg output
plt.rcParams["svg.hashsalt"] = "figures"

KINDS = ("ratio", "concentration", "merging", "attractor")
MASS_FLOOR = 1e-15
SATURATION = 1.0 - 1e-12


class SchemaMismatch(Exception):
    """An input CSV does not match the documented schema."""


@dataclass
class FigureJob:
    kind: str
    inputs: list
    output: str
    style: dict = field(default_factory=dict)


@dataclass
class RenderResult:
    output: str
    annotations: dict


def load_job(path) -> FigureJob:
    with open(path) as fh:
        raw = json.load(fh)
    for key in ("kind", "inputs", "output"):
        if key not in raw:
            raise SchemaMismatch(f"job file misses '{key}'")
    if raw["kind"] not in KINDS:
        raise SchemaMismatch(f"unknown figure kind '{raw['kind']}'")
    return FigureJob(raw["kind"], list(raw["inputs"]), raw["output"], raw.get("style", {}))


def read_table(path, required):
    """CSV with optional leading '#' comments; returns (header, float columns)."""
    header, rows = None, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            rec = next(csv.reader([line]))
            if header is None:
                header = rec
                continue
            rows.append(rec)
    if header is None or not rows:
        raise SchemaMismatch(f"{path}: empty or header-only CSV")
    for col in required:
        if col not in header:
            raise SchemaMismatch(f"{path}: missing column '{col}'")
    data = {}
    for k, name in enumerate(header):
        try:
            data[name] = np.array([float(r[k]) for r in rows])
        except ValueError:
            if name in required:
                raise SchemaMismatch(f"{path}: column '{name}' is not numeric")
            data[name] = np.array([r[k] for r in rows])
    return header, data


def fit_decay_rate(t, mass):
    """Least-squares slope of -log(1 - mass + floor) on sub-saturation points."""
    t = np.asarray(t, dtype=float)
    mass = np.asarray(mass, dtype=float)
    usable = mass < SATURATION
    if usable.sum() < 2:
        raise SchemaMismatch("mass series has no decay to fit")
    y = -np.log(1.0 - mass[usable] + MASS_FLOOR)
    slope, _ = np.polyfit(t[usable], y, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# renderers


def _render_ratio(job):
    panels = []
    for path in job.inputs:
        _, data = read_table(path, ["pair_id", "t", "ratio"])
        panels.append(data)
    titles = job.style.get("titles", [f"input {i}" for i in range(len(panels))])
    fig, axes = plt.subplots(1, len(panels), figsize=(6 * len(panels), 4.2))
    axes = np.atleast_1d(axes)
    n_curves = []
    for ax, data, title in zip(axes, panels, titles):
        pair_ids = np.unique(data["pair_id"]).astype(int)
        for pid in pair_ids:
            sel = data["pair_id"] == pid
            ax.plot(data["t"][sel], data["ratio"][sel], lw=0.4, alpha=0.5, color="tab:blue")
        ax.set_xlabel("t")
        ax.set_ylabel("ratio")
        ax.set_title(title)
        # inset over the large-t tail
        t = data["t"]
        t_hi = t.max()
        t_lo = t_hi - job.style.get("inset_fraction", 0.25) * (t_hi - t.min())
        inset = ax.inset_axes([0.55, 0.55, 0.42, 0.4])
        for pid in pair_ids:
            sel = (data["pair_id"] == pid) & (t >= t_lo)
            inset.plot(data["t"][sel], data["ratio"][sel], lw=0.4, alpha=0.5, color="tab:blue")
        inset.set_title("large t", fontsize=8)
        inset.tick_params(labelsize=7)
        n_curves.append(len(pair_ids))
    return fig, {"panels": len(panels), "curves_per_panel": n_curves}


def _render_concentration(job):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    annotations = {"alpha": {}}
    for path in job.inputs:
        header, data = read_table(path, ["t"])
        mass_cols = [c for c in header if c.startswith("mass")]
        if "mass" in header:
            mass_cols = ["mass"]
        if not mass_cols:
            raise SchemaMismatch(f"{path}: no mass column")
        for col in mass_cols:
            t, m = data["t"], data[col]
            if "realization" in data:
                # median over realizations per ladder time
                times = np.unique(t)
                med = np.array([np.median(m[t == u]) for u in times])
                t, m = times, med
            alpha = fit_decay_rate(t, m)
            label = f"{col}: fitted rate {alpha:.3f}"
            ax.semilogy(t, np.maximum(1.0 - m, MASS_FLOOR), marker="o", ms=2.5, label=label)
            annotations["alpha"][col] = alpha
    ax.set_xlabel("t")
    ax.set_ylabel("1 - mass")
    ax.legend(fontsize=8)
    ax.set_title(job.style.get("title", "smoother concentration"))
    return fig, annotations


def _render_merging(job):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for path in job.inputs:
        _, data = read_table(path, ["realization", "t", "max"])
        times = np.unique(data["t"])
        mean_max = np.array([data["max"][data["t"] == u].mean() for u in times])
        ax.semilogy(times, np.maximum(mean_max, 1e-16), marker="o", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("mean max |pi(g) - pibar(g)|")
    ax.set_title(job.style.get("title", "filter merging"))
    return fig, {}


def _render_attractor(job):
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for path in job.inputs:
        _, data = read_table(path, ["t", "s", "mass"])
        for s in np.unique(data["s"]):
            sel = data["s"] == s
            ax.plot(data["t"][sel], data["mass"][sel], marker="o", ms=3, label=f"s = {s:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("mass of nested forward images")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    ax.set_title(job.style.get("title", "attractor support"))
    return fig, {}


RENDERERS = {
    "ratio": _render_ratio,
    "concentration": _render_concentration,
    "merging": _render_merging,
    "attractor": _render_attractor,
}


def render(job: FigureJob) -> RenderResult:
    fig, annotations = RENDERERS[job.kind](job)
    save_kwargs = {"dpi": job.style.get("dpi", 120)}
    if str(job.output).endswith(".svg"):
        save_kwargs["metadata"] = {"Date": None}
    fig.savefig(job.output, **save_kwargs)
    plt.close(fig)
    return RenderResult(job.output, annotations)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--job", required=True, help="JSON job description")
    args = parser.parse_args(argv)
    try:
        result = render(load_job(args.job))
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 1
    print(result.output)
    if result.annotations:
        print(json.dumps(result.annotations, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
