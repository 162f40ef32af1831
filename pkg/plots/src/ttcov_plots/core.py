"""Read benchmark CSV outputs and render the standard figures.

This package is a pure consumer of the pinned CSV contracts:

* per-trial results::

    method,n,sigma,trial,rel_error,time_seconds,sin_theta_u0,sin_theta_uT,
    sin_theta_v0,sin_theta_vT,seed,data_hash

* spectra exports:: ``mode,index,value`` with mode in {sigma, m1, m3}.

Aggregation repeats the harness formulas exactly (mean, sample std with
ddof=1 and 0.0 for singleton cells) so figures and emitted JSON agree.
No statistics beyond mean/std are computed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

RESULT_COLUMNS = [
    "method", "n", "sigma", "trial", "rel_error", "time_seconds",
    "sin_theta_u0", "sin_theta_uT", "sin_theta_v0", "sin_theta_vT",
    "seed", "data_hash",
]
SPECTRA_COLUMNS = ["mode", "index", "value"]

KINDS = ("error_curve", "spectrum", "sintheta", "noise_sweep")


class SchemaError(ValueError):
    """Input file does not match the pinned column contract."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSV, figure kind, output path, axis options."""

    csv_path: str
    kind: str
    out_path: str
    log_x: bool = False
    log_y: bool = False
    title: str | None = None
    methods: tuple[str, ...] = ()
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def read_rows(path, columns):
    """Read a CSV against an exact header contract."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing column(s) {', '.join(missing)} "
                f"(header: {','.join(header)})"
            )
        idx = {c: header.index(c) for c in columns}
        rows = []
        for raw in reader:
            if not raw or all(not s for s in raw):
                continue
            rows.append({c: raw[idx[c]] for c in columns})
    return rows


def _num(s):
    return float(s) if s != "" else None


def aggregate(rows, x_column):
    """Per-(method, x) mean / sample std / count / mean time.

    Mirrors the harness: std uses ddof=1, singleton cells report 0.0.
    Returns ``{method: {x: (mean, std, count, mean_time)}}``.
    """
    cells: dict = {}
    for row in rows:
        x = _num(row[x_column])
        if x is None:
            continue
        key = (row["method"], x)
        cells.setdefault(key, []).append(
            (float(row["rel_error"]), float(row["time_seconds"]))
        )
    out: dict = {}
    for (method, x), vals in cells.items():
        errs = np.array([v[0] for v in vals])
        times = np.array([v[1] for v in vals])
        out.setdefault(method, {})[x] = (
            float(errs.mean()),
            float(errs.std(ddof=1)) if errs.size > 1 else 0.0,
            int(errs.size),
            float(times.mean()),
        )
    return out


def aggregate_as_records(rows, x_column):
    """Aggregates in the same shape as the harness JSON, for comparison."""
    agg = aggregate(rows, x_column)
    records = []
    for method in agg:
        for x, (mean, std, count, mean_time) in agg[method].items():
            records.append({
                "method": method,
                "n": int(x) if x_column == "n" else None,
                "sigma": x if x_column == "sigma" else None,
                "mean": mean,
                "std": std,
                "count": count,
                "mean_time": mean_time,
            })
    records.sort(key=lambda c: (c["n"] if c["n"] is not None else -1,
                                c["sigma"] if c["sigma"] is not None else -1.0,
                                c["method"]))
    return records


def _select_methods(agg, wanted):
    if wanted:
        missing = [m for m in wanted if m not in agg]
        if missing:
            raise ValueError(
                f"no rows for method(s) {', '.join(missing)}; "
                f"available: {', '.join(sorted(agg))}"
            )
        return {m: agg[m] for m in wanted}
    return agg


def _finish(fig, ax, spec, xlabel, ylabel):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if spec.log_x:
        ax.set_xscale("log")
    if spec.log_y:
        ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=spec.dpi, metadata={"Software": "ttcov-plot"})
    plt.close(fig)


def _render_curves(spec, x_column, xlabel):
    rows = read_rows(spec.csv_path, RESULT_COLUMNS)
    agg = _select_methods(aggregate(rows, x_column), spec.methods)
    if not agg or not any(agg.values()):
        raise ValueError(f"{spec.csv_path}: no rows with a {x_column} value")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in sorted(agg):
        xs = np.array(sorted(agg[method]))
        means = np.array([agg[method][x][0] for x in xs])
        stds = np.array([agg[method][x][1] for x in xs])
        ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3, label=method)
    ax.legend()
    _finish(fig, ax, spec, xlabel, "relative error")


def render_error_curve(spec: PlotSpec) -> None:
    _render_curves(spec, "n", "sample size")


def render_noise_sweep(spec: PlotSpec) -> None:
    _render_curves(spec, "sigma", "noise level")


def render_spectrum(spec: PlotSpec) -> None:
    rows = read_rows(spec.csv_path, SPECTRA_COLUMNS)
    if not rows:
        raise ValueError(f"{spec.csv_path}: no spectrum rows")
    series: dict = {}
    for row in rows:
        series.setdefault(row["mode"], []).append(
            (int(row["index"]), float(row["value"]))
        )
    wanted = spec.methods or tuple(sorted(series))
    missing = [m for m in wanted if m not in series]
    if missing:
        raise ValueError(
            f"no spectrum rows for {', '.join(missing)}; "
            f"available: {', '.join(sorted(series))}"
        )
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for mode in wanted:
        pts = sorted(series[mode])
        ax.plot([i for i, _ in pts], [v for _, v in pts], marker="o",
                linestyle="-", label=mode)
    ax.set_yscale("log")
    ax.legend()
    # log-y is the default for spectra; _finish only adds log-x on request
    _finish(fig, ax, spec, "index", "singular value")


def render_sintheta(spec: PlotSpec) -> None:
    rows = read_rows(spec.csv_path, RESULT_COLUMNS)
    metrics = ("sin_theta_u0", "sin_theta_uT", "sin_theta_v0", "sin_theta_vT")
    cells: dict = {}
    for row in rows:
        if spec.methods and row["method"] not in spec.methods:
            continue
        if all(row[m] == "" for m in metrics):
            continue
        x = _num(row["n"]) if row["n"] != "" else _num(row["sigma"])
        if x is None:
            continue
        for m in metrics:
            if row[m] != "":
                cells.setdefault(m, {}).setdefault(x, []).append(float(row[m]))
    if not cells:
        raise ValueError(
            f"{spec.csv_path}: no rows with subspace-distance values"
            + (f" for methods {', '.join(spec.methods)}" if spec.methods else "")
        )
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for m in metrics:
        if m not in cells:
            continue
        xs = sorted(cells[m])
        means = [float(np.mean(cells[m][x])) for x in xs]
        ax.plot(xs, means, marker="o", label=m.replace("sin_theta_", ""))
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    _finish(fig, ax, spec, "configuration", "subspace distance")


_RENDERERS = {
    "error_curve": render_error_curve,
    "spectrum": render_spectrum,
    "sintheta": render_sintheta,
    "noise_sweep": render_noise_sweep,
}


def render(spec: PlotSpec) -> str:
    """Render the figure described by ``spec``; returns the output path."""
    _RENDERERS[spec.kind](spec)
    return spec.out_path
