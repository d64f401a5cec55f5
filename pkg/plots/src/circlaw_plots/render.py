"""Figure builders: eigenvalue clouds, convergence curves, LSV tails,
concentration-probability comparisons.

Rendering is deterministic given CSV content and options: Agg backend,
fixed figure geometry, no RNG, no timestamps.  Input CSVs are only read.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

CSV_HEADER = ["experiment", "n", "trial", "seed", "statistic", "value",
              "stderr", "runtime_ms"]

KINDS = ("esd_cloud", "convergence", "lsv_tail", "concprob")


class SchemaError(ValueError):
    """CSV does not conform to the pipeline schema."""


class OutputExistsError(FileExistsError):
    pass


@dataclass
class FigureRequest:
    kind: str
    csv_paths: list
    out_path: str
    title: Optional[str] = None
    force: bool = False
    annotations: dict = field(default_factory=dict)


def read_rows(paths) -> list[dict]:
    rows: list[dict] = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise SchemaError(
                    f"{path}: expected columns {','.join(CSV_HEADER)}, "
                    f"got {','.join(header) if header else 'an empty file'}")
            for rec in reader:
                rows.append(dict(zip(CSV_HEADER, rec)))
    if not rows:
        raise SchemaError("no data rows in input CSVs")
    return rows


def _need(rows: list[dict], statistic: str) -> list[dict]:
    out = [r for r in rows if r["statistic"] == statistic]
    if not out:
        raise SchemaError(f"missing required statistic rows: {statistic!r}")
    return out


def _finite(rows, key="value"):
    return [float(r[key]) for r in rows if math.isfinite(float(r[key]))]


def plot(request: FigureRequest) -> Path:
    """Render the requested figure kind; never touches the input CSVs."""
    if request.kind not in KINDS:
        raise ValueError(f"unknown figure kind {request.kind!r}")
    out = Path(request.out_path)
    if out.exists() and not request.force:
        raise OutputExistsError(f"{out} exists; pass --force to overwrite")
    rows = read_rows(request.csv_paths)
    fig, metadata = _BUILDERS[request.kind](rows, request)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, metadata=metadata)
    plt.close(fig)
    return out


def _new_axes(title):
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    if title:
        ax.set_title(title)
    return fig, ax


def _build_esd_cloud(rows, request):
    res = _need(rows, "eig_re")
    ims = _need(rows, "eig_im")
    key = lambda r: (r["experiment"], r["n"], r["trial"])
    im_by_key = {key(r): float(r["value"]) for r in ims}
    pts = np.array([complex(float(r["value"]), im_by_key[key(r)])
                    for r in res if key(r) in im_by_key])
    if len(pts) == 0:
        raise SchemaError("eig_re rows have no matching eig_im rows")
    fig, ax = _new_axes(request.title or f"eigenvalue cloud (n = {len(pts)})")
    ax.scatter(pts.real, pts.imag, s=6, alpha=0.6, linewidths=0,
               color="#1f4e89")
    theta = np.linspace(0, 2 * np.pi, 720)
    ax.plot(np.cos(theta), np.sin(theta), color="#c23b22", lw=1.2,
            label="unit circle")
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(loc="upper right", fontsize=8)
    return fig, {"points": str(len(pts))}


def _fit_loglog(ns, means):
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(means, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def _build_convergence(rows, request):
    sup = _need(rows, "sup_distance")
    by_n: dict[int, list[float]] = {}
    for r in sup:
        v = float(r["value"])
        if math.isfinite(v):
            by_n.setdefault(int(r["n"]), []).append(v)
    if len(by_n) < 2:
        raise SchemaError("convergence needs sup_distance rows for >= 2 n values")
    ns = sorted(by_n)
    means = [float(np.mean(by_n[n])) for n in ns]
    slope, intercept = _fit_loglog(ns, means)

    fig, ax = _new_axes(request.title or "ESD distance to the disk law")
    for n in ns:
        ax.plot([n] * len(by_n[n]), by_n[n], ".", color="#9db8d9", ms=5)
    ax.plot(ns, means, "o-", color="#1f4e89", label="mean sup distance")
    xs = np.array([ns[0], ns[-1]], dtype=float)
    ax.plot(xs, np.exp(intercept) * xs**slope, "--", color="#c23b22",
            label=f"fit slope {slope:.3f}")
    eta_rows = [r for r in rows if r["statistic"] == "eta_prime"]
    if eta_rows:
        eta = float(eta_rows[0]["value"])
        ax.plot(xs, means[0] * (xs / xs[0]) ** (-eta), ":", color="#777777",
                label=f"pipeline eta' = {eta:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("matrix size n")
    ax.set_ylabel("sup |mu_n - mu_inf|")
    ax.legend(fontsize=8)
    return fig, {"slope": f"{slope:.10g}", "intercept": f"{intercept:.10g}"}


def _build_lsv_tail(rows, request):
    rates = _need(rows, "lsv_hit_rate")
    ns = [int(r["n"]) for r in rates]
    vals = [float(r["value"]) for r in rates]
    errs = [float(r["stderr"]) for r in rates]
    order = np.argsort(ns)
    fig, ax = _new_axes(request.title or "least-singular-value tail rate")
    ax.errorbar(np.array(ns)[order], np.array(vals)[order],
                yerr=np.array(errs)[order], fmt="o-", color="#1f4e89",
                capsize=3, label="P(sigma_min <= n^-B)")
    ax.set_xlabel("matrix size n")
    ax.set_ylabel("tail frequency")
    ax.set_ylim(bottom=-0.02)
    ax.legend(fontsize=8)
    return fig, {"max_rate": f"{max(vals):.10g}"}


def _build_concprob(rows, request):
    series = {}
    for name in ("p_exact", "p_fourier", "p_mc"):
        found = [(int(r["n"]), float(r["value"])) for r in rows
                 if r["statistic"] == name]
        if found:
            series[name] = sorted(found)
    if not series:
        raise SchemaError("missing required statistic rows: p_exact/p_fourier/p_mc")
    fig, ax = _new_axes(request.title or "concentration probability estimates")
    styles = {"p_exact": ("o-", "#1f4e89"), "p_fourier": ("s--", "#c23b22"),
              "p_mc": ("^:", "#3a7d44")}
    for name, pts in series.items():
        fmt, color = styles[name]
        ax.plot([n for n, _ in pts], [v for _, v in pts], fmt, color=color,
                label=name)
    ax.set_xlabel("tuple length")
    ax.set_ylabel("P_mu")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    return fig, {"series": ",".join(sorted(series))}


_BUILDERS = {
    "esd_cloud": _build_esd_cloud,
    "convergence": _build_convergence,
    "lsv_tail": _build_lsv_tail,
    "concprob": _build_concprob,
}
