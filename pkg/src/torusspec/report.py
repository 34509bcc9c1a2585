"""Delimited output (CSV, JSON, gnuplot blocks) and matplotlib figures for sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from itertools import groupby
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .sweep import CSV_COLUMNS, SweepConfig, SweepRecord

FORMATS = ("csv", "json", "gnuplot")
SUFFIX = {"csv": ".csv", "json": ".json", "gnuplot": ".dat"}


def _fmt(x) -> str:
    # repr round-trips floats exactly, which keeps reruns byte-identical
    return repr(float(x)) if isinstance(x, float) else str(x)


def to_csv(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(v) for v in r.csv_row()])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        for k, v in row.items():
            row[k] = int(v) if k == "kernel_dim" else float(v)
    return rows


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def to_json(records: Sequence[SweepRecord], config: Optional[SweepConfig] = None) -> str:
    """JSON document with software version, config echo and one object per record.

    Non-finite values are written as ``null`` so the file is strict JSON.
    """
    recs = []
    for r in records:
        d = asdict(r)
        d.pop("wall_time")
        recs.append(_jsonable(d))
    doc = {
        "software": {"name": "torusspec", "version": __version__},
        "config": _jsonable(config.echo()) if config is not None else None,
        "records": recs,
    }
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def read_json(text: str) -> tuple[dict, list[SweepRecord]]:
    doc = json.loads(text)
    return doc, [SweepRecord.from_dict(d) for d in doc["records"]]


def to_gnuplot(records: Sequence[SweepRecord]) -> str:
    """One data block per alpha, separated by two blank lines (``index`` addressable)."""
    cols = ("epsilon", "eps_over_alpha", "mu1_vol_over_8pi", "lambda1sq_vol_over_4pi", "ratio",
            "witness_bound_over_4pi")
    out = []
    for alpha, group in groupby(records, key=lambda r: r.alpha):
        lines = [f"# alpha = {alpha!r}", "# " + " ".join(cols)]
        for r in group:
            vals = (r.epsilon, r.epsilon / r.alpha, r.mu1_vol / (8 * np.pi),
                    r.lambda1sq_vol / (4 * np.pi), r.ratio, r.witness_bound / (4 * np.pi))
            lines.append(" ".join(_fmt(float(v)) for v in vals))
        out.append("\n".join(lines))
    return "\n\n\n".join(out) + "\n"


def emit_report(
    records: Sequence[SweepRecord],
    fmt: str,
    path: str | Path,
    config: Optional[SweepConfig] = None,
) -> Path:
    if fmt not in FORMATS:
        raise ConfigurationError(f"unknown format {fmt!r}; choose from {FORMATS}")
    text = {"csv": to_csv, "gnuplot": to_gnuplot}.get(fmt)
    body = to_json(records, config) if fmt == "json" else text(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(body)
    return path


def render_figures(records: Sequence[SweepRecord], out_dir: str | Path) -> list[Path]:
    """PNG plots of the normalised products and their ratio against ``eps / alpha``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    good = [r for r in records if r.ok]
    paths = []

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    for alpha, group in groupby(good, key=lambda r: r.alpha):
        g = list(group)
        t = [r.epsilon / r.alpha for r in g]
        axes[0].plot(t, [r.mu1_vol / (8 * np.pi) for r in g], "o-", label=f"alpha={alpha:g}")
        (line,) = axes[1].plot(t, [r.lambda1sq_vol / (4 * np.pi) for r in g], "o-", label=f"alpha={alpha:g}")
        axes[1].plot(t, [r.witness_bound / (4 * np.pi) for r in g], "x--", alpha=0.6,
                     color=line.get_color(), label=f"witness, alpha={alpha:g}")
    axes[0].axhline(1.0, color="k", lw=0.8)
    axes[1].axhline(1.0, color="k", lw=0.8)
    axes[0].set_ylabel(r"$\mu_1 \mathrm{Vol} / 8\pi$")
    axes[1].set_ylabel(r"$\lambda_1^2 \mathrm{Vol} / 4\pi$")
    axes[1].set_yscale("log")
    for ax in axes:
        ax.set_xscale("log", base=2)
        ax.set_xlabel(r"$\varepsilon / \alpha$")
        if good:
            ax.legend(fontsize=8)
    p = out_dir / "products.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(5, 4), constrained_layout=True)
    for alpha, group in groupby(good, key=lambda r: r.alpha):
        g = list(group)
        ax.plot([r.epsilon / r.alpha for r in g], [r.ratio for r in g], "o-", label=f"alpha={alpha:g}")
    ax.axhline(0.5, color="k", lw=0.8, ls=":")
    ax.set_xscale("log", base=2)
    ax.set_xlabel(r"$\varepsilon / \alpha$")
    ax.set_ylabel(r"$\lambda_1^2 / \mu_1$")
    if good:
        ax.legend(fontsize=8)
    p = out_dir / "ratio.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)
    return paths


def write_outputs(records: Sequence[SweepRecord], config: SweepConfig) -> list[Path]:
    """All configured formats (and figures) into ``config.output_dir``."""
    out = Path(config.output_dir)
    paths = [emit_report(records, f, out / f"sweep{SUFFIX[f]}", config) for f in config.formats]
    if config.figures:
        paths += render_figures(records, out)
    return paths
