"""Figure rendering for experiment outputs.

Reads the delimited outputs a run leaves behind (summary.csv, rounds.csv)
and writes PNG figures next to them: metric-versus-sweep curves per scheme
and the round-by-round system-EE convergence of every game run. Plotting is
purely a view over the CSVs; nothing here feeds back into results.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SCHEME_STYLE = {
    "eengt": dict(color="tab:blue", marker="o"),
    "sengt": dict(color="tab:red", marker="s"),
    "exhaustive": dict(color="tab:green", marker="^"),
}
_METRIC_LABEL = {
    "system_ee": "system energy efficiency (bit/J)",
    "system_se": "system spectral efficiency (bit/s/Hz)",
}
_SWEEP_LABEL = {
    "p_max_dbm": "maximum transmit power (dBm)",
    "n_sues_per_cell": "SUEs per small cell",
}


def _read_csv(path: Path) -> list[dict]:
    if not path.is_file():
        return []
    with path.open() as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


def _sweep_figure(rows: list[dict], metric: str, out_path: Path) -> bool:
    by_scheme = defaultdict(lambda: defaultdict(list))
    sweep_var = rows[0]["sweep_var"]
    for r in rows:
        val = float(r[metric])
        if math.isnan(val):
            continue
        by_scheme[r["scheme"]][float(r["value"])].append(val)
    if not any(by_scheme.values()):
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme, series in sorted(by_scheme.items()):
        xs = sorted(series)
        ys = [sum(series[x]) / len(series[x]) for x in xs]
        ax.plot(xs, ys, label=scheme, **_SCHEME_STYLE.get(scheme, {}))
    ax.set_xlabel(_SWEEP_LABEL.get(sweep_var, sweep_var))
    ax.set_ylabel(_METRIC_LABEL[metric])
    ax.grid(alpha=0.3, linestyle=":")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def _convergence_figure(rounds_rows: list[dict], out_path: Path) -> bool:
    per_run = defaultdict(dict)
    for r in rounds_rows:
        per_run[r["run_id"]][int(r["round"])] = float(r["system_ee"])
    if not per_run:
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for run_id, series in sorted(per_run.items()):
        xs = sorted(series)
        ax.plot(xs, [series[x] for x in xs], marker=".", label=run_id)
    ax.set_xlabel("best-response round")
    ax.set_ylabel(_METRIC_LABEL["system_ee"])
    ax.grid(alpha=0.3, linestyle=":")
    if len(per_run) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def render_figures(output_dir: Path) -> list[Path]:
    """Render all available figures for a run directory; returns the paths
    written."""
    output_dir = Path(output_dir)
    fig_dir = output_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []

    rows = _read_csv(output_dir / "summary.csv")
    if rows:
        var = rows[0]["sweep_var"]
        for metric in ("system_ee", "system_se"):
            path = fig_dir / f"{metric}_vs_{var}.png"
            if _sweep_figure(rows, metric, path):
                written.append(path)

    rounds_rows = _read_csv(output_dir / "rounds.csv")
    if rounds_rows:
        path = fig_dir / "system_ee_vs_rounds.png"
        if _convergence_figure(rounds_rows, path):
            written.append(path)
    return written
