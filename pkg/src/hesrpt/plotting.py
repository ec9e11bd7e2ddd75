"""SVG bar charts for sweep results.

Figures are rendered with matplotlib's Agg backend into standalone SVG files
(glyphs are embedded as paths). A fixed hash salt and a blank date make the
output byte-stable across runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "svg.hashsalt": "hesrpt",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
_METADATA = {"Date": None, "Creator": "hesrpt"}

LABELS = {
    "hesrpt": "heSRPT",
    "srpt": "SRPT",
    "rs": "RS",
    "equi": "EQUI",
    "hell": "HELL",
    "knee": "KNEE",
}


def _label(policy: str, online: bool) -> str:
    if policy == "hesrpt" and online:
        return "A-heSRPT"
    return LABELS.get(policy, policy)


def grouped_bars(path, title, groups, series, values, errors=None, ylabel="mean slowdown"):
    """Draw ``values[g][s]`` as bars, one cluster per group and one colour per series."""
    values = np.asarray(values, dtype=float)
    errors = None if errors is None else np.asarray(errors, dtype=float)
    n_groups, n_series = values.shape
    width = 0.8 / n_series
    x = np.arange(n_groups)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.2 + 0.9 * n_groups * max(1, n_series / 3)), 3.2))
        for s, name in enumerate(series):
            err = None if errors is None else errors[:, s]
            ax.bar(x + (s - (n_series - 1) / 2) * width, values[:, s], width,
                   yerr=err, capsize=2, label=name, color=f"C{s}")
        ax.set_xticks(x, groups)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if np.nanmax(values) / max(np.nanmin(values), 1e-300) > 50:
            ax.set_yscale("log")
        ax.legend(fontsize=7, frameon=False, ncol=min(n_series, 3))
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata=_METADATA)
        plt.close(fig)
    return Path(path)


def sweep_figures(result, out_dir, metric: str = "mean_slowdown") -> list[Path]:
    """One SVG per p value; online sweeps cluster bars by load."""
    cfg = result.config
    online = cfg.setting == "online"
    out_dir = Path(out_dir)
    written = []
    stderr_key = metric.replace("mean_", "stderr_")
    for p in cfg.p_grid:
        cells = [result.cell(p, load) for load in cfg.loads]
        if online:
            groups = [f"load {load:g}" for load in cfg.loads]
            series = [_label(name, True) for name in cfg.policies]
            vals = [[cell[name][metric] for name in cfg.policies] for cell in cells]
            errs = [[cell[name][stderr_key] for name in cfg.policies] for cell in cells]
        else:
            # one cluster, coloured per policy
            groups = [f"p={p:g}"]
            series = [_label(name, False) for name in cfg.policies]
            vals = [[cells[0][name][metric] for name in cfg.policies]]
            errs = [[cells[0][name][stderr_key] for name in cfg.policies]]
        name = f"{cfg.setting}_p{p:g}.svg"
        title = f"{cfg.setting}, p={p:g}, N={cfg.n_servers:g}"
        written.append(grouped_bars(out_dir / name, title, groups, series, vals, errs,
                                    ylabel=metric.replace("_", " ")))
    return written
