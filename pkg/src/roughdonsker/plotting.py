"""PNG figures for experiment reports (matplotlib, Agg backend).

Figures are a convenience next to the CSV tables; the tables and
``report.json`` remain the data contract.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# kind -> list of (figure name, table, x, y, yerr, group column, log-x, log-y)
FIGURES = {
    "fdd-clt": [("ks", "ks", "n", "ks", "ks_se", "coordinate", True, True)],
    "levy-area": [("area_ecf", "area_ecf", "lambda", "re", "re_se", "n", False, False)],
    "moment-scaling": [("moments", "moments", "k", "moment", "moment_se", None, True, True)],
    "holder-threshold": [("quantiles", "quantiles", "n", "quantile", "quantile_se", "alpha", True, True)],
    "wong-zakai": [("gaps", "gaps", "n", "gap", "gap_se", "f", True, False)],
    "stochastic-integral": [("ecf", "ecf", "lambda", "re", "re_se", "n", False, False)],
}


def _plot_table(ax, rows, x, y, yerr, group, label_prefix=""):
    groups = {}
    for r in rows:
        groups.setdefault(r.get(group) if group else None, []).append(r)
    for key, rs in groups.items():
        rs = sorted(rs, key=lambda r: r[x])
        xs = np.array([r[x] for r in rs], dtype=float)
        ys = np.array([r[y] for r in rs], dtype=float)
        es = np.array([r[yerr] for r in rs], dtype=float) if yerr else None
        label = label_prefix + (f"{group}={key}" if group else y)
        ax.errorbar(xs, ys, yerr=es, marker="o", ms=3, capsize=2, label=label)


def render_figures(report, out_dir: str) -> list[str]:
    """Write the figures declared for ``report``'s kind; returns the file paths."""
    kind = report.body["kind"]
    written = []
    for name, table, x, y, yerr, group, logx, logy in FIGURES.get(kind, []):
        rows = report.tables.get(table) or []
        if not rows:
            continue
        fig, ax = plt.subplots(figsize=(5, 3.6))
        _plot_table(ax, rows, x, y, yerr, group)
        if kind in ("levy-area", "stochastic-integral"):
            oracle = sorted({(r["lambda"], r["oracle_re"]) for r in rows})
            ax.plot([o[0] for o in oracle], [o[1] for o in oracle], "k--", lw=1, label="oracle")
        if kind == "wong-zakai":
            ax.axhline(0.0, color="k", lw=0.8)
        if kind == "moment-scaling":
            fit = report.tables.get("fit", [{}])[0]
            if fit:
                ks = np.array([r["k"] for r in rows], dtype=float)
                ax.plot(ks, np.exp(fit["intercept"]) * ks ** fit["slope"], "k--", lw=1,
                        label=f"slope {fit['slope']:.3f}")
        if logx:
            ax.set_xscale("log", base=2)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.set_ylabel(y)
        ax.set_title(f"{kind}: {name}")
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{name}.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
