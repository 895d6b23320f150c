"""Optional PNG figures for CLI reports (imported only with ``--plot``)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.frameon": False,
    # keep reruns byte-identical
    "svg.hashsalt": "icsec",
}


def _col(report, name):
    return np.array([np.nan if r.get(name) is None else r[name] for r in report.rows], dtype=float)


def _align(ax, report):
    for K in sorted({r["K"] for r in report.rows}):
        rows = [r for r in report.rows if r["K"] == K]
        T = np.array([r["T"] for r in rows])
        ax.plot(T, [r["fraction"] for r in rows], "o", label=f"enumerated, K={K}")
    T = np.linspace(1, max(r["T"] for r in report.rows), 100)
    ax.plot(T, ((T - 1) / T) ** 2, "k-", lw=0.8, label="((T-1)/T)^2")
    ax.set(xlabel="T", ylabel="|S| / M", ylim=(0, 1.02))


def _rates(ax, report):
    u = _col(report, "user")
    w = 0.27
    for k, name in enumerate(("R_comb", "penalty", "R_secure")):
        ax.bar(u + (k - 1) * w, _col(report, name), w, label=name)
    ax.set(xlabel="user", ylabel="bits per channel use", xticks=u)


def _sweep(ax, report):
    x = 0.5 * np.log2(1 + _col(report, "P"))
    ax.plot(x, _col(report, "sum_rate"), "o-", label="sum secure rate")
    ax.plot(x, x, "k--", lw=0.8, label="slope 1")
    ax.set(xlabel="log2(1+P)/2", ylabel="bits per channel use")


def _checks(ax, report):
    labels = [r["statistic"] for r in report.rows]
    v = _col(report, "value")
    y = np.arange(len(v))
    ax.barh(y, v, xerr=3 * np.nan_to_num(_col(report, "stderr")), label="value")
    b = _col(report, "bound")
    ax.plot(b, y, "k|", ms=12, label="bound")
    ax.set(yticks=y, yticklabels=labels, xlabel="value")


_DRAW = {"align": _align, "rates": _rates, "sweep": _sweep, "toy": _checks, "check": _checks}


def plot_report(report, path) -> Path:
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _DRAW[report.kind](ax, report)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path
