"""Render recipe CSVs to PNG files next to them.

The CSV files are the real output; these pictures are a convenience and
need matplotlib, which is imported lazily so the rest of the package works
without it.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

from .csvio import read_records


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _groups(records, key, x, y):
    out = defaultdict(lambda: ([], []))
    for rec in records:
        xs, ys = out[key(rec) if callable(key) else rec[key]]
        xs.append(rec[x])
        ys.append(rec[y])
    return out


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return path


def plot_fig2(plt, out):
    recs = read_records(out / "fig2.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    groups = _groups(recs, lambda r: (r["lam"], r["mu"]), "T", "cumulative")
    for (lam, mu), (xs, ys) in groups.items():
        ax.plot(xs, ys, label=f"λ={lam:g}, μ={mu:g}")
    ax.set_xlabel("T (slots)")
    ax.set_ylabel("P(cycle ≤ T)")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig2.png")]


def plot_fig3(plt, out):
    sim = read_records(out / "fig3.csv")
    ana = read_records(out / "fig3_analytic.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([r["lam"] for r in sim], [r["delay"] for r in sim], "o-", label="simulation")
    ax.plot([r["lam"] for r in ana], [r["delay"] for r in ana], ":", label="estimate")
    ax.plot([r["lam"] for r in ana], [r["delay_printed"] for r in ana], "--", label="estimate (printed +1)")
    ax.set_xlabel("λ")
    ax.set_ylabel("zero-state delay (slots)")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig3.png")]


def plot_fig5(plt, out):
    recs = read_records(out / "fig5.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for R, (ks, ys) in _groups(recs, "receivers", "k", "simulated").items():
        line, = ax.plot(ks, ys, "o-", label=f"R={R}")
        model = [r["independent"] for r in recs if r["receivers"] == R]
        ax.plot(ks, model, ":", color=line.get_color())
    ax.set_yscale("log")
    ax.set_xlabel("leader state")
    ax.set_ylabel("fraction of time")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig5.png")]


def plot_fig6(plt, out):
    recs = read_records(out / "fig6.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for R, (xs, ys) in _groups(recs, "receivers", "lam", "leader_state_delay").items():
        ax.plot(xs, ys, "o-", label=f"leader, R={R}")
    zs = _groups(recs, "receivers", "lam", "zero_state_delay")
    xs, ys = next(iter(zs.values()))
    ax.plot(xs, ys, "k--", label="zero state")
    ax.set_xlabel("λ")
    ax.set_ylabel("delay (slots)")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig6.png")]


def plot_fig7(plt, out):
    recs = read_records(out / "fig7.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    groups = _groups(recs, lambda r: (r["coding"], r["receivers"]), "s_star", "probability")
    for (coding, R), (xs, ys) in groups.items():
        ax.plot(xs, ys, "o-", label=f"{coding}, R={R}")
    ax.set_yscale("log")
    ax.set_xlabel("effective state s*")
    ax.set_ylabel("delivery probability")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig7.png")]


def plot_fig8(plt, out):
    recs = read_records(out / "fig8.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for series, (xs, ys) in _groups(recs, "series", "lam", "delay").items():
        style = "--" if series in ("zero_state", "leader_state") else "o-"
        ax.plot(xs, ys, style, label=str(series))
    ax.set_xlabel("λ")
    ax.set_ylabel("delivery delay (slots)")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig8.png")]


def plot_fig9(plt, out):
    recs = read_records(out / "fig9.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    groups = _groups(recs, "receivers", "n", "probability")
    width = 0.8 / max(len(groups), 1)
    for i, (R, (xs, ys)) in enumerate(groups.items()):
        ax.bar([x + i * width for x in xs], ys, width=width, label=f"R={R}")
    ax.set_xlabel("packets coded together")
    ax.set_ylabel("probability")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig9.png")]


def plot_fig10(plt, out):
    recs = read_records(out / "fig10.csv")
    paths = []
    for R in sorted({r["receivers"] for r in recs}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        sub = [r for r in recs if r["receivers"] == R]
        for scheme, (xs, ys) in _groups(sub, "scheme", "throughput", "delay").items():
            ax.plot(xs, ys, "o-", label=str(scheme))
        ax.set_xlabel("throughput (packets/slot)")
        ax.set_ylabel("delivery delay (slots)")
        ax.set_yscale("log")
        ax.set_title(f"R={R}")
        ax.legend(fontsize=8)
        paths.append(_save(fig, out / f"fig10_R{R}.png"))
    return paths


def plot_fig11(plt, out):
    recs = read_records(out / "fig11.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for f, (xs, ys) in _groups(recs, "f", "t", "lambda_est").items():
        ax.plot(xs, ys, label=f"f={f:g}")
    ax.set_xlabel("t (slots)")
    ax.set_ylabel("λ_est")
    ax.legend(fontsize=8)
    return [_save(fig, out / "fig11.png")]


def plot_custom(plt, out):
    recs = read_records(out / "custom.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([r["throughput"] for r in recs], [r["delay"] for r in recs], "o")
    ax.set_xlabel("throughput (packets/slot)")
    ax.set_ylabel("delivery delay (slots)")
    return [_save(fig, out / "custom.png")]


PLOTTERS = {
    "fig2": plot_fig2, "fig3": plot_fig3, "fig5": plot_fig5, "fig6": plot_fig6,
    "fig7": plot_fig7, "fig8": plot_fig8, "fig9": plot_fig9, "fig10": plot_fig10,
    "fig11": plot_fig11, "custom": plot_custom,
}


def render(name: str, out) -> list[Path]:
    plt = _pyplot()
    try:
        return PLOTTERS[name](plt, Path(out))
    finally:
        plt.close("all")
