"""Figures for reports, rendered off-screen with the Agg backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .trace import Trace  # noqa: E402


def _save(fig, path) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def plot_ite_blowup(rows: list, path, plain: list = None) -> str:
    """Rewritten size per nesting level on a log scale, with the 2^k
    reference line anchored at level 0."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ks = [r["k"] for r in rows]
    ax.plot(ks, [r["rewritten"] for r in rows], "o-", label="size of R*(φ_k)")
    ax.plot(ks, [r["size"] for r in rows], "s--", label="size of φ_k")
    base = rows[0]["rewritten"]
    ax.plot(ks, [base * 2 ** k for k in ks], ":", color="grey", label="2^k reference")
    if plain:
        ax.plot([r["k"] for r in plain], [r["rewritten"] for r in plain], "^-", alpha=0.6,
                label="plain family")
    ax.set_yscale("log")
    ax.set_xlabel("ite nesting k")
    ax.set_ylabel("formula size")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_size_scatter(points: list, c: int, d: int, path) -> str:
    """Rewritten size against input size with the frozen linear bound."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.scatter(xs, ys, s=6, alpha=0.3)
    top = max(xs) if xs else 1
    ax.plot([0, top], [d, c * top + d], color="red", label=f"{c}·size + {d}")
    ax.set_xlabel("size of φ")
    ax.set_ylabel("size of R*(φ)")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_trace(t: Trace, path, names=None, title: str = "") -> str:
    """Waveform of the boolean (and small integer) variables of a trace.
    The loop of a lasso is shaded."""
    names = list(names or t.vocab.names)
    states = list(t.stem) + list(t.loop or ())
    n = len(states)
    fig, ax = plt.subplots(figsize=(max(4, 0.55 * n + 2), 0.45 * len(names) + 1))
    for row, name in enumerate(reversed(names)):
        ys, xs = [], []
        for j, s in enumerate(states):
            if name not in s:
                continue
            v = s[name]
            y = float(v) if isinstance(v, (bool, int)) else 0.5
            xs += [j, j + 1]
            ys += [row + 0.8 * y / max(1, _span(t, name))] * 2
        ax.plot(xs, ys, drawstyle="steps-post", lw=1.5)
    if t.is_lasso:
        ax.axvspan(len(t.stem), n, color="0.9", zorder=0)
    ax.set_yticks([r + 0.4 for r in range(len(names))])
    ax.set_yticklabels(list(reversed(names)), fontsize=8)
    ax.set_xticks(range(n + 1))
    ax.set_xlim(0, n)
    ax.set_xlabel("position")
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def _span(t: Trace, name: str) -> int:
    sort = t.vocab[name].sort
    if sort.kind == "int":
        return max(1, sort.hi)
    return 1
