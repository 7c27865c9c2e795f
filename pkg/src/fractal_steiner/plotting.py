"""Figure rendering for the report path; files only, no interactive backends."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 4.5
colors = ["#08589e", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e"]

params = {
    "axes.prop_cycle": matplotlib.cycler(color=colors),
    "axes.labelsize": 10,
    "font.family": "serif",
    "font.size": 9,
    "mathtext.fontset": "stix",
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 150,
    "lines.markersize": 3,
    "lines.linewidth": 1.2,
    "savefig.bbox": "tight",
}

# PNG metadata carries the matplotlib version and a timestamp otherwise
_META = {"Software": None}


def _new():
    with plt.rc_context(params):
        fig, ax = plt.subplots()
    return fig, ax


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    with plt.rc_context(params):
        fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def loglog(path, x, series: dict, xlabel: str, ylabel: str, title: str | None = None,
           guides: dict | None = None) -> Path:
    """Log-log curves; ``guides`` maps a label to (slope, anchor_x, anchor_y)."""
    with plt.rc_context(params):
        fig, ax = _new()
        for label, y in series.items():
            y = np.asarray(y, float)
            ok = y > 0
            ax.loglog(np.asarray(x)[ok], y[ok], marker="o", ms=2, label=label)
        for label, (slope, x0, y0) in (guides or {}).items():
            xs = np.array([np.min(x), np.max(x)])
            ax.loglog(xs, y0 * (xs / x0) ** slope, ls="--", lw=0.8, color="0.4", label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def basic_functions(path, t, beta0, beta1, title: str | None = None) -> Path:
    return loglog(path, t, {r"$\beta_0$": beta0, r"$\beta_1$": beta1}, r"$t$", r"$\beta_i(t)$", title)


def tube(path, eps, grid_volume, steiner_volume=None, title: str | None = None) -> Path:
    series = {"grid": grid_volume}
    if steiner_volume is not None:
        series["basic functions"] = steiner_volume
    return loglog(path, eps, series, r"$\varepsilon$", r"$V(A_\varepsilon \setminus A)$", title)


def poles(path, records, title: str | None = None) -> Path:
    with plt.rc_context(params):
        fig, ax = _new()
        w = np.array([p.w for p in records])
        rem = np.array([p.removable for p in records], bool)
        if len(w):
            ax.plot(w.real[~rem], w.imag[~rem], "o", label="pole")
            if rem.any():
                ax.plot(w.real[rem], w.imag[rem], "x", color="0.3", label="removable")
        ax.axvline(0, color="0.8", lw=0.6)
        ax.set_xlabel(r"Re $w$")
        ax.set_ylabel(r"Im $w$")
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def zeta_sweep(path, evaluations, title: str | None = None) -> Path:
    with plt.rc_context(params):
        fig, ax = _new()
        routes = sorted({e.route for e in evaluations})
        for r in routes:
            ev = [e for e in evaluations if e.route == r]
            ax.semilogy([e.s.imag for e in ev], [abs(e.value) for e in ev], marker="o", ms=2, label=r)
        ax.set_xlabel(r"Im $s$")
        ax.set_ylabel(r"$|\zeta(s)|$")
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def partial_sums(path, series, title: str | None = None) -> Path:
    with plt.rc_context(params):
        fig, ax = _new()
        ax.plot(np.arange(len(series.partial_sums)), series.partial_sums, marker="o", ms=2)
        ax.set_xlabel("terms summed")
        ax.set_ylabel("partial sum")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def write_dat(path, columns: dict, header: list[str] | None = None) -> Path:
    """Whitespace-separated columns for gnuplot, log10 of positive data."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n], float) for n in names]
    with open(path, "w") as fh:
        for line in header or []:
            fh.write(f"# {line}\n")
        fh.write("# " + " ".join(f"log10_{n}" for n in names) + "\n")
        for row in zip(*data):
            if all(v > 0 for v in row):
                fh.write(" ".join(f"{np.log10(v):.12g}" for v in row) + "\n")
    return path
