"""Static heatmaps of scalar grid fields."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CMAP = "viridis"


def heatmap(path, values, charts, title="", points=(), active=None):
    """One panel per chart; ``charts`` lists ``(name, w00, du, dv)`` tuples and
    ``points`` holds ``(chart_index, location, label)`` annotations."""
    values = np.asarray(values, dtype=float)
    C = values.shape[0]
    fig, axes = plt.subplots(1, C, figsize=(4.2 * C, 3.8), squeeze=False)
    finite = values[np.isfinite(values)]
    if active is not None:
        finite = values[np.asarray(active, dtype=bool) & np.isfinite(values)]
    vmin, vmax = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if vmax - vmin < 1e-300:
        vmin, vmax = vmin - 0.5, vmax + 0.5
    for ci in range(C):
        ax = axes[0, ci]
        name, w0, du, dv = charts[ci]
        n1, n2 = values.shape[1:]
        extent = (w0.real, w0.real + du * (n1 - 1), w0.imag, w0.imag + dv * (n2 - 1))
        data = values[ci].copy()
        if active is not None:
            data = np.where(active[ci], data, np.nan)
        im = ax.imshow(data.T, origin="lower", extent=extent, cmap=CMAP,
                       vmin=vmin, vmax=vmax, aspect="auto")
        for pc, loc, label in points:
            if pc == ci:
                ax.plot([loc.real], [loc.imag], marker="x", color="red", ms=8, mew=2)
                ax.annotate(label, (loc.real, loc.imag), color="red", fontsize=8,
                            xytext=(4, 4), textcoords="offset points")
        ax.set_title(f"{title} [{name}]" if C > 1 else title, fontsize=9)
        ax.set_xlabel("Re w")
        ax.set_ylabel("Im w")
    fig.colorbar(im, ax=axes.ravel().tolist(), shrink=0.85)
    fig.savefig(path, dpi=90)
    plt.close(fig)
    return path
