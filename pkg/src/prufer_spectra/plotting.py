"""SVG plot of an eigenphase flow.

One polyline per branch over the energy range, the axis ``theta = 0`` and a
marker at every zero passage. Output bytes depend only on the flow: the
Agg backend is forced, the SVG id salt is fixed, fonts are written as text
and the date metadata is dropped.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "svg.hashsalt": "prufer-spectra",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.0,
    "path.simplify": False,
}


def _segments(E, th):
    """Split a branch where it wraps from ``pi`` to ``-pi`` so no line jumps."""
    cut = np.nonzero(np.abs(np.diff(th)) > np.pi)[0] + 1
    return zip(np.split(E, cut), np.split(th, cut))


def flow_svg(flow, title=None):
    """SVG text for `flow` (an :class:`EigenphaseFlow`)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        E = flow.energies
        for j in range(flow.branches):
            color = f"C{j % 10}"
            for x, y in _segments(E, flow.phases[:, j]):
                ax.plot(x, y, color=color)
        ax.axhline(0.0, color="0.3", linewidth=0.6)
        cross = flow.crossing_energies()
        if cross.size:
            ax.plot(cross, np.zeros_like(cross), "o", color="k", markersize=3)
        ax.set_xlim(E[0], E[-1])
        ax.set_ylim(-np.pi, np.pi)
        ax.set_yticks([-np.pi, -np.pi / 2, 0, np.pi / 2, np.pi])
        ax.set_yticklabels(["-π", "-π/2", "0", "π/2", "π"])
        ax.set_xlabel("E")
        ax.set_ylabel("eigenphase")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def save_flow_svg(path, flow, title=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(flow_svg(flow, title))
