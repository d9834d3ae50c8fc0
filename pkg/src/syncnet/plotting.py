"""SVG rendering of simulation traces.

matplotlib is imported lazily so that headless simulation work never
pays for a plotting backend.
"""

from __future__ import annotations

import numpy as np

from .sim import Trace, sync_error

__all__ = ["trace_svg"]

_MAX_POINTS = 4000


def _downsample(times: np.ndarray) -> np.ndarray:
    stride = max(1, len(times) // _MAX_POINTS)
    idx = np.arange(0, len(times), stride)
    if idx[-1] != len(times) - 1:
        idx = np.append(idx, len(times) - 1)
    return idx


def trace_svg(trace: Trace, path) -> None:
    """Write node outputs (and the target, when present) as an SVG."""
    import matplotlib

    matplotlib.use("svg", force=False)
    import matplotlib.pyplot as plt

    idx = _downsample(trace.times)
    t = trace.times[idx]
    fig, (ax_y, ax_e) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    for i in range(trace.n_nodes):
        ax_y.plot(t, trace.y[i, idx], lw=0.9, label=f"node {i + 1}")
    if trace.target is not None:
        ax_y.plot(t, trace.target[idx], "k--", lw=1.2, label="input average")
    ax_y.set_ylabel("output")
    ax_y.legend(loc="upper right", fontsize=8, ncol=2)
    title = trace.name or "trace"
    ax_y.set_title(title)

    series, _ = sync_error(trace)
    ax_e.semilogy(t, np.maximum(series[idx], 1e-16), lw=0.9)
    ax_e.set_xlabel("time")
    ax_e.set_ylabel("sync error")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
