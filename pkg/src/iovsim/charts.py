"""Static SVG charts: one file per indicator, one curve per grid point."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import INDICATORS, MetricsSeries  # noqa: E402

AXIS_LABELS = {
    "loss_rate": "packet loss rate (fraction)",
    "arrive_rate": "task arrival rate (fraction)",
    "node_load": "node load rate (fraction)",
    "link_load": "link load rate (fraction)",
    "sumflow": "total network traffic (packets)",
}


def emit_charts(series: Mapping[str, MetricsSeries], out_dir, metrics=INDICATORS) -> list[Path]:
    """Write ``<metric>.svg`` into ``out_dir`` for each metric and return the paths.

    ``series`` maps a legend label to its (usually seed-averaged) series.
    """
    if not series:
        raise ValueError("no series to chart")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for metric in metrics:
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for label, s in series.items():
            ax.plot(s["slot"], s[metric], label=label, linewidth=1.2)
        ax.set_xlabel("time slot index")
        ax.set_ylabel(AXIS_LABELS[metric])
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = out_dir / f"{metric}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        paths.append(path)
    return paths
