"""Order-map figures for validation reports."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .distribution import OrderDistribution  # noqa: E402
from .table import TimbreTable  # noqa: E402

FLOOR_DB = -80.0


def _db(x):
    return 20 * np.log10(np.maximum(x, 10 ** (FLOOR_DB / 20)))


def _panel(ax, rpm_axis, orders, mag, occupied, title):
    img = np.where(occupied[:, None], _db(mag), np.nan).T
    mesh = ax.pcolormesh(rpm_axis, orders, img, shading="nearest", cmap="magma",
                         vmin=FLOOR_DB, vmax=max(FLOOR_DB + 1, np.nanmax(img) if occupied.any() else 0))
    ax.set_xlabel("RPM")
    ax.set_title(title)
    return mesh


def plot_order_map(dist: OrderDistribution, path, table: TimbreTable | None = None,
                   max_order: float | None = None):
    """Magnitude (dB) per order against RPM, collapsed over torque.

    With ``table`` a second panel shows the table sampled at the same cells
    so the two can be compared side by side.
    """
    counts, mag = dist.by_rpm()
    occupied = counts > 0
    orders = dist.orders
    keep = orders <= max_order if max_order else np.ones(orders.size, bool)
    panels = 1 if table is None else 2
    fig, axes = plt.subplots(1, panels, figsize=(5.5 * panels, 4.5), squeeze=False,
                             sharey=True)
    mesh = _panel(axes[0, 0], dist.rpm_axis, orders[keep], mag[:, keep], occupied,
                  "analyzed")
    if table is not None:
        ref = np.zeros_like(mag)
        for i in np.flatnonzero(occupied):
            w = dist.count[i] / dist.count[i].sum()
            _, amps = table.lookup(np.full(dist.torque_axis.size, dist.rpm_axis[i]),
                                   dist.torque_axis)
            ref[i] = (w[:, None] * amps).sum(axis=0)
        _panel(axes[0, 1], dist.rpm_axis, orders[keep], ref[:, keep], occupied,
               f"table {table.engine_id}")
    axes[0, 0].set_ylabel("engine order")
    fig.colorbar(mesh, ax=axes[0, -1], label="magnitude [dB]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
