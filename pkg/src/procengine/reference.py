"""Synthetic engine tables and control traces.

Real source recordings are not shipped, so these stand in for them in the
examples, the self-consistency checks and the demo plan.
"""

from __future__ import annotations

import numpy as np

from .core import ControlTrace
from .orders import DEFAULT_ORDERS
from .table import DEFAULT_RPM_AXIS, DEFAULT_TORQUE_AXIS, TimbreTable


def reference_table(engine_id: str = "ref", seed: int = 0, firing_order: float = 4.0,
                    level: float = 0.02, rpm_axis=DEFAULT_RPM_AXIS,
                    torque_axis=DEFAULT_TORQUE_AXIS) -> TimbreTable:
    """A smooth table with a dominant firing order and decaying upper orders.

    Amplitudes grow with RPM and load; deviations are small and drift with
    RPM. ``seed`` perturbs the per-order profile so different engines differ.
    """
    rng = np.random.default_rng(seed)
    orders = np.asarray(DEFAULT_ORDERS)
    profile = level / (1.0 + 0.15 * orders) * rng.uniform(0.4, 1.0, orders.size)
    profile[np.isclose(orders, firing_order)] = 4 * level
    profile[np.isclose(orders, 2 * firing_order)] = 2 * level
    half = np.mod(orders, 1.0) > 0
    profile[half] *= 0.5
    dev0 = rng.uniform(-0.02, 0.02, orders.size)
    dev_slope = rng.uniform(-0.02, 0.02, orders.size)

    r = (np.asarray(rpm_axis) / 8000.0)[:, None, None]
    t = ((np.asarray(torque_axis) + 200.0) / 1000.0)[None, :, None]
    amp = profile * (0.5 + 0.6 * r) * (0.6 + 0.6 * t)
    dev = np.broadcast_to(dev0 + dev_slope * r, amp.shape) + 0 * t
    return TimbreTable(rpm_axis, torque_axis, orders, dev, amp, engine_id=engine_id)


def held_trace(points, hold: int, sample_rate: int, wobble: float = 0.0,
               wobble_hz: float = 0.4) -> ControlTrace:
    """Piecewise-constant operating points, each held for ``hold`` samples.

    ``wobble`` adds a relative sinusoidal RPM modulation within each hold.
    """
    rpm = []
    torque = []
    t = np.arange(hold) / sample_rate
    for k, (r, q) in enumerate(points):
        mod = 1.0 + wobble * np.sin(2 * np.pi * wobble_hz * t + k)
        rpm.append(r * mod)
        torque.append(np.full(hold, float(q)))
    return ControlTrace(np.concatenate(rpm), np.concatenate(torque), sample_rate)


def drive_trace(duration: float, sample_rate: int, seed: int = 0, idle: float = 800.0,
                redline: float = 6500.0) -> ControlTrace:
    """A smooth random driving cycle: gear-like RPM ramps with varying load."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    n_knots = max(2, int(duration / 2.0) + 1)
    knot_t = np.linspace(0.0, duration, n_knots)
    knot_rpm = rng.uniform(idle * 1.5, redline, n_knots)
    knot_rpm[0] = idle * 1.5
    knot_tq = rng.uniform(-80.0, 600.0, n_knots)
    t = np.arange(n) / sample_rate
    return ControlTrace(np.interp(t, knot_t, knot_rpm), np.interp(t, knot_t, knot_tq),
                        sample_rate)
