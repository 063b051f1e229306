"""Operating-point lookup surfaces for per-order deviation and amplitude."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InputError
from .orders import DEFAULT_ORDERS

SCHEMA = "procengine.timbre-table"
SCHEMA_VERSION = 1

DEFAULT_RPM_AXIS = np.arange(0.0, 8000.0 + 1, 250.0)
DEFAULT_TORQUE_AXIS = np.arange(-200.0, 800.0 + 1, 50.0)


def _check_axis(axis, name):
    axis = np.asarray(axis, dtype=np.float64)
    if axis.ndim != 1 or axis.size == 0:
        raise InputError(f"{name} axis must be a non-empty 1-D sequence")
    if np.any(np.diff(axis) <= 0):
        raise InputError(f"{name} axis must be strictly increasing")
    return axis


def nearest_bin(axis: np.ndarray, values) -> np.ndarray:
    """Index of the closest bin centre (edges clamp)."""
    values = np.asarray(values, dtype=np.float64)
    if axis.size == 1:
        return np.zeros(values.shape, dtype=int)
    mids = 0.5 * (axis[1:] + axis[:-1])
    return np.searchsorted(mids, values, side="left")


@dataclass
class TimbreTable:
    """Per-order surfaces over an (RPM, torque) grid.

    ``deviation`` and ``amplitude`` are shaped ``(n_rpm, n_torque, n_orders)``;
    ``count`` holds the number of observations averaged into each cell
    (zero marks a nearest-filled cell).
    """

    rpm_axis: np.ndarray
    torque_axis: np.ndarray
    orders: np.ndarray
    deviation: np.ndarray
    amplitude: np.ndarray
    count: np.ndarray = None
    engine_id: str = "engine"
    _stacked: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.rpm_axis = _check_axis(self.rpm_axis, "rpm")
        self.torque_axis = _check_axis(self.torque_axis, "torque")
        self.orders = np.asarray(self.orders, dtype=np.float64)
        shape = (self.rpm_axis.size, self.torque_axis.size, self.orders.size)
        self.deviation = np.asarray(self.deviation, dtype=np.float64)
        self.amplitude = np.asarray(self.amplitude, dtype=np.float64)
        if self.deviation.shape != shape or self.amplitude.shape != shape:
            raise InputError(f"surfaces must be shaped {shape}")
        if self.count is None:
            self.count = np.ones(shape[:2], dtype=np.int64)
        self.count = np.asarray(self.count, dtype=np.int64)
        if self.count.shape != shape[:2]:
            raise InputError(f"occupancy must be shaped {shape[:2]}")
        if np.any(self.amplitude < 0):
            raise InputError("amplitudes must be non-negative")
        if np.any(np.abs(self.deviation) >= 0.5):
            raise InputError("|deviation| must stay below half an order")
        # deviation and amplitude side by side so one gather serves both
        self._stacked = np.concatenate([self.deviation, self.amplitude], axis=2)

    @property
    def observed(self) -> np.ndarray:
        return self.count > 0

    @classmethod
    def uniform(cls, deviation, amplitude, orders=DEFAULT_ORDERS, engine_id="engine",
                rpm_axis=(0.0,), torque_axis=(0.0,)) -> "TimbreTable":
        """Table whose every cell holds the same per-order values."""
        orders = np.asarray(orders, dtype=np.float64)
        shape = (len(rpm_axis), len(torque_axis), orders.size)
        dev = np.broadcast_to(np.asarray(deviation, dtype=np.float64), shape).copy()
        amp = np.broadcast_to(np.asarray(amplitude, dtype=np.float64), shape).copy()
        return cls(rpm_axis, torque_axis, orders, dev, amp, engine_id=engine_id)

    def _coords(self, axis, values):
        idx = np.interp(values, axis, np.arange(axis.size, dtype=np.float64))
        if axis.size == 1:
            return np.zeros(idx.shape, dtype=np.intp), np.zeros(idx.shape)
        i0 = np.minimum(np.floor(idx).astype(np.intp), axis.size - 2)
        return i0, idx - i0

    def lookup(self, rpm, torque):
        """Bilinear interpolation of both surfaces, clamped at the axis ends.

        Returns
        -------
        deviation, amplitude : ndarray
            Shaped ``(..., n_orders)`` for array inputs, ``(n_orders,)`` for
            scalars.
        """
        rpm = np.asarray(rpm, dtype=np.float64)
        torque = np.asarray(torque, dtype=np.float64)
        rpm, torque = np.broadcast_arrays(rpm, torque)
        shape = rpm.shape
        r0, fr = self._coords(self.rpm_axis, rpm.ravel())
        t0, ft = self._coords(self.torque_axis, torque.ravel())
        r1 = np.minimum(r0 + 1, self.rpm_axis.size - 1)
        t1 = np.minimum(t0 + 1, self.torque_axis.size - 1)
        s = self._stacked
        weights = np.stack([(1 - fr) * (1 - ft), (1 - fr) * ft, fr * (1 - ft), fr * ft], axis=1)

        cell = r0 * self.torque_axis.size + t0
        starts = np.flatnonzero(np.diff(cell)) + 1
        if cell.size and starts.size < cell.size // 64:
            # slowly varying controls: one small matmul per run of equal cells
            out = np.empty((cell.size, s.shape[2]))
            bounds = np.concatenate(([0], starts, [cell.size]))
            for a, b in zip(bounds[:-1], bounds[1:]):
                corners = np.stack([s[r0[a], t0[a]], s[r0[a], t1[a]], s[r1[a], t0[a]], s[r1[a], t1[a]]])
                np.matmul(weights[a:b], corners, out=out[a:b])
        else:
            out = (weights[:, 0:1] * s[r0, t0] + weights[:, 1:2] * s[r0, t1]
                   + weights[:, 2:3] * s[r1, t0] + weights[:, 3:4] * s[r1, t1])
        out = out.reshape(shape + (s.shape[2],))
        n = self.orders.size
        return out[..., :n], out[..., n:]

    def single_order(self, order: float) -> "TimbreTable":
        """Copy with every order but ``order`` silenced."""
        keep = np.isclose(self.orders, order)
        if not keep.any():
            raise InputError(f"order {order} not in table")
        amp = np.where(keep, self.amplitude, 0.0)
        return TimbreTable(self.rpm_axis, self.torque_axis, self.orders, self.deviation, amp,
                           self.count, self.engine_id)


def build_table(results, rpm_bins=DEFAULT_RPM_AXIS, torque_bins=DEFAULT_TORQUE_AXIS,
                engine_id: str = "engine") -> TimbreTable:
    """Average frame results into grid cells and nearest-fill the rest.

    Each result lands in the cell whose centres are closest to its mean RPM
    and torque. Unobserved cells copy the nearest observed cell, with
    distance measured in bin-index units on both axes.
    """
    results = list(results)
    if not results:
        raise InputError("no frame results to build a table from")
    rpm_axis = _check_axis(rpm_bins, "rpm")
    torque_axis = _check_axis(torque_bins, "torque")
    orders = results[0].orders
    for res in results:
        if res.orders.shape != orders.shape or not np.allclose(res.orders, orders):
            raise InputError("all results must share one order set")

    shape = (rpm_axis.size, torque_axis.size, orders.size)
    dev_sum = np.zeros(shape)
    amp_sum = np.zeros(shape)
    count = np.zeros(shape[:2], dtype=np.int64)
    ri = nearest_bin(rpm_axis, [r.rpm_mean for r in results])
    ti = nearest_bin(torque_axis, [r.torque_mean for r in results])
    for res, i, j in zip(results, ri, ti):
        dev_sum[i, j] += res.deviation
        amp_sum[i, j] += res.magnitude
        count[i, j] += 1

    observed = count > 0
    dev = np.zeros(shape)
    amp = np.zeros(shape)
    dev[observed] = dev_sum[observed] / count[observed][:, None]
    amp[observed] = amp_sum[observed] / count[observed][:, None]

    obs_idx = np.argwhere(observed)
    empty_idx = np.argwhere(~observed)
    if empty_idx.size:
        d2 = ((empty_idx[:, None, :] - obs_idx[None, :, :]) ** 2).sum(axis=2)
        src = obs_idx[np.argmin(d2, axis=1)]
        dev[empty_idx[:, 0], empty_idx[:, 1]] = dev[src[:, 0], src[:, 1]]
        amp[empty_idx[:, 0], empty_idx[:, 1]] = amp[src[:, 0], src[:, 1]]
    return TimbreTable(rpm_axis, torque_axis, orders, dev, amp, count, engine_id)


def table_to_dict(table: TimbreTable) -> dict:
    return {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "engine_id": table.engine_id,
        "rpm_axis": table.rpm_axis.tolist(),
        "torque_axis": table.torque_axis.tolist(),
        "orders": table.orders.tolist(),
        "count": table.count.tolist(),
        # per order: surfaces indexed [rpm][torque]
        "deviation": np.moveaxis(table.deviation, 2, 0).tolist(),
        "amplitude": np.moveaxis(table.amplitude, 2, 0).tolist(),
    }


def table_from_dict(doc: dict) -> TimbreTable:
    if doc.get("schema") != SCHEMA:
        raise FormatError(f"not a timbre table (schema {doc.get('schema')!r})")
    if doc.get("version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported table version {doc.get('version')!r}")
    try:
        return TimbreTable(
            rpm_axis=doc["rpm_axis"],
            torque_axis=doc["torque_axis"],
            orders=doc["orders"],
            deviation=np.moveaxis(np.asarray(doc["deviation"], dtype=np.float64), 0, 2),
            amplitude=np.moveaxis(np.asarray(doc["amplitude"], dtype=np.float64), 0, 2),
            count=doc["count"],
            engine_id=str(doc.get("engine_id", "engine")),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"malformed timbre table: {exc}") from exc


def save_table(table: TimbreTable, path) -> None:
    # json writes floats with repr(), so the text round trip is exact
    with open(path, "w") as fh:
        json.dump(table_to_dict(table), fh)


def load_table(path) -> TimbreTable:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return table_from_dict(doc)
