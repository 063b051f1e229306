"""Order magnitude statistics over operating-point bins.

Annotated files are decoded, analyzed frame by frame and the per-order
magnitudes averaged in (RPM, torque) cells, giving the data behind
order-vs-RPM magnitude maps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import analyze_recording
from .codec import demux
from .core import AudioBuffer, FrameSpec
from .errors import InputError
from .orders import AnalysisConfig
from .table import DEFAULT_RPM_AXIS, DEFAULT_TORQUE_AXIS, TimbreTable, nearest_bin
from .wavio import read_wav


@dataclass
class OrderDistribution:
    orders: np.ndarray
    rpm_axis: np.ndarray
    torque_axis: np.ndarray
    count: np.ndarray          # (rpm, torque)
    magnitude: np.ndarray      # (rpm, torque, order) cell means
    magnitude_std: np.ndarray
    deviation: np.ndarray

    @property
    def occupied(self) -> np.ndarray:
        return self.count > 0

    def by_rpm(self) -> tuple[np.ndarray, np.ndarray]:
        """Count-weighted collapse over torque: ``(counts[rpm], magnitude[rpm, order])``."""
        counts = self.count.sum(axis=1)
        weighted = (self.magnitude * self.count[:, :, None]).sum(axis=1)
        mag = np.zeros_like(weighted)
        nz = counts > 0
        mag[nz] = weighted[nz] / counts[nz, None]
        return counts, mag

    def rows(self):
        for i, j in np.argwhere(self.occupied):
            for k, h in enumerate(self.orders):
                yield {
                    "order": float(h),
                    "rpm": float(self.rpm_axis[i]),
                    "torque": float(self.torque_axis[j]),
                    "frames": int(self.count[i, j]),
                    "magnitude": float(self.magnitude[i, j, k]),
                    "magnitude_std": float(self.magnitude_std[i, j, k]),
                    "deviation": float(self.deviation[i, j, k]),
                }

    def write_tsv(self, path) -> None:
        fields = ["order", "rpm", "torque", "frames", "magnitude", "magnitude_std", "deviation"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, delimiter="\t", lineterminator="\n")
            writer.writeheader()
            for row in self.rows():
                writer.writerow({k: (f"{v:.9g}" if isinstance(v, float) else v)
                                 for k, v in row.items()})


def aggregate(results, rpm_axis=DEFAULT_RPM_AXIS, torque_axis=DEFAULT_TORQUE_AXIS
              ) -> OrderDistribution:
    results = list(results)
    rpm_axis = np.asarray(rpm_axis, dtype=np.float64)
    torque_axis = np.asarray(torque_axis, dtype=np.float64)
    if results:
        orders = results[0].orders
    else:
        orders = np.asarray(AnalysisConfig().orders)
    shape = (rpm_axis.size, torque_axis.size, orders.size)
    count = np.zeros(shape[:2], dtype=np.int64)
    s1 = np.zeros(shape)
    s2 = np.zeros(shape)
    sd = np.zeros(shape)
    ri = nearest_bin(rpm_axis, [r.rpm_mean for r in results])
    ti = nearest_bin(torque_axis, [r.torque_mean for r in results])
    for res, i, j in zip(results, ri, ti):
        count[i, j] += 1
        s1[i, j] += res.magnitude
        s2[i, j] += res.magnitude ** 2
        sd[i, j] += res.deviation
    n = np.maximum(count, 1)[:, :, None]
    mean = s1 / n
    std = np.sqrt(np.maximum(s2 / n - mean ** 2, 0.0))
    return OrderDistribution(orders, rpm_axis, torque_axis, count, mean, std, sd / n)


def _load(source) -> AudioBuffer:
    if isinstance(source, AudioBuffer):
        return source
    return read_wav(Path(source))


def order_distribution_map(sources, rpm_axis=DEFAULT_RPM_AXIS, torque_axis=DEFAULT_TORQUE_AXIS,
                           spec: FrameSpec = FrameSpec(), cfg: AnalysisConfig = AnalysisConfig()
                           ) -> OrderDistribution:
    """Analyze 4-channel annotated files (paths or buffers) into a distribution map."""
    results = []
    for source in sources:
        audio = _load(source)
        if audio.channels != 4:
            raise InputError(f"{source}: annotated input must have 4 channels")
        stereo, trace = demux(audio)
        results.extend(analyze_recording(stereo, trace, spec, cfg))
    return aggregate(results, rpm_axis, torque_axis)


@dataclass
class ComparisonRow:
    order: float
    rpm: float
    torque: float
    measured: float
    reference: float

    @property
    def relative_error(self) -> float:
        if self.reference == 0:
            return 0.0 if self.measured == 0 else np.inf
        return abs(self.measured - self.reference) / self.reference


def compare_to_table(dist: OrderDistribution, table: TimbreTable, max_order: float = 8.0
                     ) -> list[ComparisonRow]:
    """Map magnitudes against the table at each occupied cell centre."""
    rows = []
    keep = dist.orders <= max_order + 1e-9
    for i, j in np.argwhere(dist.occupied):
        rpm, torque = dist.rpm_axis[i], dist.torque_axis[j]
        _, ref = table.lookup(rpm, torque)
        for k in np.flatnonzero(keep):
            t = int(np.argmin(np.abs(table.orders - dist.orders[k])))
            rows.append(ComparisonRow(float(dist.orders[k]), float(rpm), float(torque),
                                      float(dist.magnitude[i, j, k]), float(ref[t])))
    return rows
