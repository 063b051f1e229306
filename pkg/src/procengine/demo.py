"""A small self-contained generation plan built from synthetic inputs."""

from __future__ import annotations

import json
from pathlib import Path

from .reference import drive_trace, reference_table
from .table import save_table
from .traces import write_trace_csv

TRACE_RATE = 1000
_ENGINES = (("inline4", 0, 2.0), ("v6", 1, 3.0), ("v8", 2, 4.0), ("single", 3, 0.5))


def write_demo_plan(directory, duration: float = 6.0, seed: int = 0) -> Path:
    """Write four tables, three traces and a one-set plan (12 items).

    Traces are stored at 1 kHz and upsampled at render time.

    Returns
    -------
    Path
        The plan file.
    """
    root = Path(directory)
    (root / "tables").mkdir(parents=True, exist_ok=True)
    (root / "traces").mkdir(parents=True, exist_ok=True)
    tables = []
    for name, table_seed, firing in _ENGINES:
        path = Path("tables") / f"{name}.json"
        save_table(reference_table(name, seed=table_seed, firing_order=firing), root / path)
        tables.append({"id": name, "path": path.as_posix()})
    traces = []
    for k in range(3):
        path = Path("traces") / f"drive{k}.csv"
        write_trace_csv(root / path, drive_trace(duration, TRACE_RATE, seed=seed + k))
        traces.append({"id": f"drive{k}", "path": path.as_posix()})
    plan = {
        "version": 1,
        "seed": seed,
        "output_dir": "out",
        "tables": tables,
        "traces": traces,
        "sets": [{
            "name": "train",
            "variants": 1,
            "base": {},
            "variation": {"alpha": [0.1, 0.3], "burst_gain": [0.01, 0.03],
                          "resonator_gains": [0.2, 0.5]},
        }],
    }
    out = root / "plan.json"
    out.write_text(json.dumps(plan, indent=2) + "\n")
    return out
