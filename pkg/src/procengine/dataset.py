"""Plan-driven generation of annotated engine audio sets.

A plan crosses timbre tables with a pool of control traces inside named
sets, each set with its own synthesis regime. Every item gets a seed derived
from ``(plan seed, set index, item index)``, so outputs are identical
regardless of worker count or rerun.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import mux
from .errors import EngineError, FormatError, ParameterError
from .synth import SynthesisParams, synthesize
from .table import load_table
from .traces import load_trace
from .wavio import read_wav, write_wav

log = logging.getLogger(__name__)

PLAN_VERSION = 1
MANIFEST_NAME = "manifest.tsv"
MANIFEST_FIELDS = ["set", "path", "engine_id", "trace_id", "variant", "params_hash",
                   "duration_s", "samples", "status", "error"]

_SCALAR_FIELDS = {"alpha", "burst_cutoff", "burst_gain", "stereo_offset", "master_gain"}
_VECTOR_FIELDS = {"burst_weights", "burst_exponents", "resonator_delays", "resonator_gains"}


@dataclass
class VariationSpec:
    """Uniform ranges ``[lo, hi)`` for synthesis parameters.

    Vector parameters take either one ``[lo, hi]`` pair applied to every
    element or one pair per element.
    """

    ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, rng in self.ranges.items():
            if name not in _SCALAR_FIELDS | _VECTOR_FIELDS:
                raise ParameterError(f"cannot vary parameter {name!r}")
            pairs = self._pairs(name, rng)
            for lo, hi in pairs:
                if hi < lo:
                    raise ParameterError(f"{name}: empty range [{lo}, {hi}]")
            if name == "alpha" and any(lo < 0 or hi > 1 for lo, hi in pairs):
                raise ParameterError("alpha range must lie in [0, 1]")
            # uniform() may round up to hi, so the upper end itself must be stable
            if name == "resonator_gains" and any(lo < 0 or hi >= 1 for lo, hi in pairs):
                raise ParameterError("resonator gain ranges must lie in [0, 1)")

    @staticmethod
    def _pairs(name, rng):
        arr = np.asarray(rng, dtype=np.float64)
        if arr.shape == (2,):
            return [tuple(arr)]
        if arr.ndim == 2 and arr.shape[1] == 2 and name in _VECTOR_FIELDS:
            return [tuple(p) for p in arr]
        raise ParameterError(f"{name}: expected [lo, hi] or a list of pairs")


def sample_variation(spec: VariationSpec, seed, index: int,
                     base: SynthesisParams | None = None) -> SynthesisParams:
    """Deterministic draw of synthesis parameters for item ``index``.

    Parameters are drawn in sorted name order from a generator keyed on
    ``(seed, index)``; the render seed is derived from the same key.
    """
    base = base or SynthesisParams()
    key = list(np.atleast_1d(seed).astype(np.int64)) + [int(index)]
    rng = np.random.default_rng(key)
    values = {}
    for name in sorted(spec.ranges):
        pairs = spec._pairs(name, spec.ranges[name])
        if name in _SCALAR_FIELDS:
            lo, hi = pairs[0]
            values[name] = float(rng.uniform(lo, hi))
        else:
            n = len(getattr(base, name))
            if len(pairs) == 1:
                pairs = pairs * n
            if len(pairs) != n:
                raise ParameterError(f"{name}: {len(pairs)} ranges for {n} values")
            values[name] = tuple(float(rng.uniform(lo, hi)) for lo, hi in pairs)
    values["seed"] = int(np.random.SeedSequence(key).generate_state(1)[0])
    return dataclasses.replace(base, **values)


@dataclass
class SetSpec:
    name: str
    variants: int = 1
    base: dict = field(default_factory=dict)
    variation: VariationSpec = field(default_factory=VariationSpec)


@dataclass
class GenerationPlan:
    tables: list            # [(id, path)]
    traces: list            # [(id, path)]
    sets: list              # [SetSpec]
    seed: int = 0
    output_dir: Path = Path("dataset")

    @classmethod
    def from_dict(cls, doc: dict, root: Path = Path(".")) -> "GenerationPlan":
        if doc.get("version", PLAN_VERSION) != PLAN_VERSION:
            raise FormatError(f"unsupported plan version {doc.get('version')!r}")
        try:
            tables = [_ref(t, root) for t in doc["tables"]]
            traces = [_ref(t, root) for t in doc["traces"]]
            sets = [SetSpec(s["name"], int(s.get("variants", 1)), dict(s.get("base", {})),
                            VariationSpec(dict(s.get("variation", {}))))
                    for s in doc["sets"]]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed plan: {exc}") from exc
        out = Path(doc.get("output_dir", "dataset"))
        plan = cls(tables, traces, sets, int(doc.get("seed", 0)),
                   out if out.is_absolute() else root / out)
        plan.validate()
        return plan

    def validate(self):
        for kind, refs in (("table", self.tables), ("trace", self.traces)):
            ids = [i for i, _ in refs]
            if len(set(ids)) != len(ids):
                raise FormatError(f"duplicate {kind} ids in plan")
        names = [s.name for s in self.sets]
        if len(set(names)) != len(names):
            raise FormatError("duplicate set names in plan")
        for s in self.sets:
            SynthesisParams.from_dict(s.base)

    def items(self):
        """Every planned render, in canonical order."""
        for set_idx, s in enumerate(self.sets):
            index = 0
            for table_id, table_path in self.tables:
                for trace_id, trace_path in self.traces:
                    for variant in range(s.variants):
                        yield Item(s.name, set_idx, index, table_id, table_path, trace_id,
                                   trace_path, variant)
                        index += 1

    def __len__(self):
        return sum(s.variants for s in self.sets) * len(self.tables) * len(self.traces)


def _ref(entry, root: Path):
    if isinstance(entry, str):
        path = Path(entry)
        ident = path.stem
    else:
        path = Path(entry["path"])
        ident = str(entry.get("id", path.stem))
    return ident, (path if path.is_absolute() else root / path)


def load_plan(path) -> GenerationPlan:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return GenerationPlan.from_dict(doc, path.parent)


@dataclass
class Item:
    set_name: str
    set_index: int
    index: int
    table_id: str
    table_path: Path
    trace_id: str
    trace_path: Path
    variant: int

    @property
    def filename(self) -> str:
        return f"{self.table_id}_{self.trace_id}_{self.variant}.wav"


def _existing_ok(path: Path, samples: int, rate: int) -> bool:
    if not path.exists():
        return False
    try:
        audio = read_wav(path)
    except EngineError:
        return False
    return (audio.channels == 4 and audio.samples_per_channel == samples
            and audio.sample_rate == rate)


def render_item(item: Item, plan: GenerationPlan) -> dict:
    """Render and write one item; failures come back as a row, never raised."""
    spec = plan.sets[item.set_index]
    rel = Path(item.set_name) / item.filename
    row = {"set": item.set_name, "path": rel.as_posix(), "engine_id": item.table_id,
           "trace_id": item.trace_id, "variant": item.variant, "params_hash": "",
           "duration_s": "", "samples": "", "status": "ok", "error": ""}
    try:
        base = SynthesisParams.from_dict(spec.base)
        params = sample_variation(spec.variation, [plan.seed, item.set_index], item.index, base)
        row["params_hash"] = params.digest()
        trace = load_trace(item.trace_path).resampled(params.sample_rate)
        row["samples"] = len(trace)
        row["duration_s"] = f"{trace.duration:.6f}"
        out = plan.output_dir / rel
        if _existing_ok(out, len(trace), params.sample_rate):
            return row
        table = load_table(item.table_path)
        rendering = synthesize(trace, table, params)
        annotated = mux(rendering.audio, trace)
        out.parent.mkdir(parents=True, exist_ok=True)
        tmp = out.with_name(out.name + ".part")
        write_wav(tmp, annotated)
        os.replace(tmp, out)
    except (EngineError, OSError) as exc:
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\t", " ").replace("\n", " ")
    return row


def _render_star(args):
    return render_item(*args)


def generate(plan: GenerationPlan, jobs: int = 1) -> list[dict]:
    """Render every planned item and write the manifest.

    Returns
    -------
    list of dict
        Manifest rows in plan order.
    """
    plan.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = plan.output_dir / MANIFEST_NAME
    work = [(item, plan) for item in plan.items()]
    rows = []
    with open(manifest, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_FIELDS, delimiter="\t",
                                lineterminator="\n")
        writer.writeheader()
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_render_star, work)
                for row in results:
                    writer.writerow(row)
                    fh.flush()
                    rows.append(row)
        else:
            for args in work:
                row = _render_star(args)
                writer.writerow(row)
                fh.flush()
                rows.append(row)
    failed = sum(r["status"] != "ok" for r in rows)
    log.info("generated %d items (%d failed) into %s", len(rows), failed, plan.output_dir)
    return rows


def read_manifest(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh, delimiter="\t"))
