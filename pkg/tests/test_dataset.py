import json

import numpy as np
import pytest

from procengine.dataset import (MANIFEST_FIELDS, GenerationPlan, VariationSpec, generate,
                                load_plan, read_manifest, sample_variation)
from procengine.demo import write_demo_plan
from procengine.errors import FormatError, ParameterError
from procengine.synth import SynthesisParams
from procengine.wavio import read_wav


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    return write_demo_plan(root, duration=1.0)


def test_plan_has_twelve_items(demo):
    plan = load_plan(demo)
    assert len(plan) == 12 and len(list(plan.items())) == 12
    assert len({i.filename for i in plan.items()}) == 12


def test_generate_deterministic(demo, tmp_path):
    outputs = []
    for run in ("a", "b"):
        plan = load_plan(demo)
        plan.output_dir = tmp_path / run
        rows = generate(plan)
        assert len(rows) == 12 and all(r["status"] == "ok" for r in rows)
        outputs.append({r["path"]: (plan.output_dir / r["path"]).read_bytes() for r in rows})
    assert outputs[0] == outputs[1]
    manifests = [(tmp_path / run / "manifest.tsv").read_text() for run in ("a", "b")]
    assert manifests[0] == manifests[1]
    rows = read_manifest(tmp_path / "a" / "manifest.tsv")
    assert list(rows[0]) == MANIFEST_FIELDS and len(rows) == 12
    for r in rows:
        audio = read_wav(tmp_path / "a" / r["path"])
        assert audio.channels == 4 and audio.samples_per_channel == int(r["samples"])
    assert len({r["params_hash"] for r in rows}) == 12


def test_resume_skips_valid_outputs(demo, tmp_path):
    plan = load_plan(demo)
    plan.output_dir = tmp_path
    rows = generate(plan)
    first = tmp_path / rows[0]["path"]
    stamp = first.stat().st_mtime_ns
    broken = tmp_path / rows[1]["path"]
    broken.write_bytes(b"truncated")
    again = generate(plan)
    assert first.stat().st_mtime_ns == stamp
    assert read_wav(broken).channels == 4
    assert [r["params_hash"] for r in again] == [r["params_hash"] for r in rows]


def test_bad_item_is_isolated(tmp_path):
    root = tmp_path
    plan_path = write_demo_plan(root, duration=0.5)
    doc = json.loads(plan_path.read_text())
    doc["traces"].append({"id": "broken", "path": "traces/missing.csv"})
    plan = GenerationPlan.from_dict(doc, root)
    rows = generate(plan, jobs=2)
    assert len(rows) == 16
    bad = [r for r in rows if r["status"] != "ok"]
    assert len(bad) == 4 and all(r["trace_id"] == "broken" and r["error"] for r in bad)


def test_degenerate_ranges_exact():
    spec = VariationSpec({"alpha": [0.3, 0.3], "resonator_gains": [0.5, 0.5]})
    p = sample_variation(spec, 1, 0)
    assert p.alpha == 0.3 and p.resonator_gains == (0.5,) * 4


def test_sampled_gains_statistics():
    spec = VariationSpec({"resonator_gains": [0.2, 0.9]})
    g = np.array([sample_variation(spec, 4, i).resonator_gains for i in range(1000)]).ravel()
    assert g.min() >= 0.2 and g.max() < 0.9
    sigma = 0.7 / np.sqrt(12) / np.sqrt(g.size)
    assert abs(g.mean() - 0.55) < 3 * sigma


def test_same_seed_same_params():
    spec = VariationSpec({"alpha": [0, 1], "burst_gain": [0, 0.1]})
    assert sample_variation(spec, 7, 3) == sample_variation(spec, 7, 3)
    assert sample_variation(spec, 7, 3) != sample_variation(spec, 7, 4)


@pytest.mark.parametrize("ranges", [{"alpha": [0.5, 1.5]}, {"resonator_gains": [0.5, 1.0]},
                                    {"seed": [0, 1]}, {"alpha": [0.5, 0.2]}])
def test_invalid_variation(ranges):
    with pytest.raises(ParameterError):
        VariationSpec(ranges)


def test_plan_format_errors(tmp_path):
    with pytest.raises(FormatError):
        GenerationPlan.from_dict({"version": 2, "tables": [], "traces": [], "sets": []})
    with pytest.raises(FormatError):
        GenerationPlan.from_dict({"tables": [], "traces": []})
    with pytest.raises(FormatError):
        GenerationPlan.from_dict({"tables": ["a.json", "x/a.json"], "traces": [], "sets": []})
    with pytest.raises(FormatError):
        GenerationPlan.from_dict({"tables": [], "traces": [],
                                  "sets": [{"name": "s", "base": {"bogus": 1}}]})


def test_base_params_respected(tmp_path):
    plan_path = write_demo_plan(tmp_path, duration=0.25)
    doc = json.loads(plan_path.read_text())
    doc["sets"] = [{"name": "dry", "base": SynthesisParams.bypass().to_dict()}]
    doc["tables"] = doc["tables"][:1]
    doc["traces"] = doc["traces"][:1]
    rows = generate(GenerationPlan.from_dict(doc, tmp_path))
    audio = read_wav(tmp_path / "out" / rows[0]["path"])
    np.testing.assert_array_equal(audio.data[0], audio.data[1])
