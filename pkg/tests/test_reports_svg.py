import json
import math
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from billiard_forge.errors import ValidationError
from billiard_forge.gamma import curvature_report
from billiard_forge.reports import (
    SCHEMA,
    ExportError,
    dumps,
    export_reports,
    load_bundle,
    make_bundle,
    validate_bundle,
)
from billiard_forge.stability import trace_report, window_bounds
from billiard_forge.svg import PhasePortraitData, render_phase_portrait, render_scene
from billiard_forge.verification import TwistReport, verify_periodic

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def bundle(bp4, gamma_a, table_a):
    return make_bundle(blueprint=bp4, windows=window_bounds(bp4), trace=trace_report(bp4, gamma_a.k0),
                       curvature=curvature_report(gamma_a, bp4), gamma=gamma_a,
                       closure=verify_periodic(table_a, bp4))


def test_bundle_validates(bundle):
    validate_bundle(bundle)
    assert bundle["schema"] == 1
    assert bundle["windows"]["case"] == "item3"
    assert bundle["trace"]["classification"] == "elliptic"
    assert SCHEMA["$schema"].startswith("http://json-schema.org/draft-07")


def test_bundle_json_is_stable(bundle):
    text = dumps(bundle)
    assert json.loads(text) == bundle
    assert dumps(json.loads(text)) == text


def test_nonfinite_becomes_null():
    # an inconclusive twist fit carries NaN slope statistics
    nan = math.nan
    rep = TwistReport([1e-5, 2e-5, 5e-5, 1e-4, 2e-4], [], [], nan, nan, (nan, nan), nan, nan, "inconclusive", 0.28)
    doc = make_bundle(twist=rep)
    assert doc["twist"]["slope"] is None and doc["twist"]["slope_ci"] == [None, None]
    assert "NaN" not in dumps(doc)


def test_invalid_bundles_rejected(bundle):
    with pytest.raises(ValidationError):
        make_bundle(nonsense={"a": 1})
    bad = dict(bundle, schema=2)
    with pytest.raises(ValidationError, match="schema v1"):
        validate_bundle(bad)
    bad = json.loads(dumps(bundle))
    bad["trace"]["classification"] = "wobbly"
    with pytest.raises(ValidationError, match="trace/classification"):
        validate_bundle(bad)


def test_export_and_load(bundle, table_a, bp4, gamma_a, tmp_path):
    phase = PhasePortraitData([[(0.0, 0.1), (0.01, 0.12)]])
    paths = export_reports(bundle, tmp_path / "r" / "report.json", table=table_a, bp=bp4, gamma=gamma_a,
                           phase=phase)
    assert [p.name for p in paths] == ["report.json", "scene.svg", "phase.svg"]
    assert load_bundle(paths[0]) == bundle


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores permissions")
def test_unwritable_directory(bundle, tmp_path):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(0o500)
    try:
        with pytest.raises(ExportError):
            export_reports(bundle, d / "report.json")
    finally:
        d.chmod(0o700)


def test_path_through_a_file_fails(bundle, tmp_path):
    f = tmp_path / "file"
    f.write_text("x")
    with pytest.raises(ExportError) as ei:
        export_reports(bundle, f / "report.json")
    assert isinstance(ei.value, OSError)


# -- svg -------------------------------------------------------------------------------


def ids_of(text):
    root = ET.fromstring(text)
    return [el.get("id") for el in root.iter() if el.get("id")]


def test_scene_ids(table_a, bp4, gamma_a):
    text = render_scene(table_a, bp=bp4, gamma=gamma_a, trajectories=[np.array([[0, 0], [0.1, 0.2]])])
    assert ids_of(text) == ["base-arc", "gamma", "ngon", "strip-left", "strip-right", "orbit", "trajectory-0"]
    assert text.startswith('<?xml version="1.0" encoding="UTF-8"?>')


def test_scene_is_deterministic(table_c, bp4c, gamma_c):
    assert render_scene(table_c, bp4c, gamma_c) == render_scene(table_c, bp4c, gamma_c)


def test_scene_without_blueprint(table_a):
    assert ids_of(render_scene(table_a)) == ["base-arc", "gamma"]


def test_scene_flips_y(table_a):
    root = ET.fromstring(render_scene(table_a))
    x0, y0, w, h = map(float, root.get("viewBox").split())
    xmin, ymin, xmax, ymax = table_a.bounding_box()
    assert y0 < -ymax and y0 + h > -ymin


def test_phase_portrait():
    data = PhasePortraitData([np.array([[0.0, 0.0], [1.0, 0.5]]), np.array([[0.5, -0.5]])], ["a<b", "c"])
    text = render_phase_portrait(data)
    root = ET.fromstring(text)
    groups = [g for g in root.iter(SVG + "g")]
    assert [g.get("id") for g in groups] == ["trajectory-0", "trajectory-1"]
    assert len(groups[0].findall(SVG + "circle")) == 2
    assert groups[0].find(SVG + "title").text == "a<b"


def test_phase_portrait_validation():
    with pytest.raises(ValidationError):
        PhasePortraitData([np.array([[0.0, 1.5]])])
    with pytest.raises(ValidationError):
        PhasePortraitData([np.zeros((2, 2))], ["x", "y"])
    with pytest.raises(ValidationError):
        render_phase_portrait(PhasePortraitData([]))
