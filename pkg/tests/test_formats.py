import json
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from safeshield import formats, learner, simgen
from safeshield.evaluation import MetricsReport
from conftest import make_line_demo

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


def small_corpus():
    from safeshield.demonstrations import DemoCorpus

    return DemoCorpus(
        demos=[
            make_line_demo("safe00", 1.5, (0.1, 0.8), (0.9, 0.8), 4),
            make_line_demo("failed00", -0.5, (0.1, 0.4), (0.45, 0.4), 3),
        ]
    )


def test_canonical_dumps_sorted_compact():
    text = formats.canonical_dumps({"b": 1, "a": [True, None, "x"]})
    assert text == '{"a":[true,null,"x"],"b":1}'


def test_canonical_float_17_digits():
    assert formats.canonical_dumps(0.1) == "0.10000000000000001"
    assert formats.canonical_dumps(1.0) == "1"
    assert float(formats.canonical_dumps(1e-5)) == 1e-5


def test_canonical_rejects_nonfinite():
    with pytest.raises(formats.FormatError):
        formats.canonical_dumps(float("nan"))
    with pytest.raises(formats.FormatError):
        formats.canonical_dumps({"x": float("inf")})


@given(
    st.floats(allow_nan=False, allow_infinity=False, width=64),
)
def test_canonical_float_round_trip_stable(value):
    """17 significant digits identify a double uniquely: format -> parse ->
    format is a fixed point, and the parsed value is bit-identical."""
    text = formats.canonical_dumps(value)
    parsed = json.loads(text)
    assert parsed == value or (value == 0.0 and parsed == 0.0)
    assert formats.canonical_dumps(float(parsed)) == text


def test_corpus_round_trip_byte_identical(tmp_path):
    corpus = small_corpus()
    p1 = str(tmp_path / "c1.json")
    p2 = str(tmp_path / "c2.json")
    formats.save_corpus(p1, corpus)
    loaded = formats.load_corpus(p1)
    formats.save_corpus(p2, loaded)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_model_round_trip_byte_identical(tmp_path, reference_result, reference_corpus):
    digest = formats.corpus_digest(reference_corpus)
    cfg = learner.LearnConfig()
    p1 = str(tmp_path / "m1.json")
    p2 = str(tmp_path / "m2.json")
    formats.save_model(p1, reference_result.model, cfg, digest)
    loaded = formats.load_model(p1)
    formats.save_model(p2, loaded, cfg, digest)
    assert open(p1, "rb").read() == open(p2, "rb").read()
    np.testing.assert_array_equal(loaded.theta, reference_result.model.theta)
    np.testing.assert_array_equal(loaded.centers, reference_result.model.centers)
    assert loaded.bias == reference_result.model.bias


def test_config_round_trip(tmp_path):
    cfg = learner.LearnConfig(C=2.5, sigma=0.15, norm="l2_theta", max_centers=80)
    path = str(tmp_path / "cfg.json")
    formats.save_config(path, cfg)
    assert formats.load_config(path) == cfg


def test_metrics_round_trip(tmp_path):
    report = MetricsReport(
        unsafe_iou=0.4,
        obstacle_coverage=0.97,
        false_unsafe_rate=0.01,
        credit_precision=1.0,
        credit_recall=0.9,
        filter_intervention_rate=0.5,
        min_h_over_rollouts=0.003,
        flags=[],
    )
    path = str(tmp_path / "metrics.json")
    formats.save_metrics(path, report)
    assert formats.load_metrics(path) == report


def test_unknown_schema_version_rejected(tmp_path):
    corpus = small_corpus()
    obj = formats.corpus_to_obj(corpus)
    obj["schema_version"] = 99
    path = str(tmp_path / "bad.json")
    formats.save_json(path, obj)
    with pytest.raises(formats.FormatError) as err:
        formats.load_corpus(path)
    assert "schema_version" in str(err.value)


def test_nan_reward_rejected_names_demo(tmp_path):
    corpus = small_corpus()
    obj = formats.corpus_to_obj(corpus)
    obj["demos"][1]["reward"] = float("nan")
    path = str(tmp_path / "nan.json")
    # bypass our canonical writer (which refuses NaN) to simulate a bad file
    with open(path, "w") as fh:
        json.dump(obj, fh)
    with pytest.raises(formats.FormatError) as err:
        formats.load_corpus(path)
    assert "failed00" in str(err.value)


def test_dimension_mismatch_rejected(tmp_path):
    corpus = small_corpus()
    obj = formats.corpus_to_obj(corpus)
    obj["demos"][0]["points"][0]["x"] = [0.1, 0.2, 0.3]
    path = str(tmp_path / "dim.json")
    formats.save_json(path, obj)
    with pytest.raises(formats.FormatError):
        formats.load_corpus(path)


def test_corpus_digest_stable_and_content_sensitive():
    corpus = small_corpus()
    d1 = formats.corpus_digest(corpus)
    d2 = formats.corpus_digest(small_corpus())
    assert d1 == d2
    assert d1.startswith("sha256:")
    corpus.demos[0].reward = 1.4
    assert formats.corpus_digest(corpus) != d1


def test_atomic_save_no_partial_file(tmp_path):
    # a failing serialization must not leave the target behind
    path = str(tmp_path / "out.json")
    with pytest.raises(formats.FormatError):
        formats.save_json(path, {"bad": float("nan")})
    assert not os.path.exists(path)
    assert [f for f in os.listdir(tmp_path) if f.endswith(".tmp")] == []


def test_grid_round_trip(tmp_path, reference_result, scenario):
    from safeshield import evaluation

    field = evaluation.grid_eval(reference_result.model, scenario.workspace, (8, 6))
    obj = formats.grid_to_obj(field)
    back = formats.grid_from_obj(json.loads(formats.canonical_dumps(obj)))
    np.testing.assert_array_equal(back.values, field.values)
    assert back.resolution == field.resolution


def test_scenario_and_genspec_round_trip():
    scenario = simgen.Scenario()
    back = formats.scenario_from_obj(
        json.loads(formats.canonical_dumps(formats.scenario_to_obj(scenario)))
    )
    assert back == scenario
    spec = simgen.GenSpec(seed=3, n_failed=2)
    back = formats.genspec_from_obj(
        json.loads(formats.canonical_dumps(formats.genspec_to_obj(spec)))
    )
    assert back == spec


def test_golden_files_stable():
    """Golden files on disk stay byte-identical under load -> save."""
    for name, loader, saver in (
        ("corpus.json", formats.load_corpus, formats.save_corpus),
        ("config.json", formats.load_config, formats.save_config),
        ("metrics.json", formats.load_metrics, formats.save_metrics),
        ("model.json", formats.load_model, None),
    ):
        path = os.path.join(GOLDEN_DIR, name)
        raw = open(path, "rb").read()
        obj = loader(path)
        if name == "model.json":
            regenerated = formats.canonical_dumps(
                json.loads(raw.decode("utf-8"))
            ).encode("utf-8")
            assert regenerated == raw
        else:
            import tempfile

            with tempfile.TemporaryDirectory() as tmp:
                out = os.path.join(tmp, name)
                saver(out, obj)
                assert open(out, "rb").read() == raw
