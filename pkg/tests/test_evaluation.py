import numpy as np
import numpy.testing as npt
import pytest

from safeshield import evaluation, rbf
from safeshield.demonstrations import DemoCorpus
from safeshield.learner import LearnResult
from safeshield.simgen import Box
from conftest import make_line_demo


def bias_model(bias):
    return rbf.SafetyModel(
        centers=[[50.0, 50.0]], theta=[0.0], bias=bias, sigma=0.1
    )


def radial_model_values(bounds, resolution, center, offset):
    """Field h = offset - ||x - center|| sampled like grid_eval does."""
    nx, ny = resolution
    xs = bounds.xmin + (np.arange(nx) + 0.5) * (bounds.xmax - bounds.xmin) / nx
    ys = bounds.ymin + (np.arange(ny) + 0.5) * (bounds.ymax - bounds.ymin) / ny
    X, Y = np.meshgrid(xs, ys)
    return offset - np.hypot(X - center[0], Y - center[1])


def test_grid_eval_bias_only():
    field = evaluation.grid_eval(bias_model(0.7), Box(0, 0, 1, 1), (8, 8))
    npt.assert_allclose(field.values, 0.7, atol=1e-12)


def test_grid_eval_2x2_cell_centers():
    field = evaluation.grid_eval(bias_model(0.0), Box(0, 0, 1, 1), (2, 2))
    xs, ys = field.cell_centers()
    npt.assert_allclose(xs, [0.25, 0.75])
    npt.assert_allclose(ys, [0.25, 0.75])


def test_grid_eval_matches_pointwise(reference_result):
    field = evaluation.grid_eval(reference_result.model, Box(0, 0, 1, 1), (13, 9))
    xs, ys = field.cell_centers()
    for j in (0, 4, 8):
        for i in (0, 6, 12):
            expected = rbf.evaluate(reference_result.model, [xs[i], ys[j]])
            assert field.values[j, i] == pytest.approx(expected, abs=1e-12)


def test_grid_eval_rejects_degenerate():
    with pytest.raises(ValueError):
        evaluation.grid_eval(bias_model(0.0), Box(0, 0, 1, 1), (1, 5))


def test_level_set_circle_oracle():
    bounds = Box(-1, -1, 1, 1)
    resolution = (201, 201)
    center = (0.1, -0.05)
    radius = 0.5
    values = radial_model_values(bounds, resolution, center, radius)
    field = evaluation.GridField(bounds=bounds, resolution=resolution, values=values)
    polylines = evaluation.level_set(field, 0.0)
    assert len(polylines) == 1
    line = polylines[0]
    # closed contour
    npt.assert_allclose(line[0], line[-1], atol=1e-9)
    cell = 2.0 / 201
    radii = np.hypot(line[:, 0] - center[0], line[:, 1] - center[1])
    # every vertex near the circle, and the circle fully traced
    assert np.max(np.abs(radii - radius)) < 2 * cell
    angles = np.arctan2(line[:, 1] - center[1], line[:, 0] - center[0])
    assert np.ptp(angles) > 5.8  # sweeps (almost) the full turn


def test_level_set_constant_field_empty():
    field = evaluation.GridField(
        bounds=Box(0, 0, 1, 1), resolution=(10, 10), values=np.full((10, 10), 2.0)
    )
    assert evaluation.level_set(field, 0.0) == []
    assert evaluation.level_set(field, 3.0) == []


def test_level_set_saddle_resolved_by_center_sign():
    # checkerboard 2x2: corners (+,-,+,-) force the ambiguous case; the mean
    # decides which diagonal pairing is used
    values = np.array([[1.0, -1.0], [-1.0, 1.0]])
    field = evaluation.GridField(bounds=Box(0, 0, 1, 1), resolution=(2, 2), values=values)
    lines = evaluation.level_set(field, 0.0)
    # ambiguous cell yields two separate segments, never a crossing X
    assert len(lines) == 2
    for line in lines:
        assert line.shape[0] == 2


def test_level_set_segments_near_sign_change(reference_result, scenario):
    """Contour vertices sit within one cell diagonal of a model sign change."""
    field = evaluation.grid_eval(reference_result.model, scenario.workspace, (60, 60))
    cell_diag = np.hypot(1 / 60, 1 / 60)
    lines = evaluation.level_set(field, 0.0)
    assert lines
    for line in lines:
        for x, y in line[:: max(1, len(line) // 20)]:
            probes = [
                rbf.evaluate(reference_result.model, [x + dx, y + dy])
                for dx in (-cell_diag, 0.0, cell_diag)
                for dy in (-cell_diag, 0.0, cell_diag)
            ]
            assert min(probes) <= 0 <= max(probes)


def test_superlevel_area_monotone(reference_result, scenario):
    field = evaluation.grid_eval(reference_result.model, scenario.workspace, (100, 100))
    taus = np.linspace(-0.5, 1.5, 9)
    areas = [evaluation.superlevel_area(field, t) for t in taus]
    assert all(a >= b for a, b in zip(areas, areas[1:]))


def perfect_model(scenario):
    """Single-bump model whose zero level set is exactly the obstacle circle.

    h(x) = exp(-2) - phi(x, c) with sigma = r/2 crosses zero at distance
    sigma * sqrt(2 * ln(1 / exp(-2))) = 2 * sigma = r.
    """
    return rbf.SafetyModel(
        centers=[list(scenario.obstacle_center)],
        theta=[-1.0],
        bias=float(np.exp(-2.0)),
        sigma=scenario.obstacle_radius / 2.0,
    )


def test_score_perfect_model(reference_corpus, scenario):
    model = perfect_model(scenario)
    result = LearnResult(
        model=model,
        slacks=np.zeros(0),
        slack_index={},
        objective_value=0.0,
        solver_status="optimal",
        residuals=0.0,
        credit={},
    )
    report = evaluation.score(model, result, reference_corpus, scenario)
    assert report.obstacle_coverage == 1.0
    assert report.false_unsafe_rate == 0.0


def test_score_on_reference_pipeline(reference_corpus, reference_result, scenario):
    report = evaluation.score(reference_result.model, reference_result, reference_corpus, scenario)
    assert 0.0 <= report.unsafe_iou <= 1.0
    assert report.obstacle_coverage >= 0.90
    assert report.false_unsafe_rate <= 0.05
    assert 0.0 <= report.filter_intervention_rate <= 1.0
    assert report.min_h_over_rollouts >= -0.05


def test_score_constant_positive_model(reference_corpus, scenario):
    model = bias_model(1.0)
    result = LearnResult(
        model=model,
        slacks=np.zeros(0),
        slack_index={},
        objective_value=0.0,
        solver_status="optimal",
        residuals=0.0,
        credit={},
    )
    report = evaluation.score(model, result, reference_corpus, scenario)
    assert report.obstacle_coverage == 0.0


def test_score_without_scenario_flags(reference_corpus, reference_result):
    report = evaluation.score(reference_result.model, reference_result, reference_corpus, None)
    assert "no_scenario_geometric_metrics_omitted" in report.flags


def test_score_deterministic(reference_corpus, reference_result, scenario):
    r1 = evaluation.score(reference_result.model, reference_result, reference_corpus, scenario)
    r2 = evaluation.score(reference_result.model, reference_result, reference_corpus, scenario)
    assert r1 == r2


def test_credit_ground_truth_bands(scenario):
    corpus = DemoCorpus(
        demos=[make_line_demo("f", -0.5, (0.3, 0.4), (0.45, 0.4), 16)]
    )
    truth = evaluation.credit_ground_truth(corpus, scenario)
    demo = corpus.demos[0]
    center = np.asarray(scenario.obstacle_center)
    step = np.linalg.norm(demo.points[1].x - demo.points[0].x)
    for p in demo.points:
        expected = np.linalg.norm(p.x - center) <= scenario.obstacle_radius + step + 1e-12
        assert truth[(demo.id, p.t_index)] == expected


def test_distance_to_safe_map(reference_corpus, scenario):
    field = evaluation.distance_to_safe_map(reference_corpus, scenario.workspace, (40, 40))
    assert field.values.min() < 0.05  # cells on demonstrated paths
    assert field.values.max() > 0.1  # under-demonstrated corners


def test_pgm_export(reference_result, scenario):
    field = evaluation.grid_eval(reference_result.model, scenario.workspace, (20, 20))
    blob = evaluation.to_pgm(field)
    lines = blob.decode("ascii").splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "20 20"
    assert lines[2] == "255"
    values = [int(v) for row in lines[3:] for v in row.split()]
    assert len(values) == 400
    assert min(values) == 0 and max(values) == 255
