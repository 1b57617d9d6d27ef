import numpy as np
import pytest

from safeshield import dynamics, simgen
from safeshield.formats import canonical_dumps, corpus_to_obj


@pytest.fixture
def integrator():
    return dynamics.single_integrator_2d()


def test_rollout_straight_line_stops_at_obstacle(scenario, integrator):
    controller = simgen.waypoint_controller([np.array([0.9, 0.4])], 0.5)
    points = simgen.rollout(scenario, integrator, controller, start=np.array([0.1, 0.4]))
    center = np.asarray(scenario.obstacle_center)
    terminal = points[-1].x
    assert np.linalg.norm(terminal - center) <= scenario.obstacle_radius
    # stops at the first sample inside the disk; everything before is outside
    for p in points[:-1]:
        assert np.linalg.norm(p.x - center) > scenario.obstacle_radius
    # straight run from (0.1, 0.4) at 0.01/step: the disk edge sits at
    # x = 0.4, which the sample sequence hits exactly
    assert terminal[0] == pytest.approx(0.4, abs=1e-9)
    assert terminal[1] == pytest.approx(0.4, abs=1e-12)


def test_rollout_start_equals_target(integrator):
    scenario = simgen.Scenario(start_region=simgen.Box(0.9, 0.6, 0.9, 0.6))
    controller = simgen.waypoint_controller([np.array([0.9, 0.6])], 0.5)
    points = simgen.rollout(scenario, integrator, controller, seed=0)
    assert len(points) == 1


def test_rollout_detour_reaches_target(scenario, integrator):
    detour = np.array([0.5, 0.7])
    controller = simgen.waypoint_controller(
        [detour, np.asarray(scenario.target)], 0.5
    )
    points = simgen.rollout(scenario, integrator, controller, start=np.array([0.1, 0.4]))
    assert np.linalg.norm(points[-1].x - np.asarray(scenario.target)) <= scenario.target_radius
    center = np.asarray(scenario.obstacle_center)
    assert all(np.linalg.norm(p.x - center) > scenario.obstacle_radius for p in points)


def test_label_reward_collision(scenario):
    spec = simgen.GenSpec()
    pts = [
        simgen.DemoPoint(x=np.array([0.3, 0.4]), u=np.zeros(2), t_index=0),
        simgen.DemoPoint(x=np.array([0.45, 0.4]), u=np.zeros(2), t_index=1),
    ]
    assert simgen.label_reward(pts, scenario, spec) == -0.5


def test_label_reward_success_scaling(scenario):
    spec = simgen.GenSpec()
    target = np.asarray(scenario.target)
    pts = [
        simgen.DemoPoint(x=np.array([0.5, 0.7]), u=np.zeros(2), t_index=0),
        simgen.DemoPoint(x=target.copy(), u=np.zeros(2), t_index=1),
    ]
    # min center distance 0.3 -> reward 1.5
    assert simgen.label_reward(pts, scenario, spec) == pytest.approx(1.5, abs=1e-12)
    pts_grazing = [
        simgen.DemoPoint(x=np.array([0.5, 0.52]), u=np.zeros(2), t_index=0),
        simgen.DemoPoint(x=target.copy(), u=np.zeros(2), t_index=1),
    ]
    assert simgen.label_reward(pts_grazing, scenario, spec) == pytest.approx(0.6, abs=1e-12)


def test_label_reward_timeout_is_failure(scenario):
    spec = simgen.GenSpec()
    pts = [simgen.DemoPoint(x=np.array([0.2, 0.2]), u=np.zeros(2), t_index=0)]
    assert simgen.label_reward(pts, scenario, spec) == spec.r_f


def test_generate_deterministic(scenario):
    spec = simgen.GenSpec(n_safe=3, n_semisafe=2, n_failed=3, seed=7)
    c1 = simgen.generate(scenario, spec)
    c2 = simgen.generate(scenario, spec)
    assert canonical_dumps(corpus_to_obj(c1)) == canonical_dumps(corpus_to_obj(c2))


def test_generate_counts_and_classes(scenario, reference_corpus):
    spec = simgen.GenSpec()
    by_class = {"safe": [], "semisafe": [], "failed": []}
    for demo in reference_corpus.demos:
        for key in by_class:
            if demo.id.startswith(key):
                by_class[key].append(demo)
    assert len(by_class["safe"]) == spec.n_safe
    assert len(by_class["semisafe"]) == spec.n_semisafe
    assert len(by_class["failed"]) == spec.n_failed
    assert all(d.reward >= 0 for d in by_class["safe"] + by_class["semisafe"])
    assert all(d.reward < 0 for d in by_class["failed"])
    # construction invariant: every safe demo outranks every semisafe demo
    assert min(d.reward for d in by_class["safe"]) > max(
        d.reward for d in by_class["semisafe"]
    )


def test_no_successful_demo_enters_obstacle(scenario, reference_corpus):
    center = np.asarray(scenario.obstacle_center)
    for demo in reference_corpus.demos:
        if demo.reward >= 0:
            for p in demo.points:
                assert np.linalg.norm(p.x - center) > scenario.obstacle_radius


def test_failed_demos_end_inside_obstacle(scenario, reference_corpus):
    center = np.asarray(scenario.obstacle_center)
    for demo in reference_corpus.demos:
        if demo.reward < 0:
            terminal = demo.points[-1].x
            assert np.linalg.norm(terminal - center) <= scenario.obstacle_radius
            # stop-at-collision: only the terminal point is inside
            for p in demo.points[:-1]:
                assert np.linalg.norm(p.x - center) > scenario.obstacle_radius


def test_mixed_corpus_contains_prefix_overlap(scenario, reference_corpus):
    """At least one failure must replay a successful demo's opening segment."""
    successful = {
        d.id: np.array([p.x for p in d.points])
        for d in reference_corpus.demos
        if d.reward >= 0
    }
    found = False
    for demo in reference_corpus.demos:
        if demo.reward >= 0 or len(demo.points) < 10:
            continue
        head = np.array([p.x for p in demo.points[:10]])
        for xs in successful.values():
            if len(xs) >= 10 and np.allclose(head, xs[:10], atol=1e-12):
                found = True
    assert found


def test_prefix_overlap_spec_all_failures_hosted(scenario, prefix_corpus):
    successful = {
        d.id: np.array([p.x for p in d.points])
        for d in prefix_corpus.demos
        if d.reward >= 0
    }
    for demo in prefix_corpus.demos:
        if demo.reward >= 0:
            continue
        head = np.array([p.x for p in demo.points[:10]])
        assert any(
            len(xs) >= 10 and np.allclose(head, xs[:10], atol=1e-12)
            for xs in successful.values()
        )


def test_generation_error_when_impossible(integrator):
    # obstacle blocks the whole start-to-target corridor: safe detours at the
    # requested clearance cannot exist inside the workspace
    scenario = simgen.Scenario(
        obstacle_center=(0.5, 0.5),
        obstacle_radius=0.45,
        start_region=simgen.Box(0.02, 0.45, 0.02, 0.55),
        target=(0.98, 0.5),
        target_radius=0.02,
    )
    spec = simgen.GenSpec(n_safe=1, n_semisafe=0, n_failed=0, retry_budget=5)
    with pytest.raises(simgen.GenerationError) as err:
        simgen.generate(scenario, spec)
    assert "safe" in str(err.value)


def test_scenario_validation():
    with pytest.raises(ValueError):
        simgen.Scenario(obstacle_radius=-0.1)
    with pytest.raises(ValueError):
        simgen.Scenario(obstacle_center=(5.0, 5.0))
    with pytest.raises(ValueError):
        simgen.Box(1.0, 0.0, 0.0, 1.0)
