"""Deterministic 2D simulator and synthetic demonstration generator.

Reproduces the reference data-acquisition protocol: a point robot crosses a
unit workspace from the left edge toward a target while avoiding a disk
obstacle. Scripted waypoint controllers produce three demo classes:

  safe      wide detours around the obstacle,
  semisafe  successful but grazing detours,
  failed    trajectories that hit the obstacle (stopping at the collision
            point) or never reach the target.

Failure flavors: "blind" runs straight at the obstacle, "cutback" clears the
top/bottom but cuts the far corner, "overshoot" passes the obstacle and then
doubles back into it from the target side, and "prefix_overlap" replays a
successful demo's points up to its closest approach and then plunges into the
disk, so the same states appear in both a successful and a failed
demonstration: the case credit assignment exists to resolve. Together the
flavors land collision points all around the obstacle boundary.

All randomness flows from one seeded generator; generate() is a pure function
of (scenario, spec).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import dynamics
from .demonstrations import DemoCorpus, DemoPoint, Demonstration


class GenerationError(RuntimeError):
    """A demo class could not be produced within the retry budget."""


@dataclass(frozen=True)
class Box:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError("box must have min <= max per axis")

    def contains(self, p: np.ndarray) -> bool:
        return bool(
            self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax
        )

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.array(
            [rng.uniform(self.xmin, self.xmax), rng.uniform(self.ymin, self.ymax)]
        )


@dataclass
class Scenario:
    obstacle_center: tuple = (0.5, 0.4)
    obstacle_radius: float = 0.1
    start_region: Box = Box(0.05, 0.1, 0.05, 0.7)
    target: tuple = (0.9, 0.6)
    target_radius: float = 0.05
    workspace: Box = Box(0.0, 0.0, 1.0, 1.0)
    dt: float = 0.02
    max_steps: int = 400

    def __post_init__(self):
        if self.obstacle_radius <= 0:
            raise ValueError("obstacle radius must be positive")
        c = np.asarray(self.obstacle_center, dtype=float)
        if not self.workspace.contains(c):
            raise ValueError("obstacle must sit inside the workspace")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class GenSpec:
    n_safe: int = 6
    n_semisafe: int = 4
    n_failed: int = 8
    seed: int = 0
    speed: float = 0.5
    safe_clearance: tuple = (0.26, 0.36)
    semisafe_clearance: tuple = (0.16, 0.20)
    reward_scale: float = 5.0
    r_f: float = -0.5
    failure_style: str = "mixed"  # "mixed" | "prefix_overlap"
    plunge_speed: float = 2.0
    arrive_tol: float = 0.03
    retry_budget: int = 40

    def __post_init__(self):
        if min(self.n_safe, self.n_semisafe, self.n_failed) < 0:
            raise ValueError("demo counts must be >= 0")
        if self.failure_style not in ("mixed", "prefix_overlap"):
            raise ValueError(f"unknown failure_style {self.failure_style!r}")


def prefix_overlap_spec(seed: int = 0, n_failed: int = 8) -> GenSpec:
    """Generation spec for the credit-assignment stress scenario.

    Every failure replays a grazing semisafe demo and plunges at its closest
    approach, so each failed trajectory is safe evidence almost to the end.
    The grazing ring sits about  0.05 outside the obstacle, so every plunge
    point after the shared prefix lands within one plunge step of the disk:
    geometric truth and learned labels have no ambiguous annulus between them.
    """
    return GenSpec(
        n_safe=5,
        n_semisafe=2,
        n_failed=n_failed,
        seed=seed,
        failure_style="prefix_overlap",
        semisafe_clearance=(0.182, 0.192),
        safe_clearance=(0.26, 0.36),
    )


Controller = Callable[[np.ndarray, int], np.ndarray]


def waypoint_controller(
    waypoints: Sequence[np.ndarray], speed: float, arrive_tol: float = 0.03
) -> Controller:
    """Head at constant speed toward each waypoint in turn. Single-rollout use
    (the waypoint cursor is internal state)."""
    wps = [np.asarray(w, dtype=float) for w in waypoints]
    cursor = {"i": 0}

    def control(x: np.ndarray, t: int) -> np.ndarray:
        while cursor["i"] < len(wps) - 1 and np.linalg.norm(wps[cursor["i"]] - x) <= arrive_tol:
            cursor["i"] += 1
        d = wps[cursor["i"]] - x
        dist = np.linalg.norm(d)
        if dist < 1e-12:
            return np.zeros_like(x)
        return speed * d / dist

    return control


def rollout(
    scenario: Scenario,
    dyn: dynamics.DynamicsModel,
    controller: Controller,
    seed: Optional[int] = None,
    start: Optional[np.ndarray] = None,
) -> List[DemoPoint]:
    """Simulate until target arrival, collision, or max_steps.

    A colliding trajectory stops at the collision point (the first state
    inside the obstacle disk) and includes it as its final sample. The start
    is sampled from the scenario's start region unless given explicitly.
    """
    rng = np.random.default_rng(seed)
    x = (
        np.asarray(start, dtype=float).copy()
        if start is not None
        else scenario.start_region.sample(rng)
    )
    center = np.asarray(scenario.obstacle_center, dtype=float)
    target = np.asarray(scenario.target, dtype=float)
    points: List[DemoPoint] = []
    for t in range(scenario.max_steps + 1):
        collided = np.linalg.norm(x - center) <= scenario.obstacle_radius
        arrived = np.linalg.norm(x - target) <= scenario.target_radius
        if collided or arrived or t == scenario.max_steps:
            points.append(DemoPoint(x=x.copy(), u=np.zeros(dyn.m), t_index=t))
            break
        u, _ = dynamics.clamp_control(dyn, controller(x, t))
        points.append(DemoPoint(x=x.copy(), u=u.copy(), t_index=t))
        x = dynamics.step(dyn, x, u, scenario.dt)
    return points


def label_reward(points: Sequence[DemoPoint], scenario: Scenario, spec: GenSpec) -> float:
    """Reward for one trajectory.

    Collisions get the fixed failure reward. Successes get (minimum distance
    to the obstacle center over the trajectory) * reward_scale. Trajectories
    that neither collide nor reach the target failed the task, so they get
    the failure reward as well.
    """
    if not points:
        raise ValueError("empty trajectory")
    center = np.asarray(scenario.obstacle_center, dtype=float)
    target = np.asarray(scenario.target, dtype=float)
    last = points[-1].x
    if np.linalg.norm(last - center) <= scenario.obstacle_radius:
        return spec.r_f
    if np.linalg.norm(last - target) <= scenario.target_radius:
        min_dist = min(float(np.linalg.norm(p.x - center)) for p in points)
        return min_dist * spec.reward_scale
    return spec.r_f


def _collided(points: Sequence[DemoPoint], scenario: Scenario) -> bool:
    center = np.asarray(scenario.obstacle_center, dtype=float)
    return bool(
        np.linalg.norm(points[-1].x - center) <= scenario.obstacle_radius
    )


def _succeeded(points: Sequence[DemoPoint], scenario: Scenario) -> bool:
    target = np.asarray(scenario.target, dtype=float)
    return bool(np.linalg.norm(points[-1].x - target) <= scenario.target_radius) and not _collided(
        points, scenario
    )


def _min_center_dist(points: Sequence[DemoPoint], scenario: Scenario) -> float:
    center = np.asarray(scenario.obstacle_center, dtype=float)
    return min(float(np.linalg.norm(p.x - center)) for p in points)


def _detour_demo(
    scenario: Scenario,
    dyn: dynamics.DynamicsModel,
    spec: GenSpec,
    rng: np.random.Generator,
    clearance_range: tuple,
    side: int,
    label: str,
) -> List[DemoPoint]:
    """Successful detour with closest approach inside clearance_range."""
    center = np.asarray(scenario.obstacle_center, dtype=float)
    target = np.asarray(scenario.target, dtype=float)
    lo, hi = clearance_range
    for _ in range(spec.retry_budget):
        start = scenario.start_region.sample(rng)
        clearance = rng.uniform(lo, hi)
        # two waypoints bracket the obstacle so both legs keep their distance
        w1 = center + np.array([-0.08, side * clearance])
        w2 = center + np.array([0.10, side * clearance])
        controller = waypoint_controller([w1, w2, target], spec.speed, spec.arrive_tol)
        points = rollout(scenario, dyn, controller, start=start)
        if not _succeeded(points, scenario):
            continue
        d = _min_center_dist(points, scenario)
        if lo - 0.02 <= d <= hi + 0.03:
            return points
    raise GenerationError(f"could not generate a {label} demonstration")


def _blind_failure(
    scenario: Scenario,
    dyn: dynamics.DynamicsModel,
    spec: GenSpec,
    rng: np.random.Generator,
) -> List[DemoPoint]:
    """Straight run at the obstacle (demonstrator never saw it)."""
    center = np.asarray(scenario.obstacle_center, dtype=float)
    for _ in range(spec.retry_budget):
        start = scenario.start_region.sample(rng)
        aim = center + rng.uniform(-0.05, 0.05, size=2)
        controller = waypoint_controller([aim, np.asarray(scenario.target)], spec.speed, spec.arrive_tol)
        points = rollout(scenario, dyn, controller, start=start)
        if _collided(points, scenario):
            return points
    raise GenerationError("could not generate a blind failure demonstration")


def _cutback_failure(
    scenario: Scenario,
    dyn: dynamics.DynamicsModel,
    spec: GenSpec,
    rng: np.random.Generator,
    side: int,
) -> List[DemoPoint]:
    """Clears the near side but cuts back too early, clipping the far arc."""
    center = np.asarray(scenario.obstacle_center, dtype=float)
    for _ in range(spec.retry_budget):
        start = scenario.start_region.sample(rng)
        over = rng.uniform(0.14, 0.18)
        w1 = center + np.array([-0.05, side * over])
        # second waypoint sits inside the disk on the target side
        w2 = center + np.array([rng.uniform(0.03, 0.07), side * rng.uniform(-0.02, 0.03)])
        controller = waypoint_controller([w1, w2, np.asarray(scenario.target)], spec.speed, spec.arrive_tol)
        points = rollout(scenario, dyn, controller, start=start)
        if _collided(points, scenario):
            return points
    raise GenerationError("could not generate a cutback failure demonstration")


def _overshoot_failure(
    scenario: Scenario,
    dyn: dynamics.DynamicsModel,
    spec: GenSpec,
    rng: np.random.Generator,
    side: int,
) -> List[DemoPoint]:
    """Rounds the obstacle, overshoots, then doubles back into it."""
    center = np.asarray(scenario.obstacle_center, dtype=float)
    for _ in range(spec.retry_budget):
        start = scenario.start_region.sample(rng)
        over = rng.uniform(0.16, 0.20)
        w1 = center + np.array([-0.05, side * over])
        w2 = center + np.array([rng.uniform(0.22, 0.28), side * rng.uniform(0.10, 0.16)])
        controller = waypoint_controller([w1, w2, center], spec.speed, spec.arrive_tol)
        points = rollout(scenario, dyn, controller, start=start)
        if _collided(points, scenario):
            return points
    raise GenerationError("could not generate an overshoot failure demonstration")


def _prefix_overlap_failure(
    scenario: Scenario,
    dyn: dynamics.DynamicsModel,
    spec: GenSpec,
    rng: np.random.Generator,
    host: List[DemoPoint],
) -> List[DemoPoint]:
    """Replay a successful demo up to its closest approach, then plunge.

    The prefix is copied point-for-point (states and controls), so those
    states genuinely occur in both a successful and a failed demonstration.
    The plunge heads at the obstacle center at plunge speed, entering the
    disk within one or two steps.
    """
    center = np.asarray(scenario.obstacle_center, dtype=float)
    dists = [float(np.linalg.norm(p.x - center)) for p in host]
    i_star = int(np.argmin(dists))
    if i_star == 0:
        raise GenerationError("prefix_overlap host already starts at closest approach")
    points = [DemoPoint(x=p.x.copy(), u=p.u.copy(), t_index=p.t_index) for p in host[:i_star]]
    x = host[i_star].x.copy()
    t = host[i_star].t_index
    # small azimuth jitter so repeated plunges do not stack exactly
    angle = rng.uniform(-0.05, 0.05)
    rot = np.array(
        [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
    )
    plunge_step = spec.plunge_speed * scenario.dt
    # parking radius: one partial step stops here so the following full steps
    # straddle the obstacle boundary symmetrically instead of at a knife edge
    park = scenario.obstacle_radius + 1.5 * plunge_step
    for _ in range(scenario.max_steps):
        d = float(np.linalg.norm(x - center))
        if d <= scenario.obstacle_radius:
            points.append(DemoPoint(x=x.copy(), u=np.zeros(dyn.m), t_index=t))
            return points
        if d > park + 0.2 * plunge_step:
            speed = min(spec.plunge_speed, (d - park) / scenario.dt)
        else:
            speed = spec.plunge_speed
        direction = rot @ ((center - x) / d)
        u, _ = dynamics.clamp_control(dyn, speed * direction)
        points.append(DemoPoint(x=x.copy(), u=u.copy(), t_index=t))
        x = dynamics.step(dyn, x, u, scenario.dt)
        t += 1
    raise GenerationError("prefix_overlap plunge never reached the obstacle")


def generate(scenario: Scenario, spec: GenSpec) -> DemoCorpus:
    """Produce a corpus with the requested class counts; deterministic in seed."""
    rng = np.random.default_rng(spec.seed)
    dyn = dynamics.single_integrator_2d()
    demos: List[Demonstration] = []

    def add(prefix: str, k: int, points: List[DemoPoint]) -> Demonstration:
        reward = label_reward(points, scenario, spec)
        demo = Demonstration(id=f"{prefix}{k:02d}", points=points, reward=reward)
        demos.append(demo)
        return demo

    safe_demos = []
    for k in range(spec.n_safe):
        pts = _detour_demo(
            scenario, dyn, spec, rng, spec.safe_clearance, 1 if k % 2 == 0 else -1, "safe"
        )
        safe_demos.append(add("safe", k, pts))
    semisafe_demos = []
    for k in range(spec.n_semisafe):
        pts = _detour_demo(
            scenario, dyn, spec, rng, spec.semisafe_clearance, 1 if k % 2 == 0 else -1, "semisafe"
        )
        semisafe_demos.append(add("semisafe", k, pts))

    # keep the intended class ordering: every safe reward above every semisafe
    if safe_demos and semisafe_demos:
        if min(d.reward for d in safe_demos) <= max(d.reward for d in semisafe_demos):
            raise GenerationError("safe and semisafe reward ranges overlap")

    hosts = semisafe_demos or safe_demos
    center = np.asarray(scenario.obstacle_center, dtype=float)
    if hosts:
        # the tightest graze gives the plunge the shortest novel segment; all
        # prefix failures share it so their collision points cluster
        grazing_host = min(
            hosts,
            key=lambda d: min(float(np.linalg.norm(p.x - center)) for p in d.points),
        )
    rotation = ["blind", "cutback", "overshoot", "cutback", "overshoot", "blind"]
    for k in range(spec.n_failed):
        if spec.failure_style == "prefix_overlap" and hosts:
            style = "prefix"
        elif k == spec.n_failed - 1 and hosts:
            style = "prefix"
        else:
            style = rotation[k % len(rotation)]
        side = 1 if (k // 2) % 2 == 0 else -1
        if style == "prefix":
            pts = _prefix_overlap_failure(scenario, dyn, spec, rng, grazing_host.points)
        elif style == "blind":
            pts = _blind_failure(scenario, dyn, spec, rng)
        elif style == "overshoot":
            pts = _overshoot_failure(scenario, dyn, spec, rng, side)
        else:
            pts = _cutback_failure(scenario, dyn, spec, rng, side)
        add("failed", k, pts)

    return DemoCorpus(demos=demos, dynamics=dyn.name)
