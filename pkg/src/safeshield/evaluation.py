"""Grid evaluation of h, level-set extraction, and quantitative scoring.

The learned function is rendered on a cell-centered grid; contours come from
marching squares with linear edge interpolation (saddle cells disambiguated
by the cell-center value sign). Scoring compares the negative region against
the known obstacle disk, checks credit labels against geometric ground truth,
and reports safety-filter statistics from scripted adversarial rollouts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import dynamics, rbf
from .demonstrations import DemoCorpus
from .learner import CAUSED_FAILURE, LearnResult
from .safety_filter import FilterConfig, filter_control
from .simgen import Box, Scenario


@dataclass
class GridField:
    """h sampled at cell centers; values has shape (ny, nx), row j = y level j."""

    bounds: Box
    resolution: Tuple[int, int]
    values: np.ndarray

    def __post_init__(self):
        nx, ny = self.resolution
        values = np.asarray(self.values, dtype=float)
        if values.shape != (ny, nx):
            raise ValueError(f"values must have shape ({ny}, {nx}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        self.values = values

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        nx, ny = self.resolution
        b = self.bounds
        xs = b.xmin + (np.arange(nx) + 0.5) * (b.xmax - b.xmin) / nx
        ys = b.ymin + (np.arange(ny) + 0.5) * (b.ymax - b.ymin) / ny
        return xs, ys

    def cell_area(self) -> float:
        nx, ny = self.resolution
        b = self.bounds
        return (b.xmax - b.xmin) / nx * (b.ymax - b.ymin) / ny


@dataclass
class MetricsReport:
    unsafe_iou: float
    obstacle_coverage: float
    false_unsafe_rate: float
    credit_precision: float
    credit_recall: float
    filter_intervention_rate: float
    min_h_over_rollouts: float
    flags: List[str] = field(default_factory=list)


def grid_eval(
    model: rbf.SafetyModel, bounds: Box, resolution: Tuple[int, int]
) -> GridField:
    """Evaluate h at every cell center of a regular grid over bounds."""
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise ValueError(f"resolution must be at least 2x2, got {resolution}")
    if bounds.xmax <= bounds.xmin or bounds.ymax <= bounds.ymin:
        raise ValueError("degenerate bounds")
    xs = bounds.xmin + (np.arange(nx) + 0.5) * (bounds.xmax - bounds.xmin) / nx
    ys = bounds.ymin + (np.arange(ny) + 0.5) * (bounds.ymax - bounds.ymin) / ny
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    values = rbf.evaluate_batch(model, pts).reshape(ny, nx)
    return GridField(bounds=bounds, resolution=(nx, ny), values=values)


def _interp(pa, va, pb, vb, level):
    t = 0.5 if vb == va else (level - va) / (vb - va)
    return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))


def _square_segments(corners, values, level):
    """Marching-squares segments for one grid square.

    corners/values are in order (00, 10, 11, 01). The two ambiguous cases are
    resolved by the sign of the square's center value (mean of the corners).
    """
    bits = 0
    for k in range(4):
        if values[k] >= level:
            bits |= 1 << k
    if bits in (0, 15):
        return []
    # edge k joins corner k and corner (k+1) % 4
    pts = {}
    for k in range(4):
        a, b = k, (k + 1) % 4
        if (values[a] >= level) != (values[b] >= level):
            pts[k] = _interp(corners[a], values[a], corners[b], values[b], level)
    pairs = {
        1: [(3, 0)],
        2: [(0, 1)],
        3: [(3, 1)],
        4: [(1, 2)],
        6: [(0, 2)],
        7: [(3, 2)],
        8: [(2, 3)],
        9: [(2, 0)],
        11: [(2, 1)],
        12: [(1, 3)],
        13: [(1, 0)],
        14: [(0, 3)],
    }
    if bits in (5, 10):
        center_above = float(np.mean(values)) >= level
        if bits == 5:  # corners 00 and 11 above
            segs = [(3, 0), (1, 2)] if center_above else [(3, 2), (1, 0)]
        else:  # corners 10 and 01 above
            segs = [(0, 1), (2, 3)] if center_above else [(0, 3), (2, 1)]
    else:
        segs = pairs[bits]
    return [(pts[a], pts[b]) for a, b in segs]


def level_set(gridfield: GridField, level: float) -> List[np.ndarray]:
    """Extract marching-squares contour polylines at the given level.

    Returns a list of (K, 2) arrays; closed contours repeat their first point
    at the end. Empty when the level misses the value range.
    """
    xs, ys = gridfield.cell_centers()
    V = gridfield.values
    nx, ny = gridfield.resolution
    segments = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            corners = (
                (xs[i], ys[j]),
                (xs[i + 1], ys[j]),
                (xs[i + 1], ys[j + 1]),
                (xs[i], ys[j + 1]),
            )
            values = (V[j, i], V[j, i + 1], V[j + 1, i + 1], V[j + 1, i])
            segments.extend(_square_segments(corners, values, level))
    return _chain_segments(segments)


def _chain_segments(segments) -> List[np.ndarray]:
    """Join segments that share endpoints into polylines (loops close)."""

    def key(p):
        return (round(p[0], 9), round(p[1], 9))

    adjacency: Dict[tuple, List[tuple]] = {}
    used = [False] * len(segments)
    for idx, (a, b) in enumerate(segments):
        adjacency.setdefault(key(a), []).append((idx, key(b)))
        adjacency.setdefault(key(b), []).append((idx, key(a)))

    coords = {}
    for a, b in segments:
        coords[key(a)] = a
        coords[key(b)] = b

    def walk(start):
        path = [start]
        node = start
        while True:
            nxt = None
            for idx, other in adjacency[node]:
                if not used[idx]:
                    used[idx] = True
                    nxt = other
                    break
            if nxt is None:
                return path
            path.append(nxt)
            node = nxt

    polylines = []
    open_ends = sorted(k for k, lst in adjacency.items() if len(lst) == 1)
    for start in open_ends:
        if all(used[idx] for idx, _ in adjacency[start]):
            continue
        path = walk(start)
        polylines.append(np.array([coords[k] for k in path]))
    remaining = sorted(
        k for k, lst in adjacency.items() if any(not used[idx] for idx, _ in lst)
    )
    for start in remaining:
        if all(used[idx] for idx, _ in adjacency[start]):
            continue
        path = walk(start)
        polylines.append(np.array([coords[k] for k in path]))
    return polylines


def superlevel_area(gridfield: GridField, tau: float) -> float:
    """Area of {h >= tau} measured in whole grid cells."""
    return float(np.count_nonzero(gridfield.values >= tau)) * gridfield.cell_area()


def _demo_step_length(points) -> float:
    # one *maximum* step of the demo: the band absorbs the discretization of
    # the boundary crossing, and the crossing happens at the fastest step
    if len(points) < 2:
        return 0.0
    steps = [
        float(np.linalg.norm(points[k + 1].x - points[k].x))
        for k in range(len(points) - 1)
    ]
    return float(np.max(steps))


def credit_ground_truth(corpus: DemoCorpus, scenario: Scenario) -> Dict[Tuple[str, int], bool]:
    """Geometric truth for failure points: caused the failure iff inside the
    obstacle disk padded by one step length of its own demo."""
    center = np.asarray(scenario.obstacle_center, dtype=float)
    truth: Dict[Tuple[str, int], bool] = {}
    for demo in corpus.demos:
        if demo.reward >= 0:
            continue
        band = scenario.obstacle_radius + _demo_step_length(demo.points)
        for p in demo.points:
            truth[(demo.id, p.t_index)] = bool(np.linalg.norm(p.x - center) <= band)
    return truth


def _precision_recall(predicted: Dict, truth: Dict) -> Tuple[float, float]:
    tp = fp = fn = 0
    for key, is_true in truth.items():
        pred = predicted.get(key) == CAUSED_FAILURE
        if pred and is_true:
            tp += 1
        elif pred and not is_true:
            fp += 1
        elif not pred and is_true:
            fn += 1
    precision = tp / (tp + fp) if (tp + fp) else (1.0 if fn == 0 else 0.0)
    recall = tp / (tp + fn) if (tp + fn) else 1.0
    return float(precision), float(recall)


def adversarial_rollout_stats(
    model: rbf.SafetyModel,
    scenario: Scenario,
    dyn: Optional[dynamics.DynamicsModel] = None,
    n_rollouts: int = 6,
    n_steps: int = 300,
    min_start_h: float = 0.1,
    tau: float = 0.0,
) -> Tuple[float, float, int]:
    """Drive straight at the obstacle through the filter from ring starts.

    Returns (intervention_rate, min_h, n_used). Starts sit on a circle well
    outside the obstacle; starts where h is already below min_start_h are
    skipped.
    """
    if dyn is None:
        dyn = dynamics.single_integrator_2d()
    center = np.asarray(scenario.obstacle_center, dtype=float)
    cfg = FilterConfig(alpha_gain=1.0, tolerance_tau=tau)
    speed = float(np.max(dyn.control_bounds[:, 1]))
    interventions = 0
    total = 0
    min_h = np.inf
    used = 0
    for k in range(n_rollouts):
        ang = 2.0 * np.pi * k / n_rollouts
        x = center + 0.35 * np.array([np.cos(ang), np.sin(ang)])
        x = np.clip(
            x,
            [scenario.workspace.xmin, scenario.workspace.ymin],
            [scenario.workspace.xmax, scenario.workspace.ymax],
        )
        if rbf.evaluate(model, x) < min_start_h:
            continue
        used += 1
        for _ in range(n_steps):
            to_center = center - x
            dist = np.linalg.norm(to_center)
            u_ref = speed * to_center / dist if dist > 1e-9 else np.zeros(dyn.m)
            decision = filter_control(model, dyn, x, u_ref, cfg)
            x = dynamics.step(dyn, x, decision.u_out, scenario.dt)
            total += 1
            interventions += int(decision.intervened)
            min_h = min(min_h, rbf.evaluate(model, x))
    rate = interventions / total if total else 0.0
    return float(rate), float(min_h if np.isfinite(min_h) else 0.0), used


def score(
    model: rbf.SafetyModel,
    result: LearnResult,
    corpus: DemoCorpus,
    scenario: Optional[Scenario],
    resolution: Tuple[int, int] = (100, 100),
) -> MetricsReport:
    """Compute the full metrics report.

    Geometric metrics need the generating scenario; with scenario=None (a
    recorded corpus) they are zeroed out and flagged instead.
    """
    flags: List[str] = []
    if scenario is None:
        flags.append("no_scenario_geometric_metrics_omitted")
        return MetricsReport(
            unsafe_iou=0.0,
            obstacle_coverage=0.0,
            false_unsafe_rate=0.0,
            credit_precision=0.0,
            credit_recall=0.0,
            filter_intervention_rate=0.0,
            min_h_over_rollouts=0.0,
            flags=flags,
        )
    gridfield = grid_eval(model, scenario.workspace, resolution)
    xs, ys = gridfield.cell_centers()
    X, Y = np.meshgrid(xs, ys)
    center = np.asarray(scenario.obstacle_center, dtype=float)
    in_disk = (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= scenario.obstacle_radius**2
    negative = gridfield.values < 0.0

    inter = np.count_nonzero(in_disk & negative)
    union = np.count_nonzero(in_disk | negative)
    unsafe_iou = inter / union if union else 0.0
    disk_cells = np.count_nonzero(in_disk)
    obstacle_coverage = (
        np.count_nonzero(in_disk & negative) / disk_cells if disk_cells else 0.0
    )

    # cells visited by successful demonstrations
    nx, ny = gridfield.resolution
    b = scenario.workspace
    safe_mask = np.zeros((ny, nx), dtype=bool)
    for demo in corpus.demos:
        if demo.reward < 0:
            continue
        for p in demo.points:
            i = int((p.x[0] - b.xmin) / (b.xmax - b.xmin) * nx)
            j = int((p.x[1] - b.ymin) / (b.ymax - b.ymin) * ny)
            if 0 <= i < nx and 0 <= j < ny:
                safe_mask[j, i] = True
    n_safe_cells = np.count_nonzero(safe_mask)
    false_unsafe_rate = (
        np.count_nonzero(safe_mask & negative) / n_safe_cells if n_safe_cells else 0.0
    )
    if n_safe_cells == 0:
        flags.append("no_demonstrated_safe_cells")

    truth = credit_ground_truth(corpus, scenario)
    if truth:
        precision, recall = _precision_recall(result.credit, truth)
    else:
        precision, recall = 1.0, 1.0
        flags.append("no_failure_points")

    rate, min_h, used = adversarial_rollout_stats(
        model, scenario, dynamics.get_model(corpus.dynamics)
    )
    if used == 0:
        flags.append("no_valid_filter_rollout_starts")

    return MetricsReport(
        unsafe_iou=float(unsafe_iou),
        obstacle_coverage=float(obstacle_coverage),
        false_unsafe_rate=float(false_unsafe_rate),
        credit_precision=precision,
        credit_recall=recall,
        filter_intervention_rate=rate,
        min_h_over_rollouts=min_h,
        flags=flags,
    )


def distance_to_safe_map(
    corpus: DemoCorpus, bounds: Box, resolution: Tuple[int, int]
) -> GridField:
    """Diagnostic overlay: distance from each cell to the nearest successful
    demo point; large values mark under-demonstrated regions the learner will
    read as less safe."""
    nx, ny = resolution
    xs = bounds.xmin + (np.arange(nx) + 0.5) * (bounds.xmax - bounds.xmin) / nx
    ys = bounds.ymin + (np.arange(ny) + 0.5) * (bounds.ymax - bounds.ymin) / ny
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    good = [
        p.x for demo in corpus.demos if demo.reward >= 0 for p in demo.points
    ]
    if not good:
        values = np.full((ny, nx), np.inf)
        values[:] = np.hypot(bounds.xmax - bounds.xmin, bounds.ymax - bounds.ymin)
        return GridField(bounds=bounds, resolution=resolution, values=values)
    good_arr = np.array(good)
    d = np.sqrt(
        ((pts[:, None, :] - good_arr[None, :, :]) ** 2).sum(axis=2)
    ).min(axis=1)
    return GridField(bounds=bounds, resolution=resolution, values=d.reshape(ny, nx))


def to_pgm(gridfield: GridField) -> bytes:
    """Render the grid as a portable greymap (P2) for quick eyeballing.

    Values are scaled to 0..255 over the grid's own range; row 0 is the top
    of the image (max y), matching image conventions.
    """
    v = gridfield.values
    lo, hi = float(v.min()), float(v.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.round((v - lo) * scale).astype(int)
    img = img[::-1]  # y up -> raster down
    ny, nx = img.shape
    lines = [f"P2", f"{nx} {ny}", "255"]
    for row in img:
        lines.append(" ".join(str(int(val)) for val in row))
    return ("\n".join(lines) + "\n").encode("ascii")
