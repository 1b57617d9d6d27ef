"""Demonstration data model and the safe / semisafe / unsafe partition.

Every demonstration carries one scalar safety reward labeling the whole
trajectory: failures are strictly negative, successes nonnegative, and the
successful demos split into "safe" and "semisafe" at a corpus-relative
threshold (median of the positive rewards unless the corpus pins one).
A state can legitimately sit in both a successful set and the unsafe set;
resolving that overlap is the learner's credit-assignment job, not ours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import dynamics

SOURCES = ("synthetic", "recorded")
OUTCOMES = ("failed", "succeeded")


class CorpusError(ValueError):
    """Raised when a corpus violates its reward or dimension invariants."""


@dataclass(frozen=True)
class DemoPoint:
    x: np.ndarray
    u: np.ndarray
    t_index: int


@dataclass
class Demonstration:
    id: str
    points: List[DemoPoint]
    reward: float
    source: str = "synthetic"
    # Declared class; defaults to the reward's sign. validate() flags demos
    # whose declared outcome disagrees with the reward sign.
    outcome: Optional[str] = None

    def __post_init__(self):
        if self.outcome is None:
            self.outcome = "failed" if self.reward < 0 else "succeeded"


@dataclass(frozen=True)
class RewardThresholds:
    """Corpus-level reward conventions.

    r_f_max: upper bound (exclusive of 0) every failure reward must respect.
    semisafe_split: successful demos with reward >= split are "safe",
    the rest "semisafe"; None means use the median of positive rewards.
    """

    r_f_max: float = -1e-9
    semisafe_split: Optional[float] = None


@dataclass
class DemoCorpus:
    demos: List[Demonstration]
    dynamics: str = "integrator2d"
    reward_thresholds: RewardThresholds = field(default_factory=RewardThresholds)


@dataclass(frozen=True)
class TaggedPoint:
    """One (x, u) sample plus its demo's reward and provenance."""

    x: np.ndarray
    u: np.ndarray
    r: float
    demo_id: str
    t_index: int


@dataclass
class PartitionedPoints:
    safe: List[TaggedPoint]
    semisafe: List[TaggedPoint]
    unsafe: List[TaggedPoint]

    def total(self) -> int:
        return len(self.safe) + len(self.semisafe) + len(self.unsafe)


# l-inf radius used only for diagnostics ("does this unsafe state retrace a
# safe one"); the QP never compares states for identity.
SAME_STATE_DELTA = 0.02


def validate(corpus: DemoCorpus) -> List[str]:
    """Collect reward-sign and dimension violations. Empty list means valid."""
    violations: List[str] = []
    try:
        model = dynamics.get_model(corpus.dynamics)
    except ValueError as exc:
        return [str(exc)]
    thresholds = corpus.reward_thresholds
    if not thresholds.r_f_max < 0:
        violations.append(f"r_f_max must be negative, got {thresholds.r_f_max}")
    seen_ids = set()
    for demo in corpus.demos:
        tag = f"demo {demo.id!r}"
        if demo.id in seen_ids:
            violations.append(f"{tag}: duplicate id")
        seen_ids.add(demo.id)
        if not demo.points:
            violations.append(f"{tag}: has no points")
        if not math.isfinite(demo.reward):
            violations.append(f"{tag}: reward is not finite")
            continue
        if demo.source not in SOURCES:
            violations.append(f"{tag}: unknown source {demo.source!r}")
        if demo.outcome not in OUTCOMES:
            violations.append(f"{tag}: unknown outcome {demo.outcome!r}")
        elif demo.outcome == "failed" and demo.reward >= 0:
            violations.append(
                f"{tag}: failure reward must be negative, got {demo.reward}"
            )
        elif demo.outcome == "succeeded" and demo.reward < 0:
            violations.append(
                f"{tag}: successful reward must be >= 0, got {demo.reward}"
            )
        for pt in demo.points:
            if np.asarray(pt.x).shape != (model.n,):
                violations.append(
                    f"{tag}: point t={pt.t_index} state dim "
                    f"{np.asarray(pt.x).shape} != ({model.n},)"
                )
                break
            if np.asarray(pt.u).shape != (model.m,):
                violations.append(
                    f"{tag}: point t={pt.t_index} control dim "
                    f"{np.asarray(pt.u).shape} != ({model.m},)"
                )
                break
            if not (
                np.all(np.isfinite(pt.x)) and np.all(np.isfinite(pt.u))
            ):
                violations.append(f"{tag}: point t={pt.t_index} has non-finite entries")
                break
    return violations


def semisafe_split_value(corpus: DemoCorpus) -> float:
    """The safe/semisafe reward threshold for this corpus.

    Defaults to the median of the successful demos' rewards, which keeps both
    sets nonempty whenever rewards are not all identical.
    """
    if corpus.reward_thresholds.semisafe_split is not None:
        return corpus.reward_thresholds.semisafe_split
    positive = sorted(d.reward for d in corpus.demos if d.reward >= 0)
    if not positive:
        return 0.0
    return float(np.median(positive))


def partition(corpus: DemoCorpus) -> PartitionedPoints:
    """Split every trajectory point into the safe / semisafe / unsafe sets.

    Demos with r < 0 contribute all points to unsafe; successful demos go to
    safe (r >= split) or semisafe (0 <= r < split). Each point carries its
    demo's reward.
    """
    if not corpus.demos:
        raise CorpusError("empty corpus")
    violations = validate(corpus)
    if violations:
        raise CorpusError("invalid corpus: " + "; ".join(violations))
    split = semisafe_split_value(corpus)
    parts = PartitionedPoints(safe=[], semisafe=[], unsafe=[])
    for demo in corpus.demos:
        if demo.reward < 0:
            bucket = parts.unsafe
        elif demo.reward >= split:
            bucket = parts.safe
        else:
            bucket = parts.semisafe
        for pt in demo.points:
            bucket.append(
                TaggedPoint(
                    x=np.asarray(pt.x, dtype=float),
                    u=np.asarray(pt.u, dtype=float),
                    r=demo.reward,
                    demo_id=demo.id,
                    t_index=pt.t_index,
                )
            )
    return parts


def subsample_demo(demo: Demonstration, max_points: int) -> Demonstration:
    """Uniformly downsample a demonstration to at most max_points points.

    First and last points are always kept; original t_index values survive so
    credit labels still refer to the source trajectory.
    """
    if max_points < 2:
        raise ValueError("max_points must be >= 2")
    if len(demo.points) <= max_points:
        return demo
    idx = np.unique(np.round(np.linspace(0, len(demo.points) - 1, max_points)).astype(int))
    return replace(demo, points=[demo.points[i] for i in idx])


def subsample_corpus(corpus: DemoCorpus, max_points_per_demo: int) -> DemoCorpus:
    """Apply subsample_demo to every demonstration; bounds the QP size."""
    return DemoCorpus(
        demos=[subsample_demo(d, max_points_per_demo) for d in corpus.demos],
        dynamics=corpus.dynamics,
        reward_thresholds=corpus.reward_thresholds,
    )


def overlap_count(parts: PartitionedPoints, delta: float = SAME_STATE_DELTA) -> int:
    """How many unsafe states retrace a successful state within an l-inf ball.

    Diagnostic only; quantifies how much credit assignment has to resolve.
    """
    good = parts.safe + parts.semisafe
    if not good:
        return 0
    good_xs = np.array([p.x for p in good])
    count = 0
    for p in parts.unsafe:
        if np.any(np.max(np.abs(good_xs - p.x), axis=1) <= delta):
            count += 1
    return count
