"""Stable JSON formats: demo corpora, learned models, configs, metrics.

Serialization is canonical: keys sorted, no whitespace, floats at 17
significant digits. save(load(f)) is byte-identical, which is what the golden
tests and the model-file determinism guarantee lean on. Writes are atomic
(temp file + rename). NaN/Inf never cross the boundary in either direction.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict, fields
from typing import Any, Dict, Optional

import numpy as np

from .demonstrations import DemoCorpus, DemoPoint, Demonstration
from .evaluation import GridField, MetricsReport
from .learner import LearnConfig, LearnResult
from .rbf import SafetyModel
from .simgen import Box, GenSpec, Scenario

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Malformed or unsupported file content."""


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise FormatError(f"cannot serialize non-finite number {x!r}")
    if x == 0.0:
        x = 0.0  # "-0" would parse back as the integer 0 and break round trips
    return format(float(x), ".17g")


def canonical_dumps(obj: Any) -> str:
    """Deterministic compact JSON: sorted keys, fixed float formatting."""
    out = []
    _write_canonical(obj, out)
    return "".join(out)


def _write_canonical(obj: Any, out: list) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, np.ndarray):
        _write_canonical(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for k, item in enumerate(obj):
            if k:
                out.append(",")
            _write_canonical(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for k, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise FormatError(f"object keys must be strings, got {key!r}")
            if k:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _write_canonical(obj[key], out)
        out.append("}")
    else:
        raise FormatError(f"cannot serialize {type(obj).__name__}")


def save_json(path: str, obj: Any) -> None:
    """Canonical, whole-file-atomic write."""
    text = canonical_dumps(obj)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_json(path: str) -> Any:
    with open(path, "r") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from None


def _require_version(obj: Dict, what: str) -> None:
    if not isinstance(obj, dict):
        raise FormatError(f"{what}: expected a JSON object")
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(
            f"{what}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
        )


def _finite_list(values, context: str) -> list:
    arr = list(float(v) for v in values)
    if not all(math.isfinite(v) for v in arr):
        raise FormatError(f"{context}: non-finite number")
    return arr


# ---------------------------------------------------------------- corpora


def corpus_to_obj(corpus: DemoCorpus) -> Dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "dynamics": corpus.dynamics,
        "demos": [
            {
                "id": demo.id,
                "reward": float(demo.reward),
                "source": demo.source,
                "points": [
                    {
                        "x": [float(v) for v in p.x],
                        "u": [float(v) for v in p.u],
                        "t": int(p.t_index),
                    }
                    for p in demo.points
                ],
            }
            for demo in corpus.demos
        ],
    }


def corpus_from_obj(obj: Dict) -> DemoCorpus:
    _require_version(obj, "demo file")
    if "dynamics" not in obj or "demos" not in obj:
        raise FormatError("demo file: missing 'dynamics' or 'demos'")
    demos = []
    for raw in obj["demos"]:
        demo_id = raw.get("id", "<missing id>")
        try:
            reward = float(raw["reward"])
            if not math.isfinite(reward):
                raise FormatError(f"demo {demo_id!r}: non-finite reward")
            points = [
                DemoPoint(
                    x=np.array(_finite_list(p["x"], f"demo {demo_id!r} point x")),
                    u=np.array(_finite_list(p["u"], f"demo {demo_id!r} point u")),
                    t_index=int(p["t"]),
                )
                for p in raw["points"]
            ]
            source = raw.get("source", "synthetic")
            demos.append(
                Demonstration(id=str(raw["id"]), points=points, reward=reward, source=source)
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"demo {demo_id!r}: malformed ({exc})") from None
    corpus = DemoCorpus(demos=demos, dynamics=str(obj["dynamics"]))
    from .demonstrations import validate

    violations = validate(corpus)
    if violations:
        raise FormatError("demo file: " + "; ".join(violations))
    return corpus


def corpus_digest(corpus: DemoCorpus) -> str:
    text = canonical_dumps(corpus_to_obj(corpus))
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def save_corpus(path: str, corpus: DemoCorpus) -> None:
    save_json(path, corpus_to_obj(corpus))


def load_corpus(path: str) -> DemoCorpus:
    return corpus_from_obj(load_json(path))


# ---------------------------------------------------------------- models


def model_to_obj(
    model: SafetyModel, config: Optional[LearnConfig] = None, digest: str = ""
) -> Dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "sigma": float(model.sigma),
        "bias": float(model.bias),
        "centers": [[float(v) for v in c] for c in model.centers],
        "theta": [float(v) for v in model.theta],
        "learn_config_echo": config_to_obj(config) if config is not None else None,
        "corpus_digest": digest,
    }


def model_from_obj(obj: Dict) -> SafetyModel:
    _require_version(obj, "model file")
    try:
        centers = np.array(
            [_finite_list(c, "model centers") for c in obj["centers"]]
        )
        theta = np.array(_finite_list(obj["theta"], "model theta"))
        sigma = float(obj["sigma"])
        bias = float(obj["bias"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"model file: malformed ({exc})") from None
    if not (math.isfinite(sigma) and math.isfinite(bias)):
        raise FormatError("model file: non-finite sigma or bias")
    if len(centers) != len(theta):
        raise FormatError(
            f"model file: |centers| = {len(centers)} != |theta| = {len(theta)}"
        )
    try:
        return SafetyModel(centers=centers, theta=theta, bias=bias, sigma=sigma)
    except ValueError as exc:
        raise FormatError(f"model file: {exc}") from None


def save_model(
    path: str, model: SafetyModel, config: Optional[LearnConfig] = None, digest: str = ""
) -> None:
    save_json(path, model_to_obj(model, config, digest))


def load_model(path: str) -> SafetyModel:
    return model_from_obj(load_json(path))


# ---------------------------------------------------------------- configs


def config_to_obj(config: LearnConfig) -> Dict:
    obj = asdict(config)
    obj["schema_version"] = SCHEMA_VERSION
    return obj


def config_from_obj(obj: Dict) -> LearnConfig:
    _require_version(obj, "config file")
    known = {f.name for f in fields(LearnConfig)}
    extra = set(obj) - known - {"schema_version"}
    if extra:
        raise FormatError(f"config file: unknown fields {sorted(extra)}")
    kwargs = {k: v for k, v in obj.items() if k in known}
    try:
        return LearnConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"config file: {exc}") from None


def save_config(path: str, config: LearnConfig) -> None:
    save_json(path, config_to_obj(config))


def load_config(path: str) -> LearnConfig:
    return config_from_obj(load_json(path))


# ---------------------------------------------------------------- metrics


def metrics_to_obj(report: MetricsReport) -> Dict:
    obj = asdict(report)
    obj["schema_version"] = SCHEMA_VERSION
    return obj


def metrics_from_obj(obj: Dict) -> MetricsReport:
    _require_version(obj, "metrics file")
    known = {f.name for f in fields(MetricsReport)}
    kwargs = {k: v for k, v in obj.items() if k in known}
    try:
        return MetricsReport(**kwargs)
    except TypeError as exc:
        raise FormatError(f"metrics file: {exc}") from None


def save_metrics(path: str, report: MetricsReport) -> None:
    save_json(path, metrics_to_obj(report))


def load_metrics(path: str) -> MetricsReport:
    return metrics_from_obj(load_json(path))


# ---------------------------------------------------------------- results & grids


def result_to_obj(result: LearnResult) -> Dict:
    """Learn-result summary: slacks and credit labels keyed by demo point."""
    return {
        "schema_version": SCHEMA_VERSION,
        "objective_value": float(result.objective_value),
        "solver_status": result.solver_status,
        "residuals": float(result.residuals),
        "diagnostics": result.diagnostics,
        "slacks": [
            {
                "demo_id": demo_id,
                "t": t_index,
                "xi": float(result.slacks[col - (len(result.model.theta) + 1)]),
            }
            for (demo_id, t_index), col in sorted(result.slack_index.items())
        ],
        "credit": [
            {"demo_id": demo_id, "t": t_index, "label": label}
            for (demo_id, t_index), label in sorted(result.credit.items())
        ],
    }


def grid_to_obj(gridfield: GridField) -> Dict:
    b = gridfield.bounds
    nx, ny = gridfield.resolution
    return {
        "schema_version": SCHEMA_VERSION,
        "bounds": {"xmin": b.xmin, "ymin": b.ymin, "xmax": b.xmax, "ymax": b.ymax},
        "resolution": [nx, ny],
        "values": [float(v) for v in gridfield.values.ravel()],
    }


def grid_from_obj(obj: Dict) -> GridField:
    _require_version(obj, "grid file")
    b = obj["bounds"]
    nx, ny = obj["resolution"]
    values = np.array(_finite_list(obj["values"], "grid values")).reshape(ny, nx)
    return GridField(
        bounds=Box(b["xmin"], b["ymin"], b["xmax"], b["ymax"]),
        resolution=(int(nx), int(ny)),
        values=values,
    )


# ---------------------------------------------------------------- scenario & genspec


def scenario_to_obj(scenario: Scenario) -> Dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "obstacle_center": list(scenario.obstacle_center),
        "obstacle_radius": scenario.obstacle_radius,
        "start_region": [
            scenario.start_region.xmin,
            scenario.start_region.ymin,
            scenario.start_region.xmax,
            scenario.start_region.ymax,
        ],
        "target": list(scenario.target),
        "target_radius": scenario.target_radius,
        "workspace": [
            scenario.workspace.xmin,
            scenario.workspace.ymin,
            scenario.workspace.xmax,
            scenario.workspace.ymax,
        ],
        "dt": scenario.dt,
        "max_steps": scenario.max_steps,
    }


def scenario_from_obj(obj: Dict) -> Scenario:
    _require_version(obj, "scenario file")
    try:
        return Scenario(
            obstacle_center=tuple(obj["obstacle_center"]),
            obstacle_radius=float(obj["obstacle_radius"]),
            start_region=Box(*obj["start_region"]),
            target=tuple(obj["target"]),
            target_radius=float(obj["target_radius"]),
            workspace=Box(*obj["workspace"]),
            dt=float(obj["dt"]),
            max_steps=int(obj["max_steps"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"scenario file: {exc}") from None


def genspec_to_obj(spec: GenSpec) -> Dict:
    obj = asdict(spec)
    obj["safe_clearance"] = list(spec.safe_clearance)
    obj["semisafe_clearance"] = list(spec.semisafe_clearance)
    obj["schema_version"] = SCHEMA_VERSION
    return obj


def genspec_from_obj(obj: Dict) -> GenSpec:
    _require_version(obj, "genspec file")
    known = {f.name for f in fields(GenSpec)}
    kwargs = {k: v for k, v in obj.items() if k in known}
    for key in ("safe_clearance", "semisafe_clearance"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return GenSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"genspec file: {exc}") from None
