"""Local HTTP + WebSocket service for the browser companion.

Single-user, desk-scale: the UI uploads or edits demonstrations, triggers
learn jobs, fetches the evaluated grid, and teleoperates the simulated robot
through the safety filter. The filter runs server-side so a client cannot
bypass it. Learning runs on a worker thread against a corpus snapshot; the
finished model is swapped into the session atomically, and every teleop tick
reads exactly one model version.
"""

from __future__ import annotations

import asyncio
import copy
import itertools
import json
import threading
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect

from . import dynamics, evaluation, formats, learner, rbf
from .demonstrations import DemoCorpus, DemoPoint, Demonstration, validate
from .safety_filter import FilterConfig, filter_control
from .simgen import Scenario

WS_SUBPROTOCOL = "safeshield-teleop-v1"


@dataclass
class ServiceSettings:
    tick_dt: float = 0.02  # simulated seconds per teleop tick (50 Hz)
    tick_interval: Optional[float] = None  # wall-clock pacing; None -> tick_dt
    default_grid: tuple = (100, 100)

    def pacing(self) -> float:
        return self.tick_dt if self.tick_interval is None else self.tick_interval


class SessionState:
    """Mutable session guarded by one lock: corpus edits serialize, learn jobs
    snapshot the corpus, and the model slot swaps atomically."""

    def __init__(
        self,
        corpus: Optional[DemoCorpus] = None,
        scenario: Optional[Scenario] = None,
    ):
        self.lock = threading.RLock()
        self.corpus = corpus if corpus is not None else DemoCorpus(demos=[])
        self.scenario = scenario if scenario is not None else Scenario()
        self.dyn = dynamics.get_model(self.corpus.dynamics)
        self.model: Optional[rbf.SafetyModel] = None
        self.model_config: Optional[learner.LearnConfig] = None
        self.model_digest: str = ""
        self.model_stale: bool = False
        self.result: Optional[learner.LearnResult] = None
        self.jobs: Dict[str, Dict[str, Any]] = {}
        self._job_seq = itertools.count(1)
        self._demo_seq = itertools.count(1)

    # ---- corpus edits (caller holds no lock) ----

    def add_demo(self, demo: Demonstration) -> str:
        with self.lock:
            if any(d.id == demo.id for d in self.corpus.demos):
                raise ValueError(f"demo id {demo.id!r} already exists")
            self.corpus.demos.append(demo)
            trial = validate(self.corpus)
            if trial:
                self.corpus.demos.pop()
                raise ValueError("; ".join(trial))
            self.model_stale = self.model is not None
            return demo.id

    def next_demo_id(self) -> str:
        with self.lock:
            existing = {d.id for d in self.corpus.demos}
            while True:
                candidate = f"demo{next(self._demo_seq):03d}"
                if candidate not in existing:
                    return candidate

    def running_job(self) -> Optional[str]:
        for job_id, job in self.jobs.items():
            if job["status"] in ("queued", "running"):
                return job_id
        return None


def _demo_summary(demo: Demonstration) -> Dict[str, Any]:
    return {
        "id": demo.id,
        "reward": float(demo.reward),
        "outcome": demo.outcome,
        "source": demo.source,
        "n_points": len(demo.points),
    }


def _json_error(status: int, message: str) -> Response:
    return Response(
        content=json.dumps({"error": message}),
        status_code=status,
        media_type="application/json",
    )


def _parse_demo(body: Dict[str, Any], state: SessionState) -> Demonstration:
    if not isinstance(body, dict) or "points" not in body or "reward" not in body:
        raise ValueError("demo body needs 'reward' and 'points'")
    points = [
        DemoPoint(
            x=np.asarray(p["x"], dtype=float),
            u=np.asarray(p["u"], dtype=float),
            t_index=int(p.get("t", k)),
        )
        for k, p in enumerate(body["points"])
    ]
    demo_id = str(body.get("id") or state.next_demo_id())
    return Demonstration(
        id=demo_id,
        points=points,
        reward=float(body["reward"]),
        source=str(body.get("source", "recorded")),
    )


def create_app(
    state: Optional[SessionState] = None,
    settings: Optional[ServiceSettings] = None,
    static_dir: Optional[str] = None,
) -> FastAPI:
    state = state if state is not None else SessionState()
    settings = settings if settings is not None else ServiceSettings()
    app = FastAPI(title="safeshield service")
    app.state.session = state
    app.state.settings = settings

    # ---------------- scenario & demos ----------------

    @app.get("/api/scenario")
    def get_scenario():
        with state.lock:
            return formats.scenario_to_obj(state.scenario)

    @app.get("/api/demos")
    def list_demos():
        with state.lock:
            return {
                "dynamics": state.corpus.dynamics,
                "count": len(state.corpus.demos),
                "demos": [_demo_summary(d) for d in state.corpus.demos],
            }

    @app.get("/api/demos/{demo_id}")
    def get_demo(demo_id: str):
        with state.lock:
            demo = next((d for d in state.corpus.demos if d.id == demo_id), None)
            if demo is None:
                return _json_error(404, f"no demo {demo_id!r}")
            out = _demo_summary(demo)
            out["points"] = [
                {
                    "x": [float(v) for v in p.x],
                    "u": [float(v) for v in p.u],
                    "t": int(p.t_index),
                }
                for p in demo.points
            ]
            return out

    @app.post("/api/demos")
    async def post_demo(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _json_error(400, "malformed JSON body")
        try:
            demo = _parse_demo(body, state)
        except (ValueError, TypeError, KeyError) as exc:
            return _json_error(400, f"malformed demo: {exc}")
        try:
            demo_id = state.add_demo(demo)
        except ValueError as exc:
            return _json_error(422, str(exc))
        return {"id": demo_id}

    @app.patch("/api/demos/{demo_id}")
    async def patch_demo(demo_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return _json_error(400, "malformed JSON body")
        if "reward" not in body:
            return _json_error(400, "PATCH body needs 'reward'")
        try:
            reward = float(body["reward"])
        except (TypeError, ValueError):
            return _json_error(400, "reward must be a number")
        demo_class = body.get("demo_class")
        with state.lock:
            demo = next((d for d in state.corpus.demos if d.id == demo_id), None)
            if demo is None:
                return _json_error(404, f"no demo {demo_id!r}")
            new_outcome = "failed" if reward < 0 else "succeeded"
            if new_outcome != demo.outcome and demo_class != new_outcome:
                return _json_error(
                    422,
                    f"reward {reward} would reclassify {demo.outcome} -> {new_outcome}; "
                    f"pass demo_class={new_outcome!r} to confirm",
                )
            demo.reward = reward
            demo.outcome = new_outcome
            state.model_stale = state.model is not None
            return _demo_summary(demo)

    @app.delete("/api/demos/{demo_id}")
    def delete_demo(demo_id: str):
        with state.lock:
            before = len(state.corpus.demos)
            state.corpus.demos = [d for d in state.corpus.demos if d.id != demo_id]
            if len(state.corpus.demos) == before:
                return _json_error(404, f"no demo {demo_id!r}")
            state.model_stale = state.model is not None
            return {"deleted": demo_id}

    # ---------------- learning ----------------

    def _run_learn_job(job_id: str, corpus: DemoCorpus, cfg: learner.LearnConfig):
        job = state.jobs[job_id]
        job["status"] = "running"
        try:
            result = learner.learn(corpus, cfg)
        except Exception as exc:
            job["status"] = "failed"
            job["error"] = str(exc)
            return
        if result.solver_status != "optimal":
            job["status"] = "failed"
            job["error"] = f"solver status {result.solver_status}: {result.diagnostics}"
            return
        with state.lock:
            state.model = result.model
            state.model_config = cfg
            state.model_digest = formats.corpus_digest(corpus)
            state.model_stale = False
            state.result = result
        job["status"] = "done"
        job["summary"] = {
            "objective_value": float(result.objective_value),
            "residuals": float(result.residuals),
            "solver_status": result.solver_status,
            "slack_sum": float(np.sum(result.slacks)) if result.slacks.size else 0.0,
            "n_unsafe_points": int(len(result.credit)),
            "n_caused_failure": int(
                sum(1 for v in result.credit.values() if v == learner.CAUSED_FAILURE)
            ),
        }
        job["credit"] = [
            {"demo_id": d, "t": t, "label": label}
            for (d, t), label in sorted(result.credit.items())
        ]

    @app.post("/api/learn")
    async def post_learn(request: Request):
        try:
            body = await request.json()
        except Exception:
            body = {}
        cfg_obj = body.get("config") if isinstance(body, dict) else None
        try:
            if cfg_obj:
                cfg_obj = dict(cfg_obj)
                cfg_obj.setdefault("schema_version", formats.SCHEMA_VERSION)
                cfg = formats.config_from_obj(cfg_obj)
            else:
                cfg = learner.LearnConfig()
        except formats.FormatError as exc:
            return _json_error(422, str(exc))
        with state.lock:
            if state.running_job() is not None:
                return _json_error(409, "a learn job is already running")
            violations = validate(state.corpus)
            if violations:
                return _json_error(422, "; ".join(violations))
            if not state.corpus.demos:
                return _json_error(422, "corpus is empty")
            corpus_snapshot = copy.deepcopy(state.corpus)
            job_id = f"job{next(state._job_seq):03d}"
            state.jobs[job_id] = {"status": "queued", "error": None}
        thread = threading.Thread(
            target=_run_learn_job, args=(job_id, corpus_snapshot, cfg), daemon=True
        )
        state.jobs[job_id]["thread"] = thread
        thread.start()
        return {"job_id": job_id}

    @app.get("/api/learn/{job_id}")
    def get_learn(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return _json_error(404, f"no job {job_id!r}")
        out = {"job_id": job_id, "status": job["status"]}
        if job.get("error"):
            out["error"] = job["error"]
        if job.get("summary"):
            out["summary"] = job["summary"]
            out["credit"] = job["credit"]
        return out

    # ---------------- model & grid ----------------

    @app.get("/api/model")
    def get_model():
        with state.lock:
            if state.model is None:
                return _json_error(404, "no model learned yet")
            obj = formats.model_to_obj(
                state.model, state.model_config, state.model_digest
            )
            obj["stale"] = state.model_stale
            return obj

    @app.get("/api/grid")
    def get_grid(nx: int = 0, ny: int = 0, tau: float = 0.0):
        with state.lock:
            model = state.model
            scenario = state.scenario
        if model is None:
            return _json_error(404, "no model learned yet")
        nx = nx or settings.default_grid[0]
        ny = ny or settings.default_grid[1]
        if nx < 2 or ny < 2 or nx > 1000 or ny > 1000:
            return _json_error(400, "nx and ny must be in [2, 1000]")
        gridfield = evaluation.grid_eval(model, scenario.workspace, (nx, ny))
        contours = evaluation.level_set(gridfield, tau)
        obj = formats.grid_to_obj(gridfield)
        obj["tau"] = tau
        obj["tau_contours"] = [
            [[float(x), float(y)] for x, y in line] for line in contours
        ]
        obj["superlevel_area"] = evaluation.superlevel_area(gridfield, tau)
        return obj

    # ---------------- teleoperation ----------------

    @app.websocket("/ws/teleop")
    async def teleop(ws: WebSocket):
        offered = ws.headers.get("sec-websocket-protocol", "")
        sub = WS_SUBPROTOCOL if WS_SUBPROTOCOL in offered else None
        await ws.accept(subprotocol=sub)

        with state.lock:
            scenario = state.scenario
            dyn = state.dyn
        region = scenario.start_region
        start = np.array(
            [(region.xmin + region.xmax) / 2.0, (region.ymin + region.ymax) / 2.0]
        )
        if dyn.n > 2:
            start = np.concatenate([start, np.zeros(dyn.n - 2)])

        sim = {
            "x": start.copy(),
            "u_ref": np.zeros(dyn.m),
            "tau": 0.0,
            "t": 0,
        }
        stop = asyncio.Event()

        async def receiver():
            while not stop.is_set():
                try:
                    text = await ws.receive_text()
                except (WebSocketDisconnect, RuntimeError):
                    stop.set()
                    return
                try:
                    msg = json.loads(text)
                    if not isinstance(msg, dict):
                        raise ValueError("frame must be a JSON object")
                    if msg.get("reset"):
                        sim["x"] = start.copy()
                        sim["u_ref"] = np.zeros(dyn.m)
                        sim["t"] = 0
                    if "u_ref" in msg:
                        u = np.asarray(msg["u_ref"], dtype=float).ravel()
                        if u.shape != (dyn.m,) or not np.all(np.isfinite(u)):
                            raise ValueError(f"u_ref must be {dyn.m} finite numbers")
                        sim["u_ref"] = u
                    if "tau" in msg:
                        tau = float(msg["tau"])
                        if not np.isfinite(tau):
                            raise ValueError("tau must be finite")
                        sim["tau"] = tau
                except (ValueError, TypeError, json.JSONDecodeError) as exc:
                    try:
                        await ws.send_text(
                            json.dumps({"type": "error", "error": str(exc)})
                        )
                    except (WebSocketDisconnect, RuntimeError):
                        stop.set()
                        return

        recv_task = asyncio.create_task(receiver())
        try:
            while not stop.is_set():
                # one consistent model snapshot per tick
                with state.lock:
                    model = state.model
                u_ref = sim["u_ref"]
                if model is not None:
                    cfg = FilterConfig(alpha_gain=1.0, tolerance_tau=sim["tau"])
                    decision = filter_control(model, dyn, sim["x"], u_ref, cfg)
                    u_out = decision.u_out
                    intervened = decision.intervened
                    constraint_value = decision.constraint_value
                    softened = decision.infeasible_softened
                else:
                    u_out, _ = dynamics.clamp_control(dyn, u_ref)
                    intervened = False
                    constraint_value = 0.0
                    softened = False
                sim["x"] = dynamics.step(dyn, sim["x"], u_out, settings.tick_dt)
                sim["t"] += 1
                h_val = (
                    float(rbf.evaluate(model, sim["x"])) if model is not None else None
                )
                frame = {
                    "type": "tick",
                    "t": sim["t"],
                    "x": [float(v) for v in sim["x"]],
                    "h": h_val,
                    "u_ref": [float(v) for v in u_ref],
                    "u_out": [float(v) for v in u_out],
                    "intervened": bool(intervened),
                    "constraint_value": float(constraint_value),
                    "infeasible_softened": bool(softened),
                    "tau": sim["tau"],
                    "filter_enabled": model is not None,
                }
                await ws.send_text(json.dumps(frame))
                await asyncio.sleep(settings.pacing())
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            stop.set()
            recv_task.cancel()

    if static_dir is not None:
        import os

        if os.path.isdir(static_dir):
            from fastapi.staticfiles import StaticFiles

            # mounted last so /api and /ws keep precedence
            app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
