// App assembly: canvas layers, demo drawing, ranking panel, learn flow,
// heatmap + contour display, and the live teleoperation loop.

import { Api, ApiError } from "./api";
import { CanvasTransform } from "./transform";
import { clipStroke, strokeToDemoPoints, type Pt } from "./stroke";
import {
  drawContours,
  drawDemo,
  drawHeatmap,
  drawRobot,
  drawScenario,
  drawStroke,
  type DemoTrace,
} from "./draw";
import { hGauge, interventionLabel, keyVector } from "./hud";
import { sliderRange } from "./rankings";
import { TeleopClient } from "./teleop";
import type { GridMsg, ScenarioMsg, TickFrame } from "./types";

const CANVAS_SIZE = 640;
const DRAW_DT = 0.02;
const DRAW_SPEED = 0.5;
const CONTROL_BOUND = 2.0; // matches the integrator's box; server clamps anyway
const TELEOP_SPEED = 2.0;
const GRID_N = 100;

interface AppState {
  api: Api;
  scenario: ScenarioMsg;
  tf: CanvasTransform;
  traces: Map<string, DemoTrace>;
  grid: GridMsg | null;
  tau: number;
  stale: boolean;
  drawClass: "succeeded" | "failed";
  stroke: Pt[] | null;
  teleop: TeleopClient | null;
  lastTick: TickFrame | null;
  keys: Set<string>;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false): void {
  const bar = el<HTMLDivElement>("status");
  bar.textContent = text;
  bar.className = isError ? "status error" : "status";
}

async function loadTraces(state: AppState): Promise<void> {
  const listing = await state.api.listDemos();
  const seen = new Set<string>();
  for (const summary of listing.demos) {
    seen.add(summary.id);
    const existing = state.traces.get(summary.id);
    if (existing && existing.points.length === summary.n_points) {
      existing.reward = summary.reward;
      existing.outcome = summary.outcome;
      continue;
    }
    const resp = await fetch(`${state.api.base}/api/demos/${summary.id}`);
    const full = await resp.json();
    state.traces.set(summary.id, {
      id: summary.id,
      outcome: summary.outcome,
      reward: summary.reward,
      points: full.points.map((p: { x: number[] }) => ({ x: p.x[0], y: p.x[1] })),
    });
  }
  for (const id of [...state.traces.keys()]) {
    if (!seen.has(id)) state.traces.delete(id);
  }
}

function renderDemoList(state: AppState): void {
  const list = el<HTMLDivElement>("demo-list");
  list.innerHTML = "";
  for (const trace of state.traces.values()) {
    const row = document.createElement("div");
    row.className = "demo-row";
    const badge = document.createElement("span");
    badge.className = `badge ${trace.outcome}`;
    badge.textContent = trace.outcome === "failed" ? "failed" : "success";
    const name = document.createElement("span");
    name.className = "demo-name";
    name.textContent = `${trace.id} (r=${trace.reward.toFixed(2)})`;
    const slider = document.createElement("input");
    slider.type = "range";
    const [lo, hi] = sliderRange(trace.outcome);
    slider.min = String(lo);
    slider.max = String(hi);
    slider.step = "0.01";
    slider.value = String(trace.reward);
    slider.title = "safety ranking";
    slider.addEventListener("change", async () => {
      try {
        await state.api.setReward(trace.id, Number(slider.value));
        trace.reward = Number(slider.value);
        state.stale = true;
        refresh(state);
      } catch (err) {
        setStatus(`ranking update failed: ${(err as Error).message}`, true);
      }
    });
    const remove = document.createElement("button");
    remove.textContent = "x";
    remove.title = "delete demonstration";
    remove.addEventListener("click", async () => {
      await state.api.deleteDemo(trace.id);
      state.traces.delete(trace.id);
      state.stale = true;
      refresh(state);
    });
    row.append(badge, name, slider, remove);
    list.append(row);
  }
  el<HTMLSpanElement>("stale-badge").style.display = state.stale ? "inline" : "none";
}

function redraw(state: AppState): void {
  const base = el<HTMLCanvasElement>("layer-heatmap").getContext("2d")!;
  base.clearRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
  if (state.grid) drawHeatmap(base, state.grid, state.tf);

  const top = el<HTMLCanvasElement>("layer-overlay").getContext("2d")!;
  top.clearRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
  drawScenario(top, state.scenario, state.tf);
  if (state.grid) drawContours(top, state.grid.tau_contours, state.tf);
  for (const trace of state.traces.values()) {
    drawDemo(top, trace, state.tf, false);
  }
  if (state.stroke) {
    drawStroke(top, state.stroke, state.tf,
      state.drawClass === "failed" ? "#c0392b" : "#1f7a4d");
  }
  if (state.lastTick) {
    drawRobot(top, state.lastTick.x[0], state.lastTick.x[1],
      state.lastTick.intervened, state.tf);
  }
}

function refresh(state: AppState): void {
  renderDemoList(state);
  redraw(state);
}

async function refreshGrid(state: AppState): Promise<void> {
  try {
    state.grid = await state.api.grid(GRID_N, GRID_N, state.tau);
    el<HTMLSpanElement>("area-readout").textContent =
      `area(h >= tau) = ${state.grid.superlevel_area.toFixed(3)}`;
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) state.grid = null;
    else throw err;
  }
  redraw(state);
}

function applyCredit(state: AppState, credit: { demo_id: string; t: number; label: string }[]): void {
  const byDemo = new Map<string, Map<number, boolean>>();
  for (const entry of credit) {
    if (!byDemo.has(entry.demo_id)) byDemo.set(entry.demo_id, new Map());
    byDemo.get(entry.demo_id)!.set(entry.t, entry.label === "caused_failure");
  }
  for (const trace of state.traces.values()) {
    const labels = byDemo.get(trace.id);
    trace.credit = labels
      ? trace.points.map((_, k) => labels.get(k) ?? false)
      : undefined;
  }
}

function wireDrawing(state: AppState): void {
  const overlay = el<HTMLCanvasElement>("layer-overlay");
  const toWorkspace = (ev: PointerEvent): Pt => {
    const rect = overlay.getBoundingClientRect();
    const [x, y] = state.tf.toWorkspace(
      ((ev.clientX - rect.left) / rect.width) * CANVAS_SIZE,
      ((ev.clientY - rect.top) / rect.height) * CANVAS_SIZE,
    );
    return { x, y };
  };
  overlay.addEventListener("pointerdown", (ev) => {
    if (state.teleop) return; // teleop mode owns the canvas
    state.stroke = [toWorkspace(ev)];
    overlay.setPointerCapture(ev.pointerId);
  });
  overlay.addEventListener("pointermove", (ev) => {
    if (!state.stroke) return;
    state.stroke.push(toWorkspace(ev));
    redraw(state);
  });
  overlay.addEventListener("pointerup", async () => {
    const raw = state.stroke;
    state.stroke = null;
    if (!raw) return;
    const { points, clipped } = clipStroke(raw, state.scenario.workspace.length
      ? { xmin: state.scenario.workspace[0], ymin: state.scenario.workspace[1],
          xmax: state.scenario.workspace[2], ymax: state.scenario.workspace[3] }
      : state.tf.bounds);
    if (clipped) setStatus("stroke clipped to the workspace", false);
    const demoPoints = strokeToDemoPoints(points, {
      dt: DRAW_DT,
      speed: DRAW_SPEED,
      controlBound: CONTROL_BOUND,
    });
    if (!demoPoints) {
      redraw(state);
      return; // a click, not a stroke: nothing to upload
    }
    const reward = state.drawClass === "failed" ? -0.5
      : Number(el<HTMLInputElement>("new-reward").value);
    try {
      const { id } = await state.api.uploadDemo(demoPoints, reward);
      state.traces.set(id, {
        id,
        outcome: state.drawClass,
        reward,
        points: demoPoints.map((p) => ({ x: p.x[0], y: p.x[1] })),
      });
      state.stale = true;
      setStatus(`uploaded ${id} (${demoPoints.length} points)`);
    } catch (err) {
      setStatus(`upload rejected: ${(err as Error).message}`, true);
    }
    refresh(state);
  });
}

function wireLearn(state: AppState): void {
  const button = el<HTMLButtonElement>("learn-button");
  button.addEventListener("click", async () => {
    button.disabled = true;
    setStatus("learning...");
    try {
      const { job_id } = await state.api.startLearn();
      const job = await state.api.waitForLearn(job_id);
      if (job.status === "failed") {
        setStatus(`learning failed: ${job.error}`, true);
      } else {
        const s = job.summary!;
        setStatus(
          `learned: objective ${s.objective_value.toFixed(3)}, ` +
          `${s.n_caused_failure}/${s.n_unsafe_points} failure points blamed`,
        );
        applyCredit(state, job.credit ?? []);
        state.stale = false;
        await refreshGrid(state);
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        setStatus("learning in progress", true);
      } else {
        setStatus(`learn error: ${(err as Error).message}`, true);
      }
    } finally {
      button.disabled = false;
      refresh(state);
    }
  });
}

function wireTau(state: AppState): void {
  const slider = el<HTMLInputElement>("tau-slider");
  const readout = el<HTMLSpanElement>("tau-readout");
  slider.addEventListener("input", async () => {
    state.tau = Number(slider.value);
    readout.textContent = `tau = ${state.tau.toFixed(2)}`;
    state.teleop?.setTau(state.tau);
    if (state.grid) await refreshGrid(state);
  });
}

function wireTeleop(state: AppState): void {
  const button = el<HTMLButtonElement>("teleop-button");
  const resetButton = el<HTMLButtonElement>("reset-button");
  const hud = el<HTMLDivElement>("hud");

  const stop = () => {
    state.teleop?.close();
    state.teleop = null;
    state.lastTick = null;
    button.textContent = "start teleop";
    hud.style.display = "none";
    redraw(state);
  };

  button.addEventListener("click", () => {
    if (state.teleop) {
      stop();
      return;
    }
    const proto = location.protocol === "https:" ? "wss" : "ws";
    const url = `${proto}://${location.host}/ws/teleop`;
    state.teleop = new TeleopClient(url, {
      onTick: (frame) => {
        state.lastTick = frame;
        const gauge = hGauge(frame.h, frame.tau);
        const bar = el<HTMLDivElement>("h-bar");
        bar.style.width = `${(gauge.fraction * 100).toFixed(1)}%`;
        bar.style.background = gauge.color;
        el<HTMLSpanElement>("h-label").textContent = gauge.label;
        const light = el<HTMLSpanElement>("intervention");
        light.textContent = interventionLabel(frame.intervened, frame.infeasible_softened);
        light.className = frame.intervened ? "light on" : "light";
        if (!frame.filter_enabled) {
          el<HTMLSpanElement>("filter-state").textContent = "filter disabled (no model)";
        } else {
          el<HTMLSpanElement>("filter-state").textContent = "";
        }
        redraw(state);
      },
      onError: (message) => setStatus(`teleop: ${message}`, true),
      onClose: stop,
    });
    state.teleop.reset();
    state.teleop.setTau(state.tau);
    button.textContent = "stop teleop";
    hud.style.display = "block";
  });

  resetButton.addEventListener("click", () => state.teleop?.reset());

  window.addEventListener("keydown", (ev) => {
    state.keys.add(ev.key);
  });
  window.addEventListener("keyup", (ev) => {
    state.keys.delete(ev.key);
  });
  // stream the reference at display rate (<= 60 Hz); server ticks at 50 Hz
  const pump = () => {
    if (state.teleop?.connected) {
      const [ux, uy] = keyVector(state.keys, TELEOP_SPEED);
      state.teleop.setReference(ux, uy);
    }
    requestAnimationFrame(pump);
  };
  requestAnimationFrame(pump);
}

async function boot(): Promise<void> {
  const api = new Api("");
  const scenario = await api.scenario();
  const [xmin, ymin, xmax, ymax] = scenario.workspace;
  const state: AppState = {
    api,
    scenario,
    tf: new CanvasTransform({ xmin, ymin, xmax, ymax }, CANVAS_SIZE, CANVAS_SIZE),
    traces: new Map(),
    grid: null,
    tau: 0,
    stale: false,
    drawClass: "succeeded",
    stroke: null,
    teleop: null,
    lastTick: null,
    keys: new Set(),
  };
  for (const radio of document.querySelectorAll<HTMLInputElement>("input[name=draw-class]")) {
    radio.addEventListener("change", () => {
      state.drawClass = radio.value as "succeeded" | "failed";
      el<HTMLInputElement>("new-reward").disabled = radio.value === "failed";
    });
  }
  wireDrawing(state);
  wireLearn(state);
  wireTau(state);
  wireTeleop(state);
  await loadTraces(state);
  await refreshGrid(state).catch(() => undefined);
  refresh(state);
  setStatus("ready: draw demonstrations, rank them, then learn");
}

boot().catch((err) => setStatus(`failed to start: ${err.message}`, true));
