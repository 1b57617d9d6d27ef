// Shapes of the service's JSON bodies. The UI never computes h or runs the
// filter itself; every safety-relevant number arrives through these types.

export interface ScenarioMsg {
  obstacle_center: [number, number];
  obstacle_radius: number;
  start_region: [number, number, number, number];
  target: [number, number];
  target_radius: number;
  workspace: [number, number, number, number];
  dt: number;
  max_steps: number;
}

export interface DemoSummary {
  id: string;
  reward: number;
  outcome: "failed" | "succeeded";
  source: string;
  n_points: number;
}

export interface DemoListMsg {
  dynamics: string;
  count: number;
  demos: DemoSummary[];
}

export interface DemoPointMsg {
  x: number[];
  u: number[];
  t: number;
}

export interface GridMsg {
  bounds: { xmin: number; ymin: number; xmax: number; ymax: number };
  resolution: [number, number];
  values: number[];
  tau: number;
  tau_contours: [number, number][][];
  superlevel_area: number;
}

export interface LearnJobMsg {
  job_id: string;
  status: "queued" | "running" | "done" | "failed";
  error?: string;
  summary?: {
    objective_value: number;
    residuals: number;
    solver_status: string;
    slack_sum: number;
    n_unsafe_points: number;
    n_caused_failure: number;
  };
  credit?: { demo_id: string; t: number; label: "caused_failure" | "absolved" }[];
}

export type TickFrame = {
  type: "tick";
  t: number;
  x: number[];
  h: number | null;
  u_ref: number[];
  u_out: number[];
  intervened: boolean;
  constraint_value: number;
  infeasible_softened: boolean;
  tau: number;
  filter_enabled: boolean;
};

export type ErrorFrame = { type: "error"; error: string };

export type ServerFrame = TickFrame | ErrorFrame;

export type ClientFrame = {
  u_ref?: [number, number];
  tau?: number;
  reset?: boolean;
};
