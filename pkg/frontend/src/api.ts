// Thin typed client for the service's HTTP API.

import type {
  DemoListMsg,
  DemoPointMsg,
  GridMsg,
  LearnJobMsg,
  ScenarioMsg,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class Api {
  constructor(readonly base: string = "") {}

  scenario(): Promise<ScenarioMsg> {
    return request(`${this.base}/api/scenario`);
  }

  listDemos(): Promise<DemoListMsg> {
    return request(`${this.base}/api/demos`);
  }

  uploadDemo(points: DemoPointMsg[], reward: number, id?: string): Promise<{ id: string }> {
    return request(`${this.base}/api/demos`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ id, reward, source: "recorded", points }),
    });
  }

  setReward(id: string, reward: number, demoClass?: "failed" | "succeeded") {
    return request(`${this.base}/api/demos/${id}`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(
        demoClass ? { reward, demo_class: demoClass } : { reward },
      ),
    });
  }

  deleteDemo(id: string) {
    return request(`${this.base}/api/demos/${id}`, { method: "DELETE" });
  }

  startLearn(config?: Record<string, unknown>): Promise<{ job_id: string }> {
    return request(`${this.base}/api/learn`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config ? { config } : {}),
    });
  }

  learnStatus(jobId: string): Promise<LearnJobMsg> {
    return request(`${this.base}/api/learn/${jobId}`);
  }

  async waitForLearn(jobId: string, timeoutMs = 120_000, pollMs = 250): Promise<LearnJobMsg> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.learnStatus(jobId);
      if (status.status === "done" || status.status === "failed") return status;
      if (Date.now() > deadline) throw new Error("learn job timed out");
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }

  grid(nx: number, ny: number, tau: number): Promise<GridMsg> {
    return request(`${this.base}/api/grid?nx=${nx}&ny=${ny}&tau=${tau}`);
  }
}
