// WebSocket teleoperation client. The server simulates and filters; this
// side only streams the reference control and renders what comes back.
// The WebSocket constructor is injectable so node-side tests can drive the
// same client with the "ws" package.

import type { ClientFrame, ServerFrame, TickFrame } from "./types";

export const SUBPROTOCOL = "safeshield-teleop-v1";

type WsLike = {
  readyState: number;
  send(data: string): void;
  close(): void;
  addEventListener(type: string, fn: (ev: any) => void): void;
};

type WsCtor = new (url: string, protocols?: string | string[]) => WsLike;

export interface TeleopHandlers {
  onTick?: (frame: TickFrame) => void;
  onError?: (message: string) => void;
  onClose?: () => void;
  onOpen?: () => void;
}

export class TeleopClient {
  private ws: WsLike;
  private open = false;

  constructor(
    url: string,
    handlers: TeleopHandlers = {},
    WebSocketImpl: WsCtor = (globalThis as any).WebSocket,
  ) {
    if (!WebSocketImpl) throw new Error("no WebSocket implementation available");
    this.ws = new WebSocketImpl(url, [SUBPROTOCOL]);
    this.ws.addEventListener("open", () => {
      this.open = true;
      handlers.onOpen?.();
    });
    this.ws.addEventListener("close", () => {
      this.open = false;
      handlers.onClose?.();
    });
    this.ws.addEventListener("message", (ev: MessageEvent) => {
      let frame: ServerFrame;
      try {
        frame = JSON.parse(typeof ev.data === "string" ? ev.data : ev.data.toString());
      } catch {
        handlers.onError?.("unparseable frame from server");
        return;
      }
      if (frame.type === "tick") handlers.onTick?.(frame);
      else if (frame.type === "error") handlers.onError?.(frame.error);
    });
  }

  get connected(): boolean {
    return this.open;
  }

  send(frame: ClientFrame): void {
    if (this.open && this.ws.readyState === 1) {
      this.ws.send(JSON.stringify(frame));
    }
  }

  setReference(ux: number, uy: number): void {
    this.send({ u_ref: [ux, uy] });
  }

  setTau(tau: number): void {
    this.send({ tau });
  }

  reset(): void {
    this.send({ reset: true, u_ref: [0, 0] });
  }

  close(): void {
    this.ws.close();
  }
}
