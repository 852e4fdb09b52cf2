// Frame pacing: strictly increasing seq, at most one unacknowledged frame.
// Transport is injected so tests can drive the pacer without a socket.

import type { FrameMessage, ServerMessage } from "./protocol.js";

export interface Transport {
  send(text: string): void;
}

export interface FramePayload {
  width: number;
  height: number;
  pixels: string;
}

export class FramePacer {
  private seq = 0;
  private awaiting: number | null = null;

  constructor(private transport: Transport) {}

  get lastSeq(): number {
    return this.seq;
  }

  get inFlight(): boolean {
    return this.awaiting !== null;
  }

  /** Send a frame unless one is still unacknowledged. Returns the seq used,
   * or null if the frame was dropped to keep only one in flight. */
  offer(payload: FramePayload): number | null {
    if (this.awaiting !== null) return null;
    this.seq += 1;
    this.awaiting = this.seq;
    const msg: FrameMessage = { type: "frame", seq: this.seq, ...payload };
    this.transport.send(JSON.stringify(msg));
    return this.seq;
  }

  /** Feed every server message through here; the matching seq echo releases
   * the in-flight slot. */
  acknowledge(msg: ServerMessage): void {
    if (msg.seq !== null && msg.seq === this.awaiting) {
      this.awaiting = null;
    }
  }

  /** New connection, new session: seq restarts from scratch. */
  reset(transport: Transport): void {
    this.transport = transport;
    this.seq = 0;
    this.awaiting = null;
  }
}
