// WebSocket transport with exponential-backoff reconnect.

import { parseServerMsg, type ServerMsg, type SubjectMsg } from "./messages.js";

export class StreamSocket {
  private ws: WebSocket | null = null;
  private attempts = 0;
  private closed = false;

  constructor(
    private url: string,
    private onMsg: (msg: ServerMsg) => void,
    private onState: (connected: boolean) => void,
  ) {
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.onState(true);
    };
    ws.onmessage = (ev) => {
      const msg = parseServerMsg(String(ev.data));
      if (msg !== null) this.onMsg(msg);
    };
    ws.onclose = () => {
      this.onState(false);
      const delay = Math.min(500 * 2 ** this.attempts, 10_000);
      this.attempts += 1;
      setTimeout(() => this.connect(), delay);
    };
    ws.onerror = () => ws.close();
  }

  send(msg: SubjectMsg): void {
    if (this.ws !== null && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
