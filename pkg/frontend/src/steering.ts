// Pointer steering: maps canvas drags to floor-plane subject messages,
// rate-limited to the backend frame rate.

import type { ConfigMsg, SubjectMsg } from "./messages.js";

export interface FloorMapping {
  /** Canvas pixel -> floor meters, honoring the served room extent. */
  toFloor(px: number, py: number, width: number, height: number): { x: number; y: number };
}

export function roomMapping(config: ConfigMsg): FloorMapping {
  const room = config.room;
  return {
    toFloor(px, py, width, height) {
      const fx = Math.min(Math.max(px / width, 0), 1);
      const fy = Math.min(Math.max(py / height, 0), 1);
      return {
        x: room.x_min + fx * (room.x_max - room.x_min),
        // canvas y grows downward; the array sits at the bottom edge
        y: room.y_min + (1 - fy) * (room.y_max - room.y_min),
      };
    },
  };
}

export class SteeringController {
  private lastSent = -Infinity;
  private pending: SubjectMsg | null = null;
  private position: { x: number; y: number } = { x: 0, y: 1 };
  absent = false;

  constructor(
    private send: (msg: SubjectMsg) => void,
    private minIntervalS: number,
    private now: () => number = () => Date.now() / 1000,
  ) {}

  /** Point the subject somewhere; sends at most one message per frame period. */
  moveTo(x: number, y: number): void {
    this.position = { x, y };
    this.enqueue({ kind: "subject", x, y, absent: this.absent });
  }

  /** Script a disappearance (or reappearance) at the current position. */
  setAbsent(absent: boolean): void {
    this.absent = absent;
    this.enqueue({
      kind: "subject",
      x: this.position.x,
      y: this.position.y,
      absent,
    });
  }

  private enqueue(msg: SubjectMsg): void {
    const t = this.now();
    if (t - this.lastSent >= this.minIntervalS) {
      this.lastSent = t;
      this.pending = null;
      this.send(msg);
    } else {
      this.pending = msg;
    }
  }

  /** Flush a coalesced trailing message once the rate window reopens. */
  tick(): void {
    if (this.pending !== null && this.now() - this.lastSent >= this.minIntervalS) {
      this.lastSent = this.now();
      this.send(this.pending);
      this.pending = null;
    }
  }
}
