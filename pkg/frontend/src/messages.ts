// Wire messages shared with the backend (see src/zonelens/schemas/protocol.schema.json).

export interface RoomExtent {
  x_min: number;
  x_max: number;
  y_min: number;
  y_max: number;
}

export interface ConfigMsg {
  kind: "config";
  n_zones: number;
  zones: number[];
  boresights_deg: number[];
  frame_rep_time: number;
  lens_on: boolean;
  room: RoomExtent;
}

export interface DetectionMsg {
  kind: "detection";
  uuid: string;
  seq?: number;
  t: number;
  amplitude_db: number;
  detect: boolean;
}

export interface SnapshotMsg {
  kind: "snapshot";
  t: number;
  zones: boolean[];
  seqs?: number[];
}

export interface TrackerMsg {
  kind: "tracker";
  event: "TrackStarted" | "ZoneHandoff" | "FallbackEntered" | "TrackResumed";
  zone: number;
  t: number;
}

export interface AlertMsg {
  kind: "alert";
  zone: number;
  t: number;
}

export interface StatusMsg {
  kind: "status";
  t?: number;
  drops: number;
  stale: number[];
}

export interface DiagnosticsMsg {
  kind: "diagnostics";
  event: string;
  t: number;
  detail?: Record<string, unknown>;
}

export type ServerMsg =
  | ConfigMsg
  | DetectionMsg
  | SnapshotMsg
  | TrackerMsg
  | AlertMsg
  | StatusMsg
  | DiagnosticsMsg;

export interface SubjectMsg {
  kind: "subject";
  x: number;
  y: number;
  absent: boolean;
}

const KINDS = new Set([
  "config", "detection", "snapshot", "tracker", "alert", "status",
  "diagnostics",
]);

/** Parse one stream line; unknown or malformed messages return null. */
export function parseServerMsg(line: string): ServerMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const kind = (obj as { kind?: unknown }).kind;
  if (typeof kind !== "string" || !KINDS.has(kind)) return null;
  return obj as ServerMsg;
}
