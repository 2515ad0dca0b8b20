// Dashboard view state: a pure fold over received messages.
//
// The dashboard holds no detection logic of its own; everything rendered
// (sector colors, banner, feed, heat) is derivable from the message stream
// alone, so replaying a logged stream reproduces the view exactly.

import type { ConfigMsg, ServerMsg } from "./messages.js";

export type ZoneVisual = "present" | "absent" | "stale";

export interface FeedLine {
  t: number;
  text: string;
}

export interface ViewState {
  config: ConfigMsg | null;
  zones: boolean[];
  stale: number[];
  lastSnapshotT: number | null;
  alert: { zone: number; t: number } | null;
  heat: number;
  drops: number;
  feed: FeedLine[];
  connected: boolean;
}

export const FEED_LIMIT = 8;

export function initialState(): ViewState {
  return {
    config: null,
    zones: [false, false, false, false, false],
    stale: [],
    lastSnapshotT: null,
    alert: null,
    heat: 0,
    drops: 0,
    feed: [],
    connected: false,
  };
}

function pushFeed(state: ViewState, t: number, text: string): void {
  state.feed.push({ t, text });
  if (state.feed.length > FEED_LIMIT) state.feed.splice(0, state.feed.length - FEED_LIMIT);
}

/** Fold one message into the view state (mutates and returns it). */
export function applyMessage(state: ViewState, msg: ServerMsg): ViewState {
  switch (msg.kind) {
    case "config":
      state.config = msg;
      state.zones = new Array(msg.n_zones).fill(false);
      break;
    case "snapshot":
      state.zones = msg.zones.slice();
      state.lastSnapshotT = msg.t;
      state.heat = msg.zones.filter(Boolean).length / msg.zones.length;
      break;
    case "status":
      state.stale = msg.stale.slice();
      state.drops = msg.drops;
      break;
    case "alert":
      state.alert = { zone: msg.zone, t: msg.t };
      pushFeed(state, msg.t, `ALERT: signal lost in zone ${msg.zone}`);
      break;
    case "tracker":
      if (msg.event === "TrackStarted") state.alert = null;
      pushFeed(state, msg.t, `${msg.event} (zone ${msg.zone})`);
      break;
    case "detection":
    case "diagnostics":
      break;
  }
  return state;
}

/** Color class of one 1-based zone: stale beats present/absent. */
export function zoneVisual(state: ViewState, zone: number): ZoneVisual {
  if (!state.connected || state.stale.includes(zone)) return "stale";
  return state.zones[zone - 1] ? "present" : "absent";
}

/** Replay a recorded stream and return the per-snapshot visuals. */
export function replayStream(
  lines: ServerMsg[],
): { state: ViewState; frames: ZoneVisual[][] } {
  const state = initialState();
  state.connected = true;
  const frames: ZoneVisual[][] = [];
  for (const msg of lines) {
    applyMessage(state, msg);
    if (msg.kind === "snapshot") {
      const n = state.config?.n_zones ?? state.zones.length;
      frames.push(
        Array.from({ length: n }, (_, i) => zoneVisual(state, i + 1)),
      );
    }
  }
  return { state, frames };
}
