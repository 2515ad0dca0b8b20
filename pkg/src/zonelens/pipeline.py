"""Run orchestration: virtual-clock runs, live threaded runs, dump, replay.

A run wires five RadarWorkers through bounded queues into the FusionCenter
and the fall tracker, emitting a single chronological record stream
(detection / snapshot / tracker / alert / diagnostics).  The virtual mode
steps everything round-robin on a frame-period grid and is bit-deterministic;
the live mode paces real threads against the wall clock for serving a
dashboard, with steering messages folded into the scenario stepper at frame
boundaries.  `replay_log` rebuilds fusion + tracker records from logged
detections; `process_frame_dump` does the same from dumped raw frames.
"""

from __future__ import annotations

import io
import json
import threading
import time
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import tracker as trk
from .config import PlatformConfig, Scenario
from .errors import ScenarioError
from .fmcw import Frame, peak_amplitude, range_profile
from .fusion import BoundedQueue, FusionCenter, RadarWorker
from .tracker import EventKind, TrackerState


def dumps_record(rec: dict) -> str:
    """Canonical one-line JSON; identical inputs give identical bytes."""
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


class EventLog:
    """Collects records in order; optionally mirrors them to a JSONL file.

    A failing sink never stops the pipeline: the first write error flips the
    log into memory-only mode and surfaces a diagnostics record.
    """

    def __init__(self, path=None, keep: bool = True):
        self.records: list[dict] = []
        self.keep = keep
        self.sink_down = False
        self._fh: io.TextIOBase | None = None
        if path is not None:
            self._fh = open(path, "w")

    def append(self, rec: dict):
        if self.keep:
            self.records.append(rec)
        if self._fh is not None and not self.sink_down:
            try:
                self._fh.write(dumps_record(rec) + "\n")
                self._fh.flush()
            except OSError:
                self.sink_down = True
                fail = {"kind": "diagnostics", "event": "persistent_sink_down",
                        "t": rec.get("t", 0.0), "detail": {}}
                if self.keep:
                    self.records.append(fail)

    def close(self):
        if self._fh is not None:
            try:
                self._fh.close()
            except OSError:
                pass
            self._fh = None


def detection_record(msg) -> dict:
    return {"kind": "detection", "uuid": msg.uuid, "seq": msg.seq,
            "t": msg.timestamp, "amplitude_db": msg.amplitude_db,
            "detect": msg.detect}


def snapshot_record(snap) -> dict:
    return {"kind": "snapshot", "t": snap.timestamp,
            "zones": list(snap.states), "seqs": list(snap.seqs)}


def tracker_record(ev) -> dict:
    if ev.kind is EventKind.ALERT_RAISED:
        return {"kind": "alert", "zone": ev.zone, "t": ev.timestamp}
    return {"kind": "tracker", "event": ev.kind.value, "zone": ev.zone,
            "t": ev.timestamp}


def diagnostic_record(d) -> dict:
    # fusion Diagnostic and TrackerDiagnostic share the same shape
    return {"kind": "diagnostics", "event": d.event, "t": d.timestamp,
            "detail": d.detail}


@dataclass
class RunCounters:
    messages: int = 0
    drops: int = 0
    enqueued: int = 0
    gap_events: int = 0
    snapshots: int = 0
    alerts: int = 0


class SceneDirector:
    """Scenario playback plus live steering overrides.

    Steering messages queue up and are applied in arrival order at the next
    frame boundary; once steered, the override supersedes waypoint playback
    for the rest of the run.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._pending = deque()
        self._override = None  # (x, y, absent)
        self._lock = threading.Lock()

    def steer(self, x: float, y: float, absent: bool = False):
        with self._lock:
            self._pending.append((float(x), float(y), bool(absent)))

    def scene_at(self, t: float):
        with self._lock:
            while self._pending:
                self._override = self._pending.popleft()
            override = self._override
        scene = self.scenario.scene_at(t)
        if override is not None:
            x, y, absent = override
            scene = replace(scene, subject_xy=None if absent else (x, y))
        return scene


def build_workers(platform: PlatformConfig, scenario: Scenario, scene_at):
    radars = scenario.radars if scenario.radars is not None else platform.radars
    model = replace(platform.gain, lens_on=scenario.lens_on)
    return [
        RadarWorker(r, model, scene_at, seed=scenario.seed,
                    calibration_n=platform.fusion.calibration_n,
                    offset_db=platform.fusion.offset_db)
        for r in radars
    ], radars


def _consume_tick(state: TrackerState, fuser: FusionCenter, msgs, log: EventLog,
                  counters: RunCounters, loss_debounce: int, broadcast=None):
    """Shared per-tick fold: messages -> snapshot -> tracker -> records."""
    emitted = []
    for msg in msgs:
        rec = detection_record(msg)
        emitted.append(rec)
        for d in fuser.ingest(msg):
            emitted.append(diagnostic_record(d))
        counters.messages += 1
    if msgs and fuser.any_message:
        snap = fuser.snapshot()
        emitted.append(snapshot_record(snap))
        counters.snapshots += 1
        state, events, diags = trk.step(state, snap,
                                        loss_debounce_frames=loss_debounce)
        for ev in events:
            emitted.append(tracker_record(ev))
            if ev.kind is EventKind.ALERT_RAISED:
                counters.alerts += 1
        for d in diags:
            emitted.append({"kind": "diagnostics", "event": d.event,
                            "t": d.timestamp, "detail": d.detail})
    for rec in emitted:
        log.append(rec)
        if broadcast is not None:
            broadcast(rec)
    return state


@dataclass
class RunResult:
    log: EventLog
    counters: RunCounters
    tracker_state: TrackerState


def run_virtual(platform: PlatformConfig, scenario: Scenario,
                duration_s: float, log_path=None) -> RunResult:
    """Deterministic single-threaded run on a virtual frame clock.

    ``duration_s`` covers the whole timeline including the calibration
    window (calibration_n frame periods at the head).
    """
    director = SceneDirector(scenario)
    workers, radars = build_workers(platform, scenario, director.scene_at)
    frep = radars[0].frame_rep_time_s
    queues = {r.uuid: BoundedQueue(platform.fusion.queue_capacity) for r in radars}
    fuser = FusionCenter({r.uuid: r.zone for r in radars},
                         frame_rep_time_s=frep, n_zones=len(radars))
    state = TrackerState()
    log = EventLog(log_path)
    counters = RunCounters()

    ticks = int(round(duration_s / frep))
    for k in range(ticks):
        t = k * frep
        for w in workers:
            msg = w.step(t)
            if msg is not None:
                queues[w.radar.uuid].put(msg)
        msgs = [m for w in workers for m in queues[w.radar.uuid].drain()]
        state = _consume_tick(state, fuser, msgs, log, counters,
                              platform.tracker.loss_debounce_frames)
    counters.drops = sum(q.drops for q in queues.values())
    counters.enqueued = sum(q.enqueued for q in queues.values())
    counters.gap_events = fuser.gap_events
    log.close()
    return RunResult(log=log, counters=counters, tracker_state=state)


class LivePipeline:
    """Threaded real-time run: one producer thread per radar, one consumer.

    Producers pace the wall clock at the frame period and synthesize frames
    at their virtual tick time; message timestamps come from one monotonic
    clock at enqueue.  The consumer drains queues at the frame period,
    folds snapshots and tracker steps, and fans records out to the log and
    any broadcast callback.  Steering goes through the SceneDirector.
    """

    def __init__(self, platform: PlatformConfig, scenario: Scenario,
                 log_path=None, broadcast=None):
        self.platform = platform
        self.scenario = scenario
        self.director = SceneDirector(scenario)
        self.workers, self.radars = build_workers(platform, scenario,
                                                  self.director.scene_at)
        self.frep = self.radars[0].frame_rep_time_s
        self.queues = {r.uuid: BoundedQueue(platform.fusion.queue_capacity)
                       for r in self.radars}
        self.fuser = FusionCenter({r.uuid: r.zone for r in self.radars},
                                  frame_rep_time_s=self.frep,
                                  n_zones=len(self.radars))
        self.state = TrackerState()
        self.log = EventLog(log_path)
        self.counters = RunCounters()
        self.broadcast = broadcast
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._t0 = None
        self._lat_samples: list[float] = []

    def now(self) -> float:
        return time.monotonic() - self._t0

    def steer(self, x: float, y: float, absent: bool = False):
        self.director.steer(x, y, absent)

    def _producer(self, worker: RadarWorker):
        k = 0
        while not self._stop.is_set():
            target = self._t0 + k * self.frep
            delay = target - time.monotonic()
            if delay > 0:
                if self._stop.wait(delay):
                    return
            msg = worker.step(k * self.frep)
            if msg is not None:
                stamp = self.now()
                msg = replace(msg, timestamp=stamp)
                self.queues[worker.radar.uuid].put(msg)
            k += 1

    def _consumer(self):
        last_status = 0.0
        while not self._stop.is_set():
            # wake faster than the frame period so frame-to-snapshot latency
            # stays well under one period regardless of thread phase
            self._stop.wait(self.frep / 5.0)
            msgs = [m for r in self.radars for m in self.queues[r.uuid].drain()]
            now = self.now()
            for m in msgs:
                self._lat_samples.append(now - m.timestamp)
            self.state = _consume_tick(
                self.state, self.fuser, msgs, self.log, self.counters,
                self.platform.tracker.loss_debounce_frames, self.broadcast)
            if now - last_status >= 1.0:
                last_status = now
                rec = {"kind": "status", "t": now,
                       "drops": sum(q.drops for q in self.queues.values()),
                       "stale": self.fuser.stale_zones(now)}
                self.log.append(rec)
                if self.broadcast is not None:
                    self.broadcast(rec)

    def start(self):
        self._t0 = time.monotonic()
        for w in self.workers:
            th = threading.Thread(target=self._producer, args=(w,), daemon=True)
            th.start()
            self._threads.append(th)
        th = threading.Thread(target=self._consumer, daemon=True)
        th.start()
        self._threads.append(th)

    def stop(self):
        self._stop.set()
        for th in self._threads:
            th.join(timeout=2.0)
        self.counters.drops = sum(q.drops for q in self.queues.values())
        self.counters.enqueued = sum(q.enqueued for q in self.queues.values())
        self.counters.gap_events = self.fuser.gap_events
        self.log.close()

    def run_for(self, seconds: float):
        self.start()
        try:
            time.sleep(seconds)
        finally:
            self.stop()

    def median_latency_s(self) -> float:
        if not self._lat_samples:
            return float("nan")
        return float(np.median(self._lat_samples))


def replay_log(records) -> list[dict]:
    """Rebuild snapshot/tracker/alert records from logged detections.

    Detections are grouped by timestamp in file order, mirroring the
    per-tick fold of a virtual run; on identical inputs the output records
    are byte-identical to the original run's.
    """
    out: list[dict] = []
    zones_by_uuid: dict[str, int] = {}
    state = TrackerState()

    groups: list[list[dict]] = []
    for rec in records:
        if rec.get("kind") != "detection":
            continue
        if rec["uuid"] not in zones_by_uuid:
            zones_by_uuid[rec["uuid"]] = len(zones_by_uuid) + 1
        if groups and groups[-1][0]["t"] == rec["t"]:
            groups[-1].append(rec)
        else:
            groups.append([rec])
    if not zones_by_uuid:
        return out

    # workers run in zone order, so first appearance order recovers zones
    fuser = FusionCenter(zones_by_uuid, n_zones=len(zones_by_uuid))

    from .fusion import DetectionMessage

    for group in groups:
        msgs = [DetectionMessage(uuid=r["uuid"], seq=r["seq"], timestamp=r["t"],
                                 amplitude_db=r["amplitude_db"],
                                 detect=r["detect"]) for r in group]
        for m in msgs:
            out.append(detection_record(m))
            for d in fuser.ingest(m):
                out.append(diagnostic_record(d))
        snap = fuser.snapshot()
        out.append(snapshot_record(snap))
        state, events, diags = trk.step(state, snap)
        for ev in events:
            out.append(tracker_record(ev))
        for d in diags:
            out.append({"kind": "diagnostics", "event": d.event,
                        "t": d.timestamp, "detail": d.detail})
    return out


def read_log(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def dump_frames(platform: PlatformConfig, scenario: Scenario,
                duration_s: float, path) -> dict:
    """Synthesize the full frame stream offline and save it as an NPZ archive.

    One samples array of shape (ticks, chirps, samples) and one timestamp
    vector per radar uuid, plus a JSON header with the scenario document.
    """
    director = SceneDirector(scenario)
    workers, radars = build_workers(platform, scenario, director.scene_at)
    frep = radars[0].frame_rep_time_s
    ticks = int(round(duration_s / frep))
    arrays = {}
    times = np.array([k * frep for k in range(ticks)])
    from .fmcw import synth_frame

    for w in workers:
        r = w.radar
        stack = np.empty((ticks, r.chirps_per_frame, r.samples_per_chirp))
        for k in range(ticks):
            scene = director.scene_at(times[k])
            stack[k] = synth_frame(scene, r, w.model, times[k], scenario.seed).samples
        arrays[f"samples::{r.uuid}"] = stack
        arrays[f"t::{r.uuid}"] = times
    meta = {
        "duration_s": duration_s,
        "frame_rep_time_s": frep,
        "uuid_order": [r.uuid for r in radars],
        "zones": {r.uuid: r.zone for r in radars},
    }
    # write through a handle so numpy honors the exact path given
    with open(path, "wb") as fh:
        np.savez_compressed(fh, meta=json.dumps(meta), **arrays)
    return meta


def process_frame_dump(path, platform: PlatformConfig) -> list[dict]:
    """Run fusion + tracking over a dumped frame stream (offline replay)."""
    with np.load(path, allow_pickle=False) as npz:
        meta = json.loads(str(npz["meta"]))
        uuids = meta["uuid_order"]
        zones = meta["zones"]
        stacks = {u: npz[f"samples::{u}"] for u in uuids}
        times = {u: npz[f"t::{u}"] for u in uuids}

    radars = {r.uuid: r for r in platform.radars}
    for u in uuids:
        if u not in radars:
            raise ScenarioError(f"frame dump radar {u} not present in config")

    log = EventLog(None)
    counters = RunCounters()
    fuser = FusionCenter({u: zones[u] for u in uuids}, n_zones=len(uuids))
    state = TrackerState()
    calib: dict[str, list] = {u: [] for u in uuids}
    baselines: dict[str, float] = {}
    seqs: dict[str, int] = {u: 0 for u in uuids}
    n_cal = platform.fusion.calibration_n
    offset = platform.fusion.offset_db

    from .fusion import DetectionMessage

    n_ticks = len(times[uuids[0]])
    for k in range(n_ticks):
        msgs = []
        for u in uuids:
            r = radars[u]
            frame = Frame(uuid=u, timestamp=float(times[u][k]),
                          samples=stacks[u][k])
            profile = range_profile(frame, r)
            amp, _ = peak_amplitude(profile,
                                    min(r.max_range_m, profile.usable_range_m))
            if u not in baselines:
                calib[u].append(amp)
                if len(calib[u]) >= n_cal:
                    baselines[u] = sum(calib[u]) / n_cal
                continue
            seqs[u] += 1
            msgs.append(DetectionMessage(
                uuid=u, seq=seqs[u], timestamp=float(times[u][k]),
                amplitude_db=amp, detect=amp > baselines[u] + offset))
        state = _consume_tick(state, fuser, msgs, log, counters,
                              platform.tracker.loss_debounce_frames)
    return log.records
