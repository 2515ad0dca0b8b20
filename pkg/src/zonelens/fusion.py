"""Calibrated per-radar detection workers and the central zone fuser.

Each worker averages its first N frame amplitudes into a baseline (emitting
nothing until then), after which every frame becomes a DetectionMessage:
detect is true iff the amplitude strictly exceeds baseline + offset.
Workers push into bounded per-radar queues (drop-oldest on overflow); the
fuser drains them into per-zone latest-detect state and emits
ZoneSnapshots.  Out-of-order seqs are rejected, gaps are logged, and a zone
goes stale after three missed frame periods.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

from .errors import CalibrationError, ConfigError
from .fmcw import RadarConfig, ZoneGainModel, peak_amplitude, range_profile, synth_frame

DEFAULT_CALIBRATION_N = 100
DEFAULT_OFFSET_DB = 0.75
DEFAULT_QUEUE_CAPACITY = 64
STALE_AFTER_FRAMES = 3


@dataclass(frozen=True)
class Baseline:
    uuid: str
    mean_amplitude_db: float
    n_samples: int


@dataclass(frozen=True)
class DetectionMessage:
    uuid: str
    seq: int
    timestamp: float
    amplitude_db: float
    detect: bool


@dataclass(frozen=True)
class ZoneSnapshot:
    timestamp: float
    states: tuple[bool, ...]
    seqs: tuple[int, ...]
    cold: bool = False


@dataclass(frozen=True)
class Diagnostic:
    timestamp: float
    event: str
    detail: dict


def calibrate(amplitudes, n: int = DEFAULT_CALIBRATION_N, uuid: str = "") -> Baseline:
    """Arithmetic mean of the first n amplitudes (dB domain)."""
    taken = []
    for a in amplitudes:
        taken.append(float(a))
        if len(taken) == n:
            return Baseline(uuid=uuid, mean_amplitude_db=sum(taken) / n, n_samples=n)
    raise CalibrationError(f"stream ended after {len(taken)} of {n} calibration samples")


def detect(amplitude_db: float, baseline: Baseline,
           offset_db: float = DEFAULT_OFFSET_DB) -> bool:
    """Presence iff the amplitude strictly exceeds baseline + offset."""
    return amplitude_db > baseline.mean_amplitude_db + offset_db


class BoundedQueue:
    """Multi-producer/single-consumer FIFO; overflow drops the oldest entry."""

    def __init__(self, capacity: int = DEFAULT_QUEUE_CAPACITY):
        self.capacity = capacity
        self._items = deque()
        self._lock = threading.Lock()
        self.drops = 0
        self.enqueued = 0

    def put(self, item):
        with self._lock:
            if len(self._items) >= self.capacity:
                self._items.popleft()
                self.drops += 1
            self._items.append(item)
            self.enqueued += 1

    def drain(self):
        with self._lock:
            items = list(self._items)
            self._items.clear()
        return items


class RadarWorker:
    """Synthesizes, processes, and classifies one radar's frames.

    `step(t)` produces the frame at time t; during the calibration window it
    accumulates the baseline and returns None, afterwards a DetectionMessage
    with a per-radar monotone seq.
    """

    def __init__(self, radar: RadarConfig, model: ZoneGainModel, scene_at,
                 seed: int = 0, calibration_n: int = DEFAULT_CALIBRATION_N,
                 offset_db: float = DEFAULT_OFFSET_DB):
        self.radar = radar
        self.model = model
        self.scene_at = scene_at
        self.seed = seed
        self.calibration_n = calibration_n
        self.offset_db = offset_db
        self.baseline: Baseline | None = None
        self.seq = 0
        self._calib: list[float] = []

    def measure(self, t: float) -> float:
        frame = synth_frame(self.scene_at(t), self.radar, self.model, t, self.seed)
        profile = range_profile(frame, self.radar)
        window = min(self.radar.max_range_m, profile.usable_range_m)
        amplitude, _ = peak_amplitude(profile, window)
        return amplitude

    def step(self, t: float) -> DetectionMessage | None:
        amplitude = self.measure(t)
        if self.baseline is None:
            self._calib.append(amplitude)
            if len(self._calib) >= self.calibration_n:
                self.baseline = calibrate(self._calib, self.calibration_n,
                                          self.radar.uuid)
            return None
        self.seq += 1
        return DetectionMessage(
            uuid=self.radar.uuid,
            seq=self.seq,
            timestamp=t,
            amplitude_db=amplitude,
            detect=detect(amplitude, self.baseline, self.offset_db),
        )


class FusionCenter:
    """Folds DetectionMessages into latest-per-zone state and snapshots."""

    def __init__(self, zone_map: dict[str, int], frame_rep_time_s: float = 0.05,
                 n_zones: int = 5):
        zones = sorted(zone_map.values())
        if zones != list(range(1, n_zones + 1)):
            raise ConfigError(f"uuid->zone map must cover 1..{n_zones} exactly once")
        self.zone_map = dict(zone_map)
        self.n_zones = n_zones
        self.frame_rep_time_s = frame_rep_time_s
        self._detect = [False] * n_zones
        self._seq = [0] * n_zones
        self._seen_t = [None] * n_zones
        self._max_t = 0.0
        self.consumed = 0
        self.gap_events = 0
        self.any_message = False

    def ingest(self, msg: DetectionMessage) -> list[Diagnostic]:
        diags = []
        zone = self.zone_map.get(msg.uuid)
        if zone is None:
            return [Diagnostic(msg.timestamp, "unmapped_uuid", {"uuid": msg.uuid})]
        i = zone - 1
        if msg.seq <= self._seq[i] and self._seq[i] > 0:
            return [Diagnostic(msg.timestamp, "stale_seq",
                               {"uuid": msg.uuid, "seq": msg.seq,
                                "latest": self._seq[i]})]
        if self._seq[i] > 0 and msg.seq > self._seq[i] + 1:
            self.gap_events += 1
            diags.append(Diagnostic(msg.timestamp, "seq_gap",
                                    {"uuid": msg.uuid, "from": self._seq[i],
                                     "to": msg.seq}))
        self._seq[i] = msg.seq
        self._detect[i] = msg.detect
        self._seen_t[i] = msg.timestamp
        self._max_t = max(self._max_t, msg.timestamp)
        self.consumed += 1
        self.any_message = True
        return diags

    def snapshot(self) -> ZoneSnapshot:
        return ZoneSnapshot(
            timestamp=self._max_t,
            states=tuple(self._detect),
            seqs=tuple(self._seq),
            cold=not self.any_message,
        )

    def stale_zones(self, now: float) -> list[int]:
        """Zones silent for more than STALE_AFTER_FRAMES frame periods."""
        limit = STALE_AFTER_FRAMES * self.frame_rep_time_s
        out = []
        for i in range(self.n_zones):
            t = self._seen_t[i]
            if t is not None and now - t > limit:
                out.append(i + 1)
        return out
