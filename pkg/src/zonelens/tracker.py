"""Four-stage fall-detection state machine over zone snapshots.

Idle scanning locks onto the first occupied zone; while that zone stays
occupied the tracker just refreshes.  On disappearance a per-zone timer
starts (20 s in the edge zones 1 and 5, 10 s in the middle) during which
only the adjacent zones (X-1, X, X+1) can resume tracking; if the timer
expires first an alert fires.  A detection anywhere after an alert restarts
the cycle.  The machine is a pure function of the snapshot sequence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import DomainError
from .fusion import ZoneSnapshot

EDGE_TIMEOUT_S = 20.0
MIDDLE_TIMEOUT_S = 10.0
N_ZONES = 5


class Stage(enum.Enum):
    INITIAL_DETECTION = "InitialDetection"
    MONITORING = "Monitoring"
    FALLBACK = "Fallback"
    ALERTED = "Alerted"


class EventKind(enum.Enum):
    TRACK_STARTED = "TrackStarted"
    ZONE_HANDOFF = "ZoneHandoff"
    FALLBACK_ENTERED = "FallbackEntered"
    ALERT_RAISED = "AlertRaised"
    TRACK_RESUMED = "TrackResumed"


@dataclass(frozen=True)
class TrackerEvent:
    kind: EventKind
    zone: int
    timestamp: float


@dataclass(frozen=True)
class TrackerDiagnostic:
    event: str
    timestamp: float
    detail: dict


@dataclass(frozen=True)
class TrackerState:
    stage: Stage = Stage.INITIAL_DETECTION
    tracked_zone: int | None = None
    fallback_deadline: float | None = None
    last_seen: float | None = None
    miss_count: int = 0
    last_snapshot_t: float | None = None


def timeout_for(zone: int) -> float:
    """Fallback window length: 20 s for zones 1 and 5, 10 s for 2-4."""
    if not 1 <= zone <= N_ZONES:
        raise DomainError(f"zone {zone} outside 1..{N_ZONES}")
    return EDGE_TIMEOUT_S if zone in (1, N_ZONES) else MIDDLE_TIMEOUT_S


def adjacent(zone: int) -> set[int]:
    """Zones eligible for reappearance: {X-1, X, X+1} clamped to 1..5."""
    if not 1 <= zone <= N_ZONES:
        raise DomainError(f"zone {zone} outside 1..{N_ZONES}")
    return {z for z in (zone - 1, zone, zone + 1) if 1 <= z <= N_ZONES}


def _first_true(snapshot: ZoneSnapshot) -> int | None:
    for i, present in enumerate(snapshot.states):
        if present:
            return i + 1
    return None


def step(state: TrackerState, snapshot: ZoneSnapshot, now: float | None = None,
         loss_debounce_frames: int = 1):
    """Advance the machine by one snapshot.

    Returns (new_state, events, diagnostics).  Out-of-order snapshots are
    rejected with a diagnostic and leave the state untouched.  Disappearance
    must persist for loss_debounce_frames consecutive snapshots before the
    fallback timer starts.
    """
    if now is None:
        now = snapshot.timestamp
    events: list[TrackerEvent] = []
    diags: list[TrackerDiagnostic] = []

    if state.last_snapshot_t is not None and now < state.last_snapshot_t:
        return state, events, [TrackerDiagnostic(
            "out_of_order_snapshot", now,
            {"last": state.last_snapshot_t, "got": now})]
    state = replace(state, last_snapshot_t=now)

    if state.stage is Stage.INITIAL_DETECTION:
        zone = _first_true(snapshot)
        if zone is not None:
            events.append(TrackerEvent(EventKind.TRACK_STARTED, zone, now))
            state = replace(state, stage=Stage.MONITORING, tracked_zone=zone,
                            last_seen=now, miss_count=0)
        return state, events, diags

    if state.stage is Stage.MONITORING:
        zone = state.tracked_zone
        if snapshot.states[zone - 1]:
            return replace(state, last_seen=now, miss_count=0), events, diags
        misses = state.miss_count + 1
        if misses < loss_debounce_frames:
            return replace(state, miss_count=misses), events, diags
        deadline = now + timeout_for(zone)
        events.append(TrackerEvent(EventKind.FALLBACK_ENTERED, zone, now))
        return (replace(state, stage=Stage.FALLBACK, fallback_deadline=deadline,
                        miss_count=0),
                events, diags)

    if state.stage is Stage.FALLBACK:
        zone = state.tracked_zone
        if now < state.fallback_deadline:
            candidates = adjacent(zone)
            # resume on the lost zone first, then its neighbors in index order
            for z in [zone] + sorted(candidates - {zone}):
                if snapshot.states[z - 1]:
                    kind = (EventKind.TRACK_RESUMED if z == zone
                            else EventKind.ZONE_HANDOFF)
                    events.append(TrackerEvent(kind, z, now))
                    return (replace(state, stage=Stage.MONITORING, tracked_zone=z,
                                    fallback_deadline=None, last_seen=now),
                            events, diags)
            far = [z + 1 for z, on in enumerate(snapshot.states)
                   if on and (z + 1) not in candidates]
            if far:
                diags.append(TrackerDiagnostic(
                    "non_adjacent_detection", now,
                    {"tracked": zone, "zones": far}))
            return state, events, diags
        events.append(TrackerEvent(EventKind.ALERT_RAISED, zone, now))
        return (replace(state, stage=Stage.ALERTED, fallback_deadline=None),
                events, diags)

    # Stage.ALERTED: the alert stays logged; any detection restarts tracking
    zone = _first_true(snapshot)
    if zone is not None:
        events.append(TrackerEvent(EventKind.TRACK_STARTED, zone, now))
        state = replace(state, stage=Stage.MONITORING, tracked_zone=zone,
                        last_seen=now, miss_count=0)
    return state, events, diags
