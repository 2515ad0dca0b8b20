"""Platform configuration and scenario files (JSON).

One config document wires the whole platform: lens geometry, coverage
constants, the five radars with their zone assignments, the antenna gain
model, fusion thresholds, tracker knobs, and service endpoints.  Scenario
documents script a run: seed, lens state, noise/clutter levels, and subject
waypoints.  Subject motion should leave the room empty for the first
calibration_n frame periods so baselines are taken on an empty scene.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .coverage import CoverageConfig
from .errors import ConfigError, ScenarioError
from .fmcw import RadarConfig, Scene, Waypoint, ZoneGainModel, step_scene
from .lens import LensConfig

ZONE_BORESIGHTS_DEG = (-56.0, -28.0, 0.0, 28.0, 56.0)

DEFAULT_RADAR_UUIDS = (
    "7f3a1c9e-0d42-4b8a-9a67-5c21e8f0b3d1",
    "2b9e6f04-8a3d-4c17-b5e9-d40a72c681f5",
    "c65d20ba-417f-4e93-8c02-9eb54a7d31c8",
    "91f84d66-3b0a-4f25-a7c3-08e6b19d54f2",
    "e0d73c28-65b1-49ac-bd84-1f92a0c7e643",
)


@dataclass(frozen=True)
class FusionSettings:
    calibration_n: int = 100
    offset_db: float = 0.75
    queue_capacity: int = 64


@dataclass(frozen=True)
class TrackerSettings:
    loss_debounce_frames: int = 1


@dataclass(frozen=True)
class ServiceSettings:
    listen: str = "127.0.0.1:8772"
    log_path: str | None = None


@dataclass(frozen=True)
class RoomExtent:
    x_min: float = -2.5
    x_max: float = 2.5
    y_min: float = 0.0
    y_max: float = 2.5


@dataclass(frozen=True)
class PlatformConfig:
    lens: LensConfig = field(default_factory=LensConfig)
    coverage: CoverageConfig = field(default_factory=CoverageConfig)
    gain: ZoneGainModel = field(default_factory=ZoneGainModel)
    radars: tuple[RadarConfig, ...] = ()
    fusion: FusionSettings = field(default_factory=FusionSettings)
    tracker: TrackerSettings = field(default_factory=TrackerSettings)
    service: ServiceSettings = field(default_factory=ServiceSettings)
    room: RoomExtent = field(default_factory=RoomExtent)

    def __post_init__(self):
        zones = sorted(r.zone for r in self.radars)
        if zones != list(range(1, len(self.radars) + 1)):
            raise ConfigError("radar zone assignments must be a bijection onto 1..n")
        uuids = {r.uuid for r in self.radars}
        if len(uuids) != len(self.radars):
            raise ConfigError("radar uuids must be unique")
        # normalize to zone order so worker order (and log order) is zone order
        object.__setattr__(self, "radars",
                           tuple(sorted(self.radars, key=lambda r: r.zone)))

    @property
    def zone_map(self) -> dict[str, int]:
        return {r.uuid: r.zone for r in self.radars}

    @property
    def frame_rep_time_s(self) -> float:
        return self.radars[0].frame_rep_time_s


def default_radars() -> tuple[RadarConfig, ...]:
    return tuple(
        RadarConfig(uuid=u, zone=i + 1, boresight_deg=ZONE_BORESIGHTS_DEG[i])
        for i, u in enumerate(DEFAULT_RADAR_UUIDS)
    )


def default_config() -> PlatformConfig:
    return PlatformConfig(radars=default_radars())


def _build(cls, data: dict, what: str):
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad {what} section: {exc}") from None


def config_from_dict(doc: dict) -> PlatformConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    radars = doc.get("radars")
    if radars is None:
        radar_objs = default_radars()
    else:
        radar_objs = tuple(_build(RadarConfig, r, "radar") for r in radars)
    return PlatformConfig(
        lens=_build(LensConfig, doc.get("lens", {}), "lens"),
        coverage=_build(CoverageConfig, doc.get("coverage", {}), "coverage"),
        gain=_build(
            ZoneGainModel,
            {**doc.get("gain", {}),
             **({"lens_boost_db": tuple(doc["gain"]["lens_boost_db"])}
                if "lens_boost_db" in doc.get("gain", {}) else {})},
            "gain",
        ),
        radars=radar_objs,
        fusion=_build(FusionSettings, doc.get("fusion", {}), "fusion"),
        tracker=_build(TrackerSettings, doc.get("tracker", {}), "tracker"),
        service=_build(ServiceSettings, doc.get("service", {}), "service"),
        room=_build(RoomExtent, doc.get("room", {}), "room"),
    )


def load_config(path=None) -> PlatformConfig:
    if path is None:
        return default_config()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(doc)


@dataclass(frozen=True)
class Scenario:
    """A scripted run: environment levels plus subject waypoints."""

    seed: int = 0
    lens_on: bool = True
    noise_floor_db: float | None = -60.0
    clutter_db: float | None = -38.0
    clutter_range_m: float = 0.35
    multipath_p: float = 0.02
    reflectivity: float = 1.0
    torso_width_m: float = 0.50
    duration_s: float | None = None
    waypoints: tuple[Waypoint, ...] = ()
    radars: tuple[RadarConfig, ...] | None = None

    def base_scene(self) -> Scene:
        return Scene(
            subject_xy=None,
            torso_width_m=self.torso_width_m,
            reflectivity=self.reflectivity,
            noise_floor_db=self.noise_floor_db,
            multipath_enabled=True,
            multipath_p=self.multipath_p,
            clutter_db=self.clutter_db,
            clutter_range_m=self.clutter_range_m,
        )

    def scene_at(self, t: float) -> Scene:
        return step_scene(self.base_scene(), list(self.waypoints), t)


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    wps = []
    for i, w in enumerate(doc.get("waypoints", [])):
        try:
            wps.append(Waypoint(t=float(w["t"]), x=float(w.get("x", 0.0)),
                                y=float(w.get("y", 0.0)),
                                absent=bool(w.get("absent", False))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad waypoint #{i}: {exc}") from None
    if any(b.t < a.t for a, b in zip(wps, wps[1:])):
        raise ScenarioError("waypoints must be sorted by time")
    radars = doc.get("radars")
    try:
        return Scenario(
            seed=int(doc.get("seed", 0)),
            lens_on=bool(doc.get("lens_on", True)),
            noise_floor_db=doc.get("noise_floor", -60.0),
            clutter_db=doc.get("clutter_db", -38.0),
            clutter_range_m=float(doc.get("clutter_range_m", 0.35)),
            multipath_p=float(doc.get("multipath_p", 0.02)),
            reflectivity=float(doc.get("reflectivity", 1.0)),
            torso_width_m=float(doc.get("torso_width_m", 0.50)),
            duration_s=doc.get("duration_s"),
            waypoints=tuple(wps),
            radars=tuple(_build(RadarConfig, r, "radar") for r in radars)
            if radars is not None else None,
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario: {exc}") from None


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from None
    return scenario_from_dict(doc)
