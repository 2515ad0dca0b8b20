"""FMCW radar simulation for the five-zone array.

Each radar is a 1TX/1RX sawtooth-chirp unit; a subject at range R returns a
beat tone at f_b = 2 R S / c (S = bandwidth / chirp duration) whose level
follows a dB link budget: IF gain + two passes of the zone antenna lobe +
reflectivity - 40 log10(R).  The antenna lobe is a Gaussian main beam with
a -20 dB shelf; with the lens on it is narrow and boosted per zone, with
the lens off it is wide and unboosted, and occasional multipath "ghost"
tones appear just above the noise to model the degraded configuration.

Because the subject is an extended torso rather than a point, the lobe is
evaluated at the nearest illuminated torso edge: the angular half-width
subtended by the torso shrinks the effective off-boresight angle.  That is
what closes the coverage gap between narrow beams at short range.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import SPEED_OF_LIGHT_M_S
from .coverage import torso_half_angle
from .errors import ConfigError, ContractError, ScenarioError

REF_LEVEL_DB = -90.0  # arbitrary full-scale reference; only differences matter
MIN_RANGE_M = 0.05  # clamp for the spreading law near the array
SIDELOBE_SHELF_DB = 20.0  # lobe floor below peak


@dataclass(frozen=True)
class RadarConfig:
    """One radar's chirp parameters and placement."""

    uuid: str
    zone: int
    boresight_deg: float
    frame_rep_time_s: float = 0.05
    chirp_rep_time_s: float = 0.0007
    chirps_per_frame: int = 16
    f_start_ghz: float = 58.0
    f_end_ghz: float = 63.0
    sample_rate_hz: float = 2.33e6
    samples_per_chirp: int = 128
    if_gain_db: float = 23.0
    max_range_m: float = 2.0

    def __post_init__(self):
        if self.f_end_ghz <= self.f_start_ghz:
            raise ConfigError("chirp must sweep upward (f_end > f_start)")
        n = self.samples_per_chirp
        if n < 2 or n & (n - 1):
            raise ConfigError("samples_per_chirp must be a power of two")
        if self.chirp_duration_s > self.chirp_rep_time_s:
            raise ConfigError("chirp duration exceeds the chirp repetition time")
        if not 1 <= self.zone:
            raise ConfigError("zone index must be >= 1")

    @property
    def bandwidth_hz(self) -> float:
        return (self.f_end_ghz - self.f_start_ghz) * 1e9

    @property
    def chirp_duration_s(self) -> float:
        return self.samples_per_chirp / self.sample_rate_hz

    @property
    def slope_hz_per_s(self) -> float:
        return self.bandwidth_hz / self.chirp_duration_s

    @property
    def range_per_bin_m(self) -> float:
        return (SPEED_OF_LIGHT_M_S * self.sample_rate_hz
                / (2.0 * self.slope_hz_per_s * self.samples_per_chirp))

    @property
    def usable_range_m(self) -> float:
        return (self.samples_per_chirp // 2) * self.range_per_bin_m

    def beat_frequency_hz(self, range_m: float) -> float:
        return 2.0 * range_m * self.slope_hz_per_s / SPEED_OF_LIGHT_M_S


@dataclass(frozen=True)
class ZoneGainModel:
    """Per-zone antenna lobe parameters, with and without the lens."""

    base_gain_db: float = 10.0
    lens_boost_db: tuple[float, ...] = (12.5, 13.0, 13.5, 13.0, 12.5)
    hpbw_on_deg: float = 4.0
    hpbw_off_deg: float = 60.0
    sector_width_deg: float = 28.0
    lens_on: bool = True

    def __post_init__(self):
        if any(b <= 0 for b in self.lens_boost_db):
            raise ConfigError("lens boosts must be positive")
        if self.hpbw_on_deg >= self.sector_width_deg:
            raise ConfigError("lens-on beamwidth must be narrower than a sector")


@dataclass(frozen=True)
class Scene:
    """Instantaneous world state seen by the radars.

    ``clutter_db`` adds a static room return (fixed range, per-radar level
    spread of +/-1 dB) that dominates the empty-room peak; with only thermal
    noise the per-frame peak wanders by ~0.4 dB, too lively for a 0.75 dB
    detection offset.  Left None, frames carry noise (and subject) only.
    """

    subject_xy: tuple[float, float] | None = None
    torso_width_m: float = 0.50
    reflectivity: float = 1.0
    noise_floor_db: float | None = -45.0
    multipath_enabled: bool = True
    multipath_p: float = 0.02
    clutter_db: float | None = None
    clutter_range_m: float = 0.35

    def __post_init__(self):
        if self.torso_width_m <= 0:
            raise ConfigError("torso width must be positive")
        if not 0 < self.clutter_range_m:
            raise ConfigError("clutter range must be positive")


@dataclass(frozen=True)
class Frame:
    uuid: str
    timestamp: float
    samples: np.ndarray  # (chirps_per_frame, samples_per_chirp), real-valued


@dataclass(frozen=True)
class RangeProfile:
    bins_db: np.ndarray
    range_per_bin_m: float

    @property
    def usable_range_m(self) -> float:
        return (len(self.bins_db) - 1) * self.range_per_bin_m


def zone_gain(model: ZoneGainModel, off_boresight_deg: float, zone: int) -> float:
    """One-way antenna gain (dB) at an angle off boresight.

    Gaussian main lobe: peak - 3 (2 off / hpbw)^2, floored at a shelf 20 dB
    below the peak.  Applied once per propagation leg, so a two-way return
    carries twice this value.
    """
    if not 1 <= zone <= len(model.lens_boost_db):
        raise ConfigError(f"zone {zone} outside 1..{len(model.lens_boost_db)}")
    if model.lens_on:
        peak = model.base_gain_db + model.lens_boost_db[zone - 1]
        hpbw = model.hpbw_on_deg
    else:
        peak = model.base_gain_db
        hpbw = model.hpbw_off_deg
    lobe = peak - 3.0 * (2.0 * abs(off_boresight_deg) / hpbw) ** 2
    return max(lobe, peak - SIDELOBE_SHELF_DB)


def _uuid_entropy(uuid: str) -> int:
    return int.from_bytes(hashlib.sha256(uuid.encode()).digest()[:8], "little")


def clutter_level_db(scene: Scene, uuid: str) -> float | None:
    """Static room-return level for one radar: base +/- 1 dB spread by uuid."""
    if scene.clutter_db is None:
        return None
    spread = (_uuid_entropy(uuid) % 2001) / 1000.0 - 1.0
    return scene.clutter_db + spread


def _frame_rng(seed: int, uuid: str, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), _uuid_entropy(uuid), int(frame_index)])
    )


def _hann_noise_scale(n_samples: int) -> float:
    """Sample sigma that makes the windowed spectrum floor read 1.0 (0 dB)."""
    w = np.hanning(n_samples)
    return 1.0 / (math.sqrt(math.pi * float(w @ w)) / float(w.sum()))


def _tone(radar: RadarConfig, range_m: float, amplitude_db: float, phase: float):
    n = np.arange(radar.samples_per_chirp)
    f_b = radar.beat_frequency_hz(range_m)
    amp = 10.0 ** (amplitude_db / 20.0)
    chirp = amp * np.cos(2.0 * math.pi * f_b * n / radar.sample_rate_hz + phase)
    return np.tile(chirp, (radar.chirps_per_frame, 1))


def _profile_db(samples: np.ndarray, n_samples: int) -> np.ndarray:
    w = np.hanning(n_samples)
    spectra = np.abs(np.fft.rfft(samples * w, axis=1)) * (2.0 / w.sum())
    return 20.0 * np.log10(spectra.mean(axis=0) + 1e-12)


def subject_return_db(scene: Scene, radar: RadarConfig, model: ZoneGainModel):
    """Expected beat-tone level and range for the current subject, or None."""
    if scene.subject_xy is None:
        return None
    x, y = scene.subject_xy
    rng_m = max(math.hypot(x, y), MIN_RANGE_M)
    az_deg = math.degrees(math.atan2(x, y))
    half = torso_half_angle(scene.torso_width_m, rng_m)
    eff_off = max(0.0, abs(az_deg - radar.boresight_deg) - half)
    g = zone_gain(model, eff_off, radar.zone)
    level = (REF_LEVEL_DB + radar.if_gain_db + 2.0 * g
             + 10.0 * math.log10(scene.reflectivity) - 40.0 * math.log10(rng_m))
    return level, rng_m


def synth_frame(scene: Scene, radar: RadarConfig, model: ZoneGainModel,
                t: float, seed: int = 0) -> Frame:
    """One frame of beat-signal samples, deterministic in (inputs, seed).

    Draw order per frame is fixed (noise, ghost coin, ghost parameters) so
    identical scenarios replay bit-identically.
    """
    if t < 0:
        raise ContractError("frame time must be >= 0")
    frame_index = int(round(t / radar.frame_rep_time_s))
    rng = _frame_rng(seed, radar.uuid, frame_index)
    shape = (radar.chirps_per_frame, radar.samples_per_chirp)
    samples = np.zeros(shape)

    if scene.noise_floor_db is not None:
        sigma = 10.0 ** (scene.noise_floor_db / 20.0) * _hann_noise_scale(
            radar.samples_per_chirp)
        samples += rng.normal(0.0, sigma, shape)

    clutter = clutter_level_db(scene, radar.uuid)
    if clutter is not None:
        clutter_phase = 2.0 * math.pi * (_uuid_entropy(radar.uuid) % 1000) / 1000.0
        samples += _tone(radar, scene.clutter_range_m, clutter, clutter_phase)

    ret = subject_return_db(scene, radar, model)
    if ret is not None:
        level, rng_m = ret
        phase = (4.0 * math.pi * radar.f_start_ghz * 1e9 * rng_m
                 / SPEED_OF_LIGHT_M_S) % (2.0 * math.pi)
        samples += _tone(radar, rng_m, level, phase)

    # multipath ghosts reproduce the lens-less false-alarm behavior: a weak
    # tone landing 1-2 dB above the radar's empty-room peak
    if (scene.multipath_enabled and not model.lens_on
            and scene.noise_floor_db is not None):
        if rng.random() < scene.multipath_p:
            if clutter is not None:
                floor_peak = clutter
            else:
                floor_peak = float(
                    _profile_db(samples, radar.samples_per_chirp)[1:].max())
            ghost_range = rng.uniform(0.2, 0.9 * radar.usable_range_m)
            ghost_level = floor_peak + rng.uniform(1.0, 2.0)
            ghost_phase = rng.uniform(0.0, 2.0 * math.pi)
            samples += _tone(radar, ghost_range, ghost_level, ghost_phase)

    return Frame(uuid=radar.uuid, timestamp=t, samples=samples)


def range_profile(frame: Frame, radar: RadarConfig) -> RangeProfile:
    """Hann-windowed magnitude spectrum per chirp, averaged incoherently.

    Calibrated so a bin-centered unit cosine reads 0 dB at its bin.
    """
    expected = (radar.chirps_per_frame, radar.samples_per_chirp)
    if frame.samples.shape != expected:
        raise ContractError(
            f"frame shape {frame.samples.shape} != radar config {expected}")
    return RangeProfile(
        bins_db=_profile_db(frame.samples, radar.samples_per_chirp),
        range_per_bin_m=radar.range_per_bin_m,
    )


def peak_amplitude(profile: RangeProfile, max_range_m: float):
    """Strongest return within (0, max_range], excluding the DC bin.

    Returns (amplitude_db, range_m); range is the peak bin center.
    """
    rpb = profile.range_per_bin_m
    n_half = len(profile.bins_db) - 1
    if max_range_m > profile.usable_range_m + 1e-9:
        raise ContractError(
            f"max range {max_range_m} beyond usable window {profile.usable_range_m:.3f}")
    k_max = min(int(math.floor(max_range_m / rpb + 1e-9)), n_half)
    if k_max < 1:
        raise ContractError("search window contains no range bins")
    k = int(np.argmax(profile.bins_db[1:k_max + 1])) + 1
    return float(profile.bins_db[k]), k * rpb


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float
    absent: bool = False


def step_scene(scene: Scene, waypoints: list[Waypoint], t: float) -> Scene:
    """Subject position at time t by piecewise-linear waypoint playback.

    Clamps before the first and after the last waypoint; a waypoint flagged
    absent removes the subject from its time until a later present waypoint.
    """
    if any(b.t < a.t for a, b in zip(waypoints, waypoints[1:])):
        raise ScenarioError("waypoints must be sorted by time")
    if not waypoints:
        return replace(scene, subject_xy=None)
    if t <= waypoints[0].t:
        wp = waypoints[0]
        return replace(scene, subject_xy=None if wp.absent else (wp.x, wp.y))
    if t >= waypoints[-1].t:
        wp = waypoints[-1]
        return replace(scene, subject_xy=None if wp.absent else (wp.x, wp.y))
    hi = next(i for i, wp in enumerate(waypoints) if wp.t > t)
    a, b = waypoints[hi - 1], waypoints[hi]
    if a.absent:
        return replace(scene, subject_xy=None)
    if b.t == a.t:
        frac = 1.0
    else:
        frac = (t - a.t) / (b.t - a.t)
    return replace(scene, subject_xy=(a.x + frac * (b.x - a.x),
                                      a.y + frac * (b.y - a.y)))
