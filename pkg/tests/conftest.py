import math

import pytest

from zonelens.config import Scenario, default_config
from zonelens.fmcw import Waypoint
from zonelens.lens import LensConfig

ZONE_BORESIGHTS = (-56.0, -28.0, 0.0, 28.0, 56.0)


def zone_xy(zone: int, range_m: float = 1.0):
    az = math.radians(ZONE_BORESIGHTS[zone - 1])
    return range_m * math.sin(az), range_m * math.cos(az)


def fall_scenario(zone: int, seed: int = 42, appear_t: float = 6.0,
                  lose_t: float = 10.0, **overrides) -> Scenario:
    """Subject appears on a zone boresight after calibration, then vanishes."""
    x, y = zone_xy(zone)
    wps = [Waypoint(0.0, x, y, absent=True), Waypoint(appear_t, x, y),
           Waypoint(lose_t, x, y, absent=True)]
    return Scenario(seed=seed, waypoints=tuple(wps), **overrides)


def walk_scenario(seed: int = 11, lens_on: bool = True, start_t: float = 5.0,
                  walk_s: float = 14.0) -> Scenario:
    """Arc walk at 1.0 m sweeping all five zones, then the subject leaves."""
    wps = [Waypoint(0.0, 0.0, 1.0, absent=True)]
    n = 29
    for i in range(n):
        az = math.radians(-62.0 + 124.0 * i / (n - 1))
        wps.append(Waypoint(start_t + walk_s * i / (n - 1),
                            math.sin(az), math.cos(az)))
    last = wps[-1]
    wps.append(Waypoint(last.t + 0.5, last.x, last.y, absent=True))
    return Scenario(seed=seed, lens_on=lens_on, waypoints=tuple(wps))


@pytest.fixture(scope="session")
def platform():
    return default_config()


@pytest.fixture(scope="session")
def lens_cfg():
    return LensConfig()


@pytest.fixture(scope="session")
def lens_field(lens_cfg):
    from zonelens.lens import synthesize_field

    return synthesize_field(lens_cfg)
