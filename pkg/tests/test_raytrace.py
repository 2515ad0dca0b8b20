import math

import numpy as np
import pytest

import zonelens.raytrace as rt
from zonelens.errors import DegenerateBeamError
from zonelens.lens import PermittivityField

RADIUS = 50.0


def surface_ray(angle_deg: float) -> rt.RayState:
    a = math.radians(angle_deg)
    return rt.RayState(np.array([0.0, 0.0, -RADIUS]),
                       np.array([0.0, math.sin(a), math.cos(a)]))


def uniform_field(value=1.0, n=21, step=5.0) -> PermittivityField:
    half = (n * step) / 2
    return PermittivityField(origin=np.array([-half] * 3), step_mm=step,
                             dims=(n, n, n), values=np.full((n, n, n), value),
                             lens_radius_mm=RADIUS)


def test_sample_eps_analytic_center():
    eps, grad = rt.sample_eps(rt.LuneburgProfile(RADIUS), [0, 0, 0])
    assert eps == 2.0
    np.testing.assert_allclose(grad, 0.0, atol=1e-15)


def test_sample_eps_uniform_field():
    med = rt.VoxelMedium(uniform_field(1.0))
    eps, grad = med.sample([3.3, -7.1, 40.0])
    assert eps == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)


def test_sample_eps_voxel_center_identity(lens_field):
    med = rt.VoxelMedium(lens_field)
    xs = [lens_field.axis_coords(a) for a in range(3)]
    rng = np.random.default_rng(2)
    for _ in range(50):
        i, j, k = (int(rng.integers(2, d - 2)) for d in lens_field.dims)
        p = [xs[0][i], xs[1][j], xs[2][k]]
        eps, _ = med.sample(p)
        assert eps == pytest.approx(lens_field.values[i, j, k], abs=1e-12)


def test_sample_eps_outside_grid(lens_field):
    med = rt.VoxelMedium(lens_field)
    eps, grad = med.sample([500.0, 0.0, 0.0])
    assert eps == 1.0
    np.testing.assert_allclose(grad, 0.0)


def test_straight_line_in_uniform_medium():
    med = rt.VoxelMedium(uniform_field(1.0))
    start = rt.RayState(np.array([-20.0, 5.0, -10.0]),
                        np.array([0.6, 0.0, 0.8]))
    path = rt.trace_ray(med, start, step=0.1)
    ex = path.exit_state
    assert not path.trapped
    np.testing.assert_allclose(ex.direction, start.direction, atol=1e-9)
    # exit point lies on the start line
    d = np.cross(ex.position - start.position, start.direction)
    assert np.linalg.norm(d) < 1e-6


def test_diameter_ray_unbent():
    med = rt.LuneburgProfile(RADIUS)
    path = rt.trace_ray(med, surface_ray(0.0), step=0.1)
    ex = path.exit_state
    np.testing.assert_allclose(ex.direction, [0, 0, 1], atol=1e-9)
    np.testing.assert_allclose(ex.position[:2], 0.0, atol=1e-9)
    assert abs(np.linalg.norm(ex.position) - RADIUS) < 2e-3


def test_luneburg_collimation_single_ray():
    med = rt.LuneburgProfile(RADIUS)
    path = rt.trace_ray(med, surface_ray(30.0), step=0.05)
    dev = math.degrees(math.acos(np.clip(path.exit_state.direction @
                                         np.array([0.0, 0.0, 1.0]), -1, 1)))
    assert dev < 0.5


def test_path_lengths_strictly_increasing():
    med = rt.LuneburgProfile(RADIUS)
    path = rt.trace_ray(med, surface_ray(20.0), step=0.1)
    lengths = [s.path_length for s in path.samples]
    assert all(b > a for a, b in zip(lengths, lengths[1:]))
    for s in path.samples:
        assert abs(np.linalg.norm(s.direction) - 1.0) < 1e-9


def test_bouguer_invariant_along_rays():
    med = rt.LuneburgProfile(RADIUS)
    for angle in (5.0, 15.0, 30.0, 40.0):
        path = rt.trace_ray(med, surface_ray(angle), step=0.05)
        inv0 = None
        for s in path.samples:
            r = np.linalg.norm(s.position)
            if r < 1e-9:
                continue
            eps, _ = med.sample(s.position)
            sin_phi = np.linalg.norm(np.cross(s.position / r, s.direction))
            inv = math.sqrt(eps) * r * sin_phi
            if inv0 is None:
                inv0 = inv
            assert abs(inv - inv0) / inv0 < 1e-4


def test_reciprocity():
    med = rt.LuneburgProfile(RADIUS)
    path = rt.trace_ray(med, surface_ray(25.0), step=0.05)
    ex = path.exit_state
    back = rt.trace_ray(med, rt.RayState(ex.position, -ex.direction), step=0.05)
    ret = back.exit_state.position
    assert np.linalg.norm(ret - np.array([0.0, 0.0, -RADIUS])) < 0.1


def test_trapped_by_max_length():
    med = rt.LuneburgProfile(RADIUS)
    path = rt.trace_ray(med, surface_ray(30.0), step=0.1, max_length=20.0)
    assert path.trapped
    assert path.exit_state is None


def test_never_entering_ray_exits_at_start():
    med = rt.LuneburgProfile(RADIUS)
    start = rt.RayState(np.array([0.0, 0.0, -80.0]), np.array([0.0, 0.0, -1.0]))
    path = rt.trace_ray(med, start, step=0.1)
    np.testing.assert_allclose(path.exit_state.position, start.position)
    assert path.exit_state.path_length == 0.0


def test_cone_directions_axis_first():
    dirs = rt.cone_directions([0, 0, 1], 30.0, 1)
    np.testing.assert_allclose(dirs, [[0, 0, 1]], atol=1e-15)
    dirs = rt.cone_directions([0, 0, 1], 30.0, 100)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    cos_min = math.cos(math.radians(30.0))
    assert (dirs @ np.array([0, 0, 1.0]) >= cos_min - 1e-12).all()


@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_bundle_collimation(backend):
    if backend == "compiled" and not rt.compiled_available():
        pytest.skip("extension not built")
    med = rt.LuneburgProfile(RADIUS)
    stats = rt.trace_bundle(med, [0, 0, -RADIUS], 30.0, 100, step=0.1,
                            backend=backend)
    assert stats.angular_spread_rms_deg < 1.0
    assert stats.trapped_fraction == 0.0
    np.testing.assert_allclose(stats.mean_exit_direction, [0, 0, 1], atol=1e-5)


def test_single_ray_bundle_zero_spread():
    med = rt.LuneburgProfile(RADIUS)
    stats = rt.trace_bundle(med, [0, 0, -RADIUS], 30.0, 1, step=0.1)
    assert stats.angular_spread_rms_deg == pytest.approx(0.0, abs=1e-9)


def test_backends_agree():
    if not rt.compiled_available():
        pytest.skip("extension not built")
    med = rt.LuneburgProfile(RADIUS)
    _, (pc, dc, lc, tc) = rt.trace_bundle(med, [0, 0, -RADIUS], 25.0, 40,
                                          backend="compiled", return_exits=True)
    _, (pp, dp, lp, tp) = rt.trace_bundle(med, [0, 0, -RADIUS], 25.0, 40,
                                          backend="python", return_exits=True)
    np.testing.assert_allclose(pc, pp, atol=1e-6)
    np.testing.assert_allclose(dc, dp, atol=1e-9)
    np.testing.assert_array_equal(tc, tp)


def test_backends_agree_on_voxel_medium(lens_field):
    if not rt.compiled_available():
        pytest.skip("extension not built")
    med = rt.VoxelMedium(lens_field)
    feed, _ = rt.sector_feed(RADIUS, 28.0)
    _, (pc, dc, _, tc) = rt.trace_bundle(med, feed, 25.0, 60,
                                         backend="compiled", return_exits=True)
    _, (pp, dp, _, tp) = rt.trace_bundle(med, feed, 25.0, 60,
                                         backend="python", return_exits=True)
    np.testing.assert_array_equal(tc, tp)
    dots = np.clip(np.einsum("ij,ij->i", dc, dp), -1, 1)
    assert np.degrees(np.arccos(dots)).max() < 1e-5
    np.testing.assert_allclose(pc, pp, atol=1e-4)


def test_step_halving_convergence():
    med = rt.LuneburgProfile(RADIUS)
    _, e1 = rt.trace_bundle(med, [0, 0, -RADIUS], 30.0, 21, step=0.1,
                            return_exits=True)
    _, e2 = rt.trace_bundle(med, [0, 0, -RADIUS], 30.0, 21, step=0.05,
                            return_exits=True)
    dots = np.clip(np.einsum("ij,ij->i", e1[1], e2[1]), -1, 1)
    assert np.degrees(np.arccos(dots)).max() < 0.05


def test_beam_metrics_hand_geometry():
    one_deg = math.radians(1.0)
    mk = lambda d: rt.RayPath(samples=[], exit_state=rt.RayState(
        np.zeros(3), np.asarray(d, dtype=float), 1.0))
    paths = [mk([0, math.sin(one_deg), math.cos(one_deg)]),
             mk([0, -math.sin(one_deg), math.cos(one_deg)])]
    stats = rt.beam_metrics(paths)
    np.testing.assert_allclose(stats.mean_exit_direction, [0, 0, 1], atol=1e-12)
    assert stats.angular_spread_rms_deg == pytest.approx(1.0, abs=1e-9)


def test_beam_metrics_trapped_fraction():
    ok = rt.RayPath(samples=[], exit_state=rt.RayState(
        np.zeros(3), np.array([0.0, 0.0, 1.0]), 1.0))
    bad = rt.RayPath(samples=[], exit_state=None, trapped=True)
    stats = rt.beam_metrics([ok, bad])
    assert stats.trapped_fraction == 0.5
    with pytest.raises(DegenerateBeamError):
        rt.beam_metrics([bad, bad])


def test_non_finite_medium_raises_with_last_sample():
    from zonelens.errors import NumericalError

    field = uniform_field(1.0)
    field.values[8:, :, :] = np.nan
    med = rt.VoxelMedium(field)
    start = rt.RayState(np.array([-30.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
    with pytest.raises(NumericalError) as err:
        rt.trace_ray(med, start, step=0.5)
    assert err.value.last_sample is not None


def test_modified_lens_sector_beams(lens_field):
    # emergent check: each sector feed produces a beam near its boresight
    med = rt.VoxelMedium(lens_field)
    for theta in (-56.0, -28.0, 0.0, 28.0, 56.0):
        feed, boresight = rt.sector_feed(RADIUS, theta)
        stats = rt.trace_bundle(med, feed, 30.0, 100, step=0.1)
        dev = math.degrees(math.acos(np.clip(
            float(stats.mean_exit_direction @ boresight), -1, 1)))
        assert dev < 10.0, f"sector {theta}: beam off by {dev:.2f} deg"
