import numpy as np
import pytest

import echoslice as es
from echoslice import resampler
from echoslice.errors import EchoSliceError, PlaneOutsideVolumeError
from echoslice.geometry import plane_ad_to_pn, plane_basis, spherical_to_cartesian


def linear_volume(dims=(8, 8, 8, 1), bounds=(2.0, 10.0, -40.0, 40.0, -40.0, 40.0)):
    """Voxels linear in grid index: trilinear interpolation reproduces the
    field exactly, which gives an analytic oracle at arbitrary points."""
    meta = es.VolumeMeta(dims, es.BoundsMatrix(*bounds))
    i, j, k = np.meshgrid(*(np.arange(n) for n in dims[:3]), indexing="ij")
    field = (2 * i + 3 * j + 4 * k + 10).astype(np.uint8)
    voxels = np.repeat(field[..., None], dims[3], axis=3)
    return es.VolumeSequence(meta, voxels)


def linear_value(meta, xyz):
    sph = es.cartesian_to_spherical(xyz)
    b = meta.bounds
    ni, nj, nk, _ = meta.dims
    fi = (sph[..., 0] - b.rho_min) / (b.rho_max - b.rho_min) * (ni - 1)
    fj = (sph[..., 1] - b.phi_min) / (b.phi_max - b.phi_min) * (nj - 1)
    fk = (sph[..., 2] - b.theta_min) / (b.theta_max - b.theta_min) * (nk - 1)
    return 2 * fi + 3 * fj + 4 * fk + 10


class TestExtent:
    def test_boundary_matches_full_cloud(self):
        meta = es.VolumeMeta((12, 10, 11, 1), es.BoundsMatrix(1, 9, -35, 35, -25, 25))
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = rng.normal(size=3)
            basis = plane_basis(es.PlanePN(rng.uniform(-1, 1, 3), n))
            try:
                fast = resampler.slice_extent(meta, basis, boundary_only=True)
            except PlaneOutsideVolumeError:
                with pytest.raises(PlaneOutsideVolumeError):
                    resampler.slice_extent(meta, basis, boundary_only=False)
                continue
            full = resampler.slice_extent(meta, basis, boundary_only=False)
            diag = 2 * meta.bounds.rho_max
            for a, b in zip((fast.s_min, fast.s_max, fast.t_min, fast.t_max),
                            (full.s_min, full.s_max, full.t_min, full.t_max)):
                assert abs(a - b) <= 0.01 * diag

    def test_plane_outside_volume(self):
        vol = linear_volume()
        basis = plane_basis(es.PlanePN([50, 0, 0], [1, 0, 0]))
        with pytest.raises(PlaneOutsideVolumeError):
            resampler.slice_extent(vol, basis)

    def test_extent_contains_all_projections(self):
        vol = linear_volume()
        basis = plane_basis(plane_ad_to_pn(es.PlaneAD(5, 10, 20)))
        ext = resampler.slice_extent(vol, basis, boundary_only=False)
        cloud = resampler._point_cloud(vol.meta, False) - basis.point
        assert (cloud @ basis.u).min() >= ext.s_min - 1e-12
        assert (cloud @ basis.u).max() <= ext.s_max + 1e-12


class TestSamplingGrid:
    BASIS = plane_basis(es.PlanePN([0, 0, 0], [0, 1, 0]))

    def test_pixel_counts(self):
        grid = resampler.make_sampling_grid(
            self.BASIS, resampler.SliceExtent(0, 10, 0, 10), 0.1)
        assert (grid.width_pix, grid.height_pix) == (100, 100)
        assert grid.points.shape == (100, 100, 3)

    def test_corner_and_pitch(self):
        ext = resampler.SliceExtent(-3.0, 4.0, -2.0, 5.0)
        grid = resampler.make_sampling_grid(self.BASIS, ext, 0.05)
        corner = self.BASIS.point + ext.s_min * self.BASIS.u + ext.t_min * self.BASIS.v
        assert np.allclose(grid.points[0, 0], corner, atol=1e-12)
        step_s = grid.points[0, 1] - grid.points[0, 0]
        step_t = grid.points[1, 0] - grid.points[0, 0]
        assert np.linalg.norm(step_s) == pytest.approx(0.05, abs=1e-12)
        assert np.linalg.norm(step_t) == pytest.approx(0.05, abs=1e-12)

    def test_planarity(self):
        grid = resampler.plane_grid(linear_volume(), es.PlaneAD(1.0, 15, -10), 0.2)
        pn = plane_ad_to_pn(es.PlaneAD(1.0, 15, -10))
        dist = pn.signed_distance(grid.points.reshape(-1, 3))
        assert np.abs(dist).max() < 1e-9

    def test_bad_pitch(self):
        with pytest.raises(EchoSliceError):
            resampler.make_sampling_grid(self.BASIS, resampler.SliceExtent(0, 1, 0, 1), 0)


class TestInterpolation:
    def test_node_exact(self):
        vol = linear_volume()
        meta = vol.meta
        nodes = []
        for i in range(meta.dims[0]):
            nodes.append(spherical_to_cartesian(*es.grid_coordinate(meta, i, 3, 5)))
        vals = resampler.sample_at_points(vol, 0, np.array(nodes))
        expect = [vol.voxels[i, 3, 5, 0] for i in range(meta.dims[0])]
        assert np.allclose(vals, expect, atol=1e-9)

    def test_linear_field_oracle(self):
        vol = linear_volume()
        rng = np.random.default_rng(1)
        sph = np.stack([rng.uniform(2.1, 9.9, 500), rng.uniform(-39, 39, 500),
                        rng.uniform(-39, 39, 500)], axis=-1)
        xyz = spherical_to_cartesian(sph[:, 0], sph[:, 1], sph[:, 2])
        vals = resampler.sample_at_points(vol, 0, xyz)
        assert np.allclose(vals, linear_value(vol.meta, xyz), atol=1e-9)

    def test_outside_is_zero(self):
        vol = linear_volume()
        pts = np.array([[0.5, 0, 0], [20, 0, 0], [0, 15, 0], [-5, 0, 0]], float)
        assert np.all(resampler.sample_at_points(vol, 0, pts) == 0)

    def test_phi_constant_slice_is_bilinear(self):
        # A plane of constant azimuth intersects the grid along (rho, theta)
        # only, so values there depend on just two axes.
        vol = linear_volume()
        xyz = spherical_to_cartesian(np.full(50, 5.0), np.zeros(50),
                                     np.linspace(-30, 30, 50))
        vals = resampler.sample_at_points(vol, 0, xyz)
        assert np.allclose(vals, linear_value(vol.meta, xyz), atol=1e-9)

    def test_render_slice_uint8(self):
        img = resampler.render_slice(linear_volume(), es.PlaneAD(0, 0, 90), 0)
        assert img.pixels.dtype == np.uint8
        assert img.cm_per_pix == 0.05
        assert img.frame_no == 0

    def test_render_sequence_matches_per_frame(self):
        rng = np.random.default_rng(2)
        meta = es.VolumeMeta((6, 6, 6, 3), es.BoundsMatrix(1, 8, -30, 30, -30, 30))
        vol = es.VolumeSequence(meta, rng.integers(0, 256, (6, 6, 6, 3), dtype=np.uint8))
        plane = es.PlaneAD(0.5, 5, 60)
        cfg = es.ViewRenderConfig(cm_per_pix=0.1, flip_h=True, rotation_deg=90)
        seq = resampler.render_sequence(vol, plane, cfg)
        assert len(seq) == 3
        for t, img in enumerate(seq):
            single = resampler.render_slice(vol, plane, t, cfg)
            assert np.array_equal(img.pixels, single.pixels)


class TestOrientation:
    RAW = np.arange(20, dtype=np.uint8).reshape(4, 5)

    def test_flip_h(self):
        out = resampler.orient_image(self.RAW, es.ViewRenderConfig(flip_h=True))
        assert np.array_equal(out, self.RAW[:, ::-1])

    def test_flip_v(self):
        out = resampler.orient_image(self.RAW, es.ViewRenderConfig(flip_v=True))
        assert np.array_equal(out, self.RAW[::-1, :])

    def test_flips_are_involutions(self):
        cfg = es.ViewRenderConfig(flip_h=True, flip_v=True)
        once = resampler.orient_image(self.RAW, cfg)
        twice = resampler.orient_image(once, cfg)
        assert np.array_equal(twice, self.RAW)

    def test_quarter_turn_exact(self):
        out = resampler.orient_image(self.RAW, es.ViewRenderConfig(rotation_deg=90))
        assert np.array_equal(out, np.rot90(self.RAW))
        out = resampler.orient_image(self.RAW, es.ViewRenderConfig(rotation_deg=-90))
        assert np.array_equal(out, np.rot90(self.RAW, -1))
        out = resampler.orient_image(self.RAW, es.ViewRenderConfig(rotation_deg=180))
        assert np.array_equal(out, self.RAW[::-1, ::-1])

    def test_arbitrary_rotation_shape_preserved(self):
        img = np.full((40, 40), 200, dtype=np.uint8)
        out = resampler.orient_image(img, es.ViewRenderConfig(rotation_deg=33))
        assert out.shape == (40, 40)
        assert out[20, 20] == 200  # center is invariant
        assert out[0, 0] == 0  # corners rotate out and fill with zero


class TestPixelWorld:
    def make_grid(self):
        vol = linear_volume()
        return vol, resampler.plane_grid(vol, es.PlaneAD(0.0, 0, 90), 0.1)

    @pytest.mark.parametrize("cfg", [
        es.ViewRenderConfig(cm_per_pix=0.1),
        es.ViewRenderConfig(cm_per_pix=0.1, flip_h=True),
        es.ViewRenderConfig(cm_per_pix=0.1, flip_v=True, rotation_deg=90),
        es.ViewRenderConfig(cm_per_pix=0.1, flip_h=True, flip_v=True, rotation_deg=180),
    ])
    def test_round_trip_exact(self, cfg):
        _, grid = self.make_grid()
        rng = np.random.default_rng(3)
        idx = resampler.render_index_map(grid, cfg)
        for _ in range(50):
            row = int(rng.integers(0, idx.shape[0]))
            col = int(rng.integers(0, idx.shape[1]))
            world = resampler.pixel_to_world(grid, cfg, (row, col))
            assert resampler.world_to_pixel(grid, cfg, world) == (row, col)

    def test_world_point_lies_on_plane(self):
        _, grid = self.make_grid()
        cfg = es.ViewRenderConfig(cm_per_pix=0.1, rotation_deg=33)
        world = resampler.pixel_to_world(grid, cfg, (grid.height_pix // 2, grid.width_pix // 2))
        pn = plane_ad_to_pn(es.PlaneAD(0.0, 0, 90))
        assert abs(pn.signed_distance(world)) < 1e-9

    def test_arbitrary_rotation_round_trip_near(self):
        _, grid = self.make_grid()
        cfg = es.ViewRenderConfig(cm_per_pix=0.1, rotation_deg=33)
        row, col = grid.height_pix // 2 + 5, grid.width_pix // 2 - 7
        world = resampler.pixel_to_world(grid, cfg, (row, col))
        r2, c2 = resampler.world_to_pixel(grid, cfg, world)
        assert abs(r2 - row) <= 1 and abs(c2 - col) <= 1

    def test_pixel_out_of_image(self):
        _, grid = self.make_grid()
        with pytest.raises(EchoSliceError):
            resampler.pixel_to_world(grid, es.ViewRenderConfig(), (10_000, 0))
