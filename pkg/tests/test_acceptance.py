"""Acceptance suite: ten numbered criteria covering the codec, geometry,
resampling, search arithmetic, end-to-end extraction, and performance.

Each test prints a single [PASS]/[FAIL] line (visible with pytest -s) and
asserts the same condition, so the suite both documents and enforces the
quantitative guarantees.
"""

import math
import statistics
import time
from dataclasses import replace

import numpy as np
import pytest

import echoslice as es
from echoslice import codec, phantom, resampler, search
from echoslice.errors import CodecError
from echoslice.geometry import plane_ad_to_pn, plane_basis, unit


def _report(num: int, name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} - {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def _rand_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _random_landmarks(rng):
    while True:
        apex = rng.uniform(-3, 3, 3)
        direction = _rand_unit(rng)
        if abs(direction[1]) > 0.95:
            continue
        return es.landmark_set_from_apex(apex, apex + rng.uniform(4, 10) * direction)


def test_criterion_01_codec_round_trip_and_fuzz():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    encoded = None
    for _ in range(100):
        dims = (int(rng.integers(2, 65)), int(rng.integers(2, 65)),
                int(rng.integers(2, 65)), int(rng.integers(1, 9)))
        meta = es.VolumeMeta(dims, es.BoundsMatrix(1, 11, -30, 30, -30, 30))
        vol = es.VolumeSequence(meta, rng.integers(0, 256, dims, dtype=np.uint8))
        stream = codec.encode_volume(vol)
        out = codec.decode_volume(stream, meta, policy="strict")
        assert np.array_equal(out.voxels, vol.voxels)
        encoded = (stream, meta)

    stream, meta = encoded
    failures = 0
    for _ in range(1000):
        data = bytearray(stream.data)
        pos = int(rng.integers(0, len(data)))
        data[pos] = (data[pos] + int(rng.integers(1, 256))) % 256
        try:
            codec.decode_volume(codec.RawStream(bytes(data)), meta, policy="strict")
        except CodecError:
            failures += 1
    elapsed = time.perf_counter() - start
    _report(1, "codec round-trip + fuzz", failures == 1000 and elapsed < 60,
            f"{failures}/1000 mutations rejected, {elapsed:.1f}s")


def test_criterion_02_geometry_round_trips():
    rng = np.random.default_rng(102)
    n = 10_000
    sph = np.stack([rng.uniform(0.1, 20, n), rng.uniform(-179.9, 179.9, n),
                    rng.uniform(-89.9, 89.9, n)], axis=-1)
    xyz = es.spherical_to_cartesian(sph[:, 0], sph[:, 1], sph[:, 2])
    back = es.spherical_to_cartesian(*es.cartesian_to_spherical(xyz).T)
    sph_err = float(np.abs(back - xyz).max())

    plane_err = 0.0
    for _ in range(1000):
        pn = es.PlanePN(rng.uniform(-5, 5, 3), _rand_unit(rng))
        rec = plane_ad_to_pn(es.plane_pn_to_ad(pn))
        plane_err = max(plane_err,
                        abs(abs(float(rec.normal @ pn.normal)) - 1.0),
                        abs(float(rec.signed_distance(pn.point))))

    normals = [_rand_unit(rng) for _ in range(95_000)]
    normals += [unit(np.array([1.0, e1, e2]))
                for e1 in np.linspace(-1e-5, 1e-5, 50)
                for e2 in np.linspace(-1e-5, 1e-5, 100)]
    basis_err = 0.0
    for nvec in normals:
        b = plane_basis(es.PlanePN(np.zeros(3), nvec))
        basis_err = max(basis_err,
                        abs(float(b.u @ nvec)), abs(float(b.v @ nvec)),
                        abs(float(b.u @ b.v)),
                        abs(np.linalg.norm(b.u) - 1), abs(np.linalg.norm(b.v) - 1))
    ok = sph_err < 1e-9 and plane_err < 1e-9 and basis_err < 1e-9
    _report(2, "geometry round-trips + basis orthonormality", ok,
            f"coord {sph_err:.2e}, plane {plane_err:.2e}, basis {basis_err:.2e}")


def test_criterion_03_sampling_grid_planarity():
    rng = np.random.default_rng(103)
    meta = es.VolumeMeta((16, 14, 14, 1), es.BoundsMatrix(1, 12, -35, 35, -35, 35))
    worst = 0.0
    done = 0
    while done < 100:
        point = es.spherical_to_cartesian(rng.uniform(2, 11), rng.uniform(-30, 30),
                                          rng.uniform(-30, 30))
        pn = es.PlanePN(point, _rand_unit(rng))
        basis = plane_basis(pn)
        extent = resampler.slice_extent(meta, basis)
        grid = resampler.make_sampling_grid(basis, extent, 0.3)
        dist = pn.signed_distance(grid.points.reshape(-1, 3))
        worst = max(worst, float(np.abs(dist).max()))
        done += 1
    _report(3, "sampling-grid planarity", worst < 1e-9, f"max {worst:.2e} cm")


def _linear_volume():
    meta = es.VolumeMeta((8, 8, 8, 1), es.BoundsMatrix(2, 10, -40, 40, -40, 40))
    i, j, k = np.meshgrid(*(np.arange(8),) * 3, indexing="ij")
    field = (2 * i + 3 * j + 4 * k + 10).astype(np.uint8)
    return es.VolumeSequence(meta, field[..., None])


def _linear_value(meta, xyz):
    sph = es.cartesian_to_spherical(xyz)
    b = meta.bounds
    ni, nj, nk, _ = meta.dims
    fi = (sph[..., 0] - b.rho_min) / (b.rho_max - b.rho_min) * (ni - 1)
    fj = (sph[..., 1] - b.phi_min) / (b.phi_max - b.phi_min) * (nj - 1)
    fk = (sph[..., 2] - b.theta_min) / (b.theta_max - b.theta_min) * (nk - 1)
    return 2 * fi + 3 * fj + 4 * fk + 10


def test_criterion_04_interpolation_oracle():
    vol = _linear_volume()
    rng = np.random.default_rng(104)
    n = 10_000
    sph = np.stack([rng.uniform(2.05, 9.95, n), rng.uniform(-39.5, 39.5, n),
                    rng.uniform(-39.5, 39.5, n)], axis=-1)
    xyz = es.spherical_to_cartesian(sph[:, 0], sph[:, 1], sph[:, 2])
    err_pts = float(np.abs(resampler.sample_at_points(vol, 0, xyz)
                           - _linear_value(vol.meta, xyz)).max())

    # constant-azimuth sheet: values depend on (rho, theta) only, so the
    # trilinear kernel must agree with the 2D bilinear oracle
    err_sheet = 0.0
    for phi in (-30.0, 0.0, 25.0):
        pts = es.spherical_to_cartesian(
            rng.uniform(2.05, 9.95, 400), np.full(400, phi),
            rng.uniform(-39.5, 39.5, 400))
        vals = resampler.sample_at_points(vol, 0, pts)
        err_sheet = max(err_sheet,
                        float(np.abs(vals - _linear_value(vol.meta, pts)).max()))
    ok = err_pts <= 0.5 and err_sheet <= 0.5
    _report(4, "interpolation linear/bilinear oracle", ok,
            f"points {err_pts:.2e}, sheets {err_sheet:.2e}")


def test_criterion_05_extent_oracle():
    rng = np.random.default_rng(105)
    worst = 0.0
    for v in range(20):
        dims = (int(rng.integers(4, 33)), int(rng.integers(4, 33)),
                int(rng.integers(4, 33)), 1)
        meta = es.VolumeMeta(dims, es.BoundsMatrix(
            rng.uniform(0.5, 2), rng.uniform(8, 13),
            -rng.uniform(20, 40), rng.uniform(20, 40),
            -rng.uniform(20, 40), rng.uniform(20, 40)))
        diag = 2 * meta.bounds.rho_max
        for _ in range(10):
            point = es.spherical_to_cartesian(
                rng.uniform(meta.bounds.rho_min, meta.bounds.rho_max),
                rng.uniform(meta.bounds.phi_min, meta.bounds.phi_max),
                rng.uniform(meta.bounds.theta_min, meta.bounds.theta_max))
            basis = plane_basis(es.PlanePN(point, _rand_unit(rng)))
            fast = resampler.slice_extent(meta, basis, boundary_only=True)
            full = resampler.slice_extent(meta, basis, boundary_only=False)
            worst = max(worst, max(
                abs(a - b) / diag for a, b in
                zip((fast.s_min, fast.s_max, fast.t_min, fast.t_max),
                    (full.s_min, full.s_max, full.t_min, full.t_max))))
    _report(5, "boundary-shell extent oracle", worst <= 0.01,
            f"max deviation {100 * worst:.4f}% of diagonal")


def test_criterion_06_spatial_calibration():
    center = np.array([7.5, 0.0, 0.0])
    radius = 1.0
    meta = es.VolumeMeta((96, 80, 80, 1), es.BoundsMatrix(0.5, 13, -40, 40, -40, 40))
    spec = es.PhantomSpec(meta, lv=None,
                          sphere_markers=(phantom.SphereMarker(center, radius),))
    vol, _ = es.generate_phantom(spec)

    rng = np.random.default_rng(106)
    cm_per_pix = 0.1
    worst = 0.0
    for _ in range(50):
        normal = _rand_unit(rng)
        pn = es.PlanePN(center, normal)  # through the sphere center
        grid = resampler.make_sampling_grid(
            plane_basis(pn), resampler.slice_extent(vol, plane_basis(pn)), cm_per_pix)
        img = resampler.interpolate(vol, 0, grid)
        area = float((img >= phantom.MARKER_INTENSITY // 2).sum()) * cm_per_pix**2
        measured = 2.0 * math.sqrt(area / math.pi)
        worst = max(worst, abs(measured - 2 * radius))
    _report(6, "spatial calibration on sphere slices", worst <= 2 * cm_per_pix,
            f"max diameter error {worst:.3f} cm vs tol {2 * cm_per_pix:.2f} cm")


def test_criterion_07_search_range_arithmetic():
    rng = np.random.default_rng(107)
    mismatch = 0
    for _ in range(100):
        lm = _random_landmarks(rng)
        la, a4c, sax = lm.plane_la, lm.plane_a4c, lm.plane_sax
        a2c_sel = es.PlaneAD(la.d, la.phi_n, rng.uniform(-60, 60))
        a3c_sel = es.PlaneAD(la.d, la.phi_n, rng.uniform(-60, 60))
        selected = {"A2C": a2c_sel, "A3C": a3c_sel}
        expected = {
            "A2C": ((la.d, la.d), (la.phi_n, la.phi_n),
                    (la.theta_n, la.theta_n + 30)),
            "A3C": ((la.d, la.d), (la.phi_n, la.phi_n),
                    (a2c_sel.theta_n - 60, a2c_sel.theta_n - 15)),
            "A4C": ((a4c.d, a4c.d), (a4c.phi_n, a4c.phi_n),
                    (a4c.theta_n, a4c.theta_n)),
            "A5C": ((a4c.d, a4c.d), (a4c.phi_n, a4c.phi_n),
                    (a4c.theta_n + 10, a4c.theta_n + 35)),
            "SAX_apex": ((sax.d + 0.10 * lm.l_lv, sax.d + 0.20 * lm.l_lv),
                         (sax.phi_n, sax.phi_n), (sax.theta_n, sax.theta_n)),
            "SAX_PAP": ((sax.d + 0.40 * lm.l_lv, sax.d + 0.50 * lm.l_lv),
                        (sax.phi_n, sax.phi_n), (sax.theta_n, sax.theta_n)),
            "SAX_MV": ((sax.d + 0.75 * lm.l_lv, sax.d + 0.80 * lm.l_lv),
                       (sax.phi_n, sax.phi_n), (sax.theta_n, sax.theta_n)),
            "PLAX": ((la.d, la.d), (a3c_sel.phi_n, a3c_sel.phi_n),
                     (a3c_sel.theta_n, a3c_sel.theta_n)),
        }
        got = search.build_search_ranges(lm, selected)
        for view, (d, phi, theta) in expected.items():
            if (got[view].d, got[view].phi, got[view].theta) != (d, phi, theta):
                mismatch += 1

    # spot check the five-chamber range at the canonical A4C orientation
    lm0 = es.landmark_set_from_apex(np.array([2.0, 0, 0]), np.array([10.0, 0, 0]))
    a5c = search.build_search_ranges(lm0, views=["A5C"])["A5C"]
    spot_ok = a5c.theta == (100.0, 125.0)
    _report(7, "search-range arithmetic", mismatch == 0 and spot_ok,
            f"{mismatch} mismatches, A5C theta {a5c.theta}")


def test_criterion_08_end_to_end_phantom_extraction():
    steps = search.StepConfig()
    worst = 0.0
    ok = True
    for seed in range(10):
        vol, truth = es.generate_phantom(es.standard_phantom(seed=seed))
        provider = es.phantom_landmark_provider(truth)
        scorer = es.phantom_scorer(truth)
        runs = []
        for parallelism in (1, 1, 8):  # three runs, two parallelism settings
            cfg = search.ExtractConfig(render_videos=False, parallelism=parallelism)
            res = search.extract_standard_views(vol, provider, scorer, cfg)
            runs.append({v: s.plane.params() for v, s in res.views.items()})
        ok = ok and runs[0] == runs[1] == runs[2]
        for view, (d, phi, theta) in runs[0].items():
            true = truth.view_planes[view]
            worst = max(worst, abs(d - true.d) / steps.d_step,
                        abs(phi - true.phi_n) / steps.angle_step,
                        abs(theta - true.theta_n) / steps.angle_step)
    ok = ok and worst <= 1.0 + 1e-9
    _report(8, "end-to-end phantom extraction", ok,
            f"worst error {worst:.3f} steps over 10 phantoms x 3 runs")


def test_criterion_09_edv_disk_summation():
    a, b, c = 2.0, 2.0, 4.0
    closed = 4.0 / 3.0 * math.pi * a * b * c

    def disk_volume(n):
        fracs = (np.arange(n) + 0.5) / n           # slice midpoints, apex -> base
        z = (2.0 * fracs - 1.0) * c
        areas = math.pi * a * b * (1.0 - (z / c) ** 2)
        return search.edv_disk_summation(2.0 * c, list(areas))

    err20 = abs(disk_volume(20) - closed) / closed
    err200 = abs(disk_volume(200) - closed) / closed
    ok = err20 <= 0.05 and err200 <= 0.005 and err200 < err20
    _report(9, "EDV disk summation vs closed form", ok,
            f"closed {closed:.2f} cm^3, err N=20 {100 * err20:.2f}%, "
            f"N=200 {100 * err200:.3f}%")


def test_criterion_10_performance():
    rng = np.random.default_rng(110)
    dims = (128, 128, 128, 1)
    meta = es.VolumeMeta(dims, es.BoundsMatrix(1, 12, -40, 40, -40, 40))
    vol = es.VolumeSequence(meta, rng.integers(0, 256, dims, dtype=np.uint8))
    plane = es.PlaneAD(0.0, 0.0, 90.0)
    probe = resampler.plane_grid(vol, plane, 1.0)
    extent = max(probe.extent.s_max - probe.extent.s_min,
                 probe.extent.t_max - probe.extent.t_min)
    cfg = es.ViewRenderConfig(cm_per_pix=extent / 512.0)
    times = []
    for _ in range(9):
        t0 = time.perf_counter()
        resampler.render_slice(vol, plane, 0, cfg)
        times.append(time.perf_counter() - t0)
    render_ms = statistics.median(times) * 1e3

    pvol, truth = es.generate_phantom(es.standard_phantom(seed=0))
    provider = es.phantom_landmark_provider(truth)
    ext_cfg = search.ExtractConfig(steps=search.StepConfig(0.02, 0.25))
    t0 = time.perf_counter()
    result = search.extract_standard_views(
        pvol, provider, lambda imgs, view: [0.5] * len(imgs), ext_cfg)
    extract_s = time.perf_counter() - t0
    candidates = sum(p["candidates"] for p in result.provenance.values())

    ok = render_ms < 50.0 and extract_s < 30.0 and candidates >= 500
    _report(10, "performance", ok,
            f"512x512 render median {render_ms:.1f} ms, "
            f"extraction {extract_s:.1f} s over {candidates} candidates")
