import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reglosslib.errors import (
    CoverageError,
    DegenerateInputError,
    DimensionError,
    NoSolutionError,
    ParameterError,
)
from reglosslib.image import rotate_bilinear
from reglosslib.registration import (
    AngleGrid,
    RigidTransform,
    ScoreMap,
    apply_rigid,
    bipc,
    circular_cross_correlation,
    circular_mse,
    find_peak,
    masked_cc,
    masked_mse,
    phase_correlation,
    register_rigid,
    register_translation,
)

# ---------------------------------------------------------------------------
# spatial-domain oracles


def circular_cc_oracle(f, g):
    """Direct double-loop evaluation of the cyclic correlation sum."""
    h, w = f.shape
    out = np.zeros((h, w))
    for a in range(h):
        for b in range(w):
            total = 0.0
            for u in range(h):
                for v in range(w):
                    total += f[(u - a) % h, (v - b) % w] * g[u, v]
            out[a, b] = total
    return out


def circular_mse_oracle(f, g):
    h, w = f.shape
    out = np.zeros((h, w))
    for a in range(h):
        for b in range(w):
            total = 0.0
            for u in range(h):
                for v in range(w):
                    total += (f[(u - a) % h, (v - b) % w] - g[u, v]) ** 2
            out[a, b] = total / (h * w)
    return out


def masked_oracle(f, mf, g, mg, kind):
    """Sliding-window overlap-aware MSE / CC over every placement of g in f."""
    hf, wf = f.shape
    hg, wg = g.shape
    values = {}
    counts = {}
    for a in range(-(hg - 1), hf):
        for b in range(-(wg - 1), wf):
            total = 0.0
            n = 0
            for u in range(max(0, a), min(hf, a + hg)):
                for v in range(max(0, b), min(wf, b + wg)):
                    if mf[u, v] > 0 and mg[u - a, v - b] > 0:
                        n += 1
                        if kind == "mse":
                            total += (f[u, v] - g[u - a, v - b]) ** 2
                        else:
                            total += f[u, v] * g[u - a, v - b]
            counts[(a, b)] = n
            values[(a, b)] = total / n if n else None
    return values, counts


def rect_overlap(hf, wf, hg, wg, a, b):
    """Closed-form overlap pixel count of two full rectangles at placement (a, b)."""
    rows = min(hf, a + hg) - max(0, a)
    cols = min(wf, b + wg) - max(0, b)
    return max(rows, 0) * max(cols, 0)


# ---------------------------------------------------------------------------
# circular family


class TestCircularCC:
    def test_delta_correlation(self):
        f = np.zeros((2, 2))
        f[0, 0] = 1.0
        m = circular_cross_correlation(f, f)
        assert m.value_at(0, 0) == pytest.approx(1.0)
        bounds = m.shift_bounds()
        for a in range(bounds[0][0], bounds[0][1] + 1):
            for b in range(bounds[1][0], bounds[1][1] + 1):
                if (a, b) != (0, 0):
                    assert m.value_at(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_zero_shift_is_energy(self):
        rng = np.random.default_rng(0)
        f = rng.uniform(-1, 1, (6, 7))
        m = circular_cross_correlation(f, f)
        assert m.value_at(0, 0) == pytest.approx(float(np.sum(f * f)), rel=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        f = rng.uniform(0, 1, (8, 8))
        g = rng.uniform(0, 1, (8, 8))
        m = circular_cross_correlation(f, g)
        oracle = circular_cc_oracle(f, g)
        for a in range(8):
            for b in range(8):
                sa = a if a < 4 else a - 8
                sb = b if b < 4 else b - 8
                assert m.value_at(sa, sb) == pytest.approx(oracle[a, b], rel=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            circular_cross_correlation(np.ones((4, 4)), np.ones((5, 4)))

    def test_roll_peak(self):
        rng = np.random.default_rng(2)
        f = rng.uniform(0, 1, (16, 16))
        g = np.roll(f, (3, 5), axis=(0, 1))
        assert find_peak(circular_cross_correlation(f, g))[:2] == (3, 5)


class TestCircularMSE:
    def test_identical_images_zero_at_origin(self):
        rng = np.random.default_rng(3)
        f = rng.uniform(0, 1, (5, 9))
        m = circular_mse(f, f)
        assert m.value_at(0, 0) == pytest.approx(0.0, abs=1e-12)

    def test_origin_equals_plain_mse(self):
        rng = np.random.default_rng(4)
        f = rng.uniform(0, 255, (12, 12))
        g = rng.uniform(0, 255, (12, 12))
        m = circular_mse(f, g)
        assert m.value_at(0, 0) == pytest.approx(float(np.mean((f - g) ** 2)), rel=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        f = rng.uniform(0, 1, (8, 8))
        g = rng.uniform(0, 1, (8, 8))
        m = circular_mse(f, g)
        oracle = circular_mse_oracle(f, g)
        for a in range(8):
            for b in range(8):
                sa = a if a < 4 else a - 8
                sb = b if b < 4 else b - 8
                assert m.value_at(sa, sb) == pytest.approx(oracle[a, b], rel=1e-9)

    @given(seed=st.integers(0, 2**16), h=st.integers(8, 32), w=st.integers(8, 32))
    @settings(max_examples=40, deadline=None)
    def test_argmax_cc_equals_argmin_mse(self, seed, h, w):
        rng = np.random.default_rng(seed)
        f = rng.uniform(0, 1, (h, w))
        g = rng.uniform(0, 1, (h, w))
        assert (
            find_peak(circular_cross_correlation(f, g))[:2]
            == find_peak(circular_mse(f, g))[:2]
        )


class TestMaskedMSE:
    def test_exact_crop_minimum(self):
        rng = np.random.default_rng(6)
        f = rng.uniform(0, 1, (10, 10))
        g = f[2:6, 3:8].copy()
        m = masked_mse(f, np.ones_like(f), g, np.ones_like(g))
        a, b, score = find_peak(m)
        assert (a, b) == (2, 3)
        assert score == pytest.approx(0.0, abs=1e-12)

    def test_matches_sliding_window_oracle(self):
        rng = np.random.default_rng(7)
        f = rng.uniform(0, 1, (3, 3))
        g = rng.uniform(0, 1, (2, 2))
        m = masked_mse(f, np.ones_like(f), g, np.ones_like(g))
        oracle, counts = masked_oracle(f, np.ones_like(f), g, np.ones_like(g), "mse")
        for (a, b), val in oracle.items():
            assert m.overlap_counts[m.origin[0] + a, m.origin[1] + b] == counts[(a, b)]
            if val is not None:
                assert m.value_at(a, b) == pytest.approx(val, rel=1e-9)

    def test_partial_masks_match_oracle(self):
        rng = np.random.default_rng(8)
        f = rng.uniform(0, 1, (6, 5))
        g = rng.uniform(0, 1, (4, 4))
        mf = (rng.uniform(size=f.shape) > 0.3).astype(float)
        mg = (rng.uniform(size=g.shape) > 0.3).astype(float)
        m = masked_mse(f, mf, g, mg)
        oracle, counts = masked_oracle(f, mf, g, mg, "mse")
        for (a, b), val in oracle.items():
            i, j = m.origin[0] + a, m.origin[1] + b
            assert m.overlap_counts[i, j] == counts[(a, b)]
            if val is not None and counts[(a, b)] >= 1:
                assert m.value_at(a, b) == pytest.approx(val, rel=1e-9, abs=1e-12)

    def test_full_overlap_count_for_small_pair(self):
        f = np.zeros((3, 3))
        g = np.zeros((2, 2))
        m = masked_mse(f + 1, np.ones_like(f), g + 1, np.ones_like(g))
        # placements where g lies fully inside f have overlap 4
        for a in (0, 1):
            for b in (0, 1):
                assert m.overlap_counts[m.origin[0] + a, m.origin[1] + b] == 4

    def test_overlap_counts_closed_form(self):
        rng = np.random.default_rng(9)
        f = rng.uniform(size=(7, 6))
        g = rng.uniform(size=(4, 5))
        m = masked_mse(f, np.ones_like(f), g, np.ones_like(g))
        (alo, ahi), (blo, bhi) = m.shift_bounds()
        for a in range(alo, ahi + 1):
            for b in range(blo, bhi + 1):
                expected = rect_overlap(7, 6, 4, 5, a, b)
                assert m.overlap_counts[m.origin[0] + a, m.origin[1] + b] == expected

    def test_min_overlap_marks_invalid(self):
        rng = np.random.default_rng(10)
        f = rng.uniform(size=(5, 5))
        g = rng.uniform(size=(3, 3))
        m = masked_mse(f, np.ones_like(f), g, np.ones_like(g), min_overlap=4)
        assert not m.valid[m.origin[0] - 2, m.origin[1] - 2]  # 1-px corner overlap
        assert m.valid[m.origin[0], m.origin[1]]

    def test_empty_mask_rejected(self):
        with pytest.raises(DegenerateInputError):
            masked_mse(np.ones((3, 3)), np.zeros((3, 3)), np.ones((2, 2)), np.ones((2, 2)))


class TestMaskedCC:
    def test_exact_crop_peak(self):
        rng = np.random.default_rng(11)
        base = np.zeros((16, 16))
        # structured, nonnegative, mean-free-ish texture so plain correlation peaks at truth
        base[4:6, 3:9] = 4.0
        base[9:14, 10:12] = 3.0
        base += rng.uniform(0, 0.2, base.shape)
        g = base[3:10, 2:11].copy()
        m = masked_cc(base, np.ones_like(base), g, np.ones_like(g), min_overlap=32)
        a, b, _ = find_peak(m)
        assert (a, b) == (3, 2)

    def test_zero_moving_gives_zero_map(self):
        f = np.random.default_rng(12).uniform(size=(5, 5))
        m = masked_cc(f, np.ones_like(f), np.zeros((3, 3)), np.ones((3, 3)))
        assert np.allclose(m.values[m.valid], 0.0, atol=1e-12)

    def test_equal_shape_origin_is_mean_product(self):
        rng = np.random.default_rng(13)
        f = rng.uniform(size=(6, 6))
        g = rng.uniform(size=(6, 6))
        m = masked_cc(f, np.ones_like(f), g, np.ones_like(g))
        assert m.value_at(0, 0) == pytest.approx(float(np.mean(f * g)), rel=1e-12)

    def test_matches_sliding_window_oracle(self):
        rng = np.random.default_rng(14)
        f = rng.uniform(size=(5, 6))
        g = rng.uniform(size=(4, 3))
        m = masked_cc(f, np.ones_like(f), g, np.ones_like(g))
        oracle, _ = masked_oracle(f, np.ones_like(f), g, np.ones_like(g), "cc")
        for (a, b), val in oracle.items():
            if val is not None:
                assert m.value_at(a, b) == pytest.approx(val, rel=1e-9)


class TestPhaseCorrelation:
    def test_roll_recovery_peak_value(self):
        rng = np.random.default_rng(15)
        f = rng.uniform(0, 1, (32, 32))
        g = np.roll(f, (3, 5), axis=(0, 1))
        m = phase_correlation(f, g, windowed=False)
        a, b, score = find_peak(m)
        assert (a, b) == (3, 5)
        assert score == pytest.approx(1.0, abs=1e-9)

    def test_identity_peak_at_origin(self):
        rng = np.random.default_rng(16)
        f = rng.uniform(0, 1, (16, 16))
        assert find_peak(phase_correlation(f, f))[:2] == (0, 0)

    def test_windowed_subtile_shift(self):
        rng = np.random.default_rng(17)
        f = rng.uniform(0, 255, (64, 64))
        g = np.roll(f, (-7, 11), axis=(0, 1))
        assert find_peak(phase_correlation(f, g, windowed=True))[:2] == (-7, 11)

    @given(seed=st.integers(0, 2**16))
    @settings(max_examples=25, deadline=None)
    def test_peak_magnitude_bounded(self, seed):
        rng = np.random.default_rng(seed)
        f = rng.uniform(0, 1, (12, 12))
        g = rng.uniform(0, 1, (12, 12))
        m = phase_correlation(f, g, windowed=bool(seed % 2))
        assert np.max(np.abs(m.values)) <= 1.0 + 1e-6

    def test_constant_images_finite(self):
        m = phase_correlation(np.full((8, 8), 3.0), np.full((8, 8), 5.0), windowed=False)
        assert np.all(np.isfinite(m.values))


class TestBipc:
    def test_identity_peak(self):
        rng = np.random.default_rng(18)
        f = rng.uniform(0, 1, (20, 20))
        assert find_peak(bipc(f, f))[:2] == (0, 0)

    def test_planted_shift_disambiguated(self):
        rng = np.random.default_rng(19)
        f = rng.uniform(0, 255, (32, 32))
        g = np.roll(f, (2, 0), axis=(0, 1))
        assert find_peak(bipc(f, g, windowed=False))[:2] == (2, 0)

    def test_shift_plus_symmetric_blur_recovered_where_pc_fails(self):
        import scipy.ndimage

        from reglosslib.bench import generate_texture

        def wrap_blur(img, sigma, size):
            # centrally symmetric blur on the periodic domain, so the
            # blur-invariance model holds exactly
            r = (size - 1) // 2
            taps = np.exp(-np.arange(-r, r + 1) ** 2 / (2.0 * sigma**2))
            taps /= taps.sum()
            out = scipy.ndimage.convolve1d(img, taps, axis=0, mode="wrap")
            return scipy.ndimage.convolve1d(out, taps, axis=1, mode="wrap")

        hits_bipc = 0
        hits_pc = 0
        for trial in range(6):
            rng = np.random.default_rng(trial + 300)
            tex = generate_texture(128, 128, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
            g = wrap_blur(np.roll(tex, (3, 3), axis=(0, 1)), 8.0, 17)
            ab = find_peak(bipc(tex, g, windowed=True))[:2]
            hits_bipc += ab == (3, 3)
            ap = find_peak(phase_correlation(tex, g, windowed=True))[:2]
            hits_pc += ap == (3, 3)
        assert hits_bipc >= 5
        assert hits_bipc > hits_pc


class TestFindPeak:
    def _map(self, values, objective="minimize"):
        v = np.asarray(values, dtype=float)
        return ScoreMap(
            values=v,
            valid=np.ones(v.shape, dtype=bool),
            origin=(v.shape[0] // 2, v.shape[1] // 2),
            objective=objective,
            metric="mse",
        )

    def test_unique_minimum(self):
        v = np.ones((7, 7))
        m = self._map(v)
        m.values[m.origin[0] + 2, m.origin[1] - 1] = -5.0
        assert find_peak(m) == (2, -1, -5.0)

    def test_all_equal_tie_breaks_to_origin(self):
        m = self._map(np.zeros((5, 5)))
        assert find_peak(m)[:2] == (0, 0)

    def test_tie_break_ordering(self):
        m = self._map(np.ones((5, 5)))
        m.values[m.origin[0] - 1, m.origin[1]] = 0.0  # (-1, 0)
        m.values[m.origin[0] + 1, m.origin[1]] = 0.0  # (+1, 0)
        assert find_peak(m)[:2] == (-1, 0)  # same |a|+|b|, smaller a wins

    def test_region_excludes_global_optimum(self):
        m = self._map(np.ones((7, 7)))
        m.values[m.origin[0] + 3, m.origin[1] + 3] = -9.0
        m.values[m.origin[0], m.origin[1] + 1] = 0.5
        a, b, s = find_peak(m, region=((-1, 1), (-1, 1)))
        assert (a, b, s) == (0, 1, 0.5)

    def test_empty_region_raises(self):
        m = self._map(np.ones((3, 3)))
        m.valid[:] = False
        with pytest.raises(NoSolutionError):
            find_peak(m)

    def test_boolean_region_mask(self):
        m = self._map(np.ones((5, 5)))
        m.values[0, 0] = -1.0
        sel = np.zeros((5, 5), dtype=bool)
        sel[m.origin] = True
        assert find_peak(m, region=sel)[:2] == (0, 0)


class TestAngleGrid:
    def test_default_has_31_angles(self):
        grid = AngleGrid()
        assert grid.angles().size == 31
        assert grid.angles()[0] == -7.5 and grid.angles()[-1] == 7.5

    def test_zero_always_included_when_bracketing(self):
        assert 0.0 in AngleGrid(-0.3, 0.3, 0.2).angles()

    def test_bad_step_rejected(self):
        with pytest.raises(ParameterError):
            AngleGrid(0.0, 1.0, 0.0)


class TestRegisterTranslation:
    def _fixture(self, seed, shift=(5, 3), size=32, tile=16):
        rng = np.random.default_rng(seed)
        from reglosslib.bench import generate_texture

        fixed = generate_texture(size, size, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
        c = (size - tile) // 2
        top, left = c + shift[0], c + shift[1]
        moving = fixed[top : top + tile, left : left + tile].copy()
        return fixed, moving

    def test_exact_crop_mse(self):
        fixed, moving = self._fixture(20)
        t = register_translation(fixed, moving, "mse")
        assert (t.du, t.dv) == (5, 3)
        assert t.score == pytest.approx(0.0, abs=1e-9)
        assert t.theta == 0.0

    def test_identity_all_metrics(self):
        rng = np.random.default_rng(21)
        fixed = rng.uniform(0, 255, (32, 32))
        for metric in ("mse", "cc", "mse_circ", "cc_circ", "pc", "bipc"):
            t = register_translation(fixed, fixed.copy(), metric)
            assert (t.du, t.dv) == (0, 0), metric

    def test_all_metrics_recover_planted_crop(self):
        # the correlation metrics search under the containment region the
        # benchmark protocol uses; PC/BIPC take the unconstrained argmax.
        # Plain CC needs real area before its peak dominates regional
        # fluctuation, so it runs on a larger frame than the others.
        for metric in ("mse", "cc", "pc", "bipc"):
            size, tile = (128, 64) if metric == "cc" else (64, 32)
            m = (size - tile) // 2
            region = ((-m, m), (-m, m)) if metric in ("mse", "cc") else None
            tol = 0 if metric == "mse" else 1
            hits = 0
            for seed in range(10):
                fixed, moving = self._fixture(400 + seed, shift=(-4, 6), size=size, tile=tile)
                t = register_translation(fixed, moving, metric, region=region)
                hits += max(abs(t.du + 4), abs(t.dv - 6)) <= tol
            assert hits >= 9, metric

    def test_region_constraint(self):
        fixed, moving = self._fixture(22, shift=(5, 3))
        t = register_translation(fixed, moving, "mse", region=((-2, 2), (-2, 2)))
        assert abs(t.du) <= 2 and abs(t.dv) <= 2

    def test_full_policy_equal_shapes_forces_origin(self):
        rng = np.random.default_rng(23)
        fixed = rng.uniform(size=(16, 16))
        moving = np.roll(fixed, (2, 1), axis=(0, 1))
        t = register_translation(fixed, moving, "mse", overlap="full")
        assert (t.du, t.dv) == (0, 0)


class TestRegisterRigid:
    def test_planted_rotation_and_shift(self):
        from reglosslib.bench import generate_texture

        rng = np.random.default_rng(24)
        source = generate_texture(200, 200, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
        moving = source[20:180, 20:180]  # 160x160 moving (plays the bigger target)
        planted = RigidTransform(du=7, dv=-10, theta=-3.0, score=0.0, metric="mse")
        fixed = apply_rigid(moving, planted, 96, 96)
        t = register_rigid(
            fixed, moving, "mse", AngleGrid(-7.5, 7.5, 0.5), overlap="full"
        )
        assert t.theta == pytest.approx(-3.0)
        assert abs(t.du - 7) <= 1 and abs(t.dv + 10) <= 1
        assert t.score < 1e-4

    def test_full_overlap_feasible_range(self):
        # 360 moving vs 260 fixed leaves exactly +-50 px of correction
        from reglosslib.registration import _centered_placement, _score_translation

        fixed = np.zeros((260, 260)) + 1.0
        moving = np.zeros((360, 360)) + 1.0
        m = masked_mse(fixed, np.ones_like(fixed), moving, np.ones_like(moving))
        full = m.overlap_counts >= 260 * 260
        rows = np.nonzero(full.any(axis=1))[0] - m.origin[0]
        pc = _centered_placement(260, 360)
        du = rows - pc
        assert du.min() == -50 and du.max() == 50

    def test_rotation_equivariance_on_grid(self):
        from reglosslib.bench import generate_texture

        rng = np.random.default_rng(25)
        source = generate_texture(160, 160, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
        moving = source[10:150, 10:150]
        fixed = apply_rigid(moving, RigidTransform(0, 0, 0.0, 0.0, "mse"), 80, 80)
        base = register_rigid(fixed, moving, "mse", AngleGrid(-2.0, 2.0, 1.0), overlap="full")
        pre, _ = rotate_bilinear(moving, 1.0, fill=0.0)
        pre_mask, _ = rotate_bilinear(np.ones_like(moving), 1.0, fill=0.0)
        t = register_rigid(
            fixed,
            pre,
            "mse",
            AngleGrid(-2.0, 2.0, 1.0),
            overlap="full",
            moving_mask=(pre_mask >= 1.0 - 1e-6).astype(float),
        )
        assert t.theta == pytest.approx(base.theta - 1.0)

    def test_infeasible_full_policy_raises(self):
        with pytest.raises(NoSolutionError):
            register_rigid(
                np.ones((32, 32)), np.ones((16, 16)), "mse", AngleGrid(0, 0, 1), "full"
            )

    def test_threads_match_serial(self):
        from reglosslib.bench import generate_texture

        rng = np.random.default_rng(26)
        source = generate_texture(120, 120, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
        moving = source[10:110, 10:110]
        fixed = apply_rigid(moving, RigidTransform(3, -2, 1.0, 0.0, "mse"), 60, 60)
        grid = AngleGrid(-2.0, 2.0, 0.5)
        t1 = register_rigid(fixed, moving, "mse", grid, "full", threads=1)
        t4 = register_rigid(fixed, moving, "mse", grid, "full", threads=4)
        assert (t1.du, t1.dv, t1.theta, t1.score) == (t4.du, t4.dv, t4.theta, t4.score)


class TestApplyRigid:
    def test_identity_is_center_crop(self):
        rng = np.random.default_rng(27)
        img = rng.uniform(size=(10, 10))
        out = apply_rigid(img, RigidTransform(0, 0, 0.0, 0.0, "mse"), 6, 6)
        np.testing.assert_array_equal(out, img[2:8, 2:8])

    def test_integer_shift_is_exact_copy(self):
        rng = np.random.default_rng(28)
        img = rng.uniform(size=(16, 16))
        out = apply_rigid(img, RigidTransform(5, 3, 0.0, 0.0, "mse"), 6, 6)
        np.testing.assert_array_equal(out, img[0:6, 2:8])

    def test_roundtrip_with_register_rigid(self):
        from reglosslib.bench import generate_texture

        rng = np.random.default_rng(29)
        source = generate_texture(200, 200, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
        moving = source[20:180, 20:180]
        planted = RigidTransform(du=-6, dv=4, theta=2.5, score=0.0, metric="mse")
        fixed = apply_rigid(moving, planted, 90, 90)
        t = register_rigid(fixed, moving, "mse", AngleGrid(-7.5, 7.5, 0.5), "full")
        aligned = apply_rigid(moving, t, 90, 90)
        interior = np.s_[8:-8, 8:-8]
        assert np.max(np.abs(aligned[interior] - fixed[interior])) < 1e-4

    def test_coverage_error_when_window_escapes(self):
        img = np.ones((8, 8))
        with pytest.raises(CoverageError):
            apply_rigid(img, RigidTransform(6, 0, 0.0, 0.0, "mse"), 6, 6)

    def test_coverage_error_on_rotated_corners(self):
        img = np.ones((12, 12))
        with pytest.raises(CoverageError):
            apply_rigid(img, RigidTransform(0, 0, 45.0, 0.0, "mse"), 12, 12)


class TestScoreMapExport:
    def test_save_writes_raster_and_sidecar(self, tmp_path):
        from reglosslib.raster import read_raster
        import json

        rng = np.random.default_rng(30)
        f = rng.uniform(size=(6, 6))
        m = circular_cross_correlation(f, f)
        out = tmp_path / "map.fras"
        m.save(out)
        np.testing.assert_allclose(read_raster(out), m.values)
        sidecar = json.loads((tmp_path / "map.fras.json").read_text())
        assert sidecar == {"origin": [3, 3], "metric": "cc_circ", "objective": "maximize"}
