import numpy as np
import pytest

from relap import color_features as cf
from relap.data_model import CropImage, EmbeddingSet, save_crop
from relap.errors import EmptyForeground, LengthMismatch

from conftest import make_crop, make_scene


def oracle_nn_index(i, src, dst):
    """Independent reimplementation of center-aligned nearest sampling with
    exact halves resolved toward the image center."""
    pos = (i + 0.5) * src / dst - 0.5
    lo = int(np.floor(pos))
    frac = pos - lo
    if abs(frac - 0.5) < 1e-9:
        idx = lo + (1 if i >= dst / 2 else 0)
    elif frac > 0.5:
        idx = lo + 1
    else:
        idx = lo
    return min(max(idx, 0), src - 1)


def oracle_histogram(pixels):
    """Per-pixel counting with explicit loops, independent of numpy paths."""
    counts = [0.0] * 24
    n_fg = 0
    for row in pixels:
        for r, g, b in row:
            if r == 0 and g == 0 and b == 0:
                continue
            n_fg += 1
            counts[int(r) // 32] += 1
            counts[8 + int(g) // 32] += 1
            counts[16 + int(b) // 32] += 1
    if n_fg == 0:
        raise EmptyForeground("oracle: empty")
    return counts


class TestRgbHistogram:
    def test_all_black_raises(self):
        with pytest.raises(EmptyForeground):
            cf.rgb_histogram(make_crop(2, 2, background_rows=2))

    def test_single_red_pixel(self):
        px = np.zeros((3, 3, 3), dtype=np.uint8)
        px[1, 1] = (255, 0, 0)
        hist = cf.rgb_histogram(CropImage(px))
        expected = np.zeros(24)
        expected[7] = 1    # R bin 7
        expected[8] = 1    # G bin 0
        expected[16] = 1   # B bin 0
        assert np.array_equal(hist, expected)

    def test_four_gray_pixels(self):
        px = np.full((2, 2, 3), 128, dtype=np.uint8)
        hist = cf.rgb_histogram(CropImage(px))
        expected = np.zeros(24)
        expected[4] = expected[12] = expected[20] = 4  # 128 // 32 == 4
        assert np.array_equal(hist, expected)

    def test_sum_equals_three_times_foreground(self, rng):
        for _ in range(30):
            h, w = int(rng.integers(1, 40)), int(rng.integers(1, 40))
            px = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            px[rng.random(size=(h, w)) < 0.3] = 0
            img = CropImage(px)
            n_fg = int(img.foreground_mask().sum())
            if n_fg == 0:
                continue
            assert cf.rgb_histogram(img).sum() == 3 * n_fg

    def test_permutation_invariance(self, rng):
        px = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        flat = px.reshape(-1, 3)
        shuffled = flat[rng.permutation(len(flat))].reshape(8, 8, 3)
        assert np.array_equal(cf.rgb_histogram(CropImage(px)),
                              cf.rgb_histogram(CropImage(shuffled)))

    def test_matches_oracle(self, rng):
        px = rng.integers(0, 256, size=(11, 7, 3), dtype=np.uint8)
        px[0] = 0
        assert np.array_equal(cf.rgb_histogram(CropImage(px)), oracle_histogram(px))


class TestResize:
    def test_identity(self, rng):
        px = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        out = cf.nearest_resize(CropImage(px), (64, 64))
        assert np.array_equal(out.pixels, px)

    def test_matches_oracle_indexing(self, rng):
        for src_h, src_w in [(128, 128), (96, 48), (100, 200), (31, 57)]:
            px = rng.integers(0, 256, size=(src_h, src_w, 3), dtype=np.uint8)
            out = cf.nearest_resize(CropImage(px), (64, 64))
            for i in (0, 13, 37, 63):
                for j in (0, 21, 63):
                    si = oracle_nn_index(i, src_h, 64)
                    sj = oracle_nn_index(j, src_w, 64)
                    assert np.array_equal(out.pixels[i, j], px[si, sj])


class TestUpperBodyHist:
    def test_only_upper_half_counted(self):
        px = np.zeros((64, 64, 3), dtype=np.uint8)
        px[:32] = (200, 0, 0)
        px[32:] = (0, 0, 200)
        hist = cf.upper_body_hist(CropImage(px))
        assert hist[6] == 2048            # red 200 -> bin 6, 32*64 pixels
        assert hist[16:].sum() == 2048    # blue channel of red pixels -> bin 0
        assert hist[16 + 6] == 0          # no "blue 200" mass

    def test_64x64_is_identity(self, rng):
        px = rng.integers(1, 256, size=(64, 64, 3), dtype=np.uint8)
        img = CropImage(px)
        assert np.array_equal(cf.upper_body_hist(img),
                              cf.rgb_histogram(CropImage(px[:32])))

    def test_two_tone_matches_per_pixel_oracle(self, rng):
        px = np.zeros((128, 128, 3), dtype=np.uint8)
        px[:64] = (50, 180, 20)
        px[64:] = (10, 10, 240)
        px[rng.random(size=(128, 128)) < 0.2] = 0
        out = cf.upper_body_hist(CropImage(px))
        downsampled = [[px[oracle_nn_index(i, 128, 64), oracle_nn_index(j, 128, 64)]
                        for j in range(64)] for i in range(32)]
        assert np.array_equal(out, oracle_histogram(downsampled))

    def test_mirror_invariance(self, rng):
        for w in (32, 48, 64, 96, 128):
            px = rng.integers(0, 256, size=(96, w, 3), dtype=np.uint8)
            img = CropImage(px)
            mirrored = CropImage(px[:, ::-1])
            assert np.array_equal(cf.upper_body_hist(img), cf.upper_body_hist(mirrored))

    def test_all_black_raises(self):
        with pytest.raises(EmptyForeground):
            cf.upper_body_hist(make_crop(32, 32, background_rows=32))


class TestShoeHist:
    def test_uniform_white(self):
        hist = cf.shoe_hist(make_crop(37, 23, color=(255, 255, 255)))
        assert hist[7] == hist[15] == hist[23] == 20000  # 200 x 100 pixels

    def test_all_black_raises(self):
        with pytest.raises(EmptyForeground):
            cf.shoe_hist(make_crop(10, 10, background_rows=10))

    def test_already_200x100_is_identity(self, rng):
        px = rng.integers(1, 256, size=(100, 200, 3), dtype=np.uint8)
        img = CropImage(px)
        assert np.array_equal(cf.shoe_hist(img), cf.rgb_histogram(img))


class TestMeanPool:
    def test_two_unit_vectors(self):
        assert np.array_equal(cf.mean_pool([(1.0, 0.0), (0.0, 1.0)]), [0.5, 0.5])

    def test_identical_vectors_exact(self):
        v = (0.123456789, -7.25, 3.5)
        pooled = cf.mean_pool([v] * 5)
        assert tuple(pooled) == v

    def test_permutation_invariant(self, rng):
        vecs = [tuple(rng.normal(size=8)) for _ in range(6)]
        a = cf.mean_pool(vecs)
        b = cf.mean_pool(vecs[::-1])
        assert np.allclose(a, b, atol=1e-15)

    def test_mismatched_lengths(self):
        with pytest.raises(LengthMismatch):
            cf.mean_pool([(1.0,), (1.0, 2.0)])

    def test_empty_group(self):
        with pytest.raises(LengthMismatch):
            cf.mean_pool([])


class TestFeaturizeScenes:
    def _write_scene_crops(self, tmp_path, scene, color):
        for frame in scene.frames:
            save_crop(make_crop(16, 32, color=color), tmp_path / frame.crop_ref)

    def test_distinct_colors_give_disjoint_support(self, tmp_path):
        # every channel falls in a different bin across the three colors
        colors = [(224, 96, 32), (32, 224, 96), (96, 32, 224)]
        scenes = [make_scene(f"v0:{i}", start_frame=i * 100) for i in range(3)]
        for scene, color in zip(scenes, colors):
            self._write_scene_crops(tmp_path, scene, color)
        bundles, skipped = cf.featurize_scenes(scenes, tmp_path)
        assert not skipped and len(bundles) == 3
        supports = [frozenset(np.nonzero(b.body_hist)[0]) for b in bundles]
        for i in range(3):
            for j in range(i + 1, 3):
                assert not (supports[i] & supports[j])

    def test_scene_without_shoe_has_no_shoe_hist(self, tmp_path):
        scene = make_scene()
        self._write_scene_crops(tmp_path, scene, (120, 60, 40))
        bundles, _ = cf.featurize_scenes([scene], tmp_path)
        assert bundles[0].shoe_hist is None

    def test_background_only_scene_skipped(self, tmp_path):
        scene = make_scene()
        for frame in scene.frames:
            save_crop(make_crop(8, 8, background_rows=8), tmp_path / frame.crop_ref)
        bundles, skipped = cf.featurize_scenes([scene], tmp_path)
        assert bundles == [] and skipped == [scene.scene_id]

    def test_per_frame_embeddings_pooled(self, tmp_path):
        scene = make_scene()
        self._write_scene_crops(tmp_path, scene, (10, 200, 10))
        per_frame = EmbeddingSet("hhcl_runner", True, {scene.scene_id: ((2.0, 0.0), (0.0, 2.0))})
        per_scene = EmbeddingSet("gruae", False, {scene.scene_id: (9.0, 9.0)})
        bundles, _ = cf.featurize_scenes([scene], tmp_path, [per_frame, per_scene])
        assert bundles[0].embeddings["hhcl_runner"] == (1.0, 1.0)
        assert bundles[0].embeddings["gruae"] == (9.0, 9.0)

    def test_worker_count_does_not_change_output(self, tmp_path):
        scenes = [make_scene(f"v0:{i}", start_frame=i * 100) for i in range(4)]
        for i, scene in enumerate(scenes):
            self._write_scene_crops(tmp_path, scene, (40 + 30 * i, 80, 200 - 30 * i))
        serial, _ = cf.featurize_scenes(scenes, tmp_path, workers=1)
        parallel, _ = cf.featurize_scenes(scenes, tmp_path, workers=4)
        assert serial == parallel
