import math

import numpy as np
import pytest

from relap import scene_builder as sb
from relap.data_model import ShoeBox, TrackFrame, TrackRecord, load_crop, save_crop
from relap.errors import NoPeriodicity, TooShort

from conftest import make_crop, make_track_record

FRAME_WIDTH = 960.0


class TestFilterTracks:
    def setup_method(self):
        self.cfg = sb.SceneConfig()

    def test_short_track_removed(self):
        track = make_track_record(n_frames=10, h0=100.0, w0=40.0)
        assert sb.filter_tracks([track], self.cfg, FRAME_WIDTH) == []

    def test_right_to_left_removed(self):
        track = make_track_record(n_frames=40, x0=800.0, speed=-15.0)
        assert sb.filter_tracks([track], self.cfg, FRAME_WIDTH) == []

    def test_full_crossing_kept(self):
        track = make_track_record(n_frames=40, speed=20.0, w0=40.0, h0=100.0)
        assert sb.filter_tracks([track], self.cfg, FRAME_WIDTH) == [track]

    def test_wrong_aspect_removed(self):
        track = make_track_record(n_frames=40, speed=20.0, w0=100.0, h0=50.0)
        assert sb.filter_tracks([track], self.cfg, FRAME_WIDTH) == []

    def test_small_displacement_removed(self):
        track = make_track_record(n_frames=40, speed=2.0)
        assert sb.filter_tracks([track], self.cfg, FRAME_WIDTH) == []

    def test_monotone_in_thresholds(self, rng):
        tracks = [
            make_track_record(track_id=i, n_frames=int(rng.integers(5, 80)),
                              speed=float(rng.uniform(-5, 25)),
                              w0=float(rng.uniform(20, 120)),
                              h0=float(rng.uniform(40, 200)))
            for i in range(30)
        ]
        strict = sb.SceneConfig()
        relaxed = sb.SceneConfig(min_track_frames=5, aspect_min=0.3, aspect_max=10.0,
                                 min_net_displacement_frac=0.1)
        kept_strict = {t.track_id for t in sb.filter_tracks(tracks, strict, FRAME_WIDTH)}
        kept_relaxed = {t.track_id for t in sb.filter_tracks(tracks, relaxed, FRAME_WIDTH)}
        assert kept_strict <= kept_relaxed


class TestStridePeriod:
    def test_constant_series(self):
        with pytest.raises(NoPeriodicity):
            sb.estimate_stride_period([40.0] * 100)

    def test_too_short(self):
        with pytest.raises(TooShort):
            sb.estimate_stride_period([40.0, 41.0, 40.0])

    def test_pure_sinusoid(self):
        t = np.arange(200)
        widths = 40 + 10 * np.sin(2 * np.pi * t / 40)
        assert abs(sb.estimate_stride_period(widths) - 40) <= 1

    def test_noisy_sinusoid(self):
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            t = np.arange(200)
            widths = 40 + 10 * np.sin(2 * np.pi * t / 20) + rng.normal(0, 0.5, size=200)
            if abs(sb.estimate_stride_period(widths) - 20) <= 2:
                hits += 1
        assert hits >= 95

    def test_affine_invariance(self, rng):
        t = np.arange(160)
        widths = 50 + 12 * np.sin(2 * np.pi * t / 33) + rng.normal(0, 0.3, size=160)
        base = sb.estimate_stride_period(widths)
        for a, b in [(2.5, 7.0), (0.3, -40.0), (10.0, 1000.0)]:
            assert abs(sb.estimate_stride_period(a * widths + b) - base) <= 1

    def test_linear_trend_removed(self):
        t = np.arange(200)
        widths = 40 + 0.5 * t + 8 * np.sin(2 * np.pi * t / 25)
        assert abs(sb.estimate_stride_period(widths) - 25) <= 1

    def test_noise_only_rejected(self, rng):
        widths = 40 + rng.normal(0, 1, size=200)
        with pytest.raises(NoPeriodicity):
            sb.estimate_stride_period(widths)


class TestTwoStepSequence:
    def test_identity_resampling(self):
        track = make_track_record(n_frames=16)
        assert sb.extract_two_step_sequence(track, period=8, n=16) == tuple(range(16))

    def test_hand_computed_window(self):
        # length 80, period 20: window is frames 20..59; positions
        # 20 + round(i * 39 / 15) for i in 0..15
        track = make_track_record(n_frames=80)
        expected = tuple(20 + int(math.floor(i * 39 / 15 + 0.5)) for i in range(16))
        got = sb.extract_two_step_sequence(track, period=20, n=16)
        assert got == expected
        assert got[0] == 20 and got[-1] == 59

    def test_too_short(self):
        track = make_track_record(n_frames=30)
        with pytest.raises(TooShort):
            sb.extract_two_step_sequence(track, period=20, n=16)

    def test_strictly_increasing_always(self):
        for length in (16, 17, 20, 33, 80, 200):
            for period in (8, 10, 16, 40):
                if length < 2 * period:
                    continue
                idxs = sb.extract_two_step_sequence(make_track_record(n_frames=length), period, 16)
                assert len(idxs) == 16
                assert all(b > a for a, b in zip(idxs, idxs[1:]))
                assert 0 <= idxs[0] and idxs[-1] < length


class TestSelectShoe:
    def test_highest_confidence_wins(self):
        track = make_track_record(n_frames=40, shoe_confs={5: 0.3, 12: 0.9, 20: 0.5})
        sel = sb.select_shoe(track)
        assert sel.conf == 0.9 and sel.frame_pos == 12

    def test_no_shoes(self):
        assert sb.select_shoe(make_track_record(n_frames=10)) is None

    def test_tie_breaks_to_earliest_frame(self):
        track = make_track_record(n_frames=40, shoe_confs={10: 0.7, 12: 0.7})
        assert sb.select_shoe(track).frame_pos == 10

    def test_tie_breaks_to_smallest_x(self):
        frames = []
        bbox = (100.0, 50.0, 40.0, 100.0)
        shoes = (ShoeBox((130.0, 140.0, 10.0, 8.0), 0.7), ShoeBox((105.0, 140.0, 10.0, 8.0), 0.7))
        frames.append(TrackFrame(0, bbox, "c0.png", shoes))
        track = TrackRecord(track_id=1, video_id="v0", frames=tuple(frames))
        assert sb.select_shoe(track).bbox[0] == 105.0


class TestCutShoeCrop:
    def test_cuts_local_region(self):
        crop = make_crop(40, 100, color=(10, 20, 30))
        out = sb.cut_shoe_crop(crop, person_bbox=(100.0, 50.0, 40.0, 100.0),
                               shoe_bbox=(110.0, 130.0, 12.0, 8.0))
        assert out.width == 12 and out.height == 8
        assert tuple(out.pixels[0, 0]) == (10, 20, 30)

    def test_out_of_bounds_returns_none(self):
        crop = make_crop(40, 100)
        assert sb.cut_shoe_crop(crop, (100.0, 50.0, 40.0, 100.0), (0.0, 0.0, 5.0, 5.0)) is None


class TestBuildScenes:
    def test_empty(self):
        assert sb.build_scenes([], sb.SceneConfig(), FRAME_WIDTH) == []

    def test_scene_fields_and_flags(self):
        periodic = make_track_record(track_id=1, n_frames=60, speed=12.0, period=15,
                                     start_frame=100)
        flat = make_track_record(track_id=2, n_frames=60, speed=12.0, start_frame=400)
        scenes = sb.build_scenes([periodic, flat], sb.SceneConfig(), FRAME_WIDTH)
        assert [s.scene_id for s in scenes] == ["v0:1", "v0:2"]
        first, second = scenes
        assert first.start_frame == 100 and first.period == 15
        assert len(first.two_step_indices) == 16
        assert second.two_step_indices is None
        assert sb.FLAG_NO_PERIODICITY in second.flags

    def test_shoe_crop_written(self, tmp_path):
        track = make_track_record(track_id=3, n_frames=60, speed=12.0, period=15,
                                  shoe_confs={30: 0.85})
        for frame in track.frames:
            save_crop(make_crop(int(frame.bbox[2]), int(frame.bbox[3])),
                      tmp_path / frame.crop_ref)
        scenes = sb.build_scenes([track], sb.SceneConfig(), FRAME_WIDTH, data_root=tmp_path)
        assert len(scenes) == 1
        shoe = scenes[0].shoe_crop
        assert shoe is not None and shoe.conf == 0.85
        img = load_crop(tmp_path / shoe.crop_ref)
        assert img.width > 0 and img.height > 0

    def test_two_runner_crossings_give_two_scenes(self):
        tracks = [
            make_track_record(track_id=1, n_frames=50, speed=16.0, period=12, start_frame=0),
            make_track_record(track_id=2, n_frames=50, speed=16.0, period=12, start_frame=2000),
        ]
        scenes = sb.build_scenes(tracks, sb.SceneConfig(), FRAME_WIDTH)
        assert len(scenes) == 2
        assert all(len(s.two_step_indices) == 16 for s in scenes)
