"""Overlap metric, phantom generator, and evaluation reports."""

from __future__ import annotations

import json

import numpy as np
import pytest

from sphereseg.evalkit import (
    EvalCase,
    MetricStats,
    dice,
    evaluate_manifest,
    make_phantom,
    mask_volume_cm3,
    summarize,
)
from sphereseg.volume import GeometryMismatch, Mask3D, save_mask


def _mask(data, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    data = np.asarray(data, dtype=bool)
    return Mask3D(dims=data.shape, spacing=spacing, origin=origin, data=data)


def _cube_mask(n, true_slice):
    data = np.zeros((n, n, n), dtype=bool)
    data[true_slice] = True
    return _mask(data)


class TestDice:
    def test_identical_masks_give_one(self):
        m = _cube_mask(8, np.s_[2:6, 2:6, 2:6])
        assert dice(m, m) == 1.0

    def test_disjoint_masks_give_zero(self):
        a = _cube_mask(8, np.s_[0:2, :, :])
        b = _cube_mask(8, np.s_[6:8, :, :])
        assert dice(a, b) == 0.0

    def test_fraction_example(self):
        # |A| = 4, |B| = 4, |A & B| = 3 -> 2*3/8 = 0.75
        a = _cube_mask(4, np.s_[0, 0, 0:4])
        bdata = np.zeros((4, 4, 4), bool)
        bdata[0, 0, 1:4] = True
        bdata[1, 0, 0] = True
        assert dice(a, _mask(bdata)) == 0.75

    def test_exact_point_eight(self):
        # |A| = |B| = 5, overlap 4 -> 2*4/10 = 0.8
        a = _cube_mask(8, np.s_[0, 0, 0:5])
        b = _cube_mask(8, np.s_[0, 0, 1:6])
        assert dice(a, b) == 0.8

    def test_symmetry_on_random_pairs(self, rng):
        for _ in range(50):
            a = _mask(rng.random((6, 6, 6)) < 0.4)
            b = _mask(rng.random((6, 6, 6)) < 0.4)
            if not (a.data.any() or b.data.any()):
                continue
            assert dice(a, b) == dice(b, a)

    def test_one_only_for_equal_masks(self, rng):
        for _ in range(25):
            a = _mask(rng.random((6, 6, 6)) < 0.5)
            b = _mask(rng.random((6, 6, 6)) < 0.5)
            if not (a.data.any() or b.data.any()):
                continue
            d = dice(a, b)
            assert (d == 1.0) == np.array_equal(a.data, b.data)
            assert 0.0 <= d <= 1.0

    def test_spacing_cancels(self, rng):
        data_a = rng.random((6, 6, 6)) < 0.4
        data_b = rng.random((6, 6, 6)) < 0.4
        d1 = dice(_mask(data_a), _mask(data_b))
        d2 = dice(_mask(data_a, spacing=(2.0, 0.5, 3.0)),
                  _mask(data_b, spacing=(2.0, 0.5, 3.0)))
        assert d1 == d2

    def test_geometry_mismatch_rejected(self):
        a = _cube_mask(8, np.s_[0:2, :, :])
        b = _mask(np.ones((8, 8, 8), bool), spacing=(2.0, 1.0, 1.0))
        with pytest.raises(GeometryMismatch):
            dice(a, b)

    def test_two_empty_masks_rejected(self):
        a = _mask(np.zeros((4, 4, 4), bool))
        with pytest.raises(ValueError):
            dice(a, a)

    def test_one_empty_mask_gives_zero(self):
        a = _mask(np.zeros((4, 4, 4), bool))
        b = _cube_mask(4, np.s_[1, 1, 1])
        assert dice(a, b) == 0.0


class TestMaskVolume:
    def test_thousand_unit_voxels_is_one_cm3(self):
        data = np.zeros((10, 10, 10), bool)
        data.flat[:1000] = True
        assert mask_volume_cm3(_mask(data)) == 1.0

    def test_empty_mask_zero(self):
        assert mask_volume_cm3(_mask(np.zeros((4, 4, 4), bool))) == 0.0

    def test_anisotropic_voxel_volume(self):
        data = np.zeros((4, 4, 4), bool)
        data[0, 0, 0] = True
        m = _mask(data, spacing=(2.0, 2.5, 4.0))
        assert mask_volume_cm3(m) == pytest.approx(0.02)

    def test_sphere_truth_volume_near_analytic(self, sphere128):
        _, truth = sphere128
        analytic = 4.0 / 3.0 * np.pi * 20.0 ** 3 / 1000.0  # 33.51 cm3
        assert mask_volume_cm3(truth) == pytest.approx(analytic, rel=0.02)


class TestMakePhantom:
    def test_truth_matches_analytic_inequality(self):
        vol, truth = make_phantom("ellipsoid", (10.0, 8.0, 6.0),
                                  dims=(48, 48, 48))
        c = 23.5
        i, j, k = np.meshgrid(*[np.arange(48.0)] * 3, indexing="ij")
        q = (((i - c) / 10.0) ** 2 + ((j - c) / 8.0) ** 2
             + ((k - c) / 6.0) ** 2)
        assert np.array_equal(truth.data, q <= 1.0)
        assert np.all(vol.data[truth.data] == 200.0)
        assert np.all(vol.data[~truth.data] == 0.0)

    def test_sphere_alias_for_equal_axes(self):
        v1, t1 = make_phantom("sphere", 8.0, dims=(32, 32, 32))
        v2, t2 = make_phantom("ellipsoid", (8.0, 8.0, 8.0),
                              dims=(32, 32, 32))
        assert np.array_equal(v1.data, v2.data)
        assert np.array_equal(t1.data, t2.data)

    def test_noise_deterministic_per_seed(self):
        v1, _ = make_phantom("sphere", 8.0, dims=(24, 24, 24),
                             noise_sigma=15.0, rng_seed=7)
        v2, _ = make_phantom("sphere", 8.0, dims=(24, 24, 24),
                             noise_sigma=15.0, rng_seed=7)
        v3, _ = make_phantom("sphere", 8.0, dims=(24, 24, 24),
                             noise_sigma=15.0, rng_seed=8)
        assert np.array_equal(v1.data, v2.data)
        assert not np.array_equal(v1.data, v3.data)

    def test_noise_statistics(self):
        v_clean, truth = make_phantom("sphere", 8.0, dims=(32, 32, 32))
        v_noisy, _ = make_phantom("sphere", 8.0, dims=(32, 32, 32),
                                  noise_sigma=10.0, rng_seed=3)
        resid = v_noisy.data.astype(np.float64) - v_clean.data
        assert abs(resid.mean()) < 0.5
        assert resid.std() == pytest.approx(10.0, rel=0.05)

    @pytest.mark.parametrize("radius", [10.0, 14.0, 20.0])
    def test_voxelized_volume_within_two_percent(self, radius):
        n = int(2 * radius) + 12
        _, truth = make_phantom("sphere", radius, dims=(n, n, n))
        analytic = 4.0 / 3.0 * np.pi * radius ** 3 / 1000.0
        assert mask_volume_cm3(truth) == pytest.approx(analytic, rel=0.02)

    def test_default_center_is_grid_center(self):
        _, truth = make_phantom("sphere", 5.0, dims=(21, 21, 21))
        # grid center (10, 10, 10): truth must be symmetric under flips
        for axis in range(3):
            assert np.array_equal(truth.data, np.flip(truth.data, axis))

    def test_fit_and_argument_errors(self):
        with pytest.raises(ValueError):
            make_phantom("sphere", 40.0, dims=(32, 32, 32))  # does not fit
        with pytest.raises(ValueError):
            make_phantom("sphere", (10.0, 8.0, 6.0), dims=(64, 64, 64))
        with pytest.raises(ValueError):
            make_phantom("cube", 10.0, dims=(64, 64, 64))
        with pytest.raises(ValueError):
            make_phantom("sphere", -3.0, dims=(64, 64, 64))
        with pytest.raises(ValueError):
            make_phantom("sphere", 5.0, dims=(64, 64, 64),
                         center=(100.0, 32.0, 32.0))


def _case(cid, dsc, vol=1.0, vox=1000, time_min=None):
    return EvalCase(case_id=cid, dsc=dsc, vol_ref_cm3=vol, vol_auto_cm3=vol,
                    voxels_ref=vox, voxels_auto=vox,
                    manual_time_min=time_min)


class TestSummaries:
    def test_single_case_sigma_zero(self):
        rep = summarize([_case("a", 0.9)])
        s = rep.stats["dsc_percent"]
        assert (s.min, s.max, s.mean, s.sigma) == (90.0, 90.0, 90.0, 0.0)

    def test_two_case_stats(self):
        rep = summarize([_case("a", 0.7107), _case("b", 0.8467)])
        s = rep.stats["dsc_percent"]
        assert s.min == pytest.approx(71.07)
        assert s.max == pytest.approx(84.67)
        assert s.mean == pytest.approx(77.87)
        assert s.sigma == pytest.approx(6.80)  # population sigma

    def test_ten_case_spreadsheet_recompute(self, rng):
        dscs = rng.uniform(0.5, 1.0, 10)
        vols = rng.uniform(5.0, 40.0, 10)
        cases = [_case(f"c{i}", float(d), vol=float(v))
                 for i, (d, v) in enumerate(zip(dscs, vols))]
        rep = summarize(cases)
        s = rep.stats["dsc_percent"]
        assert s.mean == pytest.approx(float(np.mean(dscs)) * 100)
        assert s.sigma == pytest.approx(float(np.std(dscs)) * 100)
        v = rep.stats["vol_ref_cm3"]
        assert (v.min, v.max) == (pytest.approx(vols.min()),
                                  pytest.approx(vols.max()))

    def test_empty_case_list_rejected(self):
        with pytest.raises(ValueError):
            summarize([])

    def test_time_column_only_when_all_cases_have_it(self):
        with_t = summarize([_case("a", 0.9, time_min=4.0),
                            _case("b", 0.8, time_min=6.0)])
        without = summarize([_case("a", 0.9, time_min=4.0), _case("b", 0.8)])
        assert "time_min" in with_t.stats
        assert "time_min" not in without.stats
        assert "Time (min)" in with_t.render_text()
        assert "Time (min)" not in without.render_text()

    def test_render_layout(self):
        text = summarize([_case("alpha", 0.9), _case("b", 0.85)]).render_text()
        lines = text.splitlines()
        assert lines[0].startswith("Case")
        assert set(lines[1]) == {"-"}          # separator under the header
        assert lines[2].startswith("alpha")
        assert lines[3].startswith("b")
        assert set(lines[4]) == {"-"}          # separator before the stats
        assert [l.split()[0] for l in lines[5:9]] == ["min", "max", "mu",
                                                      "sigma"]
        # numeric cells right-aligned: all rows end at the same column
        body = [l for l in lines if not set(l) == {"-"}]
        assert len({len(l) for l in body}) == 1

    def test_json_keeps_fractional_overlap(self):
        rep = summarize([_case("a", 0.875)])
        payload = json.loads(rep.to_json())
        assert payload[0]["dsc"] == 0.875
        assert payload[0]["case_id"] == "a"


class TestManifest:
    def _write_pair(self, tmp_path, name, auto_data, ref_data):
        save_mask(tmp_path / f"{name}_auto.nii", _mask(auto_data))
        save_mask(tmp_path / f"{name}_ref.nii", _mask(ref_data))
        return {"id": name, "auto": f"{name}_auto.nii",
                "ref": f"{name}_ref.nii"}

    def test_round_trip(self, tmp_path, rng):
        entries = []
        expected = []
        for i in range(3):
            a = rng.random((8, 8, 8)) < 0.5
            r = rng.random((8, 8, 8)) < 0.5
            entries.append(self._write_pair(tmp_path, f"case{i}", a, r))
            expected.append(dice(_mask(a), _mask(r)))
        entries[1]["manual_time_min"] = 7.5
        (tmp_path / "manifest.json").write_text(json.dumps(entries))
        cases = evaluate_manifest(tmp_path / "manifest.json")
        assert [c.case_id for c in cases] == ["case0", "case1", "case2"]
        assert [c.dsc for c in cases] == expected
        assert cases[1].manual_time_min == 7.5
        assert cases[0].manual_time_min is None

    def test_geometry_mismatch_names_case(self, tmp_path):
        a = np.ones((4, 4, 4), bool)
        r = np.ones((5, 5, 5), bool)
        save_mask(tmp_path / "a.nii", _mask(a))
        save_mask(tmp_path / "r.nii", _mask(r))
        (tmp_path / "m.json").write_text(json.dumps(
            [{"id": "bad", "auto": "a.nii", "ref": "r.nii"}]))
        with pytest.raises(GeometryMismatch, match="bad"):
            evaluate_manifest(tmp_path / "m.json")

    def test_non_array_manifest_rejected(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps({"id": "x"}))
        with pytest.raises(ValueError):
            evaluate_manifest(tmp_path / "m.json")


class TestMetricStats:
    def test_population_sigma(self):
        s = MetricStats.of([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
        assert s.sigma == 2.0  # classic population-sigma example
        assert (s.min, s.max, s.mean) == (2.0, 9.0, 5.0)
