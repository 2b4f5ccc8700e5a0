import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import InvalidArgument, InvalidConfig, UndefinedMetric
from corpus.normalization import NormalizationSpec, log_normalize

from .metrics import (
    MetricConfig, MetricsReport, aggregate_reports, comparison_table, conservation_mass, evaluate_rollout, iou, mse,
    ssim3d, to_linear_mass,
)
from .plots import plot_metrics, plot_plane_means, time_axis
from .serializers import MetricSerializer

SPEC = NormalizationSpec(min_val=-8.0, max_val=2.0)


def volumes(n=2, shape=(8, 8, 8), seed=0):
    return np.random.default_rng(seed).random((n,) + shape)


class MeanSquaredErrorTests(SimpleTestCase):

    def test_identical_volumes(self):
        a = volumes(1)[0]
        self.assertEqual(mse(a, a), 0.0)

    def test_constant_shift(self):
        a = volumes(1)[0]
        self.assertAlmostEqual(mse(a + 0.3, a), 0.09, delta=1e-12)

    def test_two_voxels(self):
        self.assertAlmostEqual(mse([0.0, 2.0], [0.0, 0.0]), 2.0, delta=1e-9)

    def test_symmetric(self):
        a, b = volumes()
        self.assertEqual(mse(a, b), mse(b, a))

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidArgument):
            mse(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))


class IntersectionOverUnionTests(SimpleTestCase):

    def setUp(self):
        self.config = MetricConfig(iou_threshold=1.0)

    def test_identical_masks(self):
        a = np.array([0.0, 2.0, 3.0, 0.5])
        self.assertEqual(iou(a, a, self.config), 1.0)

    def test_disjoint_masks(self):
        self.assertEqual(iou([2.0, 0.0], [0.0, 2.0], self.config), 0.0)

    def test_two_cells_sharing_one(self):
        self.assertAlmostEqual(iou([2.0, 2.0, 0.0], [0.0, 2.0, 2.0], self.config), 1 / 3, delta=1e-9)

    def test_both_empty(self):
        self.assertEqual(iou([0.0, 0.5], [0.1, 0.2], self.config), 1.0)

    def test_threshold_is_inclusive(self):
        self.assertEqual(iou([1.0], [1.0], self.config), 1.0)
        self.assertEqual(iou([1.0], [0.99], self.config), 0.0)

    def test_invariant_under_monotone_transform(self):
        a, b = volumes(seed=3)
        transformed = MetricConfig(iou_threshold=float(np.exp(0.5)))

        self.assertEqual(iou(a, b, MetricConfig(iou_threshold=0.5)), iou(np.exp(a), np.exp(b), transformed))


class StructuralSimilarityTests(SimpleTestCase):

    def test_identical_volumes(self):
        a = volumes(1)[0]
        self.assertAlmostEqual(ssim3d(a, a), 1.0, delta=1e-12)

    def test_symmetric(self):
        a, b = volumes(seed=1)
        self.assertAlmostEqual(ssim3d(a, b), ssim3d(b, a), delta=1e-12)

    def test_constant_volumes_keep_luminance_term(self):
        config = MetricConfig()
        c1, c2 = 0.3, 0.6
        stability = (config.ssim_k1 * config.ssim_data_range) ** 2
        expected = (2 * c1 * c2 + stability) / (c1 ** 2 + c2 ** 2 + stability)

        value = ssim3d(np.full((8, 8, 8), c1), np.full((8, 8, 8), c2), config)
        self.assertAlmostEqual(value, expected, delta=1e-9)

    def test_bounded(self):
        a, b = volumes(seed=2)
        self.assertTrue(-1.0 <= ssim3d(a, b) <= 1.0)

    def test_common_shift_with_matched_local_means(self):
        a = 0.2 + 0.4 * volumes(1, shape=(16, 16, 16), seed=3)[0]
        # period equals the window, so every window sees the same mean in both volumes
        b = a + 0.1 * np.sin(2 * np.pi * np.arange(16) / 7)

        value = ssim3d(a, b)
        self.assertLess(value, 0.999)
        for shift in (0.01, 0.05, 0.1):
            with self.subTest(shift=shift):
                self.assertAlmostEqual(ssim3d(a + shift, b + shift), value, delta=1e-9)

    def test_volume_smaller_than_window(self):
        with self.assertRaises(InvalidArgument):
            ssim3d(np.zeros((5, 8, 8)), np.zeros((5, 8, 8)))

    def test_even_window_rejected(self):
        with self.assertRaises(InvalidConfig):
            MetricConfig(ssim_window=6)


class ConservationOfMassTests(SimpleTestCase):

    def test_identical_volumes(self):
        a = volumes(1)[0]
        self.assertEqual(conservation_mass(a, a), 0.0)

    def test_doubled_prediction(self):
        a = volumes(1)[0]
        self.assertAlmostEqual(conservation_mass(2 * a, a), 1.0, delta=1e-9)

    def test_massless_truth_is_undefined(self):
        with self.assertRaises(UndefinedMetric):
            conservation_mass(np.ones((2, 2, 2)), np.zeros((2, 2, 2)))

    def test_absolute_mode_scales_by_cell_volume(self):
        config = MetricConfig(cm_normalization='absolute')
        value = conservation_mass(np.full((2, 2, 2), 2.0), np.ones((2, 2, 2)), config, cell_volume=10.0)
        self.assertAlmostEqual(value, 80.0, delta=1e-9)


class EvaluateRolloutTests(SimpleTestCase):

    def setUp(self):
        self.config = MetricConfig(iou_threshold=-3.0)
        self.truth = volumes(4, seed=5)
        self.pred = np.clip(self.truth + volumes(4, seed=6) * 0.1, 0.0, 1.0)

    def test_identical_sequences_are_ideal(self):
        report = evaluate_rollout(self.truth, self.truth, self.config, SPEC, run_id=7)

        self.assertEqual(report.run_ids, ['7'])
        np.testing.assert_array_equal(report.per_timestep['mse'], np.zeros((1, 4)))
        np.testing.assert_array_equal(report.per_timestep['iou'], np.ones((1, 4)))
        np.testing.assert_allclose(report.per_timestep['ssim'], np.ones((1, 4)), atol=1e-12)
        np.testing.assert_array_equal(report.per_timestep['cm'], np.zeros((1, 4)))

    def test_aggregate_recomputes_from_steps(self):
        report = evaluate_rollout(self.pred, self.truth, self.config, SPEC)
        aggregate = report.aggregate()

        for name, values in report.per_timestep.items():
            self.assertAlmostEqual(aggregate[name]['mean'], values.mean(), delta=1e-12)
            self.assertAlmostEqual(aggregate[name]['std'], values.std(), delta=1e-12)

    def test_pure_function(self):
        first = evaluate_rollout(self.pred, self.truth, self.config, SPEC)
        second = evaluate_rollout(self.pred, self.truth, self.config, SPEC)
        self.assertEqual(first.aggregate(), second.aggregate())

    def test_metric_ranges(self):
        report = evaluate_rollout(self.pred, self.truth, self.config, SPEC)

        self.assertTrue((report.per_timestep['mse'] >= 0).all())
        self.assertTrue((report.per_timestep['cm'] >= 0).all())
        self.assertTrue(((report.per_timestep['iou'] >= 0) & (report.per_timestep['iou'] <= 1)).all())
        self.assertTrue((np.abs(report.per_timestep['ssim']) <= 1).all())

    def test_mse_rises_sharply_then_flattens(self):
        truth = np.repeat((0.3 + 0.4 * volumes(1, seed=8))[:1], 33, axis=0)
        pattern = 2 * volumes(1, seed=9)[0] - 1
        drift = np.zeros(33)
        drift[5:] = 0.15 * (1 - np.exp(-np.arange(1, 29) / 2))
        pred = truth + drift[:, None, None, None] * pattern

        curve = evaluate_rollout(pred, truth, self.config, SPEC).step_mean('mse')
        early = (curve[5] - curve[1]) / 4
        late = (curve[29] - curve[9]) / 20

        np.testing.assert_array_equal(curve[:5], 0.0)
        self.assertTrue(np.all(np.diff(curve[4:]) > 0))
        self.assertGreater(late, 0.0)
        self.assertGreater(early, 2 * late)

    def test_empty_cells_carry_no_mass(self):
        occupied = np.zeros((2, 8, 8, 8), dtype=bool)
        occupied[:, 2:6, 2:6, 2:6] = True
        truth = log_normalize(np.where(occupied, 1e-3, 0.0), SPEC)
        pred = log_normalize(np.where(occupied, 2e-3, 0.0), SPEC)

        report = evaluate_rollout(pred, truth, self.config, SPEC)

        np.testing.assert_allclose(report.per_timestep['cm'], np.ones((1, 2)), atol=1e-9)
        self.assertEqual(to_linear_mass(truth[0], SPEC)[~occupied[0]].max(), 0.0)

    def test_misaligned_sequences(self):
        with self.assertRaises(InvalidArgument):
            evaluate_rollout(self.pred[:3], self.truth, self.config, SPEC)

    def test_long_table_layout(self):
        frame = evaluate_rollout(self.pred, self.truth, self.config, SPEC, run_id='r1').to_frame()

        self.assertEqual(list(frame.columns), ['run', 'step', 'metric', 'value'])
        self.assertEqual(len(frame), 4 * 4)
        self.assertEqual(sorted(frame['metric'].unique()), ['cm', 'iou', 'mse', 'ssim'])


class AggregateReportsTests(SimpleTestCase):

    def reports(self):
        config = MetricConfig(iou_threshold=-3.0)
        truth = volumes(3, seed=1)
        return [
            evaluate_rollout(np.clip(truth + 0.05 * k, 0, 1), truth, config, SPEC, run_id=k, model='tm_srm')
            for k in range(3)
        ]

    def test_stacks_runs(self):
        reports = self.reports()
        merged = aggregate_reports(reports)

        self.assertEqual(merged.run_ids, ['0', '1', '2'])
        self.assertEqual(merged.per_timestep['mse'].shape, (3, 3))
        stacked = np.concatenate([r.per_timestep['mse'] for r in reports])
        self.assertAlmostEqual(merged.aggregate()['mse']['mean'], stacked.mean(), delta=1e-12)
        np.testing.assert_allclose(merged.step_mean('mse'), stacked.mean(axis=0))

    def test_rejects_uneven_lengths(self):
        short = MetricsReport(model='x', run_ids=['a'], per_timestep={'mse': [[0.0, 1.0]]})
        long = MetricsReport(model='x', run_ids=['b'], per_timestep={'mse': [[0.0, 1.0, 2.0]]})

        with self.assertRaises(InvalidArgument):
            aggregate_reports([short, long])

    def test_write_and_read(self):
        merged = aggregate_reports(self.reports())
        with tempfile.TemporaryDirectory() as directory:
            csv_path, json_path = merged.write(directory)
            loaded = MetricsReport.read(csv_path)

        self.assertEqual(loaded.model, 'tm_srm')
        self.assertEqual(loaded.run_ids, merged.run_ids)
        for name in merged.per_timestep:
            np.testing.assert_allclose(loaded.per_timestep[name], merged.per_timestep[name])

    def test_comparison_table(self):
        table = comparison_table([aggregate_reports(self.reports())])

        self.assertEqual(list(table.columns), ['model', 'MSE', 'IoU', 'SSIM', 'CM'])
        self.assertEqual(table.loc[0, 'model'], 'tm_srm')
        self.assertIn('±', table.loc[0, 'MSE'])


class PlotTests(SimpleTestCase):

    def test_metric_figure(self):
        report = MetricsReport(
            model='tm_srm', run_ids=['a', 'b'],
            per_timestep={name: np.random.default_rng(0).random((2, 5)) for name in ('mse', 'iou', 'ssim', 'cm')},
        )
        with tempfile.TemporaryDirectory() as directory:
            path = plot_metrics({'tm_srm': report}, Path(directory) / 'metrics.png', dt_output=600.0)
            self.assertTrue(path.exists())

    def test_time_axis_follows_frame_clock(self):
        np.testing.assert_allclose(time_axis(4, dt_output=900.0), [0.0, 0.25, 0.5, 0.75])
        np.testing.assert_array_equal(time_axis(3), [0.0, 1.0, 2.0])

    def test_plane_figure(self):
        truth = volumes(1, shape=(8, 16, 16))[0]
        with tempfile.TemporaryDirectory() as directory:
            path = plot_plane_means(truth, {'tm_srm': truth * 0.9}, Path(directory) / 'planes.png')
            self.assertTrue(path.exists())

    def test_plane_figure_shape_mismatch(self):
        with self.assertRaises(InvalidArgument):
            plot_plane_means(np.zeros((4, 4, 4)), {'hrtm': np.zeros((4, 4, 2))}, 'unused.png')


class MetricSerializerTests(SimpleTestCase):

    def test_null_threshold_resolved_later(self):
        serializer = MetricSerializer(data={'iou_threshold': None, 'ssim_window': 5})
        self.assertTrue(serializer.is_valid(), serializer.errors)

        config = MetricSerializer.to_config(serializer.validated_data, iou_threshold=-4.0)
        self.assertEqual(config.iou_threshold, -4.0)
        self.assertEqual(config.ssim_window, 5)

    def test_even_window_rejected(self):
        serializer = MetricSerializer(data={'ssim_window': 4})
        self.assertFalse(serializer.is_valid())
        self.assertIn('ssim_window', serializer.errors)
