import math
import tempfile
from pathlib import Path

import numpy as np
import torch
from django.test import SimpleTestCase

from core.exceptions import InvalidArgument, InvalidPlan
from corpus.normalization import NormalizationSpec
from corpus.sequence import ConcentrationSequence, DualResolutionSample
from corpus.transforms import average_pool_downsample, nearest_upsample
from dispersion.conditions import WindCondition
from evaluation.metrics import MetricConfig
from surrogates.config import HRTMConfig, SRMConfig, TMConfig
from surrogates.networks import build_hrtm, build_srm, build_tm

from .experiment import PLAIN, UPDATED, run_update_experiment, schedule_from_times
from .plots import plot_sensor_traces
from .serializers import SensorsSerializer
from .traces import (
    FAR_BAND, NEAR_BAND, SensorSpec, SensorTrace, compare_traces, default_sensor_ring, extract_trace, read_sensors,
    write_sensors,
)


def sequence_of(values, cell_size_zyx=(10.0, 100.0, 100.0), origin=(0.0, 0.0, 0.0)):
    return ConcentrationSequence(values=values, dt_output=600.0, cell_size_zyx=cell_size_zyx, origin=origin)


def trace(values, model='truth', sensor_id='S1', dt=600.0):
    values = np.asarray(values, dtype=np.float64)
    return SensorTrace(sensor_id=sensor_id, times=np.arange(len(values)) * dt, values=values, model=model)


class ExtractTraceTests(SimpleTestCase):

    def setUp(self):
        self.sensor = SensorSpec(id='S1', x=150.0, y=250.0, source_xy=(0.0, 0.0))

    def test_uniform_field(self):
        result = extract_trace(sequence_of(np.full((4, 3, 5, 5), 2.5)), self.sensor)

        np.testing.assert_allclose(result.values, np.full(4, math.log10(2.5)))
        np.testing.assert_array_equal(result.times, [0.0, 600.0, 1200.0, 1800.0])

    def test_column_mean(self):
        values = np.zeros((1, 2, 5, 5))
        values[0, :, 2, 1] = (3.0, 7.0)

        self.assertAlmostEqual(extract_trace(sequence_of(values), self.sensor).values[0], math.log10(5.0))

    def test_outside_domain(self):
        outside = SensorSpec(id='far', x=650.0, y=250.0)
        with self.assertRaises(InvalidArgument):
            extract_trace(sequence_of(np.ones((1, 2, 5, 5))), outside)

    def test_respects_origin(self):
        values = np.zeros((1, 1, 2, 2))
        values[0, 0, 0, 0] = 100.0
        sequence = sequence_of(values, origin=(0.0, 200.0, 100.0))

        self.assertAlmostEqual(extract_trace(sequence, self.sensor).values[0], 2.0)

    def test_doubling_raises_by_log_two(self):
        values = np.random.default_rng(0).random((3, 2, 5, 5)) + 0.1
        single = extract_trace(sequence_of(values), self.sensor)
        double = extract_trace(sequence_of(2 * values), self.sensor)

        np.testing.assert_allclose(double.values - single.values, math.log10(2.0), atol=1e-12)

    def test_commutes_with_truncation(self):
        sequence = sequence_of(np.random.default_rng(1).random((6, 2, 5, 5)))

        full = extract_trace(sequence, self.sensor)
        prefix = extract_trace(sequence.truncate(3), self.sensor)
        np.testing.assert_array_equal(prefix.values, full.values[:3])

    def test_empty_column_uses_floor(self):
        result = extract_trace(sequence_of(np.zeros((2, 2, 5, 5))), self.sensor, epsilon=1e-10)
        np.testing.assert_allclose(result.values, [-10.0, -10.0])


class SensorLayoutTests(SimpleTestCase):

    def test_default_ring_bands(self):
        sensors = default_sensor_ring()
        near = [s for s in sensors if s.band == 'near']
        far = [s for s in sensors if s.band == 'far']

        self.assertGreaterEqual(len(near), 2)
        self.assertGreaterEqual(len(far), 2)
        self.assertEqual(len(near) + len(far), len(sensors))
        for sensor in near:
            self.assertTrue(NEAR_BAND[0] <= sensor.distance_to_source <= NEAR_BAND[1])
        for sensor in far:
            self.assertTrue(FAR_BAND[0] <= sensor.distance_to_source <= FAR_BAND[1])

    def test_default_ring_fits_desk_crop(self):
        crop = ConcentrationSequence(
            values=np.ones((1, 25, 62, 62)), dt_output=600.0, cell_size_zyx=(80.0, 80.0, 80.0),
            origin=(0.0, 80.0, 4960.0),
        )
        for sensor in default_sensor_ring():
            self.assertEqual(extract_trace(crop, sensor).values[0], 0.0)

    def test_file_round_trip(self):
        sensors = default_sensor_ring()
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'sensors.csv'
            write_sensors(path, sensors)
            loaded = read_sensors(path)

        self.assertEqual([s.id for s in loaded], [s.id for s in sensors])
        for a, b in zip(loaded, sensors):
            self.assertAlmostEqual(a.distance_to_source, b.distance_to_source)

    def test_serializer_choices(self):
        serializer = SensorsSerializer(data={'sensors': [{'id': 'A', 'x': 5100.0, 'y': 4800.0}]})
        self.assertTrue(serializer.is_valid(), serializer.errors)

        sensors = SensorsSerializer.to_sensors(serializer.validated_data, (5000.0, 5000.0))
        self.assertEqual(sensors[0].id, 'A')
        self.assertAlmostEqual(sensors[0].distance_to_source, math.hypot(100.0, 200.0))
        self.assertEqual(serializer.validated_data['update_times'], [3600.0, 5400.0, 9000.0])

    def test_serializer_rejects_duplicate_ids(self):
        serializer = SensorsSerializer(data={'sensors': [{'id': 'A', 'x': 0, 'y': 0}, {'id': 'A', 'x': 1, 'y': 1}]})
        self.assertFalse(serializer.is_valid())


class CompareTracesTests(SimpleTestCase):

    def setUp(self):
        self.sensors = [SensorSpec(id='S1', x=5100.0, y=4800.0), SensorSpec(id='S2', x=5300.0, y=3300.0)]

    def test_identical_traces(self):
        truth = {'S1': trace([1.0, 2.0, 3.0])}
        errors = compare_traces(truth, {'tm_srm': {'S1': trace([1.0, 2.0, 3.0])}}, self.sensors)

        self.assertEqual(errors.loc[0, 'mae'], 0.0)

    def test_constant_offset(self):
        truth = {'S1': trace([1.0, 2.0, 3.0]), 'S2': trace([0.0, 0.0, 0.0], sensor_id='S2')}
        model = {'S1': trace([1.5, 2.5, 3.5]), 'S2': trace([-0.5, -0.5, -0.5], sensor_id='S2')}
        errors = compare_traces(truth, {'m': model}, self.sensors)

        np.testing.assert_allclose(errors['mae'], [0.5, 0.5])

    def test_split_at_boundary(self):
        truth = {'S1': trace([0.0] * 20)}
        model = {'S1': trace([0.0] * 15 + [1.0] * 5)}
        row = compare_traces(truth, {'m': model}, self.sensors, split_time=9000.0).iloc[0]

        self.assertEqual(row['mae_before'], 0.0)
        self.assertEqual(row['mae_after'], 1.0)
        self.assertAlmostEqual(row['mae'], 0.25)

    def test_distance_bands(self):
        truth = {'S1': trace([0.0]), 'S2': trace([0.0], sensor_id='S2')}
        errors = compare_traces(truth, {'m': {'S1': trace([0.0]), 'S2': trace([0.0], sensor_id='S2')}}, self.sensors)

        self.assertEqual(errors.set_index('sensor').loc['S1', 'band'], 'near')
        self.assertEqual(errors.set_index('sensor').loc['S2', 'band'], 'far')

    def test_time_base_mismatch(self):
        with self.assertRaises(InvalidArgument):
            compare_traces({'S1': trace([0.0, 0.0])}, {'m': {'S1': trace([0.0, 0.0], dt=300.0)}}, self.sensors)


class ScheduleTests(SimpleTestCase):

    def test_release_times_to_frames(self):
        self.assertEqual(schedule_from_times([3600.0, 5400.0, 9000.0], 600.0), {6, 9, 15})

    def test_off_cadence_time(self):
        with self.assertRaises(InvalidPlan):
            schedule_from_times([3900.5], 600.0)


class UpdateExperimentTests(SimpleTestCase):

    def setUp(self):
        torch.manual_seed(0)
        self.tm = build_tm(TMConfig(channels=(4, 8, 16), input_shape=(8, 8, 8)))
        self.srm = build_srm(SRMConfig(channels=(4, 8, 4), input_shape=(8, 8, 8)))
        self.hrtm = build_hrtm(HRTMConfig(num_layers=1, input_shape=(32, 32, 32)))
        self.spec = NormalizationSpec(min_val=-6.0, max_val=0.0)
        self.sensors = [
            SensorSpec(id='N1', x=420.0, y=600.0, source_xy=(400.0, 790.0)),
            SensorSpec(id='N2', x=500.0, y=400.0, source_xy=(400.0, 790.0)),
        ]
        self.samples = [self.sample(k) for k in range(2)]

    def sample(self, k, n_steps=12):
        rng = np.random.default_rng(k)
        hr = (rng.random((n_steps, 32, 32, 32)) * 1e-2 + 1e-5).astype(np.float32)
        return DualResolutionSample(
            run_id=f'run_{k:03d}',
            condition=WindCondition(speed_ms=5.0, direction_deg=350.0),
            lr=average_pool_downsample(hr, 4).astype(np.float32),
            hr=hr,
            dt_output=600.0,
            lr_cell_size_zyx=(100.0, 100.0, 100.0),
            hr_cell_size_zyx=(25.0, 25.0, 25.0),
            origin=(0.0, 0.0, 0.0),
        )

    def run_experiment(self, schedule, hrtm=None):
        return run_update_experiment(
            self.tm, self.srm, self.samples, schedule, self.spec, self.sensors, MetricConfig(iou_threshold=-4.0),
            hrtm=hrtm, split_time=3600.0,
        )

    def test_paired_reports_and_tables(self):
        experiment = self.run_experiment({6, 9}, hrtm=self.hrtm)

        self.assertEqual(set(experiment.reports), {PLAIN, UPDATED, 'hrtm'})
        for report in experiment.reports.values():
            self.assertEqual(report.run_ids, ['run_000', 'run_001'])
            self.assertEqual(report.n_steps, 12)
        self.assertEqual(len(experiment.errors), 2 * 2 * 3)
        self.assertIn('improvement', experiment.improvement.columns)
        self.assertEqual(set(experiment.traces['model']), {'truth', PLAIN, UPDATED, 'hrtm'})
        self.assertEqual(experiment.near_source_wins()[1], 2)

    def test_empty_schedule_matches_plain_rollout(self):
        experiment = self.run_experiment(())
        traces = experiment.traces.set_index(['run', 'sensor', 'time', 'model'])['value'].unstack('model')

        np.testing.assert_array_equal(traces[PLAIN].to_numpy(), traces[UPDATED].to_numpy())

    def test_updates_leave_earlier_frames_untouched(self):
        experiment = self.run_experiment({9})
        traces = experiment.traces.set_index(['run', 'sensor', 'time', 'model'])['value'].unstack('model')
        before = traces[traces.index.get_level_values('time') < 9 * 600.0]

        np.testing.assert_allclose(before[PLAIN].to_numpy(), before[UPDATED].to_numpy(), atol=1e-6)

    def test_schedule_beyond_sequence(self):
        with self.assertRaises(InvalidPlan):
            self.run_experiment({15})

    def test_trace_figure(self):
        experiment = self.run_experiment({6})
        with tempfile.TemporaryDirectory() as directory:
            path = plot_sensor_traces(experiment.traces, self.sensors, Path(directory) / 'sensors.png', 3600.0)
            self.assertTrue(path.exists())


class Persistence(torch.nn.Module):
    """
    Temporal stand-in that repeats the newest window frame.
    """

    def __init__(self, shape=(8, 8, 8)):
        super().__init__()
        self.config = TMConfig(channels=(4, 8, 16), input_shape=shape)
        self.anchor = torch.nn.Parameter(torch.zeros(1))

    def forward(self, window):
        return window[:, -1:] + self.anchor


class BlockRefinement(torch.nn.Module):
    """
    Refinement stand-in that repeats every cell into a 4x4x4 block.
    """

    def __init__(self, shape=(8, 8, 8)):
        super().__init__()
        self.config = SRMConfig(channels=(4, 8, 4), input_shape=shape)
        self.anchor = torch.nn.Parameter(torch.zeros(1))

    def forward(self, frames):
        for axis in (1, 2, 3):
            frames = frames.repeat_interleave(4, dim=axis)
        return frames + self.anchor


class UpdateBenefitTests(SimpleTestCase):
    """
    A plume that keeps growing after the surrogate has stopped tracking it: ground-truth
    updates must bring the near-source traces closer to the truth.
    """

    def sample(self, k, n_steps=12):
        growth = 1e-4 * (k + 1) * (1.0 + np.arange(n_steps))
        lr = np.broadcast_to(growth[:, None, None, None], (n_steps, 8, 8, 8)).astype(np.float32)
        return DualResolutionSample(
            run_id=f'run_{k:03d}',
            condition=WindCondition(speed_ms=5.0, direction_deg=350.0),
            lr=lr,
            hr=nearest_upsample(lr, 4).astype(np.float32),
            dt_output=600.0,
            lr_cell_size_zyx=(100.0, 100.0, 100.0),
            hr_cell_size_zyx=(25.0, 25.0, 25.0),
            origin=(0.0, 0.0, 0.0),
        )

    def test_updates_win_on_a_majority_of_runs(self):
        sensors = [
            SensorSpec(id='N1', x=420.0, y=600.0, source_xy=(400.0, 790.0)),
            SensorSpec(id='N2', x=500.0, y=400.0, source_xy=(400.0, 790.0)),
        ]
        experiment = run_update_experiment(
            Persistence(), BlockRefinement(), [self.sample(k) for k in range(3)], {6},
            NormalizationSpec(min_val=-6.0, max_val=0.0), sensors, MetricConfig(iou_threshold=-4.0),
            split_time=3600.0,
        )
        wins, runs = experiment.near_source_wins()

        self.assertEqual(runs, 3)
        self.assertGreater(wins, runs / 2)
        near = experiment.improvement[experiment.improvement['band'] == 'near']
        self.assertTrue((near['improvement'] > 0).all())
