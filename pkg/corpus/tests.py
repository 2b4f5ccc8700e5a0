import tempfile
from pathlib import Path

import numpy as np
import torch
from django.test import SimpleTestCase, TestCase

from core.exceptions import ArtifactExists, ArtifactMissing, InvalidArgument, InvalidSpec
from dispersion.conditions import SimConfig, SourceSpec, WindCondition

from .builder import build_sample, generate_corpus
from .config import CorpusConfig
from .container import read_header, read_sample, write_sample
from .manifest import load_split, read_manifest
from .models import SimulationRun
from .normalization import NormalizationSpec, fit_normalization, inverse_log_normalize, log_normalize
from .sequence import ConcentrationSequence
from .serializers import DataSerializer
from .splits import split_runs
from .transforms import (
    average_pool_downsample, crop_volume, nearest_upsample, resize_sequence, trilinear_upsample,
)
from .windows import SuperResolutionDataset, WindowDataset, make_windows


def sequence_of(values, cell_size_zyx=(80.0, 80.0, 80.0)):
    return ConcentrationSequence(values=values, dt_output=600.0, cell_size_zyx=cell_size_zyx)


def tiny_corpus_configs(n_runs=3):
    corpus = CorpusConfig(
        name='tiny',
        n_runs=n_runs,
        crop_extent_zyx=(200.0, 1000.0, 1000.0),
        crop_anchor_xy=(1000.0, 1000.0),
        lr_shape=(2, 4, 4),
        hr_shape=(8, 16, 16),
        source=SourceSpec(x_release=1000.0, y_release=1000.0),
    )
    simulation = SimConfig(
        domain_extent_zyx=(400.0, 2000.0, 2000.0),
        grid_cells_zyx=(10, 20, 20),
        dt_output=60.0,
        n_output_steps=6,
        duration=360.0,
        terrain_amplitude=100.0,
        terrain_correlation_length=500.0,
        terrain_features=4,
    )
    return corpus, simulation


class CropTests(SimpleTestCase):

    def test_full_scale_grid(self):
        sequence = sequence_of(np.zeros((1, 200, 250, 250), dtype=np.float32), cell_size_zyx=(20.0, 40.0, 40.0))
        self.assertEqual(crop_volume(sequence).grid_shape, (100, 125, 125))

    def test_desk_scale_grid_uses_floor_division(self):
        sequence = sequence_of(np.zeros((1, 50, 125, 125)))
        cropped = crop_volume(sequence)

        self.assertEqual(cropped.grid_shape, (25, 62, 62))
        self.assertEqual(cropped.extent_zyx, (2000.0, 4960.0, 4960.0))
        # southeast quadrant of the source cell (62, 62)
        self.assertEqual(cropped.origin, (0.0, 80.0, 4960.0))

    def test_crop_keeps_source_cell(self):
        values = np.zeros((1, 50, 125, 125))
        values[0, 3, 62, 62] = 1.0
        self.assertEqual(crop_volume(sequence_of(values)).values.sum(), 1.0)

    def test_full_domain_crop_is_identity(self):
        values = np.random.default_rng(0).random((2, 4, 5, 5))
        cropped = crop_volume(sequence_of(values, (10.0, 10.0, 10.0)), extent_zyx=(40.0, 50.0, 50.0))

        np.testing.assert_array_equal(cropped.values, values)
        self.assertEqual(cropped.origin, (0.0, 0.0, 0.0))

    def test_crop_larger_than_domain_rejected(self):
        with self.assertRaises(InvalidArgument):
            crop_volume(sequence_of(np.zeros((1, 4, 5, 5)), (10.0, 10.0, 10.0)))


class ResizeTests(SimpleTestCase):

    def test_model_grids(self):
        cropped = sequence_of(np.random.default_rng(1).random((3, 25, 62, 62)))

        self.assertEqual(resize_sequence(cropped, (8, 32, 32)).values.shape, (3, 8, 32, 32))
        self.assertEqual(resize_sequence(cropped, (32, 128, 128)).values.shape, (3, 32, 128, 128))

    def test_constant_field_stays_constant(self):
        cropped = sequence_of(np.full((2, 25, 62, 62), 3.5))
        for shape in ((8, 32, 32), (32, 128, 128)):
            np.testing.assert_allclose(resize_sequence(cropped, shape).values, 3.5, atol=1e-6)

    def test_physical_extent_preserved(self):
        cropped = sequence_of(np.ones((1, 25, 62, 62)))
        resized = resize_sequence(cropped, (8, 32, 32))
        np.testing.assert_allclose(resized.extent_zyx, cropped.extent_zyx)

    def test_non_positive_target_rejected(self):
        with self.assertRaises(InvalidArgument):
            resize_sequence(sequence_of(np.ones((1, 4, 4, 4))), (0, 4, 4))


class PoolingTests(SimpleTestCase):

    def test_constant_field(self):
        np.testing.assert_allclose(average_pool_downsample(np.full((32, 128, 128), 2.0)), 2.0)

    def test_one_hot_block(self):
        frame = np.zeros((32, 128, 128))
        frame[5, 70, 9] = 64.0

        pooled = average_pool_downsample(frame)

        self.assertEqual(pooled.shape, (8, 32, 32))
        self.assertEqual(pooled[1, 17, 2], 1.0)
        self.assertEqual(np.count_nonzero(pooled), 1)

    def test_mass_preserved(self):
        frame = np.random.default_rng(2).random((32, 128, 128))
        pooled = average_pool_downsample(frame)
        self.assertAlmostEqual(pooled.sum() * 64 / frame.sum(), 1.0, delta=1e-9)

    def test_reexpansion_is_idempotent(self):
        frame = np.random.default_rng(3).random((8, 16, 16))
        pooled = average_pool_downsample(frame)
        np.testing.assert_allclose(average_pool_downsample(nearest_upsample(pooled)), pooled)

    def test_indivisible_shape_rejected(self):
        with self.assertRaises(InvalidArgument):
            average_pool_downsample(np.zeros((6, 16, 16)))

    def test_trilinear_upsample_shapes(self):
        self.assertEqual(trilinear_upsample(np.ones((8, 32, 32))).shape, (32, 128, 128))
        self.assertEqual(tuple(trilinear_upsample(torch.ones(3, 8, 32, 32)).shape), (3, 32, 128, 128))


class NormalizationTests(SimpleTestCase):

    spec = NormalizationSpec(min_val=-10.0, max_val=-2.0)

    def test_zero_maps_to_floor(self):
        self.assertAlmostEqual(log_normalize(np.array([0.0]), self.spec)[0], 0.0, places=12)

    def test_roundtrip_above_floor(self):
        values = np.array([1e-9, 3.7e-6, 0.004, 0.01])
        restored = inverse_log_normalize(log_normalize(values, self.spec), self.spec)
        np.testing.assert_allclose(restored, values, rtol=1e-6)

    def test_monotonic(self):
        normalized = log_normalize(np.array([1e-8, 2e-8, 1e-5, 0.2]), self.spec)
        self.assertTrue(np.all(np.diff(normalized) > 0))

    def test_invalid_bounds_rejected(self):
        with self.assertRaises(InvalidSpec):
            log_normalize(np.ones(3), NormalizationSpec(min_val=1.0, max_val=1.0))

    def test_fit_uses_both_resolutions(self):
        sample = type('Sample', (), {'lr': np.array([1e-4]), 'hr': np.array([0.0, 1e-1])})()
        spec = fit_normalization([sample])

        self.assertAlmostEqual(spec.min_val, -10.0)
        self.assertAlmostEqual(spec.max_val, -1.0)

    def test_fit_from_ranges(self):
        spec = fit_normalization([(-10.0, -3.0), (-9.0, -2.5)])
        self.assertEqual((spec.min_val, spec.max_val), (-10.0, -2.5))

    def test_training_values_lie_in_unit_interval(self):
        values = np.random.default_rng(4).random((3, 4, 4, 4)) * 1e-3
        spec = fit_normalization([values])
        normalized = log_normalize(values, spec)
        self.assertGreaterEqual(normalized.min(), 0.0)
        self.assertLessEqual(normalized.max(), 1.0)


class WindowTests(SimpleTestCase):

    def test_window_count(self):
        self.assertEqual(len(make_windows(np.zeros((33, 2, 2, 2)))), 28)

    def test_minimal_sequence(self):
        frames = np.arange(6, dtype=float)[:, None, None, None] * np.ones((6, 1, 1, 1))
        (window,) = make_windows(frames)

        np.testing.assert_array_equal(window.inputs[:, 0, 0, 0], [0, 1, 2, 3, 4])
        np.testing.assert_array_equal(window.target[:, 0, 0, 0], [5])

    def test_index_law(self):
        frames = np.arange(12, dtype=float)[:, None, None, None] * np.ones((12, 1, 1, 1))
        for window in make_windows(frames):
            k = window.start_index
            np.testing.assert_array_equal(window.inputs[:, 0, 0, 0], np.arange(k, k + 5))
            self.assertEqual(window.target_index, k + 5)
            self.assertEqual(window.target[0, 0, 0, 0], k + 5)

    def test_short_sequence_rejected(self):
        with self.assertRaises(InvalidArgument):
            make_windows(np.zeros((5, 2, 2, 2)))

    def test_window_dataset_items(self):
        spec = NormalizationSpec(min_val=-10.0, max_val=0.0)
        dataset = WindowDataset([np.full((8, 8, 32, 32), 1e-5), np.full((6, 8, 32, 32), 1e-5)], spec)

        self.assertEqual(len(dataset), 4)
        inputs, target = dataset[3]
        self.assertEqual(tuple(inputs.shape), (5, 8, 32, 32))
        self.assertEqual(tuple(target.shape), (1, 8, 32, 32))
        self.assertAlmostEqual(float(target.mean()), 0.5, places=6)

    def test_super_resolution_pairs_are_pooled(self):
        spec = NormalizationSpec(min_val=-10.0, max_val=0.0)
        hr = np.random.default_rng(5).random((2, 32, 128, 128)) * 1e-3
        dataset = SuperResolutionDataset([hr], spec)

        lr, target = dataset[1]
        self.assertEqual(tuple(lr.shape), (8, 32, 32))
        self.assertEqual(tuple(target.shape), (32, 128, 128))
        np.testing.assert_allclose(average_pool_downsample(target.numpy()), lr.numpy(), rtol=1e-5)


class SplitTests(SimpleTestCase):

    def test_hundred_runs(self):
        train, val, test = split_runs(range(100), seed=0)
        self.assertEqual((len(train), len(val), len(test)), (80, 10, 10))
        self.assertEqual(sorted(train + val + test), list(range(100)))

    def test_ten_runs(self):
        self.assertEqual(tuple(len(s) for s in split_runs(range(10), seed=3)), (8, 1, 1))

    def test_deterministic_given_seed(self):
        self.assertEqual(split_runs(range(30), seed=9), split_runs(range(30), seed=9))

    def test_too_few_runs_rejected(self):
        with self.assertRaises(InvalidArgument):
            split_runs(range(2), seed=0)


class ContainerTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / 'run_000.plm'
        rng = np.random.default_rng(6)
        self.sample = build_sample(
            sequence_of(rng.random((3, 10, 20, 20)) * 1e-3, (40.0, 100.0, 100.0)),
            WindCondition(5.7, 350.5),
            'run_000',
            tiny_corpus_configs()[0],
            metadata={'config_hash': 'abc', 'seeds': {'sampling': 1}},
        )

    def tearDown(self):
        self.directory.cleanup()

    def test_roundtrip_is_bit_exact(self):
        write_sample(self.path, self.sample)

        for mmap in (False, True):
            restored = read_sample(self.path, mmap=mmap)
            np.testing.assert_array_equal(restored.lr, self.sample.lr)
            np.testing.assert_array_equal(restored.hr, self.sample.hr)
            self.assertEqual(restored.condition, self.sample.condition)
            self.assertEqual(restored.metadata, self.sample.metadata)
            self.assertEqual(restored.origin, self.sample.origin)
            self.assertEqual(restored.lr_cell_size_zyx, self.sample.lr_cell_size_zyx)

    def test_layout_starts_with_magic(self):
        write_sample(self.path, self.sample)

        self.assertEqual(self.path.read_bytes()[:4], b'PLM1')
        self.assertEqual(read_header(self.path)['lr_shape'], [3, 2, 4, 4])
        self.assertEqual([p.name for p in self.path.parent.iterdir()], ['run_000.plm'])

    def test_foreign_file_rejected(self):
        self.path.write_bytes(b'NOPE' + bytes(16))
        with self.assertRaises(InvalidArgument):
            read_sample(self.path)

    def test_missing_file(self):
        with self.assertRaises(ArtifactMissing):
            read_sample(self.path)


class GenerateCorpusTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.output = Path(self.directory.name) / 'corpus'

    def tearDown(self):
        self.directory.cleanup()

    def test_generates_runs_and_manifest(self):
        corpus, simulation = tiny_corpus_configs()
        manifest = generate_corpus(corpus, simulation, self.output, config_hash='h1')

        self.assertEqual(manifest.split_sizes(), (1, 1, 1))
        self.assertEqual(read_manifest(self.output).to_dict(), manifest.to_dict())

        (sample,) = load_split(self.output, manifest, 'test')
        self.assertEqual(sample.lr.shape, (6, 2, 4, 4))
        self.assertEqual(sample.hr.shape, (6, 8, 16, 16))
        self.assertEqual(sample.metadata['config_hash'], 'h1')
        self.assertLess(sample.metadata['max_mass_residual'], 1e-6)
        self.assertLess(manifest.normalization.min_val, manifest.normalization.max_val)

    def test_regeneration_is_byte_identical(self):
        corpus, simulation = tiny_corpus_configs()
        generate_corpus(corpus, simulation, self.output)
        first = {p.name: p.read_bytes() for p in self.output.iterdir()}

        generate_corpus(corpus, simulation, self.output, force=True)
        second = {p.name: p.read_bytes() for p in self.output.iterdir()}

        self.assertEqual(first, second)

    def test_existing_corpus_refused(self):
        corpus, simulation = tiny_corpus_configs()
        generate_corpus(corpus, simulation, self.output)

        with self.assertRaises(ArtifactExists):
            generate_corpus(corpus, simulation, self.output)


class DataSerializerTests(SimpleTestCase):

    def test_defaults(self):
        serializer = DataSerializer(data={})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(DataSerializer.to_config(serializer.validated_data), CorpusConfig())

    def test_mismatched_grids_rejected(self):
        serializer = DataSerializer(data={'lr_shape': [8, 32, 32], 'hr_shape': [30, 128, 128]})
        self.assertFalse(serializer.is_valid())

    def test_nested_source(self):
        serializer = DataSerializer(data={'n_runs': 10, 'source': {'x_release': 4000, 'emission_rate': 2}})
        self.assertTrue(serializer.is_valid(), serializer.errors)

        config = DataSerializer.to_config(serializer.validated_data)
        self.assertEqual(config.source, SourceSpec(x_release=4000.0, emission_rate=2.0))


class SimulationRunTests(TestCase):

    def test_sync_manifest_replaces_registry(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        corpus, simulation = tiny_corpus_configs()
        manifest = generate_corpus(corpus, simulation, directory.name)

        SimulationRun.objects.sync_manifest(manifest, directory.name)
        SimulationRun.objects.sync_manifest(manifest, directory.name)

        self.assertEqual(SimulationRun.objects.filter(corpus='tiny').count(), 3)
        self.assertEqual(SimulationRun.objects.filter(split='train').count(), 1)
