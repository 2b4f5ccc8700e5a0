import tempfile
from pathlib import Path

import numpy as np
import torch
from django.test import SimpleTestCase, tag
from torch.utils.data import TensorDataset

from core.exceptions import (
    ArtifactMissing, ConstructionFailure, InvalidArgument, InvalidConfig, InvalidPlan, TrainingDiverged,
)
from corpus.normalization import NormalizationSpec
from corpus.transforms import average_pool_downsample

from .config import HRTMConfig, SRMConfig, TMConfig, TrainingConfig
from .networks import build_hrtm, build_srm, build_tm, count_parameters
from .rollout import RolloutPlan, dual_stage_rollout, predict_step, rollout, rollout_hr, super_resolve
from .serializers import ModelsSerializer, SRMSerializer, TMSerializer, TrainingSerializer
from .training import (
    BEST, HISTORY, LAST, ModelCheckpoint, Trainer, load_checkpoint, train_hrtm, train_srm, train_tm,
)

SPEC = NormalizationSpec(min_val=-10.0, max_val=0.0)


def small_tm(seed=0, **overrides):
    torch.manual_seed(seed)
    settings = dict(channels=(4, 8, 16), input_shape=(8, 8, 8))
    settings.update(overrides)
    return build_tm(TMConfig(**settings))


def small_srm(seed=0, **overrides):
    torch.manual_seed(seed)
    settings = dict(channels=(4, 8, 4), input_shape=(8, 8, 8))
    settings.update(overrides)
    return build_srm(SRMConfig(**settings))


def window_data(n, shape=(8, 8, 8), seed=0):
    generator = torch.Generator().manual_seed(seed)
    inputs = torch.rand((n, 5) + shape, generator=generator)
    targets = inputs.mean(dim=1, keepdim=True)
    return TensorDataset(inputs, targets)


def blob(shape, center=0.5, width=0.25):
    axes = np.meshgrid(*[np.linspace(0.0, 1.0, n) for n in shape], indexing='ij')
    distance = sum((axis - center) ** 2 for axis in axes)
    return (0.2 + 0.6 * np.exp(-distance / (2 * width ** 2))).astype(np.float32)


def lr_frames(n, shape=(8, 8, 8), seed=0):
    return np.random.default_rng(seed).random((n,) + shape).astype(np.float32)


class TemporalModelTests(SimpleTestCase):

    def test_desk_scale_shape_contract(self):
        model = build_tm().eval()
        with torch.no_grad():
            output = model(torch.zeros(1, 5, 8, 32, 32))

        self.assertEqual(tuple(output.shape), (1, 1, 8, 32, 32))
        self.assertTrue(torch.isfinite(output).all())
        self.assertTrue((output >= 0).all())

    def test_batch_of_seven(self):
        model = small_tm().eval()
        with torch.no_grad():
            output = model(torch.rand(7, 5, 8, 8, 8))

        self.assertEqual(tuple(output.shape), (7, 1, 8, 8, 8))

    def test_convlstm_bottleneck_and_plain_decoder(self):
        for overrides in ({'bottleneck_kind': 'convlstm'}, {'skip_mode': 'none'}):
            with self.subTest(**overrides):
                model = small_tm(**overrides).eval()
                with torch.no_grad():
                    output = model(torch.rand(2, 5, 8, 8, 8))
                self.assertEqual(tuple(output.shape), (2, 1, 8, 8, 8))

    def test_grid_not_divisible_by_eight(self):
        with self.assertRaises(ConstructionFailure) as context:
            build_tm(TMConfig(input_shape=(8, 30, 32)))

        self.assertEqual(context.exception.stages[-1][0], 'enc1')

    def test_parameter_count_is_logged(self):
        with self.assertLogs('surrogates.networks', 'INFO') as logs:
            model = small_tm()

        self.assertIn(f'{count_parameters(model):,}', logs.output[-1])
        self.assertIn('3,214,401', logs.output[-1])

    def test_invalid_dropout_rejected(self):
        with self.assertRaises(InvalidConfig):
            TMConfig(dropout_rate=1.0)


class RefinementModelTests(SimpleTestCase):

    def test_desk_scale_shape_contract(self):
        model = build_srm().eval()
        with torch.no_grad():
            output = model(torch.zeros(1, 8, 32, 32))

        self.assertEqual(tuple(output.shape), (1, 32, 128, 128))
        self.assertTrue(torch.isfinite(output).all())

    def test_fourfold_on_every_axis(self):
        model = small_srm().eval()
        with torch.no_grad():
            output = model(torch.rand(7, 8, 8, 8))

        self.assertEqual(tuple(output.shape), (7, 32, 32, 32))

    def test_full_pooling_does_not_reach_target_grid(self):
        with self.assertRaises(ConstructionFailure) as context:
            build_srm(SRMConfig(pool_dims=((2, 2, 2), (2, 2, 2))))

        names = [name for name, _ in context.exception.stages]
        self.assertIn('pool2', names)
        self.assertEqual(names[-1], 'dec1')

    def test_mismatched_decoder_strides(self):
        with self.assertRaises(ConstructionFailure):
            build_srm(SRMConfig(up_strides=((1, 2, 2), (1, 2, 2), (2, 2, 2), (1, 2, 2))))


class HighResolutionModelTests(SimpleTestCase):

    def test_shape_contract(self):
        model = build_hrtm().eval()
        with torch.no_grad():
            output = model(torch.zeros(1, 5, 32, 128, 128))

        self.assertEqual(tuple(output.shape), (1, 1, 32, 128, 128))
        self.assertTrue((output >= 0).all())

    def test_widths_follow_num_layers(self):
        self.assertEqual(HRTMConfig(num_layers=3).channels, (96, 192, 384))


class PredictStepTests(SimpleTestCase):

    def setUp(self):
        self.model = small_tm()
        self.windows = lr_frames(15).reshape(3, 5, 8, 8, 8)

    def test_repeated_calls_are_bit_identical(self):
        first = predict_step(self.model, self.windows[:1])
        second = predict_step(self.model, self.windows[:1])

        self.assertEqual(first.shape, (1, 1, 8, 8, 8))
        np.testing.assert_array_equal(first, second)

    def test_batch_matches_single_windows(self):
        batch = predict_step(self.model, self.windows)
        for k in range(3):
            np.testing.assert_allclose(batch[k], predict_step(self.model, self.windows[k:k + 1])[0], atol=1e-5)

    def test_tensor_in_tensor_out(self):
        output = predict_step(self.model, torch.from_numpy(self.windows))
        self.assertTrue(torch.is_tensor(output))

    def test_wrong_shape_rejected(self):
        with self.assertRaises(InvalidArgument):
            predict_step(self.model, np.zeros((1, 4, 8, 8, 8), dtype=np.float32))


class SuperResolveTests(SimpleTestCase):

    def setUp(self):
        self.model = small_srm()

    def test_single_frame_and_batches(self):
        frames = lr_frames(7)

        self.assertEqual(super_resolve(self.model, frames[0]).shape, (32, 32, 32))
        self.assertEqual(super_resolve(self.model, frames[:1]).shape, (1, 32, 32, 32))
        self.assertEqual(super_resolve(self.model, frames, batch_size=3).shape, (7, 32, 32, 32))

    def test_batching_does_not_change_frames(self):
        frames = lr_frames(7)
        np.testing.assert_allclose(
            super_resolve(self.model, frames, batch_size=2), super_resolve(self.model, frames, batch_size=7), atol=1e-5
        )

    def test_repeated_calls_are_bit_identical(self):
        frames = lr_frames(2)
        np.testing.assert_array_equal(super_resolve(self.model, frames), super_resolve(self.model, frames))

    def test_wrong_shape_rejected(self):
        with self.assertRaises(InvalidArgument):
            super_resolve(self.model, np.zeros((2, 8, 16, 16), dtype=np.float32))


class RolloutPlanTests(SimpleTestCase):

    def test_needs_a_step(self):
        with self.assertRaises(InvalidPlan):
            RolloutPlan(total_steps=0).validate()

    def test_update_inside_initial_window_rejected(self):
        with self.assertRaises(InvalidPlan):
            RolloutPlan(total_steps=10, update_schedule={4}, ground_truth=lr_frames(15)).validate()

    def test_update_beyond_rollout_rejected(self):
        with self.assertRaises(InvalidPlan):
            RolloutPlan(total_steps=10, update_schedule={15}, ground_truth=lr_frames(20)).validate()

    def test_update_without_ground_truth_rejected(self):
        with self.assertRaises(InvalidPlan):
            RolloutPlan(total_steps=10, update_schedule={6}).validate()
        with self.assertRaises(InvalidPlan):
            RolloutPlan(total_steps=10, update_schedule={12}, ground_truth=lr_frames(10)).validate()

    def test_schedule_from_release_times(self):
        dt_output = 600.0
        schedule = {int(round(seconds / dt_output)) for seconds in (3600.0, 5400.0, 9000.0)}
        self.assertEqual(schedule, {6, 9, 15})


class RolloutTests(SimpleTestCase):

    def setUp(self):
        self.model = small_tm()
        self.truth = lr_frames(38, seed=1)

    def test_starts_from_ground_truth_then_fully_predictive(self):
        result = rollout(self.model, self.truth[:5], RolloutPlan(total_steps=10))

        self.assertEqual(result.frames.shape, (15, 8, 8, 8))
        self.assertEqual(result.predictions.shape, (10, 8, 8, 8))
        self.assertEqual(result.provenance.tolist(), [True] * 5 + [False] * 10)
        for k, row in enumerate(result.window_provenance):
            self.assertEqual(int(row.sum()), max(5 - k, 0))
        np.testing.assert_array_equal(result.window_provenance[0], np.ones(5, dtype=bool))
        self.assertFalse(result.window_provenance[5:].any())
        np.testing.assert_array_equal(result.frames[:5], self.truth[:5])
        np.testing.assert_array_equal(result.frames[5:], result.predictions)

    def test_window_recurrence(self):
        result = rollout(self.model, self.truth[:5], RolloutPlan(total_steps=12))

        indices = result.window_indices
        np.testing.assert_array_equal(indices[1:, :4], indices[:-1, 1:])
        for step in range(1, len(indices)):
            np.testing.assert_array_equal(result.frames[indices[step, :4]], result.frames[indices[step - 1, 1:]])
        # each step predicts the frame right after its window
        for step, window in enumerate(indices):
            expected = predict_step(self.model, result.frames[window][None])[0, 0]
            np.testing.assert_array_equal(result.predictions[step], expected)

    def test_scheduled_updates_inject_ground_truth(self):
        plan = RolloutPlan(total_steps=33, update_schedule={6, 9, 15}, ground_truth=self.truth)
        result = rollout(self.model, self.truth[:5], plan)

        self.assertEqual(np.flatnonzero(result.provenance[5:]).tolist(), [1, 4, 10])
        for index in (6, 9, 15):
            np.testing.assert_array_equal(result.frames[index], self.truth[index])
            self.assertFalse(np.array_equal(result.predictions[index - 5], self.truth[index]))

    def test_updates_leave_prefix_untouched(self):
        plain = rollout(self.model, self.truth[:5], RolloutPlan(total_steps=20))
        updated = rollout(
            self.model, self.truth[:5], RolloutPlan(total_steps=20, update_schedule={9, 15}, ground_truth=self.truth)
        )

        np.testing.assert_array_equal(plain.frames[:9], updated.frames[:9])
        np.testing.assert_array_equal(plain.predictions[:5], updated.predictions[:5])
        self.assertFalse(np.array_equal(plain.frames[9], updated.frames[9]))

    def test_empty_schedule_matches_plain_rollout(self):
        plain = rollout(self.model, self.truth[:5], RolloutPlan(total_steps=8))
        empty = rollout(self.model, self.truth[:5], RolloutPlan(total_steps=8, update_schedule=set(), ground_truth=self.truth))

        np.testing.assert_array_equal(plain.frames, empty.frames)

    def test_wrong_initial_window_rejected(self):
        with self.assertRaises(InvalidPlan):
            rollout(self.model, self.truth[:4], RolloutPlan(total_steps=3))

    def test_high_resolution_rollout_needs_the_baseline(self):
        with self.assertRaises(InvalidArgument):
            rollout_hr(self.model, self.truth[:5], RolloutPlan(total_steps=3))

    def test_high_resolution_rollout(self):
        torch.manual_seed(0)
        model = build_hrtm(HRTMConfig(num_layers=1, input_shape=(8, 16, 16)))
        truth = lr_frames(8, shape=(8, 16, 16))
        result = rollout_hr(model, truth[:5], RolloutPlan(total_steps=3))

        self.assertEqual(result.frames.shape, (8, 8, 16, 16))
        self.assertEqual(result.provenance.tolist(), [True] * 5 + [False] * 3)


class DualStageRolloutTests(SimpleTestCase):

    def test_batch_and_stepwise_refinement_agree(self):
        tm, srm = small_tm(), small_srm()
        truth = lr_frames(12)
        plan = RolloutPlan(total_steps=7, update_schedule={8}, ground_truth=truth)

        result, batched = dual_stage_rollout(tm, srm, truth[:5], plan, srm_mode='batch', batch_size=4)
        _, stepwise = dual_stage_rollout(tm, srm, truth[:5], plan, srm_mode='stepwise')

        self.assertEqual(batched.shape, (12, 32, 32, 32))
        self.assertEqual(result.frames.shape, (12, 8, 8, 8))
        np.testing.assert_allclose(batched, stepwise, atol=1e-5)

    def test_stepwise_refines_each_frame_before_the_next_step(self):
        tm, srm = small_tm(), small_srm()
        events = []
        refine = srm.forward
        step = tm.forward
        srm.forward = lambda frames: events.append('refine') or refine(frames)
        tm.forward = lambda window: events.append('step') or step(window)

        dual_stage_rollout(tm, srm, lr_frames(5), RolloutPlan(total_steps=3), srm_mode='stepwise')

        self.assertEqual(events, ['refine'] * 5 + ['step', 'refine'] * 3)

    def test_frame_callback_sees_every_frame_in_order(self):
        truth = lr_frames(9)
        seen = []
        plan = RolloutPlan(total_steps=4, update_schedule={6}, ground_truth=truth)

        result = rollout(small_tm(), truth[:5], plan, on_frame=lambda index, frame: seen.append((index, frame)))

        self.assertEqual([index for index, _ in seen], list(range(9)))
        np.testing.assert_array_equal(np.stack([frame for _, frame in seen]), result.frames)

    def test_unknown_mode_rejected(self):
        with self.assertRaises(InvalidArgument):
            dual_stage_rollout(small_tm(), small_srm(), lr_frames(5), RolloutPlan(total_steps=1), srm_mode='lazy')


class TrainerTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.output = Path(self.directory.name)
        self.train = window_data(6, seed=0)
        self.val = window_data(3, seed=1)

    def tearDown(self):
        self.directory.cleanup()

    def config(self, **overrides):
        settings = dict(epochs=3, batch_size=2, seed=3)
        settings.update(overrides)
        return TrainingConfig(**settings)

    def test_writes_checkpoints_and_history(self):
        train_tm(small_tm(), self.train, self.val, self.config(), SPEC, self.output)

        for name in (BEST, LAST, HISTORY):
            self.assertTrue((self.output / name).exists())
        history = ModelCheckpoint.load(self.output / LAST).history
        self.assertEqual([row['epoch'] for row in history], [1, 2, 3])
        self.assertEqual(set(history[0]), {'epoch', 'train_loss', 'val_loss', 'lr'})

    def test_reloaded_checkpoint_reproduces_validation_loss(self):
        best = train_tm(small_tm(), self.train, self.val, self.config(), SPEC, self.output)
        model, checkpoint = load_checkpoint(self.output / BEST)

        self.assertEqual(checkpoint.kind, 'tm')
        self.assertEqual(checkpoint.normalization_spec(), SPEC)
        self.assertAlmostEqual(checkpoint.best_val_loss, best.best_val_loss)
        val_loss, _ = Trainer(model, 'tm', self.train, self.val, self.config(), SPEC).evaluate()
        self.assertAlmostEqual(val_loss, checkpoint.best_val_loss, delta=1e-6)

    def test_fixed_seed_gives_identical_loss_curves(self):
        first = train_tm(small_tm(seed=5), self.train, self.val, self.config(), SPEC)
        second = train_tm(small_tm(seed=5), self.train, self.val, self.config(), SPEC)

        np.testing.assert_allclose(
            [row['train_loss'] for row in first.history], [row['train_loss'] for row in second.history], rtol=1e-12
        )
        np.testing.assert_allclose(
            [row['val_loss'] for row in first.history], [row['val_loss'] for row in second.history], rtol=1e-12
        )

    def test_best_so_far_validation_is_non_increasing(self):
        best = train_tm(small_tm(), self.train, self.val, self.config(epochs=5), SPEC)
        best_so_far = np.minimum.accumulate([row['val_loss'] for row in best.history])

        self.assertTrue(np.all(np.diff(best_so_far) <= 0))
        self.assertEqual(best.best_val_loss, best_so_far[-1])

    def test_best_checkpoint_records_the_best_epoch(self):
        best = train_tm(small_tm(), self.train, self.val, self.config(epochs=6), SPEC, self.output)
        losses = [row['val_loss'] for row in best.history]
        best_epoch = best.history[int(np.argmin(losses))]['epoch']

        self.assertEqual(best.epoch, best_epoch)
        self.assertEqual(ModelCheckpoint.load(self.output / BEST).epoch, best_epoch)
        self.assertEqual(ModelCheckpoint.load(self.output / LAST).epoch, 6)

    def test_resume_keeps_the_best_epoch(self):
        train_tm(small_tm(seed=2), self.train, self.val, self.config(epochs=2), SPEC, self.output)
        first = ModelCheckpoint.load(self.output / BEST)
        resumed = train_tm(small_tm(seed=2), self.train, self.val, self.config(epochs=4), SPEC, self.output, resume=True)
        losses = [row['val_loss'] for row in resumed.history]

        self.assertEqual(resumed.epoch, resumed.history[int(np.argmin(losses))]['epoch'])
        self.assertLessEqual(first.epoch, 2)

    def test_resume_reaches_the_same_epoch_count(self):
        uninterrupted = train_tm(small_tm(seed=2), self.train, self.val, self.config(epochs=4), SPEC)

        train_tm(small_tm(seed=2), self.train, self.val, self.config(epochs=2), SPEC, self.output)
        resumed = train_tm(small_tm(seed=2), self.train, self.val, self.config(epochs=4), SPEC, self.output, resume=True)

        self.assertEqual([row['epoch'] for row in resumed.history], [1, 2, 3, 4])
        self.assertEqual(ModelCheckpoint.load(self.output / LAST).epoch, 4)
        np.testing.assert_allclose(
            [row['val_loss'] for row in resumed.history],
            [row['val_loss'] for row in uninterrupted.history],
            rtol=1e-5,
        )

    def test_resume_without_checkpoint(self):
        with self.assertRaises(ArtifactMissing):
            train_tm(small_tm(), self.train, self.val, self.config(), SPEC, self.output, resume=True)

    def test_normalization_required(self):
        with self.assertRaises(InvalidArgument):
            train_tm(small_tm(), self.train, self.val, self.config())

    def test_nan_loss_aborts_with_position(self):
        inputs = torch.full((4, 5, 8, 8, 8), float('nan'))
        broken = TensorDataset(inputs, torch.zeros(4, 1, 8, 8, 8))

        with self.assertRaises(TrainingDiverged) as context:
            train_tm(small_tm(), broken, self.val, self.config(), SPEC)

        self.assertEqual(context.exception.epoch, 1)
        self.assertEqual(context.exception.batch, 0)

    def test_missing_checkpoint(self):
        with self.assertRaises(ArtifactMissing):
            load_checkpoint(self.output / BEST)

    def test_refinement_history_tracks_baselines(self):
        hr = torch.from_numpy(np.stack([blob((32, 32, 32), center=c) for c in (0.3, 0.5, 0.7)]))
        lr = torch.nn.functional.avg_pool3d(hr.unsqueeze(1), 4).squeeze(1)
        pairs = TensorDataset(lr, hr)

        best = train_srm(small_srm(), pairs, pairs, self.config(epochs=2), SPEC)

        for column in ('downsample_mse', 'trilinear_mse', 'trilinear_downsample_mse'):
            self.assertIn(column, best.history[-1])
            self.assertGreaterEqual(best.history[-1][column], 0.0)


class OverfitTests(SimpleTestCase):
    """
    Capacity checks: every network can memorise a single example.
    """

    def overfit(self, train, model, inputs, target, epochs):
        dataset = TensorDataset(inputs, target)
        config = TrainingConfig(epochs=epochs, batch_size=1, learning_rate=1e-3, plateau_patience=50, seed=0)
        best = train(model, dataset, dataset, config, SPEC)
        return min(row['train_loss'] for row in best.history)

    @tag('slow')
    def test_temporal_model(self):
        target = torch.from_numpy(blob((8, 8, 8)))[None, None]
        inputs = target.repeat(1, 5, 1, 1, 1) * torch.linspace(0.6, 1.0, 5)[None, :, None, None, None]
        model = small_tm(channels=(8, 16, 32), dropout_rate=0.0)

        self.assertLess(self.overfit(train_tm, model, inputs, target, 2000), 1e-4)

    @tag('slow')
    def test_refinement_model(self):
        hr = torch.from_numpy(blob((32, 32, 32)))[None]
        lr = torch.nn.functional.avg_pool3d(hr.unsqueeze(1), 4).squeeze(1)

        self.assertLess(self.overfit(train_srm, small_srm(channels=(8, 16, 8)), lr, hr, 2000), 1e-4)

    @tag('slow')
    def test_high_resolution_model(self):
        target = torch.from_numpy(blob((8, 16, 16)))[None, None]
        inputs = target.repeat(1, 5, 1, 1, 1) * torch.linspace(0.6, 1.0, 5)[None, :, None, None, None]
        torch.manual_seed(0)
        model = build_hrtm(HRTMConfig(num_layers=1, dropout_rate=0.0, input_shape=(8, 16, 16)))

        self.assertLess(self.overfit(train_hrtm, model, inputs, target, 1000), 1e-4)


class RefinementLearningTests(SimpleTestCase):
    """
    The trained refinement model has to beat trilinear upsampling and stay consistent
    with its input under average pooling.
    """

    def pairs(self):
        axes = np.meshgrid(*[np.arange(32)] * 3, indexing='ij')
        # alternating sign on every axis: pools to zero, invisible at low resolution
        checker = 0.05 * (-1.0) ** sum(axes)
        hr = np.stack([blob((32, 32, 32), center=c, width=0.15) + checker for c in (0.35, 0.5, 0.65)])
        hr = torch.from_numpy(hr.astype(np.float32))
        lr = torch.nn.functional.avg_pool3d(hr.unsqueeze(1), 4).squeeze(1)
        return lr, hr

    @tag('slow')
    def test_beats_trilinear_and_keeps_downsample_consistency(self):
        lr, hr = self.pairs()
        dataset = TensorDataset(lr, hr)
        config = TrainingConfig(epochs=1500, batch_size=1, learning_rate=1e-3, plateau_patience=50, seed=0)

        model = small_srm(channels=(8, 16, 8))
        best = train_srm(model, dataset, dataset, config, SPEC)
        row = next(row for row in best.history if row['epoch'] == best.epoch)

        self.assertLess(best.best_val_loss, row['trilinear_mse'])
        # train_srm leaves the best weights loaded
        pooled = average_pool_downsample(super_resolve(model, lr.numpy()), 4)
        np.testing.assert_allclose(pooled, lr.numpy(), atol=0.05)


class SerializerTests(SimpleTestCase):

    def test_defaults(self):
        serializer = ModelsSerializer(data={})
        self.assertTrue(serializer.is_valid(), serializer.errors)

        configs = ModelsSerializer.to_configs(serializer.validated_data)
        self.assertEqual(configs['tm'], TMConfig())
        self.assertEqual(configs['srm'], SRMConfig())
        self.assertEqual(configs['hrtm'], HRTMConfig())

    def test_nested_sections(self):
        serializer = ModelsSerializer(data={
            'tm': {'bottleneck_kind': 'convlstm', 'channels': [4, 8, 16]},
            'srm': {'pool_dims': [[1, 2, 2], [1, 2, 2]]},
        })
        self.assertTrue(serializer.is_valid(), serializer.errors)

        configs = ModelsSerializer.to_configs(serializer.validated_data)
        self.assertEqual(configs['tm'].bottleneck_kind, 'convlstm')
        self.assertEqual(configs['tm'].channels, (4, 8, 16))
        self.assertEqual(configs['srm'].pool_dims, ((1, 2, 2), (1, 2, 2)))

    def test_unknown_bottleneck_rejected(self):
        serializer = TMSerializer(data={'bottleneck_kind': 'attention'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('bottleneck_kind', serializer.errors)

    def test_only_fourfold_refinement(self):
        serializer = SRMSerializer(data={'scale': 2})
        self.assertFalse(serializer.is_valid())

    def test_training_cross_checks(self):
        serializer = TrainingSerializer(data={'plateau_factor': 1.5})
        self.assertFalse(serializer.is_valid())

        serializer = TrainingSerializer(data={'epochs': 5, 'learning_rate': 0.01})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(TrainingSerializer.to_config(serializer.validated_data).epochs, 5)
