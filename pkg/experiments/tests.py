import io
import json
import tempfile
from pathlib import Path
from types import SimpleNamespace
from unittest import skipUnless

import numpy as np
import pandas as pd
import torch
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, TransactionTestCase, override_settings, tag

from core.exceptions import ArtifactMissing, InvalidArgument, InvalidConfig
from corpus.models import SimulationRun
from corpus.normalization import NormalizationSpec
from dispersion.conditions import WindCondition
from surrogates.networks import build_hrtm, build_srm, build_tm

from .config import apply_overrides, build_config, load_config, parse_override
from .models import Artifact
from .pipeline import closest_run
from .provenance import audit
from .timing import TimingRecord, benchmark, median_ratio, time_steps

TINY_EXPERIMENT = {
    'data': {
        'name': 'tiny',
        'n_runs': 10,
        'crop_extent_zyx': [200.0, 1000.0, 1000.0],
        'crop_anchor_xy': [1000.0, 1000.0],
        'lr_shape': [8, 8, 8],
        'hr_shape': [32, 32, 32],
        'source': {'x_release': 1000.0, 'y_release': 1000.0},
    },
    'simulation': {
        'domain_extent_zyx': [400.0, 2000.0, 2000.0],
        'grid_cells_zyx': [10, 20, 20],
        'dt_output': 60.0,
        'n_output_steps': 8,
        'duration': 480.0,
        'terrain_amplitude': 40.0,
        'terrain_correlation_length': 500.0,
        'terrain_features': 4,
    },
    'models': {
        'tm': {'channels': [4, 8, 16], 'input_shape': [8, 8, 8]},
        'srm': {'channels': [4, 8, 4], 'input_shape': [8, 8, 8]},
        'hrtm': {'num_layers': 1, 'input_shape': [32, 32, 32]},
    },
    'training': {
        'tm': {'epochs': 1, 'batch_size': 4},
        'srm': {'epochs': 1, 'batch_size': 4},
        'hrtm': {'epochs': 1, 'batch_size': 4},
    },
    'evaluation': {
        'sensors': {
            'sensors': [{'id': 'N1', 'x': 1100.0, 'y': 800.0}, {'id': 'N2', 'x': 1300.0, 'y': 700.0}],
            'update_times': [360.0],
            'split_time': 360.0,
        },
        'benchmark': {'repeats': 10, 'warmup': 1},
    },
    'output': {'plots': True},
}


def write_config(directory, data):
    path = Path(directory) / 'experiment.json'
    path.write_text(json.dumps(data))
    return path


class OverrideTests(SimpleTestCase):

    def test_parses_json_values(self):
        self.assertEqual(parse_override('data.n_runs=10'), (['data', 'n_runs'], 10))
        self.assertEqual(parse_override('models.tm.channels=[4,8,16]'), (['models', 'tm', 'channels'], [4, 8, 16]))

    def test_plain_strings_stay_strings(self):
        self.assertEqual(parse_override('output.directory=/tmp/out'), (['output', 'directory'], '/tmp/out'))

    def test_malformed_override(self):
        for text in ('data.n_runs', 'n_runs=3', 'unknown.key=1'):
            with self.assertRaises(InvalidConfig):
                parse_override(text)

    def test_nested_sections_are_created(self):
        raw = apply_overrides({}, ['training.tm.epochs=3'])
        self.assertEqual(raw, {'training': {'tm': {'epochs': 3}}})

    def test_input_is_not_mutated(self):
        raw = {'data': {'n_runs': 5}}
        apply_overrides(raw, ['data.n_runs=7'])
        self.assertEqual(raw['data']['n_runs'], 5)


class ExperimentConfigTests(SimpleTestCase):

    def test_defaults(self):
        config = load_config()

        self.assertEqual(config.corpus.n_runs, 100)
        self.assertEqual(config.corpus.lr_shape, (8, 32, 32))
        self.assertEqual(config.simulation.n_output_steps, 33)
        self.assertEqual(config.training('tm').epochs, 1000)
        self.assertEqual(config.training('srm').epochs, 100)
        self.assertEqual(config.training('hrtm').epochs, 100)
        self.assertEqual(config.evaluation['sensors']['update_times'], [3600.0, 5400.0, 9000.0])

    def test_override_runs(self):
        self.assertEqual(load_config(overrides=['data.n_runs=10']).corpus.n_runs, 10)

    def test_hash_is_stable_and_tracks_changes(self):
        first = load_config()
        self.assertEqual(first.hash, load_config().hash)
        self.assertNotEqual(first.hash, load_config(overrides=['data.n_runs=10']).hash)

    def test_seeds_cover_corpus_and_training(self):
        seeds = load_config(overrides=['training.srm.seed=4']).seeds

        self.assertEqual(seeds['sampling'], 0)
        self.assertEqual(seeds['training']['srm'], 4)

    def test_invalid_value_reports_errors(self):
        with self.assertRaises(InvalidConfig) as raised:
            build_config({'data': {'n_runs': 1}})
        self.assertIn('data', raised.exception.errors)

    def test_model_grids_must_match_corpus(self):
        with self.assertRaises(InvalidConfig):
            build_config({'data': {'lr_shape': [8, 16, 16], 'hr_shape': [32, 64, 64]}})

    def test_file_and_overrides(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, TINY_EXPERIMENT)
            config = load_config(path, ['training.tm.epochs=2'])

        self.assertEqual(config.corpus.name, 'tiny')
        self.assertEqual(config.training('tm').epochs, 2)
        self.assertEqual(config.models['srm'].output_shape, (32, 32, 32))
        self.assertEqual(config.source_path, str(path))

    def test_missing_file(self):
        with self.assertRaises(ArtifactMissing):
            load_config('/nonexistent/experiment.json')

    def test_malformed_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'broken.json'
            path.write_text('{"data": ')
            with self.assertRaises(InvalidConfig):
                load_config(path)

    def test_iou_threshold_follows_normalization(self):
        config = load_config()
        spec = NormalizationSpec(min_val=-9.0, max_val=-1.5)

        self.assertEqual(config.metrics(spec).iou_threshold, -4.5)
        self.assertEqual(load_config(overrides=['evaluation.metrics.iou_threshold=-2']).metrics(spec).iou_threshold,
                         -2.0)

    @override_settings(PLUME_OUTPUT_DIR='/data/plume', PLUME_DEVICE='cuda:1')
    def test_process_settings(self):
        config = load_config()

        self.assertEqual(config.corpus_dir, Path('/data/plume/corpus/desk'))
        self.assertEqual(config.checkpoint_dir('tm'), Path('/data/plume/checkpoints/desk/tm'))
        self.assertEqual(config.training('tm').device, 'cuda:1')


class TimingTests(SimpleTestCase):

    def test_warmup_steps_are_not_timed(self):
        calls = []
        times = time_steps(lambda: calls.append(1), repeats=12, warmup=4)

        self.assertEqual(len(calls), 16)
        self.assertEqual(len(times), 12)
        self.assertTrue(all(t >= 0 for t in times))

    def test_too_few_repeats(self):
        with self.assertRaises(InvalidArgument):
            time_steps(lambda: None, repeats=9)

    def test_record_statistics(self):
        record = TimingRecord('tm_srm', [1.0, 2.0, 3.0, 10.0], warmup=2)

        self.assertEqual(record.mean, 4.0)
        self.assertEqual(record.median, 2.5)
        self.assertAlmostEqual(record.std, pd.Series([1.0, 2.0, 3.0, 10.0]).std(ddof=0))
        self.assertEqual(record.to_dict()['warmup'], 2)

    def test_ratio_uses_medians(self):
        dual = TimingRecord('tm_srm', [1.0, 1.0, 1.0, 10.0], warmup=0)
        baseline = TimingRecord('hrtm', [3.0, 3.0, 3.0, 3.0], warmup=0)

        self.assertEqual(median_ratio(dual, baseline), 3.0)

    @skipUnless(torch.cuda.is_available(), 'needs a CUDA device')
    def test_cuda_steps_include_queued_kernels(self):
        a = torch.rand(2048, 2048, device='cuda')
        times = time_steps(lambda: a @ a, repeats=10, warmup=1, device='cuda')
        launch_only = time_steps(lambda: a @ a, repeats=10, warmup=1, device='cpu')

        self.assertGreater(np.median(times), np.median(launch_only))

    @tag('slow')
    def test_baseline_is_slower_than_dual_stage_at_default_sizes(self):
        torch.manual_seed(0)
        tm, srm, hrtm = build_tm(), build_srm(), build_hrtm()

        dual, baseline, ratio = benchmark(tm, srm, hrtm, repeats=10, warmup=1)

        self.assertEqual((len(dual.times), len(baseline.times)), (10, 10))
        self.assertEqual(ratio, baseline.median / dual.median)
        self.assertGreater(ratio, 1.0)


class ClosestRunTests(SimpleTestCase):

    def test_picks_nearest_condition(self):
        samples = [
            SimpleNamespace(run_id=run_id, condition=WindCondition(speed, direction))
            for run_id, speed, direction in (('a', 2.0, 341.0), ('b', 5.5, 351.0), ('c', 9.0, 359.0))
        ]
        self.assertEqual(closest_run(samples, (5.7, 350.5)).run_id, 'b')


class ArtifactTests(TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.path = Path(self.directory.name) / 'tm_metrics.json'
        self.path.write_text(json.dumps({'metadata': {'config_hash': 'abc', 'seeds': {'sampling': 1}}}))
        self.provenance = {'config_hash': 'abc', 'seeds': {'sampling': 1}, 'command': 'python manage.py rollout_eval'}

    def test_record_is_idempotent(self):
        Artifact.objects.record(self.path, Artifact.Kind.REPORT, self.provenance)
        Artifact.objects.record(self.path, Artifact.Kind.REPORT, dict(self.provenance, config_hash='def'))

        self.assertEqual(Artifact.objects.count(), 1)
        self.assertEqual(Artifact.objects.for_path(self.path).config_hash, 'def')

    def test_audit_from_registry(self):
        Artifact.objects.record(self.path, Artifact.Kind.REPORT, self.provenance)
        record = audit(self.path)

        self.assertEqual(record['source'], 'registry')
        self.assertEqual(record['command'], 'python manage.py rollout_eval')

    def test_audit_falls_back_to_embedded_provenance(self):
        record = audit(self.path)

        self.assertEqual(record['source'], 'file')
        self.assertEqual(record['config_hash'], 'abc')
        self.assertEqual(record['seeds'], {'sampling': 1})

    def test_audit_manifest(self):
        path = Path(self.directory.name) / 'manifest.json'
        path.write_text(json.dumps({'config_hash': 'xyz', 'seeds': {'split': 3}}))

        record = audit(path)
        self.assertEqual((record['kind'], record['config_hash']), ('manifest', 'xyz'))

    def test_audit_unknown_file(self):
        other = Path(self.directory.name) / 'notes.txt'
        other.write_text('hello')

        with self.assertRaises(InvalidArgument):
            audit(other)
        with self.assertRaises(ArtifactMissing):
            audit(Path(self.directory.name) / 'missing.pt')


@tag('slow')
class PipelineTests(TransactionTestCase):
    """
    generate -> train -> rollout_eval -> sensors -> benchmark -> report on a ten-run corpus.
    """

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.output = Path(self.directory.name) / 'output'
        self.config = write_config(self.directory.name, TINY_EXPERIMENT)

    def command(self, name, *args):
        stdout = io.StringIO()
        call_command(name, '--config', str(self.config), '--output', str(self.output), *args, stdout=stdout)
        return stdout.getvalue()

    def test_full_pipeline(self):
        self.assertIn('train 8, val 1, test 1', self.command('generate'))
        self.assertEqual(SimulationRun.objects.filter(corpus='tiny').count(), 10)
        with self.assertRaises(CommandError):
            self.command('generate')

        for model in ('tm', 'srm', 'hrtm'):
            self.command('train', '--model', model)
            self.assertTrue((self.output / 'checkpoints' / 'tiny' / model / 'best.pt').exists())

        self.command('rollout_eval')
        reports = self.output / 'reports' / 'tiny'
        frame = pd.read_csv(reports / 'tm_srm_metrics.csv')
        self.assertEqual(set(frame['metric']), {'mse', 'iou', 'ssim', 'cm'})
        self.assertEqual(frame['step'].max(), 8)
        self.assertEqual(len(frame), 4 * 8)
        self.assertTrue((self.output / 'figures' / 'tiny' / 'metrics.png').exists())

        self.command('sensors')
        self.assertTrue((reports / 'sensors' / 'errors.csv').exists())

        self.command('benchmark')
        timing = json.loads((reports / 'timing.json').read_text())
        self.assertEqual([record['model'] for record in timing['records']], ['tm_srm', 'hrtm'])
        self.assertEqual(len(timing['records'][0]['times']), 10)
        medians = [record['median'] for record in timing['records']]
        self.assertAlmostEqual(timing['ratio'], medians[1] / medians[0])

        table = self.command('report')
        self.assertIn('hrtm', table)
        self.assertTrue((reports / 'comparison.csv').exists())

        manifest = self.output / 'corpus' / 'tiny' / 'manifest.json'
        provenance = json.loads(self.command('report', '--audit', str(manifest)))
        self.assertEqual(provenance['kind'], 'manifest')
        self.assertIn('generate', provenance['command'])
        self.assertEqual(provenance['config_hash'], json.loads(manifest.read_text())['config_hash'])

    def test_bypass_gives_ideal_metrics(self):
        self.command('generate')
        self.command('rollout_eval', '--bypass-models')

        frame = pd.read_csv(self.output / 'reports' / 'tiny' / 'bypass_metrics.csv')
        values = frame.groupby('metric')['value']
        self.assertEqual(values.max()['mse'], 0.0)
        self.assertEqual(values.min()['iou'], 1.0)
        self.assertAlmostEqual(values.min()['ssim'], 1.0, places=12)
        self.assertEqual(values.max()['cm'], 0.0)

    def test_missing_corpus_is_a_command_error(self):
        with self.assertRaisesMessage(CommandError, 'ArtifactMissing'):
            self.command('train', '--model', 'tm')

    def test_regenerating_is_byte_identical(self):
        self.command('generate')
        manifest = self.output / 'corpus' / 'tiny' / 'manifest.json'
        first = manifest.read_bytes()
        run = (self.output / 'corpus' / 'tiny' / 'run_000.plm').read_bytes()

        self.command('generate', '--force')
        self.assertEqual(manifest.read_bytes(), first)
        self.assertEqual((self.output / 'corpus' / 'tiny' / 'run_000.plm').read_bytes(), run)
