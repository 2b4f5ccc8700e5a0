"""
The experiment pipeline behind the management commands: generate, train, rollout_eval,
sensors, benchmark and report. Each step reads its inputs from the output tree of the
previous ones and registers what it writes.
"""

import logging

import numpy as np
import torch

from core.exceptions import ArtifactMissing, InvalidConfig
from corpus.builder import generate_corpus, run_file_name
from corpus.container import atomic_write
from corpus.manifest import MANIFEST_NAME, load_split, read_manifest
from corpus.models import SimulationRun
from corpus.normalization import log_normalize
from corpus.windows import SuperResolutionDataset, WindowDataset
from dispersion.conditions import DIRECTION_RANGE, SPEED_RANGE
from evaluation.metrics import MetricsReport, aggregate_reports, comparison_table, evaluate_rollout, to_log10
from evaluation.plots import plot_metrics, plot_plane_means
from sensors.experiment import run_update_experiment, schedule_from_times
from sensors.plots import plot_sensor_traces
from sensors.serializers import SensorsSerializer
from surrogates.rollout import WINDOW, RolloutPlan, dual_stage_rollout, rollout_hr
from surrogates.training import BEST, HISTORY, LAST, build_model, load_checkpoint, train_hrtm, train_srm, train_tm

from .models import Artifact
from .timing import benchmark, write_timings

logger = logging.getLogger(__name__)

MODEL_KINDS = ('tm', 'srm', 'hrtm')
TRAINERS = {'tm': train_tm, 'srm': train_srm, 'hrtm': train_hrtm}
DUAL_STAGE = 'tm_srm'
BYPASS = 'bypass'


def _record(paths, kind, provenance):
    for path in paths:
        Artifact.objects.record(path, kind, provenance)


def _open_corpus(config):
    manifest = read_manifest(config.corpus_dir)
    if tuple(manifest.lr_shape) != config.corpus.lr_shape or tuple(manifest.hr_shape) != config.corpus.hr_shape:
        raise InvalidConfig(
            f'corpus {config.corpus_dir} holds {manifest.lr_shape}/{manifest.hr_shape} grids but the config asks '
            f'for {config.corpus.lr_shape}/{config.corpus.hr_shape}; regenerate it with --force'
        )
    return manifest


def _load(config, kind):
    path = config.checkpoint_dir(kind) / BEST
    if not path.exists():
        raise ArtifactMissing(f'no {kind} checkpoint at {path}; run "train --model {kind}" first')
    model, _ = load_checkpoint(path, config.training(kind).device)
    return model


def cmd_generate(config, workers=1, force=False, command=''):
    """
    Simulates and writes the corpus, then registers its runs and files.
    """

    provenance = config.provenance(command)
    directory = config.corpus_dir
    manifest = generate_corpus(
        config.corpus, config.simulation, directory, workers=workers, config_hash=config.hash, force=force
    )

    SimulationRun.objects.sync_manifest(manifest, directory)
    _record([directory / run_file_name(run['run_id']) for run in manifest.runs], Artifact.Kind.CORPUS, provenance)
    _record([directory / MANIFEST_NAME], Artifact.Kind.MANIFEST, provenance)
    return manifest


def _datasets(kind, manifest, directory, scale):
    spec = manifest.normalization
    splits = [load_split(directory, manifest, split) for split in ('train', 'val')]
    if kind == 'srm':
        return [SuperResolutionDataset([sample.hr for sample in samples], spec, scale) for samples in splits]
    field = 'lr' if kind == 'tm' else 'hr'
    return [WindowDataset([getattr(sample, field) for sample in samples], spec) for samples in splits]


def cmd_train(config, kind, resume=False, command=''):
    """
    Trains one network on the corpus training split; returns the best ModelCheckpoint.
    """

    if kind not in MODEL_KINDS:
        raise InvalidConfig(f'unknown model {kind!r}, expected one of {MODEL_KINDS}')

    manifest = _open_corpus(config)
    train, val = _datasets(kind, manifest, config.corpus_dir, config.corpus.scale)
    training = config.training(kind)

    torch.manual_seed(training.seed)
    model = build_model(kind, config.models[kind])
    output_dir = config.checkpoint_dir(kind)
    logger.info('training %s on %d windows (%d validation) into %s', kind, len(train), len(val), output_dir)

    provenance = config.provenance(command)
    best = TRAINERS[kind](
        model, train, val, config=training, normalization=manifest.normalization, output_dir=output_dir,
        resume=resume, provenance=provenance,
    )
    _record([output_dir / BEST, output_dir / LAST], Artifact.Kind.CHECKPOINT, provenance)
    _record([output_dir / HISTORY], Artifact.Kind.HISTORY, provenance)
    return best


def closest_run(samples, condition):
    """
    The sample whose wind condition is nearest 'condition' (speed, direction), each
    component scaled by its sampling range.
    """

    speed, direction = condition

    def distance(sample):
        d_speed = (sample.condition.speed_ms - speed) / (SPEED_RANGE[1] - SPEED_RANGE[0])
        d_direction = (sample.condition.direction_deg - direction) / (DIRECTION_RANGE[1] - DIRECTION_RANGE[0])
        return d_speed ** 2 + d_direction ** 2

    return min(samples, key=distance)


def _write_reports(reports, directory, provenance, normalization):
    for report in reports.values():
        report.metadata.update(provenance, normalization=normalization.to_dict())
        _record(report.write(directory), Artifact.Kind.REPORT, provenance)


def cmd_rollout_eval(config, bypass=False, command=''):
    """
    Rolls every test run out with TM + SRM (and the HRTM baseline) and scores it against
    the high-resolution truth. With bypass=True the truth itself is scored, which must
    give ideal values throughout.
    """

    manifest = _open_corpus(config)
    spec = manifest.normalization
    evaluation = config.evaluation
    metric_config = config.metrics(spec)
    samples = load_split(config.corpus_dir, manifest, 'test')
    if not samples:
        raise ArtifactMissing(f'corpus {config.corpus_dir} has no test runs')

    models = {}
    if not bypass:
        models = {kind: _load(config, kind) for kind in ('tm', 'srm')}
        if evaluation['compare_hrtm']:
            models['hrtm'] = _load(config, 'hrtm')

    plane_sample = closest_run(samples, evaluation['plane_condition'])
    plane_fields = {}
    per_run = {}
    for sample in samples:
        lr = log_normalize(sample.lr, spec).astype(np.float32)
        hr = log_normalize(sample.hr, spec).astype(np.float32)
        plan = RolloutPlan(total_steps=sample.n_steps - WINDOW)

        if bypass:
            predictions = {BYPASS: hr}
        else:
            _, refined = dual_stage_rollout(
                models['tm'], models['srm'], lr[:WINDOW], plan, evaluation['srm_mode'], evaluation['batch_size']
            )
            predictions = {DUAL_STAGE: refined}
            if 'hrtm' in models:
                predictions['hrtm'] = rollout_hr(models['hrtm'], hr[:WINDOW], plan).frames

        cell_volume = sample.hr_sequence().cell_volume
        for model, frames in predictions.items():
            per_run.setdefault(model, []).append(evaluate_rollout(
                frames, hr, metric_config, spec, run_id=sample.run_id, model=model, cell_volume=cell_volume
            ))
        if sample is plane_sample:
            plane_fields = {'truth': hr, **predictions}
        logger.info('evaluated run %s (%s)', sample.run_id, ', '.join(predictions))

    reports = {model: aggregate_reports(runs) for model, runs in per_run.items()}
    provenance = config.provenance(command)
    _write_reports(reports, config.reports_dir, provenance, spec)

    if config.plots:
        figures = [plot_metrics(reports, config.figures_dir / 'metrics.png', dt_output=manifest.dt_output)]
        frame = evaluation['plane_frame'] if evaluation['plane_frame'] is not None else plane_sample.n_steps - 1
        if frame >= plane_sample.n_steps:
            raise InvalidConfig(
                f'plane_frame {frame} lies beyond the {plane_sample.n_steps} frames of {plane_sample.run_id}'
            )
        truth = plane_fields.pop('truth')
        condition = plane_sample.condition
        figures.append(plot_plane_means(
            to_log10(truth[frame], spec),
            {model: to_log10(frames[frame], spec) for model, frames in plane_fields.items()},
            config.figures_dir / f'planes_{plane_sample.run_id}.png',
            title=f'{plane_sample.run_id}: {condition.speed_ms:.1f} m/s from {condition.direction_deg:.1f}°, '
                  f'frame {frame}',
        ))
        _record(figures, Artifact.Kind.PLOT, provenance)

    return reports


def cmd_sensors(config, command=''):
    """
    The observational-update experiment over the test split; returns the UpdateExperiment.
    """

    manifest = _open_corpus(config)
    spec = manifest.normalization
    evaluation = config.evaluation
    section = evaluation['sensors']
    source = config.corpus.source
    sensors = SensorsSerializer.to_sensors(section, (source.x_release, source.y_release))
    schedule = schedule_from_times(section['update_times'], manifest.dt_output)

    samples = load_split(config.corpus_dir, manifest, 'test')
    hrtm = _load(config, 'hrtm') if evaluation['compare_hrtm'] else None
    experiment = run_update_experiment(
        _load(config, 'tm'), _load(config, 'srm'), samples, schedule, spec, sensors, config.metrics(spec),
        hrtm=hrtm, split_time=section['split_time'], batch_size=evaluation['batch_size'],
    )

    provenance = config.provenance(command)
    directory = config.reports_dir / 'sensors'
    _write_reports(experiment.reports, directory, provenance, spec)
    tables = []
    for name, frame in (('traces', experiment.traces), ('errors', experiment.errors),
                        ('improvement', experiment.improvement)):
        path = directory / f'{name}.csv'
        atomic_write(path, [frame.to_csv(index=False).encode()])
        tables.append(path)
    _record(tables, Artifact.Kind.REPORT, provenance)

    if config.plots:
        figure = plot_sensor_traces(
            experiment.traces, sensors, config.figures_dir / 'sensor_traces.png', section['split_time']
        )
        _record([figure], Artifact.Kind.PLOT, provenance)
    return experiment


def cmd_benchmark(config, repeats=None, warmup=None, command=''):
    """
    Times TM + SRM against the HRTM per step; returns (dual-stage record, baseline record, ratio).
    """

    section = config.evaluation['benchmark']
    repeats = section['repeats'] if repeats is None else repeats
    warmup = section['warmup'] if warmup is None else warmup
    device = config.training('tm').device

    tm, srm, hrtm = (_load(config, kind) for kind in MODEL_KINDS)
    dual, baseline, ratio = benchmark(tm, srm, hrtm, repeats=repeats, warmup=warmup, device=device)

    path = write_timings(config.reports_dir / 'timing.json', (dual, baseline), ratio)
    _record([path], Artifact.Kind.TIMING, config.provenance(command))
    return dual, baseline, ratio


def read_reports(directory):
    """
    Every <model>_metrics.csv in 'directory' as a MetricsReport, sorted by model.
    """

    reports = [MetricsReport.read(path) for path in sorted(directory.glob('*_metrics.csv'))]
    if not reports:
        raise ArtifactMissing(f'no metric reports in {directory}; run rollout_eval first')
    return reports


def cmd_report(config, command=''):
    """
    The model comparison table over all evaluated reports (sensor-experiment models included).
    """

    directory = config.reports_dir
    reports = read_reports(directory)
    sensors = directory / 'sensors'
    if sensors.exists() and any(sensors.glob('*_metrics.csv')):
        seen = {report.model for report in reports}
        reports += [report for report in read_reports(sensors) if report.model not in seen]

    table = comparison_table(reports)
    path = directory / 'comparison.csv'
    atomic_write(path, [table.to_csv(index=False).encode()])
    _record([path], Artifact.Kind.REPORT, config.provenance(command))
    return table
