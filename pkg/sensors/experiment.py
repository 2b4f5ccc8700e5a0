"""
The observational-update experiment: every test run is rolled out with and without
ground-truth updates, refined, and compared at the sensors and over the volume.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from core.exceptions import InvalidPlan
from corpus.normalization import inverse_log_normalize, log_normalize
from corpus.sequence import ConcentrationSequence
from evaluation.metrics import aggregate_reports, evaluate_rollout
from surrogates.rollout import RolloutPlan, dual_stage_rollout, rollout_hr

from .traces import SPLIT_TIME, compare_traces, extract_trace, traces_frame

logger = logging.getLogger(__name__)

PLAIN = 'tm_srm'
UPDATED = 'tm_srm_updated'
BASELINE = 'hrtm'


@dataclass
class UpdateExperiment:
    """
    reports:     model -> MetricsReport over all test runs
    traces:      long table (run, sensor, model, time, value), truth included
    errors:      per run, sensor and model trace errors from compare_traces
    improvement: per sensor, run-mean error after the split with and without updates
    """

    reports: dict
    traces: pd.DataFrame
    errors: pd.DataFrame
    improvement: pd.DataFrame
    schedule: tuple

    def near_source_wins(self):
        """
        (runs where updates did not worsen the near-band post-split error, runs).
        """

        near = self.errors[self.errors['band'] == 'near']
        if near.empty:
            return 0, 0
        per_run = near.groupby(['run', 'model'])['mae_after'].mean().unstack('model')
        return int((per_run[UPDATED] <= per_run[PLAIN]).sum()), len(per_run)


def schedule_from_times(times, dt_output):
    """
    Frame indices of update times on the frame clock; 3600, 5400 and 9000 s at a
    600 s cadence give frames 6, 9 and 15.
    """

    schedule = set()
    for seconds in times:
        index = seconds / dt_output
        if abs(index - round(index)) > 1e-9:
            raise InvalidPlan(f'update time {seconds} s is not a multiple of the {dt_output} s output cadence')
        schedule.add(int(round(index)))
    return frozenset(schedule)


def _hr_sequence(sample, normalized, spec):
    return ConcentrationSequence(
        values=inverse_log_normalize(normalized, spec),
        dt_output=sample.dt_output,
        cell_size_zyx=sample.hr_cell_size_zyx,
        origin=sample.origin,
    )


def _improvement(errors):
    table = errors.groupby(['sensor', 'band', 'model'])['mae_after'].mean().unstack('model')
    table['improvement'] = table[PLAIN] - table[UPDATED]
    return table.reset_index()


def run_update_experiment(tm, srm, test_samples, schedule, spec, sensors, metric_config, hrtm=None,
                          split_time=SPLIT_TIME, batch_size=8):
    """
    Paired rollouts per test sample (empty schedule vs 'schedule' frame indices).
    """

    schedule = tuple(sorted(schedule))
    reports = {PLAIN: [], UPDATED: [], BASELINE: []}
    traces, errors = [], []

    for sample in test_samples:
        lr = log_normalize(sample.lr, spec).astype(np.float32)
        hr = log_normalize(sample.hr, spec).astype(np.float32)
        steps = sample.n_steps - 5

        refined = {}
        for model, updates in ((PLAIN, ()), (UPDATED, schedule)):
            plan = RolloutPlan(total_steps=steps, update_schedule=updates, ground_truth=lr)
            _, refined[model] = dual_stage_rollout(tm, srm, lr[:5], plan, batch_size=batch_size)
        if hrtm is not None:
            refined[BASELINE] = rollout_hr(hrtm, hr[:5], RolloutPlan(total_steps=steps)).frames

        truth_sequence = sample.hr_sequence()
        truth_traces = {sensor.id: extract_trace(truth_sequence, sensor) for sensor in sensors}
        model_traces = {}
        for model, frames in refined.items():
            reports[model].append(evaluate_rollout(
                frames, hr, metric_config, spec, run_id=sample.run_id, model=model,
                cell_volume=truth_sequence.cell_volume,
            ))
            sequence = _hr_sequence(sample, frames, spec)
            model_traces[model] = {sensor.id: extract_trace(sequence, sensor, model=model) for sensor in sensors}

        run_errors = compare_traces(truth_traces, model_traces, sensors, split_time)
        run_errors.insert(0, 'run', sample.run_id)
        errors.append(run_errors)
        traces.append(traces_frame(truth_traces.values(), sample.run_id))
        for model_trace in model_traces.values():
            traces.append(traces_frame(model_trace.values(), sample.run_id))
        logger.info('update experiment finished run %s', sample.run_id)

    errors = pd.concat(errors, ignore_index=True)
    experiment = UpdateExperiment(
        reports={model: aggregate_reports(runs) for model, runs in reports.items() if runs},
        traces=pd.concat(traces, ignore_index=True),
        errors=errors,
        improvement=_improvement(errors),
        schedule=schedule,
    )
    wins, runs = experiment.near_source_wins()
    logger.info('updates at frames %s helped near-source sensors on %d of %d runs', schedule, wins, runs)
    return experiment
