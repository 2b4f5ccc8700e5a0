"""
Corpus generation: simulate every sampled condition, cut each run down to the paired
low/high-resolution grids, split, fit the normalization and write the manifest.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from core.exceptions import ArtifactExists
from dispersion.generator import simulate_condition
from dispersion.sampling import sample_conditions
from dispersion.terrain import generate_terrain

from .config import CorpusConfig
from .container import write_sample
from .manifest import MANIFEST_NAME, CorpusManifest
from .normalization import fit_normalization, log_range
from .sequence import DualResolutionSample
from .splits import split_runs
from .transforms import crop_volume, resize_sequence

logger = logging.getLogger(__name__)

RUN_PATTERN = 'run_*.plm'


def run_file_name(run_id):
    return f'{run_id}.plm'


def build_sample(sequence, condition, run_id, config=None, metadata=None):
    """
    Crop -> resize to both model grids -> DualResolutionSample (float32, linear units).

    Each run's log10 range at both resolutions is recorded under metadata['normalization']
    so that the training-split fit never has to reload the arrays.
    """

    config = config or CorpusConfig()
    cropped = crop_volume(sequence, config.crop_extent_zyx, config.crop_anchor_xy)
    lr = resize_sequence(cropped, config.lr_shape)
    hr = resize_sequence(cropped, config.hr_shape)

    lr_values = lr.values.astype(np.float32)
    hr_values = hr.values.astype(np.float32)
    details = {
        'crop_cells_zyx': list(cropped.grid_shape),
        'crop_extent_zyx': list(cropped.extent_zyx),
        'release_offset': sequence.release_offset,
        'normalization': {
            'log_floor': config.log_floor,
            'lr': list(log_range(lr_values, config.log_floor)),
            'hr': list(log_range(hr_values, config.log_floor)),
        },
    }
    details.update(metadata or {})

    return DualResolutionSample(
        run_id=run_id,
        condition=condition,
        lr=lr_values,
        hr=hr_values,
        dt_output=sequence.dt_output,
        lr_cell_size_zyx=lr.cell_size_zyx,
        hr_cell_size_zyx=hr.cell_size_zyx,
        origin=cropped.origin,
        scale=config.scale,
        metadata=details,
    )


def _simulate_run(job):
    """
    Worker body: one condition from simulation to PLM1 file.
    """

    run_id, condition, sim_config, corpus_config, terrain, path, provenance = job
    sequence, ledger = simulate_condition(condition, sim_config, source=corpus_config.source, terrain=terrain)
    metadata = dict(provenance, max_mass_residual=ledger.max_residual)
    sample = build_sample(sequence, condition, run_id, corpus_config, metadata)
    write_sample(path, sample)

    return {
        'run_id': run_id,
        'file': path.name,
        'condition': condition.to_dict(),
        'ranges': sample.metadata['normalization'],
        'max_mass_residual': ledger.max_residual,
    }


def generate_corpus(corpus_config, sim_config, output_dir, workers=1, config_hash='', force=False):
    """
    Writes one PLM1 file per sampled condition plus the manifest into 'output_dir' and
    returns the CorpusManifest. Output bytes depend only on the configs.
    """

    output_dir = Path(output_dir)
    if (output_dir / MANIFEST_NAME).exists() and not force:
        raise ArtifactExists(f'a corpus already exists in {output_dir}; pass --force to regenerate it')

    output_dir.mkdir(parents=True, exist_ok=True)
    for stale in output_dir.glob(RUN_PATTERN):
        stale.unlink()

    conditions = sample_conditions(corpus_config.n_runs, corpus_config.sampling_seed)
    terrain = generate_terrain(sim_config, corpus_config.terrain_seed)
    provenance = {'config_hash': config_hash, 'seeds': corpus_config.seeds}

    jobs = []
    for index, condition in enumerate(conditions):
        run_id = f'run_{index:03d}'
        jobs.append(
            (run_id, condition, sim_config, corpus_config, terrain, output_dir / run_file_name(run_id), provenance)
        )

    logger.info('generating %d runs into %s with %d worker(s)', len(jobs), output_dir, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_run, jobs))
    else:
        results = [_simulate_run(job) for job in jobs]

    train, val, test = split_runs([result['run_id'] for result in results], corpus_config.split_seed)
    assignment = {run_id: split for split, ids in (('train', train), ('val', val), ('test', test)) for run_id in ids}

    train_ranges = []
    for result in results:
        if assignment[result['run_id']] == 'train':
            train_ranges.extend([tuple(result['ranges']['lr']), tuple(result['ranges']['hr'])])
    normalization = fit_normalization(train_ranges, corpus_config.log_floor)

    runs = [
        {
            'run_id': result['run_id'],
            'file': result['file'],
            'condition': result['condition'],
            'split': assignment[result['run_id']],
            'max_mass_residual': result['max_mass_residual'],
        }
        for result in results
    ]
    manifest = CorpusManifest(
        name=corpus_config.name,
        config_hash=config_hash,
        seeds=corpus_config.seeds,
        runs=runs,
        normalization=normalization,
        lr_shape=corpus_config.lr_shape,
        hr_shape=corpus_config.hr_shape,
        dt_output=sim_config.dt_output,
        settings={'corpus': _jsonable(corpus_config.to_dict()), 'simulation': _jsonable(sim_config.to_dict())},
    )
    manifest.write(output_dir)
    logger.info('corpus %s written: splits %s', corpus_config.name, manifest.split_sizes())

    return manifest


def _jsonable(data):
    if isinstance(data, dict):
        return {key: _jsonable(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [_jsonable(value) for value in data]
    return data
