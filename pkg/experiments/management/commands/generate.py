from django.conf import settings

from experiments.pipeline import cmd_generate

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Simulates the sampled wind conditions and writes the paired-resolution corpus.'

    def add_command_arguments(self, parser):
        parser.add_argument('--runs', type=int, help='number of runs (data.n_runs)')
        parser.add_argument('--workers', type=int, default=settings.PLUME_WORKERS, help='simulation processes')
        parser.add_argument('--force', action='store_true', help='replace an existing corpus')

    def flag_overrides(self, options):
        return [f'data.n_runs={options["runs"]}'] if options['runs'] is not None else []

    def extra_flags(self, options):
        return ['--force'] if options['force'] else []

    def run(self, config, options, command):
        manifest = cmd_generate(config, workers=options['workers'], force=options['force'], command=command)
        train, val, test = manifest.split_sizes()
        self.stdout.write(self.style.SUCCESS(
            f'Corpus {manifest.name}: {len(manifest.runs)} runs (train {train}, val {val}, test {test}) '
            f'in {config.corpus_dir}'
        ))
