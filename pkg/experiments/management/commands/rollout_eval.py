from experiments.pipeline import cmd_rollout_eval

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Rolls the trained models out over the test runs, scores them and draws the figures.'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--bypass-models', action='store_true', help='score the ground truth against itself (smoke check)'
        )

    def extra_flags(self, options):
        return ['--bypass-models'] if options['bypass_models'] else []

    def run(self, config, options, command):
        reports = cmd_rollout_eval(config, bypass=options['bypass_models'], command=command)
        for model, report in reports.items():
            summary = ', '.join(f'{name} {value["mean"]:.4g} ± {value["std"]:.2g}'
                                for name, value in report.aggregate().items())
            self.stdout.write(f'{model}: {summary}')
        self.stdout.write(self.style.SUCCESS(f'Reports written to {config.reports_dir}'))
