import json

from experiments.pipeline import cmd_report
from experiments.provenance import audit

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Prints the model comparison table, or the provenance of artifacts with --audit.'

    def add_command_arguments(self, parser):
        parser.add_argument('--audit', nargs='+', metavar='PATH', help='artifacts to print the provenance of')

    def run(self, config, options, command):
        if options['audit']:
            for path in options['audit']:
                self.stdout.write(json.dumps(audit(path), indent=2, sort_keys=True))
            return

        table = cmd_report(config, command=command)
        self.stdout.write(table.to_string(index=False))
        self.stdout.write(self.style.SUCCESS(f'Comparison table written to {config.reports_dir / "comparison.csv"}'))
