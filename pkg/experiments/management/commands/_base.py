import json
import shlex

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import PlumeError
from experiments.config import load_config


class ExperimentCommand(BaseCommand):
    """
    Shared options of the experiment commands: a JSON config, '--set section.key=value'
    overrides and the output directory. Dedicated flags become overrides too, so the
    recorded command line reproduces the run.
    """

    def add_arguments(self, parser):
        parser.add_argument('--config', help='experiment JSON file (defaults everywhere when omitted)')
        parser.add_argument(
            '--set', dest='overrides', action='append', default=[], metavar='SECTION.KEY=VALUE',
            help='override one config key; the value is parsed as JSON when possible',
        )
        parser.add_argument('--output', help=f'output root (default {settings.PLUME_OUTPUT_DIR})')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def flag_overrides(self, options):
        return []

    def extra_flags(self, options):
        return []

    def run(self, config, options, command):
        raise NotImplementedError

    def command_line(self, options, overrides):
        name = self.__module__.rsplit('.', 1)[-1]
        parts = ['python', 'manage.py', name]
        if options['config']:
            parts += ['--config', options['config']]
        for override in overrides:
            parts += ['--set', override]
        return shlex.join(parts + self.extra_flags(options))

    def handle(self, *args, **options):
        overrides = list(options['overrides'])
        if options['output']:
            overrides.append(f'output.directory={json.dumps(options["output"])}')
        overrides += self.flag_overrides(options)

        try:
            call_command('migrate', verbosity=0, interactive=False)
            config = load_config(options['config'], overrides)
            self.run(config, options, self.command_line(options, overrides))
        except PlumeError as error:
            raise CommandError(error.describe())
