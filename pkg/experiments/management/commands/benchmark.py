from experiments.pipeline import cmd_benchmark

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Times one dual-stage step against one high-resolution baseline step.'

    def add_command_arguments(self, parser):
        parser.add_argument('--repeats', type=int, help='timed steps per model (at least 10)')
        parser.add_argument('--warmup', type=int, help='untimed steps before timing')

    def flag_overrides(self, options):
        names = [name for name in ('repeats', 'warmup') if options[name] is not None]
        return [f'evaluation.benchmark.{name}={options[name]}' for name in names]

    def run(self, config, options, command):
        dual, baseline, ratio = cmd_benchmark(config, command=command)
        self.stdout.write(str(dual))
        self.stdout.write(str(baseline))
        self.stdout.write(self.style.SUCCESS(
            f'baseline / dual-stage median time ratio {ratio:.2f} on {dual.hardware["platform"]}'
        ))
