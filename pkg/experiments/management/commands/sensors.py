from experiments.pipeline import cmd_sensors

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Runs the observational-update experiment and compares sensor traces.'

    def run(self, config, options, command):
        experiment = cmd_sensors(config, command=command)
        self.stdout.write(experiment.improvement.to_string(index=False))
        wins, runs = experiment.near_source_wins()
        self.stdout.write(self.style.SUCCESS(
            f'Updates at frames {list(experiment.schedule)} helped near-source sensors on {wins} of {runs} runs'
        ))
