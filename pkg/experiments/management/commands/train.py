from experiments.pipeline import MODEL_KINDS, cmd_train

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Trains the temporal model, the refinement model or the high-resolution baseline.'

    def add_command_arguments(self, parser):
        parser.add_argument('--model', choices=MODEL_KINDS, required=True)
        parser.add_argument('--epochs', type=int, help='override training.<model>.epochs')
        parser.add_argument('--resume', action='store_true', help='continue from the last checkpoint')

    def flag_overrides(self, options):
        if options['epochs'] is None:
            return []
        return [f'training.{options["model"]}.epochs={options["epochs"]}']

    def extra_flags(self, options):
        return ['--model', options['model']] + (['--resume'] if options['resume'] else [])

    def run(self, config, options, command):
        best = cmd_train(config, options['model'], resume=options['resume'], command=command)
        self.stdout.write(self.style.SUCCESS(
            f'{best.kind}: best validation loss {best.best_val_loss:.6g} at epoch {best.epoch}; '
            f'checkpoints in {config.checkpoint_dir(best.kind)}'
        ))
