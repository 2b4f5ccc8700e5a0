from pathlib import Path

from django.db import models


class SimulationRunManager(models.Manager):

    def sync_manifest(self, manifest, directory):
        """
        Replaces the registry entries of a corpus with the runs listed in its manifest.
        """

        self.filter(corpus=manifest.name).delete()
        runs = [
            self.model(
                run_id=run['run_id'],
                corpus=manifest.name,
                speed_ms=run['condition']['speed_ms'],
                direction_deg=run['condition']['direction_deg'],
                split=run['split'],
                path=str(Path(directory) / run['file']),
                config_hash=manifest.config_hash,
            )
            for run in manifest.runs
        ]
        return self.bulk_create(runs)


class SimulationRun(models.Model):
    """
    The database model registering every simulated run of a corpus.
    """

    class Split(models.TextChoices):
        """
        Enum representing the partition a run belongs to
        """

        TRAIN = ('train', 'Train')
        VAL = ('val', 'Validation')
        TEST = ('test', 'Test')

    run_id = models.CharField(max_length=32)
    corpus = models.CharField(max_length=100)

    speed_ms = models.FloatField()
    direction_deg = models.FloatField()

    split = models.CharField(max_length=5, choices=Split.choices)
    path = models.CharField(max_length=500)
    config_hash = models.CharField(max_length=64, blank=True)

    created = models.DateTimeField(auto_now_add=True)

    objects = SimulationRunManager()

    class Meta:
        unique_together = ('corpus', 'run_id')
        ordering = ('corpus', 'run_id')

    def __str__(self):
        return f'{self.corpus}/{self.run_id}'
