from pathlib import Path

from django.db import models


class ArtifactManager(models.Manager):

    def record(self, path, kind, provenance):
        """
        Registers (or refreshes) the artifact at 'path' with the provenance of the
        command that wrote it.
        """

        artifact, _ = self.update_or_create(
            path=str(Path(path).resolve()),
            defaults={
                'kind': kind,
                'config_hash': provenance.get('config_hash', ''),
                'seeds': provenance.get('seeds', {}),
                'command': provenance.get('command', ''),
            },
        )
        return artifact

    def for_path(self, path):
        return self.filter(path=str(Path(path).resolve())).first()


class Artifact(models.Model):
    """
    The database model registering every file a command writes.
    """

    class Kind(models.TextChoices):
        """
        Enum representing what an artifact holds
        """

        CORPUS = ('corpus', 'Corpus run')
        MANIFEST = ('manifest', 'Corpus manifest')
        CHECKPOINT = ('checkpoint', 'Model checkpoint')
        HISTORY = ('history', 'Training history')
        REPORT = ('report', 'Metrics report')
        PLOT = ('plot', 'Figure')
        TIMING = ('timing', 'Timing record')

    path = models.CharField(max_length=1000, unique=True)
    kind = models.CharField(max_length=10, choices=Kind.choices)

    config_hash = models.CharField(max_length=64, blank=True)
    seeds = models.JSONField(default=dict)
    command = models.TextField(blank=True)

    created = models.DateTimeField(auto_now=True)

    objects = ArtifactManager()

    class Meta:
        ordering = ('-created',)

    def __str__(self):
        return f'{self.kind}: {self.path}'
