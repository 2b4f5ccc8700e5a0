from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Artifact',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('path', models.CharField(max_length=1000, unique=True)),
                ('kind', models.CharField(choices=[('corpus', 'Corpus run'), ('manifest', 'Corpus manifest'), ('checkpoint', 'Model checkpoint'), ('history', 'Training history'), ('report', 'Metrics report'), ('plot', 'Figure'), ('timing', 'Timing record')], max_length=10)),
                ('config_hash', models.CharField(blank=True, max_length=64)),
                ('seeds', models.JSONField(default=dict)),
                ('command', models.TextField(blank=True)),
                ('created', models.DateTimeField(auto_now=True)),
            ],
            options={
                'ordering': ('-created',),
            },
        ),
    ]
