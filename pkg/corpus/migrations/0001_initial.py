from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='SimulationRun',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_id', models.CharField(max_length=32)),
                ('corpus', models.CharField(max_length=100)),
                ('speed_ms', models.FloatField()),
                ('direction_deg', models.FloatField()),
                ('split', models.CharField(choices=[('train', 'Train'), ('val', 'Validation'), ('test', 'Test')], max_length=5)),
                ('path', models.CharField(max_length=500)),
                ('config_hash', models.CharField(blank=True, max_length=64)),
                ('created', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ('corpus', 'run_id'),
                'unique_together': {('corpus', 'run_id')},
            },
        ),
    ]
