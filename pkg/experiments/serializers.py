from rest_framework import serializers

from corpus.serializers import DataSerializer
from dispersion.serializers import SimulationSerializer
from evaluation.serializers import MetricSerializer
from sensors.serializers import SensorsSerializer
from surrogates.rollout import WINDOW
from surrogates.serializers import ModelsSerializer, TrainingSerializer

SRM_MODES = ('batch', 'stepwise')


class TrainingSectionSerializer(serializers.Serializer):
    """
    Hyperparameters per network; unset epochs fall back to the per-network defaults.
    """

    tm = TrainingSerializer(required=False)
    srm = TrainingSerializer(required=False)
    hrtm = TrainingSerializer(required=False)


class BenchmarkSerializer(serializers.Serializer):
    repeats = serializers.IntegerField(required=False, min_value=10, default=20)
    warmup = serializers.IntegerField(required=False, min_value=0, default=3)


class EvaluationSerializer(serializers.Serializer):
    metrics = MetricSerializer(required=False)
    sensors = SensorsSerializer(required=False)
    benchmark = BenchmarkSerializer(required=False)
    srm_mode = serializers.ChoiceField(choices=SRM_MODES, required=False, default='batch')
    batch_size = serializers.IntegerField(required=False, min_value=1, default=8)
    compare_hrtm = serializers.BooleanField(required=False, default=True)
    plane_condition = serializers.ListField(
        child=serializers.FloatField(), min_length=2, max_length=2, required=False, default=[5.7, 350.5]
    )
    plane_frame = serializers.IntegerField(required=False, allow_null=True, default=None)

    def validate_plane_frame(self, value):
        if value is not None and value < WINDOW:
            raise serializers.ValidationError(f'The plane comparison frame must be a predicted frame (>= {WINDOW}).')

        return value


class OutputSerializer(serializers.Serializer):
    directory = serializers.CharField(required=False, allow_null=True, default=None)
    plots = serializers.BooleanField(required=False, default=True)


class ExperimentConfigSerializer(serializers.Serializer):
    """
    A whole experiment file. Every section is optional; a missing file means desk-scale
    defaults throughout.
    """

    data = DataSerializer(required=False)
    simulation = SimulationSerializer(required=False)
    models = ModelsSerializer(required=False)
    training = TrainingSectionSerializer(required=False)
    evaluation = EvaluationSerializer(required=False)
    output = OutputSerializer(required=False)

    def validate(self, data):
        models = ModelsSerializer.to_configs(data.get('models', {}))
        corpus = DataSerializer.to_config(data.get('data', {}))

        if models['tm'].input_shape != corpus.lr_shape or models['srm'].input_shape != corpus.lr_shape:
            raise serializers.ValidationError('The temporal and refinement models must take the corpus lr_shape.')
        if models['hrtm'].input_shape != corpus.hr_shape:
            raise serializers.ValidationError('The high-resolution baseline must take the corpus hr_shape.')
        if models['srm'].output_shape != corpus.hr_shape:
            raise serializers.ValidationError('The refinement model must produce the corpus hr_shape.')

        return data
