from rest_framework import serializers

from core.exceptions import InvalidArgument, InvalidConfig
from dispersion.serializers import triple

from .config import BOTTLENECK_KINDS, SKIP_MODES, HRTMConfig, SRMConfig, TMConfig, TrainingConfig


class ConfigSerializer(serializers.Serializer):
    """
    Base for sections that map one-to-one onto a frozen config dataclass; the dataclass
    performs the cross-field checks.
    """

    config_class = None

    def validate(self, data):
        try:
            self.to_config(data)
        except (InvalidConfig, InvalidArgument) as error:
            raise serializers.ValidationError(str(error))

        return data

    @classmethod
    def to_config(cls, data):
        return cls.config_class(**data)


class TMSerializer(ConfigSerializer):
    config_class = TMConfig

    channels = triple(serializers.IntegerField(min_value=1))
    dropout_rate = serializers.FloatField(required=False, min_value=0)
    bottleneck_kind = serializers.ChoiceField(choices=BOTTLENECK_KINDS, required=False)
    skip_mode = serializers.ChoiceField(choices=SKIP_MODES, required=False)
    input_window = serializers.IntegerField(required=False, min_value=1)
    input_shape = triple(serializers.IntegerField(min_value=1))


class HRTMSerializer(ConfigSerializer):
    config_class = HRTMConfig

    num_layers = serializers.IntegerField(required=False, min_value=1)
    dropout_rate = serializers.FloatField(required=False, min_value=0)
    bottleneck_kind = serializers.ChoiceField(choices=BOTTLENECK_KINDS, required=False)
    skip_mode = serializers.ChoiceField(choices=SKIP_MODES, required=False)
    input_window = serializers.IntegerField(required=False, min_value=1)
    input_shape = triple(serializers.IntegerField(min_value=1))


class SRMSerializer(ConfigSerializer):
    config_class = SRMConfig

    channels = triple(serializers.IntegerField(min_value=1))
    negative_slope = serializers.FloatField(required=False, min_value=0)
    pool_dims = serializers.ListField(
        child=triple(serializers.IntegerField(min_value=1), required=True), min_length=2, max_length=2, required=False
    )
    up_strides = serializers.ListField(
        child=triple(serializers.IntegerField(min_value=1), required=True), min_length=4, max_length=4, required=False
    )
    input_shape = triple(serializers.IntegerField(min_value=1))
    scale = serializers.IntegerField(required=False, min_value=1)

    def validate_scale(self, value):
        if value != 4:
            raise serializers.ValidationError('Only fourfold refinement is supported.')

        return value


class TrainingSerializer(ConfigSerializer):
    config_class = TrainingConfig

    epochs = serializers.IntegerField(required=False, min_value=1)
    batch_size = serializers.IntegerField(required=False, min_value=1)
    learning_rate = serializers.FloatField(required=False)
    plateau_factor = serializers.FloatField(required=False)
    plateau_patience = serializers.IntegerField(required=False, min_value=0)
    grad_clip = serializers.FloatField(required=False)
    seed = serializers.IntegerField(required=False, min_value=0)
    device = serializers.CharField(required=False)

    def validate_grad_clip(self, value):
        if value <= 0:
            raise serializers.ValidationError('Gradient clipping norm must be positive.')

        return value


class ModelsSerializer(serializers.Serializer):
    """
    The models section: one architecture block per network.
    """

    tm = TMSerializer(required=False)
    srm = SRMSerializer(required=False)
    hrtm = HRTMSerializer(required=False)

    @staticmethod
    def to_configs(data):
        return {
            'tm': TMSerializer.to_config(data.get('tm', {})),
            'srm': SRMSerializer.to_config(data.get('srm', {})),
            'hrtm': HRTMSerializer.to_config(data.get('hrtm', {})),
        }
