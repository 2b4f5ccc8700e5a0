from rest_framework import serializers

from core.exceptions import InvalidArgument, InvalidConfig
from dispersion.serializers import SourceSerializer, triple

from .config import CorpusConfig


class DataSerializer(serializers.Serializer):
    """
    Validates the data section of an experiment config: corpus size, seeds, crop and
    target grids. Missing keys keep the CorpusConfig defaults.
    """

    name = serializers.SlugField(required=False)
    n_runs = serializers.IntegerField(required=False, min_value=3)
    sampling_seed = serializers.IntegerField(required=False, min_value=0)
    terrain_seed = serializers.IntegerField(required=False, min_value=0)
    split_seed = serializers.IntegerField(required=False, min_value=0)
    crop_extent_zyx = triple(serializers.FloatField(min_value=0))
    crop_anchor_xy = serializers.ListField(
        child=serializers.FloatField(), min_length=2, max_length=2, required=False
    )
    lr_shape = triple(serializers.IntegerField(min_value=1))
    hr_shape = triple(serializers.IntegerField(min_value=1))
    log_floor = serializers.FloatField(required=False)
    source = SourceSerializer(required=False)

    def validate_log_floor(self, value):
        if value <= 0:
            raise serializers.ValidationError('The log floor must be positive.')

        return value

    def validate(self, data):
        try:
            self.to_config(data)
        except (InvalidConfig, InvalidArgument) as error:
            raise serializers.ValidationError(str(error))

        return data

    @staticmethod
    def to_config(data):
        data = dict(data)
        if 'source' in data:
            data['source'] = SourceSerializer.to_spec(data['source'])
        return CorpusConfig(**data)
