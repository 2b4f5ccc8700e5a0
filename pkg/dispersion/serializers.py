from rest_framework import serializers

from core.exceptions import InvalidArgument, InvalidConfig

from .conditions import SimConfig, SourceSpec


def triple(child, required=False, **kwargs):
    """
    A (z, y, x) list field of exactly three values.
    """

    return serializers.ListField(child=child, min_length=3, max_length=3, required=required, **kwargs)


class SourceSerializer(serializers.Serializer):
    """
    Validates the release point. Missing keys fall back to the SourceSpec defaults.
    """

    x_release = serializers.FloatField(required=False)
    y_release = serializers.FloatField(required=False)
    z_release = serializers.FloatField(required=False, allow_null=True)
    emission_rate = serializers.FloatField(required=False)

    def validate_emission_rate(self, value):
        if value <= 0:
            raise serializers.ValidationError('Emission rate must be positive.')

        return value

    @staticmethod
    def to_spec(data):
        return SourceSpec(**data)


class SimulationSerializer(serializers.Serializer):
    """
    Validates the simulation section of an experiment config and builds a SimConfig.

    Cross-field checks are delegated to SimConfig itself so that the config file and the
    Python API refuse exactly the same configurations.
    """

    domain_extent_zyx = triple(serializers.FloatField(min_value=0))
    grid_cells_zyx = triple(serializers.IntegerField(min_value=1))
    dt_solver = serializers.FloatField(required=False, allow_null=True, min_value=0)
    dt_output = serializers.FloatField(required=False, min_value=0)
    n_output_steps = serializers.IntegerField(required=False, min_value=1)
    duration = serializers.FloatField(required=False, min_value=0)
    diffusivity = serializers.FloatField(required=False, min_value=0)
    decay_halflife = serializers.FloatField(required=False, allow_null=True)
    roughness_length = serializers.FloatField(required=False, min_value=0)
    reference_height = serializers.FloatField(required=False, min_value=0)
    profile_cap_height = serializers.FloatField(required=False, min_value=0)
    terrain_amplitude = serializers.FloatField(required=False, min_value=0)
    terrain_correlation_length = serializers.FloatField(required=False, min_value=0)
    terrain_features = serializers.IntegerField(required=False, min_value=1)
    projection_tolerance = serializers.FloatField(required=False, min_value=0)
    projection_max_iterations = serializers.IntegerField(required=False, min_value=1)
    record_interval = serializers.FloatField(required=False, allow_null=True)

    def validate(self, data):
        try:
            SimConfig(**data)
        except (InvalidConfig, InvalidArgument) as error:
            raise serializers.ValidationError(str(error))

        return data

    @staticmethod
    def to_config(data):
        return SimConfig(**data)
