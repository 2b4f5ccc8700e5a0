from rest_framework import serializers

from .traces import SensorSpec, default_sensor_ring, read_sensors


class SensorSerializer(serializers.Serializer):
    id = serializers.CharField(max_length=32)
    x = serializers.FloatField()
    y = serializers.FloatField()


class SensorsSerializer(serializers.Serializer):
    """
    Sensor layout and update schedule. Sensors come from an explicit list, a CSV file,
    or the default ring when neither is given.
    """

    sensors = SensorSerializer(many=True, required=False)
    sensor_file = serializers.CharField(required=False, allow_null=True)
    update_times = serializers.ListField(
        child=serializers.FloatField(min_value=0), required=False, default=[3600.0, 5400.0, 9000.0]
    )
    split_time = serializers.FloatField(required=False, min_value=0, default=9000.0)

    def validate(self, data):
        if data.get('sensors') and data.get('sensor_file'):
            raise serializers.ValidationError('Give either a sensor list or a sensor file, not both.')

        ids = [sensor['id'] for sensor in data.get('sensors', [])]
        if len(ids) != len(set(ids)):
            raise serializers.ValidationError('Sensor ids must be unique.')

        return data

    @staticmethod
    def to_sensors(data, source_xy):
        if data.get('sensor_file'):
            return read_sensors(data['sensor_file'], source_xy)
        if data.get('sensors'):
            return [SensorSpec(source_xy=tuple(source_xy), **sensor) for sensor in data['sensors']]
        return default_sensor_ring(source_xy)
