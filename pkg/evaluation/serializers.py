from rest_framework import serializers

from core.exceptions import InvalidConfig

from .metrics import CM_MODES, MetricConfig


class MetricSerializer(serializers.Serializer):
    """
    Metric settings. A null iou_threshold is resolved against the corpus normalization
    when the evaluation runs.
    """

    iou_threshold = serializers.FloatField(required=False, allow_null=True)
    ssim_window = serializers.IntegerField(required=False, min_value=3)
    ssim_k1 = serializers.FloatField(required=False, min_value=0)
    ssim_k2 = serializers.FloatField(required=False, min_value=0)
    ssim_data_range = serializers.FloatField(required=False)
    cm_normalization = serializers.ChoiceField(choices=CM_MODES, required=False)

    def validate_ssim_window(self, value):
        if value % 2 == 0:
            raise serializers.ValidationError('The SSIM window must be odd.')

        return value

    def validate(self, data):
        try:
            self.to_config(data)
        except InvalidConfig as error:
            raise serializers.ValidationError(str(error))

        return data

    @staticmethod
    def to_config(data, iou_threshold=None):
        data = dict(data)
        if data.get('iou_threshold') is None:
            data.pop('iou_threshold', None)
            if iou_threshold is not None:
                data['iou_threshold'] = iou_threshold
        return MetricConfig(**data)
