from rest_framework import serializers


class ScenarioFileSerializer(serializers.Serializer):
    """
    Типизация значений конфигурационного файла.

    Проверяет только формат; инварианты проверяет scenario.validate().
    """
    tx_antennas_x = serializers.IntegerField()
    tx_antennas_y = serializers.IntegerField()
    rx_antennas_x = serializers.IntegerField()
    rx_antennas_y = serializers.IntegerField()
    ris_elements_x = serializers.IntegerField()
    ris_elements_y = serializers.IntegerField()
    carrier_frequency_ghz = serializers.FloatField()
    bandwidth_hz = serializers.FloatField()
    noise_psd_dbm_per_hz = serializers.FloatField()
    transmit_power_dbm = serializers.FloatField()
    path_loss_exponent = serializers.FloatField()
    ris_reflection_gain_db = serializers.FloatField()
    num_paths = serializers.IntegerField()
    elevation_spread_deg = serializers.FloatField()
    azimuth_spread_deg = serializers.FloatField()
    element_spacing_wavelengths = serializers.FloatField()
    num_streams = serializers.IntegerField()
    rf_chains_min = serializers.IntegerField()
    rf_chains_max = serializers.IntegerField()
    pso_particles = serializers.IntegerField()
    pso_iterations = serializers.IntegerField()
    pso_social_weight = serializers.FloatField()
    pso_cognitive_weight = serializers.FloatField()
    pso_inertia_start = serializers.FloatField()
    pso_inertia_end = serializers.FloatField()
    pso_velocity_clamp = serializers.FloatField()
    pso_seed = serializers.IntegerField(min_value=0, allow_null=True, required=False)
    monte_carlo_trials = serializers.IntegerField()
    rng_seed = serializers.IntegerField(min_value=0)
    tx_position = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3)
    ue_position = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3)
    platform_x_range = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)
    platform_y_range = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)
    ris_height = serializers.FloatField()


class RateResultSerializer(serializers.Serializer):
    sweep_kind = serializers.CharField()
    swept_value = serializers.CharField()
    baseline = serializers.CharField()
    mean_rate = serializers.FloatField()
    stderr = serializers.FloatField()
    trials = serializers.IntegerField()
    failed_trials = serializers.IntegerField()
    degraded_trials = serializers.IntegerField()
    flagged = serializers.BooleanField()
    seed = serializers.IntegerField()
    config_digest = serializers.CharField()
    ris_x = serializers.FloatField(allow_null=True)
    ris_y = serializers.FloatField(allow_null=True)
    per_trial_rates = serializers.ListField(child=serializers.FloatField(allow_null=True))
    per_trial_positions = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), allow_null=True)
    )


class ResultMetadataSerializer(serializers.Serializer):
    """Файл метаданных рядом с CSV: полная конфигурация и все точки."""
    sweep_kind = serializers.CharField()
    config = serializers.DictField(child=serializers.CharField())
    ris_height = serializers.FloatField()
    fixed_ris_position = serializers.ListField(child=serializers.FloatField())
    angle_model = serializers.CharField()
    link_budget = serializers.CharField()
    results = RateResultSerializer(many=True)
