from dataclasses import replace

from spiderris.scenario import ArrayShape, PsoParams, RfChainPolicy, default_config


def small_config(**changes):
    """Уменьшенная конфигурация для быстрых тестов."""
    config, geometry = default_config()
    values = {
        "tx_antennas": ArrayShape(4, 4),
        "rx_antennas": ArrayShape(4, 4),
        "ris_elements": ArrayShape(4, 4),
        "num_paths": 4,
        "pso": PsoParams(swarm_size=5, iterations=5),
        "monte_carlo_trials": 2,
    }
    values.update(changes)
    return replace(config, **values), geometry


def tiny_config(ris=ArrayShape(2, 1), **changes):
    """
    Малые решётки, ослабленное затухание и каскад RIS без усиления
    отражения: скорости порядка десятых долей и единиц бит/с/Гц.
    """
    config, geometry = default_config()
    values = {
        "tx_antennas": ArrayShape(2, 2),
        "rx_antennas": ArrayShape(2, 2),
        "ris_elements": ris,
        "num_paths": 3,
        "num_streams": 1,
        "rf_chain_policy": RfChainPolicy(min_chains=1, max_chains=4),
        "path_loss_exponent": 2.0,
        "transmit_power_dbm": 60.0,
        "ris_reflection_gain_db": 0.0,
        "pso": PsoParams(swarm_size=6, iterations=5),
    }
    values.update(changes)
    return replace(config, **values), geometry
