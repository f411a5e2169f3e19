"""Deep Q-network agent built on a small numpy multilayer perceptron."""
from invlab.dqn.agent import (
    PRESET_OVERRIDES,
    TUNED_OVERRIDES,
    Agent,
    AgentConfig,
    TrainLog,
    Transition,
    preset_config,
    train,
)
from invlab.dqn.network import (
    Adam,
    Network,
    build_network,
    clip_by_global_norm,
    forward,
    load_weights,
    loss_and_grad,
    network_from_dict,
    network_to_dict,
    save_weights,
)

__all__ = [
    "PRESET_OVERRIDES", "TUNED_OVERRIDES", "Agent", "AgentConfig", "TrainLog", "Transition",
    "preset_config", "train", "Adam", "Network", "build_network", "clip_by_global_norm", "forward",
    "load_weights", "loss_and_grad", "network_from_dict", "network_to_dict", "save_weights",
]
