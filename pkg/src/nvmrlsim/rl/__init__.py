from .core import (ACTIONS, EpisodeLog, Transition, cumulative_reward_series,
                   depth_reward, discounted_return, epsilon_greedy,
                   episode_return_series, q_update, safe_flight_distance,
                   select_action)
from .corridor import CorridorWorld, make_env_pair
from .net import ReplayBuffer, ToyNet, finite_diff_check, train_step
from .experiment import (ExperimentConfig, ExperimentResult, build_net,
                         meta_train, run_experiment)

__all__ = [
    "ACTIONS", "EpisodeLog", "Transition", "cumulative_reward_series",
    "depth_reward", "discounted_return", "epsilon_greedy", "episode_return_series",
    "q_update", "safe_flight_distance", "select_action",
    "CorridorWorld", "make_env_pair",
    "ReplayBuffer", "ToyNet", "finite_diff_check", "train_step",
    "ExperimentConfig", "ExperimentResult", "build_net", "meta_train", "run_experiment",
]
