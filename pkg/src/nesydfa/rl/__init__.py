"""Non-Markovian reinforcement learning with automaton-augmented state."""
from .a2c import (
    AGENTS, A2cConfig, ConfigError, Episode, TrainResult, a2c_train, a2c_update, consistent_permutations,
    grounder_loss, grounder_update, labeling_accuracy, make_agent, nrm_agent_step, returns, rollout,
    symbol_classes,
)
from .env import ACTIONS, EpisodeOver, GridWorld, Layout
from .experiment import RlConfig, RunSpec, run_experiment, run_specs
from .tasks import GRID_ALPHABET, minecraft_formula, task_dfa, task_formula, task_ids, task_suite

__all__ = [
    "AGENTS", "A2cConfig", "ConfigError", "Episode", "TrainResult", "a2c_train", "a2c_update",
    "consistent_permutations", "grounder_loss", "grounder_update", "labeling_accuracy", "make_agent",
    "nrm_agent_step", "returns", "rollout", "symbol_classes", "ACTIONS", "EpisodeOver", "GridWorld",
    "Layout", "RlConfig", "RunSpec", "run_experiment", "run_specs", "GRID_ALPHABET",
    "minecraft_formula", "task_dfa", "task_formula", "task_ids", "task_suite",
]
