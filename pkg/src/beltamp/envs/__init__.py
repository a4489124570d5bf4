from .gridworld import (DEAD, DIRS, GridEnv, GridWorld, dump_grid, grid_domain_text, grid_step,
                        grid_true_mdp, load_grid, random_grid)
from .hidden_object import (HiddenObjectEnv, HiddenObjectWorld, ObjectBelief, look_update,
                            optimal_value)
from .occupancy import (HandoverEnv, HandoverWorld, OccupancyGrid, collision_probability,
                        occupancy_decay, straight_path)
from .toy import GraspEnv, SymbolicEnv, bandit_env, chain_env, risky_shortcut_env

__all__ = [
    "DEAD", "DIRS", "GridEnv", "GridWorld", "dump_grid", "grid_domain_text", "grid_step",
    "grid_true_mdp", "load_grid", "random_grid", "HiddenObjectEnv", "HiddenObjectWorld",
    "ObjectBelief", "look_update", "optimal_value", "HandoverEnv", "HandoverWorld",
    "OccupancyGrid", "collision_probability", "occupancy_decay", "straight_path", "GraspEnv",
    "SymbolicEnv", "bandit_env", "chain_env", "risky_shortcut_env",
]
