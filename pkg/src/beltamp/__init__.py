"""Planning over abstract beliefs with learned controller outcome models."""

from .bandit import BetaPrior, OutcomeCounts, bayes_ucb_cost, beta_entropy, beta_quantile
from .belief import BeliefPool, Environment, derive_seed, stationarity_diagnostic
from .control import ControlConfig, EpisodeLog, run_episode
from .detplanner import Plan, plan_topk
from .learner import LearnConfig, LearnerState, OutcomeTable, SparseMdp, compile_model, learn
from .props import AbstractBelief, Proposition, prop
from .solver import ExplicitMdp, Policy, lao_star, policy_value, value_iteration

__version__ = "0.1.0"
