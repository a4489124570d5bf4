"""The outer loop: learn when the current abstract belief is unexplored, solve, act, repeat."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .belief import Environment, derive_seed
from .learner import LearnConfig, LearnerState, NoPlanError, compile_model, learn
from .solver import NoPolicyError, lao_star
from .symbolic.grounding import outcome_bits

GOAL, FAILED, STEP_LIMIT = "goal-reached", "failed", "step-limit"


@dataclass
class EpisodeStep:
    belief: object  # AbstractBelief before acting
    op: object
    psi_eff: tuple
    wall_ms: float


@dataclass
class EpisodeLog:
    steps: list = field(default_factory=list)
    outcome: str = STEP_LIMIT
    ret: float = 0.0
    relearns: int = 0
    sims: int = 0

    def __len__(self):
        return len(self.steps)

    def csv_row(self, seed: int, timing: bool = False) -> list:
        ops = " ".join(s.op.name for s in self.steps)
        wall = sum(s.wall_ms for s in self.steps) if timing else 0.0
        return [seed, self.outcome, len(self.steps), f"{self.ret:.12g}", self.relearns, self.sims,
                f"{wall:.0f}", ops]


@dataclass
class ControlConfig:
    learn: LearnConfig = field(default_factory=LearnConfig)
    gamma: float = 0.98
    step_limit: int = 100


def _needs_learning(model, bbar) -> bool:
    return not model.actions(bbar)


def default_learner(state, env, config: LearnConfig, gamma: float):
    return learn(state, env, config, gamma=gamma)


def lao_decider(model, bbar, b, seed):
    return lao_star(model).action.get(bbar)


def run_episode(env: Environment, config: ControlConfig = ControlConfig(), seed: int = 0,
                state: Optional[LearnerState] = None, learner: Callable = default_learner,
                decider: Callable = lao_decider) -> EpisodeLog:
    """One closed-loop episode in the true environment, learning on demand.

    ``learner(state, env, learn_config, gamma) -> (state, model)`` runs whenever the
    current abstract belief has no explored operator; ``decider(model, bbar, b, seed)``
    picks the operator to execute. ``state`` is updated in place when given.
    """
    gamma = config.gamma
    rng = random.Random(derive_seed(seed, "world"))
    b = env.initial_belief()
    world = env.sample_state(b, rng)
    if state is None:
        state = LearnerState.start(env, config.learn, seed=derive_seed(seed, "learn"))
    universe = env.problem.universe
    log = EpisodeLog()
    model = compile_model(state, env, gamma)
    for t in range(config.step_limit + 1):
        bbar = env.abstract(b, universe)
        if env.is_goal(bbar):
            log.outcome, log.ret = GOAL, gamma ** t
            break
        if t == config.step_limit:
            log.outcome = STEP_LIMIT
            break
        t0 = time.perf_counter()
        bbar = state.reroot(env, b)
        model.initial = bbar
        try:
            if _needs_learning(model, bbar):
                log.relearns += 1
                state, model = learner(state, env, config.learn, gamma)
                model.initial = bbar
            op = decider(model, bbar, b, derive_seed(seed, "decide", t))
        except (NoPlanError, NoPolicyError):
            op = None
        if op is None:
            log.outcome = FAILED
            break
        world, b, _ = env.step(world, b, op, rng)
        psi = outcome_bits(op, env.abstract(b, universe))
        log.steps.append(EpisodeStep(bbar, op, psi, (time.perf_counter() - t0) * 1000.0))
    log.sims = state.sims
    return log
