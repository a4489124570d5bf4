"""Experiment runners behind the command line: environments by name, learning
curves on grid worlds, closed-loop episodes and method comparisons."""

from __future__ import annotations

import dataclasses
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from ..baselines import (BaselineSpec, ContingentModel, epsilon_greedy_learn, run_method,
                         wao_open_loop)
from ..belief import Environment, derive_seed
from ..control import ControlConfig, EpisodeLog
from ..envs import (GridEnv, HandoverEnv, HiddenObjectEnv, HiddenObjectWorld, SymbolicEnv,
                    bandit_env, chain_env, load_grid, random_grid, risky_shortcut_env)
from ..envs.gridworld import DEAD
from ..envs.toy import GraspEnv
from ..learner import LearnerState, NoPlanError, compile_model, learn
from ..props import prop
from ..symbolic import apply_outcome
from ..solver import explicit_closure, mean_se, policy_value, value_iteration
from .config import ConfigError, ExperimentConfig

ENVIRONMENTS = ("grid", "hidden-object", "handover", "chain", "bandit", "shortcut", "grasp",
                "symbolic")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in str(text).split("/") if x)


def grid_world(seed: int, params: Optional[dict] = None):
    params = params or {}
    if "file" in params:
        return load_grid(Path(params["file"]).read_text())
    rng = random.Random(derive_seed(seed, "grid"))
    return random_grid(rng, int(params.get("width", 10)), int(params.get("height", 10)),
                       float(params.get("pmax", 0.2)))


def _parse_objects(text: str) -> dict:
    """``"box: a b; grasp: g1"`` -> {"box": ["a", "b"], "grasp": ["g1"]}"""
    out: dict = {}
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        t, colon, names = chunk.partition(":")
        if not colon:
            raise ConfigError(f"objects entry {chunk!r} is not type: names")
        out.setdefault(t.strip(), []).extend(names.split())
    return out


def make_env(cfg: ExperimentConfig, seed: int) -> Environment:
    """The environment named by ``cfg.env``; grid instances depend on ``seed``."""
    name, p = cfg.env, cfg.env_params
    try:
        if name == "grid":
            return GridEnv(grid_world(seed, p))
        if name == "hidden-object":
            kw = {}
            if "weights" in p:
                kw["weights"] = _floats(p["weights"])
            for key in ("look_noise", "break_prob", "known_threshold"):
                if key in p:
                    kw[key] = float(p[key])
            return HiddenObjectEnv(HiddenObjectWorld(**kw))
        if name == "handover":
            return HandoverEnv()
        if name == "chain":
            return chain_env(int(p.get("n", 2)), float(p.get("p", 1.0)))
        if name == "bandit":
            return bandit_env(_floats(p.get("arms", "0.9/0.1")))
        if name == "shortcut":
            return risky_shortcut_env(float(p.get("p_short", 0.7)), float(p.get("p_long", 0.99)))
        if name == "grasp":
            return GraspEnv(seed)
        if name == "symbolic":
            if not cfg.domain:
                raise ConfigError("the symbolic environment needs domain=<file>")
            text = Path(cfg.domain).read_text()
            init = [prop(s.strip()) for s in cfg.init.split(";") if s.strip()]
            return SymbolicEnv(text, _parse_objects(cfg.objects), init=init)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad parameters for environment {name!r}: {exc}") from None
    raise ConfigError(f"unknown environment {name!r} (choose from {', '.join(ENVIRONMENTS)})")


def control_config(cfg: ExperimentConfig) -> ControlConfig:
    return ControlConfig(cfg.learn, cfg.gamma, cfg.step_limit)


# --- grid learning curves

def _cell_policy(env: GridEnv, policy) -> Callable:
    def act(cell):
        if cell == DEAD:
            return None
        op = policy.action.get(env.abstract(cell, None))
        return None if op is None else op.args[0]
    return act


def optimal_value(env: GridEnv) -> float:
    mdp = env.true_mdp
    return value_iteration(mdp).value[env.world.start]


def normalized_reward(env: GridEnv, model) -> float:
    """Exact value of the model's greedy policy in the true grid, over the optimal value."""
    mdp = env.true_mdp
    vstar = optimal_value(env)
    if vstar <= 0:
        return 1.0
    try:
        closure = explicit_closure(model)
    except (NoPlanError, KeyError):
        return 0.0
    pol = value_iteration(closure)
    v = policy_value(mdp, _cell_policy(env, pol))
    return float(v[mdp.states.index(env.world.start)]) / vstar


def wao_reference(env: GridEnv) -> float:
    """Normalized return of the most probable plan under the true model, run open loop."""
    mdp = env.true_mdp
    _, ret = wao_open_loop(mdp, mdp.states.index(env.world.start))
    vstar = optimal_value(env)
    return ret / vstar if vstar > 0 else 1.0


def occupancy(mdp, policy, start: int) -> "np.ndarray":
    """Expected discounted visits to each state under ``policy`` from ``start``."""
    n = mdp.n
    T = np.zeros((n, n))
    for s in range(n):
        a = None if mdp.goal[s] else policy(mdp.states[s])
        for label, row in mdp.actions[s]:
            if label == a:
                for t, p in row:
                    T[s, t] += p
    e = np.zeros(n)
    e[start] = 1.0
    return np.linalg.solve(np.eye(n) - mdp.gamma * T.T, e)


def transition_pairs(env: GridEnv, table) -> list:
    """[(weight, true p, learned p)] for every outcome of the optimal action in each cell
    the optimal policy visits; weights are its discounted visit frequencies.
    Unexplored actions count as estimating 0 for every outcome."""
    mdp = env.true_mdp
    pol = value_iteration(mdp)
    start = mdp.states.index(env.world.start)
    occ = occupancy(mdp, pol, start)
    out = []
    for s, w in enumerate(occ):
        cell = mdp.states[s]
        if w <= 1e-12 or mdp.goal[s] or cell == DEAD:
            continue
        d = pol.action[cell]
        op = env.operator(cell, d)
        truth = {mdp.states[t]: p for t, p in dict(mdp.actions[s])[d]}
        pre = table.psi_pre(env.abstract(cell, None), op)
        n = table.visits(op, pre)
        est: dict = {}
        if n:
            for psi, c in table.D[(op, pre)].items():
                b2 = apply_outcome(env.abstract(cell, None), op, psi)
                est[env.belief_of(b2)] = est.get(env.belief_of(b2), 0.0) + c / n
        for k in sorted(set(truth) | set(est), key=str):
            out.append((float(w), truth.get(k, 0.0), est.get(k, 0.0)))
    return out


def transition_mae(pairs: list) -> float:
    total = sum(w for w, _, _ in pairs)
    return sum(w * abs(t - e) for w, t, e in pairs) / total if total else 0.0


def _spent(state: LearnerState, unit: str) -> int:
    return state.sims if unit == "sims" else state.iteration


def _advance(spec: BaselineSpec, state, env, cfg: ExperimentConfig, target: int):
    """Learn until ``target`` budget units are spent (or learning gets stuck)."""
    unit = cfg.budget_unit
    while _spent(state, unit) < target:
        before = (state.sims, state.iteration)
        if unit == "sims":
            lc, cap = dataclasses.replace(cfg.learn, I=1_000_000), target
        else:
            lc, cap = dataclasses.replace(cfg.learn, I=target - state.iteration), None
        try:
            if spec.learning == "bayes":
                learn(state, env, lc, gamma=cfg.gamma, max_sims=cap)
            else:
                eps = 1.0 if spec.learning == "random" else spec.epsilon
                epsilon_greedy_learn(state, env, lc, eps, gamma=cfg.gamma, max_sims=cap)
        except NoPlanError:
            return False
        if (state.sims, state.iteration) == before:
            return False
    return True


def learning_curve_rows(spec: BaselineSpec, cfg: ExperimentConfig, seed: int,
                        timing: bool = False) -> list:
    """[(method, seed, budget_used, normalized_reward, wall_ms)] for each budget."""
    return learning_run(spec, cfg, seed, timing)[0]


def learning_run(spec: BaselineSpec, cfg: ExperimentConfig, seed: int, timing: bool = False) -> tuple:
    """Learning-curve rows plus the final learner state (None for "none") and the env."""
    env = make_env(cfg, seed)
    if not isinstance(env, GridEnv):
        raise ConfigError("learning curves need the grid environment (true model required)")
    if spec.learning not in ("bayes", "eps", "random", "none") or spec.decision not in ("lao", "vi"):
        raise ConfigError(f"method {spec} has no learning curve; use bayes, eps or random "
                          "learning (or none) with lao/vi")
    rows = []
    t0 = time.perf_counter()
    if spec.learning == "none":
        b0 = env.abstract(env.initial_belief(), None)
        score = normalized_reward(env, ContingentModel(env.problem, b0, env.is_goal, cfg.gamma))
        wall = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
        return [(str(spec), seed, 0, score, wall) for _ in sorted(cfg.budgets)], None, env
    state = LearnerState.start(env, cfg.learn, seed=derive_seed(seed, "learn"))
    for b in sorted(cfg.budgets):
        _advance(spec, state, env, cfg, b)
        score = normalized_reward(env, compile_model(state, env, cfg.gamma))
        wall = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
        rows.append((str(spec), seed, _spent(state, cfg.budget_unit), score, wall))
    return rows, state, env


def reference_rows(cfg: ExperimentConfig, seed: int) -> list:
    env = make_env(cfg, seed)
    return [("wao-open-loop", seed, 0, wao_reference(env), 0.0)]


def first_budget_reaching(rows: Sequence, threshold: float) -> Optional[int]:
    """Smallest budget whose across-seed mean normalized reward is at least ``threshold``."""
    by_budget: dict = {}
    for _, _, budget, score, _ in rows:
        by_budget.setdefault(budget, []).append(score)
    for b in sorted(by_budget):
        if sum(by_budget[b]) / len(by_budget[b]) >= threshold:
            return b
    return None


# --- closed-loop episodes and method comparison

def episode(spec: BaselineSpec, cfg: ExperimentConfig, seed: int) -> EpisodeLog:
    env = make_env(cfg, seed)
    return run_method(env, spec, control_config(cfg), seed)


def _episode_job(args):
    spec, cfg, seed = args
    return episode(spec, cfg, seed)


def _curve_job(args):
    spec, cfg, seed, timing = args
    return learning_curve_rows(spec, cfg, seed, timing)


def fan_out(fn: Callable, jobs: list, workers: int = 1) -> list:
    """Apply ``fn`` to every job, results in job order whatever the worker count."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_episodes(cfg: ExperimentConfig, specs: Optional[list] = None) -> list:
    """[(spec, seed, EpisodeLog)] in method-then-seed order."""
    specs = specs or cfg.method_specs()
    jobs = [(s, cfg, seed) for s in specs for seed in cfg.seeds]
    logs = fan_out(_episode_job, jobs, cfg.workers)
    return [(s, seed, log) for (s, _, seed), log in zip(jobs, logs)]


def run_learning_curves(cfg: ExperimentConfig, timing: bool = False, reference: bool = False) -> list:
    specs = cfg.method_specs()
    jobs = [(s, cfg, seed, timing) for s in specs for seed in cfg.seeds]
    rows = [r for block in fan_out(_curve_job, jobs, cfg.workers) for r in block]
    if reference:
        for seed in cfg.seeds:
            rows.extend(reference_rows(cfg, seed))
    return rows


def t_quantile(level: float, dof: int) -> float:
    return float(stats.t.ppf(level, dof)) if dof >= 1 else math.inf


@dataclasses.dataclass(frozen=True)
class MethodSummary:
    method: str
    n: int
    mean: float
    se: float
    bold: bool



def summarize(returns: dict, confidence: float = 0.75) -> list:
    """Mean and standard error per method; ``bold`` marks methods whose two-sided
    ``confidence`` interval overlaps that of the best mean."""
    if not returns:
        return []
    level = 0.5 + confidence / 2.0
    rows = []
    for name, xs in returns.items():
        m, se = mean_se(list(xs))
        rows.append([name, len(xs), m, se])
    best = max(rows, key=lambda r: r[2])
    half = lambda r: t_quantile(level, r[1] - 1) * r[3] if r[3] > 0 else 0.0  # noqa: E731
    lo_best = best[2] - half(best)
    return [MethodSummary(n, k, m, se, m + half([n, k, m, se]) >= lo_best - 1e-12)
            for n, k, m, se in rows]


def format_summary(summary: list) -> str:
    width = max([6] + [len(s.method) for s in summary])
    lines = [f"{'method':<{width}}  {'n':>3}  {'mean':>8}  {'se':>8}  best"]
    for s in summary:
        lines.append(f"{s.method:<{width}}  {s.n:>3}  {s.mean:8.4f}  {s.se:8.4f}  {'*' if s.bold else ''}")
    return "\n".join(lines)
