"""Command line entry point (``beltamp``).

Exit status: 0 success, 1 usage error, 2 domain error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional

from ..belief import derive_seed
from ..control import EpisodeLog
from ..detplanner import format_plan, plan_topk
from ..learner import LearnerState, NoPlanError, dump_table, learn, load_table, compile_model
from ..solver import NoPolicyError, dump_policy, lao_star
from ..symbolic import DomainError, parse_domain
from . import experiments as ex
from .config import ConfigError, ExperimentConfig, load_config

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_RUNTIME = 0, 1, 2, 3

EPISODE_HEADER = ["method", "seed", "outcome", "steps", "return", "relearns", "sims", "wall_ms", "ops"]
CURVE_HEADER = ["method", "seed", "budget_used", "normalized_reward", "wall_ms"]
ABLATION_HEADER = ["method", "seed", "return", "outcome", "steps"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_csv(rows: list, header: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="single seed (overrides seeds)")
    common.add_argument("--seeds", help="seed list such as 0-19 or 1,3,5")
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config setting (repeatable)")
    common.add_argument("--env", help="environment, e.g. grid or chain:n=3,p=0.9")
    common.add_argument("--methods", help="comma separated methods, e.g. bayes:lao,mcts")
    common.add_argument("--budgets", help="comma separated budgets")
    common.add_argument("--out", help="write the main output here instead of stdout")
    common.add_argument("--explain", action="store_true", help="print plans and decisions to stderr")
    common.add_argument("--quiet", action="store_true", help="suppress stderr summaries")
    common.add_argument("--timing", action="store_true", help="record wall-clock times in CSV")
    common.add_argument("--workers", type=int, help="parallel worker processes")

    p = _Parser(prog="beltamp", description="Belief-space planning with learned controller models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    pc = sub.add_parser("parse-check", parents=[common], help="parse a domain file and summarize it")
    pc.add_argument("path")
    sub.add_parser("learn", parents=[common], help="run the learner and dump the outcome counts")
    pl = sub.add_parser("plan", parents=[common], help="print the top-K determinized plans")
    pl.add_argument("--table", help="count table from 'learn' (default: empty counts)")
    pl.add_argument("-k", type=int, default=3, help="number of plans")
    pl.add_argument("--iteration", type=int, default=1, help="optimism schedule index")
    so = sub.add_parser("solve", parents=[common], help="learn, then dump the LAO* policy")
    so.add_argument("--table", help="count table from 'learn' instead of learning")
    sub.add_parser("episode", parents=[common], help="closed-loop episodes, one CSV row each")
    lc = sub.add_parser("learning-curve", parents=[common], help="normalized reward vs budget (grid)")
    lc.add_argument("--reference", action="store_true", help="add open-loop WAO reference rows")
    sub.add_parser("ablation", parents=[common], help="compare methods over seeds")
    return p


def resolve_config(args) -> ExperimentConfig:
    overrides: dict = {}
    for item in args.set:
        k, eq, v = item.partition("=")
        if not eq:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[k] = v
    for flag, key in (("env", "env"), ("methods", "methods"), ("budgets", "budgets"),
                      ("seeds", "seeds"), ("out", "out"), ("workers", "workers")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    if args.seed is not None:
        overrides["seeds"] = str(args.seed)
    return load_config(args.config, overrides)


def _emit(text: str, cfg: ExperimentConfig):
    if cfg.out:
        Path(cfg.out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def _note(args, msg: str):
    if not args.quiet:
        print(msg, file=sys.stderr)


def cmd_parse_check(args) -> int:
    try:
        text = Path(args.path).read_text()
    except OSError as exc:
        print(f"{args.path}: error: cannot read file: {exc.strerror}", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        dom = parse_domain(text)
    except DomainError as exc:
        print(f"{args.path}:{exc}", file=sys.stderr)
        return EXIT_DOMAIN
    print(domain_summary(dom))
    return EXIT_OK


def domain_summary(dom) -> str:
    n = len(dom.schemata)
    params = sum(len(s.params) for s in dom.schemata)
    ueff = sum(len(s.ueff) for s in dom.schemata)
    return (f"{n} {'schema' if n == 1 else 'schemata'}, {params} param{'s' * (params != 1)}, "
            f"{ueff} ueffect{'s' * (ueff != 1)}")


def _learned_state(cfg: ExperimentConfig, seed: int, args):
    env = ex.make_env(cfg, seed)
    state = LearnerState.start(env, cfg.learn, seed=derive_seed(seed, "learn"))
    table = getattr(args, "table", None)
    if table:
        state.table = load_table(Path(table).read_text(), env.problem, cfg.learn.prior)
    else:
        learn(state, env, cfg.learn, gamma=cfg.gamma)
    return env, state


def cmd_learn(args, cfg) -> int:
    seed = cfg.seeds[0]
    env, state = _learned_state(cfg, seed, argparse.Namespace(table=None))
    if args.explain:
        for i, nplans, nchosen in state.log:
            print(f"iteration {i}: {nplans} plans, {nchosen} transitions simulated", file=sys.stderr)
    _emit(dump_table(state.table), cfg)
    _note(args, f"{state.sims} simulations over {state.iteration} iterations")
    return EXIT_OK


def cmd_plan(args, cfg) -> int:
    seed = cfg.seeds[0]
    env = ex.make_env(cfg, seed)
    state = LearnerState.start(env, cfg.learn, seed=derive_seed(seed, "learn"))
    if args.table:
        state.table = load_table(Path(args.table).read_text(), env.problem, cfg.learn.prior)
    if args.k < 1:
        raise ConfigError("-k must be at least 1")
    plans = plan_topk(state.root, env.is_goal, env.problem, state.table, args.iteration, args.k,
                      cfg.learn.horizon_cap)
    out = []
    for n, plan in enumerate(plans, 1):
        out.append(f"plan {n}: {len(plan)} steps, cost={plan.cost:.6f}")
        if args.explain:
            out.extend("  " + line for line in format_plan(plan).splitlines())
        else:
            out.append("  " + " ".join(s.op.name for s in plan.steps))
    if not plans:
        out.append("no plan reaches the goal")
    _emit("\n".join(out) + "\n", cfg)
    return EXIT_OK if plans else EXIT_RUNTIME


def cmd_solve(args, cfg) -> int:
    env, state = _learned_state(cfg, cfg.seeds[0], args)
    model = compile_model(state, env, cfg.gamma)
    policy = lao_star(model)
    _emit(dump_policy(policy, env.problem.universe), cfg)
    _note(args, f"V(root) = {policy.value.get(model.initial, 0.0):.6f}")
    return EXIT_OK


def _episode_row(spec, seed: int, log: EpisodeLog, timing: bool) -> list:
    return [str(spec)] + log.csv_row(seed, timing)


def cmd_episode(args, cfg) -> int:
    rows = []
    for spec, seed, log in ex.run_episodes(cfg):
        rows.append(_episode_row(spec, seed, log, args.timing))
        if args.explain:
            for t, s in enumerate(log.steps):
                print(f"{spec} seed {seed} t={t}: {s.op.name} -> {''.join(map(str, s.psi_eff))}",
                      file=sys.stderr)
    _emit(write_csv(rows, EPISODE_HEADER), cfg)
    return EXIT_OK


def cmd_learning_curve(args, cfg) -> int:
    rows = ex.run_learning_curves(cfg, timing=args.timing, reference=args.reference)
    text = write_csv([[m, s, b, _fmt(r), f"{w:.0f}"] for m, s, b, r, w in rows], CURVE_HEADER)
    _emit(text, cfg)
    if not args.quiet:
        for spec in cfg.method_specs():
            mine = [r for r in rows if r[0] == str(spec)]
            hit = ex.first_budget_reaching(mine, 0.9)
            print(f"{spec}: reaches 0.9 at {hit if hit is not None else 'never'}", file=sys.stderr)
    return EXIT_OK


def cmd_ablation(args, cfg) -> int:
    if len(cfg.methods) < 2:
        raise ConfigError("ablation needs at least two methods")
    results = ex.run_episodes(cfg)
    rows, returns = [], {}
    for spec, seed, log in results:
        rows.append([str(spec), seed, _fmt(log.ret), log.outcome, len(log)])
        returns.setdefault(str(spec), []).append(log.ret)
    _emit(write_csv(rows, ABLATION_HEADER), cfg)
    if not args.quiet:
        print(ex.format_summary(ex.summarize(returns)), file=sys.stderr)
    return EXIT_OK


COMMANDS = {"learn": cmd_learn, "plan": cmd_plan, "solve": cmd_solve, "episode": cmd_episode,
            "learning-curve": cmd_learning_curve, "ablation": cmd_ablation}


def main(argv: Optional[list] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"beltamp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "parse-check":
        return cmd_parse_check(args)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"beltamp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"beltamp: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"beltamp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoPlanError, NoPolicyError, RuntimeError, ValueError, KeyError) as exc:
        print(f"beltamp: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
