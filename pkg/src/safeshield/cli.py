"""Command-line interface tying the pipeline together.

Subcommands: generate-demos, learn, eval-grid, filter-sim, serve.
Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from . import dynamics, evaluation, formats, learner, simgen
from .demonstrations import CorpusError, validate
from .safety_filter import FilterConfig, filter_control

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class UsageError(Exception):
    pass


class SolverFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we want 1
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="safeshield", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("generate-demos",
                       help="generate a synthetic demonstration corpus")
    p.add_argument("--out", required=True, help="output corpus JSON")
    p.add_argument("--scenario", help="scenario JSON (defaults built in)")
    p.add_argument("--spec", help="generation spec JSON (defaults built in)")
    p.add_argument("--seed", type=int, help="override the spec's seed")

    p = sub.add_parser("learn",
                       help="learn a safety model from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="LearnConfig JSON (defaults built in)")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--result-out", help="also write slacks + credit labels")
    p.add_argument("--semisafe-split", type=float,
                   help="override the corpus's safe/semisafe reward split")

    p = sub.add_parser("eval-grid",
                       help="evaluate a model on a grid; optionally score it")
    p.add_argument("--model", required=True)
    p.add_argument("--nx", type=int, default=100)
    p.add_argument("--ny", type=int, default=100)
    p.add_argument("--scenario", help="scenario JSON (defaults built in)")
    p.add_argument("--out", help="grid JSON output")
    p.add_argument("--pgm", help="greyscale PGM output")
    p.add_argument("--corpus", help="corpus for metrics (with --result)")
    p.add_argument("--result", help="learn-result JSON for credit metrics")
    p.add_argument("--metrics-out", help="metrics JSON output")

    p = sub.add_parser("filter-sim",
                       help="roll out the simulator with the safety filter active")
    p.add_argument("--model", required=True)
    p.add_argument("--dynamics", default="integrator2d",
                   choices=["integrator2d", "unicycle"])
    p.add_argument("--scenario", help="scenario JSON (defaults built in)")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--start", help="start position 'x,y' (default: start region center)")
    p.add_argument("--u-ref-mode", choices=["target", "obstacle"], default="target")
    p.add_argument("--out", help="trajectory JSON output")

    p = sub.add_parser("serve",
                       help="run the local HTTP/WebSocket service")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--corpus", help="preload a corpus JSON")
    p.add_argument("--scenario", help="scenario JSON (defaults built in)")

    return parser


def _load_scenario(path: Optional[str]) -> simgen.Scenario:
    if path is None:
        return simgen.Scenario()
    return formats.scenario_from_obj(formats.load_json(path))


def _cmd_generate(args) -> int:
    scenario = _load_scenario(args.scenario)
    spec = (
        formats.genspec_from_obj(formats.load_json(args.spec))
        if args.spec
        else simgen.GenSpec()
    )
    if args.seed is not None:
        spec.seed = args.seed
    corpus = simgen.generate(scenario, spec)
    formats.save_corpus(args.out, corpus)
    print(f"wrote {len(corpus.demos)} demos to {args.out}")
    return EXIT_OK


def _cmd_learn(args) -> int:
    corpus = formats.load_corpus(args.corpus)
    if args.semisafe_split is not None:
        from .demonstrations import RewardThresholds

        corpus.reward_thresholds = RewardThresholds(semisafe_split=args.semisafe_split)
    violations = validate(corpus)
    if violations:
        raise CorpusError("corpus failed validation: " + "; ".join(violations))
    cfg = formats.load_config(args.config) if args.config else learner.LearnConfig()
    result = learner.learn(corpus, cfg)
    if result.solver_status != "optimal":
        raise SolverFailure(
            f"solver status {result.solver_status}: {result.diagnostics}"
        )
    digest = formats.corpus_digest(corpus)
    formats.save_model(args.out, result.model, cfg, digest)
    if args.result_out:
        formats.save_json(args.result_out, formats.result_to_obj(result))
    caused = sum(1 for v in result.credit.values() if v == learner.CAUSED_FAILURE)
    print(
        f"learned model: {result.model.n_centers} centers, "
        f"objective {result.objective_value:.6g}, residual {result.residuals:.2e}, "
        f"{caused}/{len(result.credit)} failure points marked caused_failure"
    )
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval_grid(args) -> int:
    model = formats.load_model(args.model)
    scenario = _load_scenario(args.scenario)
    gridfield = evaluation.grid_eval(model, scenario.workspace, (args.nx, args.ny))
    if args.out:
        formats.save_json(args.out, formats.grid_to_obj(gridfield))
        print(f"wrote {args.out}")
    if args.pgm:
        with open(args.pgm, "wb") as fh:
            fh.write(evaluation.to_pgm(gridfield))
        print(f"wrote {args.pgm}")
    if args.metrics_out:
        if not (args.corpus and args.result):
            raise UsageError("--metrics-out requires --corpus and --result")
        corpus = formats.load_corpus(args.corpus)
        result_obj = formats.load_json(args.result)
        result = _result_stub(model, result_obj)
        report = evaluation.score(model, result, corpus, scenario, (args.nx, args.ny))
        formats.save_metrics(args.metrics_out, report)
        print(f"wrote {args.metrics_out}")
    neg = float(np.count_nonzero(gridfield.values < 0)) / gridfield.values.size
    print(f"grid {args.nx}x{args.ny}: h range [{gridfield.values.min():.3f}, "
          f"{gridfield.values.max():.3f}], negative fraction {neg:.3f}")
    return EXIT_OK


def _result_stub(model, result_obj) -> learner.LearnResult:
    """Rebuild just enough of a LearnResult from its saved summary to score it."""
    credit = {
        (entry["demo_id"], int(entry["t"])): entry["label"]
        for entry in result_obj.get("credit", [])
    }
    slacks = np.array([entry["xi"] for entry in result_obj.get("slacks", [])])
    return learner.LearnResult(
        model=model,
        slacks=slacks,
        slack_index={},
        objective_value=float(result_obj.get("objective_value", float("nan"))),
        solver_status=str(result_obj.get("solver_status", "optimal")),
        residuals=float(result_obj.get("residuals", 0.0)),
        credit=credit,
    )


def _cmd_filter_sim(args) -> int:
    model = formats.load_model(args.model)
    scenario = _load_scenario(args.scenario)
    dyn = dynamics.get_model(args.dynamics)
    if model.dim != dyn.n:
        raise formats.FormatError(
            f"model has state dim {model.dim} but dynamics {dyn.name!r} has {dyn.n}; "
            "filter a model with the dynamics it was trained on"
        )
    cfg = FilterConfig(tolerance_tau=args.tau)
    if args.start:
        try:
            x = np.array([float(v) for v in args.start.split(",")])
        except ValueError:
            raise UsageError(f"bad --start {args.start!r}; expected 'x,y'") from None
    else:
        region = scenario.start_region
        x = np.array([(region.xmin + region.xmax) / 2, (region.ymin + region.ymax) / 2])
    if dyn.n > x.size:
        x = np.concatenate([x, np.zeros(dyn.n - x.size)])
    goal = (
        np.asarray(scenario.target, dtype=float)
        if args.u_ref_mode == "target"
        else np.asarray(scenario.obstacle_center, dtype=float)
    )
    speed = float(np.max(dyn.control_bounds[:, 1]))

    def reference(state):
        to_goal = goal - state[:2]
        dist = np.linalg.norm(to_goal)
        if dist <= 1e-9:
            return np.zeros(dyn.m)
        if dyn.name == "unicycle":
            heading_err = np.arctan2(to_goal[1], to_goal[0]) - state[2]
            heading_err = (heading_err + np.pi) % (2 * np.pi) - np.pi
            return np.array([speed, 2.0 * heading_err])
        return speed * to_goal / dist

    h_vals, interventions = [], 0
    from . import rbf

    records = []
    for t in range(args.steps):
        u_ref = reference(x)
        decision = filter_control(model, dyn, x, u_ref, cfg)
        x = dynamics.step(dyn, x, decision.u_out, scenario.dt)
        h_here = rbf.evaluate(model, x)
        interventions += int(decision.intervened)
        records.append(
            {
                "t": t,
                "x": [float(v) for v in x],
                "u_ref": [float(v) for v in u_ref],
                "u_out": [float(v) for v in decision.u_out],
                "h": float(h_here),
                "intervened": bool(decision.intervened),
                "constraint_value": float(decision.constraint_value),
            }
        )
        h_vals.append(h_here)
    stats = {
        "intervention_rate": interventions / max(1, args.steps),
        "min_h": float(min(h_vals)) if h_vals else 0.0,
        "steps": args.steps,
        "tau": args.tau,
    }
    if args.out:
        formats.save_json(
            args.out,
            {"schema_version": 1, "trajectory": records, "stats": stats},
        )
        print(f"wrote {args.out}")
    print(
        f"filter-sim: {args.steps} steps, intervention rate "
        f"{stats['intervention_rate']:.3f}, min h {stats['min_h']:.4f}"
    )
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceSettings, SessionState, create_app

    scenario = _load_scenario(args.scenario)
    corpus = formats.load_corpus(args.corpus) if args.corpus else None
    state = SessionState(corpus=corpus, scenario=scenario)
    # serve the built browser UI when present (repo checkout layout)
    static = os.path.join(
        os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))),
        "frontend", "dist",
    )
    app = create_app(
        state,
        ServiceSettings(),
        static_dir=static if os.path.isdir(static) else None,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


_COMMANDS = {
    "generate-demos": _cmd_generate,
    "learn": _cmd_learn,
    "eval-grid": _cmd_eval_grid,
    "filter-sim": _cmd_filter_sim,
    "serve": _cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("SAFESHIELD_LOG", "WARNING"))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (formats.FormatError, CorpusError, learner.LearnError,
            simgen.GenerationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
