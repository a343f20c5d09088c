"""
Command-line application for the planner.

Subcommands map one-to-one onto library operations: design a plan, evaluate
it, calibrate multipliers, compute OC curves, simulate, compare against the
fixed-sample test, give interim advice and export plan data. Every command
writes its files into ``--out-dir`` and exits with 0 on success, 2 on
configuration or input errors, 3 when calibration fails and 4 on numerical
failures.
"""

import argparse
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from .. import __version__
from ..analysis.calibration import Calibrator, lambda_trend_check
from ..analysis.fss import np_min_sample_size, reference_results, relative_efficiency
from ..analysis.sweep import SWEEP_COLUMNS, efficiency_extremes, lambda_sweep
from ..design.advice import advise, parse_history
from ..design.engine import Plan, endpoint_drift, interval_table, niod, outermost_rule
from ..evaluators.base import registry
from ..evaluators.oc import oc_curve, oc_trend_violations, profile_plan
from ..types.errors import (
    CalibrationFailedError,
    ConfigurationError,
    DomainError,
    HistoryMismatchError,
    NumericalError,
    PlanFileError,
)
from ..types.model import CostModel, StopRiskParams
from ..types.profile import METHODS, TestProfile
from .config_manager import ConfigManager, resolve_config_path
from .logging_config import LogContext, get_component_logger, setup_logging
from .plan_store import load_plan, save_plan
from .reports import dumps, write_csv, write_json

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_NUMERICAL = 4

INTERVAL_COLUMNS = ["allowance", "stage", "a", "b", "log_a", "log_b"]
RULE_COLUMNS = ["z", "log_z", "m"]
REPORT_COLUMNS = ["field", "value", "method"]
OC_COLUMNS = ["theta", "p_accept_h0", "p_accept_h1", "error"]
TRACE_COLUMNS = ["evaluation", "iteration", "step", "lambda0", "lambda1", "alpha", "beta", "objective"]
SIMULATION_COLUMNS = ["theta", "p_accept_h0", "exp_cost", "exp_groups", "exp_obs",
                      "se_p_accept_h0", "se_exp_cost", "se_exp_groups", "se_exp_obs"]


class PlannerApplication:
    """Runs one parsed command line."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.logger = setup_logging(args.log_level, args.log_file)
        self.cli_logger = get_component_logger('cli', self.logger)
        self.out_dir = args.out_dir
        os.makedirs(self.out_dir, exist_ok=True)

    def output(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def emit(self, data: Any):
        sys.stdout.write(dumps(data))

    # Shared helpers

    def load_config(self, path: Optional[str]) -> ConfigManager:
        config_path = resolve_config_path(path)
        manager = ConfigManager()
        manager.load_config(config_path)
        self.cli_logger.info(f"Loaded configuration from: {config_path}")
        return manager

    def cost_override(self) -> Optional[CostModel]:
        c0 = getattr(self.args, 'cost_c0', None)
        cu = getattr(self.args, 'cost_cu', None)
        if c0 is None and cu is None:
            return None
        c0 = 0.0 if c0 is None else c0
        cu = 0.0 if cu is None else cu
        if c0 < 0 or cu < 0 or c0 + cu <= 0:
            raise ConfigurationError("Cost override needs nonnegative --cost-c0/--cost-cu, not both zero")
        return CostModel.affine(c0, cu)

    def monte_carlo_seed(self, purpose: str) -> int:
        seed = self.args.seed
        if seed is None:
            raise ConfigurationError(f"Monte Carlo {purpose} requires --seed")
        if seed < 0:
            raise ConfigurationError(f"--seed must be a nonnegative integer, got {seed}")
        return seed

    def evaluator_options(self) -> Dict[str, Any]:
        method = self.args.method
        if method == "mc":
            return {"trials": self.args.trials, "seed": self.monte_carlo_seed("evaluation")}
        if method == "exact" and self.args.prune:
            return {"prune": self.args.prune}
        return {}

    def write_plan_outputs(self, plan: Plan) -> Dict[str, Any]:
        """plan.json, design_summary.json, intervals.csv and sampling_rule.csv."""
        save_plan(plan, self.output("plan.json"))
        intervals = interval_table(plan)
        write_csv(self.output("intervals.csv"), INTERVAL_COLUMNS, intervals)
        rule = [{"z": z, "log_z": math.log(z), "m": m} for z, m in outermost_rule(plan)]
        write_csv(self.output("sampling_rule.csv"), RULE_COLUMNS, rule)
        summary = {
            "K_eff": plan.k_eff,
            "m1": plan.m1,
            "zStar": plan.z_star,
            "earlyExit": plan.early_exit,
            "earlyExitLevel": plan.early_exit_level,
            "intervals": intervals,
            "endpointDrift": endpoint_drift(plan),
            "config": plan.config.to_dict(),
        }
        write_json(self.output("design_summary.json"), summary)
        return summary

    def profile_report(self, plan: Plan, profile: TestProfile, extra: Dict[str, Any]) -> Dict[str, Any]:
        report = {
            "method": profile.method,
            "K_eff": plan.k_eff,
            "m1": plan.m1,
            "profile": profile.to_dict(),
            "config": plan.config.to_dict(),
        }
        report.update(extra)
        return report

    def write_profile_report(self, report: Dict[str, Any], profile: TestProfile):
        write_json(self.output("report.json"), report)
        rows = [{"field": k, "value": v, "method": profile.method} for k, v in profile.summary_rows()]
        write_csv(self.output("report.csv"), REPORT_COLUMNS, rows)
        if profile.oc_points:
            write_csv(self.output("oc.csv"), OC_COLUMNS, _oc_rows(profile.oc_points))

    # Commands

    def cmd_design(self) -> int:
        config = self.load_config(self.args.config)
        design = config.get_design_config()
        with LogContext(self.cli_logger, "design", K=design.K, sizes=len(design.group_sizes)):
            plan = niod(design)
        summary = self.write_plan_outputs(plan)
        self.emit({k: summary[k] for k in ("K_eff", "m1", "zStar", "earlyExit", "earlyExitLevel")})
        return EXIT_OK

    def cmd_evaluate(self) -> int:
        plan = load_plan(self.args.plan)
        method = self.args.method
        options = self.evaluator_options()
        with LogContext(self.cli_logger, "evaluation", method=method):
            profile, partials = profile_plan(
                plan, method, self.cost_override(), self.args.theta or (), self.args.workers, **options
            )
        extra: Dict[str, Any] = {"partials": {k: v.to_dict() for k, v in partials.items()}}
        if profile.oc_points:
            extra["ocTrendViolations"] = oc_trend_violations(plan, profile.oc_points)
            extra["ocMethod"] = "exact"
        report = self.profile_report(plan, profile, extra)
        self.write_profile_report(report, profile)
        self.emit({k: v for k, v in profile.summary_rows()})
        return EXIT_OK

    def cmd_calibrate(self) -> int:
        config = self.load_config(self.args.spec or self.args.config)
        spec = config.get_calibration_spec()
        calibrator = Calibrator(spec)
        try:
            with LogContext(self.cli_logger, "calibration",
                            alpha=spec.target_alpha, beta=spec.target_beta):
                result = calibrator.run()
        except CalibrationFailedError as e:
            write_csv(self.output("calibration_trace.csv"), TRACE_COLUMNS,
                      [entry.to_dict() for entry in calibrator.trace])
            failure = {
                "status": "failed",
                "message": str(e),
                "bestLambda0": e.best_lambdas[0],
                "bestLambda1": e.best_lambdas[1],
                "objective": e.objective,
            }
            if e.result is not None:
                failure["profile"] = e.result.profile.to_dict()
            write_json(self.output("calibration.json"), failure)
            raise

        write_csv(self.output("calibration_trace.csv"), TRACE_COLUMNS,
                  [entry.to_dict() for entry in result.trace])
        self.write_plan_outputs(result.plan)
        document = {"status": "ok", **result.summary(), "config": result.plan.config.to_dict()}
        if self.args.trend_check:
            document["trendCheck"] = lambda_trend_check(spec, result.lambda0, result.lambda1)
        write_json(self.output("calibration.json"), document)
        self.write_profile_report(
            self.profile_report(result.plan, result.profile, {"objective": result.objective}),
            result.profile,
        )
        self.emit({k: document[k] for k in ("lambda0", "lambda1", "objective", "iterations", "reason")})
        return EXIT_OK

    def cmd_oc(self) -> int:
        plan = load_plan(self.args.plan)
        thetas = list(self.args.theta or ())
        if self.args.theta_grid:
            thetas.extend(_theta_grid(self.args.theta_grid))
        if not thetas:
            raise ConfigurationError("Give at least one --theta or a --theta-grid")
        with LogContext(self.cli_logger, "OC curve", points=len(thetas)):
            points = oc_curve(plan, thetas, self.args.workers)
        violations = oc_trend_violations(plan, points)
        write_csv(self.output("oc.csv"), OC_COLUMNS, _oc_rows(points))
        self.emit({"points": len(points), "trendViolations": violations})
        return EXIT_OK

    def cmd_simulate(self) -> int:
        seed = self.monte_carlo_seed("simulation")
        plan = load_plan(self.args.plan)
        hyp = plan.config.hyp
        thetas = self.args.theta or [hyp.theta0, hyp.theta1]
        evaluator = registry.create("mc", trials=self.args.trials, seed=seed, workers=self.args.workers)
        rows = []
        cost = self.cost_override()
        with LogContext(self.cli_logger, "simulation", trials=self.args.trials, seed=seed):
            for theta in thetas:
                result = evaluator.evaluate(plan, theta, cost)
                row = result.to_dict()
                row.update({f"se_{k}": v for k, v in result.stderr.items()})
                rows.append(row)
        write_csv(self.output("simulation.csv"), SIMULATION_COLUMNS, rows)
        write_json(self.output("simulation.json"), {
            "trials": self.args.trials,
            "seed": seed,
            "results": rows,
            "config": plan.config.to_dict(),
        })
        self.emit(rows)
        return EXIT_OK

    def cmd_compare_fss(self) -> int:
        if self.args.sweep:
            return self._sweep()
        plan = load_plan(self.args.plan)
        profile, _ = profile_plan(plan, "exact")
        alpha = self.args.alpha if self.args.alpha is not None else profile.alpha
        beta = self.args.beta if self.args.beta is not None else profile.beta
        cost = self.cost_override() or plan.config.cost
        fss = np_min_sample_size(plan.config.hyp, alpha, beta)
        efficiency = relative_efficiency(profile, fss.n, cost)
        report = {
            "targets": {"alpha": alpha, "beta": beta},
            "fss": fss.to_dict(),
            "ascFss": efficiency.asc_fss,
            "R0": efficiency.r0,
            "R1": efficiency.r1,
            "profile": profile.to_dict(),
            "config": plan.config.to_dict(),
        }
        reference = reference_results(plan.config.hyp)
        if reference:
            report["latticeReference"] = reference
        write_json(self.output("fss.json"), report)
        self.emit({"n": fss.n, "ascFss": efficiency.asc_fss, "R0": efficiency.r0, "R1": efficiency.r1})
        return EXIT_OK

    def _sweep(self) -> int:
        config = self.load_config(self.args.config)
        params = config.get_lambdas(required=False)
        if params is None:
            params = StopRiskParams(1.0, 1.0)
        base = config.get_design_config(params=params)
        settings = config.get_sweep_settings()
        with LogContext(self.cli_logger, "efficiency sweep", points=settings.points ** 2):
            rows = lambda_sweep(base, settings, self.args.workers)
        write_csv(self.output("sweep.csv"), SWEEP_COLUMNS, [row.to_dict() for row in rows])
        extremes = efficiency_extremes(rows)
        write_json(self.output("sweep_summary.json"), {
            "rows": len(rows),
            "extremes": extremes,
            "settings": vars(settings),
            "config": base.to_dict(lambdas=False),
        })
        self.emit({"rows": len(rows), **extremes})
        return EXIT_OK

    def cmd_next(self) -> int:
        plan = load_plan(self.args.plan)
        advice = advise(plan, parse_history(self.args.history or ""))
        self.emit(advice.to_dict())
        return EXIT_OK

    def cmd_export_plan(self) -> int:
        plan = load_plan(self.args.plan)
        summary = self.write_plan_outputs(plan)
        self.emit({"K_eff": summary["K_eff"], "outDir": self.out_dir})
        return EXIT_OK

    def run(self) -> int:
        handler = getattr(self, f"cmd_{self.args.command.replace('-', '_')}")
        return handler()


def _theta_grid(text: str) -> List[float]:
    try:
        low, high, count = text.split(":")
        low, high, count = float(low), float(high), int(count)
    except ValueError:
        raise ConfigurationError(f"--theta-grid must look like 'min:max:count', got '{text}'")
    if count < 1:
        raise ConfigurationError("--theta-grid needs a positive count")
    if count == 1:
        return [low]
    step = (high - low) / (count - 1)
    return [low + i * step for i in range(count)]


def _oc_rows(points) -> List[Dict[str, Any]]:
    return [
        {
            "theta": p.theta,
            "p_accept_h0": p.p_accept_h0,
            "p_accept_h1": None if p.p_accept_h0 is None else 1.0 - p.p_accept_h0,
            "error": p.error,
        }
        for p in points
    ]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='spprt-planner',
        description='Design and evaluate optimal truncated sequentially planned tests for Bernoulli data'
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out-dir', default='.', help='Directory for output files')
    common.add_argument('--log-level', default='INFO', help='Logging level')
    common.add_argument('--log-file', help='Optional log file path')
    common.add_argument('--workers', type=int, default=1,
                        help='Worker processes for batch evaluations (0 = one per CPU)')

    evaluation = argparse.ArgumentParser(add_help=False)
    evaluation.add_argument('--theta', type=float, action='append',
                            help='Data-generating theta (repeatable)')
    evaluation.add_argument('--seed', type=int, help='Monte Carlo seed')
    evaluation.add_argument('--trials', type=int, default=100_000, help='Monte Carlo trials')
    evaluation.add_argument('--cost-c0', type=float, help='Override cost per group')
    evaluation.add_argument('--cost-cu', type=float, help='Override cost per observation')

    sub = parser.add_subparsers(dest='command', required=True)

    design = sub.add_parser('design', parents=[common], help='Design a plan from a config')
    design.add_argument('-c', '--config', help='Path to configuration file')

    evaluate = sub.add_parser('evaluate', parents=[common, evaluation], help='Evaluate a plan')
    evaluate.add_argument('--plan', required=True, help='Plan file')
    evaluate.add_argument('--method', choices=METHODS, default='exact')
    evaluate.add_argument('--prune', type=float, default=0.0,
                          help='Drop lattice states below this probability (exact method)')

    calibrate = sub.add_parser('calibrate', parents=[common], help='Calibrate multipliers to target errors')
    calibrate.add_argument('--spec', help='Calibration spec file')
    calibrate.add_argument('-c', '--config', help='Alias for --spec')
    calibrate.add_argument('--trend-check', action='store_true',
                           help='Probe a 3x3 multiplier grid around the solution')

    oc = sub.add_parser('oc', parents=[common], help='Operating characteristic curve')
    oc.add_argument('--plan', required=True, help='Plan file')
    oc.add_argument('--theta', type=float, action='append', help='Theta value (repeatable)')
    oc.add_argument('--theta-grid', help="Evenly spaced thetas as 'min:max:count'")

    simulate = sub.add_parser('simulate', parents=[common, evaluation], help='Monte Carlo simulation')
    simulate.add_argument('--plan', required=True, help='Plan file')

    compare = sub.add_parser('compare-fss', parents=[common], help='Compare with the fixed-sample test')
    compare.add_argument('--plan', help='Plan file')
    compare.add_argument('--alpha', type=float, help='Target alpha (default: achieved by the plan)')
    compare.add_argument('--beta', type=float, help='Target beta (default: achieved by the plan)')
    compare.add_argument('--cost-c0', type=float, help='Override cost per group')
    compare.add_argument('--cost-cu', type=float, help='Override cost per observation')
    compare.add_argument('--sweep', action='store_true', help='Sweep a log-lambda grid from --config')
    compare.add_argument('-c', '--config', help='Configuration for --sweep')

    advice = sub.add_parser('next', parents=[common], help='Advice for an interim history')
    advice.add_argument('--plan', required=True, help='Plan file')
    advice.add_argument('--history', default='', help="Observed groups as 'm:s,m:s,...'")

    export = sub.add_parser('export-plan', parents=[common], help='Export plan tables as CSV')
    export.add_argument('--plan', required=True, help='Plan file')

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point; returns the process exit code.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'compare-fss' and not args.sweep and not args.plan:
        parser.error("compare-fss needs --plan unless --sweep is given")

    try:
        return PlannerApplication(args).run()
    except (ConfigurationError, DomainError, PlanFileError, HistoryMismatchError) as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationFailedError as e:
        print(f"❌ Calibration failed: {e} (best lambda {e.best_lambdas})", file=sys.stderr)
        return EXIT_CALIBRATION
    except NumericalError as e:
        print(f"❌ Numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        print("Interrupted", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        print(f"❌ Fatal error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
