"""
Polling Study Orchestrator
Runs analysis, threshold sweeps, simulation and cross-validation for a
scenario and writes the results
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional, Tuple

from dotenv import load_dotenv

from polling.analysis import PerformanceReport, ReportOptions, WaitingTimeAnalyzer
from polling.errors import (
    ConfigError,
    DisciplineMismatchError,
    DomainError,
    InstabilityError,
    ModelValidationError,
    PollingError,
    ScenarioError,
    SweepRowError,
)
from polling.model import Discipline, PollingModel, require_valid
from polling.simulator import (
    DiscrepancyTable,
    SimConfig,
    SimulationEstimate,
    compare,
    run,
    write_event_log,
)
from polling.sweep import SweepRow, SweepSettings, SweepSummary, run_sweep
from utils.config_loader import EngineDefaults, load_defaults
from utils.scenario_loader import GridSpec, Scenario, load_scenario, parse_grid
from utils.table_formatter import (
    format_discrepancies,
    format_report,
    format_simulation,
    format_sweep,
    write_sweep_csv,
)

load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_MODEL = 3
EXIT_COMPARE = 4
EXIT_NUMERIC = 5


class PollingStudyOrchestrator:
    """
    Runs the study pipeline for one scenario

    Commands:
    1. analyze   - exact performance report at one threshold
    2. sweep     - report figures over a threshold grid, with argmins
    3. simulate  - replicated discrete-event estimates
    4. compare   - analysis against simulation, z-score per quantity
    """

    def __init__(self, defaults: Optional[EngineDefaults] = None):
        self.defaults = defaults or load_defaults()

    def _model(self, scenario: Scenario, threshold: Optional[float],
               discipline: Optional[Discipline]) -> PollingModel:
        model = scenario.model(threshold, discipline)
        require_valid(model)
        return model

    def _report_options(self, model: PollingModel, preemptive: bool,
                        classes: Tuple[str, ...] = ("H", "L", "2", "1")) -> ReportOptions:
        rates = {"H": model.lambda_H, "L": model.lambda_L, "2": model.lambda_2,
                 "1": model.lambda_1}
        present = tuple(c for c in classes if rates[c] > 0)
        return replace(self.defaults.report, preemptive_H=preemptive, classes=present)

    def analyze(self, scenario: Scenario, threshold: Optional[float] = None,
                discipline: Optional[Discipline] = None,
                preemptive: Optional[bool] = None) -> PerformanceReport:
        """
        Exact performance report at one threshold

        Args:
            scenario: Parsed scenario
            threshold: Overrides the scenario threshold
            discipline: Overrides the scenario discipline
            preemptive: Overrides the scenario preemptive_H flag

        Returns:
            PerformanceReport with every internal cross-check passed
        """
        preemptive = scenario.preemptive_H if preemptive is None else preemptive
        print(f"\n{'='*80}")
        print(f"POLLING ANALYSIS: {scenario.name}")
        print(f"{'='*80}\n")

        print("Step 1/2: Building the model...")
        model = self._model(scenario, threshold, discipline)
        if preemptive and model.discipline is not Discipline.EXHAUSTIVE:
            raise DisciplineMismatchError("preemptive-resume priority needs exhaustive service")
        print(f"   {model.discipline.value} service, lambda_H = {model.lambda_H:.6g}, "
              f"lambda_L = {model.lambda_L:.6g}")

        print("\nStep 2/2: Differentiating the waiting-time transforms...")
        analyzer = WaitingTimeAnalyzer(
            model, self._report_options(model, preemptive),
            self.defaults.truncation, self.defaults.fixed_point,
        )
        rep = analyzer.report()
        print(f"   Report complete ({len(rep.classes)} classes cross-checked)")
        return rep

    def sweep(self, scenario: Scenario, grid: Optional[GridSpec] = None,
              discipline: Optional[Discipline] = None) -> Tuple[List[SweepRow], SweepSummary]:
        """
        Threshold sweep over the scenario grid

        Raises:
            ScenarioError: If neither the scenario nor the caller gives a grid
        """
        grid = grid or scenario.sweep
        if grid is None:
            raise ScenarioError("/sweep", "missing required field")
        study = scenario.study(discipline)
        values = grid.values()

        print(f"\n{'='*80}")
        print(f"THRESHOLD SWEEP: {scenario.name} ({study.discipline.value})")
        print(f"{'='*80}\n")
        print("Step 1/2: Checking stability...")
        require_valid(study.base_model())
        print(f"   {len(values)} thresholds on [{values[0]:g}, {values[-1]:g}]")

        print("\nStep 2/2: Evaluating every threshold...")
        settings = SweepSettings(
            options=self.defaults.report,
            truncation=self.defaults.truncation,
            fixed_point=self.defaults.fixed_point,
            with_std=scenario.with_std,
        )
        rows, summary = run_sweep(study, values, settings, threads=self.defaults.threads)
        print(f"   Sweep complete, weighted E(W_1) is smallest at t = {summary.argmin_mean_t:g}")
        return rows, summary

    def _sim_config(self, scenario: Scenario, model: PollingModel, seed: Optional[int],
                    preemptive: bool, record_events: bool) -> SimConfig:
        sim = self.defaults.simulation
        params = {
            "seed": sim.seed,
            "warmup_customers": sim.warmup_customers,
            "measured_customers": sim.measured_customers,
            "replications": sim.replications,
        }
        params.update(scenario.simulation)
        if seed is not None:
            params["seed"] = seed
        return SimConfig(model=model, preemptive_H=preemptive, injected=scenario.injected,
                         record_events=record_events, **params)

    def simulate(self, scenario: Scenario, threshold: Optional[float] = None,
                 discipline: Optional[Discipline] = None, preemptive: Optional[bool] = None,
                 seed: Optional[int] = None) -> SimulationEstimate:
        """Replicated simulation of the scenario model"""
        preemptive = scenario.preemptive_H if preemptive is None else preemptive
        print(f"\n{'='*80}")
        print(f"POLLING SIMULATION: {scenario.name}")
        print(f"{'='*80}\n")

        print("Step 1/2: Building the model...")
        model = self._model(scenario, threshold, discipline)
        cfg = self._sim_config(scenario, model, seed, preemptive,
                               record_events="event_log" in scenario.outputs)
        print(f"   seed {cfg.seed}, {cfg.replications} x {cfg.measured_customers} customers")

        print("\nStep 2/2: Running replications...")
        est = run(cfg, threads=self.defaults.threads)
        if est.events is not None:
            write_event_log(est.events, scenario.outputs["event_log"])
            print(f"   Event log of replication 1 saved to {scenario.outputs['event_log']}")
        print(f"   Simulation complete{' (low precision)' if est.low_precision else ''}")
        return est

    def compare(self, scenario: Scenario, threshold: Optional[float] = None,
                discipline: Optional[Discipline] = None, preemptive: Optional[bool] = None,
                seed: Optional[int] = None) -> Tuple[PerformanceReport, SimulationEstimate,
                                                     DiscrepancyTable]:
        """Analysis and simulation at the same threshold, compared quantity by quantity"""
        preemptive = scenario.preemptive_H if preemptive is None else preemptive
        rep = self.analyze(scenario, threshold, discipline, preemptive)
        est = self.simulate(scenario, threshold, discipline, preemptive, seed)
        table = compare(est, rep, z_threshold=self.defaults.simulation.z_threshold)
        return rep, est, table

    def save_output(self, payload: dict, output_path: str) -> str:
        """
        Save a JSON result

        Args:
            payload: JSON-serialisable result
            output_path: Destination file

        Returns:
            Path where the result was saved
        """
        directory = os.path.dirname(output_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, ensure_ascii=False, allow_nan=True)
        return output_path

    def save_sweep(self, rows: List[SweepRow], summary: SweepSummary, output_path: str) -> str:
        directory = os.path.dirname(output_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        write_sweep_csv(rows, output_path)
        self.save_output(summary.to_dict(), os.path.splitext(output_path)[0] + ".summary.json")
        return output_path

    def print_result(self, title: str, body: str):
        print(f"\n{'='*80}")
        print(title)
        print(f"{'='*80}\n")
        print(body)
        print(f"\n{'='*80}\n")


def _exit_code(exc: PollingError) -> int:
    if isinstance(exc, (ScenarioError, ConfigError, DomainError, DisciplineMismatchError)):
        return EXIT_SCHEMA
    if isinstance(exc, (InstabilityError, ModelValidationError)):
        return EXIT_MODEL
    if isinstance(exc, SweepRowError) and exc.cause_kind in ("instability", "validation"):
        return EXIT_MODEL
    return EXIT_NUMERIC


def _fail(exc: PollingError) -> int:
    payload = {"error": exc.kind, "message": str(exc), **exc.details()}
    print(json.dumps(payload), file=sys.stderr)
    return _exit_code(exc)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orchestrator.py",
        description="Two-queue priority polling study: analysis, sweeps and simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("analyze", "sweep", "simulate", "compare"):
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="Scenario JSON file")
        p.add_argument("--out", help="Output file (default output/<scenario>_<command>.*)")
        p.add_argument("--seed", type=int, help="Simulation seed")
        p.add_argument("--grid", help="Threshold grid as min:max:step")
        p.add_argument("--threshold", type=float, help="Threshold for a single-point run")
        p.add_argument("--discipline", choices=[d.value for d in Discipline])
        p.add_argument("--preemptive", action="store_true", default=None,
                       help="Preemptive-resume priority for H (exhaustive only)")
        p.add_argument("--defaults", help="Engine defaults YAML file")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main CLI interface for the polling study
    """
    args = build_parser().parse_args(argv)

    try:
        defaults = load_defaults(args.defaults)
        logging.basicConfig(
            level=defaults.log_level,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        scenario = load_scenario(args.scenario)
        discipline = Discipline(args.discipline) if args.discipline else None
        out = args.out or scenario.outputs.get(args.command)
        orchestrator = PollingStudyOrchestrator(defaults)
        logger.info("%s on scenario %s with %d thread(s)",
                    args.command, scenario.name, defaults.threads)

        if args.command == "analyze":
            rep = orchestrator.analyze(scenario, args.threshold, discipline, args.preemptive)
            orchestrator.print_result(f"REPORT: {scenario.name}", format_report(rep))
            path = orchestrator.save_output(
                rep.to_dict(), out or f"output/{scenario.name}_analyze.json")

        elif args.command == "sweep":
            grid = parse_grid(args.grid) if args.grid else None
            rows, summary = orchestrator.sweep(scenario, grid, discipline)
            orchestrator.print_result(f"SWEEP: {scenario.name}", format_sweep(rows, summary))
            path = orchestrator.save_sweep(rows, summary, out or f"output/{scenario.name}_sweep.csv")

        elif args.command == "simulate":
            est = orchestrator.simulate(scenario, args.threshold, discipline,
                                        args.preemptive, args.seed)
            orchestrator.print_result(f"SIMULATION: {scenario.name}", format_simulation(est))
            path = orchestrator.save_output(
                est.to_dict(), out or f"output/{scenario.name}_simulate.json")

        else:
            rep, est, table = orchestrator.compare(scenario, args.threshold, discipline,
                                                   args.preemptive, args.seed)
            orchestrator.print_result(f"COMPARISON: {scenario.name}",
                                      format_discrepancies(table))
            path = orchestrator.save_output(
                {"report": rep.to_dict(), "simulation": est.to_dict(),
                 "comparison": table.to_dict()},
                out or f"output/{scenario.name}_compare.json",
            )
            print(f"Results saved to: {path}\n")
            if not table.passed:
                print(json.dumps({"error": "comparison", "failed": table.failures()}),
                      file=sys.stderr)
                return EXIT_COMPARE
            return EXIT_OK

    except PollingError as exc:
        return _fail(exc)

    print(f"Results saved to: {path}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
