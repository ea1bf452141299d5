# NAME
#     Harness/main.py - Sawtooth Map Scenario Orchestrator
#
# SYNOPSIS
#     python Harness/main.py <command> [OPTIONS]
#
# DESCRIPTION
#     This script is the command-line entry point for the simulation harness.
#     It turns a scenario (from a config file or from flags) into CSV datasets,
#     a localization-profile table and a summary.json report with fitted
#     scaling laws and acceptance checks. A log of the run is written to
#     pipeline.log inside the output directory.
#
# COMMANDS
#     run <config>
#         Run the scenario described by a config file (see Harness/configs/).
#
#     evolve
#         Ad-hoc single run: --nq --K --M --steps --pair i,j --block a..b --out PATH --seed S.
#         M may be a comma list; every M becomes one point of a 'custom' scenario.
#
#     sweep
#         Geometric localization-length grid: --ell-min --ell-max --points-per-decade,
#         plus the pair/block flags of 'evolve'. --scenario picks the analysis applied
#         to the sweep (default fig3_saturation_vs_ell).
#
#     selftest
#         Runs the oracle-equivalence suite (direct DFT, dense partial trace,
#         direct concurrence) for n_q = 2..6.
#
# EXIT STATUS
#     0 success, 1 unexpected failure, 2 usage error, 3 numerical degradation
#     threshold exceeded or selftest failure, 4 I/O error.
#
# USAGE EXAMPLES
#     # Reproduce the concurrence-vs-time runs
#     python Harness/main.py run Harness/configs/fig1_timeseries.ini
#
#     # One point, pair (1,3), four workers
#     HARNESS_WORKERS=4 python Harness/main.py evolve --K 1.41421356 --M 1000 --pair 1,3 --out Harness/runs/m1000
#
#     # Saturation concurrence over ell in [0.03, 64], adjacent pairs
#     python Harness/main.py sweep --K 1.41421356 --scenario fig4_adjacent_pairs --pair "1,2; 2,3; 3,4; 4,5; 5,6"
#
#     # Check the fast kernels against the slow references
#     python Harness/main.py selftest
#

import argparse
import logging
import sys
import os
import time

# Ensure the repository root (parent of Harness/) is importable
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from Harness.config import (
    CONFIG_HELP,
    OUTPUT_ROOT,
    ConfigError,
    ScenarioName,
    build_scenario,
    parse_config,
)
from Harness.pipeline_logging import setup_logging
from Harness.scenarios import run_scenario
from Simulation.errors import NumericalDegradationError
from Simulation.oracles import run_oracle_suite

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DEGRADED = 3
EXIT_IO = 4


class HarnessArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_output_path():
    run_id = time.strftime("%Y-%m-%d_%H-%M-%S") + "_run"
    return os.path.join(OUTPUT_ROOT, run_id)


def _add_point_flags(parser):
    parser.add_argument('--nq', type=str, default="10", help="Number of qubits (default 10).")
    parser.add_argument('--K', type=str, required=True, help="Classical kick parameter K > 0 (k = K/T is derived).")
    parser.add_argument('--steps', type=str, default="2000", help="Floquet steps per point (default 2000).")
    parser.add_argument('--pair', type=str, help="Qubit pair(s) 'i,j' or 'i,j; i,j'.")
    parser.add_argument('--block', type=str, help="Contiguous block(s) 'a..b' or 'a..b; c..d'.")
    parser.add_argument('--seed', type=str, default="0", help="Seed for randomized initial states (default 0).")
    parser.add_argument('--out', type=str, help="Output directory (default HARNESS_OUTPUT_ROOT/<timestamp>_run).")
    parser.add_argument('--workers', type=str, help="Parallel points (default HARNESS_WORKERS).")


def build_parser():
    parser = HarnessArgumentParser(
        description="Sawtooth Map Scenario Orchestrator",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest='command', required=True, parser_class=HarnessArgumentParser)

    run = commands.add_parser('run', help="Run a scenario config file.", epilog=CONFIG_HELP,
                              formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument('config', type=str, help="Path to the scenario .ini file.")

    evolve = commands.add_parser('evolve', help="Ad-hoc run over one or more M values.")
    _add_point_flags(evolve)
    evolve.add_argument('--M', type=str, required=True, help="Integer M (or comma list); T = 2 pi M / 2^n_q.")

    sweep = commands.add_parser('sweep', help="Geometric grid of target localization lengths.")
    _add_point_flags(sweep)
    sweep.add_argument('--ell-min', type=str, default="0.03", help="Smallest target ell (default 0.03).")
    sweep.add_argument('--ell-max', type=str, default="64", help="Largest target ell (default 64).")
    sweep.add_argument('--points-per-decade', type=str, default="8", help="Grid density, >= 8 (default 8).")
    sweep.add_argument(
        '--scenario',
        type=str,
        choices=[name.value for name in ScenarioName if name.is_sweep],
        default=ScenarioName.FIG3_SATURATION_VS_ELL.value,
        help="Analysis applied to the sweep (default fig3_saturation_vs_ell).",
    )

    commands.add_parser('selftest', help="Check the fast kernels against the oracle references.")
    return parser


def scenario_from_args(args):
    run_values = {"steps": args.steps, "seed": args.seed}
    if args.pair:
        run_values["pairs"] = args.pair
    if args.block:
        run_values["blocks"] = args.block
    if args.workers:
        run_values["workers"] = args.workers
    map_values = {"n_q": args.nq, "K": args.K}
    if args.command == 'evolve':
        run_values["scenario"] = ScenarioName.CUSTOM.value
        map_values["M"] = args.M
    else:
        run_values["scenario"] = args.scenario
        map_values.update(ell_min=args.ell_min, ell_max=args.ell_max, points_per_decade=args.points_per_decade)
    output = {"path": args.out or default_output_path()}
    return build_scenario({"map": map_values, "run": run_values, "output": output})


def selftest():
    setup_logging()
    logging.info("--- Running oracle suite ---")
    checks = run_oracle_suite()
    failed = [check for check in checks if not check.passed]
    for check in checks:
        status = "ok" if check.passed else "FAILED"
        logging.info(f"{check.name}: max error {check.max_error:.3e} (tolerance {check.tolerance:g}) {status}")
    if failed:
        logging.error(f"{len(failed)} of {len(checks)} oracle checks failed.")
        return EXIT_DEGRADED
    logging.info(f"All {len(checks)} oracle checks passed.")
    return EXIT_OK


def main(argv=None):
    """
    Main entry point for the harness. Returns the process exit status.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == 'selftest':
        return selftest()

    try:
        scenario = parse_config(args.config) if args.command == 'run' else scenario_from_args(args)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO

    try:
        setup_logging(scenario.output_path)
        logging.info(f"Starting scenario {scenario.name.value} -> {scenario.output_path}")
        run_scenario(scenario)
    except NumericalDegradationError as e:
        logging.error(f"--- Scenario {scenario.name.value} degraded: {e} ---")
        return EXIT_DEGRADED
    except OSError as e:
        logging.error(f"--- I/O failure: {e} ---")
        return EXIT_IO
    except Exception:
        logging.error(f"--- Scenario {scenario.name.value} failed ---", exc_info=True)
        return EXIT_FAILURE

    logging.info("Harness finished.")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
