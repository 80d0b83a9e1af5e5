# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
The ``hc`` command.

Subcommands:

* ``hc build`` - sensitivity matrices and their diagnostics
* ``hc powerflow`` - one DistFlow solve
* ``hc run`` - regions of both models, validation and export
* ``hc validate`` - validation of an exported region
* ``hc oracle`` - brute-force region of a feeder with few dispatchable nodes
* ``hc sweep`` - LinDist versus DistFlow voltage at one node

Errors end the command with the exit code of the exception class and a
one-line diagnostic on stderr.
"""

import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd

from ._version import __version__
from ._exceptions import HostingCapacityError, IoError, EXIT_SUCCESS, \
    EXIT_VALIDATION_FAILED, EXIT_USAGE
from ._capability import CASE_TAGS
from ._matrices import build_matrices, matrix_diagnostics
from ._distflow import InjectionProfile, solve_distflow, voltage_sweep, \
    compute_current_bounds
from ._region import MODEL_INNER, MODEL_LINDIST, solve_inner_upper, \
    solve_inner_lower, solve_lindist_bound, assemble_region, UPPER, LOWER
from ._validation import monte_carlo_validate, check_boundary_feasibility, \
    Q_POLICIES
from ._oracle import oracle_region, MAX_ORACLE_POINTS
from ._io import parse_feeder, resolve_feeder, load_region, export_results
from ._pipeline import PipelineOptions, run_pipeline, MODELS

__all__ = ['main']

_LOGGER = logging.getLogger(__name__)

#: Environment variable with the default log level of the ``hc`` command.
LOG_LEVEL_ENVVAR = 'HC_LOG_LEVEL'

_LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def _default_log_level():
    level = os.environ.get(LOG_LEVEL_ENVVAR, 'WARNING').upper()
    return level if level in _LOG_LEVELS else 'WARNING'


def _node_id(network, text):
    """Resolve a node id given on the command line."""
    if text in network.index:
        return text
    try:
        number = int(text)
    except ValueError:
        number = None
    if number is not None and number in network.index:
        return number
    raise argparse.ArgumentTypeError(
        "Node {0!r} is not a non-substation node of the feeder".format(text))


def _load(args):
    path = resolve_feeder(args.feeder)
    network, capability, meta = parse_feeder(path)
    case = getattr(args, 'case', None)
    if case is not None:
        capability = capability.with_case(case, pf=getattr(args, 'pf', None))
    return network, capability, meta


def _print_table(frame):
    print(frame.to_string(index=False))


def cmd_build(args):
    """Print the node order and the matrix diagnostics."""
    network, _, _ = _load(args)
    matrices = build_matrices(network)
    print("Substation node: {0}".format(network.root))
    print("Node order: {0}".format(
        " ".join(str(n) for n in network.node_ids)))
    for key, value in matrix_diagnostics(matrices).items():
        print("{0}: {1}".format(key, value))
    return EXIT_SUCCESS


def _parse_injection(text):
    try:
        node, values = text.split('=', 1)
        parts = [float(v) for v in values.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(
            "Injection must be NODE=P[,Q], but is: {0!r}".format(text))
    if len(parts) not in (1, 2):
        raise argparse.ArgumentTypeError(
            "Injection must be NODE=P[,Q], but is: {0!r}".format(text))
    return node, parts[0], parts[1] if len(parts) == 2 else 0.0


def cmd_powerflow(args):
    """Solve the DistFlow equations for the given injections."""
    network, _, _ = _load(args)
    matrices = build_matrices(network)
    p = {}
    q = {}
    for node, p_value, q_value in args.inject or []:
        node = _node_id(network, node)
        p[node] = p_value
        q[node] = q_value
    solution = solve_distflow(network, matrices,
                              InjectionProfile.from_mapping(network, p, q))
    _print_table(pd.DataFrame({
        'node': [str(n) for n in network.node_ids],
        'v': solution.voltage_magnitudes,
        'V': solution.V,
        'P': solution.P,
        'Q': solution.Q,
        'l': solution.l,
    }))
    print("Converged in {0} iterations, max residual {1:.3g}".format(
        solution.iterations, solution.max_residual))
    return EXIT_SUCCESS


def _region_frame(network, regions):
    rows = {'node': [str(n) for n in network.node_ids]}
    for model, region in regions.items():
        rows['p_minus_' + model] = region.p_minus
        rows['p_plus_' + model] = region.p_plus
    frame = pd.DataFrame(rows)
    mask = np.zeros(network.node_count, dtype=bool)
    for region in regions.values():
        mask |= region.dispatchable
    return frame[mask]


def cmd_run(args):
    """Compute, validate and export the regions."""
    network, capability, meta = _load(args)
    options = PipelineOptions(
        model=args.model, samples=args.samples, seed=args.seed,
        q_policy=args.q_policy, workers=args.workers, oracle=args.oracle,
        grid_step=args.grid_step, max_oracle_points=args.max_points,
        out_dir=args.out, on_diverge=args.on_diverge)
    result = run_pipeline(network, capability, options, name=meta['name'])
    _print_table(_region_frame(network, result.regions))
    for model, verdicts in sorted(result.boundary.items()):
        if verdicts is None:
            print("{0} boundary: Diverged".format(model))
            continue
        for direction in (UPPER, LOWER):
            verdict = verdicts[direction]
            print("{0} boundary, {1}: {2}{3}".format(
                model, direction, verdict.status,
                "" if verdict.feasible else " at nodes {0}".format(
                    ", ".join(str(n) for n in verdict.nodes))))
    for model, report in sorted(result.reports.items()):
        print("{0} Monte-Carlo: {1} samples, {2} violations, {3} diverged".
              format(model, report.sample_count, report.violation_count,
                     report.diverged_count))
    for model, region in sorted(result.regions.items()):
        if region.downgraded:
            print("{0} region downgraded: {1} current limit violations".
                  format(model, len(region.current_violations)))
    if result.oracle is not None:
        print("Oracle region contains inner region: {0}".format(
            result.oracle_contains))
    for path in result.paths:
        print("Wrote {0}".format(path))
    print("Validation of {0} region: {1}".format(
        result.primary_model, "passed" if result.passed else "FAILED"))
    return result.exit_code


def cmd_validate(args):
    """Validate an exported region."""
    network, capability, _ = _load(args)
    model = MODELS[args.model][0]
    region = load_region(args.region, network, model)
    matrices = build_matrices(network)
    verdicts = check_boundary_feasibility(network, matrices, region)
    report = monte_carlo_validate(
        network, matrices, region, capability, samples=args.samples,
        seed=args.seed, q_policy=args.q_policy, workers=args.workers)
    for direction in (UPPER, LOWER):
        print("{0} boundary, {1}: {2}".format(
            model, direction, verdicts[direction].status))
    print("{0} Monte-Carlo: {1} samples, {2} violations, {3} diverged".
          format(model, report.sample_count, report.violation_count,
                 report.diverged_count))
    if args.out:
        for path in export_results(args.out, network, {model: region},
                                   report):
            print("Wrote {0}".format(path))
    passed = report.passed and all(v.feasible for v in verdicts.values())
    return EXIT_SUCCESS if passed else EXIT_VALIDATION_FAILED


def cmd_oracle(args):
    """Compute the brute-force region and compare it with both models."""
    network, capability, _ = _load(args)
    matrices = build_matrices(network)
    oracle = oracle_region(network, matrices, capability,
                           grid_step=args.grid_step,
                           max_points=args.max_points)
    bounds = compute_current_bounds(network, matrices, capability)
    lindist_lower = solve_lindist_bound(network, matrices, capability, LOWER)
    regions = {
        MODEL_INNER: assemble_region(
            solve_inner_upper(network, matrices, capability, bounds),
            solve_inner_lower(network, matrices, capability, bounds,
                              floor=lindist_lower.p),
            network, capability),
        MODEL_LINDIST: assemble_region(
            solve_lindist_bound(network, matrices, capability, UPPER),
            lindist_lower, network, capability),
    }
    frame = oracle.to_frame()
    for model, region in regions.items():
        positions = [network.index[n] for n in oracle.node_ids]
        frame['p_minus_' + model] = region.p_minus[positions]
        frame['p_plus_' + model] = region.p_plus[positions]
    _print_table(frame)
    contains = oracle.contains(regions[MODEL_INNER], network)
    print("Oracle region contains inner region: {0}".format(contains))
    if not oracle.empty:
        positions = [network.index[n] for n in oracle.node_ids]
        outside = regions[MODEL_LINDIST].p_minus[positions] < \
            oracle.p_lower - oracle.grid_step
        print("LinDist lower end outside oracle region: {0}".format(
            bool(np.any(outside))))
    return EXIT_SUCCESS if contains else EXIT_VALIDATION_FAILED


def cmd_sweep(args):
    """Tabulate LinDist and DistFlow voltages while sweeping one node."""
    network, _, _ = _load(args)
    matrices = build_matrices(network)
    node = _node_id(network, args.node)
    p_values = np.linspace(args.p_min, args.p_max, args.points)
    q_values = None if args.q is None else np.full(args.points, args.q)
    frame = voltage_sweep(network, matrices, node, p_values, q_values)
    if args.out:
        try:
            frame.to_csv(args.out, index=False)
        except OSError as exc:
            raise IoError("Cannot write {0}: {1}".format(args.out, exc))
        print("Wrote {0}".format(args.out))
    else:
        _print_table(frame)
    return EXIT_SUCCESS


def _add_case_args(parser):
    parser.add_argument(
        '--case', choices=list(CASE_TAGS.keys()), default=None,
        help="Capability case for all dispatchable nodes. Default: the "
        "cases of the feeder file.")
    parser.add_argument(
        '--pf', type=float, default=None,
        help="Power factor for the constant-pf case. Default: from the "
        "feeder file.")


def _add_sampling_args(parser):
    parser.add_argument(
        '--samples', type=int, default=10000,
        help="Number of Monte-Carlo samples. Default: %(default)s")
    parser.add_argument(
        '--seed', type=int, default=0,
        help="Seed of the Monte-Carlo sampling. Default: %(default)s")
    parser.add_argument(
        '--q-policy', choices=Q_POLICIES, default='segment',
        help="Reactive injections of the samples. Default: %(default)s")
    parser.add_argument(
        '--workers', type=int, default=1,
        help="Number of sampling threads. Default: %(default)s")


def _add_oracle_args(parser):
    parser.add_argument(
        '--grid-step', type=float, default=1e-3,
        help="Grid step of the oracle in pu. Default: %(default)s")
    parser.add_argument(
        '--max-points', type=int, default=MAX_ORACLE_POINTS,
        help="Cap on the oracle grid size. Default: %(default)s")


def create_parser():
    """Return the argument parser of the ``hc`` command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--feeder', required=True,
        help="Feeder file, or the name of a bundled fixture (twonode, "
        "ieee13).")
    common.add_argument(
        '--log-level', type=str.upper, choices=_LOG_LEVELS,
        default=_default_log_level(),
        help="Log level on stderr. Default: ${0} or WARNING".
        format(LOG_LEVEL_ENVVAR))

    parser = argparse.ArgumentParser(
        prog='hc',
        description="Operating regions of dispatchable injections on radial "
        "distribution feeders.")
    parser.add_argument('--version', action='version',
                        version="%(prog)s {0}".format(__version__))
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True

    sub = subparsers.add_parser(
        'build', parents=[common], help="Sensitivity matrix diagnostics.")
    sub.set_defaults(func=cmd_build)

    sub = subparsers.add_parser(
        'powerflow', parents=[common], help="One DistFlow solve.")
    sub.add_argument(
        '--inject', metavar='NODE=P[,Q]', type=_parse_injection,
        action='append',
        help="Injection of a node in pu; may be repeated. Other nodes: 0.")
    sub.set_defaults(func=cmd_powerflow)

    sub = subparsers.add_parser(
        'run', parents=[common],
        help="Compute, validate and export the operating regions.")
    _add_case_args(sub)
    sub.add_argument(
        '--model', choices=list(MODELS), default='both',
        help="Models to validate; the first one decides the exit code. "
        "Default: %(default)s")
    _add_sampling_args(sub)
    sub.add_argument(
        '--oracle', action='store_true',
        help="Also compute the brute-force oracle region.")
    _add_oracle_args(sub)
    sub.add_argument(
        '--on-diverge', choices=('fallback', 'raise'), default='fallback',
        help="Policy for capability corners whose power flow diverges. "
        "Default: %(default)s")
    sub.add_argument('--out', metavar='DIR', default=None,
                     help="Directory for the result files.")
    sub.set_defaults(func=cmd_run)

    sub = subparsers.add_parser(
        'validate', parents=[common], help="Validate an exported region.")
    sub.add_argument('--region', metavar='DIR', required=True,
                     help="Directory with the exported region.")
    sub.add_argument(
        '--model', choices=('inner', 'lindist'), default='inner',
        help="Model of the region to validate. Default: %(default)s")
    _add_case_args(sub)
    _add_sampling_args(sub)
    sub.add_argument('--out', metavar='DIR', default=None,
                     help="Directory for the result files.")
    sub.set_defaults(func=cmd_validate)

    sub = subparsers.add_parser(
        'oracle', parents=[common],
        help="Brute-force region of a feeder with few dispatchable nodes.")
    _add_case_args(sub)
    _add_oracle_args(sub)
    sub.set_defaults(func=cmd_oracle)

    sub = subparsers.add_parser(
        'sweep', parents=[common],
        help="LinDist versus DistFlow voltage while sweeping one node.")
    sub.add_argument('--node', required=True, help="Swept node.")
    sub.add_argument('--p-min', type=float, default=-1.0,
                     help="Lowest injection in pu. Default: %(default)s")
    sub.add_argument('--p-max', type=float, default=1.0,
                     help="Highest injection in pu. Default: %(default)s")
    sub.add_argument('--points', type=int, default=201,
                     help="Number of points. Default: %(default)s")
    sub.add_argument('--q', type=float, default=None,
                     help="Reactive injection of the node in pu. Default: 0")
    sub.add_argument('--out', metavar='FILE', default=None,
                     help="CSV file for the table. Default: stdout.")
    sub.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    """
    Run the ``hc`` command.

    Returns:
      int: The exit code.
    """
    parser = create_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level, stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        print("hc: error: {0}".format(exc), file=sys.stderr)
        return EXIT_USAGE
    except HostingCapacityError as exc:
        _LOGGER.debug("Command %s failed", args.command, exc_info=True)
        print(exc.diagnostic(), file=sys.stderr)
        return exc.exit_code
