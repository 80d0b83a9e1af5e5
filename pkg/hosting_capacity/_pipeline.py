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
The end-to-end computation of operating regions: matrices, current bounds,
the region programs of both models, validation, and export.
"""

import logging
import math

from ._exceptions import Diverged, EXIT_SUCCESS, EXIT_VALIDATION_FAILED
from ._matrices import build_matrices
from ._distflow import compute_current_bounds
from ._region import solve_inner_upper, solve_inner_lower, \
    solve_lindist_bound, assemble_region, check_current_limits, \
    MODEL_INNER, MODEL_LINDIST, UPPER, LOWER
from ._validation import monte_carlo_validate, check_boundary_feasibility, \
    check_reactive_activity, Q_POLICIES
from ._oracle import oracle_region, MAX_ORACLE_POINTS
from ._io import export_results

__all__ = ['PipelineOptions', 'PipelineResult', 'run_pipeline', 'MODELS']

_LOGGER = logging.getLogger(__name__)

#: Values of :attr:`PipelineOptions.model` and the models they validate.
MODELS = {
    'inner': (MODEL_INNER,),
    'lindist': (MODEL_LINDIST,),
    'both': (MODEL_INNER, MODEL_LINDIST),
}


class PipelineOptions(object):
    # pylint: disable=too-many-instance-attributes,too-few-public-methods
    """
    Options of :func:`run_pipeline`.
    """

    def __init__(self, case=None, pf=None, model='both', samples=10000,
                 seed=0, q_policy='segment', workers=1, oracle=False,
                 grid_step=1e-3, max_oracle_points=MAX_ORACLE_POINTS,
                 out_dir=None, on_diverge='fallback'):
        # pylint: disable=too-many-arguments
        """
        Parameters:

          case (:term:`string`): Capability case tag that replaces the case
            of every capability record, or `None` to keep the cases of the
            records.

          pf (float): Power factor for the 'constant-pf' case, or `None` to
            use the records' power factors.

          model (:term:`string`): Models to validate: 'inner', 'lindist' or
            'both'. Both regions are always computed. The first model of the
            selection is the primary model that decides the outcome.

          samples (int): Number of Monte-Carlo samples; 0 skips the sampling.

          seed (int): Seed of the Monte-Carlo sampling.

          q_policy (:term:`string`): Reactive sampling policy.

          workers (int): Number of sampling threads.

          oracle (bool): Compute the brute-force oracle region.

          grid_step (float): Grid step of the oracle, in pu.

          max_oracle_points (int): Cap on the oracle grid size.

          out_dir (:term:`string`): Directory for the exported results, or
            `None` to skip the export.

          on_diverge (:term:`string`): Policy for diverged capability corners
            ('fallback' or 'raise').

        Raises:
          ValueError: Invalid `model` or `q_policy`.
        """
        if model not in MODELS:
            raise ValueError(
                "model must be one of {0}, but is: {1!r}".
                format(", ".join(MODELS), model))
        if q_policy not in Q_POLICIES:
            raise ValueError(
                "q_policy must be one of {0}, but is: {1!r}".
                format(", ".join(Q_POLICIES), q_policy))
        self.case = case
        self.pf = pf
        self.model = model
        self.samples = int(samples)
        self.seed = int(seed)
        self.q_policy = q_policy
        self.workers = int(workers)
        self.oracle = bool(oracle)
        self.grid_step = float(grid_step)
        self.max_oracle_points = int(max_oracle_points)
        self.out_dir = out_dir
        self.on_diverge = on_diverge

    def __repr__(self):
        items = ", ".join("{0}={1!r}".format(key, value)
                          for key, value in sorted(vars(self).items()))
        return "{0.__class__.__name__}({1})".format(self, items)


class PipelineResult(object):
    # pylint: disable=too-many-instance-attributes,too-few-public-methods
    """
    Everything :func:`run_pipeline` computed.

    Attributes:

      capability: The capability after the case override.

      matrices: The sensitivity matrices.

      bounds: The squared-current bounds.

      programs: Tuple ``(upper, lower)`` of program results by model.

      regions: :class:`~hosting_capacity.OperatingRegion` by model.

      boundary: Boundary verdicts by model (`None` where the power flow at a
        region end diverged).

      reports: :class:`~hosting_capacity.MonteCarloReport` by model.

      activity: :class:`~hosting_capacity.ActivityReport` of the LinDist
        programs by direction.

      oracle: The :class:`~hosting_capacity.OracleRegion`, or `None`.

      oracle_contains: Whether the oracle region contains the inner
        region, or `None`.

      primary_model: The model that decides the outcome.

      passed (bool): Validation of the primary model passed.

      exit_code (int): 0 if passed, else 1.

      summary (dict): JSON-serializable summary.

      paths (list): Exported files.
    """

    def __init__(self, **kwargs):
        self.capability = None
        self.matrices = None
        self.bounds = None
        self.programs = {}
        self.regions = {}
        self.boundary = {}
        self.reports = {}
        self.activity = {}
        self.oracle = None
        self.oracle_contains = None
        self.primary_model = None
        self.passed = False
        self.exit_code = EXIT_VALIDATION_FAILED
        self.summary = {}
        self.paths = []
        for key, value in kwargs.items():
            setattr(self, key, value)

    def __repr__(self):
        return "{0.__class__.__name__}(primary_model={0.primary_model!r}, " \
            "passed={0.passed!r}, exit_code={0.exit_code!r})".format(self)


def _finite(value):
    value = float(value)
    return None if math.isnan(value) else value


def _boundary_summary(verdicts):
    if verdicts is None:
        return 'Diverged'
    return dict((direction, dict(status=v.status,
                                 nodes=[str(n) for n in v.nodes],
                                 worst_excursion=v.worst_excursion))
                for direction, v in verdicts.items())


def _model_passed(result, model):
    region = result.regions[model]
    verdicts = result.boundary.get(model)
    if verdicts is None or region.downgraded:
        return False
    if not all(v.feasible for v in verdicts.values()):
        return False
    report = result.reports.get(model)
    if report is not None and not report.passed:
        return False
    if model == MODEL_INNER and result.oracle_contains is False:
        return False
    return True


def run_pipeline(network, capability, options=None, name=None):
    # pylint: disable=too-many-locals
    """
    Compute and validate the operating regions of a feeder.

    The sequence is: sensitivity matrices, worst-case current bounds from
    power flows at the capability corners, the upper and lower programs of
    the inner approximation and of LinDist, region assembly with a current
    limit check, boundary and Monte-Carlo validation of the selected models,
    the reactive activity check at the LinDist optima, the optional oracle,
    and the export.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      capability (:class:`~hosting_capacity.CapabilitySpec`): The capability.

      options (:class:`PipelineOptions`): Options. Default: default options.

      name (:term:`string`): Feeder name for the summary.

    Returns:
      :class:`PipelineResult`

    Raises:
      HostingCapacityError: A stage failed; see the stage functions.
    """
    options = PipelineOptions() if options is None else options
    if options.case is not None:
        capability = capability.with_case(options.case, pf=options.pf)
    models = MODELS[options.model]
    result = PipelineResult(capability=capability, primary_model=models[0])

    result.matrices = matrices = build_matrices(network)
    _LOGGER.info("Built sensitivity matrices for %d nodes",
                 network.node_count)
    result.bounds = bounds = compute_current_bounds(
        network, matrices, capability, on_diverge=options.on_diverge)

    result.programs[MODEL_LINDIST] = (
        solve_lindist_bound(network, matrices, capability, UPPER),
        solve_lindist_bound(network, matrices, capability, LOWER))
    result.programs[MODEL_INNER] = (
        solve_inner_upper(network, matrices, capability, bounds),
        solve_inner_lower(network, matrices, capability, bounds,
                          floor=result.programs[MODEL_LINDIST][1].p))
    for model in (MODEL_INNER, MODEL_LINDIST):
        upper, lower = result.programs[model]
        region = assemble_region(upper, lower, network, capability)
        if model == MODEL_INNER:
            region = check_current_limits(network, matrices, region)
        result.regions[model] = region
        _LOGGER.info("%s region: p_minus=%s, p_plus=%s", model,
                     list(region.p_minus), list(region.p_plus))

    for model in models:
        region = result.regions[model]
        try:
            result.boundary[model] = check_boundary_feasibility(
                network, matrices, region)
        except Diverged as exc:
            _LOGGER.warning("%s region: %s", model, exc)
            result.boundary[model] = None
        if options.samples > 0:
            result.reports[model] = monte_carlo_validate(
                network, matrices, region, capability,
                samples=options.samples, seed=options.seed,
                q_policy=options.q_policy, workers=options.workers)

    lindist_upper, lindist_lower = result.programs[MODEL_LINDIST]
    for program in (lindist_upper, lindist_lower):
        result.activity[program.direction] = check_reactive_activity(
            program, capability, network)

    if options.oracle:
        result.oracle = oracle_region(
            network, matrices, capability, grid_step=options.grid_step,
            max_points=options.max_oracle_points)
        result.oracle_contains = result.oracle.contains(
            result.regions[MODEL_INNER], network)

    result.passed = _model_passed(result, result.primary_model)
    result.exit_code = EXIT_SUCCESS if result.passed else \
        EXIT_VALIDATION_FAILED
    result.summary = _summary(result, network, options, name)
    if options.out_dir is not None:
        result.paths = export_results(
            options.out_dir, network, result.regions,
            result.reports.get(result.primary_model), result.summary)
    _LOGGER.info("Pipeline finished: primary model %s, passed %s",
                 result.primary_model, result.passed)
    return result


def _summary(result, network, options, name):
    regions = {}
    for model, region in result.regions.items():
        upper, lower = result.programs[model]
        regions[model] = dict(
            solver_status=region.solver_status,
            kkt_residual=max(upper.kkt_residual, lower.kkt_residual),
            downgraded=region.downgraded,
            current_violations=[
                dict(direction=d, node=str(node), l=l, l_max=l_max)
                for d, node, l, l_max in region.current_violations])
    validation = {}
    for model in MODELS[options.model]:
        entry = dict(boundary=_boundary_summary(result.boundary.get(model)),
                     passed=_model_passed(result, model))
        report = result.reports.get(model)
        if report is not None:
            entry.update(violation_count=report.violation_count,
                         diverged_count=report.diverged_count,
                         sample_count=report.sample_count)
        validation[model] = entry
    summary = dict(
        feeder=name,
        nodes=network.node_count,
        cases=result.capability.case_tags,
        model=options.model,
        primary_model=result.primary_model,
        seed=options.seed,
        q_policy=options.q_policy,
        current_bounds=dict(
            flagged=result.bounds.flagged,
            diverged_corners=list(result.bounds.diverged_corners)),
        regions=regions,
        validation=validation,
        activity=dict((direction, dict(
            counterexamples=[str(n) for n in report.counterexamples]))
                      for direction, report in result.activity.items()),
        passed=result.passed,
        exit_code=result.exit_code)
    if result.oracle is not None:
        summary['oracle'] = dict(
            grid_step=result.oracle.grid_step,
            empty=result.oracle.empty,
            contains_inner=result.oracle_contains,
            intervals=dict(
                (str(node), [_finite(lo), _finite(hi)]) for node, lo, hi in
                zip(result.oracle.node_ids, result.oracle.p_lower,
                    result.oracle.p_upper)))
    return summary

