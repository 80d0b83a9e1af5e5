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
Validation of operating regions by nonlinear power flow: Monte-Carlo
sampling of the region, power flow at the region ends, and the activity of
the reactive capability constraints at a program optimum.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd
from immutable_views import DictView

from ._exceptions import Diverged, StatusMismatch
from ._capability import KIND_CONSTANT_PF, KIND_BOX, KIND_QUADRATIC, \
    capability_constraint
from ._distflow import solve_distflow, solve_distflow_batch
from ._region import UPPER, LOWER, STATUS_OPTIMAL

__all__ = ['MonteCarloReport', 'BoundaryVerdict', 'ActivityReport',
           'monte_carlo_validate', 'check_boundary_feasibility',
           'check_reactive_activity', 'VIOLATION_TOLERANCE', 'QUANTILES',
           'Q_POLICIES', 'ACTIVE', 'INACTIVE', 'PINNED']

_LOGGER = logging.getLogger(__name__)

#: Tolerance on squared voltage and squared current bounds, in pu.
VIOLATION_TOLERANCE = 1e-7

#: Quantiles of the per-node voltage distribution in a report.
QUANTILES = (0.05, 0.5, 0.95)

#: Policies for the reactive injections of Monte-Carlo samples.
Q_POLICIES = ('segment', 'independent')

#: Activity status of a reactive capability constraint.
ACTIVE = 'Active'
INACTIVE = 'Inactive'
PINNED = 'Pinned'

_CHUNK_SIZE = 1000


def _violations(network, V, l, tol):
    # pylint: disable=invalid-name
    """Bool mask per column: any voltage or current bound violated."""
    v_min = network.v_min[:, np.newaxis]
    v_max = network.v_max[:, np.newaxis]
    l_max = network.l_max[:, np.newaxis]
    bad = (V < v_min - tol) | (V > v_max + tol) | (l > l_max + tol)
    return np.any(bad, axis=0)


class MonteCarloReport(object):
    # pylint: disable=too-many-instance-attributes
    """
    Result of :func:`monte_carlo_validate`.

    Voltage statistics are squared magnitudes in pu, over the samples whose
    power flow converged.
    """

    __slots__ = ['_model', '_sample_count', '_violation_count',
                 '_diverged_count', '_seed', '_q_policy', '_node_ids',
                 '_v_min', '_v_max', '_quantiles', '_samples']

    def __init__(self, model, sample_count, violation_count, diverged_count,
                 seed, q_policy, node_ids, v_min, v_max, quantiles, samples):
        # pylint: disable=too-many-arguments
        self._model = model
        self._sample_count = int(sample_count)
        self._violation_count = int(violation_count)
        self._diverged_count = int(diverged_count)
        self._seed = seed
        self._q_policy = q_policy
        self._node_ids = list(node_ids)
        self._v_min = v_min
        self._v_max = v_max
        self._quantiles = quantiles
        self._samples = samples

    def __repr__(self):
        return "{0.__class__.__name__}(model={0.model!r}, " \
            "sample_count={0.sample_count!r}, " \
            "violation_count={0.violation_count!r}, " \
            "diverged_count={0.diverged_count!r}, seed={0.seed!r})". \
            format(self)

    @property
    def model(self):
        """:term:`string`: Model of the validated region."""
        return self._model

    @property
    def sample_count(self):
        """int: Number of samples."""
        return self._sample_count

    @property
    def violation_count(self):
        """int: Number of converged samples with a violated bound."""
        return self._violation_count

    @property
    def diverged_count(self):
        """int: Number of samples whose power flow diverged."""
        return self._diverged_count

    @property
    def seed(self):
        """int: Seed of the random generator."""
        return self._seed

    @property
    def q_policy(self):
        """:term:`string`: Policy used for the reactive injections."""
        return self._q_policy

    @property
    def passed(self):
        """bool: No sample violated a bound and none diverged."""
        return self._violation_count == 0 and self._diverged_count == 0

    @property
    def v_min(self):
        """
        :class:`pandas.Series`: Smallest squared voltage per node, indexed by
        node id.
        """
        return pd.Series(self._v_min, index=self._node_ids, name='v_min')

    @property
    def v_max(self):
        """
        :class:`pandas.Series`: Largest squared voltage per node, indexed by
        node id.
        """
        return pd.Series(self._v_max, index=self._node_ids, name='v_max')

    @property
    def quantiles(self):
        """
        :class:`pandas.DataFrame`: Squared voltage quantiles
        (:data:`QUANTILES`) per node; one row per node id.
        """
        return self._quantiles.copy()

    @property
    def samples(self):
        """
        :class:`pandas.DataFrame`: One row per sample with columns ``sample``,
        ``converged``, ``violated``, ``v_min`` and ``v_max`` (extreme squared
        voltages over the nodes, NaN if diverged).
        """
        return self._samples.copy()

    def summary(self):
        """
        Return the report as a dict of plain Python values, suitable for
        JSON serialization.
        """
        nodes = []
        for k, node in enumerate(self._node_ids):
            row = dict(node=str(node), v_min=_plain(self._v_min[k]),
                       v_max=_plain(self._v_max[k]))
            for quantile in QUANTILES:
                row['q{0:g}'.format(quantile)] = \
                    _plain(self._quantiles.iloc[k][quantile])
            nodes.append(row)
        return dict(
            model=self._model, sample_count=self._sample_count,
            violation_count=self._violation_count,
            diverged_count=self._diverged_count, seed=self._seed,
            q_policy=self._q_policy, passed=self.passed, nodes=nodes)


def _plain(value):
    value = float(value)
    return None if np.isnan(value) else value


def _draw(region, capability, network, samples, seed, q_policy):
    """
    Draw the sample injections, shape (n, samples). The first two samples
    are the lower and upper ends of the region.
    """
    n = network.node_count
    rng = np.random.default_rng(seed)
    u_p = rng.random((n, samples))
    u_q = rng.random((n, samples))
    p_minus = region.p_minus[:, np.newaxis]
    delta = region.delta_p[:, np.newaxis]
    p = p_minus + u_p * delta

    if q_policy == 'segment':
        with np.errstate(divide='ignore', invalid='ignore'):
            theta = np.where(delta > 0, (p - p_minus) / delta, 0.0)
        q_minus = region.q_minus[:, np.newaxis]
        q = q_minus + theta * (region.q_plus[:, np.newaxis] - q_minus)
    else:
        cap = capability.compile(network)
        q = np.zeros((n, samples))
        for pos in np.flatnonzero(cap.dispatchable):
            kind = cap.kind[pos]
            if kind == KIND_CONSTANT_PF:
                q[pos] = cap.gamma[pos] * p[pos]
            elif kind == KIND_BOX:
                q[pos] = cap.q_min[pos] + u_q[pos] * \
                    (cap.q_max[pos] - cap.q_min[pos])
            elif kind == KIND_QUADRATIC:
                half = np.sqrt(np.maximum(cap.s_max[pos] ** 2 - p[pos] ** 2,
                                          0.0))
                q[pos] = (2.0 * u_q[pos] - 1.0) * half

    p[:, 0] = region.p_minus
    q[:, 0] = region.q_minus
    if samples > 1:
        p[:, 1] = region.p_plus
        q[:, 1] = region.q_plus
    return p, q


def monte_carlo_validate(network, matrices, region, capability,
                         samples=10000, seed=0, q_policy='segment',
                         workers=1, tol=VIOLATION_TOLERANCE):
    # pylint: disable=too-many-arguments,too-many-locals
    """
    Validate an operating region by nonlinear power flow at random points.

    Real injections are drawn uniformly and independently per node from
    ``[p_minus, p_plus]``. With `q_policy` 'segment', the reactive injection
    of each node moves with its real injection along the segment between the
    reactive injections at the region ends (for constant power factor this is
    ``q = gamma * p``). With 'independent', q is drawn per capability case:
    ``gamma * p``, uniform in the box, or uniform on the disk section at p.
    The first two samples are the lower and upper ends of the region.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      matrices (:class:`~hosting_capacity.SensitivityMatrices`): Complete
        matrices of the feeder.

      region (:class:`~hosting_capacity.OperatingRegion`): The region.

      capability (:class:`~hosting_capacity.CapabilitySpec`): The capability
        (used by the 'independent' policy).

      samples (int): Number of samples, at least 1.

      seed (int): Seed for :func:`numpy.random.default_rng`.

      q_policy (:term:`string`): 'segment' or 'independent'.

      workers (int): Number of threads evaluating chunks of samples.

      tol (float): Tolerance on the squared bounds, in pu.

    Returns:
      :class:`MonteCarloReport`: Identical for identical inputs and seed,
      independent of `workers`.

    Raises:
      StatusMismatch: The region is not optimal.
      ValueError: Invalid `samples`, `q_policy` or `workers`.
    """
    if region.solver_status != STATUS_OPTIMAL:
        raise StatusMismatch(
            "Cannot validate a region with solver status {0}".
            format(region.solver_status))
    if samples < 1:
        raise ValueError(
            "Number of samples must be at least 1, but is: {0}".
            format(samples))
    if q_policy not in Q_POLICIES:
        raise ValueError(
            "q_policy must be one of {0}, but is: {1!r}".
            format(", ".join(Q_POLICIES), q_policy))
    if workers < 1:
        raise ValueError(
            "Number of workers must be at least 1, but is: {0}".
            format(workers))

    p, q = _draw(region, capability, network, samples, seed, q_policy)
    chunks = [slice(start, min(start + _CHUNK_SIZE, samples))
              for start in range(0, samples, _CHUNK_SIZE)]

    def evaluate(chunk):
        return solve_distflow_batch(matrices, p[:, chunk], q[:, chunk])

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(evaluate, chunks))
    else:
        results = [evaluate(chunk) for chunk in chunks]

    # pylint: disable=invalid-name
    V = np.concatenate([r.V for r in results], axis=1)
    l = np.concatenate([r.l for r in results], axis=1)
    converged = np.concatenate([r.converged for r in results])
    violated = converged & _violations(network, V, l, tol)

    node_ids = list(network.node_ids)
    V_ok = V[:, converged]
    with np.errstate(invalid='ignore'):
        if V_ok.shape[1]:
            v_min = V_ok.min(axis=1)
            v_max = V_ok.max(axis=1)
        else:
            v_min = np.full(len(node_ids), np.nan)
            v_max = np.full(len(node_ids), np.nan)
        quantiles = pd.DataFrame(V_ok.T, columns=node_ids). \
            quantile(list(QUANTILES)).T
        sample_min = np.where(converged, V.min(axis=0) if V.size else np.nan,
                              np.nan)
        sample_max = np.where(converged, V.max(axis=0) if V.size else np.nan,
                              np.nan)
    samples_frame = pd.DataFrame({
        'sample': np.arange(samples),
        'converged': converged,
        'violated': violated,
        'v_min': sample_min,
        'v_max': sample_max,
    })

    report = MonteCarloReport(
        region.model, samples, int(violated.sum()),
        int((~converged).sum()), seed, q_policy, node_ids, v_min, v_max,
        quantiles, samples_frame)
    _LOGGER.info("Monte-Carlo validation of %s region: %d samples, %d "
                 "violations, %d diverged", region.model, samples,
                 report.violation_count, report.diverged_count)
    if report.diverged_count:
        _LOGGER.warning("%d Monte-Carlo samples of the %s region diverged",
                        report.diverged_count, region.model)
    return report


class BoundaryVerdict(object):
    """
    Power flow verdict at one end of a region.
    """

    __slots__ = ['_direction', '_nodes', '_worst_excursion', '_V']

    def __init__(self, direction, nodes, worst_excursion, V):
        # pylint: disable=invalid-name
        self._direction = direction
        self._nodes = tuple(nodes)
        self._worst_excursion = float(worst_excursion)
        self._V = V

    @property
    def direction(self):
        """:term:`string`: 'upper' or 'lower'."""
        return self._direction

    @property
    def feasible(self):
        """bool: No voltage bound is violated."""
        return not self._nodes

    @property
    def status(self):
        """:term:`string`: 'Feasible' or 'Violated'."""
        return 'Feasible' if self.feasible else 'Violated'

    @property
    def nodes(self):
        """tuple: Ids of the nodes whose voltage bound is violated."""
        return self._nodes

    @property
    def worst_excursion(self):
        """
        float: Largest squared-voltage excursion beyond a bound, in pu;
        zero or negative if feasible.
        """
        return self._worst_excursion

    @property
    def V(self):  # pylint: disable=invalid-name
        """numpy.ndarray: Squared voltages of the power flow, in pu."""
        return self._V

    def __repr__(self):
        return "{0.__class__.__name__}(direction={0.direction!r}, " \
            "status={0.status!r}, nodes={0.nodes!r}, " \
            "worst_excursion={0.worst_excursion!r})".format(self)


def check_boundary_feasibility(network, matrices, region,
                               tol=VIOLATION_TOLERANCE):
    """
    Solve the nonlinear power flow exactly at both ends of a region and check
    the voltage bounds.

    Returns:
      :class:`~immutable_views.DictView`: :class:`BoundaryVerdict` by
      direction ('upper', 'lower').

    Raises:
      StatusMismatch: The region is not optimal.
      Diverged: The power flow at a region end diverged; the exception's
        `direction` attribute names the end.
    """
    if region.solver_status != STATUS_OPTIMAL:
        raise StatusMismatch(
            "Cannot check a region with solver status {0}".
            format(region.solver_status))
    verdicts = {}
    node_ids = list(network.node_ids)
    for direction in (UPPER, LOWER):
        try:
            solution = solve_distflow(network, matrices,
                                      region.injections(direction))
        except Diverged as exc:
            exc.direction = direction
            raise
        V = solution.V  # pylint: disable=invalid-name
        with np.errstate(invalid='ignore'):
            excursion = np.maximum(V - network.v_max, network.v_min - V)
        bad = np.flatnonzero(excursion > tol)
        verdict = BoundaryVerdict(direction, [node_ids[i] for i in bad],
                                  float(np.max(excursion)), V)
        _LOGGER.info("%s region, %s end: %s", region.model, direction,
                     verdict.status)
        verdicts[direction] = verdict
    return DictView(verdicts)


class ActivityReport(object):
    """
    Activity of the reactive capability constraints at a program optimum.

    A node is 'Active' if its capability margin is within the tolerance of
    zero, 'Inactive' if not, and 'Pinned' if its real injection sits at its
    own bound, where the reactive injection is not forced to the boundary.
    Constant power factor nodes are always 'Active'.
    """

    __slots__ = ['_frame']

    def __init__(self, frame):
        self._frame = frame

    @property
    def frame(self):
        """
        :class:`pandas.DataFrame`: One row per dispatchable node with columns
        ``node``, ``case``, ``p``, ``q``, ``margin`` and ``status``.
        """
        return self._frame.copy()

    @property
    def statuses(self):
        """:class:`~immutable_views.DictView`: Status by node id."""
        return DictView(dict(zip(self._frame['node'],
                                 self._frame['status'])))

    @property
    def counterexamples(self):
        """list: Ids of the nodes with status 'Inactive'."""
        rows = self._frame[self._frame['status'] == INACTIVE]
        return list(rows['node'])

    @property
    def all_active(self):
        """bool: No node is 'Inactive'."""
        return not self.counterexamples

    def __repr__(self):
        return "{0.__class__.__name__}(nodes={1}, counterexamples={2!r})". \
            format(self, len(self._frame), self.counterexamples)


def check_reactive_activity(result, capability, network, tol=1e-6):
    """
    Check that the reactive capability constraint of every dispatchable node
    is active at the optimum of a region program.

    Parameters:

      result (:class:`~hosting_capacity.ProgramResult`): An optimal program
        result, normally of the LinDist programs.

      capability (:class:`~hosting_capacity.CapabilitySpec`): The capability
        the program was solved with.

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      tol (float): Tolerance on the capability margin, in pu.

    Returns:
      :class:`ActivityReport`

    Raises:
      StatusMismatch: The result is not optimal.
    """
    if result.status != STATUS_OPTIMAL:
        raise StatusMismatch(
            "Cannot check activity at a result with status {0}".
            format(result.status))
    cap = capability.compile(network)
    node_ids = list(network.node_ids)
    at_bound = cap.p_max if result.direction == UPPER else cap.p_min
    rows = []
    for pos in np.flatnonzero(cap.dispatchable):
        case = cap.cases[pos]
        p = float(result.p[pos])
        q = float(result.q[pos])
        margin = capability_constraint(case, p, q).margin
        if case.kind == KIND_CONSTANT_PF:
            status = ACTIVE
        elif not result.free[pos] or abs(p - at_bound[pos]) <= tol:
            status = PINNED
        elif abs(margin) <= tol:
            status = ACTIVE
        else:
            status = INACTIVE
        rows.append(dict(node=node_ids[pos], case=case.tag, p=p, q=q,
                         margin=margin, status=status))
    frame = pd.DataFrame(rows, columns=['node', 'case', 'p', 'q', 'margin',
                                        'status'])
    report = ActivityReport(frame)
    if report.counterexamples:
        _LOGGER.warning("Reactive capability constraints inactive at nodes "
                        "%r", report.counterexamples)
    return report
