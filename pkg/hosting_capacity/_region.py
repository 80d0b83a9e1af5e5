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
The operating region of dispatchable injections.

The upper end of the region maximizes ``sum log(p_i)`` and the lower end
maximizes ``sum log(-p_i)``, subject to the capability constraints and to
the voltage bounds on::

    V = v0 + M_p p + M_q q - H l_bound

For the inner approximation, ``l_bound`` is the lower squared-current bound
(zero) for the upper end and the worst-case bound ``l_max`` for the lower
end, which makes every point of the region feasible for the nonlinear
DistFlow model. For the LinDist baseline, ``l_bound`` is zero in both
directions.

Nodes without headroom in a direction (``p_max <= 0`` for the upper end,
``p_min >= 0`` for the lower end, or ``p_min == p_max``) are pinned at that
bound and left out of the objective. Reactive injections are decision
variables constrained by the capability case; constant power factor nodes
have ``q = gamma * p`` substituted.
"""

import logging
import math

import numpy as np
from immutable_views import ListView

from ._exceptions import InfeasibleProgram, NonPositiveUpperBound, \
    NonNegativeLowerBound, StatusMismatch, InvalidRegion, Diverged
from ._capability import KIND_CONSTANT_PF, KIND_BOX, KIND_QUADRATIC
from ._distflow import InjectionProfile, solve_distflow
from ._barrier import BarrierProblem, minimize, STATUS_OPTIMAL, \
    STATUS_INFEASIBLE, STATUS_MAXITER

__all__ = ['ProgramResult', 'OperatingRegion', 'solve_inner_upper',
           'solve_inner_lower', 'solve_lindist_bound', 'assemble_region',
           'check_current_limits', 'MODEL_INNER', 'MODEL_LINDIST', 'UPPER',
           'LOWER', 'STATUS_OPTIMAL', 'STATUS_INFEASIBLE', 'STATUS_MAXITER']

_LOGGER = logging.getLogger(__name__)

#: Model tag of the convex inner approximation.
MODEL_INNER = 'InnerApprox'

#: Model tag of the LinDist baseline.
MODEL_LINDIST = 'LinDist'

#: Direction tag of the upper end of a region.
UPPER = 'upper'

#: Direction tag of the lower end of a region.
LOWER = 'lower'


class ProgramResult(object):
    # pylint: disable=too-many-instance-attributes,invalid-name
    """
    The optimum of one region program.

    ``V`` holds the program's own squared voltage variables, i.e.
    ``v0 + M_p p + M_q q - H l_bound`` at the optimum.
    """

    __slots__ = ['model', 'direction', 'p', 'q', 'V', 'status',
                 'kkt_residual', 'iterations', 'free', 'pinned', 'node_ids']

    def __init__(self, model, direction, p, q, V, status, kkt_residual=0.0,
                 iterations=0, free=None, pinned=None, node_ids=None):
        # pylint: disable=too-many-arguments
        """
        Parameters:

          model (:term:`string`): :data:`MODEL_INNER` or
            :data:`MODEL_LINDIST`.

          direction (:term:`string`): :data:`UPPER` or :data:`LOWER`.

          p, q (numpy.ndarray): Optimal injections, in pu.

          V (numpy.ndarray): Squared voltage variables, in pu.

          status (:term:`string`): 'Optimal', 'Infeasible' or 'MaxIter'.

          kkt_residual (float): KKT residual of the barrier solution.

          iterations (int): Newton steps of the barrier method.

          free (numpy.ndarray): Bool mask of nodes whose p was a decision
            variable. Default: all nodes with nonzero p.

          pinned (numpy.ndarray): Bool mask of dispatchable nodes pinned at an
            injection bound. Default: none.

          node_ids (list): External node ids in internal order.
        """
        self.model = model
        self.direction = direction
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.V = np.asarray(V, dtype=float)
        self.status = status
        self.kkt_residual = float(kkt_residual)
        self.iterations = int(iterations)
        self.free = self.p != 0 if free is None else np.asarray(free, bool)
        self.pinned = np.zeros(self.p.size, dtype=bool) if pinned is None \
            else np.asarray(pinned, bool)
        self.node_ids = list(range(self.p.size)) if node_ids is None else \
            list(node_ids)

    def __repr__(self):
        return "{0.__class__.__name__}(model={0.model!r}, " \
            "direction={0.direction!r}, status={0.status!r}, " \
            "p={1})".format(self, list(self.p))


class OperatingRegion(object):
    # pylint: disable=too-many-instance-attributes,invalid-name
    """
    The operating region ``[p_minus, p_plus]`` of each node, with the
    reactive injections and voltages of the programs that produced its
    ends.

    ``flex_minus`` and ``flex_plus`` express the region for the flexible
    resource: the net injection minus the solar forecast plus the demand
    forecast.
    """

    __slots__ = ['_node_ids', '_model', '_status', '_p_plus', '_p_minus',
                 '_q_plus', '_q_minus', '_V_plus', '_V_minus', '_flex_offset',
                 '_dispatchable', '_current_violations']

    def __init__(self, node_ids, model, solver_status, p_plus, p_minus,
                 q_plus, q_minus, V_plus, V_minus, flex_offset=None,
                 dispatchable=None, current_violations=()):
        # pylint: disable=too-many-arguments
        """
        Parameters:

          node_ids (iterable): External node ids in internal order.

          model (:term:`string`): :data:`MODEL_INNER` or
            :data:`MODEL_LINDIST`.

          solver_status (:term:`string`): 'Optimal', 'Infeasible' or
            'MaxIter'.

          p_plus, p_minus, q_plus, q_minus (array-like): Injections at the
            region ends, in pu.

          V_plus, V_minus (array-like): Squared voltages of the programs, in
            pu.

          flex_offset (array-like): Demand minus solar forecast per node.
            Default: zero.

          dispatchable (array-like): Bool mask of dispatchable nodes.
            Default: all nodes.

          current_violations (iterable): Tuples ``(direction, node,
            l, l_max)`` of branches exceeding their current limit at a
            region end.
        """
        self._node_ids = list(node_ids)
        n = len(self._node_ids)
        self._model = model
        self._status = solver_status

        def vec(values):
            array = np.array(values, dtype=float).reshape(n)
            array.flags.writeable = False
            return array

        self._p_plus = vec(p_plus)
        self._p_minus = vec(p_minus)
        self._q_plus = vec(q_plus)
        self._q_minus = vec(q_minus)
        self._V_plus = vec(V_plus)
        self._V_minus = vec(V_minus)
        self._flex_offset = vec(np.zeros(n) if flex_offset is None
                                else flex_offset)
        mask = np.ones(n, dtype=bool) if dispatchable is None else \
            np.array(dispatchable, dtype=bool).reshape(n)
        mask.flags.writeable = False
        self._dispatchable = mask
        self._current_violations = tuple(current_violations)

    def __repr__(self):
        return "{0.__class__.__name__}(model={0.model!r}, " \
            "status={0.solver_status!r}, p_minus={1}, p_plus={2})".format(
                self, list(self._p_minus), list(self._p_plus))

    @property
    def node_ids(self):
        """:class:`~immutable_views.ListView`: Node ids, internal order."""
        return ListView(self._node_ids)

    @property
    def model(self):
        """:term:`string`: Model that produced the region."""
        return self._model

    @property
    def solver_status(self):
        """:term:`string`: Combined status of the two programs."""
        return self._status

    @property
    def p_plus(self):
        """numpy.ndarray: Upper end of the region, in pu."""
        return self._p_plus

    @property
    def p_minus(self):
        """numpy.ndarray: Lower end of the region, in pu."""
        return self._p_minus

    @property
    def delta_p(self):
        """numpy.ndarray: Width ``p_plus - p_minus`` of the region, in pu."""
        return self._p_plus - self._p_minus

    @property
    def q_plus(self):
        """numpy.ndarray: Reactive injections at the upper end, in pu."""
        return self._q_plus

    @property
    def q_minus(self):
        """numpy.ndarray: Reactive injections at the lower end, in pu."""
        return self._q_minus

    @property
    def V_plus(self):
        """numpy.ndarray: Squared voltages of the upper program, in pu."""
        return self._V_plus

    @property
    def V_minus(self):
        """numpy.ndarray: Squared voltages of the lower program, in pu."""
        return self._V_minus

    @property
    def flex_offset(self):
        """numpy.ndarray: Demand minus solar forecast, in pu."""
        return self._flex_offset

    @property
    def flex_plus(self):
        """numpy.ndarray: Upper end for the flexible resource, in pu."""
        return self._p_plus + self._flex_offset

    @property
    def flex_minus(self):
        """numpy.ndarray: Lower end for the flexible resource, in pu."""
        return self._p_minus + self._flex_offset

    @property
    def dispatchable(self):
        """numpy.ndarray: Bool mask of dispatchable nodes."""
        return self._dispatchable

    @property
    def current_violations(self):
        """tuple: Current limit violations found at the region ends."""
        return self._current_violations

    @property
    def downgraded(self):
        """bool: Whether a current limit is violated at a region end."""
        return bool(self._current_violations)

    def with_current_violations(self, violations):
        """Return a copy of this region with the given current violations."""
        return OperatingRegion(
            self._node_ids, self._model, self._status, self._p_plus,
            self._p_minus, self._q_plus, self._q_minus, self._V_plus,
            self._V_minus, self._flex_offset, self._dispatchable, violations)

    def injections(self, direction):
        """
        Return the :class:`~hosting_capacity.InjectionProfile` at the upper
        or lower end of the region.
        """
        if direction == UPPER:
            return InjectionProfile(self._p_plus, self._q_plus)
        if direction == LOWER:
            return InjectionProfile(self._p_minus, self._q_minus)
        raise ValueError("Invalid direction: {0!r}".format(direction))


class _Program(object):
    # pylint: disable=too-few-public-methods,too-many-instance-attributes
    """
    A region program in terms of its decision variables
    ``y = [free p..., free q...]``.
    """

    def __init__(self, network, matrices, capability, direction, l_bound,
                 floor=None):
        # pylint: disable=too-many-locals,too-many-branches,too-many-statements
        cap = capability.compile(network)
        n = network.node_count
        node_ids = list(network.node_ids)
        upper = direction == UPPER
        sign = 1.0 if upper else -1.0

        p_const = np.zeros(n)
        q_const = np.zeros(n)
        free = np.zeros(n, dtype=bool)
        p_low = cap.p_min.copy()
        if floor is not None:
            p_low = np.maximum(p_low, floor)
        for pos in np.flatnonzero(cap.dispatchable):
            p_min, p_max = p_low[pos], cap.p_max[pos]
            if upper:
                free[pos] = p_max > 0 and p_max > p_min
                p_const[pos] = 0.0 if free[pos] else p_max
            else:
                free[pos] = p_min < 0 and p_min < p_max
                p_const[pos] = 0.0 if free[pos] else p_min
        if not np.any(free):
            if upper:
                raise NonPositiveUpperBound(
                    "No dispatchable node has p_max > 0; the upper program "
                    "has no objective")
            raise NonNegativeLowerBound(
                "No dispatchable node has p_min < 0; the lower program has "
                "no objective")

        p_pos = np.flatnonzero(free)
        q_pos = []
        q_var_bounds = []  # (lower, upper), None for the quadratic coupling
        quad_pairs = []
        for pos in np.flatnonzero(cap.dispatchable):
            kind = cap.kind[pos]
            if kind == KIND_CONSTANT_PF:
                q_const[pos] = cap.gamma[pos] * p_const[pos]
            elif kind == KIND_BOX:
                if cap.q_min[pos] < cap.q_max[pos]:
                    q_pos.append(pos)
                    q_var_bounds.append((cap.q_min[pos], cap.q_max[pos]))
                else:
                    q_const[pos] = cap.q_min[pos]
            elif kind == KIND_QUADRATIC:
                s_max = cap.s_max[pos]
                if free[pos]:
                    q_pos.append(pos)
                    q_var_bounds.append(None)
                    quad_pairs.append((pos, len(q_pos) - 1, s_max ** 2))
                    continue
                room = s_max ** 2 - p_const[pos] ** 2
                if room < 0:
                    raise InfeasibleProgram(
                        "Node {0!r} is pinned at p = {1} beyond its apparent "
                        "power limit {2}".format(node_ids[pos],
                                                 p_const[pos], s_max),
                        node=node_ids[pos])
                if room > 0:
                    q_pos.append(pos)
                    q_var_bounds.append((-math.sqrt(room), math.sqrt(room)))

        n_p = p_pos.size
        n_vars = n_p + len(q_pos)
        p_cols = np.zeros((n, n_vars))
        q_cols = np.zeros((n, n_vars))
        p_cols[p_pos, np.arange(n_p)] = 1.0
        pf_free = p_pos[cap.kind[p_pos] == KIND_CONSTANT_PF]
        col_of = dict((pos, k) for k, pos in enumerate(p_pos))
        for pos in pf_free:
            q_cols[pos, col_of[pos]] = cap.gamma[pos]
        for k, pos in enumerate(q_pos):
            q_cols[pos, n_p + k] = 1.0

        voltage_cols = matrices.M_p @ p_cols + matrices.M_q @ q_cols
        voltage_const = (matrices.v0 + matrices.M_p @ p_const +
                         matrices.M_q @ q_const - matrices.H @ l_bound)

        rows = []
        rhs = []
        v_max = network.v_max
        v_min = network.v_min
        upper_rows = np.flatnonzero(np.isfinite(v_max))
        lower_rows = np.flatnonzero(v_min > 0)
        rows.append(voltage_cols[upper_rows])
        rhs.append(v_max[upper_rows] - voltage_const[upper_rows])
        rows.append(-voltage_cols[lower_rows])
        rhs.append(voltage_const[lower_rows] - v_min[lower_rows])
        eye = np.eye(n_vars)
        rows.append(eye[:n_p])
        rhs.append(cap.p_max[p_pos])
        rows.append(-eye[:n_p])
        rhs.append(-p_low[p_pos])
        for k, bounds in enumerate(q_var_bounds):
            if bounds is None:
                continue
            rows.append(eye[n_p + k:n_p + k + 1])
            rhs.append([bounds[1]])
            rows.append(-eye[n_p + k:n_p + k + 1])
            rhs.append([-bounds[0]])

        quad_sets = []
        quad_rhs = []
        for pos, q_index, s2 in quad_pairs:
            quad_sets.append(np.array([col_of[pos], n_p + q_index]))
            quad_rhs.append(s2)

        self.problem = BarrierProblem(
            c=np.zeros(n_vars),
            log_index=np.arange(n_p),
            log_sign=np.full(n_p, sign),
            G=np.vstack(rows), h=np.concatenate(rhs),
            quad_sets=quad_sets, quad_rhs=np.array(quad_rhs))
        self.node_ids = node_ids
        self.free = free
        self.pinned = cap.dispatchable & ~free
        self.p_const = p_const
        self.q_const = q_const
        self.p_cols = p_cols
        self.q_cols = q_cols
        self.voltage_cols = voltage_cols
        self.voltage_const = voltage_const
        self.v_min = v_min
        self.v_max = v_max

    def voltages(self, y):
        """Squared voltage variables at y."""
        return self.voltage_const + self.voltage_cols @ y

    def worst_voltage_node(self, y):
        """Node id and excursion of the worst voltage violation at y."""
        voltage = self.voltages(y)
        with np.errstate(invalid='ignore'):
            excursion = np.maximum(voltage - self.v_max, self.v_min - voltage)
        pos = int(np.argmax(excursion))
        return self.node_ids[pos], float(excursion[pos])


def _solve(network, matrices, capability, direction, l_bound, model,
           floor=None):
    if direction not in (UPPER, LOWER):
        raise ValueError(
            "Direction must be {0!r} or {1!r}, but is: {2!r}".
            format(UPPER, LOWER, direction))
    l_bound = np.asarray(l_bound, dtype=float)
    program = _Program(network, matrices, capability, direction, l_bound,
                       floor)
    result = minimize(program.problem, np.zeros(program.problem.n))
    if result.status == STATUS_INFEASIBLE:
        node, excursion = program.worst_voltage_node(result.x)
        raise InfeasibleProgram(
            "{0} {1} program is infeasible: voltage bounds cannot be met; "
            "worst node {2!r} is {3:.6g} pu beyond its squared voltage bound".
            format(model, direction, node, excursion),
            node=node, excursion=excursion)
    p = program.p_const + program.p_cols @ result.x
    q = program.q_const + program.q_cols @ result.x
    voltage = program.voltages(result.x)
    _LOGGER.info("%s %s program: status %s, %d Newton steps, KKT residual "
                 "%.3g", model, direction, result.status, result.iterations,
                 result.kkt_residual)
    return ProgramResult(model, direction, p, q, voltage, result.status,
                         result.kkt_residual, result.iterations,
                         program.free, program.pinned, program.node_ids)


def solve_inner_upper(network, matrices, capability, bounds):
    """
    Solve the upper end of the inner approximation: maximize
    ``sum log(p_i)`` with the voltage shifted by ``H l_min``.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      matrices (:class:`~hosting_capacity.SensitivityMatrices`): Complete
        matrices of the feeder.

      capability (:class:`~hosting_capacity.CapabilitySpec`): The capability.

      bounds (:class:`~hosting_capacity.CurrentBounds`): Current bounds.

    Returns:
      :class:`ProgramResult`

    Raises:
      NonPositiveUpperBound: No dispatchable node has ``p_max > 0``.
      InfeasibleProgram: The voltage bounds cannot be met.
    """
    return _solve(network, matrices, capability, UPPER, bounds.l_min,
                  MODEL_INNER)


def solve_inner_lower(network, matrices, capability, bounds, floor=None):
    """
    Solve the lower end of the inner approximation: maximize
    ``sum log(-p_i)`` with the voltage shifted by ``H l_max``.

    The shift tightens the lower voltage bound, which makes the lower end
    more conservative than the LinDist lower end in the objective. With
    `floor` set to the injections of the LinDist lower end, every node's
    lower end is also at or above its LinDist lower end.

    Parameters:

      floor (numpy.ndarray): Injections in node order below which the lower
        end does not reach, or None.

    Returns:
      :class:`ProgramResult`

    Raises:
      NonNegativeLowerBound: No dispatchable node has ``p_min < 0``.
      InfeasibleProgram: The voltage bounds cannot be met.
    """
    if floor is not None:
        floor = np.asarray(floor, dtype=float)
    return _solve(network, matrices, capability, LOWER, bounds.l_max,
                  MODEL_INNER, floor)


def solve_lindist_bound(network, matrices, capability, direction):
    """
    Solve one end of the LinDist region (no current term).

    Parameters:

      direction (:term:`string`): :data:`UPPER` or :data:`LOWER`.

    Returns:
      :class:`ProgramResult`

    Raises:
      NonPositiveUpperBound, NonNegativeLowerBound: No objective terms.
      InfeasibleProgram: The voltage bounds cannot be met.
      ValueError: Invalid direction.
    """
    return _solve(network, matrices, capability, direction,
                  np.zeros(network.node_count), MODEL_LINDIST)


def assemble_region(upper, lower, network=None, capability=None):
    """
    Combine the two ends of a region into an :class:`OperatingRegion`.

    Parameters:

      upper (:class:`ProgramResult`): Result of the upper program.

      lower (:class:`ProgramResult`): Result of the lower program.

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder; needed
        together with `capability` for the forecast offsets.

      capability (:class:`~hosting_capacity.CapabilitySpec`): Source of the
        demand and solar forecasts and of the dispatchable nodes. Default: no
        offsets, nodes with a free or pinned injection are dispatchable.

    Returns:
      :class:`OperatingRegion`

    Raises:
      StatusMismatch: A program is not optimal, or the results do not form
        an upper/lower pair of the same model.
      InvalidRegion: The sign conditions of the ends do not hold.
    """
    for result, direction in ((upper, UPPER), (lower, LOWER)):
        if result.direction != direction:
            raise StatusMismatch(
                "Expected a {0} program result, got {1}".
                format(direction, result.direction))
        if result.status != STATUS_OPTIMAL:
            raise StatusMismatch(
                "{0} {1} program is not optimal: {2}".
                format(result.model, direction, result.status))
    if upper.model != lower.model:
        raise StatusMismatch(
            "Region ends come from different models: {0} and {1}".
            format(upper.model, lower.model))
    bad_upper = upper.free & ~(upper.p > 0)
    bad_lower = lower.free & ~(lower.p < 0)
    if np.any(bad_upper) or np.any(bad_lower):
        nodes = [upper.node_ids[i] for i in
                 np.flatnonzero(bad_upper | bad_lower)]
        raise InvalidRegion(
            "Region ends violate p_plus > 0 > p_minus at nodes {0!r}".
            format(nodes))
    delta = upper.p - lower.p
    if np.any(delta < 0):
        nodes = [upper.node_ids[i] for i in np.flatnonzero(delta < 0)]
        raise InvalidRegion(
            "Region has p_plus < p_minus at nodes {0!r}".format(nodes))

    if capability is not None and network is not None:
        cap = capability.compile(network)
        offset = cap.demand - cap.solar
        dispatchable = cap.dispatchable
    else:
        offset = None
        dispatchable = upper.free | upper.pinned | lower.free | lower.pinned
    return OperatingRegion(
        upper.node_ids, upper.model, STATUS_OPTIMAL, upper.p, lower.p,
        upper.q, lower.q, upper.V, lower.V, offset, dispatchable)


def check_current_limits(network, matrices, region, tol=1e-7):
    """
    Check the squared branch currents at both ends of a region against the
    current limits of the network, by nonlinear power flow.

    Returns:
      :class:`OperatingRegion`: A copy of `region` whose
      :attr:`~OperatingRegion.current_violations` lists every violation as
      ``(direction, node, l, l_max)``; the node identifies the branch.

    Raises:
      Diverged: The power flow at a region end diverged.
    """
    violations = []
    l_max = network.l_max
    for direction in (UPPER, LOWER):
        try:
            solution = solve_distflow(network, matrices,
                                      region.injections(direction))
        except Diverged as exc:
            exc.direction = direction
            raise
        for pos in np.flatnonzero(solution.l > l_max + tol):
            violations.append((direction, network.node_ids[pos],
                               float(solution.l[pos]), float(l_max[pos])))
    if violations:
        _LOGGER.warning("%s region downgraded: %d current limit violations",
                        region.model, len(violations))
    return region.with_current_violations(violations)
