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
Brute-force operating regions of feeders with few dispatchable nodes, by
nonlinear power flow on a grid of the capability envelope.
"""

import itertools
import logging
import math

import numpy as np
import pandas as pd
from immutable_views import ListView

from ._exceptions import GridTooLarge
from ._capability import KIND_CONSTANT_PF, KIND_BOX, KIND_QUADRATIC
from ._distflow import solve_distflow_batch
from ._validation import VIOLATION_TOLERANCE, _violations

__all__ = ['OracleRegion', 'oracle_region', 'MAX_ORACLE_NODES',
           'MAX_ORACLE_POINTS']

_LOGGER = logging.getLogger(__name__)

#: Largest number of dispatchable nodes the oracle accepts.
MAX_ORACLE_NODES = 3

#: Default cap on the number of power flows of the oracle.
MAX_ORACLE_POINTS = 200000

_CHUNK_SIZE = 5000


class OracleRegion(object):
    """
    Per-node intervals of real injection whose full cross product is feasible
    on the search grid.
    """

    __slots__ = ['_node_ids', '_p_lower', '_p_upper', '_grid_step',
                 '_point_count', '_feasible_count']

    def __init__(self, node_ids, p_lower, p_upper, grid_step, point_count=0,
                 feasible_count=0):
        # pylint: disable=too-many-arguments
        """
        Parameters:

          node_ids (iterable): Ids of the dispatchable nodes.

          p_lower, p_upper (array-like): Interval ends per node, in pu.

          grid_step (float): Grid step of the search, in pu.

          point_count (int): Number of power flows evaluated.

          feasible_count (int): Number of feasible grid points.
        """
        self._node_ids = list(node_ids)
        self._p_lower = np.array(p_lower, dtype=float)
        self._p_upper = np.array(p_upper, dtype=float)
        self._grid_step = float(grid_step)
        self._point_count = int(point_count)
        self._feasible_count = int(feasible_count)

    def __repr__(self):
        return "{0.__class__.__name__}(node_ids={0._node_ids!r}, " \
            "p_lower={1}, p_upper={2}, grid_step={0.grid_step!r})".format(
                self, list(self._p_lower), list(self._p_upper))

    @property
    def node_ids(self):
        """:class:`~immutable_views.ListView`: Dispatchable node ids."""
        return ListView(self._node_ids)

    @property
    def p_lower(self):
        """numpy.ndarray: Lower interval end per node, in pu."""
        return self._p_lower

    @property
    def p_upper(self):
        """numpy.ndarray: Upper interval end per node, in pu."""
        return self._p_upper

    @property
    def grid_step(self):
        """float: Grid step, in pu."""
        return self._grid_step

    @property
    def point_count(self):
        """int: Number of power flows evaluated."""
        return self._point_count

    @property
    def feasible_count(self):
        """int: Number of feasible grid points."""
        return self._feasible_count

    @property
    def empty(self):
        """bool: Whether the region has no nodes or no feasible point."""
        return not self._node_ids or bool(np.any(np.isnan(self._p_lower)))

    def interval(self, node):
        """Return ``(p_lower, p_upper)`` of a node."""
        k = self._node_ids.index(node)
        return float(self._p_lower[k]), float(self._p_upper[k])

    def contains(self, region, network, tol=None):
        """
        Return whether ``[p_minus, p_plus]`` of an
        :class:`~hosting_capacity.OperatingRegion` lies within the oracle
        intervals at every oracle node, within `tol` (default: one grid
        step).
        """
        tol = self._grid_step if tol is None else tol
        if self.empty:
            return False
        for k, node in enumerate(self._node_ids):
            pos = network.index[node]
            if region.p_minus[pos] < self._p_lower[k] - tol or \
                    region.p_plus[pos] > self._p_upper[k] + tol:
                return False
        return True

    def to_frame(self):
        """
        Return the intervals as a :class:`pandas.DataFrame` with columns
        ``node``, ``p_lower`` and ``p_upper``.
        """
        return pd.DataFrame({'node': [str(n) for n in self._node_ids],
                             'p_lower': self._p_lower,
                             'p_upper': self._p_upper})


def _p_grid(p_min, p_max, step):
    first = math.ceil(p_min / step - 1e-9)
    last = math.floor(p_max / step + 1e-9)
    return np.arange(first, last + 1) * step


def _q_grid(cap, pos, p, step):
    """Reactive grid points of node pos at real injection p."""
    kind = cap.kind[pos]
    if kind == KIND_CONSTANT_PF:
        return np.array([cap.gamma[pos] * p])
    if kind == KIND_BOX:
        q_min, q_max = cap.q_min[pos], cap.q_max[pos]
    else:
        half = math.sqrt(max(cap.s_max[pos] ** 2 - p ** 2, 0.0))
        q_min, q_max = -half, half
    count = int(round((q_max - q_min) / step)) + 1
    return np.linspace(q_min, q_max, max(count, 1))


def _grow_box(feasible, start):
    """
    Grow a box of grid indices from `start`, one step per side and round
    while the added slab is all feasible.
    """
    lower = list(start)
    upper = list(start)
    dims = feasible.ndim
    grown = True
    while grown:
        grown = False
        for dim in range(dims):
            for side in (-1, 1):
                new = lower[dim] - 1 if side < 0 else upper[dim] + 1
                if not 0 <= new < feasible.shape[dim]:
                    continue
                index = tuple(
                    new if d == dim else slice(lower[d], upper[d] + 1)
                    for d in range(dims))
                if np.all(feasible[index]):
                    if side < 0:
                        lower[dim] = new
                    else:
                        upper[dim] = new
                    grown = True
    return lower, upper


def oracle_region(network, matrices, capability, grid_step=1e-3,
                  max_points=MAX_ORACLE_POINTS, tol=VIOLATION_TOLERANCE):
    # pylint: disable=too-many-locals,too-many-arguments
    """
    Compute the operating region of a feeder with at most
    :data:`MAX_ORACLE_NODES` dispatchable nodes by brute force.

    The real injection of each dispatchable node is gridded over its
    injection bounds at multiples of `grid_step`. Box and quadratic nodes
    also grid their reactive injection over the capability set, and a real
    injection point is feasible if some reactive grid point makes the
    nonlinear power flow converge within all voltage and current bounds.
    The result is the largest box of feasible points grown greedily from
    the grid point closest to zero injection.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      matrices (:class:`~hosting_capacity.SensitivityMatrices`): Complete
        matrices of the feeder.

      capability (:class:`~hosting_capacity.CapabilitySpec`): The capability.

      grid_step (float): Grid step, in pu.

      max_points (int): Cap on the number of power flows.

      tol (float): Tolerance on the squared bounds, in pu.

    Returns:
      :class:`OracleRegion`: Empty if there is no dispatchable node or the
      start point is infeasible.

    Raises:
      GridTooLarge: More than :data:`MAX_ORACLE_NODES` dispatchable nodes, or
        more than `max_points` grid points.
      ValueError: `grid_step` is not positive.
    """
    if not grid_step > 0:
        raise ValueError(
            "Grid step must be positive, but is: {0}".format(grid_step))
    cap = capability.compile(network)
    positions = list(np.flatnonzero(cap.dispatchable))
    node_ids = [network.node_ids[pos] for pos in positions]
    if not positions:
        _LOGGER.info("Oracle: no dispatchable nodes, region is empty")
        return OracleRegion([], [], [], grid_step)
    if len(positions) > MAX_ORACLE_NODES:
        raise GridTooLarge(
            "Oracle supports at most {0} dispatchable nodes, but the "
            "capability has {1}".format(MAX_ORACLE_NODES, len(positions)))

    p_grids = [_p_grid(cap.p_min[pos], cap.p_max[pos], grid_step)
               for pos in positions]
    # Per node: list of (p index, p, q) options.
    options = []
    for pos, grid in zip(positions, p_grids):
        node_options = []
        for k, p in enumerate(grid):
            for q in _q_grid(cap, pos, p, grid_step):
                node_options.append((k, p, q))
        options.append(node_options)
    point_count = int(np.prod([len(o) for o in options]))
    if point_count > max_points:
        raise GridTooLarge(
            "Oracle grid has {0} points, more than the limit of {1}; use a "
            "larger grid step".format(point_count, max_points))
    if any(grid.size == 0 for grid in p_grids):
        return OracleRegion(node_ids, [math.nan] * len(positions),
                            [math.nan] * len(positions), grid_step)

    n = network.node_count
    shape = tuple(grid.size for grid in p_grids)
    feasible = np.zeros(shape, dtype=bool)
    combos = list(itertools.product(*options))
    feasible_count = 0
    for start in range(0, len(combos), _CHUNK_SIZE):
        chunk = combos[start:start + _CHUNK_SIZE]
        p = np.zeros((n, len(chunk)))
        q = np.zeros((n, len(chunk)))
        for j, pos in enumerate(positions):
            p[pos] = [combo[j][1] for combo in chunk]
            q[pos] = [combo[j][2] for combo in chunk]
        result = solve_distflow_batch(matrices, p, q)
        ok = result.converged & ~_violations(network, result.V, result.l,
                                             tol)
        feasible_count += int(ok.sum())
        indices = tuple(np.array([combo[j][0] for combo in chunk])
                        for j in range(len(positions)))
        np.logical_or.at(feasible, indices, ok)

    start_index = tuple(int(np.argmin(np.abs(grid))) for grid in p_grids)
    if not feasible[start_index]:
        _LOGGER.warning("Oracle: the grid point closest to zero injection "
                        "is infeasible, region is empty")
        return OracleRegion(node_ids, [math.nan] * len(positions),
                            [math.nan] * len(positions), grid_step,
                            point_count, feasible_count)
    lower, upper = _grow_box(feasible, start_index)
    p_lower = [grid[i] for grid, i in zip(p_grids, lower)]
    p_upper = [grid[i] for grid, i in zip(p_grids, upper)]
    _LOGGER.info("Oracle: %d power flows, %d feasible, region %r to %r",
                 point_count, feasible_count, p_lower, p_upper)
    return OracleRegion(node_ids, p_lower, p_upper, grid_step, point_count,
                        feasible_count)
