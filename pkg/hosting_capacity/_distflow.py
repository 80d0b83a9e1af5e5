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
Nonlinear DistFlow power flow, its LinDist linearization, and worst-case
bounds on the squared branch currents.

The power flow is solved as the fixed point of::

    l <- (P(l)**2 + Q(l)**2) / V(l)

with ``P = C p - D_R l``, ``Q = C q - D_X l`` and
``V = v0 + M_p p + M_q q - H l``, starting from ``l = 0``. The solver works
on a batch of injection vectors at once (one column per case) and is
stateless, so it can be called concurrently on shared matrices.
"""

import logging
import math

import numpy as np
import pandas as pd

from ._exceptions import Diverged, DimensionMismatch

__all__ = ['InjectionProfile', 'PowerFlowSolution', 'BatchFlowResult',
           'CurrentBounds', 'solve_distflow', 'solve_distflow_batch',
           'solve_lindist_voltages', 'compute_current_bounds',
           'voltage_sweep', 'DISTFLOW_TOLERANCE', 'DISTFLOW_MAX_ITERATIONS']

_LOGGER = logging.getLogger(__name__)

#: Convergence tolerance on the infinity norm of successive iterates of l.
DISTFLOW_TOLERANCE = 1e-10

#: Iteration cap of the fixed-point iteration.
DISTFLOW_MAX_ITERATIONS = 200


def _vector(values, n, name):
    array = np.asarray(values, dtype=float)
    if array.shape != (n,):
        raise DimensionMismatch(
            "{0} must have shape ({1},), but has shape {2}".
            format(name, n, array.shape))
    return array


class InjectionProfile(object):
    """
    Net real and reactive injections at the non-substation nodes, in pu,
    generation positive, in the internal node order.
    """

    __slots__ = ['_p', '_q']

    def __init__(self, p, q=None):
        """
        Parameters:

          p (array-like): Real injections, in pu.

          q (array-like): Reactive injections, in pu. Default: zero.

        Raises:
          DimensionMismatch: p and q have different shapes or are not
            vectors.
          ValueError: An entry is not finite.
        """
        p = np.array(p, dtype=float)
        if p.ndim != 1:
            raise DimensionMismatch(
                "Injections must be a vector, but have shape {0}".
                format(p.shape))
        q = np.zeros_like(p) if q is None else _vector(q, p.size, 'q').copy()
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("Injections must be finite")
        p.flags.writeable = False
        q.flags.writeable = False
        self._p = p
        self._q = q

    @classmethod
    def zeros(cls, n):
        """Return the no-load profile for n nodes."""
        return cls(np.zeros(n))

    @classmethod
    def from_mapping(cls, network, p=None, q=None):
        """
        Create a profile from mappings of external node id to injection.
        Nodes not in a mapping get zero.

        Raises:
          KeyError: A node id is not a non-substation node of the network.
        """
        p_vec = np.zeros(network.node_count)
        q_vec = np.zeros(network.node_count)
        for mapping, vec in ((p or {}, p_vec), (q or {}, q_vec)):
            for node, value in mapping.items():
                vec[network.index[node]] = value
        return cls(p_vec, q_vec)

    @property
    def p(self):
        """numpy.ndarray: Real injections, in pu."""
        return self._p

    @property
    def q(self):
        """numpy.ndarray: Reactive injections, in pu."""
        return self._q

    def __repr__(self):
        return "{0.__class__.__name__}(p={1}, q={2})".format(
            self, list(self._p), list(self._q))


class PowerFlowSolution(object):
    # pylint: disable=too-many-arguments
    """
    A converged DistFlow solution.

    ``P`` and ``Q`` are the flows of each branch at its downstream end,
    positive toward the substation.
    """

    __slots__ = ['_V', '_P', '_Q', '_l', '_converged', '_iterations',
                 '_max_residual']

    def __init__(self, V, P, Q, l, converged, iterations, max_residual):
        # pylint: disable=invalid-name
        self._V = V
        self._P = P
        self._Q = Q
        self._l = l
        self._converged = bool(converged)
        self._iterations = int(iterations)
        self._max_residual = float(max_residual)

    @property
    def V(self):  # pylint: disable=invalid-name
        """numpy.ndarray: Squared voltage magnitudes, in pu."""
        return self._V

    @property
    def voltage_magnitudes(self):
        """numpy.ndarray: Voltage magnitudes, in pu."""
        return np.sqrt(self._V)

    @property
    def P(self):  # pylint: disable=invalid-name
        """numpy.ndarray: Real branch flows, in pu."""
        return self._P

    @property
    def Q(self):  # pylint: disable=invalid-name
        """numpy.ndarray: Reactive branch flows, in pu."""
        return self._Q

    @property
    def l(self):
        """numpy.ndarray: Squared branch current magnitudes, in pu."""
        return self._l

    @property
    def converged(self):
        """bool: Whether the fixed-point iteration converged."""
        return self._converged

    @property
    def iterations(self):
        """int: Number of fixed-point iterations."""
        return self._iterations

    @property
    def max_residual(self):
        """float: Largest residual of the four DistFlow equations, in pu."""
        return self._max_residual

    def __repr__(self):
        return "{0.__class__.__name__}(converged={0.converged!r}, " \
            "iterations={0.iterations!r}, " \
            "max_residual={0.max_residual!r})".format(self)


class BatchFlowResult(object):
    # pylint: disable=too-few-public-methods,invalid-name
    """
    DistFlow results for a batch of injection columns. Arrays have shape
    (n, m) for m columns; per-column arrays have shape (m,). Columns that did
    not converge hold the last iterate.
    """

    __slots__ = ['V', 'P', 'Q', 'l', 'converged', 'iterations',
                 'max_residual']

    def __init__(self, V, P, Q, l, converged, iterations, max_residual):
        # pylint: disable=too-many-arguments
        self.V = V
        self.P = P
        self.Q = Q
        self.l = l
        self.converged = converged
        self.iterations = iterations
        self.max_residual = max_residual

    def column(self, k):
        """Return column k as a :class:`PowerFlowSolution`."""
        return PowerFlowSolution(
            self.V[:, k].copy(), self.P[:, k].copy(), self.Q[:, k].copy(),
            self.l[:, k].copy(), self.converged[k], self.iterations[k],
            self.max_residual[k])


def _residuals(matrices, p, q, V, P, Q, l):
    # pylint: disable=invalid-name,too-many-arguments
    """
    Largest absolute residual per column of the branch-local DistFlow
    equations: real and reactive flow balance, voltage drop, and
    ``l V = P**2 + Q**2``.
    """
    A = matrices.A
    r = np.diag(matrices.R)[:, np.newaxis]
    x = np.diag(matrices.X)[:, np.newaxis]
    z2 = np.diag(matrices.Z2)[:, np.newaxis]
    from_root = matrices.B[0][:, np.newaxis]
    res_p = P - p - A @ (P - r * l)
    res_q = Q - q - A @ (Q - x * l)
    v_parent = matrices.v0 * from_root + A.T @ V
    res_v = V - (v_parent + 2.0 * r * P + 2.0 * x * Q - z2 * l)
    res_l = l * V - (P ** 2 + Q ** 2)
    stacked = np.abs(np.concatenate([res_p, res_q, res_v, res_l], axis=0))
    return np.max(stacked, axis=0)


def solve_distflow_batch(matrices, p, q, tol=DISTFLOW_TOLERANCE,
                         max_iter=DISTFLOW_MAX_ITERATIONS, damping=1.0):
    # pylint: disable=invalid-name,too-many-locals,too-many-arguments
    """
    Solve the DistFlow equations for a batch of injection vectors.

    Divergence is reported per column and never raised.

    Parameters:

      matrices (:class:`~hosting_capacity.SensitivityMatrices`): Complete
        matrices of the feeder.

      p (numpy.ndarray): Real injections, shape (n, m).

      q (numpy.ndarray): Reactive injections, shape (n, m).

      tol (float): Tolerance on ``max |l_new - l|`` per column.

      max_iter (int): Iteration cap.

      damping (float): Relaxation factor in (0, 1] applied to each update.

    Returns:
      :class:`BatchFlowResult`

    Raises:
      DimensionMismatch: p or q does not have n rows, or their shapes differ.
    """
    n = matrices.n
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.ndim == 1:
        p = p[:, np.newaxis]
    if q.ndim == 1:
        q = q[:, np.newaxis]
    if p.shape[0] != n or p.shape != q.shape:
        raise DimensionMismatch(
            "Injection batches must have shape ({0}, m), but have shapes "
            "{1} and {2}".format(n, p.shape, q.shape))
    m = p.shape[1]

    Cp = matrices.C @ p
    Cq = matrices.C @ q
    V_lin = matrices.v0 + matrices.M_p @ p + matrices.M_q @ q

    l = np.zeros((n, m))
    converged = np.zeros(m, dtype=bool)
    active = np.ones(m, dtype=bool)
    iterations = np.zeros(m, dtype=int)

    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        for iteration in range(1, max_iter + 1):
            cols = np.flatnonzero(active)
            if cols.size == 0:
                break
            l_cur = l[:, cols]
            P = Cp[:, cols] - matrices.D_R @ l_cur
            Q = Cq[:, cols] - matrices.D_X @ l_cur
            V = V_lin[:, cols] - matrices.H @ l_cur
            bad = ~np.all(V > 0, axis=0)
            l_new = l_cur + damping * ((P ** 2 + Q ** 2) / V - l_cur)
            bad |= ~np.all(np.isfinite(l_new), axis=0)
            step = np.max(np.abs(l_new - l_cur), axis=0) if n else \
                np.zeros(cols.size)
            ok = ~bad
            l[:, cols[ok]] = l_new[:, ok]
            iterations[cols] = iteration
            done = ok & (step < tol)
            converged[cols[done]] = True
            active[cols[done | bad]] = False

        P = Cp - matrices.D_R @ l
        Q = Cq - matrices.D_X @ l
        V = V_lin - matrices.H @ l
        converged &= np.all(V > 0, axis=0)
        max_residual = _residuals(matrices, p, q, V, P, Q, l) if n else \
            np.zeros(m)

    return BatchFlowResult(V, P, Q, l, converged, iterations, max_residual)


def solve_distflow(network, matrices, injections, tol=DISTFLOW_TOLERANCE,
                   max_iter=DISTFLOW_MAX_ITERATIONS, damping=1.0):
    # pylint: disable=too-many-arguments
    """
    Solve the DistFlow equations for one injection profile.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      matrices (:class:`~hosting_capacity.SensitivityMatrices`): Complete
        matrices of the feeder.

      injections (:class:`InjectionProfile`): The injections.

      tol, max_iter, damping: See :func:`solve_distflow_batch`.

    Returns:
      :class:`PowerFlowSolution`: The converged solution.

    Raises:
      DimensionMismatch: The injections do not match the network.
      Diverged: The iteration cap was hit or a squared voltage became
        non-positive.
    """
    n = network.node_count
    p = _vector(injections.p, n, 'p')
    q = _vector(injections.q, n, 'q')
    result = solve_distflow_batch(matrices, p, q, tol=tol, max_iter=max_iter,
                                  damping=damping)
    solution = result.column(0)
    if not solution.converged:
        raise Diverged(
            "DistFlow iteration did not converge within {0} iterations "
            "(beyond the nose point or voltage collapse)".
            format(solution.iterations), iterations=solution.iterations)
    _LOGGER.debug("DistFlow converged in %d iterations, residual %.3g",
                  solution.iterations, solution.max_residual)
    return solution


def solve_lindist_voltages(matrices, injections):
    """
    Return the LinDist squared voltages ``v0 + M_p p + M_q q``.

    Raises:
      DimensionMismatch: The injections do not match the matrices.
    """
    n = matrices.n
    p = _vector(injections.p, n, 'p')
    q = _vector(injections.q, n, 'q')
    return matrices.v0 + matrices.M_p @ p + matrices.M_q @ q


class CurrentBounds(object):
    """
    Bounds on the squared branch currents over the capability envelope.

    ``l_min`` is zero. ``l_max`` is the elementwise maximum over the evaluated
    capability corners; where a corner diverged, the branches feeding its
    injections take the network's current limit instead and the bounds are
    flagged.
    """

    __slots__ = ['_l_min', '_l_max', '_corners', '_diverged_corners']

    def __init__(self, l_min, l_max, corners=(), diverged_corners=()):
        l_min = np.array(l_min, dtype=float)
        l_max = np.array(l_max, dtype=float)
        if l_min.shape != l_max.shape:
            raise DimensionMismatch(
                "l_min and l_max must have the same shape, but have {0} "
                "and {1}".format(l_min.shape, l_max.shape))
        if np.any(l_min < 0) or np.any(l_min > l_max):
            raise ValueError(
                "Current bounds must satisfy 0 <= l_min <= l_max")
        l_min.flags.writeable = False
        l_max.flags.writeable = False
        self._l_min = l_min
        self._l_max = l_max
        self._corners = tuple(corners)
        self._diverged_corners = tuple(diverged_corners)

    @property
    def l_min(self):
        """numpy.ndarray: Lower squared current bound, in pu."""
        return self._l_min

    @property
    def l_max(self):
        """numpy.ndarray: Upper squared current bound, in pu."""
        return self._l_max

    @property
    def corners(self):
        """tuple: Labels of the evaluated corners."""
        return self._corners

    @property
    def diverged_corners(self):
        """tuple: Labels of the corners that did not converge."""
        return self._diverged_corners

    @property
    def flagged(self):
        """bool: Whether a diverged corner fell back to current limits."""
        return bool(self._diverged_corners)

    def scaled(self, factor):
        """Return bounds with l_max multiplied by `factor` (>= 1)."""
        return CurrentBounds(self._l_min, self._l_max * factor,
                             self._corners, self._diverged_corners)

    def __repr__(self):
        return "{0.__class__.__name__}(l_max={1}, flagged={0.flagged!r})". \
            format(self, list(self._l_max))


def compute_current_bounds(network, matrices, capability,
                           on_diverge='fallback'):
    """
    Compute the worst-case squared-current bounds over the capability
    envelope, by power flows at the capability corners
    (:meth:`~hosting_capacity.CapabilitySpec.corners`).

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      matrices (:class:`~hosting_capacity.SensitivityMatrices`): Complete
        matrices of the feeder.

      capability (:class:`~hosting_capacity.CapabilitySpec`): The capability.

      on_diverge (:term:`string`): 'fallback' to use the current limits of
        the branches upstream of a diverged corner's injections, or 'raise'.

    Returns:
      :class:`CurrentBounds`

    Raises:
      Diverged: A corner diverged and `on_diverge` is 'raise', or the
        fallback branches have no current limit.
      ValueError: Invalid `on_diverge`.
    """
    if on_diverge not in ('fallback', 'raise'):
        raise ValueError(
            "on_diverge must be 'fallback' or 'raise', but is: {0!r}".
            format(on_diverge))
    n = network.node_count
    corners = capability.corners(network)
    l_max = np.zeros(n)
    diverged = []
    if corners:
        p = np.column_stack([c[1] for c in corners])
        q = np.column_stack([c[2] for c in corners])
        result = solve_distflow_batch(matrices, p, q)
        for k, (label, p_k, q_k) in enumerate(corners):
            if result.converged[k]:
                _LOGGER.debug("Corner %s converged in %d iterations", label,
                              result.iterations[k])
                l_max = np.maximum(l_max, result.l[:, k])
                continue
            if on_diverge == 'raise':
                raise Diverged(
                    "Power flow at capability corner diverged",
                    iterations=int(result.iterations[k]), corner=label)
            injecting = (p_k != 0) | (q_k != 0)
            upstream = (matrices.C @ injecting.astype(float)) > 0
            fallback = np.where(upstream, network.l_max, 0.0)
            if not np.all(np.isfinite(fallback)):
                raise Diverged(
                    "Power flow at capability corner diverged and the "
                    "branches feeding it have no current limit",
                    iterations=int(result.iterations[k]), corner=label)
            _LOGGER.warning(
                "Power flow at capability corner %s diverged; using branch "
                "current limits on %d branches", label, int(upstream.sum()))
            l_max = np.maximum(l_max, fallback)
            diverged.append(label)
    _LOGGER.info("Current bounds from %d capability corners, max l = %.6g",
                 len(corners), float(l_max.max()) if n else 0.0)
    return CurrentBounds(np.zeros(n), l_max, [c[0] for c in corners],
                         diverged)


def voltage_sweep(network, matrices, node, p_values, q_values=None):
    """
    Compare LinDist and DistFlow voltages at one node while its injection is
    swept and all other injections are zero.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      matrices (:class:`~hosting_capacity.SensitivityMatrices`): Complete
        matrices of the feeder.

      node: External id of the swept node.

      p_values (array-like): Real injections of the node, in pu.

      q_values (array-like): Reactive injections, same length as `p_values`.
        Default: zero.

    Returns:
      :class:`pandas.DataFrame`: Columns ``p``, ``q``, ``V_lindist``,
      ``V_distflow`` (squared pu, NaN where the power flow diverged),
      ``gap`` (``V_lindist - V_distflow``) and ``converged``.

    Raises:
      KeyError: The node is not a non-substation node of the network.
      DimensionMismatch: `q_values` does not match `p_values`.
    """
    pos = network.index[node]
    p_values = np.asarray(p_values, dtype=float)
    q_values = np.zeros_like(p_values) if q_values is None else \
        _vector(q_values, p_values.size, 'q_values')
    n = network.node_count
    p = np.zeros((n, p_values.size))
    q = np.zeros((n, p_values.size))
    p[pos] = p_values
    q[pos] = q_values
    result = solve_distflow_batch(matrices, p, q)
    v_lindist = (matrices.v0 + matrices.M_p @ p + matrices.M_q @ q)[pos]
    v_distflow = np.where(result.converged, result.V[pos], math.nan)
    return pd.DataFrame({
        'p': p_values,
        'q': q_values,
        'V_lindist': v_lindist,
        'V_distflow': v_distflow,
        'gap': v_lindist - v_distflow,
        'converged': result.converged,
    })
