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
A small dense log-barrier interior-point method.

It minimizes::

    c^T z - sum_j log(s_j * z[i_j])

subject to linear constraints ``G z <= h`` and separable quadratic
constraints ``sum_{i in S_k} z_i**2 + a_k^T z <= b_k``. A Phase I problem
finds a strictly feasible start. Newton steps use a backtracking line search
that first restores strict feasibility and then enforces the Armijo
condition.
"""

import logging

import numpy as np
import scipy.linalg
import scipy.optimize

__all__ = []

_LOGGER = logging.getLogger(__name__)

#: Target bound on the duality gap ``m / t``.
GAP_TOLERANCE = 1e-8

#: Bound on the KKT residual of an optimal solution.
KKT_TOLERANCE = 1e-6

STATUS_OPTIMAL = 'Optimal'
STATUS_INFEASIBLE = 'Infeasible'
STATUS_MAXITER = 'MaxIter'

_ALPHA = 0.01
_BETA = 0.5
_MU = 10.0
_T0 = 1.0
_NEWTON_TOLERANCE = 1e-14
# Below this squared Newton decrement full (feasible) steps are taken.
_PURE_NEWTON = 0.0625
_MAX_NEWTON = 100
_MAX_OUTER = 60
# Outer iterations allowed past the duality gap target to meet the KKT
# tolerance.
_MAX_REFINE = 4


class BarrierProblem(object):
    # pylint: disable=too-many-instance-attributes
    """
    A convex program in the form described in the module docstring.

    Parameters:

      c (numpy.ndarray): Linear objective, shape (n,).

      log_index (numpy.ndarray): Variable index ``i_j`` of each log term.

      log_sign (numpy.ndarray): Sign ``s_j`` (+1 or -1) of each log term.

      G (numpy.ndarray): Linear constraint matrix, shape (m_lin, n).

      h (numpy.ndarray): Linear constraint right-hand side, shape (m_lin,).

      quad_sets (list of numpy.ndarray): Squared variable indices of each
        quadratic constraint.

      quad_lin (numpy.ndarray): Linear part ``a_k`` of each quadratic
        constraint, shape (m_quad, n).

      quad_rhs (numpy.ndarray): Right-hand side ``b_k``, shape (m_quad,).
    """

    def __init__(self, c, log_index, log_sign, G, h, quad_sets=(),
                 quad_lin=None, quad_rhs=None):
        # pylint: disable=invalid-name,too-many-arguments
        self.c = np.asarray(c, dtype=float)
        n = self.c.size
        self.n = n
        self.log_index = np.asarray(log_index, dtype=int)
        self.log_sign = np.asarray(log_sign, dtype=float)
        self.G = np.asarray(G, dtype=float).reshape(-1, n)
        self.h = np.asarray(h, dtype=float).reshape(-1)
        self.quad_sets = [np.asarray(s, dtype=int) for s in quad_sets]
        m_quad = len(self.quad_sets)
        self.quad_lin = np.zeros((m_quad, n)) if quad_lin is None else \
            np.asarray(quad_lin, dtype=float).reshape(m_quad, n)
        self.quad_rhs = np.zeros(m_quad) if quad_rhs is None else \
            np.asarray(quad_rhs, dtype=float).reshape(m_quad)
        self.quad_mask = np.zeros((m_quad, n))
        for k, indices in enumerate(self.quad_sets):
            self.quad_mask[k, indices] = 1.0

    @property
    def m(self):
        """int: Number of inequality constraints."""
        return self.G.shape[0] + len(self.quad_sets)

    def constraints(self, z):
        """Values of all inequality constraints ``g(z)`` (feasible: < 0)."""
        lin = self.G @ z - self.h
        quad = self.quad_mask @ (z ** 2) + self.quad_lin @ z - self.quad_rhs
        return np.concatenate([lin, quad])

    def jacobian(self, z):
        """Jacobian of the constraints, shape (m, n)."""
        quad = 2.0 * self.quad_mask * z + self.quad_lin
        return np.vstack([self.G, quad])

    def log_arguments(self, z):
        """Arguments ``s_j * z[i_j]`` of the log terms (feasible: > 0)."""
        return self.log_sign * z[self.log_index]

    def objective(self, z):
        """Objective value, ``inf`` outside the log domain."""
        args = self.log_arguments(z)
        if np.any(args <= 0):
            return np.inf
        return float(self.c @ z - np.sum(np.log(args)))

    def objective_gradient(self, z):
        """Gradient of the objective."""
        grad = self.c.copy()
        np.add.at(grad, self.log_index, -1.0 / z[self.log_index])
        return grad

    def strictly_feasible(self, z):
        """Whether z is in the interior of the constraints and log domain."""
        return bool(np.all(self.constraints(z) < 0) and
                    np.all(self.log_arguments(z) > 0))


class BarrierResult(object):
    # pylint: disable=too-few-public-methods,too-many-arguments
    """Result of :func:`minimize`."""

    __slots__ = ['x', 'status', 'iterations', 't', 'duals',
                 'kkt_residual', 'objective']

    def __init__(self, x, status, iterations, t, duals, kkt_residual,
                 objective):
        self.x = x
        self.status = status
        self.iterations = iterations
        self.t = t
        self.duals = duals
        self.kkt_residual = kkt_residual
        self.objective = objective

    def __repr__(self):
        return "{0.__class__.__name__}(status={0.status!r}, " \
            "iterations={0.iterations!r}, " \
            "kkt_residual={0.kkt_residual!r})".format(self)


def _barrier_value(problem, z, t):
    g = problem.constraints(z)
    args = problem.log_arguments(z)
    if np.any(g >= 0) or np.any(args <= 0):
        return np.inf
    return t * problem.objective(z) - float(np.sum(np.log(-g)))


def _newton_system(problem, z, t):
    """Gradient and Hessian of the barrier function at z."""
    g = problem.constraints(z)
    jac = problem.jacobian(z)
    inv = 1.0 / (-g)
    grad = t * problem.objective_gradient(z) + jac.T @ inv
    hess = (jac.T * inv ** 2) @ jac
    n_lin = problem.G.shape[0]
    # Curvature of the quadratic constraints: 2 I on their index sets.
    quad_weight = inv[n_lin:] @ problem.quad_mask
    hess[np.diag_indices_from(hess)] += 2.0 * quad_weight
    log_curv = np.zeros(problem.n)
    np.add.at(log_curv, problem.log_index,
              1.0 / z[problem.log_index] ** 2)
    hess[np.diag_indices_from(hess)] += t * log_curv
    return grad, hess


def _solve_newton(hess, grad):
    try:
        factor = scipy.linalg.cho_factor(hess)
        return -scipy.linalg.cho_solve(factor, grad)
    except (scipy.linalg.LinAlgError, ValueError):
        return -scipy.linalg.lstsq(hess, grad)[0]


def _center(problem, z, t, stop=None):
    """
    Minimize the barrier function for fixed t by Newton's method, starting
    from the strictly feasible z.

    Returns:
      tuple(z, newton_steps, stopped): `stopped` is True if `stop(z)` became
      true.
    """
    steps = 0
    value = _barrier_value(problem, z, t)
    for _ in range(_MAX_NEWTON):
        grad, hess = _newton_system(problem, z, t)
        delta = _solve_newton(hess, grad)
        decrement2 = float(-grad @ delta)
        if decrement2 / 2.0 <= _NEWTON_TOLERANCE:
            break
        step = 1.0
        while not problem.strictly_feasible(z + step * delta):
            step *= _BETA
            if step < 1e-20:
                return z, steps, False
        slope = float(grad @ delta)
        while decrement2 >= _PURE_NEWTON:
            candidate = _barrier_value(problem, z + step * delta, t)
            if candidate <= value + _ALPHA * step * slope or step < 1e-20:
                break
            step *= _BETA
        if step < 1e-20:
            break
        z = z + step * delta
        value = _barrier_value(problem, z, t)
        steps += 1
        if stop is not None and stop(z):
            return z, steps, True
    return z, steps, False


def _run(problem, z0, stop=None, converged=None):
    """
    Barrier outer loop from the strictly feasible z0.

    The loop ends with status 'Optimal' once the duality gap is below
    :data:`GAP_TOLERANCE` and `converged(z, t)`, if given, is true.

    Returns:
      tuple(z, status, steps, t, stopped)
    """
    t = _T0
    z = z0
    steps = 0
    m = max(problem.m, 1)
    refine = 0
    for outer in range(_MAX_OUTER):
        z, newton_steps, stopped = _center(problem, z, t, stop)
        steps += newton_steps
        if stopped:
            return z, STATUS_OPTIMAL, steps, t, True
        _LOGGER.debug("Barrier outer iteration %d: t=%.3g, %d Newton steps",
                      outer, t, newton_steps)
        if m / t < GAP_TOLERANCE:
            if converged is None or converged(z, t):
                return z, STATUS_OPTIMAL, steps, t, False
            refine += 1
            if refine > _MAX_REFINE:
                break
        t *= _MU
    return z, STATUS_MAXITER, steps, t, False


def find_feasible_start(problem, z0):
    """
    Phase I: find a point strictly inside the constraints and log domain.

    Solves ``min s`` subject to ``g(z) <= s`` and ``-s_j z[i_j] <= s``,
    stopping as soon as the current point is strictly feasible.

    Parameters:

      problem (:class:`BarrierProblem`): The program.

      z0 (numpy.ndarray): Any starting point.

    Returns:
      tuple(z, feasible, sigma): The best point, whether it is strictly
      feasible, and the final Phase I value (the smallest constraint
      violation found; negative iff feasible).
    """
    if problem.strictly_feasible(z0):
        return z0, True, float(np.max(np.concatenate(
            [problem.constraints(z0), -problem.log_arguments(z0)])))
    n = problem.n
    n_log = problem.log_index.size
    domain = np.zeros((n_log, n))
    domain[np.arange(n_log), problem.log_index] = -problem.log_sign
    G = np.vstack([problem.G, domain])  # pylint: disable=invalid-name
    h = np.concatenate([problem.h, np.zeros(n_log)])
    phase1 = BarrierProblem(
        c=np.concatenate([np.zeros(n), [1.0]]),
        log_index=[], log_sign=[],
        G=np.hstack([G, -np.ones((G.shape[0], 1))]),
        h=h,
        quad_sets=problem.quad_sets,
        quad_lin=np.hstack([problem.quad_lin,
                            -np.ones((len(problem.quad_sets), 1))]),
        quad_rhs=problem.quad_rhs)
    values = np.concatenate([G @ z0 - h,
                             problem.quad_mask @ z0 ** 2 +
                             problem.quad_lin @ z0 - problem.quad_rhs])
    sigma0 = float(np.max(values)) + 1.0
    start = np.concatenate([z0, [sigma0]])

    def stop(w):
        return problem.strictly_feasible(w[:n])

    w, status, steps, _, stopped = _run(phase1, start, stop)
    _LOGGER.debug("Phase I: status %s after %d Newton steps, sigma=%.3g",
                  status, steps, w[n])
    if stopped:
        return w[:n], True, float(w[n])
    return w[:n], problem.strictly_feasible(w[:n]), float(w[n])


def kkt_residual(problem, z, t):
    """
    KKT residual of the strictly feasible z and the duals that attain it.

    The residual is the largest of the stationarity error
    ``|grad f + J^T lambda|`` and the complementarity error
    ``|lambda_j g_j|``. The duals are the better of the barrier duals
    ``1 / (-t g)`` and the nonnegative least-squares fit of both errors
    together; the barrier duals are inaccurate once the slacks of the active
    constraints approach the rounding error of ``g``.

    Returns:
      tuple(residual, duals)
    """
    grad = problem.objective_gradient(z)
    g = problem.constraints(z)
    if g.size == 0:
        return (float(np.max(np.abs(grad))) if grad.size else 0.0), \
            np.zeros(0)
    jac = problem.jacobian(z)

    def residual(duals):
        stationarity = grad + jac.T @ duals
        return max(float(np.max(np.abs(stationarity))) if grad.size else 0.0,
                   float(np.max(np.abs(duals * g))))

    candidates = [1.0 / (-t * g)]
    try:
        fitted, _ = scipy.optimize.nnls(
            np.vstack([jac.T, np.diag(-g)]),
            np.concatenate([-grad, np.zeros(g.size)]))
        candidates.append(fitted)
    except (RuntimeError, ValueError) as exc:
        _LOGGER.debug("Dual fit failed: %s", exc)
    residuals = [residual(duals) for duals in candidates]
    best = int(np.argmin(residuals))
    return residuals[best], candidates[best]


def minimize(problem, z0):
    """
    Solve a :class:`BarrierProblem`.

    Parameters:

      problem (:class:`BarrierProblem`): The program.

      z0 (numpy.ndarray): Starting point; need not be feasible.

    Returns:
      :class:`BarrierResult`: With status 'Infeasible' (and the best Phase I
      point as `x`) if no strictly feasible point exists, and status
      'MaxIter' if the KKT residual stays above :data:`KKT_TOLERANCE`.
    """
    z, feasible, sigma = find_feasible_start(problem, np.asarray(z0, float))
    if not feasible:
        return BarrierResult(z, STATUS_INFEASIBLE, 0, 0.0, None, np.inf,
                             sigma)
    z, status, steps, t, _ = _run(
        problem, z,
        converged=lambda z, t: kkt_residual(problem, z, t)[0] <=
        KKT_TOLERANCE)
    kkt, duals = kkt_residual(problem, z, t)
    if status != STATUS_OPTIMAL:
        _LOGGER.warning("Barrier method stopped with status %s, KKT "
                        "residual %.3g", status, kkt)
    return BarrierResult(z, status, steps, t, duals, kkt,
                         problem.objective(z))
