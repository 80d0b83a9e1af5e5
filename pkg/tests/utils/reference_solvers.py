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
reference_solvers - Independent power flow solutions and random feeders,
used only to check the package.
"""

import math

import numpy as np

from .import_installed import import_installed
hosting_capacity = import_installed('hosting_capacity')  # pylint: disable=invalid-name
from hosting_capacity import Branch, FeederNetwork, NodeCapability, \
    CapabilitySpec, make_case, UPPER  # noqa: E402 pylint: disable=wrong-import-position

__all__ = ['twonode_closed_form', 'newton_distflow', 'random_network',
           'random_capability', 'one_sided_reactive_limit',
           'grid_region_program']


def twonode_closed_form(r, x, p, q=0.0, v0=1.0):
    """
    Squared voltage and squared current of a feeder with one branch, as the
    high-voltage root of ``V**2 - b V + |z|**2 (p**2 + q**2) = 0`` with
    ``b = v0 + 2 r p + 2 x q``.

    Returns:
      tuple(V, l), or (nan, nan) beyond the nose point.
    """
    b = v0 + 2.0 * r * p + 2.0 * x * q
    s2 = p ** 2 + q ** 2
    z2 = r ** 2 + x ** 2
    disc = b ** 2 - 4.0 * z2 * s2
    if disc < 0:
        return math.nan, math.nan
    V = (b + math.sqrt(disc)) / 2.0  # pylint: disable=invalid-name
    return V, s2 / V


def _branch_equations(network, p, q, unknowns):
    # pylint: disable=invalid-name
    """
    Residuals of the branch flow equations, written per branch from the
    parent array of the network.
    """
    n = network.node_count
    P, Q, V, l = np.split(unknowns, 4)
    r, x = network.r, network.x
    parents = network.parents
    res_p = P - p
    res_q = Q - q
    for k in range(n):
        parent = parents[k]
        if parent >= 0:
            res_p[parent] -= P[k] - r[k] * l[k]
            res_q[parent] -= Q[k] - x[k] * l[k]
    v_parent = np.array([network.v0 if parents[k] < 0 else V[parents[k]]
                         for k in range(n)])
    res_v = V - v_parent - 2.0 * r * P - 2.0 * x * Q + \
        (r ** 2 + x ** 2) * l
    res_l = l * V - P ** 2 - Q ** 2
    return np.concatenate([res_p, res_q, res_v, res_l])


def _branch_jacobian(network, unknowns):
    # pylint: disable=invalid-name
    """Jacobian of :func:`_branch_equations` with respect to the unknowns."""
    n = network.node_count
    P, Q, V, l = np.split(unknowns, 4)
    r, x = network.r, network.x
    ip, iq, iv, il = (np.arange(n) + k * n for k in range(4))
    jac = np.zeros((4 * n, 4 * n))
    for k in range(n):
        jac[ip[k], ip[k]] = 1.0
        jac[iq[k], iq[k]] = 1.0
        parent = network.parents[k]
        if parent >= 0:
            jac[ip[parent], ip[k]] = -1.0
            jac[ip[parent], il[k]] = r[k]
            jac[iq[parent], iq[k]] = -1.0
            jac[iq[parent], il[k]] = x[k]
            jac[iv[k], iv[parent]] = -1.0
        jac[iv[k], iv[k]] = 1.0
        jac[iv[k], ip[k]] = -2.0 * r[k]
        jac[iv[k], iq[k]] = -2.0 * x[k]
        jac[iv[k], il[k]] = r[k] ** 2 + x[k] ** 2
        jac[il[k], il[k]] = V[k]
        jac[il[k], iv[k]] = l[k]
        jac[il[k], ip[k]] = -2.0 * P[k]
        jac[il[k], iq[k]] = -2.0 * Q[k]
    return jac


def newton_distflow(network, p, q, tol=1e-12, max_iter=50):
    # pylint: disable=invalid-name
    """
    Solve the branch flow equations by Newton's method with the analytic
    Jacobian, started at the lossless solution.

    Returns:
      tuple(V, P, Q, l) in the internal node order of the network.

    Raises:
      AssertionError: Newton's method did not converge.
    """
    n = network.node_count
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    P0 = p.copy()
    Q0 = q.copy()
    # Downstream sums, children after parents.
    for k in reversed(range(n)):
        parent = network.parents[k]
        if parent >= 0:
            P0[parent] += P0[k]
            Q0[parent] += Q0[k]
    V0 = np.zeros(n)
    for k in range(n):
        parent = network.parents[k]
        v_parent = network.v0 if parent < 0 else V0[parent]
        V0[k] = v_parent + 2.0 * network.r[k] * P0[k] + \
            2.0 * network.x[k] * Q0[k]
    z = np.concatenate([P0, Q0, V0, np.zeros(n)])
    for _ in range(max_iter):
        residual = _branch_equations(network, p, q, z)
        if np.max(np.abs(residual)) < tol:
            break
        z = z - np.linalg.solve(_branch_jacobian(network, z), residual)
    else:
        raise AssertionError("Newton's method did not converge")
    P, Q, V, l = np.split(z, 4)
    return V, P, Q, l


def random_network(seed, n, r_range=(0.01, 0.03), x_range=(0.01, 0.03),
                   v_min=0.9, v_max=1.1, i_max=None, shuffle=True):
    # pylint: disable=too-many-arguments
    """
    Random radial feeder with n non-substation nodes, integer node ids and
    substation node 0.

    Each node picks a random earlier node as its parent. With `shuffle`, the
    node list and branch orientations are permuted, so that the input order
    differs from the breadth-first order.
    """
    rng = np.random.default_rng(seed)
    branches = []
    for node in range(1, n + 1):
        parent = int(rng.integers(0, node))
        r = float(rng.uniform(*r_range))
        x = float(rng.uniform(*x_range))
        ends = (parent, node)
        if shuffle and rng.random() < 0.5:
            ends = (node, parent)
        branches.append(Branch(ends[0], ends[1], r, x, i_max))
    others = list(range(1, n + 1))
    if shuffle:
        rng.shuffle(others)
        rng.shuffle(branches)
    return FeederNetwork([0] + others, branches, root=0, v_min=v_min,
                         v_max=v_max)


def random_capability(network, seed, tag, p_range=(-10.0, 10.0),
                      q_limit=0.5, s_max=10.0, pf=0.95, nodes=None):
    # pylint: disable=too-many-arguments
    """
    Capability with the case `tag` at the given nodes (default: all
    non-substation nodes) and injection bounds drawn around zero from
    `p_range`.
    """
    rng = np.random.default_rng(seed)
    nodes = list(network.node_ids) if nodes is None else nodes
    params = dict(pf=pf, q_min=-q_limit, q_max=q_limit, s_max=s_max)
    records = []
    for node in nodes:
        p_min = float(rng.uniform(p_range[0], p_range[0] / 2.0))
        p_max = float(rng.uniform(p_range[1] / 2.0, p_range[1]))
        records.append(NodeCapability(node, make_case(tag, **params), p_min,
                                      p_max, params=params))
    return CapabilitySpec(records)


def one_sided_reactive_limit(network, matrices, share=0.5):
    """
    Reactive injection limit below which the reactive injections of all
    nodes together move no voltage by more than `share` of the smallest
    distance between the squared substation voltage and a voltage bound.

    With real injections of one sign and reactive injections within this
    limit, only the voltage bound on the side of the real injections can
    bind in the LinDist model.
    """
    margin = min(network.v0 - np.max(network.v_min),
                 np.min(network.v_max) - network.v0)
    row_sums = np.abs(matrices.M_q).sum(axis=1)
    return share * margin / float(np.max(row_sums))


def grid_region_program(network, matrices, capability, direction, l_bound,
                        step=1e-4):
    # pylint: disable=too-many-arguments,too-many-locals
    """
    Optimum of a region program by grid search, for a feeder with one or two
    dispatchable nodes at constant power factor.

    The injection of the first dispatchable node runs over a grid with the
    given step, away from zero towards its capability bound. The injection of
    the second node is the one of largest magnitude that the voltage and
    injection bounds allow. The optimum is the grid point of largest
    ``sum log(|p|)``.

    Returns:
      numpy.ndarray: The injections, in node order.
    """
    cap = capability.compile(network)
    positions = np.flatnonzero(cap.dispatchable)
    assert 1 <= positions.size <= 2
    sign = 1.0 if direction == UPPER else -1.0
    coef = matrices.M_p[:, positions] + \
        matrices.M_q[:, positions] * cap.gamma[positions]
    const = matrices.v0 - matrices.H @ np.asarray(l_bound, dtype=float)
    bound = cap.p_max[positions] if sign > 0 else cap.p_min[positions]

    p1 = sign * np.arange(step, abs(bound[0]) + step / 2.0, step)
    with np.errstate(invalid='ignore', divide='ignore'):
        high = network.v_max[:, None] - const[:, None] - \
            coef[:, :1] * p1[None, :]
        low = network.v_min[:, None] - const[:, None] - \
            coef[:, :1] * p1[None, :]
        if positions.size == 1:
            p2 = np.zeros(p1.size)
            objective = np.log(sign * p1)
        else:
            # coef[:, 1] > 0: high rows bound p2 above, low rows below.
            p2_high = np.min(high / coef[:, 1:2], axis=0)
            p2_low = np.max(low / coef[:, 1:2], axis=0)
            if sign > 0:
                p2 = np.minimum(p2_high, bound[1])
                ok = p2 >= p2_low
            else:
                p2 = np.maximum(p2_low, bound[1])
                ok = p2 <= p2_high
            objective = np.where(ok & (sign * p2 > 0),
                                 np.log(sign * p1) + np.log(sign * p2),
                                 -np.inf)
        coef2 = coef[:, 1:2] if positions.size == 2 else 0.0
        voltage_ok = np.all((high - coef2 * p2[None, :] >= 0) &
                            (low - coef2 * p2[None, :] <= 0), axis=0)
    objective = np.where(voltage_ok, objective, -np.inf)
    best = int(np.argmax(objective))
    assert np.isfinite(objective[best])
    p = np.zeros(network.node_count)
    p[positions[0]] = p1[best]
    if positions.size == 2:
        p[positions[1]] = p2[best]
    return p
