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
Incidence and voltage sensitivity matrices of a radial feeder.

With squared voltages ``V``, injections ``p, q`` and squared branch currents
``l`` (one entry per non-substation node, in the internal order of
:class:`~hosting_capacity.FeederNetwork`), the DistFlow equations of a radial
feeder can be written as::

    P = C p - D_R l
    Q = C q - D_X l
    V = v0 + M_p p + M_q q - H l

The matrices in this module are built once per network and are read-only.
"""

import logging

import numpy as np
import scipy.linalg

from ._exceptions import SingularSystem

__all__ = ['SensitivityMatrices', 'build_incidence', 'build_sensitivities',
           'build_matrices', 'matrix_diagnostics']

_LOGGER = logging.getLogger(__name__)

_FIELDS = ('B', 'A', 'C', 'R', 'X', 'Z2', 'D_R', 'D_X', 'M_p', 'M_q', 'H')


def _readonly(array):
    if array is not None:
        array.flags.writeable = False
    return array


class SensitivityMatrices(object):
    # pylint: disable=invalid-name,too-many-instance-attributes
    """
    The constant matrices of a radial feeder.

    All arrays are read-only numpy arrays, so an object of this class can be
    shared between threads. Objects returned by :func:`build_incidence` have
    only :attr:`B` and :attr:`A` set; the other matrices are `None` until
    :func:`build_sensitivities` completes them.
    """

    __slots__ = ['_v0'] + ['_' + name for name in _FIELDS]

    def __init__(self, v0, B, A, C=None, R=None, X=None, Z2=None, D_R=None,
                 D_X=None, M_p=None, M_q=None, H=None):
        """
        Parameters:

          v0 (float): Squared substation voltage, in pu.

          B (numpy.ndarray): (n+1) x n node-branch incidence matrix.

          A (numpy.ndarray): n x n matrix ``B[1:, :] - I``.

          C, R, X, Z2, D_R, D_X, M_p, M_q, H (numpy.ndarray): n x n matrices,
            see the module description.
        """
        self._v0 = float(v0)
        values = dict(B=B, A=A, C=C, R=R, X=X, Z2=Z2, D_R=D_R, D_X=D_X,
                      M_p=M_p, M_q=M_q, H=H)
        for name in _FIELDS:
            setattr(self, '_' + name, _readonly(values[name]))

    def __repr__(self):
        return "{0.__class__.__name__}(n={0.n!r}, v0={0.v0!r}, " \
            "complete={0.complete!r})".format(self)

    @property
    def n(self):
        """int: Number of non-substation nodes."""
        return self._A.shape[0]

    @property
    def complete(self):
        """bool: Whether all sensitivity matrices are populated."""
        return self._H is not None

    @property
    def v0(self):
        """float: Squared substation voltage, in pu."""
        return self._v0

    @property
    def B(self):
        """numpy.ndarray: Node-branch incidence matrix over {0, 1}."""
        return self._B

    @property
    def A(self):
        """numpy.ndarray: ``A[i, k] = 1`` iff node i is the parent of node k."""
        return self._A

    @property
    def C(self):
        """
        numpy.ndarray: ``(I - A)^-1``. ``C[i, k] = 1`` iff node i lies on the
        path from the substation to node k (node k included).
        """
        return self._C

    @property
    def R(self):
        """numpy.ndarray: Diagonal branch resistance matrix."""
        return self._R

    @property
    def X(self):
        """numpy.ndarray: Diagonal branch reactance matrix."""
        return self._X

    @property
    def Z2(self):
        """numpy.ndarray: Diagonal squared branch impedance matrix."""
        return self._Z2

    @property
    def D_R(self):
        """numpy.ndarray: ``C A R``, real loss propagation."""
        return self._D_R

    @property
    def D_X(self):
        """numpy.ndarray: ``C A X``, reactive loss propagation."""
        return self._D_X

    @property
    def M_p(self):
        """numpy.ndarray: ``2 C^T R C``, voltage sensitivity to p."""
        return self._M_p

    @property
    def M_q(self):
        """numpy.ndarray: ``2 C^T X C``, voltage sensitivity to q."""
        return self._M_q

    @property
    def H(self):
        """
        numpy.ndarray: ``C^T (2 (R D_R + X D_X) + Z2)``, voltage sensitivity
        to the squared branch currents.
        """
        return self._H


def build_incidence(network):
    """
    Build the incidence matrix ``B`` and the matrix ``A`` of a feeder.

    Branch k of the internal order connects node k to its parent. Because
    parents precede children in that order, ``I - A`` is upper triangular
    with unit diagonal.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

    Returns:
      :class:`SensitivityMatrices`: With only ``B`` and ``A`` populated.
    """
    n = network.node_count
    B = np.zeros((n + 1, n))  # pylint: disable=invalid-name
    branches = np.arange(n)
    B[branches + 1, branches] = 1.0
    B[network.parents + 1, branches] = 1.0
    A = B[1:, :] - np.eye(n)  # pylint: disable=invalid-name
    return SensitivityMatrices(network.v0, B, A)


def build_sensitivities(network, incidence):
    # pylint: disable=invalid-name
    """
    Complete the sensitivity matrices of a feeder.

    ``C`` is obtained by a triangular solve of ``(I - A) C = I`` and is
    materialized; all other products are formed from it.

    Parameters:

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      incidence (:class:`SensitivityMatrices`): Result of
        :func:`build_incidence` for the same feeder.

    Returns:
      :class:`SensitivityMatrices`: With all matrices populated.

    Raises:
      SingularSystem: ``I - A`` has a zero pivot.
    """
    n = network.node_count
    A = incidence.A
    I_minus_A = np.eye(n) - A
    if np.any(np.diag(I_minus_A) == 0) or \
            np.any(np.tril(I_minus_A, -1) != 0):
        raise SingularSystem(
            "I - A is not unit upper triangular; the node order is not "
            "topological")
    try:
        C = scipy.linalg.solve_triangular(I_minus_A, np.eye(n), lower=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystem(
            "Triangular solve of I - A failed: {0}".format(exc))

    R = np.diag(network.r)
    X = np.diag(network.x)
    Z2 = np.diag(network.z2)
    CA = C @ A
    D_R = CA * network.r  # scales column k by r_k, i.e. C A R
    D_X = CA * network.x
    M_p = 2.0 * C.T @ R @ C
    M_q = 2.0 * C.T @ X @ C
    H = C.T @ (2.0 * (R @ D_R + X @ D_X) + Z2)
    # Symmetric by construction; remove rounding asymmetry.
    M_p = 0.5 * (M_p + M_p.T)
    M_q = 0.5 * (M_q + M_q.T)

    _LOGGER.debug("Built sensitivity matrices for %d nodes", n)
    return SensitivityMatrices(
        incidence.v0, incidence.B.copy(), A.copy(), C=C, R=R, X=X, Z2=Z2,
        D_R=D_R, D_X=D_X, M_p=M_p, M_q=M_q, H=H)


def build_matrices(network):
    """
    Build all matrices of a feeder. Shorthand for :func:`build_incidence`
    followed by :func:`build_sensitivities`.

    Returns:
      :class:`SensitivityMatrices`: With all matrices populated.
    """
    return build_sensitivities(network, build_incidence(network))


def matrix_diagnostics(matrices):
    """
    Return numerical diagnostics of complete sensitivity matrices, as a dict
    with these items:

    * ``n`` - number of non-substation nodes
    * ``det_I_minus_A`` - determinant of ``I - A`` (product of the diagonal
      of the triangular matrix)
    * ``inverse_residual`` - ``max |C (I - A) - I|``
    * ``M_p_symmetric``, ``M_q_symmetric`` - exact symmetry
    * ``M_p_min_eigenvalue``, ``M_q_min_eigenvalue``
    * ``H_min`` - smallest entry of ``H``
    * ``M_q_min_column_sum`` - smallest column sum of ``M_q``
    * ``C_is_path_indicator`` - all entries of ``C`` are 0 or 1
    """
    n = matrices.n
    I_minus_A = np.eye(n) - matrices.A  # pylint: disable=invalid-name
    return dict(
        n=n,
        det_I_minus_A=float(np.prod(np.diag(I_minus_A))),
        inverse_residual=float(
            np.max(np.abs(matrices.C @ I_minus_A - np.eye(n)))),
        M_p_symmetric=bool(np.array_equal(matrices.M_p, matrices.M_p.T)),
        M_q_symmetric=bool(np.array_equal(matrices.M_q, matrices.M_q.T)),
        M_p_min_eigenvalue=float(
            scipy.linalg.eigvalsh(matrices.M_p)[0]),
        M_q_min_eigenvalue=float(
            scipy.linalg.eigvalsh(matrices.M_q)[0]),
        H_min=float(np.min(matrices.H)),
        M_q_min_column_sum=float(np.min(matrices.M_q.sum(axis=0))),
        C_is_path_indicator=bool(
            np.all((matrices.C == 0.0) | (matrices.C == 1.0))),
    )
