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
Capability of dispatchable resources: the injection envelope of each node and
the coupling between its real and reactive injection.

Three capability cases couple q to p:

* :class:`ConstantPF` - ``q = gamma * p`` with ``gamma = sqrt(1 - pf**2) / pf``
* :class:`Box` - ``q_min <= q <= q_max``
* :class:`Quadratic` - ``p**2 + q**2 <= s_max**2``
"""

import math
from collections import namedtuple

import numpy as np
from immutable_views import DictView, ListView
from nocasedict import NocaseDict

from ._exceptions import CapabilityError

__all__ = ['ConstantPF', 'Box', 'Quadratic', 'NodeCapability',
           'CapabilitySpec', 'CompiledCapability', 'CapabilityCheck',
           'capability_constraint', 'make_case', 'CASE_TAGS', 'KIND_NONE',
           'KIND_CONSTANT_PF', 'KIND_BOX', 'KIND_QUADRATIC']

#: Kind codes used in :attr:`CompiledCapability.kind`.
KIND_NONE = 0
KIND_CONSTANT_PF = 1
KIND_BOX = 2
KIND_QUADRATIC = 3


class ConstantPF(object):
    """
    Constant power factor: ``q = gamma * p``.
    """

    __slots__ = ['_pf']

    tag = 'constant-pf'
    kind = KIND_CONSTANT_PF

    def __init__(self, pf=1.0):
        """
        Parameters:

          pf (float): Power factor in (0, 1]. 1 is unity power factor.

        Raises:
          CapabilityError: The power factor is out of range.
        """
        pf = float(pf)
        if not 0 < pf <= 1:
            raise CapabilityError(
                "Power factor must be in (0, 1], but is: {0}".format(pf))
        self._pf = pf

    @property
    def pf(self):
        """float: The power factor."""
        return self._pf

    @property
    def gamma(self):
        """float: Ratio q / p, ``sqrt((1 - pf**2) / pf**2)``."""
        return math.sqrt((1.0 - self._pf ** 2) / self._pf ** 2)

    def margin(self, p, q):
        """
        Signed distance of ``(p, q)`` from the line ``q = gamma * p``: zero on
        the line, negative off it.
        """
        gamma = self.gamma
        return -np.abs(q - gamma * p) / math.sqrt(1.0 + gamma ** 2)

    def __repr__(self):
        return "{0.__class__.__name__}(pf={0.pf!r})".format(self)

    def __eq__(self, other):
        if not isinstance(other, ConstantPF):
            return NotImplemented
        return self._pf == other.pf

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash((self.tag, self._pf))


class Box(object):
    """
    Box: ``q_min <= q <= q_max``, independent of p.
    """

    __slots__ = ['_q_min', '_q_max']

    tag = 'box'
    kind = KIND_BOX

    def __init__(self, q_min, q_max):
        """
        Parameters:

          q_min (float): Lower reactive injection bound, in pu.

          q_max (float): Upper reactive injection bound, in pu.

        Raises:
          CapabilityError: ``q_min > q_max`` or a bound is not finite.
        """
        q_min = float(q_min)
        q_max = float(q_max)
        if not (math.isfinite(q_min) and math.isfinite(q_max)) or \
                q_min > q_max:
            raise CapabilityError(
                "Box case needs finite q_min <= q_max, but has: [{0}, {1}]".
                format(q_min, q_max))
        self._q_min = q_min
        self._q_max = q_max

    @property
    def q_min(self):
        """float: Lower reactive injection bound, in pu."""
        return self._q_min

    @property
    def q_max(self):
        """float: Upper reactive injection bound, in pu."""
        return self._q_max

    def margin(self, p, q):
        # pylint: disable=unused-argument
        """Distance of q to the nearer box edge, negative outside."""
        return np.minimum(q - self._q_min, self._q_max - q)

    def __repr__(self):
        return "{0.__class__.__name__}(q_min={0.q_min!r}, " \
            "q_max={0.q_max!r})".format(self)

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return (self._q_min, self._q_max) == (other.q_min, other.q_max)

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash((self.tag, self._q_min, self._q_max))


class Quadratic(object):
    """
    Quadratic apparent power limit: ``p**2 + q**2 <= s_max**2``.
    """

    __slots__ = ['_s_max']

    tag = 'quadratic'
    kind = KIND_QUADRATIC

    def __init__(self, s_max):
        """
        Parameters:

          s_max (float): Apparent power limit (magnitude), in pu. Must be
            positive.

        Raises:
          CapabilityError: The limit is not positive.
        """
        s_max = float(s_max)
        if not (math.isfinite(s_max) and s_max > 0):
            raise CapabilityError(
                "Quadratic case needs s_max > 0, but has: {0}".format(s_max))
        self._s_max = s_max

    @property
    def s_max(self):
        """float: Apparent power limit, in pu."""
        return self._s_max

    def margin(self, p, q):
        """``s_max - |p + jq|``: zero on the circle, negative outside."""
        return self._s_max - np.hypot(p, q)

    def __repr__(self):
        return "{0.__class__.__name__}(s_max={0.s_max!r})".format(self)

    def __eq__(self, other):
        if not isinstance(other, Quadratic):
            return NotImplemented
        return self._s_max == other.s_max

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash((self.tag, self._s_max))


def _unity_pf(params):  # pylint: disable=unused-argument
    return ConstantPF(1.0)


def _constant_pf(params):
    return ConstantPF(params['pf'])


def _box(params):
    return Box(params['q_min'], params['q_max'])


def _quadratic(params):
    return Quadratic(params['s_max'])


#: Capability case tags, looked up case-insensitively, with the factory that
#: creates the case object from a parameter dict.
CASE_TAGS = NocaseDict([
    ('unity-pf', _unity_pf),
    ('constant-pf', _constant_pf),
    ('box', _box),
    ('quadratic', _quadratic),
])


def make_case(tag, **params):
    """
    Create a capability case object from its tag and parameters.

    Parameters:

      tag (:term:`string`): Case tag from :data:`CASE_TAGS`
        (case-insensitive).

      **params: Case parameters: ``pf`` for 'constant-pf'; ``q_min``,
        ``q_max`` for 'box'; ``s_max`` for 'quadratic'. Other parameters are
        ignored.

    Raises:
      CapabilityError: Unknown tag, missing or invalid parameter.
    """
    try:
        factory = CASE_TAGS[tag]
    except KeyError:
        raise CapabilityError(
            "Unknown capability case {0!r}; valid cases: {1}".
            format(tag, ", ".join(CASE_TAGS.keys())))
    try:
        return factory(params)
    except KeyError as exc:
        raise CapabilityError(
            "Capability case {0!r} requires parameter {1}".format(tag, exc))


CapabilityCheck = namedtuple('CapabilityCheck', ['satisfied', 'margin'])


def capability_constraint(case, p, q, tol=1e-9):
    """
    Check an operating point against a capability case.

    Parameters:

      case: :class:`ConstantPF`, :class:`Box` or :class:`Quadratic`.

      p (float): Real injection, in pu.

      q (float): Reactive injection, in pu.

      tol (float): Tolerance on the margin for `satisfied`.

    Returns:
      :class:`CapabilityCheck`: Named tuple with `satisfied` (bool) and
      `margin` (float), the signed distance to the constraint boundary in pu
      (0 on the boundary, negative outside).
    """
    margin = float(case.margin(float(p), float(q)))
    return CapabilityCheck(margin >= -tol, margin)


class NodeCapability(object):
    """
    The capability of the dispatchable resources at one node.

    The injection bounds are net injections at the node (generation
    positive). The demand and solar forecasts are used only to express the
    operating region of the flexible resource, as ``p - solar + demand``.
    """

    __slots__ = ['_node', '_case', '_p_min', '_p_max', '_demand', '_solar',
                 '_params']

    def __init__(self, node, case, p_min, p_max, demand=0.0, solar=0.0,
                 params=None):
        """
        Parameters:

          node: External id of the node.

          case: :class:`ConstantPF`, :class:`Box` or :class:`Quadratic`.

          p_min (float): Lower net injection bound, in pu.

          p_max (float): Upper net injection bound, in pu.

          demand (float): Demand forecast, in pu.

          solar (float): Solar forecast, in pu.

          params (dict): Parameters of all case alternatives known for this
            node (``pf``, ``q_min``, ``q_max``, ``s_max``), used by
            :meth:`CapabilitySpec.with_case`. Default: the parameters of
            `case`.

        Raises:
          CapabilityError: ``p_min > p_max`` or a value is not finite.
        """
        if not isinstance(case, (ConstantPF, Box, Quadratic)):
            raise CapabilityError(
                "Capability case of node {0!r} has invalid type: {1}".
                format(node, type(case)))
        self._node = node
        self._case = case
        self._p_min = float(p_min)
        self._p_max = float(p_max)
        self._demand = float(demand)
        self._solar = float(solar)
        values = (self._p_min, self._p_max, self._demand, self._solar)
        if not all(math.isfinite(v) for v in values):
            raise CapabilityError(
                "Capability of node {0!r} has non-finite values: {1!r}".
                format(node, values))
        if self._p_min > self._p_max:
            raise CapabilityError(
                "Capability of node {0!r} needs p_min <= p_max, but has: "
                "[{1}, {2}]".format(node, self._p_min, self._p_max))
        if params is None:
            params = _case_params(case)
        self._params = dict(params)

    @property
    def node(self):
        """External id of the node."""
        return self._node

    @property
    def case(self):
        """The capability case object."""
        return self._case

    @property
    def p_min(self):
        """float: Lower net injection bound, in pu."""
        return self._p_min

    @property
    def p_max(self):
        """float: Upper net injection bound, in pu."""
        return self._p_max

    @property
    def demand(self):
        """float: Demand forecast, in pu."""
        return self._demand

    @property
    def solar(self):
        """float: Solar forecast, in pu."""
        return self._solar

    @property
    def params(self):
        """:class:`~immutable_views.DictView`: Known case parameters."""
        return DictView(self._params)

    def with_case(self, case):
        """Return a copy of this record with a different case object."""
        params = dict(self._params)
        params.update(_case_params(case))
        return NodeCapability(self._node, case, self._p_min, self._p_max,
                              self._demand, self._solar, params)

    def __repr__(self):
        return "{0.__class__.__name__}({0.node!r}, {0.case!r}, " \
            "p_min={0.p_min!r}, p_max={0.p_max!r}, demand={0.demand!r}, " \
            "solar={0.solar!r})".format(self)

    def __eq__(self, other):
        if not isinstance(other, NodeCapability):
            return NotImplemented
        return (self._node, self._case, self._p_min, self._p_max,
                self._demand, self._solar, self._params) == \
            (other.node, other.case, other.p_min, other.p_max, other.demand,
             other.solar, dict(other.params))

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None


def _case_params(case):
    if isinstance(case, ConstantPF):
        return dict(pf=case.pf)
    if isinstance(case, Box):
        return dict(q_min=case.q_min, q_max=case.q_max)
    return dict(s_max=case.s_max)


class CapabilitySpec(object):
    """
    The capability of all dispatchable nodes of a feeder.

    Nodes without a record are not dispatchable: their injections are fixed
    at zero.
    """

    __slots__ = ['_records']

    def __init__(self, records):
        """
        Parameters:

          records (iterable of :class:`NodeCapability`): One record per
            dispatchable node.

        Raises:
          CapabilityError: Two records for the same node.
        """
        self._records = {}
        for record in records:
            if record.node in self._records:
                raise CapabilityError(
                    "Duplicate capability record for node {0!r}".
                    format(record.node))
            self._records[record.node] = record

    @property
    def records(self):
        """
        :class:`~immutable_views.DictView`: The records by external node id,
        in the order they were given.
        """
        return DictView(self._records)

    @property
    def case_tags(self):
        """list: The distinct case tags in use, sorted."""
        return sorted(set(r.case.tag for r in self._records.values()))

    def __len__(self):
        return len(self._records)

    def __repr__(self):
        return "{0.__class__.__name__}({1!r})".format(
            self, list(self._records.values()))

    def __eq__(self, other):
        if not isinstance(other, CapabilitySpec):
            return NotImplemented
        return list(self._records.items()) == list(other.records.items())

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def with_case(self, tag, pf=None):
        """
        Return a copy of this capability with the case of every record
        replaced by the case `tag`, built from the parameters each record
        knows.

        Parameters:

          tag (:term:`string`): Case tag from :data:`CASE_TAGS`.

          pf (float): Power factor overriding the records' ``pf`` parameter
            for the 'constant-pf' case.

        Raises:
          CapabilityError: A record lacks a parameter of the case.
        """
        records = []
        for record in self._records.values():
            params = dict(record.params)
            if pf is not None:
                params['pf'] = pf
            try:
                case = make_case(tag, **params)
            except CapabilityError as exc:
                raise CapabilityError(
                    "Node {0!r}: {1}".format(record.node, exc))
            records.append(record.with_case(case))
        return CapabilitySpec(records)

    def compile(self, network):
        """
        Return the capability as vectors in the internal node order of
        `network`.

        Raises:
          CapabilityError: A record references a node that is not a
            non-substation node of the network.

        Returns:
          :class:`CompiledCapability`
        """
        return CompiledCapability(self, network)

    def corners(self, network):
        """
        Return the capability corner points at which the squared branch
        currents are evaluated for their worst-case bound.

        The corners follow eight directions in the (p, q) plane at 45 degree
        steps. In direction ``(cos t, sin t)`` every dispatchable node takes:

        * constant PF: p at the bound selected by the sign of ``cos t`` (or
          zero clipped into the bounds), ``q = gamma * p``
        * box: p as above, q at the box edge selected by the sign of
          ``sin t`` (or zero clipped into the box)
        * quadratic: ``p = clip(s_max * cos t, p_min, p_max)`` and
          ``q = sign(sin t) * sqrt(s_max**2 - p**2)``

        All-zero and duplicate corners are dropped.

        Returns:
          list of tuple(label, p, q): Corner label and the injection vectors
          in internal order.
        """
        cap = self.compile(network)
        corners = []
        for step in range(8):
            angle = step * 45
            cos_t = round(math.cos(math.radians(angle)), 12)
            sin_t = round(math.sin(math.radians(angle)), 12)
            p = np.zeros(network.node_count)
            q = np.zeros(network.node_count)
            for pos in np.flatnonzero(cap.dispatchable):
                p_min, p_max = cap.p_min[pos], cap.p_max[pos]
                kind = cap.kind[pos]
                if kind == KIND_QUADRATIC:
                    s_max = cap.s_max[pos]
                    p[pos] = np.clip(s_max * cos_t, p_min, p_max)
                    q[pos] = np.sign(sin_t) * \
                        math.sqrt(max(s_max ** 2 - p[pos] ** 2, 0.0))
                    continue
                if cos_t > 0:
                    p[pos] = p_max
                elif cos_t < 0:
                    p[pos] = p_min
                else:
                    p[pos] = np.clip(0.0, p_min, p_max)
                if kind == KIND_CONSTANT_PF:
                    q[pos] = cap.gamma[pos] * p[pos]
                elif sin_t > 0:
                    q[pos] = cap.q_max[pos]
                elif sin_t < 0:
                    q[pos] = cap.q_min[pos]
                else:
                    q[pos] = np.clip(0.0, cap.q_min[pos], cap.q_max[pos])
            if not (np.any(p) or np.any(q)):
                continue
            if any(np.array_equal(p, c[1]) and np.array_equal(q, c[2])
                   for c in corners):
                continue
            corners.append(("theta={0}".format(angle), p, q))
        return corners


class CompiledCapability(object):
    # pylint: disable=too-many-instance-attributes
    """
    A :class:`CapabilitySpec` expressed as vectors in the internal node order
    of a network. Entries of non-dispatchable nodes are zero (``kind`` is
    :data:`KIND_NONE`).
    """

    __slots__ = ['_cases', 'dispatchable', 'kind', 'p_min', 'p_max',
                 'gamma', 'q_min', 'q_max', 's_max', 'demand', 'solar']

    def __init__(self, capability, network):
        n = network.node_count
        index = network.index
        self._cases = [None] * n
        self.kind = np.full(n, KIND_NONE, dtype=int)
        arrays = dict((name, np.zeros(n)) for name in (
            'p_min', 'p_max', 'gamma', 'q_min', 'q_max', 's_max', 'demand',
            'solar'))
        for node, record in capability.records.items():
            if node not in index:
                raise CapabilityError(
                    "Capability record for node {0!r}, which is not a "
                    "non-substation node of the feeder".format(node))
            pos = index[node]
            case = record.case
            self._cases[pos] = case
            self.kind[pos] = case.kind
            arrays['p_min'][pos] = record.p_min
            arrays['p_max'][pos] = record.p_max
            arrays['demand'][pos] = record.demand
            arrays['solar'][pos] = record.solar
            if case.kind == KIND_CONSTANT_PF:
                arrays['gamma'][pos] = case.gamma
            elif case.kind == KIND_BOX:
                arrays['q_min'][pos] = case.q_min
                arrays['q_max'][pos] = case.q_max
            else:
                arrays['s_max'][pos] = case.s_max
        for name, array in arrays.items():
            array.flags.writeable = False
            setattr(self, name, array)
        self.kind.flags.writeable = False
        self.dispatchable = self.kind != KIND_NONE
        self.dispatchable.flags.writeable = False

    @property
    def cases(self):
        """
        :class:`~immutable_views.ListView`: Case object per internal position,
        `None` for non-dispatchable nodes.
        """
        return ListView(self._cases)

    def __repr__(self):
        return "{0.__class__.__name__}(dispatchable={1})".format(
            self, int(np.sum(self.dispatchable)))
