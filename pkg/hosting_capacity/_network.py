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
The radial feeder network model.
"""

import logging
import math

import numpy as np
import networkx as nx
from immutable_views import DictView, ListView

from ._exceptions import NotRadial, NotRooted, InvalidNetwork
from ._units import PerUnitBase

__all__ = ['Branch', 'FeederNetwork']

_LOGGER = logging.getLogger(__name__)


def _frozen(array):
    """Return a float array that cannot be modified in place."""
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


class Branch(object):
    """
    A branch (line segment) of a radial feeder, in per-unit.

    Each branch of a radial feeder is identified with its downstream node.
    """

    __slots__ = ['_from_node', '_to_node', '_r', '_x', '_i_max']

    def __init__(self, from_node, to_node, r, x, i_max=None):
        """
        Parameters:

          from_node: External id of one end of the branch.

          to_node: External id of the other end of the branch.

          r (float): Series resistance, in pu.

          x (float): Series reactance, in pu.

          i_max (float): Current magnitude limit, in pu, or `None` for no
            limit.
        """
        self._from_node = from_node
        self._to_node = to_node
        self._r = float(r)
        self._x = float(x)
        self._i_max = None if i_max is None else float(i_max)

    @property
    def from_node(self):
        """External id of the upstream end (after orientation)."""
        return self._from_node

    @property
    def to_node(self):
        """External id of the downstream end (after orientation)."""
        return self._to_node

    @property
    def r(self):
        """float: Resistance, in pu."""
        return self._r

    @property
    def x(self):
        """float: Reactance, in pu."""
        return self._x

    @property
    def i_max(self):
        """float: Current magnitude limit, in pu, or `None`."""
        return self._i_max

    @property
    def l_max(self):
        """float: Squared current limit, in pu (infinity if unlimited)."""
        if self._i_max is None:
            return math.inf
        return self._i_max ** 2

    def reversed(self):
        """Return the same branch with its ends swapped."""
        return Branch(self._to_node, self._from_node, self._r, self._x,
                      self._i_max)

    def __repr__(self):
        return "{0.__class__.__name__}({0.from_node!r}, {0.to_node!r}, " \
            "r={0.r!r}, x={0.x!r}, i_max={0.i_max!r})".format(self)

    def __eq__(self, other):
        if not isinstance(other, Branch):
            return NotImplemented
        return (self._from_node, self._to_node, self._r, self._x,
                self._i_max) == (other.from_node, other.to_node, other.r,
                                 other.x, other.i_max)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __hash__(self):
        return hash((self._from_node, self._to_node, self._r, self._x,
                     self._i_max))


class FeederNetwork(object):
    # pylint: disable=too-many-instance-attributes
    """
    A radial distribution feeder in per-unit, rooted at the substation node.

    The nodes are re-indexed internally in breadth-first order from the
    substation, so that the parent of every node precedes it. All vectors of
    this class and of the computations based on it have one entry per
    non-substation node (equivalently, per branch), in that internal order.
    :attr:`node_ids` gives the external node id of each entry, and
    :attr:`permutation` maps each entry back to its position in the node list
    the network was created from.

    Voltage and current bounds are given as magnitudes and exposed both as
    magnitudes and as squared values.
    """

    __slots__ = ['_input_nodes', '_input_branches', '_root', '_order',
                 '_index', '_parents', '_branches', '_r', '_x', '_i_max',
                 '_v_source', '_v_min_mag', '_v_max_mag', '_base',
                 '_permutation']

    def __init__(self, nodes, branches, root=None, v_source=1.0, v_min=None,
                 v_max=None, base=None):
        """
        Parameters:

          nodes (iterable): External ids of all nodes, including the
            substation node. Ids must be hashable and unique.

          branches (iterable of :class:`Branch`): The branches. Their
            orientation does not matter; it is normalized to point away from
            the substation.

          root: External id of the substation node. Default: the first node.

          v_source (float): Substation voltage magnitude, in pu.

          v_min (float or mapping): Lower voltage magnitude bound in pu, either
            one value for all non-substation nodes or a mapping from node id to
            value. Missing entries are unbounded (0).

          v_max (float or mapping): Upper voltage magnitude bound in pu, like
            `v_min`. Missing entries are unbounded (infinity).

          base (:class:`PerUnitBase`): Base quantities. Default: 1 kV, 1 MVA.

        Raises:
          InvalidNetwork: A parameter violates its invariant.
          NotRooted: No branch is incident to the substation node.
          NotRadial: The graph has a cycle or a disconnected node.
        """
        self._input_nodes = tuple(nodes)
        self._input_branches = tuple(branches)
        if len(set(self._input_nodes)) != len(self._input_nodes):
            raise InvalidNetwork(
                "Node ids are not unique: {0!r}".format(self._input_nodes))
        if len(self._input_nodes) < 2:
            raise InvalidNetwork(
                "A feeder needs at least one node besides the substation")
        self._root = self._input_nodes[0] if root is None else root
        if self._root not in self._input_nodes:
            raise InvalidNetwork(
                "Substation node {0!r} is not a node of the feeder".
                format(self._root))
        self._base = PerUnitBase(1.0, 1.0) if base is None else base
        self._v_source = float(v_source)
        if not self._v_source > 0:
            raise InvalidNetwork(
                "Substation voltage must be positive, but is: {0}".
                format(self._v_source))

        graph = self._check_graph()

        self._order = [self._root] + \
            [child for _, child in nx.bfs_edges(graph, self._root)]
        self._index = dict(
            (node, pos - 1) for pos, node in enumerate(self._order) if pos)
        parents = []
        oriented = []
        for node in self._order[1:]:
            parent = graph.nodes[node]['parent']
            parents.append(self._index.get(parent, -1))
            branch = graph.edges[parent, node]['branch']
            if branch.from_node != parent:
                branch = branch.reversed()
            oriented.append(branch)
        self._parents = np.array(parents, dtype=int)
        self._parents.flags.writeable = False
        self._branches = oriented
        self._r = _frozen([b.r for b in oriented])
        self._x = _frozen([b.x for b in oriented])
        self._i_max = _frozen(
            [math.inf if b.i_max is None else b.i_max for b in oriented])

        non_root = [n for n in self._input_nodes if n != self._root]
        input_pos = dict((node, pos) for pos, node in enumerate(non_root))
        self._permutation = [input_pos[node] for node in self._order[1:]]

        self._v_min_mag = _frozen(self._bound_vector(v_min, 0.0, 'v_min'))
        self._v_max_mag = _frozen(
            self._bound_vector(v_max, math.inf, 'v_max'))
        for pos, node in enumerate(self._order[1:]):
            lo, hi = self._v_min_mag[pos], self._v_max_mag[pos]
            if not 0 <= lo < hi:
                raise InvalidNetwork(
                    "Voltage bounds of node {0!r} must satisfy "
                    "0 <= v_min < v_max, but are: [{1}, {2}]".
                    format(node, lo, hi))

        _LOGGER.debug("Feeder with %d nodes rooted at %r, breadth-first "
                      "order: %r", self.node_count, self._root, self._order)

    def _check_graph(self):
        """
        Validate the branch parameters and the radial structure, and return
        the networkx graph with parent annotations.
        """
        graph = nx.Graph()
        graph.add_nodes_from(self._input_nodes)
        for branch in self._input_branches:
            ends = (branch.from_node, branch.to_node)
            for node in ends:
                if node not in graph:
                    raise InvalidNetwork(
                        "Branch {0!r} references unknown node {1!r}".
                        format(ends, node))
            if branch.from_node == branch.to_node:
                raise NotRadial(
                    "Branch {0!r} is a self loop".format(ends))
            if graph.has_edge(*ends):
                raise NotRadial(
                    "Parallel branches between {0!r} and {1!r}".format(*ends))
            if not (math.isfinite(branch.r) and branch.r >= 0):
                raise InvalidNetwork(
                    "Branch {0!r} must have r >= 0, but has r = {1}".
                    format(ends, branch.r))
            if not (math.isfinite(branch.x) and branch.x > 0):
                raise InvalidNetwork(
                    "Branch {0!r} must have x > 0 (inductive), but has "
                    "x = {1}".format(ends, branch.x))
            if branch.i_max is not None and not branch.i_max > 0:
                raise InvalidNetwork(
                    "Branch {0!r} must have a positive current limit, but "
                    "has i_max = {1}".format(ends, branch.i_max))
            graph.add_edge(branch.from_node, branch.to_node, branch=branch)

        if graph.degree(self._root) == 0:
            raise NotRooted(
                "No branch is incident to substation node {0!r}".
                format(self._root))
        if not nx.is_connected(graph):
            reached = nx.node_connected_component(graph, self._root)
            isolated = [n for n in self._input_nodes if n not in reached]
            raise NotRadial(
                "Nodes not connected to substation node {0!r}: {1!r}".
                format(self._root, isolated))
        if not nx.is_tree(graph):
            cycle = [u for u, _ in nx.find_cycle(graph, self._root)]
            raise NotRadial(
                "Feeder graph has a cycle through nodes {0!r}".format(cycle))

        for parent, child in nx.bfs_edges(graph, self._root):
            graph.nodes[child]['parent'] = parent
        return graph

    def _bound_vector(self, bound, default, name):
        """Expand a scalar or per-node bound into an internal-order vector."""
        if bound is None:
            return [default] * self.node_count
        if isinstance(bound, (int, float)):
            return [float(bound)] * self.node_count
        unknown = [node for node in bound if node not in self._index]
        if unknown:
            raise InvalidNetwork(
                "{0} given for unknown or substation nodes: {1!r}".
                format(name, unknown))
        return [float(bound.get(node, default)) for node in self._order[1:]]

    def __repr__(self):
        return "{0.__class__.__name__}(root={0.root!r}, " \
            "node_count={0.node_count!r}, base={0.base!r})".format(self)

    def __eq__(self, other):
        """
        Two networks are equal if they describe the same feeder, in the same
        input order and with identical per-unit values.
        """
        if not isinstance(other, FeederNetwork):
            return NotImplemented
        return (
            self._input_nodes == tuple(other.input_node_ids) and
            self._input_branches == tuple(other.input_branches) and
            self._root == other.root and
            self._v_source == other.v_source and
            self._base == other.base and
            np.array_equal(self._v_min_mag, other.v_min_magnitude) and
            np.array_equal(self._v_max_mag, other.v_max_magnitude))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    @property
    def root(self):
        """External id of the substation node."""
        return self._root

    @property
    def node_count(self):
        """int: Number n of non-substation nodes (and of branches)."""
        return len(self._order) - 1

    @property
    def node_ids(self):
        """
        :class:`~immutable_views.ListView`: External ids of the
        non-substation nodes in internal order.
        """
        return ListView(self._order[1:])

    @property
    def input_node_ids(self):
        """
        :class:`~immutable_views.ListView`: External ids of all nodes in the
        order the network was created with, substation included.
        """
        return ListView(self._input_nodes)

    @property
    def index(self):
        """
        :class:`~immutable_views.DictView`: Position of each non-substation
        node in the internal vectors, by external id.
        """
        return DictView(self._index)

    @property
    def permutation(self):
        """
        :class:`~immutable_views.ListView`: For each internal position, the
        position of that node among the non-substation nodes in input order.
        """
        return ListView(self._permutation)

    @property
    def input_order(self):
        """
        list of int: Internal positions of the non-substation nodes in input
        order. ``vector[network.input_order]`` re-orders a vector to input
        order.
        """
        order = [0] * self.node_count
        for pos, input_pos in enumerate(self._permutation):
            order[input_pos] = pos
        return order

    @property
    def parents(self):
        """
        numpy.ndarray: Internal position of the parent of each node, or -1
        where the parent is the substation. Parents precede their children.
        """
        return self._parents

    @property
    def branches(self):
        """
        :class:`~immutable_views.ListView`: The branches oriented away from
        the substation, in internal order (branch k feeds node k).
        """
        return ListView(self._branches)

    @property
    def input_branches(self):
        """
        :class:`~immutable_views.ListView`: The branches as given when the
        network was created.
        """
        return ListView(self._input_branches)

    @property
    def r(self):
        """numpy.ndarray: Branch resistances, in pu."""
        return self._r

    @property
    def x(self):
        """numpy.ndarray: Branch reactances, in pu."""
        return self._x

    @property
    def z2(self):
        """numpy.ndarray: Squared branch impedance magnitudes, in pu."""
        return self._r ** 2 + self._x ** 2

    @property
    def i_max(self):
        """numpy.ndarray: Branch current magnitude limits (inf if none)."""
        return self._i_max

    @property
    def l_min(self):
        """numpy.ndarray: Lower squared current bounds (always zero)."""
        return np.zeros(self.node_count)

    @property
    def l_max(self):
        """numpy.ndarray: Upper squared current bounds, in pu."""
        return self._i_max ** 2

    @property
    def v_source(self):
        """float: Substation voltage magnitude, in pu."""
        return self._v_source

    @property
    def v0(self):
        """float: Squared substation voltage, in pu."""
        return self._v_source ** 2

    @property
    def v_min_magnitude(self):
        """numpy.ndarray: Lower voltage magnitude bounds, in pu."""
        return self._v_min_mag

    @property
    def v_max_magnitude(self):
        """numpy.ndarray: Upper voltage magnitude bounds, in pu."""
        return self._v_max_mag

    @property
    def v_min(self):
        """numpy.ndarray: Lower squared voltage bounds, in pu."""
        return self._v_min_mag ** 2

    @property
    def v_max(self):
        """numpy.ndarray: Upper squared voltage bounds, in pu."""
        return self._v_max_mag ** 2

    @property
    def base(self):
        """:class:`PerUnitBase`: Base quantities of the feeder."""
        return self._base
