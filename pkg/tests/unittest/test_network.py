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
Test the PerUnitBase, Branch and FeederNetwork classes.
"""

import math

import numpy as np
import pytest
from immutable_views import ListView, DictView

from ..utils.simplified_test_function import simplified_test_function

# pylint: disable=wrong-import-position, wrong-import-order, invalid-name
from ..utils.import_installed import import_installed
hosting_capacity = import_installed('hosting_capacity')
from hosting_capacity import PerUnitBase, Branch, FeederNetwork, \
    NotRadial, NotRooted, InvalidNetwork, NetworkError  # noqa: E402
# pylint: enable=wrong-import-position, wrong-import-order, invalid-name


def small_tree():
    """
    Substation 0 with a branch 0-1-2 and a second lateral 0-3, given with
    one branch in reverse orientation.
    """
    return FeederNetwork(
        [0, 1, 2, 3],
        [Branch(0, 1, 0.01, 0.02), Branch(2, 1, 0.03, 0.04, i_max=2.0),
         Branch(0, 3, 0.05, 0.06)],
        v_min=0.95, v_max={1: 1.05, 2: 1.04})


TESTCASES_PERUNITBASE = [

    # Testcases for PerUnitBase conversions

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * base_kv, base_mva: Arguments to PerUnitBase().
    #   * method: Name of the conversion method.
    #   * value, unit: Arguments to the conversion method.
    #   * exp_result: Expected result.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Ohm to pu at 4.16 kV and 1 MVA",
        dict(base_kv=4.16, base_mva=1.0, method='impedance_to_pu',
             value=17.3056, unit='ohm', exp_result=1.0),
        None, None, True
    ),
    (
        "Impedance unit tag is case-insensitive",
        dict(base_kv=4.16, base_mva=1.0, method='impedance_to_pu',
             value=10.0, unit='OHMS', exp_result=10.0 / 17.3056),
        None, None, True
    ),
    (
        "Per-unit impedance is unchanged",
        dict(base_kv=4.16, base_mva=5.0, method='impedance_to_pu',
             value=0.25, unit='pu', exp_result=0.25),
        None, None, True
    ),
    (
        "MW to pu at 1 MVA",
        dict(base_kv=4.16, base_mva=1.0, method='power_to_pu',
             value=0.15, unit='MW', exp_result=0.15),
        None, None, True
    ),
    (
        "kVAr to pu at 5 MVA",
        dict(base_kv=4.16, base_mva=5.0, method='power_to_pu',
             value=500.0, unit='kvar', exp_result=0.1),
        None, None, True
    ),
    (
        "Unknown power unit",
        dict(base_kv=4.16, base_mva=1.0, method='power_to_pu',
             value=1.0, unit='hp', exp_result=None),
        KeyError, None, True
    ),
    (
        "Zero base voltage",
        dict(base_kv=0.0, base_mva=1.0, method='power_to_pu',
             value=1.0, unit='MW', exp_result=None),
        ValueError, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_PERUNITBASE)
@simplified_test_function
def test_PerUnitBase_convert(testcase, base_kv, base_mva, method, value,
                             unit, exp_result):
    """
    Test function for the conversion methods of PerUnitBase.
    """

    # The code to be tested
    base = PerUnitBase(base_kv, base_mva)
    result = getattr(base, method)(value, unit)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert result == pytest.approx(exp_result, rel=1e-12)


def test_PerUnitBase_z_base():
    """
    Test the base impedance and equality of PerUnitBase.
    """
    base = PerUnitBase(4.16, 1.0)
    assert base.z_base == pytest.approx(17.3056, rel=1e-12)
    assert base == PerUnitBase(4.16, 1.0)
    assert base != PerUnitBase(4.16, 5.0)
    assert hash(base) == hash(PerUnitBase(4.16, 1.0))


def test_FeederNetwork_order():
    """
    Test the breadth-first order, parents and permutations of a network.
    """
    network = small_tree()

    assert network.root == 0
    assert network.node_count == 3
    assert isinstance(network.node_ids, ListView)
    assert list(network.node_ids) == [1, 3, 2]
    assert list(network.parents) == [-1, -1, 0]
    assert isinstance(network.index, DictView)
    assert dict(network.index) == {1: 0, 3: 1, 2: 2}
    assert list(network.permutation) == [0, 2, 1]
    assert network.input_order == [0, 2, 1]
    assert list(network.input_node_ids) == [0, 1, 2, 3]

    # Parents precede their children
    for pos, parent in enumerate(network.parents):
        assert parent < pos


def test_FeederNetwork_branches():
    """
    Test that branches are oriented away from the substation and that the
    branch vectors follow the internal order.
    """
    network = small_tree()

    branches = list(network.branches)
    assert [(b.from_node, b.to_node) for b in branches] == \
        [(0, 1), (0, 3), (1, 2)]
    np.testing.assert_array_equal(network.r, [0.01, 0.05, 0.03])
    np.testing.assert_array_equal(network.x, [0.02, 0.06, 0.04])
    np.testing.assert_allclose(network.z2, [0.0005, 0.0061, 0.0025])
    assert network.i_max[2] == 2.0
    assert math.isinf(network.i_max[0])
    assert network.l_max[2] == 4.0
    np.testing.assert_array_equal(network.l_min, np.zeros(3))

    # The input branches are kept as given
    assert list(network.input_branches)[1] == Branch(2, 1, 0.03, 0.04, 2.0)


def test_FeederNetwork_bounds():
    """
    Test the voltage bounds as magnitudes and squared values.
    """
    network = small_tree()

    np.testing.assert_allclose(network.v_min_magnitude, [0.95, 0.95, 0.95])
    np.testing.assert_allclose(network.v_max_magnitude,
                               [1.05, math.inf, 1.04])
    np.testing.assert_allclose(network.v_min, [0.9025] * 3)
    np.testing.assert_allclose(network.v_max, [1.1025, math.inf, 1.0816])
    assert network.v_source == 1.0
    assert network.v0 == 1.0

    with pytest.raises(ValueError):
        network.r[0] = 1.0


def test_FeederNetwork_equal():
    """
    Test equality of networks.
    """
    assert small_tree() == small_tree()
    other = FeederNetwork(
        [0, 1, 2, 3],
        [Branch(0, 1, 0.01, 0.02), Branch(2, 1, 0.03, 0.04, i_max=2.0),
         Branch(0, 3, 0.05, 0.06)],
        v_min=0.9, v_max={1: 1.05, 2: 1.04})
    assert small_tree() != other


TESTCASES_FEEDERNETWORK_INVALID = [

    # Testcases for FeederNetwork() with invalid input

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * nodes, branches: Arguments to FeederNetwork().
    #   * init_kwargs: Further keyword arguments to FeederNetwork().
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Cycle",
        dict(nodes=[0, 1, 2],
             branches=[Branch(0, 1, 0.1, 0.1), Branch(1, 2, 0.1, 0.1),
                       Branch(2, 0, 0.1, 0.1)],
             init_kwargs=dict()),
        NotRadial, None, True
    ),
    (
        "Disconnected node",
        dict(nodes=[0, 1, 2],
             branches=[Branch(0, 1, 0.1, 0.1)],
             init_kwargs=dict()),
        NotRadial, None, True
    ),
    (
        "Parallel branches",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, 0.1), Branch(1, 0, 0.2, 0.2)],
             init_kwargs=dict()),
        NotRadial, None, True
    ),
    (
        "Self loop",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, 0.1), Branch(1, 1, 0.1, 0.1)],
             init_kwargs=dict()),
        NotRadial, None, True
    ),
    (
        "Substation without branch",
        dict(nodes=[0, 1, 2],
             branches=[Branch(1, 2, 0.1, 0.1)],
             init_kwargs=dict()),
        NotRooted, None, True
    ),
    (
        "Branch to unknown node",
        dict(nodes=[0, 1],
             branches=[Branch(0, 5, 0.1, 0.1)],
             init_kwargs=dict()),
        InvalidNetwork, None, True
    ),
    (
        "Capacitive branch",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, -0.1)],
             init_kwargs=dict()),
        InvalidNetwork, None, True
    ),
    (
        "Negative resistance",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, -0.1, 0.1)],
             init_kwargs=dict()),
        InvalidNetwork, None, True
    ),
    (
        "Non-positive current limit",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, 0.1, i_max=0.0)],
             init_kwargs=dict()),
        InvalidNetwork, None, True
    ),
    (
        "Duplicate node ids",
        dict(nodes=[0, 1, 1],
             branches=[Branch(0, 1, 0.1, 0.1)],
             init_kwargs=dict()),
        InvalidNetwork, None, True
    ),
    (
        "Only the substation",
        dict(nodes=[0], branches=[], init_kwargs=dict()),
        InvalidNetwork, None, True
    ),
    (
        "Unknown substation node",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, 0.1)],
             init_kwargs=dict(root=7)),
        InvalidNetwork, None, True
    ),
    (
        "Lower voltage bound above upper bound",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, 0.1)],
             init_kwargs=dict(v_min=1.05, v_max=0.95)),
        InvalidNetwork, None, True
    ),
    (
        "Voltage bound for the substation node",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, 0.1)],
             init_kwargs=dict(v_min={0: 0.95})),
        InvalidNetwork, None, True
    ),
    (
        "Zero substation voltage",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.1, 0.1)],
             init_kwargs=dict(v_source=0.0)),
        InvalidNetwork, None, True
    ),
    (
        "Lossless branch is valid",
        dict(nodes=[0, 1],
             branches=[Branch(0, 1, 0.0, 0.1)],
             init_kwargs=dict()),
        None, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_FEEDERNETWORK_INVALID)
@simplified_test_function
def test_FeederNetwork_invalid(testcase, nodes, branches, init_kwargs):
    """
    Test function for FeederNetwork() with invalid input.
    """

    # The code to be tested
    network = FeederNetwork(nodes, branches, **init_kwargs)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert network.node_count == len(nodes) - 1


def test_NetworkError_diagnostic():
    """
    Test the module-tagged diagnostic and exit code of network errors.
    """
    with pytest.raises(NetworkError) as exc_info:
        FeederNetwork([0, 1, 2], [Branch(0, 1, 0.1, 0.1)])
    exc = exc_info.value
    assert exc.exit_code == 4
    assert exc.diagnostic().startswith("[feeder-graph] NotRadial: ")
    assert "[2]" in str(exc)
