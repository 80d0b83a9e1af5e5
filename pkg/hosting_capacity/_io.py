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
Feeder files, bundled fixtures and result export.

A feeder file is a JSON document::

    {
      "schema_version": 1,
      "name": "twonode",
      "base": {"kv": 4.16, "mva": 1.0},
      "substation": {"node": "0", "voltage": 1.0},
      "nodes": [{"id": "0"}, {"id": "1", "v_min": 0.95, "v_max": 1.05}],
      "branches": [{"from": "0", "to": "1", "r": 10.0, "x": 15.0,
                    "unit": "ohm", "i_max": 0.7}],
      "capability": [{"node": "1", "case": "box", "unit": "MW",
                      "p_min": -0.15, "p_max": 0.15,
                      "q_min": -0.02, "q_max": 0.02}]
    }

Voltage bounds are magnitudes in pu. Branch impedances carry a unit tag
(``pu`` or ``ohm``), capability powers a power unit tag (``pu``, ``MW``,
``kW``, ...). ``i_max`` is a current magnitude in pu.
"""

import json
import logging
import math
import os

import numpy as np
import pandas as pd

from ._exceptions import ParseError, UnsupportedVersion, IoError, \
    CapabilityError
from ._units import PerUnitBase, IMPEDANCE_UNITS, POWER_UNITS
from ._network import Branch, FeederNetwork
from ._capability import CapabilitySpec, NodeCapability, ConstantPF, \
    make_case
from ._region import OperatingRegion, MODEL_INNER, MODEL_LINDIST, UPPER, \
    LOWER, STATUS_OPTIMAL

__all__ = ['parse_feeder', 'read_feeder', 'write_feeder', 'export_results',
           'load_region', 'fixture_path', 'resolve_feeder', 'FIXTURE_NAMES',
           'SCHEMA_VERSION', 'MODEL_COLUMN_TAGS']

_LOGGER = logging.getLogger(__name__)

#: Supported schema version of feeder files.
SCHEMA_VERSION = 1

#: Names of the bundled feeder fixtures.
FIXTURE_NAMES = ('twonode', 'ieee13')

#: Column name tag of each model in exported tables.
MODEL_COLUMN_TAGS = {MODEL_LINDIST: 'lindist', MODEL_INNER: 'inner'}

_CASE_PARAMS = ('pf', 'q_min', 'q_max', 's_max')
_POWER_PARAMS = ('q_min', 'q_max', 's_max', 'p_min', 'p_max', 'demand',
                 'solar')


def fixture_path(name):
    """
    Return the path of a bundled feeder fixture.

    Raises:
      KeyError: Unknown fixture name.
    """
    if name not in FIXTURE_NAMES:
        raise KeyError("Unknown fixture {0!r}; bundled fixtures: {1}".
                       format(name, ", ".join(FIXTURE_NAMES)))
    return os.path.join(os.path.dirname(__file__), 'data', name + '.json')


def resolve_feeder(feeder):
    """
    Return the path of a feeder given as path or as bundled fixture name,
    with or without the ".json" suffix. An existing file takes precedence
    over a fixture of the same name.
    """
    if os.path.exists(feeder):
        return feeder
    name = feeder[:-len('.json')] if feeder.endswith('.json') else feeder
    if name in FIXTURE_NAMES:
        return fixture_path(name)
    return feeder


def _get(record, key, where, path, default=KeyError):
    try:
        return record[key]
    except KeyError:
        if default is KeyError:
            raise ParseError("{0}: missing item {1!r}".format(where, key),
                             path=path)
        return default
    except TypeError:
        raise ParseError("{0}: expected an object".format(where), path=path)


def _number(record, key, where, path, default=KeyError):
    value = _get(record, key, where, path, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParseError("{0}: item {1!r} is not a number: {2!r}".
                         format(where, key, value), path=path)


def _unit(registry, tag, where, path):
    if tag not in registry:
        raise ParseError("{0}: unknown unit tag {1!r}; valid tags: {2}".
                         format(where, tag, ", ".join(registry.keys())),
                         path=path)
    return tag


def read_feeder(document, path=None):
    # pylint: disable=too-many-locals
    """
    Build the network and capability from a parsed feeder document.

    Parameters:

      document (dict): The JSON document.

      path (:term:`string`): File name for error messages.

    Returns:
      tuple(:class:`~hosting_capacity.FeederNetwork`,
      :class:`~hosting_capacity.CapabilitySpec`, dict): The network, the
      capability, and the document metadata (``name``, ``description``).

    Raises:
      ParseError: The document is malformed.
      UnsupportedVersion: The schema version is not supported.
      NetworkError: The network violates its invariants (e.g. NotRadial).
    """
    if not isinstance(document, dict):
        raise ParseError("Feeder document must be a JSON object", path=path)
    version = _get(document, 'schema_version', 'document', path)
    if version != SCHEMA_VERSION:
        raise UnsupportedVersion(
            "{0}: schema version {1!r} is not supported (supported: {2})".
            format(path or '<feeder>', version, SCHEMA_VERSION))

    base_rec = _get(document, 'base', 'document', path, {})
    try:
        base = PerUnitBase(_number(base_rec, 'kv', 'base', path, 1.0),
                           _number(base_rec, 'mva', 'base', path, 1.0))
    except ValueError as exc:
        raise ParseError("base: {0}".format(exc), path=path)

    nodes = []
    v_min = {}
    v_max = {}
    for k, rec in enumerate(_get(document, 'nodes', 'document', path)):
        where = "nodes[{0}]".format(k)
        node = _get(rec, 'id', where, path)
        nodes.append(node)
        for key, bounds in (('v_min', v_min), ('v_max', v_max)):
            value = _number(rec, key, where, path, None)
            if value is not None:
                bounds[node] = value

    substation = _get(document, 'substation', 'document', path, {})
    root = _get(substation, 'node', 'substation', path,
                nodes[0] if nodes else None)
    v_source = _number(substation, 'voltage', 'substation', path, 1.0)
    v_min.pop(root, None)
    v_max.pop(root, None)

    branches = []
    for k, rec in enumerate(_get(document, 'branches', 'document', path)):
        where = "branches[{0}]".format(k)
        unit = _unit(IMPEDANCE_UNITS, _get(rec, 'unit', where, path, 'pu'),
                     where, path)
        branches.append(Branch(
            _get(rec, 'from', where, path), _get(rec, 'to', where, path),
            base.impedance_to_pu(_number(rec, 'r', where, path), unit),
            base.impedance_to_pu(_number(rec, 'x', where, path), unit),
            _number(rec, 'i_max', where, path, None)))

    network = FeederNetwork(nodes, branches, root=root, v_source=v_source,
                            v_min=v_min, v_max=v_max, base=base)

    records = []
    for k, rec in enumerate(_get(document, 'capability', 'document', path,
                                 [])):
        where = "capability[{0}]".format(k)
        node = _get(rec, 'node', where, path)
        if node not in network.index:
            raise ParseError(
                "{0}: node {1!r} is not a non-substation node of the feeder".
                format(where, node), path=path)
        unit = _unit(POWER_UNITS, _get(rec, 'unit', where, path, 'pu'),
                     where, path)
        values = {}
        for key in _POWER_PARAMS:
            value = _number(rec, key, where, path, None)
            if value is not None:
                values[key] = base.power_to_pu(value, unit)
        pf = _number(rec, 'pf', where, path, None)
        if pf is not None:
            values['pf'] = pf
        params = dict((key, values[key]) for key in _CASE_PARAMS
                      if key in values)
        try:
            case = make_case(_get(rec, 'case', where, path), **params)
            records.append(NodeCapability(
                node, case, _get(values, 'p_min', where, path),
                _get(values, 'p_max', where, path),
                values.get('demand', 0.0), values.get('solar', 0.0),
                params))
        except CapabilityError as exc:
            raise ParseError("{0}: {1}".format(where, exc), path=path)

    meta = dict(name=document.get('name'),
                description=document.get('description'))
    return network, CapabilitySpec(records), meta


def parse_feeder(path):
    """
    Read a feeder file.

    Parameters:

      path (:term:`string`): Path of the JSON feeder file.

    Returns:
      tuple(:class:`~hosting_capacity.FeederNetwork`,
      :class:`~hosting_capacity.CapabilitySpec`, dict): See
      :func:`read_feeder`.

    Raises:
      ParseError: The file cannot be read or is malformed. For JSON syntax
        errors, `line` is set.
      UnsupportedVersion: The schema version is not supported.
      NetworkError: The network violates its invariants (e.g. NotRadial).
    """
    try:
        with open(path, encoding='utf-8') as fp:
            document = json.load(fp)
    except OSError as exc:
        raise ParseError("cannot read file: {0}".format(exc), path=path)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=path)
    network, capability, meta = read_feeder(document, path)
    _LOGGER.info("Read feeder %s: %d nodes, %d capability records", path,
                 network.node_count + 1, len(capability))
    return network, capability, meta


def _bound_value(value, default):
    return None if value == default else float(value)


def _case_tag(case):
    if isinstance(case, ConstantPF) and case.pf == 1.0:
        return 'unity-pf'
    return case.tag


def write_feeder(network, capability, path, name=None, description=None):
    """
    Write a network and capability to a feeder file, in per-unit.

    Reading the file back with :func:`parse_feeder` yields an equal network
    and capability.

    Raises:
      IoError: The file cannot be written.
    """
    v_min = dict(zip(network.node_ids, network.v_min_magnitude))
    v_max = dict(zip(network.node_ids, network.v_max_magnitude))
    nodes = []
    for node in network.input_node_ids:
        rec = dict(id=node)
        if node != network.root:
            low = _bound_value(v_min[node], 0.0)
            high = _bound_value(v_max[node], math.inf)
            if low is not None:
                rec['v_min'] = low
            if high is not None:
                rec['v_max'] = high
        nodes.append(rec)
    branches = []
    for branch in network.input_branches:
        rec = {'from': branch.from_node, 'to': branch.to_node,
               'r': branch.r, 'x': branch.x, 'unit': 'pu'}
        if branch.i_max is not None:
            rec['i_max'] = branch.i_max
        branches.append(rec)
    records = []
    for record in capability.records.values():
        tag = _case_tag(record.case)
        rec = dict(node=record.node, case=tag, unit='pu',
                   p_min=record.p_min, p_max=record.p_max)
        # The parameters of the case itself override the alternatives.
        if tag == 'unity-pf':
            rec.update(record.params)
        else:
            rec.update(record.with_case(record.case).params)
        if record.demand:
            rec['demand'] = record.demand
        if record.solar:
            rec['solar'] = record.solar
        records.append(rec)
    document = dict(
        schema_version=SCHEMA_VERSION,
        name=name, description=description,
        base=dict(kv=network.base.base_kv, mva=network.base.base_mva),
        substation=dict(node=network.root, voltage=network.v_source),
        nodes=nodes, branches=branches, capability=records)
    try:
        with open(path, 'w', encoding='utf-8') as fp:
            json.dump(document, fp, indent=2)
            fp.write('\n')
    except OSError as exc:
        raise IoError("Cannot write feeder file {0}: {1}".format(path, exc))
    return path


def _region_table(network, regions):
    """One row per dispatchable node, in input order."""
    dispatchable = np.zeros(network.node_count, dtype=bool)
    for region in regions.values():
        dispatchable |= region.dispatchable
    positions = [pos for pos in network.input_order if dispatchable[pos]]
    columns = {'node': [str(network.node_ids[pos]) for pos in positions]}
    for model in (MODEL_LINDIST, MODEL_INNER):
        if model not in regions:
            continue
        region = regions[model]
        tag = MODEL_COLUMN_TAGS[model]
        columns['p_minus_' + tag] = region.p_minus[positions]
        columns['p_plus_' + tag] = region.p_plus[positions]
        columns['delta_p_' + tag] = region.delta_p[positions]
        columns['flex_minus_' + tag] = region.flex_minus[positions]
        columns['flex_plus_' + tag] = region.flex_plus[positions]
    return pd.DataFrame(columns)


def _setpoint_table(network, regions):
    """One row per model, direction and node, in input order."""
    rows = []
    for model in (MODEL_LINDIST, MODEL_INNER):
        if model not in regions:
            continue
        region = regions[model]
        for direction in (LOWER, UPPER):
            p, q, V = (region.p_minus, region.q_minus, region.V_minus) \
                if direction == LOWER else \
                (region.p_plus, region.q_plus, region.V_plus)
            for pos in network.input_order:
                rows.append(dict(
                    model=model, direction=direction,
                    node=str(network.node_ids[pos]),
                    dispatchable=bool(region.dispatchable[pos]),
                    p=p[pos], q=q[pos], V=V[pos]))
    return pd.DataFrame(rows, columns=['model', 'direction', 'node',
                                       'dispatchable', 'p', 'q', 'V'])


def export_results(out_dir, network, regions, report=None, summary=None):
    """
    Write the results of a run to a directory, overwriting earlier results.

    Files:

    * ``region.csv`` - one row per dispatchable node with the region ends,
      widths and flexible-resource bounds of each model
    * ``setpoints.csv`` - p, q and squared voltage of every node at both ends
      of each region
    * ``samples.csv`` - per-sample voltage extremes of the Monte-Carlo
      validation (only with `report`)
    * ``summary.json`` - `summary` plus the Monte-Carlo report summary

    Outputs are identical for identical inputs.

    Parameters:

      out_dir (:term:`string`): Output directory; created if missing.

      network (:class:`~hosting_capacity.FeederNetwork`): The feeder.

      regions (dict): :class:`~hosting_capacity.OperatingRegion` by model.

      report (:class:`~hosting_capacity.MonteCarloReport`): Optional report.

      summary (dict): Further JSON-serializable summary items.

    Returns:
      list of :term:`string`: Paths of the written files.

    Raises:
      IoError: A file cannot be written.
    """
    document = dict(summary or {})
    if report is not None:
        document['monte_carlo'] = report.summary()
    paths = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, 'region.csv')
        _region_table(network, regions).to_csv(path, index=False)
        paths.append(path)
        path = os.path.join(out_dir, 'setpoints.csv')
        _setpoint_table(network, regions).to_csv(path, index=False)
        paths.append(path)
        if report is not None:
            path = os.path.join(out_dir, 'samples.csv')
            report.samples.to_csv(path, index=False)
            paths.append(path)
        path = os.path.join(out_dir, 'summary.json')
        with open(path, 'w', encoding='utf-8') as fp:
            json.dump(document, fp, indent=2, sort_keys=True)
            fp.write('\n')
        paths.append(path)
    except OSError as exc:
        raise IoError("Cannot write results to {0}: {1}".format(out_dir, exc))
    _LOGGER.info("Wrote %d result files to %s", len(paths), out_dir)
    return paths


def load_region(directory, network, model=MODEL_INNER):
    """
    Read a region exported by :func:`export_results`.

    Returns:
      :class:`~hosting_capacity.OperatingRegion`

    Raises:
      IoError: The files cannot be read or do not hold the region.
    """
    path = os.path.join(directory, 'setpoints.csv')
    try:
        table = pd.read_csv(path, dtype={'node': str})
    except (OSError, ValueError) as exc:
        raise IoError("Cannot read region from {0}: {1}".format(path, exc))
    table = table[table['model'] == model]
    position = dict((str(node), pos) for pos, node in
                    enumerate(network.node_ids))
    n = network.node_count
    values = dict((key, np.zeros(n)) for key in (
        'p_plus', 'p_minus', 'q_plus', 'q_minus', 'V_plus', 'V_minus'))
    dispatchable = np.zeros(n, dtype=bool)
    seen = set()
    for row in table.itertuples(index=False):
        if row.node not in position:
            raise IoError("{0}: node {1!r} is not a node of the feeder".
                          format(path, row.node))
        pos = position[row.node]
        suffix = '_plus' if row.direction == UPPER else '_minus'
        values['p' + suffix][pos] = row.p
        values['q' + suffix][pos] = row.q
        values['V' + suffix][pos] = row.V
        dispatchable[pos] = bool(row.dispatchable)
        seen.add((row.direction, pos))
    if len(seen) != 2 * n:
        raise IoError("{0} does not hold a complete {1} region for this "
                      "feeder".format(path, model))

    offset = np.zeros(n)
    region_path = os.path.join(directory, 'region.csv')
    tag = MODEL_COLUMN_TAGS[model]
    try:
        bounds = pd.read_csv(region_path, dtype={'node': str})
    except (OSError, ValueError) as exc:
        raise IoError("Cannot read region from {0}: {1}".
                      format(region_path, exc))
    if 'flex_plus_' + tag in bounds.columns:
        for row in bounds.itertuples(index=False):
            pos = position.get(row.node)
            if pos is not None:
                offset[pos] = getattr(row, 'flex_plus_' + tag) - \
                    values['p_plus'][pos]
    return OperatingRegion(
        network.node_ids, model, STATUS_OPTIMAL, values['p_plus'],
        values['p_minus'], values['q_plus'], values['q_minus'],
        values['V_plus'], values['V_minus'], offset, dispatchable)

