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
Test the end-to-end computation of operating regions.
"""

import json
import os

import pytest

from ..utils.simplified_test_function import simplified_test_function

# pylint: disable=wrong-import-position, wrong-import-order, invalid-name
from ..utils.import_installed import import_installed
hosting_capacity = import_installed('hosting_capacity')
from hosting_capacity import PipelineOptions, PipelineResult, run_pipeline, \
    MODELS, parse_feeder, fixture_path, CapabilitySpec, NodeCapability, \
    ConstantPF, MODEL_INNER, MODEL_LINDIST, UPPER, LOWER, \
    Diverged  # noqa: E402
# pylint: enable=wrong-import-position, wrong-import-order, invalid-name


def load(fixture):
    """Network and capability of a bundled fixture."""
    network, capability, _ = parse_feeder(fixture_path(fixture))
    return network, capability


TESTCASES_PIPELINE_OPTIONS = [

    # Testcases for PipelineOptions()

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * init_kwargs: Keyword arguments for PipelineOptions().
    #   * exp_attrs: Dict of expected attribute values.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Default options",
        dict(
            init_kwargs=dict(),
            exp_attrs=dict(model='both', samples=10000, seed=0,
                           q_policy='segment', workers=1, oracle=False,
                           out_dir=None, on_diverge='fallback'),
        ),
        None, None, True
    ),
    (
        "Numbers given as strings are converted",
        dict(
            init_kwargs=dict(samples='200', seed='7', grid_step='0.01'),
            exp_attrs=dict(samples=200, seed=7, grid_step=0.01),
        ),
        None, None, True
    ),
    (
        "Inner model only with independent reactive sampling",
        dict(
            init_kwargs=dict(model='inner', q_policy='independent'),
            exp_attrs=dict(model='inner', q_policy='independent'),
        ),
        None, None, True
    ),
    (
        "Invalid model",
        dict(
            init_kwargs=dict(model='exact'),
            exp_attrs=None,
        ),
        ValueError, None, True
    ),
    (
        "Invalid reactive sampling policy",
        dict(
            init_kwargs=dict(q_policy='corners'),
            exp_attrs=None,
        ),
        ValueError, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_PIPELINE_OPTIONS)
@simplified_test_function
def test_PipelineOptions(testcase, init_kwargs, exp_attrs):
    """
    Test function for PipelineOptions().
    """

    # The code to be tested
    options = PipelineOptions(**init_kwargs)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    for name, exp_value in exp_attrs.items():
        assert getattr(options, name) == exp_value
    assert repr(options).startswith("PipelineOptions(")


def test_MODELS():
    """
    Test the model selections; the first model is the primary one.
    """
    assert MODELS['both'] == (MODEL_INNER, MODEL_LINDIST)
    assert MODELS['inner'][0] == MODEL_INNER
    assert MODELS['lindist'][0] == MODEL_LINDIST


TESTCASES_RUN_PIPELINE = [

    # Testcases for run_pipeline() on the bundled fixtures

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * fixture: Name of the bundled fixture.
    #   * options: Keyword arguments for PipelineOptions().
    #   * exp_primary: Expected primary model.
    #   * exp_passed: Expected outcome of the primary model.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Twonode, both models, inner model decides",
        dict(
            fixture='twonode',
            options=dict(samples=500),
            exp_primary=MODEL_INNER,
            exp_passed=True,
        ),
        None, None, True
    ),
    (
        "Twonode, LinDist model violates the lower voltage bound",
        dict(
            fixture='twonode',
            options=dict(model='lindist', samples=500),
            exp_primary=MODEL_LINDIST,
            exp_passed=False,
        ),
        None, None, True
    ),
    (
        "Twonode, inner model without sampling",
        dict(
            fixture='twonode',
            options=dict(model='inner', samples=0),
            exp_primary=MODEL_INNER,
            exp_passed=True,
        ),
        None, None, True
    ),
    (
        "Twonode, box case with segment sampling",
        dict(
            fixture='twonode',
            options=dict(case='box', model='inner', samples=500),
            exp_primary=MODEL_INNER,
            exp_passed=True,
        ),
        None, None, True
    ),
    (
        "Twonode, inner model with the oracle",
        dict(
            fixture='twonode',
            options=dict(model='inner', samples=200, oracle=True),
            exp_primary=MODEL_INNER,
            exp_passed=True,
        ),
        None, None, True
    ),
    (
        "IEEE 13 node feeder, inner model",
        dict(
            fixture='ieee13',
            options=dict(model='inner', samples=300, workers=2),
            exp_primary=MODEL_INNER,
            exp_passed=True,
        ),
        None, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_RUN_PIPELINE)
@simplified_test_function
def test_run_pipeline(testcase, fixture, options, exp_primary, exp_passed):
    """
    Test function for run_pipeline() on the bundled fixtures.
    """
    network, capability = load(fixture)
    options = PipelineOptions(**options)

    # The code to be tested
    result = run_pipeline(network, capability, options, name=fixture)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert isinstance(result, PipelineResult)
    assert result.primary_model == exp_primary
    assert result.passed is exp_passed
    assert result.exit_code == (0 if exp_passed else 1)

    # Both regions are computed regardless of the validated models.
    assert set(result.regions) == {MODEL_INNER, MODEL_LINDIST}
    assert set(result.programs) == {MODEL_INNER, MODEL_LINDIST}
    models = MODELS[options.model]
    assert set(result.boundary) == set(models)
    if options.samples > 0:
        assert set(result.reports) == set(models)
        for report in result.reports.values():
            assert report.sample_count == options.samples
    else:
        assert result.reports == {}
    assert set(result.activity) == {UPPER, LOWER}
    assert result.paths == []

    summary = result.summary
    assert summary['feeder'] == fixture
    assert summary['nodes'] == network.node_count
    assert summary['primary_model'] == exp_primary
    assert summary['passed'] is exp_passed
    assert set(summary['validation']) == set(models)
    assert summary['validation'][exp_primary]['passed'] is exp_passed
    if options.case is not None:
        assert summary['cases'] == [options.case]
    if options.oracle:
        assert result.oracle_contains is True
        assert summary['oracle']['contains_inner'] is True
    else:
        assert result.oracle is None
        assert 'oracle' not in summary
    # The summary is plain JSON.
    assert json.loads(json.dumps(summary)) == summary


def test_run_pipeline_both_models_summary():
    """
    Test that the summary of both models reports the LinDist failure while
    the inner model decides the outcome.
    """
    network, capability = load('twonode')

    # The code to be tested
    result = run_pipeline(network, capability,
                          PipelineOptions(samples=500), name='twonode')

    validation = result.summary['validation']
    assert validation[MODEL_INNER]['passed'] is True
    assert validation[MODEL_INNER]['violation_count'] == 0
    assert validation[MODEL_LINDIST]['passed'] is False
    assert validation[MODEL_LINDIST]['boundary'][LOWER]['status'] == \
        'Violated'
    assert validation[MODEL_LINDIST]['boundary'][LOWER]['nodes'] == ['1']
    assert validation[MODEL_LINDIST]['violation_count'] > 0
    assert result.summary['cases'] == ['constant-pf']
    assert result.summary['current_bounds']['flagged'] is False
    regions = result.summary['regions']
    assert regions[MODEL_INNER]['current_violations'] == []
    assert regions[MODEL_INNER]['downgraded'] is False
    assert result.regions[MODEL_INNER].p_minus[0] > \
        result.regions[MODEL_LINDIST].p_minus[0]


def test_run_pipeline_export(tmp_path):
    """
    Test the export of the pipeline results.
    """
    network, capability = load('twonode')
    out_dir = str(tmp_path / 'results')

    # The code to be tested
    result = run_pipeline(
        network, capability,
        PipelineOptions(samples=100, out_dir=out_dir), name='twonode')

    names = sorted(os.path.basename(path) for path in result.paths)
    assert names == ['region.csv', 'samples.csv', 'setpoints.csv',
                     'summary.json']
    with open(os.path.join(out_dir, 'summary.json')) as fp:
        document = json.load(fp)
    assert document['primary_model'] == MODEL_INNER
    assert document['passed'] is True
    assert document['monte_carlo']['model'] == MODEL_INNER
    assert document['monte_carlo']['sample_count'] == 100


def test_run_pipeline_diverged_corner():
    """
    Test the policies for a capability corner beyond the nose point.
    """
    network, _ = load('twonode')
    capability = CapabilitySpec(
        [NodeCapability('1', ConstantPF(1.0), -0.5, 0.15)])

    with pytest.raises(Diverged):

        # The code to be tested
        run_pipeline(network, capability,
                     PipelineOptions(samples=0, on_diverge='raise'))


@pytest.mark.parametrize("case", ['unity-pf', 'box', 'quadratic'])
def test_run_pipeline_export_identical(tmp_path, case):
    """
    Test that repeated runs on ieee13 with the same seed export
    byte-identical files, also with a different number of workers.
    """
    network, capability = load('ieee13')
    paths = []
    for name, workers in (('first', 1), ('second', 3)):
        options = PipelineOptions(case=case, samples=10000, seed=5,
                                  workers=workers,
                                  out_dir=str(tmp_path / name))

        # The code to be tested
        result = run_pipeline(network, capability, options, name='ieee13')

        assert result.passed
        assert result.reports[MODEL_INNER].violation_count == 0
        paths.append(result.paths)

    first, second = paths
    assert [os.path.basename(p) for p in first] == \
        [os.path.basename(p) for p in second]
    for path1, path2 in zip(first, second):
        with open(path1, 'rb') as fp1, open(path2, 'rb') as fp2:
            assert fp1.read() == fp2.read(), path1
