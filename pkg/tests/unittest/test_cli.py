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
Test the ``hc`` command.
"""

import argparse
import contextlib
import io
import json
import os

import pandas as pd
import pytest

from ..utils.simplified_test_function import simplified_test_function

# pylint: disable=wrong-import-position, wrong-import-order, invalid-name
from ..utils.import_installed import import_installed
hosting_capacity = import_installed('hosting_capacity')
from hosting_capacity._cli import main, create_parser, \
    _parse_injection  # noqa: E402
# pylint: enable=wrong-import-position, wrong-import-order, invalid-name


def run_hc(argv):
    """Run the command and return exit code, stdout and stderr."""
    stdout = io.StringIO()
    stderr = io.StringIO()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        rc = main(argv)
    return rc, stdout.getvalue(), stderr.getvalue()


TESTCASES_PARSE_INJECTION = [

    # Testcases for the --inject argument of 'hc powerflow'

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * text: The argument value.
    #   * exp_result: Expected tuple (node, p, q).
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Real injection only",
        dict(text='1=-0.05', exp_result=('1', -0.05, 0.0)),
        None, None, True
    ),
    (
        "Real and reactive injection",
        dict(text='632=0.1,-0.02', exp_result=('632', 0.1, -0.02)),
        None, None, True
    ),
    (
        "Missing equal sign",
        dict(text='1', exp_result=None),
        argparse.ArgumentTypeError, None, True
    ),
    (
        "Value is not a number",
        dict(text='1=abc', exp_result=None),
        argparse.ArgumentTypeError, None, True
    ),
    (
        "Too many values",
        dict(text='1=0.1,0.2,0.3', exp_result=None),
        argparse.ArgumentTypeError, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_PARSE_INJECTION)
@simplified_test_function
def test_parse_injection(testcase, text, exp_result):
    """
    Test function for the --inject argument of 'hc powerflow'.
    """

    # The code to be tested
    result = _parse_injection(text)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert result == exp_result


TESTCASES_HC = [

    # Testcases for the exit codes and output of the hc command

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * argv: Command line arguments.
    #   * exp_rc: Expected exit code.
    #   * exp_stdout: List of strings expected in stdout.
    #   * exp_stderr: List of strings expected in stderr.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Matrix diagnostics of twonode",
        dict(
            argv=['build', '--feeder', 'twonode'],
            exp_rc=0,
            exp_stdout=["Substation node: 0", "Node order: 1",
                        "C_is_path_indicator: True",
                        "M_p_symmetric: True"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Matrix diagnostics of the IEEE 13 node feeder",
        dict(
            argv=['build', '--feeder', 'ieee13'],
            exp_rc=0,
            exp_stdout=["Substation node: 650", "n: 12"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Matrix diagnostics of a fixture named with its file suffix",
        dict(
            argv=['build', '--feeder', 'ieee13.json'],
            exp_rc=0,
            exp_stdout=["Substation node: 650", "n: 12"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Power flow with a consumption",
        dict(
            argv=['powerflow', '--feeder', 'twonode', '--inject', '1=-0.05'],
            exp_rc=0,
            exp_stdout=["Converged in", "0.9393"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Power flow without injections",
        dict(
            argv=['powerflow', '--feeder', 'twonode'],
            exp_rc=0,
            exp_stdout=["Converged in"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Power flow at an unknown node",
        dict(
            argv=['powerflow', '--feeder', 'twonode', '--inject', '7=0.1'],
            exp_rc=2,
            exp_stdout=[],
            exp_stderr=["hc: error: Node '7'"],
        ),
        None, None, True
    ),
    (
        "Power flow beyond the nose point",
        dict(
            argv=['powerflow', '--feeder', 'twonode', '--inject', '1=-0.5'],
            exp_rc=5,
            exp_stdout=[],
            exp_stderr=["[distflow-solver] Diverged: "],
        ),
        None, None, True
    ),
    (
        "Run on twonode, inner model decides",
        dict(
            argv=['run', '--feeder', 'twonode', '--samples', '200'],
            exp_rc=0,
            exp_stdout=["InnerApprox boundary, lower: Feasible",
                        "LinDist boundary, lower: Violated at nodes 1",
                        "InnerApprox Monte-Carlo: 200 samples, 0 violations",
                        "Validation of InnerApprox region: passed"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Run on twonode, LinDist model decides",
        dict(
            argv=['run', '--feeder', 'twonode', '--samples', '200',
                  '--model', 'lindist'],
            exp_rc=1,
            exp_stdout=["Validation of LinDist region: FAILED"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Run on twonode with the box case and the oracle",
        dict(
            argv=['run', '--feeder', 'twonode', '--samples', '200',
                  '--model', 'inner', '--case', 'box', '--oracle'],
            exp_rc=0,
            exp_stdout=["Oracle region contains inner region: True",
                        "Validation of InnerApprox region: passed"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Run on a missing feeder file",
        dict(
            argv=['run', '--feeder', 'no/such/feeder.json'],
            exp_rc=3,
            exp_stdout=[],
            exp_stderr=["ParseError"],
        ),
        None, None, True
    ),
    (
        "Oracle of twonode",
        dict(
            argv=['oracle', '--feeder', 'twonode'],
            exp_rc=0,
            exp_stdout=["p_minus_InnerApprox",
                        "Oracle region contains inner region: True",
                        "LinDist lower end outside oracle region: True"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Oracle grid of the IEEE 13 node feeder is too large",
        dict(
            argv=['oracle', '--feeder', 'ieee13'],
            exp_rc=6,
            exp_stdout=[],
            exp_stderr=["GridTooLarge"],
        ),
        None, None, True
    ),
    (
        "Sweep to stdout",
        dict(
            argv=['sweep', '--feeder', 'twonode', '--node', '1',
                  '--p-min', '-0.15', '--p-max', '0', '--points', '4'],
            exp_rc=0,
            exp_stdout=["V_lindist", "V_distflow", "gap"],
            exp_stderr=[],
        ),
        None, None, True
    ),
    (
        "Sweep of an unknown node",
        dict(
            argv=['sweep', '--feeder', 'twonode', '--node', '9'],
            exp_rc=2,
            exp_stdout=[],
            exp_stderr=["hc: error: Node '9'"],
        ),
        None, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_HC)
@simplified_test_function
def test_hc(testcase, argv, exp_rc, exp_stdout, exp_stderr):
    """
    Test function for the exit codes and output of the hc command.
    """

    # The code to be tested
    rc, stdout, stderr = run_hc(argv)

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    assert rc == exp_rc, "stdout:\n{0}\nstderr:\n{1}".format(stdout, stderr)
    for part in exp_stdout:
        assert part in stdout
    for part in exp_stderr:
        assert part in stderr


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ['run'],
        ['powerflow', '--feeder', 'twonode', '--inject', '1=abc'],
        ['run', '--feeder', 'twonode', '--model', 'exact'],
        ['run', '--feeder', 'twonode', '--q-policy', 'corners'],
    ]
)
def test_hc_usage_errors(argv, capsys):
    """
    Test that invalid command lines end with the usage exit code.
    """
    with pytest.raises(SystemExit) as exc_info:
        main(argv)
    assert exc_info.value.code == 2
    assert "usage: hc" in capsys.readouterr().err


def test_hc_version(capsys):
    """
    Test the --version option.
    """
    with pytest.raises(SystemExit) as exc_info:
        main(['--version'])
    assert exc_info.value.code == 0
    assert capsys.readouterr().out.startswith("hc ")


def test_create_parser_subcommands():
    """
    Test the subcommands of the hc command.
    """
    parser = create_parser()
    for command in ('build', 'powerflow', 'run', 'validate', 'oracle',
                    'sweep'):
        args = parser.parse_args([command, '--feeder', 'twonode'] +
                                 (['--region', 'out'] if command == 'validate'
                                  else []) +
                                 (['--node', '1'] if command == 'sweep'
                                  else []))
        assert args.command == command
        assert args.feeder == 'twonode'


def test_hc_run_and_validate(tmp_path):
    """
    Test exporting the regions with 'hc run' and validating them again with
    'hc validate'.
    """
    out_dir = str(tmp_path / 'run')

    # The code to be tested
    rc, stdout, _ = run_hc(['run', '--feeder', 'twonode', '--samples', '100',
                            '--out', out_dir])

    assert rc == 0
    for name in ('region.csv', 'setpoints.csv', 'samples.csv',
                 'summary.json'):
        assert os.path.exists(os.path.join(out_dir, name))
        assert "Wrote {0}".format(os.path.join(out_dir, name)) in stdout
    with open(os.path.join(out_dir, 'summary.json')) as fp:
        summary = json.load(fp)
    assert summary['feeder'] == 'twonode'
    assert summary['exit_code'] == 0

    # The code to be tested
    rc, stdout, _ = run_hc(['validate', '--feeder', 'twonode', '--region',
                            out_dir, '--samples', '100'])

    assert rc == 0
    assert "InnerApprox boundary, upper: Feasible" in stdout

    # The code to be tested
    rc, stdout, _ = run_hc(['validate', '--feeder', 'twonode', '--region',
                            out_dir, '--model', 'lindist', '--samples', '100',
                            '--out', str(tmp_path / 'validate')])

    assert rc == 1
    assert "LinDist boundary, lower: Violated" in stdout
    assert os.path.exists(str(tmp_path / 'validate' / 'region.csv'))


def test_hc_validate_missing_region(tmp_path):
    """
    Test validating a region directory without exported region.
    """

    # The code to be tested
    rc, _, stderr = run_hc(['validate', '--feeder', 'twonode', '--region',
                            str(tmp_path), '--samples', '10'])

    assert rc == 7
    assert "IoError" in stderr


def test_hc_sweep_csv(tmp_path):
    """
    Test writing the sweep table to a CSV file.
    """
    path = str(tmp_path / 'sweep.csv')

    # The code to be tested
    rc, stdout, _ = run_hc(['sweep', '--feeder', 'twonode', '--node', '1',
                            '--p-min', '-0.15', '--p-max', '0',
                            '--points', '4', '--q', '0.01', '--out', path])

    assert rc == 0
    assert "Wrote {0}".format(path) in stdout
    frame = pd.read_csv(path)
    assert len(frame) == 4
    assert list(frame['q']) == [0.01] * 4
    assert frame['converged'].all()
