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
Exceptions raised by the hosting-capacity package.

All exceptions derive from :exc:`HostingCapacityError`. Each exception class
defines the exit code the ``hc`` command uses when the exception ends a
command, and the name of the functional area that raised it.
"""

__all__ = ['HostingCapacityError', 'NetworkError', 'NotRadial', 'NotRooted',
           'InvalidNetwork', 'SingularSystem', 'DimensionMismatch',
           'Diverged', 'CapabilityError', 'ProgramError', 'InfeasibleProgram',
           'NonPositiveUpperBound', 'NonNegativeLowerBound',
           'StatusMismatch', 'InvalidRegion', 'GridTooLarge',
           'FeederFileError', 'ParseError', 'UnsupportedVersion', 'IoError',
           'EXIT_SUCCESS', 'EXIT_VALIDATION_FAILED', 'EXIT_USAGE']

#: Exit code of the ``hc`` command for success.
EXIT_SUCCESS = 0

#: Exit code of the ``hc`` command when the solves succeeded but the
#: validation of the region found violations or diverged samples.
EXIT_VALIDATION_FAILED = 1

#: Exit code of the ``hc`` command for command line usage errors.
EXIT_USAGE = 2


class HostingCapacityError(Exception):
    """
    Base class for all exceptions raised by this package.

    Derived from :exc:`py:Exception`.
    """
    #: Exit code of the ``hc`` command for this kind of error.
    exit_code = 1

    #: Functional area that raised the error, used in diagnostics.
    module = 'hosting-capacity'

    def diagnostic(self):
        """
        Return a one-line diagnostic string tagged with the functional area,
        e.g. ``"[feeder-graph] NotRadial: ..."``.
        """
        return "[{0}] {1}: {2}".format(
            self.module, self.__class__.__name__, self)


class NetworkError(HostingCapacityError):
    """
    The feeder network is not a valid radial network model.
    """
    exit_code = 4
    module = 'feeder-graph'


class NotRadial(NetworkError):
    """
    The feeder graph contains a cycle, a parallel branch, a self loop, or a
    node that is not connected to the substation.
    """
    pass


class NotRooted(NetworkError):
    """
    No branch is incident to the substation node.
    """
    pass


class InvalidNetwork(NetworkError):
    """
    A network parameter violates its invariant (e.g. a branch with
    non-positive reactance, or a lower voltage bound that is not below the
    upper voltage bound).
    """
    pass


class SingularSystem(NetworkError):
    """
    The triangular system ``I - A`` has a zero pivot. This indicates that the
    node ordering is not topological.
    """
    pass


class DimensionMismatch(HostingCapacityError, ValueError):
    """
    An injection vector does not match the number of non-substation nodes.

    Derived from :exc:`HostingCapacityError` and :exc:`py:ValueError`.
    """
    exit_code = 4
    module = 'distflow-solver'


class Diverged(HostingCapacityError):
    """
    The DistFlow fixed-point iteration did not converge.

    This happens when the iteration cap is hit or a squared voltage drifts to
    zero or below, i.e. when the operating point is beyond the nose point.

    Attributes:

      iterations (int): Number of iterations performed.

      corner (:term:`string`): Label of the capability corner that was being
        solved, or `None`.

      direction (:term:`string`): Region direction ('upper' or 'lower') that
        was being validated, or `None`.
    """
    exit_code = 5
    module = 'distflow-solver'

    def __init__(self, message, iterations=None, corner=None,
                 direction=None):
        super(Diverged, self).__init__(message)
        self.iterations = iterations
        self.corner = corner
        self.direction = direction

    def __str__(self):
        msg = super(Diverged, self).__str__()
        tags = []
        if self.corner is not None:
            tags.append("corner {0}".format(self.corner))
        if self.direction is not None:
            tags.append("direction {0}".format(self.direction))
        if tags:
            msg = "{0} ({1})".format(msg, ", ".join(tags))
        return msg


class CapabilityError(HostingCapacityError, ValueError):
    """
    A capability record or capability case is malformed.

    Derived from :exc:`HostingCapacityError` and :exc:`py:ValueError`.
    """
    exit_code = 3
    module = 'hosting-capacity'


class ProgramError(HostingCapacityError):
    """
    Base class for errors of the region programs.
    """
    exit_code = 6
    module = 'hosting-capacity'


class InfeasibleProgram(ProgramError):
    """
    The voltage constraints of a region program cannot be met.

    Attributes:

      node: External id of the node with the worst voltage violation at the
        best point found, or `None`.

      excursion (float): Squared-voltage excursion of that node beyond its
        bound, in pu, or `None`.
    """

    def __init__(self, message, node=None, excursion=None):
        super(InfeasibleProgram, self).__init__(message)
        self.node = node
        self.excursion = excursion


class NonPositiveUpperBound(ProgramError):
    """
    No dispatchable node has a positive upper injection bound, so the upper
    program has no objective term.
    """
    pass


class NonNegativeLowerBound(ProgramError):
    """
    No dispatchable node has a negative lower injection bound, so the lower
    program has no objective term.
    """
    pass


class StatusMismatch(ProgramError):
    """
    A region is requested from program results that are not optimal, or whose
    model or direction does not fit.
    """
    pass


class InvalidRegion(ProgramError):
    """
    Program results violate the sign conditions of a region (a node with
    injection headroom that does not end up strictly positive in the upper
    direction, or strictly negative in the lower direction).
    """
    pass


class GridTooLarge(HostingCapacityError):
    """
    The brute-force oracle grid exceeds the allowed number of points, or the
    network has too many dispatchable nodes for a grid search.
    """
    exit_code = 6
    module = 'validation-harness'


class FeederFileError(HostingCapacityError):
    """
    Base class for errors in feeder files.
    """
    exit_code = 3
    module = 'cli-io'


class ParseError(FeederFileError):
    """
    A feeder file cannot be parsed.

    Attributes:

      line (int): Line number in the file where the error was detected, or
        `None` if the error is not tied to a line.

      reason (:term:`string`): Description of the problem.
    """

    def __init__(self, reason, line=None, path=None):
        if line is not None:
            msg = "{0}, line {1}: {2}".format(path or '<feeder>', line, reason)
        else:
            msg = "{0}: {1}".format(path or '<feeder>', reason)
        super(ParseError, self).__init__(msg)
        self.line = line
        self.reason = reason
        self.path = path


class UnsupportedVersion(FeederFileError):
    """
    The schema version of a feeder file is not supported.
    """
    pass


class IoError(HostingCapacityError):
    """
    Result files cannot be written or read.
    """
    exit_code = 7
    module = 'cli-io'
