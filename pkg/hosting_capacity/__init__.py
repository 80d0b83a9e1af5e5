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
hosting-capacity - Operating regions of dispatchable injections on radial
distribution feeders
"""

from ._exceptions import *  # noqa: F403,F401
from ._units import *  # noqa: F403,F401
from ._network import *  # noqa: F403,F401
from ._matrices import *  # noqa: F403,F401
from ._capability import *  # noqa: F403,F401
from ._distflow import *  # noqa: F403,F401
from ._region import *  # noqa: F403,F401
from ._validation import *  # noqa: F403,F401
from ._oracle import *  # noqa: F403,F401
from ._io import *  # noqa: F403,F401
from ._pipeline import *  # noqa: F403,F401
from . import _version

#: The full version of this package including any development levels, as a
#: :term:`string`.
#:
#: Possible formats for this version string are:
#:
#: * "M.N.P.dev1": Development level 1 of a not yet released version M.N.P
#: * "M.N.P": A released version M.N.P
__version__ = _version.__version__
