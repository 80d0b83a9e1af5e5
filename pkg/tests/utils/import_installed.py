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
import_installed - Import the package under test either from the work tree
or from its installed location.
"""

import importlib
import os
import sys

__all__ = ['import_installed']

#: Environment variable selecting the installed package. The value 'DEBUG'
#: also prints where the package was loaded from.
TEST_INSTALLED_ENVVAR = 'TEST_INSTALLED'


def _debug(mode, message):
    if mode == 'DEBUG':
        print("Debug: {0}".format(message))


def _prefer_installed(mode):
    """
    Move the work tree to the end of the module search path, so that an
    installed version of the package takes precedence.
    """
    if '' in sys.path:
        _debug(mode, "Removing '' from module search path")
        sys.path.remove('')
    cwd = os.getcwd()
    while cwd in sys.path:
        sys.path.remove(cwd)
    _debug(mode, "Appending {0} to end of module search path".format(cwd))
    sys.path.append(cwd)


def import_installed(module_name):
    """
    Import a package by its absolute name and return it.

    If the environment variable ``TEST_INSTALLED`` is set to a non-empty
    value, the current directory is moved to the end of the module search
    path first, so the installed package (e.g. from ``pip install .`` into a
    virtualenv) is tested instead of the package in the work tree. Otherwise
    the normal module search path applies.

    Example::

        from ..utils.import_installed import import_installed
        hosting_capacity = import_installed('hosting_capacity')
        from hosting_capacity import FeederNetwork
    """
    mode = os.getenv(TEST_INSTALLED_ENVVAR)
    if mode:
        _prefer_installed(mode)
    already = module_name in sys.modules
    module = importlib.import_module(module_name)
    _debug(mode, "{0} module {1} from: {2}".format(
        module_name, "was already loaded" if already else "newly loaded",
        module.__file__))
    return module
