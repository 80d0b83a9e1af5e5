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
Version of the hosting-capacity package.

This module must be exec-able standalone, without depending on any other
packages or on importability of the other modules of this package, because
setup.py executes it to obtain the version.
"""

# For a description, see __init__.py.
__version__ = '0.1.0.dev1'
