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

# Sphinx config file for hosting-capacity project.
#
# For the options, see
# https://www.sphinx-doc.org/en/stable/usage/configuration.html

import sys
import os


def get_version(version_file):
    """
    Execute the version file and return its __version__ variable.

    The version file must not import any requirements of the package, so that
    it can be executed in a fresh Python environment.
    """
    with open(version_file, 'r') as fp:
        version_source = fp.read()
    _globals = {}
    exec(version_source, _globals)  # pylint: disable=exec-used
    return _globals['__version__']


sys.path.insert(0, os.path.abspath('..'))

needs_sphinx = '1.7'
extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.intersphinx',
    'sphinx.ext.todo',
    'sphinx.ext.viewcode',
    'sphinx_rtd_theme',
    'autodocsumm',
]
templates_path = ['_templates']
source_suffix = '.rst'
source_encoding = 'utf-8'

# The docs are built from the repo root locally and from docs/ on RTD.
on_rtd = os.environ.get('READTHEDOCS', None) == 'True'
master_doc = 'index' if on_rtd else 'docs/index'

project = u'hosting-capacity'
author = u"The hosting-capacity authors"
_short_description = u"Operating regions of dispatchable injections on " \
    u"radial distribution feeders"
version = get_version(os.path.join('..', 'hosting_capacity', '_version.py'))
release = version

language = None
highlight_language = 'python3'
exclude_patterns = ["README.rst", ".tox", ".git", "design", "tests", "dist",
                    "build_doc"]
add_function_parentheses = True
pygments_style = 'sphinx'
todo_include_todos = True

# Google style docstrings with "Parameters:", "Returns:" and "Raises:".
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_special_with_doc = True
napoleon_use_ivar = True
napoleon_use_param = True
napoleon_use_rtype = True

html_theme = 'sphinx_rtd_theme'
html_theme_options = {
    'style_external_links': False,
    'collapse_navigation': False,
}
html_show_copyright = False
htmlhelp_basename = 'hosting_capacity_doc'

man_pages = [
    (master_doc, 'hosting_capacity', _short_description, [author], 1)
]

autoclass_content = "both"
autodoc_member_order = "bysource"
autodoc_docstring_signature = True

intersphinx_mapping = {
    'py': ('https://docs.python.org/3', None),
    'py3': ('https://docs.python.org/3/', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'pandas': ('https://pandas.pydata.org/docs/', None),
    'networkx': ('https://networkx.org/documentation/stable/', None),
    'immutable_views': ('https://immutable-views.readthedocs.io/en/latest/',
                        None),
}
intersphinx_cache_limit = 5
