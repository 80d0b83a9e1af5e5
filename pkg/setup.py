#!/usr/bin/env python
"""
Python setup script for the hosting-capacity project.
"""

import os

import setuptools


def get_version(version_file):
    """
    Return the __version__ variable set by executing the version file, which
    must not import any requirements of the package.
    """
    with open(version_file, 'r') as fp:
        version_source = fp.read()
    _globals = {}
    exec(version_source, _globals)  # pylint: disable=exec-used
    return _globals['__version__']


def get_requirements(requirements_file):
    """
    Return the requirement lines of a pip requirements file, without comments
    and empty lines.
    """
    with open(requirements_file, 'r', encoding='utf-8') as fp:
        lines = [line.strip() for line in fp]
    return [line for line in lines if line and not line.startswith('#')]


def read_file(a_file):
    """Return the content of a text file."""
    with open(a_file, 'r', encoding='utf-8') as fp:
        return fp.read()


# pylint: disable=invalid-name
install_requires = get_requirements('requirements.txt')

package_version = get_version(
    os.path.join('hosting_capacity', '_version.py'))

setuptools.setup(
    name='hosting-capacity',
    version=package_version,
    packages=[
        'hosting_capacity',
    ],
    package_data={
        'hosting_capacity': ['data/*.json'],
    },
    include_package_data=True,  # Includes MANIFEST.in files into sdist
    entry_points={
        'console_scripts': [
            'hc = hosting_capacity._cli:main',
        ],
    },
    install_requires=install_requires,
    description="Operating regions of dispatchable injections on radial "
    "distribution feeders",
    long_description=read_file('README.rst'),
    long_description_content_type='text/x-rst',
    license="Apache Software License 2.0",
    author="The hosting-capacity authors",
    zip_safe=False,  # The fixtures are read from the package directory
    platforms='any',

    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering',
    ]
)
