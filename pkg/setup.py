# Copyright 2026 The pyHybridAct Authors
# 
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
# 
#     http://www.apache.org/licenses/LICENSE-2.0
# 
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import re

import setuptools

try:
    from sphinx.setup_command import BuildDoc
    cmdclass = {'build_sphinx': BuildDoc}
except ImportError:
    cmdclass = {}

with open("README.md", "r") as fh:
    long_description = fh.read()

# Read without importing: the package needs numpy at import time
with open("pyHybridAct/__init__.py", "r") as fh:
    version = re.search(r'^__version__ = "([^"]+)"', fh.read(), re.M).group(1)

name = 'pyHybridAct'
release = str(version)

command_options = {}
if cmdclass:
    command_options = {
        'build_sphinx': {
        'project': ('setup.py', name),
        'version': ('setup.py', version),
        'release': ('setup.py', release),
        'source_dir': ('setup.py', 'docs/source')}}

setuptools.setup(
    name=name,
    version=version,
    description="S3/S4 hybrid activation functions, from-scratch dense networks and the studies comparing them",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests"]),
    python_requires=">=3.8",
    install_requires=['numpy', 'scipy', 'pandas'],
    extras_require={'test': ['pytest']},
    entry_points={
        'console_scripts': ['hybridact = pyHybridAct.cli:main'],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    cmdclass=cmdclass,
    command_options=command_options,
)
