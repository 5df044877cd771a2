# -*- coding: utf-8 -*-
#
# Sphinx configuration for the pyHybridAct documentation.

import os
import re
import sys

sys.path.insert(0, os.path.abspath('../../'))

# -- Project information -----------------------------------------------------

project = 'pyHybridAct'
copyright = '2026, The pyHybridAct Authors'
author = 'The pyHybridAct Authors'

with open(os.path.join(os.path.dirname(__file__), '../../pyHybridAct/__init__.py')) as fh:
    release = re.search(r'^__version__ = "([^"]+)"', fh.read(), re.M).group(1)
version = '.'.join(release.split('.')[:2])

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
exclude_patterns = []
pygments_style = None

# -- Options for HTML output -------------------------------------------------

html_theme = 'alabaster'
htmlhelp_basename = 'pyHybridActdoc'

# -- Options for LaTeX / manual page output ----------------------------------

latex_documents = [
    (master_doc, 'pyHybridAct.tex', 'pyHybridAct Documentation',
     author, 'manual'),
]

man_pages = [
    (master_doc, 'hybridact', 'pyHybridAct Documentation',
     [author], 1)
]
