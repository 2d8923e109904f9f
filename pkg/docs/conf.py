# -*- coding: utf-8 -*-
#
# lowlight-pairs documentation build configuration file.
import sys
import os

# Make the package importable without installing it.
sys.path.insert(0, os.path.abspath('..'))
import lowlight_pairs


extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'numpydoc',
]
numpydoc_show_class_members = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'lowlight-pairs'
author = 'lowlight-pairs developers'
copyright = '2026, ' + author

# The full version, including alpha/beta/rc tags.
release = lowlight_pairs.__version__
# The short X.Y version.
version = '.'.join(release.split('.')[:2])

language = 'en'
exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'lowlight_pairsdoc'

latex_documents = [
    (master_doc, 'lowlight_pairs.tex', 'lowlight-pairs Documentation',
     author, 'manual'),
]
man_pages = [
    (master_doc, 'lowlight-pairs', 'lowlight-pairs Documentation',
     [author], 1)
]
