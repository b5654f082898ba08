# -*- coding: utf-8 -*-
#
# coopnav documentation build configuration file

from importlib.metadata import PackageNotFoundError, version as get_version
import sys

# put the source tree ahead of any installed copy
sys.path.insert(0, "..")

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'coopnav'
copyright = u'2026, coopnav developers'

try:
    release = get_version('coopnav')
except PackageNotFoundError:
    release = '0.1.0'
version = '.'.join(release.split('.')[:3])

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'coopnavdoc'

latex_documents = [
  ('index', 'coopnav.tex', u'coopnav Documentation',
   u'coopnav developers', 'manual'),
]

man_pages = [
    ('index', 'coopnav', u'coopnav Documentation',
     [u'coopnav developers'], 1)
]

linkcheck_timeout = 15
