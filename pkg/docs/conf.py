# Sphinx configuration for the Piecewise Flow docs.
#
# Build from this directory with `make html`; deploy.sh publishes the result.
import sphinx_rtd_theme
import os
import sys
sys.path.insert(0, os.path.abspath(os.path.join(os.getcwd(), '..', 'src')))
sys.path.insert(0, os.path.abspath(os.path.join(os.getcwd(), '..')))


# -- Project information -----------------------------------------------------

project = 'Piecewise Flow'
copyright = '2022, Piecewise Flow developers'
author = 'Piecewise Flow developers'

# The short X.Y version
version = '0.2'

# The full version, including alpha/beta/rc tags
release = '0.2.0'


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'sphinx.ext.todo',
    'sphinx.ext.mathjax',
    'sphinx_rtd_theme',
    'sphinx.ext.napoleon',
]

# Google style docstrings only ('''Args:/Returns:''' blocks)
napoleon_google_docstring = True
napoleon_numpy_docstring = False

# keep the source order of the modules (class first, then its operations)
autodoc_member_order = 'bysource'

# scipy and shapely are only needed to import the modules, not to render them
autodoc_mock_imports = ['scipy', 'shapely']

templates_path = ['_templates']

language = 'en'

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']


# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"
html_title = 'Piecewise Flow'
html_theme_options = {
    'navigation_depth': 3,
    'collapse_navigation': False,
}

html_static_path = ['_static']


# -- Options for todo extension ----------------------------------------------

todo_include_todos = True
