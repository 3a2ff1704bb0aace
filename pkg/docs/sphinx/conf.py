"""Sphinx configuration for rtmpc-il documentation."""

import os
import sys

sys.path.insert(0, os.path.abspath("../../src"))

project = "rtmpc-il"
copyright = "2026, Yusuke Watanabe"
author = "Yusuke Watanabe"
release = "0.1.0"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx_rtd_theme",
    "myst_parser",
    "sphinx_copybutton",
    "sphinx_autodoc_typehints",
]

autodoc_default_options = {
    "members": True,
    "member-order": "bysource",
    "undoc-members": True,
}
# Only needed for import at build time; the API pages do not document them
autodoc_mock_imports = ["scitex_config", "scitex_dev"]
autosummary_generate = True

# Docstrings mix Google style (core) and numpy style (paths)
napoleon_google_docstring = True
napoleon_numpy_docstring = True
napoleon_use_rtype = True
napoleon_attr_annotations = True

exclude_patterns = ["_build"]
source_suffix = {".rst": "restructuredtext", ".md": "markdown"}
myst_enable_extensions = ["dollarmath", "colon_fence", "deflist"]

html_theme = "sphinx_rtd_theme"
html_theme_options = {"navigation_depth": 3, "sticky_navigation": True}
html_title = f"{project} v{release}"
html_context = {
    "display_github": True,
    "github_user": "ywatanabe1989",
    "github_repo": "rtmpc-il",
    "github_version": "main",
    "conf_py_path": "/docs/sphinx/",
}

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
}
