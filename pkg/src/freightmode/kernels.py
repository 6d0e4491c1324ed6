"""Kernel back-end selection.

The compiled extension is used when it imports; otherwise, or when
``FREIGHTMODE_PURE_PYTHON=1`` is set, the numpy implementations are used.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FREIGHTMODE_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

build_classifier_tree = _impl.build_classifier_tree
build_regressor_tree = _impl.build_regressor_tree
apply_tree = _impl.apply_tree
tree_shap = _impl.tree_shap

__all__ = [
    "BACKEND",
    "build_classifier_tree",
    "build_regressor_tree",
    "apply_tree",
    "tree_shap",
]
