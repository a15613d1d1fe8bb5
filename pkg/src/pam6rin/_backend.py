"""Kernel backend selection.

The compiled extension is used when importable; set ``PAM6RIN_BACKEND=python``
to force the numpy fallback.
"""
import importlib
import os

from . import _pykernels


def _load(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("pam6rin._ckernels")
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list:
    out = ["python"]
    try:
        _load("cython")
    except ImportError:
        pass
    else:
        out.insert(0, "cython")
    return out


def get_kernels(name: str | None = None):
    if name is not None:
        return _load(name)
    choice = os.environ.get("PAM6RIN_BACKEND", "").strip().lower()
    if choice:
        return _load(choice)
    try:
        return _load("cython")
    except ImportError:
        return _pykernels


kernels = get_kernels()


def use(name: str | None):
    """Switch the active backend; returns the previous one."""
    global kernels
    prev = kernels
    kernels = get_kernels(name) if name is not None else get_kernels()
    return prev
