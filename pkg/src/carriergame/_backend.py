"""Kernel selection: compiled ``_core`` when importable, else ``_pykernel``.

Set ``CARRIERGAME_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernel

python_kernel = _pykernel

try:
    from . import _core as compiled_kernel
except ImportError:  # extension not built
    compiled_kernel = None

if compiled_kernel is not None and os.environ.get("CARRIERGAME_BACKEND", "").lower() != "python":
    kernel = compiled_kernel
else:
    kernel = _pykernel

BACKEND = kernel.BACKEND
JACOBI, GAUSS_SEIDEL, ASYNC = _pykernel.JACOBI, _pykernel.GAUSS_SEIDEL, _pykernel.ASYNC


def get_kernel(name: str | None = None):
    """Kernel module by name (``"cython"``/``"python"``); ``None`` for the active one."""
    if name is None:
        return kernel
    if name == "python":
        return _pykernel
    if name == "cython":
        if compiled_kernel is None:
            raise ImportError("compiled kernel carriergame._core is not built")
        return compiled_kernel
    raise ValueError(f"unknown backend {name!r}")
