"""Backend selection for the Monte-Carlo trial kernel.

The compiled Cython kernel is preferred when its extension module is
importable; otherwise the NumPy implementation is used. Both produce
bit-identical count tables. Set DLCZSIM_KERNEL=python or =compiled to
force a choice (forcing `compiled` raises if the extension is missing).
"""

import os

from . import _mc_py

try:
    from . import _mc as _mc_compiled
except ImportError:
    _mc_compiled = None


def available_backends() -> dict:
    """Name -> simulate_batch callable for every importable backend."""
    backends = {"python": _mc_py.simulate_batch}
    if _mc_compiled is not None:
        backends["compiled"] = _mc_compiled.simulate_batch
    return backends


def _select():
    forced = os.environ.get("DLCZSIM_KERNEL", "").strip().lower()
    if forced == "python":
        return "python", _mc_py.simulate_batch
    if forced == "compiled":
        if _mc_compiled is None:
            raise ImportError(
                "DLCZSIM_KERNEL=compiled but the extension is not built; "
                "run `python setup.py build_ext --inplace` or reinstall"
            )
        return "compiled", _mc_compiled.simulate_batch
    if forced:
        raise ImportError(f"unknown DLCZSIM_KERNEL value {forced!r}")
    if _mc_compiled is not None:
        return "compiled", _mc_compiled.simulate_batch
    return "python", _mc_py.simulate_batch


BACKEND, simulate_batch = _select()
