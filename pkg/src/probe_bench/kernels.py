"""SGD backend selection.

The compiled Cython kernel is preferred when importable; otherwise the
pure-numpy kernel is used. PROBE_BENCH_BACKEND={cython,python} pins the
choice explicitly (pinning "cython" fails loudly if the extension is
missing rather than silently falling back).
"""

import os

from . import _sgd_py

try:
    from . import _sgd
except ImportError:
    _sgd = None

_BACKENDS = {"python": _sgd_py}
if _sgd is not None:
    _BACKENDS["cython"] = _sgd


def get_backend(name: str | None = None):
    """Return the kernel module for `name`, or the active default."""
    if name is None:
        name = os.environ.get("PROBE_BENCH_BACKEND")
    if name is None:
        return _sgd if _sgd is not None else _sgd_py
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {sorted(_BACKENDS)}"
        ) from None


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def active_backend_name() -> str:
    return get_backend().BACKEND
