"""Hot loops of the Monte Carlo oracle, with a numba and a pure-numpy backend.

The backend is chosen once at import: numba when it is importable, unless
``WIENERFIM_DISABLE_NUMBA`` is set to a truthy value.  ``get_backend`` gives
explicit access to either one (tests and benchmarks use it).
"""

import importlib
import os
from types import ModuleType

_FALSY = {"", "0", "false", "no", "off"}


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def numba_disabled() -> bool:
    return os.environ.get("WIENERFIM_DISABLE_NUMBA", "").strip().lower() not in _FALSY


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        name = "numpy" if numba_disabled() or not _numba_available() else "numba"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    return importlib.import_module(f"._{name}", __name__)


backend = get_backend()
BACKEND_NAME = backend.__name__.rsplit("_", 1)[-1]

state_recursion = backend.state_recursion
score_outer = backend.score_outer
simulate_accumulate = backend.simulate_accumulate
