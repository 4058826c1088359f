"""Select the kernel implementation at import time.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback in ``_pykernels`` is.  Setting ``DBSTEXC_PURE_PYTHON=1``
forces the fallback.
"""

import os

from . import _pykernels as python

compiled = None
if not os.environ.get("DBSTEXC_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled if compiled is not None else python
IMPLEMENTATION = "compiled" if compiled is not None else "python"

scan_radius = active.scan_radius
kd_radius = active.kd_radius
expand_all = active.expand_all


def implementations():
    """Mapping of available implementation names to kernel modules."""
    impls = {"python": python}
    if compiled is not None:
        impls["compiled"] = compiled
    return impls
