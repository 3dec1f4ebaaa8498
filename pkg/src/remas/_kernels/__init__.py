"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy reference
is the fallback.  Set REMAS_BACKEND=python or =cython to force a choice
(forcing cython raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import pyref

_choice = os.environ.get("REMAS_BACKEND", "").strip().lower()

if _choice == "python":
    impl = pyref
elif _choice == "cython":
    from . import _core as impl  # noqa: F401
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pyref

BACKEND = impl.BACKEND

ucb_select_batch = impl.ucb_select_batch
discounted_update_batch = impl.discounted_update_batch
window_update_batch = impl.window_update_batch
ledger_update_batch = impl.ledger_update_batch
maximin_batch = impl.maximin_batch
mix_batch = impl.mix_batch
