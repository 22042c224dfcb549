"""Kernel selection: compiled extension when present, numpy fallback otherwise.

Set ``METRICLAB_FORCE_PY=1`` to force the pure-Python kernels (used by the
parity tests and the benchmark).
"""

from __future__ import annotations

import os

from metriclab import _pykernels

if os.environ.get("METRICLAB_FORCE_PY") == "1":
    _impl = _pykernels
else:
    try:
        from metriclab import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

IMPL = _impl.IMPL
pairwise_lp = _impl.pairwise_lp
cross_lp = _impl.cross_lp
ckr_assign = _impl.ckr_assign
pair_sep_accumulate = _impl.pair_sep_accumulate
slack_min = _impl.slack_min
