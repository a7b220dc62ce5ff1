"""Pure-numpy segment reduction used when the compiled core is unavailable.

Both backends implement the same contract and must return bit-identical
results: the reduction only takes maxima, comparisons and single
divisions of float64 values that were produced by the caller, all of
which are exact or correctly-rounded identically in C and in numpy.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_BIG = np.iinfo(np.int64).max


def reduce_skyline(xs, hs, starts, x0, h0, want_beyond):
    """Blockage reduction of ragged building batches.

    Parameters
    ----------
    xs, hs : float64 arrays, flat building locations / heights.
    starts : int64 array of n+1 offsets; segment r is ``xs[starts[r]:starts[r+1]]``.
    x0, h0 : float64 arrays (n,), per-segment observer location and height.
    want_beyond : bool, also reduce the view past the dominant blocker.

    Returns
    -------
    tan_max : (n,) float64, max of (h-h0)/(x-x0) over x > x0, h > h0; 0 if none.
    arg : (n,) int64, flat index of that blocker (ties: smallest x); -1 if none.
    n_before : (n,) int64, segment buildings strictly left of the blocker.
    tan_beyond : (n,) float64, max of (h-h+)/(x-x+) past the blocker; 0 if
        none or if ``want_beyond`` is false.
    """
    n = len(starts) - 1
    tan_max = np.zeros(n)
    arg = np.full(n, -1, dtype=np.int64)
    n_before = np.zeros(n, dtype=np.int64)
    tan_beyond = np.zeros(n)
    if len(xs) == 0 or n == 0:
        return tan_max, arg, n_before, tan_beyond

    counts = np.diff(starts)
    seg = np.repeat(np.arange(n, dtype=np.int64), counts)
    dx = xs - x0[seg]
    dh = hs - h0[seg]
    valid = (dx > 0.0) & (dh > 0.0)
    t = np.where(valid, dh / np.where(dx > 0.0, dx, 1.0), -np.inf)

    nonempty = counts > 0
    heads = starts[:-1][nonempty]
    # Empty segments occupy zero flat slots, so the starts of the nonempty
    # segments already delimit exactly one reduceat slice per segment.
    best = np.maximum.reduceat(t, heads)
    seg_max = np.full(n, -np.inf)
    seg_max[nonempty] = best

    found = np.isfinite(seg_max) & (seg_max > 0.0)
    tan_max[found] = seg_max[found]

    # Tie rule: among buildings attaining the max tangent pick the nearest.
    is_max = valid & (t == seg_max[seg])
    xcand = np.where(is_max, xs, np.inf)
    xbest = np.full(n, np.inf)
    xbest[nonempty] = np.minimum.reduceat(xcand, heads)
    flat = np.arange(len(xs), dtype=np.int64)
    jcand = np.where(is_max & (xs == xbest[seg]), flat, _BIG)
    jbest = np.full(n, _BIG, dtype=np.int64)
    jbest[nonempty] = np.minimum.reduceat(jcand, heads)
    arg[found] = jbest[found]

    has = found[seg]
    n_before_flat = (xs < xbest[seg]) & has
    cnt = np.zeros(n, dtype=np.int64)
    cnt[nonempty] = np.add.reduceat(n_before_flat.astype(np.int64), heads)
    n_before[found] = cnt[found]

    if want_beyond:
        hbest = np.where(found, hs[np.where(arg >= 0, arg, 0)], np.inf)
        dx2 = xs - xbest[seg]
        dh2 = hs - hbest[seg]
        valid2 = (dx2 > 0.0) & (dh2 > 0.0) & has
        t2 = np.where(valid2, dh2 / np.where(dx2 > 0.0, dx2, 1.0), -np.inf)
        b2 = np.full(n, -np.inf)
        b2[nonempty] = np.maximum.reduceat(t2, heads)
        sel = found & np.isfinite(b2) & (b2 > 0.0)
        tan_beyond[sel] = b2[sel]
    return tan_max, arg, n_before, tan_beyond
