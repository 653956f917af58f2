"""Bandwidth allocation primitives over integer per-interval port budgets.

All functions mutate the ``rem_e`` / ``rem_i`` arrays (remaining egress and
ingress bytes per port for the current interval) in place.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def aon_rate(src, dst, rem_e, rem_i) -> int:
    """Equal per-flow budget for granting all given flows at once, or 0.

    A grant needs positive remaining capacity on every touched port side; the
    common rate is bounded by each side's remainder split over the coflow's
    flows on that side.
    """
    if len(src) == 0:
        return 0
    pe, me = np.unique(src, return_counts=True)
    pi, mi = np.unique(dst, return_counts=True)
    ce, ci = rem_e[pe], rem_i[pi]
    if (ce <= 0).any() or (ci <= 0).any():
        return 0
    r = min(int((ce // me).min()), int((ci // mi).min()))
    if r <= 0:
        return 0
    rem_e[pe] -= r * me
    rem_i[pi] -= r * mi
    return r


def work_conserve(idx, src, dst, rem_e, rem_i, budget) -> None:
    """Greedy fill: walk flows ``idx`` in order, each takes min(src, dst) leftover."""
    idx = np.asarray(idx)
    while len(idx):
        ok = (rem_e[src[idx]] > 0) & (rem_i[dst[idx]] > 0)
        if not ok.any():
            return
        j = int(np.argmax(ok))
        f = idx[j]
        s, d = src[f], dst[f]
        g = min(rem_e[s], rem_i[d])
        budget[f] += g
        rem_e[s] -= g
        rem_i[d] -= g
        idx = idx[j + 1:]


def max_min_fair(src, dst, rem_e, rem_i, weight=None) -> np.ndarray:
    """Exact two-sided max-min fair shares, floored to whole bytes.

    Progressive filling with rational arithmetic: repeatedly find the port
    side(s) with the smallest fair share, fix every flow crossing them at that
    share, subtract, and continue with the rest. ``weight`` gives a flow
    multiplicity (used when identical src/dst pairs are aggregated).
    Returns per-entry integer budgets and debits ``rem_e``/``rem_i``.
    """
    n = len(src)
    out = np.zeros(n, np.int64)
    if n == 0:
        return out
    w = np.ones(n, np.int64) if weight is None else np.asarray(weight, np.int64)
    cap_e = {int(p): Fraction(int(rem_e[p])) for p in np.unique(src)}
    cap_i = {int(p): Fraction(int(rem_i[p])) for p in np.unique(dst)}
    live = np.ones(n, bool)
    while live.any():
        ls, ld, lw = src[live], dst[live], w[live]
        pe, inv_e = np.unique(ls, return_inverse=True)
        pi, inv_i = np.unique(ld, return_inverse=True)
        ne = np.bincount(inv_e, weights=lw).astype(np.int64)
        ni = np.bincount(inv_i, weights=lw).astype(np.int64)
        best = None
        for p, k in zip(pe.tolist(), ne.tolist()):
            s = cap_e[p] / k
            if best is None or s < best:
                best = s
        for p, k in zip(pi.tolist(), ni.tolist()):
            s = cap_i[p] / k
            if s < best:
                best = s
        be = [p for p, k in zip(pe.tolist(), ne.tolist()) if cap_e[p] / k == best]
        bi = [p for p, k in zip(pi.tolist(), ni.tolist()) if cap_i[p] / k == best]
        freeze = live & (np.isin(src, be) | np.isin(dst, bi))
        out[freeze] = best.numerator // best.denominator
        fs, fd, fw = src[freeze], dst[freeze], w[freeze]
        ue, ie = np.unique(fs, return_inverse=True)
        for p, k in zip(ue.tolist(), np.bincount(ie, weights=fw).astype(np.int64).tolist()):
            cap_e[p] -= best * k
        ui, ii = np.unique(fd, return_inverse=True)
        for p, k in zip(ui.tolist(), np.bincount(ii, weights=fw).astype(np.int64).tolist()):
            cap_i[p] -= best * k
        live &= ~freeze
    used_e = np.bincount(src, weights=out * w, minlength=len(rem_e)).astype(np.int64)
    used_i = np.bincount(dst, weights=out * w, minlength=len(rem_i)).astype(np.int64)
    rem_e -= used_e
    rem_i -= used_i
    return out
