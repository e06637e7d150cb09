"""Pure-Python/numpy implementation of the Bellman kernels.

Used when the compiled extension is unavailable.  Action values are summed
left to right from 0.0, transition position by position, which reproduces the
compiled kernel's rounding exactly for synchronous sweeps.
"""

from __future__ import annotations

import numpy as np


def _expand(ptr: np.ndarray, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flatten the index ranges ``ptr[i]:ptr[i+1]`` for ``i`` in ``ids``."""
    starts = ptr[ids]
    counts = ptr[ids + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), counts
    offsets = np.repeat(np.cumsum(counts) - counts, counts)
    flat = np.repeat(starts, counts) + (np.arange(total, dtype=np.int64) - offsets)
    return flat, counts


def _values(action_ptr, targets, probs, actions, f) -> np.ndarray:
    starts = action_ptr[actions]
    lens = action_ptr[actions + 1] - starts
    q = np.zeros(len(actions), dtype=np.float64)
    if len(actions) == 0:
        return q
    for k in range(int(lens.max())):
        live = lens > k
        idx = starts[live] + k
        q[live] += probs[idx] * f[targets[idx]]
    return q


def action_values(action_ptr, targets, probs, actions, f, out) -> None:
    out[: len(actions)] = _values(action_ptr, targets, probs, np.asarray(actions), f)


def all_action_values(action_ptr, targets, probs, f, out) -> None:
    acts = np.arange(len(action_ptr) - 1, dtype=np.int64)
    out[:] = _values(action_ptr, targets, probs, acts, f)


def backup(state_ptr, action_ptr, targets, probs, is_max, states, src, dst) -> None:
    states = np.asarray(states, dtype=np.int64)
    if len(states) == 0:
        return
    if src is dst or np.shares_memory(src, dst):
        _gauss_seidel(state_ptr, action_ptr, targets, probs, is_max, states, dst)
        return
    acts, counts = _expand(state_ptr, states)
    q = _values(action_ptr, targets, probs, acts, src)
    bounds = np.cumsum(counts) - counts
    hi = np.maximum.reduceat(q, bounds)
    lo = np.minimum.reduceat(q, bounds)
    dst[states] = np.where(is_max[states].astype(bool), hi, lo)


def _gauss_seidel(state_ptr, action_ptr, targets, probs, is_max, states, f) -> None:
    sp = state_ptr.tolist()
    ap = action_ptr.tolist()
    tg = targets.tolist()
    pr = probs.tolist()
    mx = is_max.tolist()
    for s in states.tolist():
        best = None
        for a in range(sp[s], sp[s + 1]):
            acc = 0.0
            for k in range(ap[a], ap[a + 1]):
                acc = acc + pr[k] * f[tg[k]]
            if best is None or (acc > best if mx[s] else acc < best):
                best = acc
        f[s] = best
