"""Exact reachability values of Markov chains.

Small systems use dense Gaussian elimination with partial pivoting, large
ones a sparse direct solve.  States that cannot reach a positive exit are
removed beforehand, which keeps the system non-singular.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix, identity
from scipy.sparse.csgraph import breadth_first_order
from scipy.sparse.linalg import spsolve

from ssgvi.model import MarkovChain

#: Largest system solved densely.
DENSE_LIMIT = 400


class SingularSystemError(RuntimeError):
    pass


def gaussian_elimination(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = len(b)
    if A.shape != (n, n):
        raise ValueError(f"shape mismatch: {A.shape} vs {n}")
    tol = 1e-12 * max(1.0, float(np.abs(A).max(initial=0.0)))
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) <= tol:
            raise SingularSystemError(f"zero pivot in column {k}")
        if p != k:
            A[[k, p]] = A[[p, k]]
            b[[k, p]] = b[[p, k]]
        f = A[k + 1 :, k] / A[k, k]
        A[k + 1 :, k:] -= np.outer(f, A[k, k:])
        b[k + 1 :] -= f * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - A[k, k + 1 :] @ x[k + 1 :]) / A[k, k]
    return x


def positive_reach(
    n: int, states: np.ndarray, e_row: np.ndarray, e_tgt: np.ndarray, positive: np.ndarray
) -> np.ndarray:
    """Mask over ``states`` of rows that can reach a positive exit.

    Rows are given in coordinate form: entry ``k`` of row ``e_row[k]`` goes to
    state ``e_tgt[k]``.  ``positive`` marks exits (states outside ``states``)
    whose fixed value is positive.
    """
    m = len(states)
    pos = np.full(n, -1, dtype=np.int64)
    pos[states] = np.arange(m)
    inner = pos[e_tgt]
    src = np.where(inner >= 0, inner, m)
    hit = (inner >= 0) | positive[e_tgt]
    # reversed edges target -> row, with node m standing for every positive exit
    g = csr_matrix(
        (np.ones(int(hit.sum()), dtype=np.int8), (src[hit], e_row[hit])), shape=(m + 1, m + 1)
    )
    seen = breadth_first_order(g, m, directed=True, return_predecessors=False)
    mask = np.zeros(m + 1, dtype=bool)
    mask[seen] = True
    return mask[:m]


def solve_linear(
    n: int,
    states: np.ndarray,
    e_row: np.ndarray,
    e_tgt: np.ndarray,
    e_prob: np.ndarray,
    fixed: np.ndarray,
) -> np.ndarray:
    """Solve x = P x + P_exit fixed over ``states``; entries leaving ``states``
    contribute their ``fixed`` value."""
    m = len(states)
    if m == 0:
        return np.empty(0)
    pos = np.full(n, -1, dtype=np.int64)
    pos[states] = np.arange(m)
    col = pos[e_tgt]
    inner = col >= 0
    rhs = np.zeros(m)
    np.add.at(rhs, e_row[~inner], e_prob[~inner] * fixed[e_tgt[~inner]])
    if m <= DENSE_LIMIT:
        A = np.eye(m)
        np.add.at(A, (e_row[inner], col[inner]), -e_prob[inner])
        return gaussian_elimination(A, rhs)
    P = coo_matrix((e_prob[inner], (e_row[inner], col[inner])), shape=(m, m)).tocsc()
    x = spsolve((identity(m, format="csc") - P).tocsc(), rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(f"sparse solve failed on {m} states")
    return x


def solve_rows(
    f: np.ndarray, states: np.ndarray, e_row: np.ndarray, e_tgt: np.ndarray, e_prob: np.ndarray
) -> np.ndarray:
    """Exact values of ``states`` under fixed rows, other entries of ``f``
    being constants.  Returns an updated copy of ``f``."""
    n = len(f)
    out = f.copy()
    out[states] = 0.0
    if not len(states):
        return out
    outside = np.ones(n, dtype=bool)
    outside[states] = False
    good = positive_reach(n, states, e_row, e_tgt, outside & (f > 0.0))
    keep = states[good]
    if not len(keep):
        return out
    relabel = np.full(len(states), -1, dtype=np.int64)
    relabel[good] = np.arange(len(keep))
    sel = good[e_row]
    x = solve_linear(n, keep, relabel[e_row[sel]], e_tgt[sel], e_prob[sel], out)
    out[keep] = np.clip(x, 0.0, 1.0)
    return out


def solve_markov_chain(chain: MarkovChain, L_hint: np.ndarray | None = None) -> np.ndarray:
    """Reachability probability of the chain's goal set from every state.

    States with value zero are taken from ``L_hint`` when given (exactly the
    zero entries) and found by graph search otherwise.
    """
    n = chain.n
    goals = np.zeros(n, dtype=bool)
    goals[list(chain.goals)] = True
    lens = np.array([len(r) for r in chain.rows], dtype=np.int64)
    e_row = np.repeat(np.arange(n, dtype=np.int64), lens)
    e_tgt = np.fromiter((t for r in chain.rows for t in r.targets), dtype=np.int64, count=int(lens.sum()))
    e_prob = np.fromiter((p for r in chain.rows for p in r.probs), dtype=np.float64, count=int(lens.sum()))
    fixed = goals.astype(np.float64)
    if L_hint is None:
        states = np.flatnonzero(~goals)
        sel = ~goals[e_row]
        relabel = np.full(n, -1, dtype=np.int64)
        relabel[states] = np.arange(len(states))
        rows = relabel[e_row[sel]]
        good = positive_reach(n, states, rows, e_tgt[sel], goals)
        keep = states[good]
    else:
        keep = np.flatnonzero(~goals & (np.asarray(L_hint) > 0.0))
    relabel = np.full(n, -1, dtype=np.int64)
    relabel[keep] = np.arange(len(keep))
    sel = relabel[e_row] >= 0
    x = solve_linear(n, keep, relabel[e_row[sel]], e_tgt[sel], e_prob[sel], fixed)
    out = fixed.copy()
    out[keep] = x
    return out
