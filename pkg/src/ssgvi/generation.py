"""Random and handcrafted game generators.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``.  Draw
order for :func:`generate_random`: one uniform per state for the owner, then
the forward procedure in state order, then the backward procedure from the
last state down.  Within an action, each transition costs one target draw
(repeated on collision) followed by one increment draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ssgvi.graph import tarjan
from ssgvi.model import Action, Distribution, Player, SsgModel, UsageError

#: Redraws allowed in strict mode before a small closing entry is accepted.
STRICT_RETRIES = 100


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for a corpus of ``count`` models."""
    return np.random.SeedSequence(seed).spawn(count)


@dataclass(frozen=True)
class GenParams:
    n: int
    minimizer_prob: float = 0.5
    extra_action_geom: float = 0.875
    min_prob: float = 0.01
    max_transitions_per_action: int | None = None
    seed: int = 0
    strict_min_prob: bool = False

    def __post_init__(self) -> None:
        if self.n < 2:
            raise UsageError(f"n must be >= 2, got {self.n}")
        _check_common(self.minimizer_prob, self.extra_action_geom, self.min_prob)
        if self.max_transitions_per_action is not None and self.max_transitions_per_action < 1:
            raise UsageError("max_transitions_per_action must be >= 1")


@dataclass(frozen=True)
class TreeParams:
    n: int
    k: int = 2
    seed: int = 0
    minimizer_prob: float = 0.5
    extra_action_geom: float = 0.875
    min_prob: float = 0.01

    def __post_init__(self) -> None:
        if self.n < 2:
            raise UsageError(f"n must be >= 2, got {self.n}")
        if self.k < 1:
            raise UsageError(f"k must be >= 1, got {self.k}")
        _check_common(self.minimizer_prob, self.extra_action_geom, self.min_prob)


@dataclass(frozen=True)
class SccChainParams:
    n: int
    scc_size_min: int = 5
    scc_size_max: int = 20
    seed: int = 0
    minimizer_prob: float = 0.5
    extra_action_geom: float = 0.875
    min_prob: float = 0.01

    def __post_init__(self) -> None:
        if not 1 <= self.scc_size_min <= self.scc_size_max <= self.n:
            raise UsageError(
                f"need 1 <= scc_size_min <= scc_size_max <= n, got "
                f"{self.scc_size_min}, {self.scc_size_max}, {self.n}"
            )
        _check_common(self.minimizer_prob, self.extra_action_geom, self.min_prob)


def _check_common(minimizer_prob: float, geom: float, min_prob: float) -> None:
    if not 0.0 <= minimizer_prob <= 1.0:
        raise UsageError(f"minimizer_prob must lie in [0,1], got {minimizer_prob}")
    if not 0.0 < geom < 1.0:
        raise UsageError(f"extra_action_geom must lie in (0,1), got {geom}")
    if not 0.0 <= min_prob <= 1.0:
        raise UsageError(f"min_prob must lie in [0,1], got {min_prob}")


def _increment(rng: np.random.Generator, min_prob: float) -> float:
    # 1 - random() lies in (0, 1]
    return min_prob + (1.0 - min_prob) * (1.0 - rng.random())


def fill_action(
    entries: dict[int, float],
    pool: Sequence[int],
    rng: np.random.Generator,
    min_prob: float = 0.0,
    max_transitions: int | None = None,
) -> Distribution:
    """Complete a partial action into a distribution over ``pool``.

    Adds random increments to fresh targets until the mass reaches one or
    every pool state is used, then adjusts the most recently added entry so
    the total is exactly one.  ``entries`` is extended in place.
    """
    mass = 0.0
    for p in entries.values():
        mass += p
    last = next(reversed(entries)) if entries else None
    cap = len(pool) if max_transitions is None else min(len(pool), max_transitions)
    while mass < 1.0 and len(entries) < cap:
        while True:
            t = pool[int(rng.integers(len(pool)))]
            if t not in entries:
                break
        inc = _increment(rng, min_prob)
        entries[t] = inc
        mass += inc
        last = t
    if last is None:
        raise UsageError("cannot fill an action over an empty pool")
    if mass != 1.0:
        head = 0.0
        for t, p in entries.items():
            if t != last:
                head += p
        # closing adjustment: decrease on overshoot, increase when the pool ran out
        entries[last] = 1.0 - head
    pairs = [(t, p) for t, p in entries.items() if t != last] + [(last, entries[last])]
    return Distribution.from_pairs(pairs)


def _new_action(
    rng: np.random.Generator,
    pool: Sequence[int],
    min_prob: float,
    strict: bool,
    max_transitions: int | None = None,
    forced: int | None = None,
) -> Distribution:
    for _ in range(STRICT_RETRIES):
        entries: dict[int, float] = {}
        if forced is not None:
            entries[forced] = _increment(rng, min_prob)
        d = fill_action(entries, pool, rng, min_prob, max_transitions)
        if not strict or min(d.probs) >= min_prob:
            return d
    return d


def _extra_actions(rng: np.random.Generator, q: float) -> int:
    mean = q / (1.0 - q)
    m = int(rng.geometric(1.0 - q)) - 1
    return min(m, max(1, math.ceil(10 * mean)))


def _owners(rng: np.random.Generator, n: int, minimizer_prob: float) -> list[Player]:
    draws = rng.random(n)
    return [Player.MIN if u < minimizer_prob else Player.MAX for u in draws]


def _labelled(rows: list[list[Distribution]]) -> list[list[Action]]:
    return [[Action(f"a{i}", d) for i, d in enumerate(r)] for r in rows]


def _random_block(
    rng: np.random.Generator,
    states: Sequence[int],
    rows: list[list[Distribution]],
    min_prob: float,
    geom: float,
    strict: bool = False,
    max_transitions: int | None = None,
    skip: frozenset[int] = frozenset(),
) -> None:
    """Forward and backward procedure over ``states`` (targets stay inside)."""
    pool = list(states)
    incoming: set[int] = set()
    for i, s in enumerate(pool):
        if i == 0 or s in incoming:
            continue
        src = pool[int(rng.integers(i))]
        d = _new_action(rng, pool, min_prob, strict, max_transitions, forced=s)
        rows[src].append(d)
        incoming.update(t for t in d.targets if t != src)
    for s in reversed(pool):
        if s in skip:
            continue
        m = _extra_actions(rng, geom)
        if not rows[s]:
            m = max(m, 1)
        for _ in range(m):
            d = _new_action(rng, pool, min_prob, strict, max_transitions)
            rows[s].append(d)


def generate_random(params: GenParams) -> SsgModel:
    """Random game in which every state is reachable from state 0; the last
    state is the only goal."""
    rng = make_rng(params.seed)
    n = params.n
    owner = _owners(rng, n, params.minimizer_prob)
    rows: list[list[Distribution]] = [[] for _ in range(n)]
    goal = n - 1
    _random_block(
        rng,
        range(n),
        rows,
        params.min_prob,
        params.extra_action_geom,
        params.strict_min_prob,
        params.max_transitions_per_action,
        skip=frozenset([goal]),
    )
    return SsgModel.build(n, owner, _labelled(rows), 0, [goal])


def generate_tree(params: TreeParams) -> SsgModel:
    """Tree-shaped game: breadth-first children, ``k`` actions per inner node,
    leaf actions added in a final backward pass.  The last node is the goal."""
    rng = make_rng(params.seed)
    n, k = params.n, params.k
    owner = _owners(rng, n, params.minimizer_prob)
    pool = list(range(n))
    rows: list[list[Distribution]] = [[] for _ in range(n)]
    nxt = 1
    for s in range(n):
        if nxt >= n:
            break
        children = list(range(nxt, min(n, nxt + k)))
        nxt += len(children)
        for i in range(k):
            forced = children[i] if i < len(children) else None
            rows[s].append(_new_action(rng, pool, params.min_prob, False, forced=forced))
    goal = n - 1
    for s in reversed(range(n)):
        if rows[s] or s == goal:
            continue
        m = min(k, max(1, _extra_actions(rng, params.extra_action_geom)))
        for _ in range(m):
            rows[s].append(_new_action(rng, pool, params.min_prob, False))
    return SsgModel.build(n, owner, _labelled(rows), 0, [goal])


def _support_components(states: Sequence[int], rows: list[list[Distribution]]) -> list[list[int]]:
    """SCCs of the block's support graph, in topological order."""
    local = {s: i for i, s in enumerate(states)}
    ptr = [0]
    idx: list[int] = []
    for s in states:
        succ = sorted({local[t] for d in rows[s] for t in d.targets})
        idx.extend(succ)
        ptr.append(len(idx))
    comps = tarjan(ptr, idx, len(states))
    return [[states[i] for i in sorted(c)] for c in reversed(comps)]


def generate_scc_chain(params: SccChainParams) -> SsgModel:
    """Chain of random blocks, each turned into a single SCC.

    Blocks are appended until they hold at least ``n`` states; one extra goal
    state follows, entered from the last block.
    """
    rng = make_rng(params.seed)
    sizes: list[int] = []
    while sum(sizes) < params.n:
        sizes.append(int(rng.integers(params.scc_size_min, params.scc_size_max + 1)))
    total = sum(sizes) + 1
    goal = total - 1
    owner = _owners(rng, total, params.minimizer_prob)
    rows: list[list[Distribution]] = [[] for _ in range(total)]
    blocks: list[list[int]] = []
    start = 0
    for size in sizes:
        block = list(range(start, start + size))
        start += size
        _random_block(rng, block, rows, params.min_prob, params.extra_action_geom)
        comps = _support_components(block, rows)
        # back edges along the topological enumeration merge the block into one SCC
        for upper, lower in zip(comps, comps[1:]):
            src = lower[int(rng.integers(len(lower)))]
            dst = upper[int(rng.integers(len(upper)))]
            rows[src].append(_new_action(rng, block, params.min_prob, False, forced=dst))
        if blocks:
            prev = blocks[-1]
            src = prev[int(rng.integers(len(prev)))]
            rows[src].append(_new_action(rng, prev + [block[0]], params.min_prob, False, forced=block[0]))
        blocks.append(block)
    last = blocks[-1]
    src = last[int(rng.integers(len(last)))]
    rows[src].append(_new_action(rng, last + [goal], params.min_prob, False, forced=goal))
    return SsgModel.build(total, owner, _labelled(rows), 0, [goal])


# -- handcrafted models --------------------------------------------------------


def _d(*pairs: tuple[int, float]) -> Distribution:
    return Distribution.from_pairs(pairs)


def fig1() -> SsgModel:
    """Four-state example: s0 (Min) -a-> s1 (Max); s1 -b-> s0 or -c-> f/z."""
    s0, s1, f, z = range(4)
    actions = [
        [("a", _d((s1, 1.0)))],
        [("b", _d((s0, 1.0))), ("c", _d((f, 0.5), (z, 0.5)))],
        [("d", _d((f, 1.0)))],
        [("e", _d((z, 1.0)))],
    ]
    owner = [Player.MIN, Player.MAX, Player.MAX, Player.MIN]
    return SsgModel.build(4, owner, actions, s0, [f])


def tvi_chain(n: int) -> SsgModel:
    """Chain s_0..s_{n-1}, each looping or advancing with 0.5; the last one
    reaches the goal t=n with 0.6 and the sink z=n+1 with 0.4."""
    t, z = n, n + 1
    actions = []
    for i in range(n - 1):
        actions.append([("a", _d((i, 0.5), (i + 1, 0.5)))])
    actions.append([("a", _d((t, 0.6), (z, 0.4)))])
    actions += [[("a", _d((t, 1.0)))], [("a", _d((z, 1.0)))]]
    return SsgModel.build(n + 2, [Player.MAX] * (n + 2), actions, 0, [t])


def _ovi_chain(n: int, with_exit: bool) -> SsgModel:
    g, z = n, n + 1
    actions = []
    for i in range(n):
        acts = []
        if with_exit:
            acts.append(("A", _d((g, 0.5), (z, 0.5))))
        if i < n - 1:
            acts.append(("B", _d((i, 0.99), (i + 1, 0.01))))
        else:
            acts.append(("C", _d((g, 0.49), (z, 0.51))))
        actions.append(acts)
    actions += [[("a", _d((g, 1.0)))], [("a", _d((z, 1.0)))]]
    return SsgModel.build(n + 2, [Player.MAX] * (n + 2), actions, 0, [g])


def ovi_easy(n: int) -> SsgModel:
    return _ovi_chain(n, with_exit=True)


def ovi_hard(n: int) -> SsgModel:
    return _ovi_chain(n, with_exit=False)


def simple_scc(n: int, m: int = 1) -> SsgModel:
    """``n`` states: ``m`` binary trees, then goal and sink.

    Inner tree nodes move deterministically to one child per action, owners
    alternate by depth.  Leaves return to their own root with 0.5 and move to
    the next root with 0.5; leaves of the last tree go to the goal and sink
    instead of a next root, with weights 0.3 and 0.2.
    """
    if m < 1 or n < 2 + 2 * m:
        raise UsageError(f"simple-scc needs m >= 1 and n >= {2 + 2 * m}, got n={n}, m={m}")
    body = n - 2
    g, z = body, body + 1
    sizes = [body // m + (1 if i < body % m else 0) for i in range(m)]
    owner: list[Player] = []
    actions: list[list[tuple[str, Distribution]]] = []
    root = 0
    for ti, size in enumerate(sizes):
        nxt_root = root + size
        last_tree = ti == m - 1
        for j in range(size):
            depth = (j + 1).bit_length() - 1
            owner.append(Player.MAX if depth % 2 == 0 else Player.MIN)
            kids = [c for c in (2 * j + 1, 2 * j + 2) if c < size]
            if kids:
                actions.append([(f"c{i}", _d((root + c, 1.0))) for i, c in enumerate(kids)])
            elif last_tree:
                actions.append([("leaf", _d((root, 0.5), (g, 0.3), (z, 0.2)))])
            else:
                actions.append([("leaf", _d((root, 0.5), (nxt_root, 0.5)))])
        root = nxt_root
    owner += [Player.MAX, Player.MAX]
    actions += [[("a", _d((g, 1.0)))], [("a", _d((z, 1.0)))]]
    return SsgModel.build(n, owner, actions, 0, [g])


HANDCRAFTED = ("fig1", "tvi-chain", "ovi-easy", "ovi-hard", "simple-scc")


def handcrafted(kind: str, n: int = 1, m: int = 1) -> SsgModel:
    if kind == "fig1":
        return fig1()
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    if kind == "tvi-chain":
        return tvi_chain(n)
    if kind == "ovi-easy":
        return ovi_easy(n)
    if kind == "ovi-hard":
        return ovi_hard(n)
    if kind == "simple-scc":
        return simple_scc(n, m)
    raise UsageError(f"unknown model kind {kind!r}; choose from {', '.join(HANDCRAFTED)}")
