"""Structural features of games and order statistics over corpora."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from typing import IO, Iterable, Sequence

import numpy as np

from ssgvi.graph import classify_states, mec_decomposition, scc_decomposition, support_graph
from ssgvi.model import Player, SsgModel, UsageError


@dataclass(frozen=True)
class FeatureReport:
    """Percentages are fractions in [0, 1] of the state count."""

    num_states: int
    sinks_pct: float
    unknown_pct: float
    min_states_pct: float
    num_max_actions: int
    avg_actions_per_state: float
    prob_actions_pct: float
    num_max_transitions: int
    avg_trans_per_action: float
    smallest_trans_prob: float
    num_mecs: int
    biggest_mec_pct: float
    avg_mec_pct: float
    num_sccs: int
    biggest_scc_pct: float
    avg_scc_pct: float
    max_scc_depth: int
    num_non_singleton_sccs: int
    smallest_scc_non_sing: int
    avg_scc_non_sing_pct: float


FEATURES: tuple[str, ...] = tuple(f.name for f in fields(FeatureReport))


def scc_depth(model: SsgModel) -> int:
    """Number of components on the longest path of the SCC DAG."""
    dec = scc_decomposition(model)
    g = support_graph(model).tocoo()
    src, dst = dec.rank[g.row], dec.rank[g.col]
    keep = src != dst
    k = len(dec.components)
    succ: list[list[int]] = [[] for _ in range(k)]
    for a, b in zip(src[keep].tolist(), dst[keep].tolist()):
        succ[a].append(b)
    depth = [1] * k
    # ranks are topological, so successors always have a larger rank
    for c in range(k - 1, -1, -1):
        if succ[c]:
            depth[c] = 1 + max(depth[d] for d in succ[c])
    return max(depth) if depth else 0


def compute_features(model: SsgModel) -> FeatureReport:
    n = model.n
    arr = model.arrays
    classes = classify_states(model)
    n_actions = np.diff(arr.state_ptr)
    n_trans = np.diff(arr.action_ptr)
    mecs = mec_decomposition(model, classes.unknown) if classes.unknown else []
    mec_sizes = np.array([len(ec.states) for ec in mecs], dtype=float)
    dec = scc_decomposition(model)
    scc_sizes = np.array([len(c) for c in dec.components], dtype=float)
    big = scc_sizes[scc_sizes > 1]
    mins = sum(1 for o in model.owner if o == Player.MIN)
    return FeatureReport(
        num_states=n,
        sinks_pct=len(classes.sinks) / n,
        unknown_pct=len(classes.unknown) / n,
        min_states_pct=mins / n,
        num_max_actions=int(n_actions.max()),
        avg_actions_per_state=float(n_actions.mean()),
        prob_actions_pct=float((n_trans >= 2).mean()),
        num_max_transitions=int(n_trans.max()),
        avg_trans_per_action=float(n_trans.mean()),
        smallest_trans_prob=float(arr.probs.min()),
        num_mecs=len(mecs),
        biggest_mec_pct=float(mec_sizes.max() / n) if len(mecs) else 0.0,
        avg_mec_pct=float(mec_sizes.mean() / n) if len(mecs) else 0.0,
        num_sccs=len(scc_sizes),
        biggest_scc_pct=float(scc_sizes.max() / n),
        avg_scc_pct=float(scc_sizes.mean() / n),
        max_scc_depth=scc_depth(model),
        num_non_singleton_sccs=len(big),
        smallest_scc_non_sing=int(big.min()) if len(big) else 0,
        avg_scc_non_sing_pct=float(big.mean() / n) if len(big) else 0.0,
    )


@dataclass(frozen=True)
class FeatureStats:
    median: float
    mean: float
    p10: float
    p25: float
    p75: float
    p90: float
    outliers: tuple[float, ...]


@dataclass(frozen=True)
class CorpusStats:
    count: int
    features: dict[str, FeatureStats]

    def __getitem__(self, name: str) -> FeatureStats:
        return self.features[name]


def aggregate_features(reports: Sequence[FeatureReport]) -> CorpusStats:
    """Per-feature percentiles (linear interpolation); outliers lie beyond
    the 10th/90th percentile whiskers."""
    if not reports:
        raise UsageError("cannot aggregate an empty list of reports")
    table = np.array([astuple(r) for r in reports], dtype=float)
    out = {}
    for j, name in enumerate(FEATURES):
        col = table[:, j]
        p10, p25, med, p75, p90 = np.percentile(col, [10, 25, 50, 75, 90], method="linear")
        outliers = tuple(float(x) for x in col if x < p10 or x > p90)
        out[name] = FeatureStats(float(med), float(col.mean()), float(p10), float(p25), float(p75), float(p90), outliers)
    return CorpusStats(len(reports), out)


CSV_HEADER = ("model",) + FEATURES


def write_feature_csv(
    out: IO[str], rows: Iterable[tuple[str, FeatureReport]], aggregate: CorpusStats | None = None
) -> None:
    """One row per model; an optional final row holds the corpus means."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for name, rep in rows:
        w.writerow((name,) + tuple(_fmt(v) for v in astuple(rep)))
    if aggregate is not None:
        w.writerow(("aggregate_mean",) + tuple(_fmt(aggregate[f].mean) for f in FEATURES))


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else repr(float(v))
