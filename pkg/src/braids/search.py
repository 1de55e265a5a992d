"""Optimization of expected utility over depth-bounded decision trees.

Exact search enumerates every tree over the cutpoint grid (feasible to
depth 3); there is no shortcut for evaluating posterior variances across
candidate splits, so each candidate costs a full pass over the draws.
The risk-neutral case admits a fast CART-style greedy search using
sorted prefix sums.

All searches are deterministic: ties are broken toward the
lexicographically smallest (depth, column, threshold) tree encoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import CutpointGrid, Dataset
from .ridge import PosteriorDraws
from .trees import Node, Split, SubgroupTree, PolicyTree, leaf, relabel, split_node
from .utility import UtilityReport, braids_value_from_labels


class SearchError(ValueError):
    """No feasible tree under the given constraints."""


@dataclass(frozen=True)
class SearchConfig:
    max_depth: int = 2
    min_leaf: int = 10
    mode: str = "exact"  # exact | greedy
    lam: float = 1.0
    eta: float = 0.0  # additive depth penalty weight
    tie_break: str = "lexicographic"

    def __post_init__(self):
        if self.mode not in ("exact", "greedy"):
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.mode == "exact" and self.max_depth > 3:
            raise ValueError("exact search supports max_depth <= 3 only")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be at least 1")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.tie_break != "lexicographic":
            raise ValueError(f"unknown tie_break {self.tie_break!r}")


def ordered_splits(grid: CutpointGrid) -> list[Split]:
    """All grid splits in encoding order (shared by exact and greedy)."""
    splits = []
    for j in sorted(grid.thresholds):
        for t in grid.thresholds[j]:
            splits.append(Split(column=j, threshold=float(t)))
    for j in sorted(grid.subsets):
        for s in sorted(grid.subsets[j], key=lambda s: tuple(sorted(s))):
            splits.append(Split(column=j, levels=s))
    return sorted(splits, key=lambda s: s.encode())


def _enumerate_subtrees(x, idx, depth_left, splits, min_leaf):
    """Yield every subtree shape over idx respecting depth and min_leaf."""
    yield leaf()
    if depth_left == 0:
        return
    for split in splits:
        go_left = split.goes_left(x[idx])
        n_left = int(go_left.sum())
        if n_left < min_leaf or idx.shape[0] - n_left < min_leaf:
            continue
        li, ri = idx[go_left], idx[~go_left]
        for lt in _enumerate_subtrees(x, li, depth_left - 1, splits, min_leaf):
            for rt in _enumerate_subtrees(x, ri, depth_left - 1, splits, min_leaf):
                yield split_node(split, lt, rt)


def search_exact(
    draws: PosteriorDraws, d: Dataset, grid: CutpointGrid, cfg: SearchConfig
) -> tuple[SubgroupTree, UtilityReport]:
    """Exhaustive argmax of the BRAIDS value minus eta * depth."""
    if cfg.mode != "exact":
        raise ValueError("search_exact requires cfg.mode == 'exact'")
    if d.n < cfg.min_leaf:
        raise SearchError("min_leaf exceeds the sample size")
    splits = ordered_splits(grid)
    idx = np.arange(d.n)
    best = None  # (value, encoding, tree, report)
    for root in _enumerate_subtrees(d.x, idx, cfg.max_depth, splits, cfg.min_leaf):
        tree = relabel(root)
        labels = tree.assign(d.x)
        report = braids_value_from_labels(draws.tau, labels, tree.n_groups, cfg.lam)
        value = report.value - cfg.eta * tree.depth
        key = tree.encode()
        if best is None or value > best[0] or (value == best[0] and key < best[1]):
            best = (value, key, tree, report)
    if best is None:
        raise SearchError("no feasible tree")
    return best[2], best[3]


def _node_sse(t_sum: float, t2_sum: float, n: int) -> float:
    return t2_sum - t_sum * t_sum / n


def _best_split_rn(tau_hat, x, idx, grid, min_leaf):
    """Best SSE-reducing split of a node via sorted prefix sums.

    Returns (sse_reduction, Split) with the reduction in raw SSE units,
    or (0.0, None) when no admissible split improves.
    """
    t = tau_hat[idx]
    n = idx.shape[0]
    parent = _node_sse(t.sum(), (t * t).sum(), n)
    best_red, best_split = 0.0, None

    def consider(red, split):
        # candidates arrive in encoding order, so strict improvement
        # keeps the lexicographically smallest split among ties
        nonlocal best_red, best_split
        if red > best_red:
            best_red, best_split = red, split

    for j in sorted(grid.thresholds):
        thresholds = grid.thresholds[j]
        if len(thresholds) == 0:
            continue
        order = np.argsort(x[idx, j], kind="stable")
        v_sorted = x[idx, j][order]
        t_sorted = t[order]
        c1 = np.cumsum(t_sorted)
        c2 = np.cumsum(t_sorted * t_sorted)
        total1, total2 = c1[-1], c2[-1]
        n_lefts = np.searchsorted(v_sorted, thresholds, side="right")
        for thr, nl in zip(thresholds, n_lefts):
            if nl < min_leaf or n - nl < min_leaf:
                continue
            sse = _node_sse(c1[nl - 1], c2[nl - 1], nl) + _node_sse(
                total1 - c1[nl - 1], total2 - c2[nl - 1], n - nl
            )
            consider(parent - sse, Split(column=j, threshold=float(thr)))
    for j in sorted(grid.subsets):
        codes = x[idx, j].astype(int)
        for s in sorted(grid.subsets[j], key=lambda s: tuple(sorted(s))):
            mask = np.isin(codes, sorted(s))
            nl = int(mask.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            tl = t[mask]
            tr = t[~mask]
            sse = _node_sse(tl.sum(), (tl * tl).sum(), nl) + _node_sse(
                tr.sum(), (tr * tr).sum(), n - nl
            )
            consider(parent - sse, Split(column=j, levels=s))
    return best_red, best_split


def search_greedy_rn(
    tau_hat: np.ndarray, d: Dataset, grid: CutpointGrid, cfg: SearchConfig
) -> SubgroupTree:
    """CART-style greedy risk-neutral partitioning of posterior means.

    Recursively picks the split minimizing within-group SSE of tau_hat,
    stopping at max_depth, min_leaf, or when the best normalized SSE
    reduction does not exceed eta. Degenerate nodes become leaves.
    """
    if cfg.lam != 1.0:
        raise ValueError("greedy search is risk-neutral only (lambda = 1)")
    tau_hat = np.asarray(tau_hat, dtype=float)

    def grow(idx, depth_left) -> Node:
        if depth_left == 0 or idx.shape[0] < 2 * cfg.min_leaf:
            return leaf()
        red, split = _best_split_rn(tau_hat, d.x, idx, grid, cfg.min_leaf)
        if split is None or red / d.n <= cfg.eta:
            return leaf()
        go_left = split.goes_left(d.x[idx])
        return split_node(
            split,
            grow(idx[go_left], depth_left - 1),
            grow(idx[~go_left], depth_left - 1),
        )

    return relabel(grow(np.arange(d.n), cfg.max_depth))


@dataclass(frozen=True)
class PrespecifiedGroups:
    """Named partitions, each defined by one or two categorical factors."""

    partitions: tuple  # of (name, tuple of column indices)

    def __post_init__(self):
        for name, cols in self.partitions:
            if not 1 <= len(cols) <= 2:
                raise ValueError(f"partition {name!r} must use 1 or 2 factors")


@dataclass(frozen=True)
class RankingEntry:
    name: str
    feasible: bool
    values: dict  # lam -> value
    ranks: dict  # lam -> rank among feasible partitions (1 = best)
    n_groups: int


def crossed_labels(d: Dataset, cols: tuple[int, ...]) -> tuple[np.ndarray, int]:
    """Label vector for the full cross of the given categorical factors."""
    for j in cols:
        if d.kinds[j].kind != "categorical":
            raise ValueError(f"column {d.names[j]} is not categorical")
    labels = np.zeros(d.n, dtype=int)
    n_groups = 1
    for j in cols:
        codes = d.x[:, j].astype(int)
        labels = labels * d.kinds[j].n_levels + codes
        n_groups *= d.kinds[j].n_levels
    return labels, n_groups


def evaluate_prespecified(
    draws: PosteriorDraws,
    d: Dataset,
    groups: PrespecifiedGroups,
    lambdas: tuple[float, ...],
) -> list[RankingEntry]:
    """Per-(partition, lambda) expected utilities and within-lambda ranks."""
    entries = []
    for name, cols in groups.partitions:
        labels, n_groups = crossed_labels(d, cols)
        counts = np.bincount(labels, minlength=n_groups)
        if np.any(counts == 0):
            entries.append(RankingEntry(name, False, {}, {}, n_groups))
            continue
        values = {
            lam: braids_value_from_labels(draws.tau, labels, n_groups, lam).value
            for lam in lambdas
        }
        entries.append(RankingEntry(name, True, values, {}, n_groups))
    for lam in lambdas:
        feasible = [e for e in entries if e.feasible]
        order = sorted(feasible, key=lambda e: (-e.values[lam], e.name))
        for rank, e in enumerate(order, start=1):
            e.ranks[lam] = rank
    return entries


def policy_search_exact(
    scores: np.ndarray,
    d: Dataset,
    grid: CutpointGrid,
    max_depth: int = 2,
) -> tuple[PolicyTree, float]:
    """Exact maximizer of sum_i scores_i V(X_i) over depth-bounded trees.

    Leaf actions are optimal per leaf: treat iff the leaf's score sum is
    positive (ties go to no treatment).
    """
    if max_depth not in (0, 1, 2):
        raise ValueError("exact policy search supports max_depth in {0, 1, 2}")
    scores = np.asarray(scores, dtype=float)
    splits = ordered_splits(grid)

    def best(idx, depth_left) -> tuple[float, Node]:
        s = float(scores[idx].sum())
        best_val = max(s, 0.0)
        best_node = leaf(1 if s > 0 else 0)
        if depth_left > 0:
            for split in splits:
                go_left = split.goes_left(d.x[idx])
                n_left = int(go_left.sum())
                if n_left == 0 or n_left == idx.shape[0]:
                    continue
                lv, ln = best(idx[go_left], depth_left - 1)
                rv, rn = best(idx[~go_left], depth_left - 1)
                if lv + rv > best_val:
                    best_val = lv + rv
                    best_node = split_node(split, ln, rn)
        return best_val, best_node

    value, root = best(np.arange(d.n), max_depth)
    return PolicyTree(root), value
