"""Exact prior simulation of tree-ensemble heterogeneity.

Samples treatment-effect surfaces tau*(x) from a forest prior in which
a node at depth d branches with a configurable probability law, split
columns are uniform, and cutpoints are drawn from the data in the node.
Used to check the closed forms for the prior mean of the squared
heterogeneity H^2 against Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

POISSON = "poisson"
CHIPMAN = "chipman"
UNIFORM_SPLIT = "uniform"
MEDIAN_SPLIT = "median"


@dataclass(frozen=True)
class TreePriorConfig:
    depth_law: str = POISSON  # poisson | chipman
    lambda_depth: float = 1.2  # mean leaf depth for the poisson law
    alpha: float = 0.95  # chipman branching: alpha / (1 + d)^beta
    beta: float = 2.0
    split_rule: str = UNIFORM_SPLIT  # uniform | median
    m_trees: int = 1
    sigma_tau: float | None = 1.0  # fixed leaf scale, or None to use s_tau
    s_tau: float | None = None  # exponential scale for sigma_tau

    def __post_init__(self):
        if self.depth_law not in (POISSON, CHIPMAN):
            raise ValueError(f"unknown depth law {self.depth_law!r}")
        if self.split_rule not in (UNIFORM_SPLIT, MEDIAN_SPLIT):
            raise ValueError(f"unknown split rule {self.split_rule!r}")
        if self.depth_law == POISSON and self.lambda_depth <= 0:
            raise ValueError("lambda_depth must be positive")
        if self.depth_law == CHIPMAN and not (0 < self.alpha < 1 and self.beta >= 0):
            raise ValueError("need 0 < alpha < 1 and beta >= 0")
        if self.m_trees < 1:
            raise ValueError("m_trees must be at least 1")
        if (self.sigma_tau is None) == (self.s_tau is None):
            raise ValueError("set exactly one of sigma_tau, s_tau")

    def branch_probability(self, depth: int) -> float:
        if self.depth_law == CHIPMAN:
            return self.alpha / (1 + depth) ** self.beta
        # poisson: p(d) = Pr(Z > d | Z >= d), so leaf depth is Poisson
        lam = self.lambda_depth
        tail_ge = stats.poisson.sf(depth - 1, lam)  # Pr(Z >= d)
        tail_gt = stats.poisson.sf(depth, lam)  # Pr(Z > d)
        if tail_ge <= 0:
            return 0.0
        return float(tail_gt / tail_ge)


@dataclass(frozen=True)
class HeterogeneitySample:
    """Prior draws of H (rms heterogeneity) and M (max heterogeneity)."""

    h: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        if np.any(self.h < 0) or np.any(self.m < 0):
            raise ValueError("H and M must be nonnegative")


def _grow_tree(x, idx, depth, cfg, rng, sd_leaf, values, depths=None):
    """Recursively grow one tree, writing leaf values into ``values``."""
    can_split = idx.shape[0] >= 2
    if can_split and rng.uniform() < cfg.branch_probability(depth):
        j = int(rng.integers(0, x.shape[1]))
        col = x[idx, j]
        if cfg.split_rule == MEDIAN_SPLIT:
            cut = float(np.median(col))
            if cut >= col.max():  # all mass on one side; force a valid cut
                cut = float(np.partition(col, 0)[0])
        else:
            # uniform over node values excluding the max keeps both
            # children nonempty
            below_max = col[col < col.max()]
            cut = float(below_max[rng.integers(0, below_max.shape[0])])
        left = col <= cut
        _grow_tree(x, idx[left], depth + 1, cfg, rng, sd_leaf, values, depths)
        _grow_tree(x, idx[~left], depth + 1, cfg, rng, sd_leaf, values, depths)
    else:
        values[idx] += rng.normal(0.0, sd_leaf)
        if depths is not None:
            depths[idx] = depth


def sample_prior_forest(
    x: np.ndarray,
    cfg: TreePriorConfig,
    rng: np.random.Generator,
    sigma_tau: float | None = None,
    leaf_depths: np.ndarray | None = None,
) -> np.ndarray:
    """One prior draw of tau*(.) evaluated at all rows of x.

    ``sigma_tau`` overrides the configured leaf scale (used when the
    scale itself is drawn from its hyperprior). If ``leaf_depths`` is
    given it receives, per tree, the leaf depth of each row (the last
    tree's depths remain on exit).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows")
    st = cfg.sigma_tau if sigma_tau is None else sigma_tau
    sd_leaf = st / np.sqrt(cfg.m_trees)
    values = np.zeros(n)
    idx = np.arange(n)
    for _ in range(cfg.m_trees):
        _grow_tree(x, idx, 0, cfg, rng, sd_leaf, values, leaf_depths)
    return values


def prior_heterogeneity_mc(
    x: np.ndarray,
    cfg: TreePriorConfig,
    n_samples: int,
    seed: int = 0,
) -> tuple[HeterogeneitySample, float, float]:
    """Monte Carlo prior distribution of H and M.

    Returns the samples, the MC mean of H^2, and its MC standard error.
    H uses the empirical variance over the provided rows (denominator N).
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    rng = np.random.default_rng(seed)
    h = np.empty(n_samples)
    m = np.empty(n_samples)
    for s in range(n_samples):
        st = rng.exponential(cfg.s_tau) if cfg.s_tau is not None else None
        tau_star = sample_prior_forest(x, cfg, rng, sigma_tau=st)
        center = tau_star.mean()
        h[s] = np.sqrt(np.mean((tau_star - center) ** 2))
        m[s] = np.max(np.abs(tau_star - center))
    h2 = h**2
    return (
        HeterogeneitySample(h=h, m=m),
        float(h2.mean()),
        float(h2.std(ddof=1) / np.sqrt(n_samples)),
    )


def heterogeneity_closed_form(
    sigma_tau: float, mean_leaf_depth: float, variant: str = UNIFORM_SPLIT
) -> float:
    """Closed-form prior mean of H^2 under the poisson depth law.

    Uniform-from-node-data splits give sigma_tau^2 (1 - exp(-lambda/3));
    median splits give sigma_tau^2 (1 - exp(-lambda/2)).
    """
    if sigma_tau < 0 or mean_leaf_depth < 0:
        raise ValueError("inputs must be nonnegative")
    rate = 3.0 if variant == UNIFORM_SPLIT else 2.0
    if variant not in (UNIFORM_SPLIT, MEDIAN_SPLIT):
        raise ValueError(f"unknown variant {variant!r}")
    return sigma_tau**2 * (1.0 - np.exp(-mean_leaf_depth / rate))


def geometric_variant_closed_form(sigma_tau: float, alpha: float) -> float:
    """Prior mean of H^2 for the geometric depth law (chipman beta = 0).

    Valid for 0 < alpha <= 0.5: sigma_tau^2 * alpha / (3 - 2 alpha).
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 0.5]")
    return sigma_tau**2 * alpha / (3.0 - 2.0 * alpha)


def mean_leaf_depth_chipman(
    alpha: float, beta: float, max_depth: int = 10
) -> tuple[float, float]:
    """Mean leaf depth of the chipman branching process, truncated.

    Returns (mean depth, truncation tail mass). A node at depth d
    branches with probability alpha / (1 + d)^beta.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    p = np.array([alpha / (1 + d) ** beta for d in range(max_depth + 1)])
    survive = np.concatenate([[1.0], np.cumprod(p[:-1])])  # Pr(depth >= d)
    leaf_pmf = survive * (1 - p)  # Pr(leaf depth = d)
    mean = float(np.sum(np.arange(max_depth + 1) * leaf_pmf))
    tail = float(1.0 - leaf_pmf.sum())
    return mean, tail
