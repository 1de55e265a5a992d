"""Post-selection posterior summaries and the robust AIPW estimator.

Credible intervals are equal-tailed empirical quantile intervals
(linear interpolation). The AIPW estimator targets the subgroup
treatment effect and is robust to outcome-model misspecification when
the propensity score is known.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import Dataset
from .ridge import PosteriorDraws
from .trees import SubgroupTree
from .utility import subgroup_tau_draws


@dataclass(frozen=True)
class SubgroupSummary:
    """Per-group posterior summaries for a partition."""

    alpha: float
    n_units: np.ndarray  # (K,)
    tau_hat: np.ndarray  # (K,) posterior mean of tau(G_k)
    tau_interval: np.ndarray  # (K, 2) central credible interval
    delta_draws: np.ndarray  # (S, K) draws of tau(G_k) - tau(X)
    delta_hat: np.ndarray  # (K,)
    delta_interval: np.ndarray  # (K, 2)
    prob_delta_negative: np.ndarray  # (K,) P(Delta_k < 0 | D)

    def to_rows(self) -> list[dict]:
        return [
            {
                "group": k + 1,
                "n": int(self.n_units[k]),
                "tau_hat": float(self.tau_hat[k]),
                "tau_lo": float(self.tau_interval[k, 0]),
                "tau_hi": float(self.tau_interval[k, 1]),
                "delta_hat": float(self.delta_hat[k]),
                "delta_lo": float(self.delta_interval[k, 0]),
                "delta_hi": float(self.delta_interval[k, 1]),
                "p_delta_neg": float(self.prob_delta_negative[k]),
            }
            for k in range(len(self.n_units))
        ]


def _quantile_interval(draws: np.ndarray, alpha: float) -> np.ndarray:
    lo = np.quantile(draws, alpha / 2, axis=0)
    hi = np.quantile(draws, 1 - alpha / 2, axis=0)
    return np.stack([lo, hi], axis=-1)


def subgroup_summary(
    draws: PosteriorDraws, tree: SubgroupTree, d: Dataset, alpha: float = 0.05
) -> SubgroupSummary:
    gdraws = subgroup_tau_draws(draws, tree, d)
    labels = tree.assign(d.x)
    counts = np.bincount(labels, minlength=tree.n_groups)
    delta = gdraws - draws.ate[:, None]
    return SubgroupSummary(
        alpha=alpha,
        n_units=counts,
        tau_hat=gdraws.mean(axis=0),
        tau_interval=_quantile_interval(gdraws, alpha),
        delta_draws=delta,
        delta_hat=delta.mean(axis=0),
        delta_interval=_quantile_interval(delta, alpha),
        prob_delta_negative=np.mean(delta < 0, axis=0),
    )


@dataclass(frozen=True)
class ContrastSummary:
    k1: int
    k2: int
    draws: np.ndarray  # (S,) draws of tau(G_k1) - tau(G_k2)
    mean: float
    interval: tuple[float, float]
    prob_negative: float


def subgroup_contrast(
    draws: PosteriorDraws,
    tree: SubgroupTree,
    d: Dataset,
    k1: int,
    k2: int,
    alpha: float = 0.05,
) -> ContrastSummary:
    """Posterior contrast tau(G_k1) - tau(G_k2); k1, k2 are 0-based."""
    if k1 == k2:
        raise ValueError("contrast requires two distinct groups")
    gdraws = subgroup_tau_draws(draws, tree, d)
    diff = gdraws[:, k1] - gdraws[:, k2]
    lo, hi = np.quantile(diff, [alpha / 2, 1 - alpha / 2])
    return ContrastSummary(
        k1=k1,
        k2=k2,
        draws=diff,
        mean=float(diff.mean()),
        interval=(float(lo), float(hi)),
        prob_negative=float(np.mean(diff < 0)),
    )


@dataclass(frozen=True)
class AipwEstimate:
    estimate: float
    se: float
    interval: tuple[float, float]
    influence: np.ndarray  # per-unit influence values within the group
    n_units: int


def aipw_influence(d: Dataset, mu0_hat: np.ndarray, mu1_hat: np.ndarray) -> np.ndarray:
    """Per-unit AIPW influence values for the treatment effect."""
    e = d.propensity
    if np.any(e <= 0) or np.any(e >= 1):
        raise ValueError("propensities must lie strictly inside (0, 1)")
    mu_a = np.where(d.a == 1, mu1_hat, mu0_hat)
    return mu1_hat - mu0_hat + (d.a - e) * (d.y - mu_a) / (e * (1 - e))


def aipw_subgroup(
    d: Dataset,
    mu0_hat: np.ndarray,
    mu1_hat: np.ndarray,
    group: np.ndarray | SubgroupTree,
    which: int | None = None,
    alpha: float = 0.05,
) -> AipwEstimate:
    """Robust subgroup effect estimate with a normal-approximation interval.

    ``group`` is a boolean mask, or a SubgroupTree combined with
    ``which`` (0-based group index).
    """
    if isinstance(group, SubgroupTree):
        if which is None:
            raise ValueError("pass `which` when group is a tree")
        mask = group.assign(d.x) == which
    else:
        mask = np.asarray(group, dtype=bool)
    if mask.sum() == 0:
        raise ValueError("empty subgroup")
    phi = aipw_influence(d, np.asarray(mu0_hat, float), np.asarray(mu1_hat, float))[mask]
    n_g = int(mask.sum())
    est = float(phi.mean())
    se = float(phi.std(ddof=1) / np.sqrt(n_g)) if n_g > 1 else float("inf")
    z = norm.ppf(1 - alpha / 2)
    return AipwEstimate(
        estimate=est,
        se=se,
        interval=(est - z * se, est + z * se),
        influence=phi,
        n_units=n_g,
    )
