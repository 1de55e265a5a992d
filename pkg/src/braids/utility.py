"""Expected utilities of partitions and policies from posterior draws.

Values are relative: additive constants that do not depend on the
partition are dropped, so utilities are comparable only across
partitions evaluated on the same draws. Posterior variances over draws
use the plug-in denominator S.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .ridge import PosteriorDraws
from .trees import PolicyTree, SubgroupTree


class EmptySubgroupError(ValueError):
    """A partition leaf contains no units."""


@dataclass(frozen=True)
class GroupStats:
    index: int
    n_units: int
    tau_hat: float  # posterior mean of tau(G_k)
    var: float  # posterior variance of tau(G_k), denominator S


@dataclass(frozen=True)
class UtilityReport:
    lam: float
    value: float
    within_sse: float  # (1/N) sum_i (tauhat_i - tauhat_{G(i)})^2
    var_term: float  # (1/N) sum_k N_k Var{tau(G_k) | D}
    groups: tuple[GroupStats, ...] = ()

    def __post_init__(self):
        expect = (1.0 - self.lam) * self.var_term - self.within_sse
        if not np.isclose(self.value, expect, rtol=0, atol=1e-10):
            raise ValueError("value must equal (1 - lambda) var_term - within_sse")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "value": self.value,
            "within_sse": self.within_sse,
            "var_term": self.var_term,
            "groups": [
                {
                    "group": g.index + 1,
                    "n": g.n_units,
                    "tau_hat": g.tau_hat,
                    "var": g.var,
                }
                for g in self.groups
            ],
        }

    def to_text(self) -> str:
        lines = [
            f"lambda={self.lam:g} value={self.value:.6g} "
            f"within_sse={self.within_sse:.6g} var_term={self.var_term:.6g}"
        ]
        for g in self.groups:
            lines.append(
                f"  group {g.index + 1}: n={g.n_units} "
                f"tau_hat={g.tau_hat:.6g} var={g.var:.6g}"
            )
        return "\n".join(lines)


def group_labels(tree: SubgroupTree, d: Dataset) -> np.ndarray:
    return tree.assign(d.x)


def group_tau_draws(tau: np.ndarray, labels: np.ndarray, n_groups: int) -> np.ndarray:
    """Per-draw group means: entry (s, k) = mean of tau[s, i] over group k."""
    counts = np.bincount(labels, minlength=n_groups).astype(float)
    if np.any(counts == 0):
        raise EmptySubgroupError(
            f"empty subgroup {int(np.argmin(counts)) + 1} of {n_groups}"
        )
    onehot = np.zeros((labels.shape[0], n_groups))
    onehot[np.arange(labels.shape[0]), labels] = 1.0
    return (tau @ onehot) / counts


def subgroup_tau_draws(
    draws: PosteriorDraws, tree: SubgroupTree, d: Dataset
) -> np.ndarray:
    """S x K matrix of per-draw subgroup effects tau(G_k)."""
    return group_tau_draws(draws.tau, group_labels(tree, d), tree.n_groups)


def braids_value_from_labels(
    tau: np.ndarray, labels: np.ndarray, n_groups: int, lam: float
) -> UtilityReport:
    """Expected BRAIDS utility of a partition given as a label vector."""
    if tau.shape[0] < 2:
        raise ValueError("need at least 2 posterior draws")
    n = tau.shape[1]
    counts = np.bincount(labels, minlength=n_groups).astype(float)
    gdraws = group_tau_draws(tau, labels, n_groups)  # raises on empty group
    tau_hat = tau.mean(axis=0)
    g_hat = gdraws.mean(axis=0)
    g_var = gdraws.var(axis=0)  # plug-in denominator S
    within_sse = float(np.sum((tau_hat - g_hat[labels]) ** 2) / n)
    var_term = float(np.sum(counts * g_var) / n)
    value = (1.0 - lam) * var_term - within_sse
    groups = tuple(
        GroupStats(k, int(counts[k]), float(g_hat[k]), float(g_var[k]))
        for k in range(n_groups)
    )
    return UtilityReport(
        lam=lam, value=value, within_sse=within_sse, var_term=var_term, groups=groups
    )


def expected_utility_braids(
    draws: PosteriorDraws, tree: SubgroupTree, d: Dataset, lam: float
) -> UtilityReport:
    """Expected BRAIDS utility (relative, constants dropped) of a tree."""
    return braids_value_from_labels(draws.tau, group_labels(tree, d), tree.n_groups, lam)


def rs_decomposed_from_labels(
    tau: np.ndarray, labels: np.ndarray, n_groups: int
) -> tuple[float, float]:
    """Two routes to the risk-seeking expected utility.

    formA is the direct posterior expectation of the between-group
    criterion; formB is the relative form at lambda = 0. Their
    difference is a constant over partitions of the same draws.
    """
    n = tau.shape[1]
    counts = np.bincount(labels, minlength=n_groups).astype(float)
    gdraws = group_tau_draws(tau, labels, n_groups)
    ate = tau.mean(axis=1)
    g_hat = gdraws.mean(axis=0)
    ate_hat = ate.mean()
    dev = gdraws - ate[:, None]
    dev_var = dev.var(axis=0)
    form_a = float(np.sum(counts * ((g_hat - ate_hat) ** 2 + dev_var)) / n)
    form_b = braids_value_from_labels(tau, labels, n_groups, 0.0).value
    return form_a, form_b


def expected_utility_rs_decomposed(
    draws: PosteriorDraws, tree: SubgroupTree, d: Dataset
) -> tuple[float, float]:
    return rs_decomposed_from_labels(draws.tau, group_labels(tree, d), tree.n_groups)


def expected_welfare(
    draws: PosteriorDraws, policy: PolicyTree, d: Dataset, delta: float
) -> float:
    """Posterior expected welfare sum_i V(X_i) (tauhat_i - delta)."""
    v = policy.assign(d.x)
    return float(np.sum(v * (draws.tau_hat() - delta)))


def expected_efficacy(
    draws: PosteriorDraws, policy: PolicyTree, d: Dataset, delta: float, c: float
) -> float:
    """Posterior expected efficacy sum_i V(X_i) (p_i - c).

    p_i is the posterior probability that tau(X_i) >= delta, estimated
    as the fraction of draws at or above delta.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError("c must lie in [0, 1]")
    v = policy.assign(d.x)
    p = np.mean(draws.tau >= delta, axis=0)
    return float(np.sum(v * (p - c)))


def exceedance_scores(draws: PosteriorDraws, delta: float, c: float) -> np.ndarray:
    """Per-unit scores p_i - c for efficacy-based policy search."""
    return np.mean(draws.tau >= delta, axis=0) - c


def welfare_scores(draws: PosteriorDraws, delta: float) -> np.ndarray:
    """Per-unit scores tauhat_i - delta for welfare-based policy search."""
    return draws.tau_hat() - delta
