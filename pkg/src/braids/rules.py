"""Rule-ensemble approximation to the Bayesian causal forest model.

Stage 1 extracts decision rules from small gradient-boosted ensembles:
one fit to the outcome (prognostic rules) and one fit to an IPW
pseudo-outcome for the unit-level effect (modifier rules). Stage 2 runs
the same Gibbs kernel as the ridge model over the centered rule basis,
with separate shrinkage for prognostic and effect-modifying rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import GradientBoostingRegressor

from .data import Dataset
from .ridge import (
    DesignGroups,
    FitError,
    McmcConfig,
    PosteriorDraws,
    RidgePrior,
    run_gibbs,
    _treatment_column,
)
from .rng import spawn_seed


@dataclass(frozen=True)
class Condition:
    column: int
    op: str  # "le" or "gt"
    threshold: float

    def describe(self, names=None) -> str:
        name = names[self.column] if names else f"x{self.column + 1}"
        sym = "<=" if self.op == "le" else ">"
        return f"{name} {sym} {self.threshold:g}"


@dataclass(frozen=True)
class Rule:
    """Conjunction of axis-threshold conditions with its empirical support."""

    conditions: tuple[Condition, ...]
    support: float

    def __post_init__(self):
        if not 0.0 < self.support < 1.0:
            raise ValueError("rule support must lie strictly in (0, 1)")

    def indicator(self, x: np.ndarray) -> np.ndarray:
        out = np.ones(x.shape[0], dtype=bool)
        for c in self.conditions:
            col = x[:, c.column]
            out &= (col <= c.threshold) if c.op == "le" else (col > c.threshold)
        return out.astype(float)

    def describe(self, names=None) -> str:
        return " and ".join(c.describe(names) for c in self.conditions)


@dataclass(frozen=True)
class RuleBasis:
    """Prognostic and modifier rules with their binary design matrices."""

    prognostic: tuple[Rule, ...]
    modifier: tuple[Rule, ...]
    z_prognostic: np.ndarray  # (N, Kp) raw 0/1 indicators
    z_modifier: np.ndarray  # (N, Km) raw 0/1 indicators
    status: str = "ok"  # "ok" or "empty"

    def centered(self) -> tuple[np.ndarray, np.ndarray]:
        zp = self.z_prognostic - self.z_prognostic.mean(axis=0, keepdims=True)
        zm = self.z_modifier - self.z_modifier.mean(axis=0, keepdims=True)
        return zp, zm

    def to_text(self, names=None) -> str:
        lines = [f"status: {self.status}"]
        lines.append(f"prognostic rules ({len(self.prognostic)}):")
        for r in self.prognostic:
            lines.append(f"  [support {r.support:.3f}] {r.describe(names)}")
        lines.append(f"modifier rules ({len(self.modifier)}):")
        for r in self.modifier:
            lines.append(f"  [support {r.support:.3f}] {r.describe(names)}")
        return "\n".join(lines)


def _paths_from_tree(tree) -> list[tuple[Condition, ...]]:
    """Path conditions for every node below the root of a fitted tree."""
    out = []

    def walk(node: int, conds: tuple[Condition, ...]):
        if node != 0:
            out.append(conds)
        left, right = tree.children_left[node], tree.children_right[node]
        if left == -1:
            return
        col = int(tree.feature[node])
        thr = float(tree.threshold[node])
        walk(left, conds + (Condition(col, "le", thr),))
        walk(right, conds + (Condition(col, "gt", thr),))

    walk(0, ())
    return out


def _rules_from_ensemble(x, target, n_trees, max_depth, min_support, seed):
    gbm = GradientBoostingRegressor(
        n_estimators=n_trees,
        max_depth=max_depth,
        learning_rate=0.1,
        subsample=0.8,
        loss="squared_error",
        random_state=seed,
    )
    gbm.fit(x, target)
    n = x.shape[0]
    rules: list[Rule] = []
    seen: dict[bytes, None] = {}
    for est in gbm.estimators_.ravel():
        for conds in _paths_from_tree(est.tree_):
            rule_ind = np.ones(n, dtype=bool)
            for c in conds:
                col = x[:, c.column]
                rule_ind &= (col <= c.threshold) if c.op == "le" else (col > c.threshold)
            support = rule_ind.mean()
            if not min_support <= support <= 1 - min_support:
                continue
            key = rule_ind.tobytes()
            comp_key = (~rule_ind).tobytes()
            if key in seen or comp_key in seen:  # duplicate or complement
                continue
            seen[key] = None
            rules.append(Rule(conditions=conds, support=float(support)))
    return rules


def extract_rules(
    d: Dataset,
    n_trees: int = 50,
    max_depth: int = 3,
    seed: int = 0,
    min_support: float = 0.05,
) -> RuleBasis:
    """Extract prognostic and modifier rule bases from boosted ensembles.

    Prognostic rules come from boosting Y on X. Modifier rules come from
    boosting the IPW pseudo-outcome
    (Y - mean_Y_in_arm) * (A - e) / (e (1 - e)) on X, which is unbiased
    for the unit-level effect under known propensities.
    """
    y_bar_arm = np.where(
        d.a == 1, d.y[d.a == 1].mean(), d.y[d.a == 0].mean()
    )
    e = d.propensity
    pseudo = (d.y - y_bar_arm) * (d.a - e) / (e * (1 - e))
    prognostic = _rules_from_ensemble(
        d.x, d.y, n_trees, max_depth, min_support, spawn_seed(seed, "prognostic")
    )
    modifier = _rules_from_ensemble(
        d.x, pseudo, n_trees, max_depth, min_support, spawn_seed(seed, "modifier")
    )
    status = "ok" if (prognostic or modifier) else "empty"
    zp = (
        np.column_stack([r.indicator(d.x) for r in prognostic])
        if prognostic
        else np.empty((d.n, 0))
    )
    zm = (
        np.column_stack([r.indicator(d.x) for r in modifier])
        if modifier
        else np.empty((d.n, 0))
    )
    return RuleBasis(
        prognostic=tuple(prognostic),
        modifier=tuple(modifier),
        z_prognostic=zp,
        z_modifier=zm,
        status=status,
    )


def fit_rule_bcf(
    d: Dataset,
    basis: RuleBasis,
    prior: RidgePrior,
    mcmc: McmcConfig,
    observational: bool = False,
) -> PosteriorDraws:
    """Gibbs sampling over the centered rule basis.

    The design is [1, prognostic rules, A, A * modifier rules] with the
    treatment column residualized in observational mode. Each tau draw
    is tau0 + Zm beta_tau; an empty modifier basis yields a
    homogeneous-effect model.
    """
    if basis.z_prognostic.shape[1] == 0:
        raise FitError("empty prognostic basis")
    if d.a.sum() == 0 or d.a.sum() == d.n:
        raise FitError("one-armed data: both treatment arms required")
    zp, zm = basis.centered()
    kp, km = zp.shape[1], zm.shape[1]
    a_col = _treatment_column(d, observational)
    design = np.column_stack([np.ones(d.n), zp, a_col, a_col[:, None] * zm])
    groups = DesignGroups(
        flat=np.array([0, 1 + kp]),
        prognostic=np.arange(1, 1 + kp),
        modifier=np.arange(2 + kp, 2 + kp + km),
    )
    rng = np.random.default_rng(mcmc.seed)
    out = run_gibbs(design, d.y, groups, prior, mcmc, rng)
    beta = out["beta"]
    tau0 = beta[:, 1 + kp]
    tau = tau0[:, None] + (zm @ beta[:, 2 + kp:].T).T
    return PosteriorDraws(
        tau=tau,
        ate=tau.mean(axis=1),
        hyper=np.column_stack([out["sigma"], out["sigma_tau"]]),
        meta={
            "model": "rule-bcf",
            "n_burn": mcmc.n_burn,
            "thin": mcmc.thin,
            "seed": mcmc.seed,
            "observational": observational,
            "n_prognostic_rules": kp,
            "n_modifier_rules": km,
            "basis_status": basis.status,
        },
    )
