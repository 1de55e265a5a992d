import numpy as np
import pytest

from braids.data import CONTINUOUS, ColumnKind, Dataset, standardize
from braids.ridge import FitError, McmcConfig, RidgePrior, fit_ridge
from braids.rules import Condition, Rule, RuleBasis, extract_rules, fit_rule_bcf


def make_dataset(n=300, p=3, seed=0, hetero=True):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    a = (rng.uniform(size=n) < 0.4).astype(float)
    tau = 0.5 + (0.8 * (x[:, 0] > 0) if hetero else 0.0)
    y = x[:, 1] + a * tau + 0.3 * rng.standard_normal(n)
    return Dataset(
        y=y, a=a, x=x,
        kinds=tuple(ColumnKind(CONTINUOUS) for _ in range(p)),
        propensity=np.full(n, 0.4),
    )


class TestRule:
    def test_indicator(self):
        rule = Rule(
            conditions=(Condition(0, "le", 0.0), Condition(1, "gt", 1.0)),
            support=0.2,
        )
        x = np.array([[-1.0, 2.0], [-1.0, 0.5], [1.0, 2.0]])
        assert list(rule.indicator(x)) == [1.0, 0.0, 0.0]

    def test_support_bounds(self):
        with pytest.raises(ValueError, match="support"):
            Rule(conditions=(Condition(0, "le", 0.0),), support=1.0)

    def test_describe(self):
        rule = Rule(conditions=(Condition(0, "le", 1.5),), support=0.5)
        assert rule.describe(["age"]) == "age <= 1.5"


class TestExtractRules:
    def test_supports_within_bounds(self):
        d = make_dataset()
        basis = extract_rules(d, n_trees=20, max_depth=2, seed=1, min_support=0.1)
        for r in basis.prognostic + basis.modifier:
            assert 0.1 <= r.support <= 0.9

    def test_no_duplicate_or_complement_indicators(self):
        d = make_dataset(seed=2)
        basis = extract_rules(d, n_trees=20, max_depth=2, seed=1)
        z = basis.z_prognostic
        seen = set()
        for j in range(z.shape[1]):
            key = z[:, j].astype(bool).tobytes()
            comp = (~z[:, j].astype(bool)).tobytes()
            assert key not in seen and comp not in seen
            seen.add(key)

    def test_indicator_columns_match_rules(self):
        d = make_dataset(seed=3)
        basis = extract_rules(d, n_trees=10, max_depth=2, seed=4)
        for j, rule in enumerate(basis.modifier):
            assert np.array_equal(basis.z_modifier[:, j], rule.indicator(d.x))

    def test_deterministic(self):
        d = make_dataset(seed=4)
        a = extract_rules(d, n_trees=10, max_depth=2, seed=9)
        b = extract_rules(d, n_trees=10, max_depth=2, seed=9)
        assert a.prognostic == b.prognostic and a.modifier == b.modifier

    def test_modifier_rules_find_true_boundary(self):
        d = make_dataset(n=1500, seed=5)
        basis = extract_rules(d, n_trees=50, max_depth=2, seed=0)
        hits = [
            r
            for r in basis.modifier
            for c in r.conditions
            if c.column == 0 and abs(c.threshold) < 0.3
        ]
        assert hits, "expected a modifier rule near the x1 > 0 boundary"

    def test_to_text_lists_rules(self):
        d = make_dataset(seed=6)
        basis = extract_rules(d, n_trees=5, max_depth=1, seed=0)
        text = basis.to_text(["u", "v", "w"])
        assert "prognostic rules" in text and "support" in text


class TestFitRuleBcf:
    def test_reduces_to_ridge_on_matching_basis(self):
        # a basis whose centered design equals the covariates makes the
        # two samplers run the identical Gibbs kernel draw for draw;
        # interleaved mirror-image rows at a power-of-two length make the
        # column means exactly zero, so the basis centering is a no-op at
        # the bit level
        rng = np.random.default_rng(7)
        half = rng.standard_normal((64, 3))
        x = np.empty((128, 3))
        x[0::2] = half
        x[1::2] = -half
        n = x.shape[0]
        a = (rng.uniform(size=n) < 0.4).astype(float)
        y = x[:, 1] + a * (0.5 + x[:, 0]) + 0.3 * rng.standard_normal(n)
        d = Dataset(
            y=y, a=a, x=x,
            kinds=tuple(ColumnKind(CONTINUOUS) for _ in range(3)),
            propensity=np.full(n, 0.4),
        )
        basis = RuleBasis(
            prognostic=(), modifier=(),
            z_prognostic=np.asarray(d.x), z_modifier=np.asarray(d.x),
        )
        mcmc = McmcConfig(n_draws=60, n_burn=30, seed=5)
        a = fit_rule_bcf(d, basis, RidgePrior(), mcmc)
        b = fit_ridge(d, RidgePrior(), mcmc)
        assert np.array_equal(a.tau, b.tau)
        assert np.array_equal(a.hyper, b.hyper)

    def test_empty_prognostic_basis_rejected(self):
        d = make_dataset(seed=8)
        basis = RuleBasis(
            prognostic=(), modifier=(),
            z_prognostic=np.empty((d.n, 0)), z_modifier=np.empty((d.n, 0)),
        )
        with pytest.raises(FitError, match="prognostic"):
            fit_rule_bcf(d, basis, RidgePrior(), McmcConfig(n_draws=10, n_burn=0))

    def test_empty_modifier_basis_gives_homogeneous_tau(self):
        d_raw = make_dataset(n=120, seed=9, hetero=False)
        d, _ = standardize(d_raw)
        basis = RuleBasis(
            prognostic=(), modifier=(),
            z_prognostic=np.asarray(d.x), z_modifier=np.empty((d.n, 0)),
        )
        draws = fit_rule_bcf(d, basis, RidgePrior(), McmcConfig(n_draws=20, n_burn=5))
        assert np.allclose(draws.tau, draws.tau[:, :1])

    def test_recovers_step_effect(self):
        d_raw = make_dataset(n=1200, seed=10)
        d, recipe = standardize(d_raw)
        basis = extract_rules(d, n_trees=40, max_depth=2, seed=3)
        draws = fit_rule_bcf(
            d, basis, RidgePrior(), McmcConfig(n_draws=400, n_burn=200, seed=1)
        )
        tau_hat = draws.tau_hat() * recipe.y_scale
        truth = 0.5 + 0.8 * (d_raw.x[:, 0] > 0)
        assert np.mean((tau_hat - truth) ** 2) < 0.05

    def test_meta_counts_rules(self):
        d_raw = make_dataset(n=200, seed=11)
        d, _ = standardize(d_raw)
        basis = extract_rules(d, n_trees=10, max_depth=2, seed=2)
        draws = fit_rule_bcf(d, basis, RidgePrior(), McmcConfig(n_draws=10, n_burn=2))
        assert draws.meta["n_prognostic_rules"] == basis.z_prognostic.shape[1]
        assert draws.meta["model"] == "rule-bcf"
