import numpy as np
import pytest
from scipy import stats

from braids.data import CONTINUOUS, ColumnKind, Dataset
from braids.ridge import (
    DesignGroups,
    FitError,
    McmcConfig,
    PosteriorDraws,
    RidgePrior,
    fit_ridge,
    flat_linear_prior,
    prior_heterogeneity_mean_linear,
    run_gibbs,
    slice_sample_1d,
)


def make_dataset(n=80, p=2, seed=0, treat_prob=0.5):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    a = (rng.uniform(size=n) < treat_prob).astype(float)
    y = x @ rng.standard_normal(p) + a * (0.5 + x[:, 0]) + 0.5 * rng.standard_normal(n)
    return Dataset(
        y=y, a=a, x=x,
        kinds=tuple(ColumnKind(CONTINUOUS) for _ in range(p)),
        propensity=np.full(n, treat_prob),
    )


def conjugate_posterior(design, y, sd_prior, sigma):
    """Closed-form N(mean, cov) posterior for beta with all scales fixed."""
    prec = design.T @ design / sigma**2 + np.diag(1.0 / sd_prior**2)
    cov = np.linalg.inv(prec)
    mean = cov @ (design.T @ y) / sigma**2
    return mean, cov


class TestConjugateOracle:
    @pytest.mark.parametrize("seed", range(5))
    def test_fixed_scales_match_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        n, d = 40, 4
        design = rng.standard_normal((n, d))
        y = design @ rng.standard_normal(d) + rng.standard_normal(n)
        prior = RidgePrior(
            sigma_mu=2.0, intercept_sd=10.0, sigma_tau_fixed=1.5, sigma_fixed=1.0
        )
        groups = DesignGroups(
            flat=np.array([0]), prognostic=np.array([1, 2]), modifier=np.array([3])
        )
        sd_prior = np.array([10.0, 2.0, 2.0, 1.5])
        mean, cov = conjugate_posterior(design, y, sd_prior, 1.0)
        s = 4000
        out = run_gibbs(
            design, y, groups, prior,
            McmcConfig(n_draws=s, n_burn=100, seed=seed),
            np.random.default_rng(seed),
        )
        beta = out["beta"]
        # with fixed scales the draws are iid from the exact posterior
        mc_se_mean = np.sqrt(np.diag(cov) / s)
        assert np.all(np.abs(beta.mean(axis=0) - mean) < 4 * mc_se_mean)
        emp_cov = np.cov(beta.T)
        # variance of a sample variance is about 2 var^2 / s
        var_se = np.sqrt(2.0 / s) * np.diag(cov)
        assert np.all(np.abs(np.diag(emp_cov) - np.diag(cov)) < 4 * var_se)

    def test_fixed_scale_draws_pass_normality_check(self):
        rng = np.random.default_rng(9)
        design = rng.standard_normal((30, 3))
        y = rng.standard_normal(30)
        prior = RidgePrior(sigma_tau_fixed=1.0, sigma_fixed=1.0)
        groups = DesignGroups(
            flat=np.array([0]), prognostic=np.array([1]), modifier=np.array([2])
        )
        out = run_gibbs(
            design, y, groups, prior, McmcConfig(n_draws=2000, n_burn=10, seed=1),
            np.random.default_rng(1),
        )
        mean, cov = conjugate_posterior(design, y, np.array([1e6, 1.0, 1.0]), 1.0)
        z = (out["beta"][:, 2] - mean[2]) / np.sqrt(cov[2, 2])
        assert stats.kstest(z, "norm").pvalue > 1e-3


class TestFitRidge:
    def test_deterministic_given_seed(self):
        d = make_dataset()
        mcmc = McmcConfig(n_draws=50, n_burn=20, seed=3)
        a = fit_ridge(d, RidgePrior(), mcmc)
        b = fit_ridge(d, RidgePrior(), mcmc)
        assert np.array_equal(a.tau, b.tau)
        assert np.array_equal(a.hyper, b.hyper)

    def test_seed_changes_draws(self):
        d = make_dataset()
        a = fit_ridge(d, RidgePrior(), McmcConfig(n_draws=50, n_burn=20, seed=3))
        b = fit_ridge(d, RidgePrior(), McmcConfig(n_draws=50, n_burn=20, seed=4))
        assert not np.array_equal(a.tau, b.tau)

    def test_recovers_effect_surface(self):
        d = make_dataset(n=600, seed=1)
        draws = fit_ridge(d, RidgePrior(), McmcConfig(n_draws=800, n_burn=400, seed=0))
        truth = 0.5 + d.x[:, 0]
        assert np.mean((draws.tau_hat() - truth) ** 2) < 0.02

    def test_one_armed_data_rejected(self):
        d = make_dataset()
        d2 = Dataset(
            y=d.y, a=np.zeros(d.n), x=d.x, kinds=d.kinds, propensity=d.propensity
        )
        with pytest.raises(FitError, match="one-armed"):
            fit_ridge(d2, RidgePrior(), McmcConfig(n_draws=10, n_burn=0))

    def test_observational_residualizes_treatment(self):
        # shifting the propensity changes the design, hence the draws
        d = make_dataset(seed=5)
        mcmc = McmcConfig(n_draws=30, n_burn=10, seed=7)
        rct = fit_ridge(d, RidgePrior(), mcmc, observational=False)
        obs = fit_ridge(d, RidgePrior(), mcmc, observational=True)
        assert not np.allclose(rct.tau, obs.tau)

    def test_meta_recorded(self):
        d = make_dataset()
        draws = fit_ridge(d, RidgePrior(), McmcConfig(n_draws=20, n_burn=5, seed=2))
        assert draws.meta["model"] == "ridge"
        assert draws.meta["seed"] == 2

    def test_flat_prior_hyper_constant(self):
        d = make_dataset()
        draws = fit_ridge(
            d, flat_linear_prior(), McmcConfig(n_draws=30, n_burn=10, seed=0)
        )
        assert np.all(draws.hyper[:, 1] == 100.0)

    def test_hierarchical_sigma_tau_shrinks_on_null(self):
        # homogeneous truth: the heterogeneity scale posterior should sit
        # well below its Exp(1) prior mean
        rng = np.random.default_rng(6)
        n = 400
        x = rng.standard_normal((n, 3))
        a = (rng.uniform(size=n) < 0.5).astype(float)
        y = x[:, 0] + 0.4 * a + 0.3 * rng.standard_normal(n)
        d = Dataset(
            y=y, a=a, x=x,
            kinds=tuple(ColumnKind(CONTINUOUS) for _ in range(3)),
            propensity=np.full(n, 0.5),
        )
        draws = fit_ridge(d, RidgePrior(), McmcConfig(n_draws=500, n_burn=300, seed=1))
        assert np.median(draws.hyper[:, 1]) < 0.25


class TestPosteriorDraws:
    def test_ate_consistency_enforced(self):
        tau = np.ones((3, 4))
        with pytest.raises(ValueError, match="row means"):
            PosteriorDraws(tau=tau, ate=np.zeros(3), hyper=np.ones((3, 2)))

    def test_nonfinite_rejected(self):
        tau = np.ones((3, 4))
        tau[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            PosteriorDraws(tau=tau, ate=tau.mean(axis=1), hyper=np.ones((3, 2)))


class TestSliceSampler:
    def test_targets_standard_normal(self):
        rng = np.random.default_rng(0)
        logpdf = lambda t: -0.5 * t * t
        x, out = 0.0, []
        for _ in range(4000):
            x = slice_sample_1d(logpdf, x, rng)
            out.append(x)
        out = np.asarray(out[500:])
        assert abs(out.mean()) < 0.08
        assert abs(out.std() - 1.0) < 0.08


class TestPriorHeterogeneityLinear:
    def test_fixed_scale_identity(self):
        corr = np.eye(4)
        assert prior_heterogeneity_mean_linear(corr, sigma_tau=2.0) == 16.0

    def test_exponential_scale_identity(self):
        # E sigma_tau^2 = 2 s^2 under Exp(scale s)
        corr = np.eye(3)
        assert prior_heterogeneity_mean_linear(corr, s_tau=1.0) == 6.0

    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(1)
        p, s = 3, 200_000
        sigma_taus = rng.exponential(1.0, size=s)
        bt = rng.standard_normal((s, p)) * sigma_taus[:, None]
        h2 = np.sum(bt**2, axis=1)  # Var(X'bt | bt) with identity corr
        expect = prior_heterogeneity_mean_linear(np.eye(p), s_tau=1.0)
        se = h2.std() / np.sqrt(s)
        assert abs(h2.mean() - expect) < 4 * se

    def test_unit_diagonal_required(self):
        with pytest.raises(ValueError, match="unit diagonal"):
            prior_heterogeneity_mean_linear(2 * np.eye(2), sigma_tau=1.0)

    def test_exactly_one_scale(self):
        with pytest.raises(ValueError):
            prior_heterogeneity_mean_linear(np.eye(2), s_tau=1.0, sigma_tau=1.0)
