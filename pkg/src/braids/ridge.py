"""Blocked Gibbs sampler for the linear heterogeneous-effects model.

The model is

    Y_i = b0m + X_i' bm + A_i (b0t + X_i' bt) + eps_i,   eps_i ~ N(0, sigma^2)

with near-flat normal priors on the intercepts, bm ~ N(0, sigma_mu^2 I),
bt ~ N(0, sigma_tau^2 I), sigma_tau ~ Exp(scale s_tau), and an
inverse-gamma prior on sigma^2. In observational mode A_i is replaced by
its residual A_i - e(X_i) in the design.

The coefficient block is conjugate multivariate normal given the scales;
sigma^2 has an inverse-gamma full conditional; sigma_tau is updated by
slice sampling on the log scale. The same kernel is reused by the
rule-ensemble model, which only changes the design matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .data import Dataset


class FitError(ValueError):
    """Raised when a model cannot be fit on the given data."""


@dataclass(frozen=True)
class RidgePrior:
    """Prior scales for the regularized linear treatment-effect model.

    ``sigma_tau_fixed`` / ``sigma_fixed`` freeze the corresponding scale
    instead of sampling it (degenerate hyperprior), which is useful for
    testing against closed-form conjugate posteriors.
    """

    sigma_mu: float = 1.0
    s_tau: float = 1.0
    sigma2_shape: float = 1.0
    sigma2_rate: float = 1.0
    intercept_sd: float = 1e6
    sigma_tau_fixed: Optional[float] = None
    sigma_fixed: Optional[float] = None

    def __post_init__(self):
        for name in ("sigma_mu", "s_tau", "sigma2_shape", "sigma2_rate", "intercept_sd"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def flat_linear_prior(scale: float = 100.0) -> RidgePrior:
    """Flat-but-proper prior: slope scales fixed at ``scale``."""
    return RidgePrior(sigma_mu=scale, sigma_tau_fixed=scale)


@dataclass(frozen=True)
class McmcConfig:
    n_draws: int = 2000
    n_burn: int = 1000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_draws < 2:
            raise ValueError("n_draws must be at least 2")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.n_burn < 0:
            raise ValueError("n_burn must be nonnegative")


@dataclass(frozen=True)
class PosteriorDraws:
    """S x N matrix of unit-level treatment-effect draws."""

    tau: np.ndarray  # (S, N)
    ate: np.ndarray  # (S,), row means of tau
    hyper: np.ndarray  # (S, 2): sigma, sigma_tau per draw
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        ate = np.asarray(self.ate, dtype=float)
        if tau.ndim != 2 or tau.shape[0] < 2:
            raise ValueError("tau must be S x N with S >= 2")
        if not np.all(np.isfinite(tau)):
            raise ValueError("non-finite entries in tau draws")
        if not np.allclose(ate, tau.mean(axis=1), rtol=0, atol=1e-12):
            raise ValueError("ate must equal row means of tau")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "ate", ate)
        object.__setattr__(self, "hyper", np.asarray(self.hyper, dtype=float))

    @property
    def n_draws(self) -> int:
        return self.tau.shape[0]

    @property
    def n_units(self) -> int:
        return self.tau.shape[1]

    def tau_hat(self) -> np.ndarray:
        """Posterior mean treatment effect per unit."""
        return self.tau.mean(axis=0)


def slice_sample_1d(logpdf, x0: float, rng: np.random.Generator, w: float = 1.0,
                    max_steps: int = 50) -> float:
    """One univariate slice-sampling update (stepping out + shrinkage)."""
    log_y = logpdf(x0) + np.log(rng.uniform())
    u = rng.uniform()
    lo, hi = x0 - w * u, x0 + w * (1 - u)
    for _ in range(max_steps):
        if logpdf(lo) < log_y:
            break
        lo -= w
    for _ in range(max_steps):
        if logpdf(hi) < log_y:
            break
        hi += w
    while True:
        x1 = rng.uniform(lo, hi)
        if logpdf(x1) >= log_y:
            return x1
        if x1 < x0:
            lo = x1
        else:
            hi = x1


@dataclass(frozen=True)
class DesignGroups:
    """Column roles in a linear design: which prior sd applies where."""

    flat: np.ndarray  # intercept-like columns, sd = intercept_sd
    prognostic: np.ndarray  # sd = sigma_mu
    modifier: np.ndarray  # sd = sigma_tau (hierarchical)


def run_gibbs(
    design: np.ndarray,
    y: np.ndarray,
    groups: DesignGroups,
    prior: RidgePrior,
    mcmc: McmcConfig,
    rng: np.random.Generator,
) -> dict:
    """Run the blocked Gibbs kernel; returns coefficient and scale draws."""
    n, d = design.shape
    xtx = design.T @ design
    xty = design.T @ y
    yty = float(y @ y)

    sd = np.empty(d)
    sd[groups.flat] = prior.intercept_sd
    sd[groups.prognostic] = prior.sigma_mu

    sigma = prior.sigma_fixed if prior.sigma_fixed is not None else 1.0
    sigma_tau = (
        prior.sigma_tau_fixed if prior.sigma_tau_fixed is not None else prior.s_tau
    )
    k_mod = len(groups.modifier)

    n_keep = mcmc.n_draws
    total = mcmc.n_burn + n_keep * mcmc.thin
    beta_out = np.empty((n_keep, d))
    sigma_out = np.empty(n_keep)
    sigma_tau_out = np.empty(n_keep)
    kept = 0

    beta = np.zeros(d)
    for it in range(total):
        sd[groups.modifier] = sigma_tau
        prec = xtx / sigma**2
        prec[np.diag_indices(d)] += 1.0 / sd**2
        try:
            chol_l = cholesky(prec, lower=True)
        except np.linalg.LinAlgError as exc:  # cannot occur with positive scales
            raise FitError("singular penalized design") from exc
        mean = cho_solve((chol_l, True), xty / sigma**2)
        z = rng.standard_normal(d)
        # solving chol(prec)^T b = z gives b ~ N(0, prec^-1)
        beta = mean + solve_triangular(chol_l.T, z, lower=False)

        if prior.sigma_fixed is None:
            rss = yty - 2 * beta @ xty + beta @ xtx @ beta
            rss = max(rss, 0.0)
            shape = prior.sigma2_shape + n / 2.0
            rate = prior.sigma2_rate + rss / 2.0
            sigma = 1.0 / np.sqrt(rng.gamma(shape, 1.0 / rate))

        if prior.sigma_tau_fixed is None:
            if k_mod == 0:
                sigma_tau = rng.exponential(prior.s_tau)
            else:
                sb = float(np.sum(beta[groups.modifier] ** 2))
                s_tau = prior.s_tau

                def logpost(theta):
                    # theta = log sigma_tau; includes the Jacobian term
                    st = np.exp(theta)
                    return -st / s_tau - k_mod * theta - sb / (2 * st**2) + theta

                theta = slice_sample_1d(logpost, np.log(sigma_tau), rng)
                sigma_tau = float(np.exp(theta))

        if it >= mcmc.n_burn and (it - mcmc.n_burn) % mcmc.thin == 0:
            beta_out[kept] = beta
            sigma_out[kept] = sigma
            sigma_tau_out[kept] = sigma_tau
            kept += 1
    return {"beta": beta_out, "sigma": sigma_out, "sigma_tau": sigma_tau_out}


def _treatment_column(d: Dataset, observational: bool) -> np.ndarray:
    if observational:
        return d.a - d.propensity
    return d.a.copy()


def fit_ridge(
    d: Dataset,
    prior: RidgePrior,
    mcmc: McmcConfig,
    observational: bool = False,
) -> PosteriorDraws:
    """Posterior draws of tau(X_i) under the linear model.

    Expects a standardized Dataset (the prior scales are calibrated to
    unit-variance data). Both treatment arms must be present.
    """
    if d.a.sum() == 0 or d.a.sum() == d.n:
        raise FitError("one-armed data: both treatment arms required")
    a_col = _treatment_column(d, observational)
    design = np.column_stack([np.ones(d.n), d.x, a_col, a_col[:, None] * d.x])
    p = d.p
    groups = DesignGroups(
        flat=np.array([0, 1 + p]),
        prognostic=np.arange(1, 1 + p),
        modifier=np.arange(2 + p, 2 + 2 * p),
    )
    rng = np.random.default_rng(mcmc.seed)
    out = run_gibbs(design, d.y, groups, prior, mcmc, rng)
    beta = out["beta"]
    tau = beta[:, 1 + p][:, None] + (d.x @ beta[:, 2 + p:].T).T
    return PosteriorDraws(
        tau=tau,
        ate=tau.mean(axis=1),
        hyper=np.column_stack([out["sigma"], out["sigma_tau"]]),
        meta={
            "model": "ridge",
            "n_burn": mcmc.n_burn,
            "thin": mcmc.thin,
            "seed": mcmc.seed,
            "observational": observational,
        },
    )


def prior_heterogeneity_mean_linear(
    corr: np.ndarray,
    s_tau: Optional[float] = None,
    sigma_tau: Optional[float] = None,
) -> float:
    """Prior mean of H^2 = Var(X' bt | bt) under the linear model.

    With bt ~ N(0, sigma_tau^2 I) and unit-diagonal correlation R, the
    conditional mean is sigma_tau^2 * tr(R) = P sigma_tau^2; integrating
    sigma_tau over Exp(scale s_tau) gives 2 s_tau^2 P. Pass exactly one
    of ``s_tau`` (hyperprior) or ``sigma_tau`` (degenerate).
    """
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError("corr must be a square matrix")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-10):
        raise ValueError("corr must have unit diagonal")
    if (s_tau is None) == (sigma_tau is None):
        raise ValueError("pass exactly one of s_tau, sigma_tau")
    tr = float(np.trace(corr))
    if sigma_tau is not None:
        return sigma_tau**2 * tr
    return 2.0 * s_tau**2 * tr
