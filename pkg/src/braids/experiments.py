"""Experiment pipelines: realized utility, post-selection coverage, and
prior-predictive calibration.

Replications are driven by named substreams of a single root seed, so
reports are bit-identical for a fixed (config, seed) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import invgamma

from .data import ColumnKind, CONTINUOUS, Dataset, build_cutpoints, standardize
from .dgp import SyntheticDgp, Truth, generate, realized_rn_utility
from .inference import aipw_subgroup
from .ridge import McmcConfig, PosteriorDraws, RidgePrior, fit_ridge, flat_linear_prior
from .rng import spawn_seed, substream
from .rules import extract_rules, fit_rule_bcf
from .search import SearchConfig, search_greedy_rn
from .utility import group_tau_draws

UTILITY_METHODS = ("ridge", "flat-linear", "rule-bcf")
COVERAGE_PIPELINES = (
    "bayes-ridge-doubledip",
    "bayes-rulebcf-doubledip",
    "flat-linear-doubledip",
    "honest-aipw",
)


@dataclass(frozen=True)
class ExperimentConfig:
    mcmc_draws: int = 1000
    mcmc_burn: int = 500
    s_tau: float = 1.0
    search_depth: int = 2
    min_leaf: int = 25
    rule_trees: int = 50
    rule_depth: int = 3


def _fit_method(method: str, d_std: Dataset, cfg: ExperimentConfig, seed: int) -> PosteriorDraws:
    mcmc = McmcConfig(n_draws=cfg.mcmc_draws, n_burn=cfg.mcmc_burn, seed=seed)
    if method == "ridge":
        return fit_ridge(d_std, RidgePrior(s_tau=cfg.s_tau), mcmc)
    if method == "flat-linear":
        return fit_ridge(d_std, flat_linear_prior(), mcmc)
    if method == "rule-bcf":
        basis = extract_rules(
            d_std, n_trees=cfg.rule_trees, max_depth=cfg.rule_depth, seed=seed
        )
        if basis.z_prognostic.shape[1] == 0:
            raise RuntimeError("rule extraction produced no prognostic rules")
        return fit_rule_bcf(d_std, basis, RidgePrior(s_tau=cfg.s_tau), mcmc)
    raise ValueError(f"unknown method {method!r}")


def _detect_subgroups(tau_hat: np.ndarray, d_std: Dataset, cfg: ExperimentConfig):
    grid = build_cutpoints(d_std, min_leaf=cfg.min_leaf)
    scfg = SearchConfig(
        max_depth=cfg.search_depth, min_leaf=cfg.min_leaf, mode="greedy", lam=1.0
    )
    tree = search_greedy_rn(tau_hat, d_std, grid, scfg)
    return tree, tree.assign(d_std.x)


@dataclass
class MethodResult:
    name: str
    cate_mse: np.ndarray  # per successful rep
    utility: np.ndarray
    failed_reps: list = field(default_factory=list)

    def summary(self) -> dict:
        r = len(self.cate_mse)
        return {
            "method": self.name,
            "reps": r,
            "mse_mean": float(np.mean(self.cate_mse)),
            "mse_se": float(np.std(self.cate_mse, ddof=1) / np.sqrt(r)),
            "utility_mean": float(np.mean(self.utility)),
            "utility_se": float(np.std(self.utility, ddof=1) / np.sqrt(r)),
            "failed": len(self.failed_reps),
        }


@dataclass
class UtilityExperimentReport:
    results: dict  # method -> MethodResult
    reps: int
    n: int
    seed: int

    def summaries(self) -> list[dict]:
        return [r.summary() for r in self.results.values()]


def paired_margin(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Mean and MC standard error of the paired difference a - b."""
    diff = np.asarray(a) - np.asarray(b)
    return float(diff.mean()), float(diff.std(ddof=1) / np.sqrt(len(diff)))


def run_utility_experiment(
    dgp: SyntheticDgp,
    methods: tuple[str, ...],
    reps: int,
    n: int,
    seed: int,
    cfg: ExperimentConfig | None = None,
) -> UtilityExperimentReport:
    """Per-method CATE MSE and realized risk-neutral utility over reps."""
    cfg = cfg or ExperimentConfig()
    unknown = set(methods) - set(UTILITY_METHODS)
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}")
    if reps < 2:
        raise ValueError("reps must be at least 2")
    acc = {m: {"mse": [], "util": [], "failed": []} for m in methods}
    for rep in range(reps):
        d, truth = generate(dgp, n, spawn_seed(seed, "utility", rep))
        d_std, recipe = standardize(d)
        for method in methods:
            fit_seed = spawn_seed(seed, "fit", method, rep)
            try:
                draws = _fit_method(method, d_std, cfg, fit_seed)
            except Exception as exc:  # recorded, excluded from aggregates
                acc[method]["failed"].append((rep, repr(exc)))
                continue
            tau_hat_std = draws.tau_hat()
            tau_hat = tau_hat_std * recipe.y_scale
            acc[method]["mse"].append(float(np.mean((truth.tau0 - tau_hat) ** 2)))
            tree, labels = _detect_subgroups(tau_hat_std, d_std, cfg)
            acc[method]["util"].append(realized_rn_utility(truth.tau0, labels))
    results = {
        m: MethodResult(
            name=m,
            cate_mse=np.asarray(acc[m]["mse"]),
            utility=np.asarray(acc[m]["util"]),
            failed_reps=acc[m]["failed"],
        )
        for m in methods
    }
    return UtilityExperimentReport(results=results, reps=reps, n=n, seed=seed)


@dataclass
class PipelineResult:
    name: str
    covered: int
    total: int
    widths: np.ndarray
    skipped_groups: int = 0

    @property
    def coverage(self) -> float:
        return self.covered / self.total

    @property
    def coverage_se(self) -> float:
        p = self.coverage
        return float(np.sqrt(p * (1 - p) / self.total))

    def summary(self) -> dict:
        return {
            "pipeline": self.name,
            "coverage": self.coverage,
            "coverage_se": self.coverage_se,
            "intervals": self.total,
            "mean_width": float(np.mean(self.widths)),
            "skipped_groups": self.skipped_groups,
        }


@dataclass
class CoverageExperimentReport:
    results: dict  # pipeline -> PipelineResult
    reps: int
    seed: int

    def summaries(self) -> list[dict]:
        return [r.summary() for r in self.results.values()]


def _ols_mu_hats(d: Dataset, x_eval: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-arm least-squares outcome regressions evaluated at x_eval."""
    preds = []
    for arm in (0, 1):
        mask = d.a == arm
        design = np.column_stack([np.ones(mask.sum()), d.x[mask]])
        coef, *_ = np.linalg.lstsq(design, d.y[mask], rcond=None)
        preds.append(np.column_stack([np.ones(x_eval.shape[0]), x_eval]) @ coef)
    return preds[0], preds[1]


def run_coverage_experiment(
    dgp: SyntheticDgp,
    pipelines: tuple[str, ...],
    reps: int,
    n_fit: int,
    n_holdout: int,
    alpha: float,
    seed: int,
    cfg: ExperimentConfig | None = None,
) -> CoverageExperimentReport:
    """Interval coverage of data-dependent subgroup effects, honest vs
    double dipping."""
    cfg = cfg or ExperimentConfig()
    unknown = set(pipelines) - set(COVERAGE_PIPELINES)
    if unknown:
        raise ValueError(f"unknown pipelines {sorted(unknown)}")
    if reps < 2:
        raise ValueError("reps must be at least 2")
    acc = {p: {"covered": 0, "total": 0, "widths": [], "skipped": 0} for p in pipelines}
    fitter_for = {
        "bayes-ridge-doubledip": "ridge",
        "bayes-rulebcf-doubledip": "rule-bcf",
        "flat-linear-doubledip": "flat-linear",
        "honest-aipw": "ridge",  # detection model; estimation is AIPW on holdout
    }
    for rep in range(reps):
        d_all, truth_all = generate(dgp, n_fit + n_holdout, spawn_seed(seed, "cov", rep))
        fit_idx = np.arange(n_fit)
        hold_idx = np.arange(n_fit, n_fit + n_holdout)
        d_fit = Dataset(
            y=d_all.y[fit_idx], a=d_all.a[fit_idx], x=d_all.x[fit_idx],
            kinds=d_all.kinds, propensity=d_all.propensity[fit_idx],
        )
        d_hold = Dataset(
            y=d_all.y[hold_idx], a=d_all.a[hold_idx], x=d_all.x[hold_idx],
            kinds=d_all.kinds, propensity=d_all.propensity[hold_idx],
        )
        tau0_fit = truth_all.tau0[fit_idx]
        tau0_hold = truth_all.tau0[hold_idx]
        d_std, recipe = standardize(d_fit)
        for pipe in pipelines:
            fit_seed = spawn_seed(seed, "fit", pipe, rep)
            draws = _fit_method(fitter_for[pipe], d_std, cfg, fit_seed)
            tree, labels = _detect_subgroups(draws.tau_hat(), d_std, cfg)
            k = tree.n_groups
            if pipe == "honest-aipw":
                # thresholds are in standardized units; map holdout x
                x_hold_std = (d_hold.x - recipe.x_centers) / recipe.x_scales
                hold_labels = tree.assign(x_hold_std)
                mu0, mu1 = _ols_mu_hats(d_hold, d_hold.x)
                for g in range(k):
                    mask = hold_labels == g
                    if mask.sum() < 2:
                        acc[pipe]["skipped"] += 1
                        continue
                    est = aipw_subgroup(d_hold, mu0, mu1, mask, alpha=alpha)
                    lo, hi = est.interval
                    target = float(tau0_hold[mask].mean())
                    acc[pipe]["covered"] += int(lo <= target <= hi)
                    acc[pipe]["total"] += 1
                    acc[pipe]["widths"].append(hi - lo)
            else:
                gdraws = group_tau_draws(draws.tau, labels, k) * recipe.y_scale
                lo = np.quantile(gdraws, alpha / 2, axis=0)
                hi = np.quantile(gdraws, 1 - alpha / 2, axis=0)
                for g in range(k):
                    target = float(tau0_fit[labels == g].mean())
                    acc[pipe]["covered"] += int(lo[g] <= target <= hi[g])
                    acc[pipe]["total"] += 1
                    acc[pipe]["widths"].append(hi[g] - lo[g])
    results = {
        p: PipelineResult(
            name=p,
            covered=acc[p]["covered"],
            total=acc[p]["total"],
            widths=np.asarray(acc[p]["widths"]),
            skipped_groups=acc[p]["skipped"],
        )
        for p in pipelines
    }
    return CoverageExperimentReport(results=results, reps=reps, seed=seed)


@dataclass(frozen=True)
class CalibrationDesign:
    n: int = 200
    p: int = 3
    treat_prob: float = 0.2


@dataclass
class CalibrationResult:
    tau_covered: int
    tau_total: int
    delta_covered: int
    delta_total: int
    alpha: float

    @property
    def tau_coverage(self) -> float:
        return self.tau_covered / self.tau_total

    @property
    def delta_coverage(self) -> float:
        return self.delta_covered / self.delta_total

    def binomial_se(self, which: str = "tau") -> float:
        nominal = 1 - self.alpha
        total = self.tau_total if which == "tau" else self.delta_total
        return float(np.sqrt(nominal * (1 - nominal) / total))

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "tau_coverage": self.tau_coverage,
            "delta_coverage": self.delta_coverage,
            "intervals": self.tau_total,
            "binomial_se": self.binomial_se(),
        }


def prior_predictive_calibration(
    gen_prior: RidgePrior,
    design: CalibrationDesign,
    reps: int,
    alpha: float,
    seed: int,
    fit_prior: RidgePrior | None = None,
    cfg: ExperimentConfig | None = None,
) -> CalibrationResult:
    """Marginal coverage of data-dependent subgroup intervals when the
    truth is drawn from the prior.

    With ``fit_prior`` equal to the generating prior the marginal
    coverage is exactly 1 - alpha; a mismatched fit prior serves as a
    negative control. Subgroups are re-detected inside each replication.
    """
    if reps < 50:
        raise ValueError("reps must be at least 50")
    fit_prior = fit_prior or gen_prior
    cfg = cfg or ExperimentConfig()
    tau_cov = tau_tot = delta_cov = delta_tot = 0
    for rep in range(reps):
        rng = substream(seed, "calib", rep)
        x = rng.standard_normal((design.n, design.p))
        a = (rng.uniform(size=design.n) < design.treat_prob).astype(float)
        # draw theta from the generating prior
        b0m, b0t = rng.normal(0.0, gen_prior.intercept_sd, size=2)
        bm = rng.normal(0.0, gen_prior.sigma_mu, size=design.p)
        st = (
            gen_prior.sigma_tau_fixed
            if gen_prior.sigma_tau_fixed is not None
            else rng.exponential(gen_prior.s_tau)
        )
        bt = rng.normal(0.0, st, size=design.p)
        sigma = (
            gen_prior.sigma_fixed
            if gen_prior.sigma_fixed is not None
            else float(
                np.sqrt(
                    invgamma.rvs(
                        gen_prior.sigma2_shape,
                        scale=gen_prior.sigma2_rate,
                        random_state=rng,
                    )
                )
            )
        )
        tau_true = b0t + x @ bt
        y = b0m + x @ bm + a * tau_true + sigma * rng.standard_normal(design.n)
        if a.sum() in (0, design.n):  # degenerate arm draw; skip
            continue
        d = Dataset(
            y=y,
            a=a,
            x=x,
            kinds=tuple(ColumnKind(CONTINUOUS) for _ in range(design.p)),
            propensity=np.full(design.n, design.treat_prob),
        )
        mcmc = McmcConfig(
            n_draws=cfg.mcmc_draws,
            n_burn=cfg.mcmc_burn,
            seed=spawn_seed(seed, "calib-fit", rep),
        )
        draws = fit_ridge(d, fit_prior, mcmc)
        tree, labels = _detect_subgroups(draws.tau_hat(), d, cfg)
        k = tree.n_groups
        gdraws = group_tau_draws(draws.tau, labels, k)
        ddraws = gdraws - draws.ate[:, None]
        g_lo = np.quantile(gdraws, alpha / 2, axis=0)
        g_hi = np.quantile(gdraws, 1 - alpha / 2, axis=0)
        d_lo = np.quantile(ddraws, alpha / 2, axis=0)
        d_hi = np.quantile(ddraws, 1 - alpha / 2, axis=0)
        ate_true = float(tau_true.mean())
        for g in range(k):
            target = float(tau_true[labels == g].mean())
            tau_cov += int(g_lo[g] <= target <= g_hi[g])
            tau_tot += 1
            delta_cov += int(d_lo[g] <= target - ate_true <= d_hi[g])
            delta_tot += 1
    return CalibrationResult(
        tau_covered=tau_cov,
        tau_total=tau_tot,
        delta_covered=delta_cov,
        delta_total=delta_tot,
        alpha=alpha,
    )
