"""Command-line front end.

Subcommands: fit, subgroups, policy, calibrate-prior, simulate. A YAML
config supplies all module settings; --seed overrides the config seed.
Exit codes: 0 success, 1 usage error, 2 computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .data import DataError, build_cutpoints, load_dataset, standardize
from .experiments import (
    CalibrationDesign,
    ExperimentConfig,
    prior_predictive_calibration,
    run_coverage_experiment,
    run_utility_experiment,
)
from .dgp import linear_dgp, tree_dgp
from .inference import subgroup_contrast, subgroup_summary
from .io import (
    density_grid,
    export_draws_csv,
    load_draws,
    save_draws,
    trace_summary,
    write_table,
)
from .prior_trees import (
    CHIPMAN,
    POISSON,
    TreePriorConfig,
    geometric_variant_closed_form,
    mean_leaf_depth_chipman,
    prior_heterogeneity_mc,
    heterogeneity_closed_form,
)
from .ridge import FitError, McmcConfig, RidgePrior, fit_ridge
from .rng import spawn_seed
from .rules import extract_rules, fit_rule_bcf
from .search import (
    PrespecifiedGroups,
    SearchConfig,
    SearchError,
    evaluate_prespecified,
    policy_search_exact,
    search_exact,
    search_greedy_rn,
)
from .utility import (
    exceedance_scores,
    expected_efficacy,
    expected_utility_braids,
    expected_welfare,
    welfare_scores,
)

USAGE_ERROR = 1
COMPUTE_ERROR = 2


class UsageError(Exception):
    pass


def _require(cfg: dict, key: str) -> dict:
    if key not in cfg:
        raise UsageError(f"config is missing the {key!r} section")
    return cfg[key]


def _load_data(cfg: dict):
    ds_cfg = _require(cfg, "dataset")
    return load_dataset(
        ds_cfg["path"], ds_cfg["schema"], delta=ds_cfg.get("delta", 1e-3)
    )


def _prior(cfg: dict) -> RidgePrior:
    return RidgePrior(**cfg.get("prior", {}))


def _mcmc(cfg: dict, seed: int) -> McmcConfig:
    sub = cfg.get("mcmc", {})
    return McmcConfig(
        n_draws=sub.get("n_draws", 2000),
        n_burn=sub.get("n_burn", 1000),
        thin=sub.get("thin", 1),
        seed=seed,
    )


def _out_dir(cfg: dict, args) -> Path:
    out = Path(args.output_dir or cfg.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(cfg: dict, args) -> int:
    return args.seed if args.seed is not None else int(cfg.get("seed", 0))


def cmd_fit(cfg: dict, args) -> int:
    d = _load_data(cfg)
    out = _out_dir(cfg, args)
    seed = _seed(cfg, args)
    d_std, recipe = standardize(d)
    model = cfg.get("model", "ridge")
    observational = bool(cfg.get("observational", False))
    prior = _prior(cfg)
    mcmc = _mcmc(cfg, spawn_seed(seed, "fit", model))
    if model == "ridge":
        draws = fit_ridge(d_std, prior, mcmc, observational=observational)
    elif model == "rule-bcf":
        rules_cfg = cfg.get("rules", {})
        basis = extract_rules(
            d_std,
            n_trees=rules_cfg.get("n_trees", 50),
            max_depth=rules_cfg.get("max_depth", 3),
            min_support=rules_cfg.get("min_support", 0.05),
            seed=spawn_seed(seed, "rules"),
        )
        (out / "rule_basis.txt").write_text(basis.to_text(d.names) + "\n")
        if basis.z_modifier.shape[1] == 0:
            print("warning: empty modifier basis; tau draws are constant")
        draws = fit_rule_bcf(d_std, basis, prior, mcmc, observational=observational)
    else:
        raise UsageError(f"unknown model {model!r}")
    save_draws(draws, out / "draws")
    export_draws_csv(draws, out / "draws.csv")
    (out / "recipe.json").write_text(json.dumps(recipe.to_dict(), indent=2) + "\n")
    write_table(trace_summary(draws), out / "trace.csv")
    print(f"wrote {draws.n_draws} draws for {draws.n_units} units to {out}")
    return 0


def _search_cfg(cfg: dict, lam: float) -> SearchConfig:
    sub = cfg.get("search", {})
    return SearchConfig(
        max_depth=sub.get("max_depth", 2),
        min_leaf=sub.get("min_leaf", 10),
        mode=sub.get("mode", "greedy"),
        lam=lam,
        eta=sub.get("eta", 0.0),
    )


def cmd_subgroups(cfg: dict, args) -> int:
    d = _load_data(cfg)
    out = _out_dir(cfg, args)
    d_std, recipe = standardize(d)
    draws = load_draws(out / "draws")
    sub = cfg.get("search", {})
    lambdas = [float(v) for v in sub.get("lambdas", [1.0])]
    grid = build_cutpoints(
        d_std,
        min_leaf=sub.get("min_leaf", 10),
        max_thresholds=sub.get("max_thresholds", 100),
    )
    mode = sub.get("mode", "greedy")
    trees = {}
    reports = []
    if mode == "greedy":
        tree = search_greedy_rn(draws.tau_hat(), d_std, grid, _search_cfg(cfg, 1.0))
        for lam in lambdas:
            trees[lam] = tree
            reports.append(expected_utility_braids(draws, tree, d_std, lam).to_dict())
    else:
        for lam in lambdas:
            tree, report = search_exact(draws, d_std, grid, _search_cfg(cfg, lam))
            trees[lam] = tree
            reports.append(report.to_dict())
    (out / "utility_report.json").write_text(json.dumps(reports, indent=2) + "\n")
    rendering = []
    for lam in lambdas:
        rendering.append(f"# lambda = {lam:g}")
        rendering.append(trees[lam].render(d.names))
    (out / "subgroup_tree.txt").write_text("\n".join(rendering) + "\n")

    summary_tree = trees[lambdas[0]]
    summary = subgroup_summary(draws, summary_tree, d_std, alpha=0.05)
    write_table(summary.to_rows(), out / "subgroup_summary.csv")

    if cfg.get("prespecified"):
        name_to_col = {n: j for j, n in enumerate(d.names)}
        partitions = tuple(
            (p["name"], tuple(name_to_col[c] for c in p["columns"]))
            for p in cfg["prespecified"]
        )
        entries = evaluate_prespecified(
            draws, d_std, PrespecifiedGroups(partitions), tuple(lambdas)
        )
        rows = []
        for e in entries:
            row = {"partition": e.name, "feasible": e.feasible}
            for lam in lambdas:
                row[f"value_lambda_{lam:g}"] = e.values.get(lam, "")
                row[f"rank_lambda_{lam:g}"] = e.ranks.get(lam, "")
            rows.append(row)
        write_table(rows, out / "prespecified_ranking.csv")

    if cfg.get("contrasts"):
        rows = []
        for k1, k2 in cfg["contrasts"]:
            c = subgroup_contrast(draws, summary_tree, d_std, k1 - 1, k2 - 1)
            rows.append(
                {
                    "group_1": k1,
                    "group_2": k2,
                    "mean": c.mean,
                    "lo": c.interval[0],
                    "hi": c.interval[1],
                    "p_negative": c.prob_negative,
                }
            )
        write_table(rows, out / "contrasts.csv")
    print(f"wrote subgroup reports to {out}")
    return 0


def cmd_policy(cfg: dict, args) -> int:
    d = _load_data(cfg)
    out = _out_dir(cfg, args)
    d_std, _ = standardize(d)
    draws = load_draws(out / "draws")
    pol = cfg.get("policy", {})
    kind = pol.get("utility", "welfare")
    delta = float(pol.get("delta", 0.0))
    max_depth = int(pol.get("max_depth", 2))
    if max_depth > 2:
        raise UsageError("exact policy search supports depth <= 2")
    grid = build_cutpoints(d_std, min_leaf=cfg.get("search", {}).get("min_leaf", 10))
    if kind == "welfare":
        scores = welfare_scores(draws, delta)
    elif kind == "efficacy":
        scores = exceedance_scores(draws, delta, float(pol.get("c", 0.1)))
    else:
        raise UsageError(f"unknown policy utility {kind!r}")
    tree, value = policy_search_exact(scores, d_std, grid, max_depth)
    if kind == "welfare":
        check = expected_welfare(draws, tree, d_std, delta)
    else:
        check = expected_efficacy(draws, tree, d_std, delta, float(pol.get("c", 0.1)))
    (out / "policy_tree.txt").write_text(
        tree.render(d.names) + f"\nvalue: {value:.6g}\n"
    )
    (out / "policy.json").write_text(
        json.dumps(
            {"utility": kind, "value": value, "recomputed": check, "tree": tree.to_dict()},
            indent=2,
        )
        + "\n"
    )
    print(f"policy value {value:.6g} ({kind}); wrote {out / 'policy_tree.txt'}")
    return 0


def cmd_calibrate_prior(cfg: dict, args) -> int:
    out = _out_dir(cfg, args)
    seed = _seed(cfg, args)
    cal = cfg.get("calibrate", {})
    tp = TreePriorConfig(
        depth_law=cal.get("depth_law", POISSON),
        lambda_depth=cal.get("lambda_depth", 1.2),
        alpha=cal.get("alpha", 0.95),
        beta=cal.get("beta", 2.0),
        split_rule=cal.get("split_rule", "uniform"),
        m_trees=cal.get("m_trees", 1),
        sigma_tau=cal.get("sigma_tau", 1.0) if "s_tau" not in cal else None,
        s_tau=cal.get("s_tau"),
    )
    rng = np.random.default_rng(spawn_seed(seed, "calibrate-x"))
    x = rng.standard_normal((cal.get("n_rows", 500), cal.get("n_cols", 5)))
    sample, mean_h2, se_h2 = prior_heterogeneity_mc(
        x, tp, n_samples=cal.get("n_samples", 10_000), seed=spawn_seed(seed, "calibrate")
    )
    if tp.sigma_tau is not None:
        sigma_tau = tp.sigma_tau
    else:
        # sigma_tau ~ Exp(scale s) has E(sigma_tau^2) = 2 s^2
        sigma_tau = np.sqrt(2.0) * tp.s_tau
    if tp.depth_law == POISSON:
        lam_depth = tp.lambda_depth
    else:
        lam_depth, _ = mean_leaf_depth_chipman(tp.alpha, tp.beta)
    closed = heterogeneity_closed_form(sigma_tau, lam_depth, tp.split_rule)
    report = {
        "mean_leaf_depth": lam_depth,
        "closed_form_h2": closed,
        "mc_mean_h2": mean_h2,
        "mc_se_h2": se_h2,
    }
    if tp.depth_law == CHIPMAN and tp.beta == 0 and tp.alpha <= 0.5:
        report["geometric_closed_form_h2"] = geometric_variant_closed_form(
            sigma_tau, tp.alpha
        )
    (out / "calibration_report.json").write_text(json.dumps(report, indent=2) + "\n")
    write_table(density_grid(sample.h), out / "h_density.csv")
    write_table(density_grid(sample.m), out / "m_density.csv")
    print(
        f"closed-form E(H^2) = {closed:.4f}, MC = {mean_h2:.4f} (se {se_h2:.4f}); "
        f"wrote {out / 'calibration_report.json'}"
    )
    return 0


def cmd_simulate(cfg: dict, args) -> int:
    out = _out_dir(cfg, args)
    seed = _seed(cfg, args)
    sim = _require(cfg, "simulate")
    experiment = sim.get("experiment", "utility")
    dgp_name = sim.get("dgp", "linear")
    sigma = float(sim.get("sigma", 0.1))
    dgp = {"linear": linear_dgp, "tree": tree_dgp}.get(dgp_name)
    if dgp is None:
        raise UsageError(f"unknown dgp {dgp_name!r}")
    ecfg = ExperimentConfig(
        mcmc_draws=sim.get("mcmc_draws", 1000),
        mcmc_burn=sim.get("mcmc_burn", 500),
        min_leaf=sim.get("min_leaf", 25),
    )
    if experiment == "utility":
        report = run_utility_experiment(
            dgp(sigma=sigma),
            methods=tuple(sim.get("methods", ["ridge", "flat-linear"])),
            reps=int(sim.get("reps", 10)),
            n=int(sim.get("n", 1000)),
            seed=seed,
            cfg=ecfg,
        )
        write_table(report.summaries(), out / "utility_experiment.csv")
        print(f"wrote {out / 'utility_experiment.csv'}")
    elif experiment == "coverage":
        report = run_coverage_experiment(
            dgp(sigma=sigma),
            pipelines=tuple(sim.get("pipelines", ["bayes-ridge-doubledip", "honest-aipw"])),
            reps=int(sim.get("reps", 10)),
            n_fit=int(sim.get("n", 1000)),
            n_holdout=int(sim.get("n_holdout", 500)),
            alpha=float(sim.get("alpha", 0.05)),
            seed=seed,
            cfg=ecfg,
        )
        write_table(report.summaries(), out / "coverage_experiment.csv")
        widths_rows = [
            {"pipeline": name, "width": float(w)}
            for name, res in report.results.items()
            for w in res.widths
        ]
        write_table(widths_rows, out / "interval_widths.csv")
        print(f"wrote {out / 'coverage_experiment.csv'}")
    elif experiment == "prior-predictive":
        prior = _prior(cfg)
        fit_prior = None
        factor = sim.get("mismatch_factor")
        if factor is not None:
            fit_prior = replace(prior, s_tau=prior.s_tau * float(factor))
        result = prior_predictive_calibration(
            prior,
            CalibrationDesign(
                n=int(sim.get("calibration_n", 200)), p=int(sim.get("calibration_p", 3))
            ),
            reps=int(sim.get("reps", 200)),
            alpha=float(sim.get("alpha", 0.05)),
            seed=seed,
            fit_prior=fit_prior,
            cfg=ecfg,
        )
        (out / "prior_predictive.json").write_text(
            json.dumps(result.summary(), indent=2) + "\n"
        )
        print(f"wrote {out / 'prior_predictive.json'}")
    else:
        raise UsageError(f"unknown experiment {experiment!r}")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "subgroups": cmd_subgroups,
    "policy": cmd_policy,
    "calibrate-prior": cmd_calibrate_prior,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="braids",
        description="Bayesian decision-theoretic subgroup detection",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = subparsers.add_parser(name)
        sp.add_argument("--config", required=True, help="path to the YAML config")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--output-dir", default=None, help="override output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else USAGE_ERROR
    try:
        cfg = load_config(args.config)
    except (ConfigError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (DataError, FitError, SearchError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return COMPUTE_ERROR


if __name__ == "__main__":
    sys.exit(main())
