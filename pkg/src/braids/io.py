"""Serialization of posterior draws and delimited report tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ridge import PosteriorDraws


def save_draws(draws: PosteriorDraws, path: str | Path) -> None:
    """Write draws to <path>.npz with a JSON metadata sidecar."""
    path = Path(path)
    np.savez_compressed(
        path.with_suffix(".npz"), tau=draws.tau, ate=draws.ate, hyper=draws.hyper
    )
    path.with_suffix(".meta.json").write_text(
        json.dumps(draws.meta, indent=2, sort_keys=True) + "\n"
    )


def load_draws(path: str | Path) -> PosteriorDraws:
    path = Path(path)
    with np.load(path.with_suffix(".npz")) as z:
        tau, ate, hyper = z["tau"], z["ate"], z["hyper"]
    meta_path = path.with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return PosteriorDraws(tau=tau, ate=ate, hyper=hyper, meta=meta)


def export_draws_csv(draws: PosteriorDraws, path: str | Path) -> None:
    """Delimited text export of the tau draws (one row per draw)."""
    header = ["draw", "ate", "sigma", "sigma_tau"] + [
        f"tau_{i + 1}" for i in range(draws.n_units)
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in range(draws.n_draws):
            writer.writerow(
                [s, draws.ate[s], draws.hyper[s, 0], draws.hyper[s, 1]]
                + list(draws.tau[s])
            )


def write_table(rows: list[dict], path: str | Path) -> None:
    """Write a list of homogeneous dicts as a CSV table."""
    rows = list(rows)
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def trace_summary(draws: PosteriorDraws) -> list[dict]:
    """Mean, sd, and lag-1 autocorrelation for the tracked chains."""
    out = []
    chains = {
        "ate": draws.ate,
        "sigma": draws.hyper[:, 0],
        "sigma_tau": draws.hyper[:, 1],
    }
    for name, chain in chains.items():
        centered = chain - chain.mean()
        denom = float(centered @ centered)
        lag1 = float(centered[:-1] @ centered[1:]) / denom if denom > 0 else 0.0
        out.append(
            {
                "parameter": name,
                "mean": float(chain.mean()),
                "sd": float(chain.std(ddof=1)),
                "lag1_autocorr": lag1,
            }
        )
    return out


def density_grid(values: np.ndarray, n_points: int = 200) -> list[dict]:
    """Gaussian-kernel density on a regular grid, for external plotting."""
    values = np.asarray(values, dtype=float)
    sd = values.std(ddof=1)
    if sd == 0:
        return [{"x": float(values[0]), "density": float("inf"), "bandwidth": 0.0}]
    bw = 1.06 * sd * len(values) ** (-1 / 5)
    lo, hi = values.min() - 3 * bw, values.max() + 3 * bw
    grid = np.linspace(lo, hi, n_points)
    dens = np.exp(-0.5 * ((grid[:, None] - values[None, :]) / bw) ** 2).sum(axis=1)
    dens /= len(values) * bw * np.sqrt(2 * np.pi)
    return [
        {"x": float(g), "density": float(dv), "bandwidth": float(bw)}
        for g, dv in zip(grid, dens)
    ]
