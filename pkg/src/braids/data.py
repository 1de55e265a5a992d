"""Dataset representation, standardization, and candidate cutpoints.

A :class:`Dataset` holds outcomes, binary treatments, a typed covariate
matrix, and per-unit propensities. All arrays are frozen after
construction so datasets can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


class DataError(ValueError):
    """Raised when a dataset or schema fails validation."""


@dataclass(frozen=True)
class ColumnKind:
    kind: str  # CONTINUOUS or CATEGORICAL
    n_levels: int = 0  # number of levels for categorical columns
    levels: tuple = ()  # original level labels, for rendering

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise DataError(f"unknown column kind {self.kind!r}")
        if self.kind == CATEGORICAL and self.n_levels < 2:
            raise DataError("categorical column needs at least 2 levels")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Outcomes, treatments, covariates, and propensities for N units."""

    y: np.ndarray  # (N,) continuous outcomes
    a: np.ndarray  # (N,) binary treatment indicators
    x: np.ndarray  # (N, P) covariates; categorical columns hold level codes
    kinds: tuple[ColumnKind, ...]
    propensity: np.ndarray  # (N,) in (0, 1)
    names: tuple[str, ...] = ()
    ids: tuple | None = None
    delta: float = 1e-3  # positivity margin for propensities

    def __post_init__(self):
        y = _frozen(np.asarray(self.y, dtype=float))
        a = _frozen(np.asarray(self.a, dtype=float))
        x = _frozen(np.atleast_2d(np.asarray(self.x, dtype=float)))
        prop = np.asarray(self.propensity, dtype=float)
        if prop.ndim == 0:
            prop = np.full(y.shape[0], float(prop))
        prop = _frozen(prop)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "propensity", prop)
        n = y.shape[0]
        if a.shape != (n,) or x.shape[0] != n or prop.shape != (n,):
            raise DataError("y, a, x, propensity must share length N")
        if x.shape[1] != len(self.kinds):
            raise DataError("kinds must have one entry per covariate column")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise DataError("non-finite values in y or x")
        if not np.all((a == 0) | (a == 1)):
            raise DataError("invalid treatment value: a must be in {0, 1}")
        if np.any(prop < self.delta) or np.any(prop > 1 - self.delta):
            raise DataError(
                f"propensity outside [{self.delta}, {1 - self.delta}]"
            )
        for j, k in enumerate(self.kinds):
            if k.kind == CATEGORICAL:
                col = x[:, j]
                if np.any(col != np.round(col)) or np.any(col < 0) or np.any(
                    col >= k.n_levels
                ):
                    raise DataError(
                        f"categorical column {j} has codes outside "
                        f"[0, {k.n_levels})"
                    )
        if not self.names:
            object.__setattr__(
                self, "names", tuple(f"x{j + 1}" for j in range(x.shape[1]))
            )

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def continuous_columns(self) -> list[int]:
        return [j for j, k in enumerate(self.kinds) if k.kind == CONTINUOUS]

    def categorical_columns(self) -> list[int]:
        return [j for j, k in enumerate(self.kinds) if k.kind == CATEGORICAL]

    def replace_outcome(self, y: np.ndarray, x: np.ndarray | None = None) -> "Dataset":
        return Dataset(
            y=y,
            a=self.a,
            x=self.x if x is None else x,
            kinds=self.kinds,
            propensity=self.propensity,
            names=self.names,
            ids=self.ids,
            delta=self.delta,
        )


@dataclass(frozen=True)
class StandardizationRecipe:
    """Affine transform taking raw data to mean 0, variance 1."""

    y_center: float
    y_scale: float
    x_centers: np.ndarray  # (P,); 0 for categorical columns
    x_scales: np.ndarray  # (P,); 1 for categorical columns

    def __post_init__(self):
        if self.y_scale <= 0 or np.any(np.asarray(self.x_scales) <= 0):
            raise DataError("standardization scales must be positive")
        object.__setattr__(self, "x_centers", _frozen(np.asarray(self.x_centers, float)))
        object.__setattr__(self, "x_scales", _frozen(np.asarray(self.x_scales, float)))

    def invert_y(self, y_std: np.ndarray) -> np.ndarray:
        return np.asarray(y_std) * self.y_scale + self.y_center

    def invert_x(self, x_std: np.ndarray) -> np.ndarray:
        return np.asarray(x_std) * self.x_scales + self.x_centers

    def to_dict(self) -> dict:
        return {
            "y_center": float(self.y_center),
            "y_scale": float(self.y_scale),
            "x_centers": [float(v) for v in self.x_centers],
            "x_scales": [float(v) for v in self.x_scales],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationRecipe":
        return cls(
            y_center=d["y_center"],
            y_scale=d["y_scale"],
            x_centers=np.asarray(d["x_centers"], float),
            x_scales=np.asarray(d["x_scales"], float),
        )


def standardize(d: Dataset) -> tuple[Dataset, StandardizationRecipe]:
    """Center and scale y and the continuous covariate columns.

    Uses the N-1 denominator for the sample variance. Categorical columns
    are passed through unchanged (center 0, scale 1 in the recipe).
    """
    y_center = float(np.mean(d.y))
    y_scale = float(np.std(d.y, ddof=1))
    if y_scale <= 0:
        raise DataError("zero-variance column: y")
    centers = np.zeros(d.p)
    scales = np.ones(d.p)
    for j in d.continuous_columns():
        s = float(np.std(d.x[:, j], ddof=1))
        if s <= 0:
            raise DataError(f"zero-variance column: {d.names[j]}")
        centers[j] = float(np.mean(d.x[:, j]))
        scales[j] = s
    recipe = StandardizationRecipe(y_center, y_scale, centers, scales)
    x_std = (d.x - centers) / scales
    std = Dataset(
        y=(d.y - y_center) / y_scale,
        a=d.a,
        x=x_std,
        kinds=d.kinds,
        propensity=d.propensity,
        names=d.names,
        ids=d.ids,
        delta=d.delta,
    )
    return std, recipe


@dataclass(frozen=True)
class CutpointGrid:
    """Candidate splits per column.

    ``thresholds[j]`` is a sorted array for continuous column j;
    ``subsets[j]`` is a list of frozensets of level codes (the "left"
    side) for categorical column j. Every split leaves at least
    ``min_leaf`` units on each side of the column it splits.
    """

    thresholds: dict[int, np.ndarray]
    subsets: dict[int, list[frozenset]]
    min_leaf: int

    def columns(self) -> list[int]:
        return sorted(set(self.thresholds) | set(self.subsets))

    def splits_for(self, j: int):
        """Yield (threshold, None) or (None, levels) candidates for column j."""
        for t in self.thresholds.get(j, ()):  # continuous
            yield float(t), None
        for s in self.subsets.get(j, ()):  # categorical
            yield None, s


def build_cutpoints(
    d: Dataset, min_leaf: int = 10, max_thresholds: int = 100
) -> CutpointGrid:
    """Candidate thresholds (midpoints) and categorical subset splits.

    Continuous thresholds are midpoints between consecutive distinct
    values, subsampled evenly when they exceed ``max_thresholds``.
    Categorical columns with at most 4 levels enumerate all nonempty
    proper subsets up to complement symmetry; larger columns get only
    one-vs-rest splits. Columns with no admissible split yield an empty
    list.
    """
    if min_leaf < 1:
        raise DataError("min_leaf must be at least 1")
    thresholds: dict[int, np.ndarray] = {}
    subsets: dict[int, list[frozenset]] = {}
    for j in d.continuous_columns():
        col = np.sort(d.x[:, j])
        distinct = np.unique(col)
        mids = (distinct[:-1] + distinct[1:]) / 2.0
        keep = []
        for t in mids:
            n_left = int(np.sum(col <= t))
            if n_left >= min_leaf and d.n - n_left >= min_leaf:
                keep.append(t)
        keep = np.asarray(keep)
        if keep.size > max_thresholds:
            idx = np.linspace(0, keep.size - 1, max_thresholds).round().astype(int)
            keep = keep[np.unique(idx)]
        thresholds[j] = keep
    for j in d.categorical_columns():
        n_levels = d.kinds[j].n_levels
        codes = d.x[:, j].astype(int)
        counts = np.bincount(codes, minlength=n_levels)
        candidates: list[frozenset] = []
        if n_levels <= 4:
            present = frozenset(range(n_levels))
            seen = set()
            for mask in range(1, 2**n_levels - 1):
                side = frozenset(l for l in range(n_levels) if mask >> l & 1)
                comp = present - side
                canon = min(
                    (len(side), tuple(sorted(side))),
                    (len(comp), tuple(sorted(comp))),
                )
                if canon in seen:
                    continue
                seen.add(canon)
                candidates.append(frozenset(canon[1]))
        else:
            candidates = [frozenset({l}) for l in range(n_levels)]
        kept = []
        for side in candidates:
            n_left = int(sum(counts[l] for l in side))
            if n_left >= min_leaf and d.n - n_left >= min_leaf:
                kept.append(side)
        subsets[j] = kept
    return CutpointGrid(thresholds=thresholds, subsets=subsets, min_leaf=min_leaf)


def load_dataset(
    path: str,
    schema: dict,
    delta: float = 1e-3,
) -> Dataset:
    """Load a delimited text file into a validated Dataset.

    ``schema`` maps roles to columns::

        outcome: y
        treatment: a
        propensity: ps        # or a constant in (0, 1)
        covariates:
          - {name: x1, kind: continuous}
          - {name: race, kind: categorical}

    Rows with missing outcome or treatment are dropped; missing covariate
    values are an error. Treatment values outside {0, 1} and propensities
    outside (0, 1) are errors.
    """
    try:
        df = pd.read_csv(path, sep=None, engine="python")
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise DataError(f"malformed file {path}: {exc}") from exc
    for key in ("outcome", "treatment", "covariates"):
        if key not in schema:
            raise DataError(f"schema is missing required key {key!r}")
    y_col = schema["outcome"]
    a_col = schema["treatment"]
    covs = schema["covariates"]
    needed = [y_col, a_col] + [c["name"] for c in covs]
    prop_spec = schema.get("propensity", None)
    prop_col = None
    if isinstance(prop_spec, str):
        prop_col = prop_spec
        needed.append(prop_col)
    for col in needed:
        if col not in df.columns:
            raise DataError(f"unknown column {col!r}")
    df = df.dropna(subset=[y_col, a_col])
    if df.empty:
        raise DataError("no rows with observed outcome and treatment")

    a_raw = df[a_col].to_numpy()
    bad = ~np.isin(a_raw, (0, 1))
    if np.any(bad):
        raise DataError(f"invalid treatment value: {a_raw[bad][0]!r}")

    kinds = []
    cols = []
    for c in covs:
        name, kind = c["name"], c.get("kind", CONTINUOUS)
        series = df[name]
        if series.isna().any():
            raise DataError(f"missing values in covariate {name!r}")
        if kind == CATEGORICAL:
            levels = tuple(sorted(series.unique(), key=str))
            code_map = {v: i for i, v in enumerate(levels)}
            cols.append(series.map(code_map).to_numpy(dtype=float))
            kinds.append(ColumnKind(CATEGORICAL, len(levels), levels))
        elif kind == CONTINUOUS:
            try:
                cols.append(series.to_numpy(dtype=float))
            except (TypeError, ValueError) as exc:
                raise DataError(f"non-numeric continuous column {name!r}") from exc
            kinds.append(ColumnKind(CONTINUOUS))
        else:
            raise DataError(f"unknown covariate kind {kind!r} for {name!r}")

    if prop_col is not None:
        prop = df[prop_col].to_numpy(dtype=float)
    elif prop_spec is not None:
        prop = float(prop_spec)
        if not 0 < prop < 1:
            raise DataError(f"propensity constant {prop} outside (0, 1)")
    else:
        raise DataError("schema needs a propensity column or constant")

    return Dataset(
        y=df[y_col].to_numpy(dtype=float),
        a=a_raw.astype(float),
        x=np.column_stack(cols) if cols else np.empty((len(df), 0)),
        kinds=tuple(kinds),
        propensity=prop,
        names=tuple(c["name"] for c in covs),
        delta=delta,
    )
