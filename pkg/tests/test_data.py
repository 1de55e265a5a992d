import numpy as np
import pytest

from braids.data import (
    CATEGORICAL,
    CONTINUOUS,
    ColumnKind,
    DataError,
    Dataset,
    StandardizationRecipe,
    build_cutpoints,
    load_dataset,
    standardize,
)


def make_dataset(n=40, p=3, seed=0, **kwargs):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    return Dataset(
        y=rng.standard_normal(n),
        a=(rng.uniform(size=n) < 0.4).astype(float),
        x=x,
        kinds=tuple(ColumnKind(CONTINUOUS) for _ in range(p)),
        propensity=np.full(n, 0.4),
        **kwargs,
    )


class TestDatasetValidation:
    def test_arrays_frozen(self):
        d = make_dataset()
        with pytest.raises(ValueError):
            d.y[0] = 1.0
        with pytest.raises(ValueError):
            d.x[0, 0] = 1.0

    def test_bad_treatment(self):
        d = make_dataset()
        a = np.asarray(d.a).copy()
        a[0] = 2.0
        with pytest.raises(DataError, match="treatment"):
            Dataset(y=d.y, a=a, x=d.x, kinds=d.kinds, propensity=d.propensity)

    def test_propensity_margin(self):
        d = make_dataset()
        with pytest.raises(DataError, match="propensity"):
            Dataset(y=d.y, a=d.a, x=d.x, kinds=d.kinds, propensity=np.full(d.n, 1e-6))

    def test_length_mismatch(self):
        d = make_dataset()
        with pytest.raises(DataError, match="length"):
            Dataset(y=d.y[:-1], a=d.a, x=d.x, kinds=d.kinds, propensity=d.propensity)

    def test_categorical_codes_validated(self):
        x = np.column_stack([np.zeros(10), np.full(10, 5.0)])
        kinds = (ColumnKind(CONTINUOUS), ColumnKind(CATEGORICAL, n_levels=3))
        with pytest.raises(DataError, match="codes"):
            Dataset(
                y=np.zeros(10), a=np.zeros(10), x=x, kinds=kinds, propensity=0.5
            )

    def test_default_names(self):
        d = make_dataset(p=2)
        assert d.names == ("x1", "x2")


class TestStandardize:
    def test_unit_moments(self):
        d = make_dataset(n=60, seed=2)
        d_std, recipe = standardize(d)
        assert np.isclose(d_std.y.mean(), 0.0, atol=1e-12)
        assert np.isclose(d_std.y.std(ddof=1), 1.0, atol=1e-12)
        for j in range(d.p):
            assert np.isclose(d_std.x[:, j].mean(), 0.0, atol=1e-12)
            assert np.isclose(d_std.x[:, j].std(ddof=1), 1.0, atol=1e-12)

    def test_round_trip(self):
        d = make_dataset(n=30, seed=3)
        d_std, recipe = standardize(d)
        assert np.allclose(recipe.invert_y(d_std.y), d.y, atol=1e-12)
        assert np.allclose(recipe.invert_x(d_std.x), d.x, atol=1e-12)

    def test_categorical_passthrough(self):
        rng = np.random.default_rng(4)
        x = np.column_stack([rng.standard_normal(30), rng.integers(0, 3, 30)])
        d = Dataset(
            y=rng.standard_normal(30),
            a=(rng.uniform(size=30) < 0.5).astype(float),
            x=x,
            kinds=(ColumnKind(CONTINUOUS), ColumnKind(CATEGORICAL, n_levels=3)),
            propensity=0.5,
        )
        d_std, recipe = standardize(d)
        assert np.array_equal(d_std.x[:, 1], x[:, 1])
        assert recipe.x_scales[1] == 1.0

    def test_zero_variance_errors(self):
        d = make_dataset(n=20)
        x = np.asarray(d.x).copy()
        x[:, 1] = 7.0
        d2 = Dataset(y=d.y, a=d.a, x=x, kinds=d.kinds, propensity=d.propensity)
        with pytest.raises(DataError, match="zero-variance column: x2"):
            standardize(d2)
        d3 = Dataset(
            y=np.zeros(d.n), a=d.a, x=d.x, kinds=d.kinds, propensity=d.propensity
        )
        with pytest.raises(DataError, match="zero-variance column: y"):
            standardize(d3)

    def test_recipe_serialization(self):
        _, recipe = standardize(make_dataset())
        back = StandardizationRecipe.from_dict(recipe.to_dict())
        assert back.y_center == recipe.y_center
        assert np.array_equal(back.x_scales, recipe.x_scales)


class TestCutpoints:
    def test_min_leaf_respected(self):
        d = make_dataset(n=50, seed=5)
        grid = build_cutpoints(d, min_leaf=10)
        for j, thresholds in grid.thresholds.items():
            for t in thresholds:
                n_left = int(np.sum(d.x[:, j] <= t))
                assert 10 <= n_left <= d.n - 10

    def test_midpoints(self):
        x = np.array([[1.0], [2.0], [4.0]])
        d = Dataset(
            y=np.zeros(3), a=np.array([0.0, 1.0, 0.0]), x=x,
            kinds=(ColumnKind(CONTINUOUS),), propensity=0.5,
        )
        grid = build_cutpoints(d, min_leaf=1)
        assert np.allclose(grid.thresholds[0], [1.5, 3.0])

    def test_max_thresholds_subsample(self):
        d = make_dataset(n=300, p=1, seed=6)
        grid = build_cutpoints(d, min_leaf=5, max_thresholds=20)
        assert len(grid.thresholds[0]) <= 20
        assert np.all(np.diff(grid.thresholds[0]) > 0)

    def test_categorical_subsets_complement_free(self):
        rng = np.random.default_rng(7)
        x = rng.integers(0, 3, 60).astype(float)[:, None]
        d = Dataset(
            y=rng.standard_normal(60),
            a=(rng.uniform(size=60) < 0.5).astype(float),
            x=x,
            kinds=(ColumnKind(CATEGORICAL, n_levels=3),),
            propensity=0.5,
        )
        grid = build_cutpoints(d, min_leaf=1)
        # 3 levels: 2^3 - 2 = 6 nonempty proper subsets, 3 up to complement
        subs = grid.subsets[0]
        assert len(subs) == 3
        full = frozenset(range(3))
        for s in subs:
            assert (full - s) not in subs

    def test_many_levels_one_vs_rest(self):
        rng = np.random.default_rng(8)
        x = rng.integers(0, 6, 120).astype(float)[:, None]
        d = Dataset(
            y=rng.standard_normal(120),
            a=(rng.uniform(size=120) < 0.5).astype(float),
            x=x,
            kinds=(ColumnKind(CATEGORICAL, n_levels=6),),
            propensity=0.5,
        )
        grid = build_cutpoints(d, min_leaf=1)
        assert all(len(s) == 1 for s in grid.subsets[0])


class TestLoadDataset:
    def test_toy_round_trip(self):
        schema = {
            "outcome": "y",
            "treatment": "treat",
            "propensity": 0.4,
            "covariates": [
                {"name": "x1", "kind": "continuous"},
                {"name": "x2", "kind": "continuous"},
                {"name": "age", "kind": "continuous"},
                {"name": "region", "kind": "categorical"},
            ],
        }
        d = load_dataset("data/toy.csv", schema)
        assert d.n == 300 and d.p == 4
        assert d.kinds[3].kind == CATEGORICAL
        assert d.kinds[3].levels == ("east", "north", "south")
        assert np.all(d.propensity == 0.4)

    def test_missing_column(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("y,a\n1.0,0\n2.0,1\n")
        schema = {
            "outcome": "y",
            "treatment": "a",
            "propensity": 0.5,
            "covariates": [{"name": "nope"}],
        }
        with pytest.raises(DataError, match="unknown column"):
            load_dataset(str(f), schema)

    def test_bad_treatment_value(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("y,a,x\n1.0,0,0.1\n2.0,3,0.2\n")
        schema = {
            "outcome": "y", "treatment": "a", "propensity": 0.5,
            "covariates": [{"name": "x"}],
        }
        with pytest.raises(DataError, match="invalid treatment"):
            load_dataset(str(f), schema)

    def test_rows_missing_outcome_dropped(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("y,a,x\n1.0,0,0.1\n,1,0.2\n2.0,1,0.3\n")
        schema = {
            "outcome": "y", "treatment": "a", "propensity": 0.5,
            "covariates": [{"name": "x"}],
        }
        d = load_dataset(str(f), schema)
        assert d.n == 2

    def test_tab_separated(self, tmp_path):
        f = tmp_path / "d.tsv"
        f.write_text("y\ta\tx\n1.0\t0\t0.1\n2.0\t1\t0.2\n")
        schema = {
            "outcome": "y", "treatment": "a", "propensity": 0.5,
            "covariates": [{"name": "x"}],
        }
        assert load_dataset(str(f), schema).n == 2
