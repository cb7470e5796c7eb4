import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permforest import (
    Dataset,
    Exclude,
    FeatureKind,
    FeatureSubset,
    KnockoffColumns,
    NUMERIC,
    ParseError,
    PermuteRows,
    SchemaError,
    ValidationError,
    load_csv,
    mute_features,
    mute_with_permutation,
    split_train_test,
    write_csv,
)


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_numeric_ingestion(self, tmp_path):
        d = load_csv(write(tmp_path, "x1,y\n1.0,0.5\n2.0,1.5\n3.0,2.5\n"), "y")
        assert (d.n, d.p) == (3, 1)
        assert d.kinds == (NUMERIC,)
        assert np.array_equal(d.X[:, 0], [1.0, 2.0, 3.0])
        assert np.array_equal(d.y, [0.5, 1.5, 2.5])

    def test_first_appearance_encoding(self, tmp_path):
        d = load_csv(write(tmp_path, "c,y\na,1\nb,2\na,3\n"), "y")
        assert d.kinds == (FeatureKind(2),)
        assert np.array_equal(d.X[:, 0], [0.0, 1.0, 0.0])
        assert d.level_labels[0] == ("a", "b")

    def test_nan_cell_names_row_and_column(self, tmp_path):
        with pytest.raises(ValidationError, match=r"row 3.*'x1'"):
            load_csv(write(tmp_path, "x1,y\n1.0,0\nnan,1\n2.0,2\n"), "y")

    def test_missing_response_column(self, tmp_path):
        with pytest.raises(SchemaError, match="response"):
            load_csv(write(tmp_path, "x1,x2\n1,2\n3,4\n"), "y")

    def test_unparseable_cell_names_row_and_column(self, tmp_path):
        with pytest.raises(ParseError, match=r"row 2.*'y'"):
            load_csv(write(tmp_path, "x1,y\n1.0,oops\n2.0,1\n"), "y")

    def test_schema_override_numeric_strict(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "c,y\na,1\nb,2\n"), "y", schema={"c": "numeric"})

    def test_schema_override_categorical_levels(self, tmp_path):
        d = load_csv(
            write(tmp_path, "c,y\n0,1\n2,2\n1,3\n"), "y", schema={"c": FeatureKind(3)}
        )
        assert d.kinds == (FeatureKind(3),)
        assert np.array_equal(d.X[:, 0], [0.0, 2.0, 1.0])

    def test_schema_override_categorical_out_of_range(self, tmp_path):
        with pytest.raises(ValidationError, match="level"):
            load_csv(write(tmp_path, "c,y\n0,1\n5,2\n"), "y", schema={"c": FeatureKind(3)})

    def test_empty_file(self, tmp_path):
        with pytest.raises(SchemaError):
            load_csv(write(tmp_path, ""), "y")


class TestRoundTrip:
    def test_labelled_categorical_round_trip(self, tmp_path):
        d = load_csv(write(tmp_path, "x1,c,y\n0.25,a,1\n0.5,b,2\n0.75,a,3\n"), "y")
        out = tmp_path / "out.csv"
        write_csv(d, out)
        again = load_csv(out, "y")
        assert again == d

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(3, 12), st.integers(1, 4))
    def test_generated_round_trip(self, seed, n, p):
        import os
        import tempfile

        rng = np.random.default_rng(seed)
        kinds = tuple(
            FeatureKind(3) if rng.random() < 0.5 else NUMERIC for _ in range(p)
        )
        X = np.column_stack(
            [
                rng.integers(0, 3, n).astype(float) if k.is_categorical else rng.random(n)
                for k in kinds
            ]
        )
        d = Dataset(X, rng.standard_normal(n), kinds)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "d.csv")
            write_csv(d, path)
            again = load_csv(path, "y", schema=dict(zip(d.names, d.kinds)))
        assert again == d


class TestValidation:
    def test_nan_in_matrix(self):
        with pytest.raises(ValidationError):
            Dataset(np.array([[1.0], [np.nan]]), np.array([1.0, 2.0]), (NUMERIC,))

    def test_bad_level_index(self):
        with pytest.raises(ValidationError):
            Dataset(np.array([[0.0], [3.0]]), np.array([1.0, 2.0]), (FeatureKind(3),))

    def test_non_integer_level(self):
        with pytest.raises(ValidationError):
            Dataset(np.array([[0.5], [1.0]]), np.array([1.0, 2.0]), (FeatureKind(2),))

    def test_too_few_rows(self):
        with pytest.raises(ValidationError):
            Dataset(np.array([[1.0]]), np.array([1.0]), (NUMERIC,))

    def test_level_count_floor(self):
        with pytest.raises(ValidationError):
            FeatureKind(1)

    def test_matrix_is_immutable(self, rng):
        d = Dataset(rng.random((4, 2)), rng.random(4), (NUMERIC, NUMERIC))
        with pytest.raises(ValueError):
            d.X[0, 0] = 9.0


class TestSplit:
    def test_fraction_sizes(self, rng):
        d = Dataset(rng.random((100, 2)), rng.random(100), (NUMERIC, NUMERIC))
        train, test = split_train_test(d, 0.15, seed=7)
        assert (test.n, train.n) == (15, 85)

    def test_determinism(self, rng):
        d = Dataset(rng.random((60, 2)), rng.random(60), (NUMERIC, NUMERIC))
        a = split_train_test(d, 0.15, seed=7)
        b = split_train_test(d, 0.15, seed=7)
        assert a[0] == b[0] and a[1] == b[1]

    def test_degenerate_fraction(self, rng):
        d = Dataset(rng.random((3, 1)), rng.random(3), (NUMERIC,))
        with pytest.raises(ValueError):
            split_train_test(d, 0.999, seed=0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(4, 60), st.floats(0.05, 0.6))
    def test_disjoint_and_exhaustive(self, seed, n, frac):
        import math

        from permforest import split_indices

        n_test = int(math.floor(frac * n))
        if n_test < 1 or n - n_test < 2:
            return
        train_idx, test_idx = split_indices(n, frac, seed=seed)
        assert len(train_idx) + len(test_idx) == n
        assert np.array_equal(
            np.sort(np.concatenate([train_idx, test_idx])), np.arange(n)
        )
        assert len(np.intersect1d(train_idx, test_idx)) == 0


class TestMuting:
    def make(self, rng, n=6, p=3):
        X = np.column_stack([np.arange(1.0, n + 1), rng.random(n), rng.integers(0, 3, n).astype(float)])
        return Dataset(X, rng.standard_normal(n), (NUMERIC, NUMERIC, FeatureKind(3)))

    def test_explicit_reversal(self):
        X = np.column_stack([[1.0, 2.0, 3.0], [10.0, 20.0, 30.0]])
        d = Dataset(X, np.array([0.0, 1.0, 2.0]), (NUMERIC, NUMERIC))
        out = mute_with_permutation(d, FeatureSubset((0,)), [2, 1, 0])
        assert np.array_equal(out.X[:, 0], [3.0, 2.0, 1.0])
        assert np.array_equal(out.X[:, 1], d.X[:, 1])

    def test_identity_permutation(self, rng):
        d = self.make(rng)
        out = mute_with_permutation(d, FeatureSubset((0, 2)), np.arange(d.n))
        assert out == d

    def test_shared_permutation_across_columns(self, rng):
        d = self.make(rng)
        out = mute_with_permutation(d, FeatureSubset((0, 1)), [3, 4, 5, 0, 1, 2])
        # both columns moved by the same row map: paired values stay paired
        pairs_before = set(zip(d.X[:, 0], d.X[:, 1]))
        pairs_after = set(zip(out.X[:, 0], out.X[:, 1]))
        assert pairs_before == pairs_after

    def test_exclude_shrinks_columns(self, rng):
        d = Dataset(rng.random((5, 5)), rng.random(5), (NUMERIC,) * 5)
        out = mute_features(d, FeatureSubset((1, 3)), Exclude())
        assert out.p == 3
        assert out.names == ("x1", "x3", "x5")
        assert len(out.kinds) == 3

    def test_exclude_everything_rejected(self, rng):
        d = Dataset(rng.random((5, 2)), rng.random(5), (NUMERIC,) * 2)
        with pytest.raises(ValueError):
            mute_features(d, FeatureSubset((0, 1)), Exclude())

    def test_permute_rows_seeded(self, rng):
        d = self.make(rng)
        a = mute_features(d, FeatureSubset((0,)), PermuteRows(seed=5))
        b = mute_features(d, FeatureSubset((0,)), PermuteRows(seed=5))
        assert a == b

    def test_permute_rows_needs_stream(self, rng):
        d = self.make(rng)
        with pytest.raises(ValueError):
            mute_features(d, FeatureSubset((0,)), PermuteRows())

    def test_knockoff_substitution(self, rng):
        d = self.make(rng)
        cols = rng.random((d.n, 1))
        out = mute_features(d, FeatureSubset((1,)), KnockoffColumns(cols))
        assert np.array_equal(out.X[:, 1], cols[:, 0])
        assert np.array_equal(out.X[:, 0], d.X[:, 0])

    def test_knockoff_shape_mismatch(self, rng):
        d = self.make(rng)
        with pytest.raises(ValueError, match="shape"):
            mute_features(d, FeatureSubset((1,)), KnockoffColumns(rng.random((d.n - 1, 1))))

    def test_knockoff_kind_mismatch(self, rng):
        d = self.make(rng)
        bad = np.full((d.n, 1), 7.0)  # outside the 3-level range of column 2
        with pytest.raises(ValueError, match="categorical"):
            mute_features(d, FeatureSubset((2,)), KnockoffColumns(bad))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_permutation_preserves_marginals_and_response(self, seed):
        rng = np.random.default_rng(seed)
        d = self.make(rng)
        s = FeatureSubset(tuple(sorted(rng.choice(3, rng.integers(1, 4), replace=False))))
        out = mute_features(d, s, PermuteRows(seed=int(rng.integers(1 << 30))))
        for j in s.indices:
            assert np.array_equal(np.sort(out.X[:, j]), np.sort(d.X[:, j]))
        assert out.y.tobytes() == d.y.tobytes()
        untouched = [j for j in range(d.p) if j not in s.indices]
        assert np.array_equal(out.X[:, untouched], d.X[:, untouched])


class TestFeatureSubset:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            FeatureSubset(())

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            FeatureSubset((1, 1))

    def test_out_of_range_detected(self, rng):
        d = Dataset(rng.random((4, 2)), rng.random(4), (NUMERIC, NUMERIC))
        with pytest.raises(ValueError):
            FeatureSubset((5,)).validate_for(d)
