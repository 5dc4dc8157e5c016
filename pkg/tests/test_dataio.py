import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import make_dataset
from fedclus import dataio, surrogate
from fedclus.errors import (
    AlreadyStandardized,
    InvalidSplitSize,
    ParseError,
    SchemaMismatch,
    TooManyClients,
    UnknownAttribute,
)

SCHEMA = dataio.Schema(("a", "b"), "y", delimiter=";")
REAL_CARDIO = Path(__file__).resolve().parents[1] / "data" / "cardio_train.csv"


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_three_rows(self, tmp_path):
        ds = dataio.load_csv(write(tmp_path, "a;b;y\n1;2;0\n3;4;1\n5;6;1\n"), SCHEMA)
        assert (ds.n, ds.p) == (3, 2)
        np.testing.assert_array_equal(ds.labels, [0, 1, 1])
        assert not ds.standardized

    def test_header_without_target(self, tmp_path):
        with pytest.raises(SchemaMismatch):
            dataio.load_csv(write(tmp_path, "a;b;z\n1;2;0\n"), SCHEMA)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            dataio.load_csv(tmp_path / "nope.csv", SCHEMA)

    def test_columns_are_picked_by_name(self, tmp_path):
        schema = dataio.Schema(("b", "a"), "y", id_column="id")
        ds = dataio.load_csv(write(tmp_path, "id;y;a;b\n7;1;10;20\n"), schema)
        np.testing.assert_array_equal(ds.features, [[20, 10]])

    def test_strict_mode_reports_row_and_column(self, tmp_path):
        path = write(tmp_path, "a;b;y\n1;2;0\n3;oops;1\n")
        with pytest.raises(ParseError) as info:
            dataio.load_csv(path, SCHEMA)
        assert (info.value.row, info.value.column) == (3, "b")

    def test_lenient_mode_drops_bad_rows(self, tmp_path, caplog):
        path = write(tmp_path, "a;b;y\n1;2;0\n3;;1\n5;6;2\n7;8;1\n")
        ds = dataio.load_csv(path, SCHEMA, lenient=True)
        assert ds.n == 2
        assert "dropped 2" in caplog.text

    def test_comma_delimiter(self, tmp_path):
        schema = dataio.Schema(("a", "b"), "y", delimiter=",")
        ds = dataio.load_csv(write(tmp_path, "a,b,y\n1,2,0\n"), schema)
        assert ds.p == 2

    def test_schema_rejects_target_among_features(self):
        with pytest.raises(SchemaMismatch):
            dataio.Schema(("a", "y"), "y")

    @pytest.mark.skipif(not REAL_CARDIO.exists(), reason="cardio_train.csv not downloaded")
    def test_real_cardio_table(self):
        ds = dataio.load_csv(REAL_CARDIO, surrogate.CARDIO_SCHEMA)
        assert (ds.n, ds.p) == (70_000, 11)

    def test_surrogate_matches_cardio_schema(self, surrogate_csv):
        ds = dataio.load_csv(surrogate_csv, surrogate.CARDIO_SCHEMA)
        assert (ds.n, ds.p) == (10_000, 11)
        assert set(np.unique(ds.column("gender"))) == {1.0, 2.0}


class TestStandardize:
    def test_one_two_three(self):
        out, stats = dataio.standardize(make_dataset([1, 2, 3], [0, 1, 0]))
        np.testing.assert_allclose(out.features[:, 0], [-1, 0, 1], atol=1e-15)
        assert out.standardized
        assert stats.convention == dataio.VARIANCE_CONVENTION

    def test_constant_column_is_centered_and_flagged(self):
        out, stats = dataio.standardize(make_dataset([5, 5, 5], [0, 1, 0]))
        np.testing.assert_array_equal(out.features[:, 0], [0, 0, 0])
        assert stats.constant.tolist() == [True]
        assert stats.stdevs.tolist() == [1.0]

    def test_two_level_column(self):
        # mean 2, sample variance 16/3, stdev 4/sqrt(3); scaled values are +-sqrt(3)/2
        out, stats = dataio.standardize(make_dataset([0, 0, 4, 4], [0, 1, 0, 1]))
        assert stats.stdevs[0] == pytest.approx(4 / math.sqrt(3), rel=1e-15)
        half_root3 = math.sqrt(3) / 2
        np.testing.assert_allclose(
            out.features[:, 0], [-half_root3, -half_root3, half_root3, half_root3], rtol=1e-15
        )

    def test_twice_raises(self):
        out, _ = dataio.standardize(make_dataset([1, 2], [0, 1]))
        with pytest.raises(AlreadyStandardized):
            dataio.standardize(out)

    @given(
        arrays(
            float,
            st.tuples(st.integers(2, 40), st.integers(1, 4)),
            elements=st.floats(-1e3, 1e3, allow_nan=False),
        )
    )
    def test_moments_and_reuse(self, x):
        ds = make_dataset(x, np.zeros(x.shape[0], dtype=int))
        out, stats = dataio.standardize(ds)
        for j in range(x.shape[1]):
            col = out.features[:, j]
            if stats.constant[j]:
                continue
            if x[:, j].std(ddof=1) < 1e-6 * max(1.0, np.abs(x[:, j]).max()):
                continue  # near-constant columns lose precision to cancellation
            assert abs(col.mean()) < 1e-9
            assert abs(col.var(ddof=1) - 1) < 1e-9
        again = stats.apply(ds)
        assert np.array_equal(again.features, out.features)


class TestSplit:
    def test_sizes(self):
        ds = make_dataset(np.arange(70_000.0), np.zeros(70_000, dtype=int))
        train, test = dataio.split_train_test(ds, 10_000, seed=3)
        assert (train.n, test.n) == (60_000, 10_000)
        merged = np.sort(np.concatenate([train.features[:, 0], test.features[:, 0]]))
        np.testing.assert_array_equal(merged, np.arange(70_000.0))

    @pytest.mark.parametrize("count", [0, 10, 11, -1])
    def test_bad_sizes(self, count):
        ds = make_dataset(np.arange(10.0), np.zeros(10, dtype=int))
        with pytest.raises(InvalidSplitSize):
            dataio.split_train_test(ds, count, seed=0)

    def test_deterministic(self):
        ds = make_dataset(np.arange(50.0), np.zeros(50, dtype=int))
        a = dataio.split_train_test(ds, 7, seed=11)
        b = dataio.split_train_test(ds, 7, seed=11)
        assert np.array_equal(a[1].features, b[1].features)
        c = dataio.split_train_test(ds, 7, seed=12)
        assert not np.array_equal(a[1].features, c[1].features)


def gendered(n_female, n_male, seed=0):
    rng = np.random.default_rng(seed)
    gender = np.r_[np.ones(n_female), 2 * np.ones(n_male)]
    rng.shuffle(gender)
    x = np.column_stack([np.arange(gender.size, dtype=float), gender])
    return make_dataset(x, rng.integers(0, 2, gender.size), ("row", "gender"))


class TestPartitionByAttribute:
    def test_hundred_single_gender_clients(self):
        ds = gendered(39_000, 21_000)
        parts = dataio.partition_by_attribute(ds, "gender", 100, seed=5)
        assert len(parts) == 100
        assert [p.client_id for p in parts] == list(range(100))
        for p in parts:
            assert np.unique(p.data.column("gender")).size == 1
        by_value = {v: sum(p.attribute_value == v for p in parts) for v in (1.0, 2.0)}
        assert by_value == {1.0: 65, 2.0: 35}
        sizes = {p.sample_count for p in parts}
        assert sizes == {600}

    def test_minimal_two_clients(self):
        parts = dataio.partition_by_attribute(gendered(5, 3), "gender", 2, seed=0)
        assert [p.sample_count for p in parts] == [5, 3]
        assert [p.attribute_value for p in parts] == [1.0, 2.0]

    def test_union_is_permutation(self):
        ds = gendered(37, 23, seed=2)
        parts = dataio.partition_by_attribute(ds, "gender", 7, seed=9)
        rows = np.sort(np.concatenate([p.data.column("row") for p in parts]))
        np.testing.assert_array_equal(rows, np.arange(60.0))
        sizes = [p.sample_count for p in parts]
        assert max(sizes) - min(sizes) <= max(sizes) // 2

    def test_more_clients_than_samples(self):
        with pytest.raises(TooManyClients):
            dataio.partition_by_attribute(gendered(3, 2), "gender", 6, seed=0)

    def test_unknown_attribute(self):
        with pytest.raises(UnknownAttribute):
            dataio.partition_by_attribute(gendered(3, 2), "age", 2, seed=0)

    def test_deterministic(self):
        ds = gendered(30, 20)
        a = dataio.partition_by_attribute(ds, "gender", 5, seed=4)
        b = dataio.partition_by_attribute(ds, "gender", 5, seed=4)
        assert all(np.array_equal(x.data.features, y.data.features) for x, y in zip(a, b))

    @given(st.integers(1, 60), st.integers(1, 60), st.integers(2, 12), st.integers(0, 2**32 - 1))
    def test_apportionment(self, n_a, n_b, k, seed):
        ds = gendered(n_a, n_b)
        try:
            parts = dataio.partition_by_attribute(ds, "gender", k, seed)
        except TooManyClients:
            return
        assert len(parts) == k
        assert sum(p.sample_count for p in parts) == n_a + n_b
        assert all(p.sample_count >= 1 for p in parts)


class TestPartitionIid:
    def test_even(self):
        parts = dataio.partition_iid(make_dataset(np.arange(100.0), np.zeros(100, dtype=int)), 10, 0)
        assert [p.sample_count for p in parts] == [10] * 10

    def test_remainder(self):
        parts = dataio.partition_iid(make_dataset(np.arange(101.0), np.zeros(101, dtype=int)), 10, 0)
        assert sorted(p.sample_count for p in parts) == [10] * 9 + [11]

    def test_too_many(self):
        with pytest.raises(TooManyClients):
            dataio.partition_iid(make_dataset(np.arange(3.0), np.zeros(3, dtype=int)), 4, 0)

    def test_deterministic(self):
        ds = make_dataset(np.arange(40.0), np.zeros(40, dtype=int))
        a = dataio.partition_iid(ds, 3, 8)
        b = dataio.partition_iid(ds, 3, 8)
        assert all(np.array_equal(x.data.features, y.data.features) for x, y in zip(a, b))


def test_partition_report_format():
    import io

    parts = dataio.partition_by_attribute(gendered(3, 2), "gender", 2, seed=0)
    buf = io.StringIO()
    dataio.write_partition_report(parts, buf)
    assert buf.getvalue() == "client_id,size,attribute_value\n0,3,1\n1,2,2\n"
