import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraudkit.data import (
    Dataset,
    Feature,
    FeatureSchema,
    NormParams,
    apply_normalize,
    cleanse,
    dataset_from_matrix,
    encode_one_hot,
    fit_normalize,
    invert_normalize,
    load_csv,
    numeric_schema,
    occ_split,
    save_csv,
    save_split,
    stratified_split,
)
from fraudkit.errors import DataError


def two_feature_schema():
    return numeric_schema(["a", "b"])


# ---------------------------------------------------------------- schema


def test_schema_rejects_duplicate_names():
    with pytest.raises(DataError):
        FeatureSchema([Feature("x", "numeric"), Feature("x", "numeric")])


def test_schema_rejects_empty_categorical():
    with pytest.raises(DataError):
        Feature("c", "categorical", categories=())


def test_schema_rejects_categories_on_numeric():
    with pytest.raises(DataError):
        Feature("n", "numeric", categories=("a",))


def test_schema_rejects_inverted_range():
    with pytest.raises(DataError):
        Feature("n", "numeric", value_range=(2.0, 1.0))


def test_schema_json_round_trip(mixed_schema, tmp_path):
    path = tmp_path / "schema.json"
    mixed_schema.save(path)
    assert FeatureSchema.load(path) == mixed_schema


# ---------------------------------------------------------------- load_csv


def test_load_csv_plain_numeric(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n3,4\n5,6\n")
    ds = load_csv(p, two_feature_schema())
    assert ds.n == 3 and ds.d == 2
    assert ds.labels is None
    assert ds.rows[0] == (1.0, 2.0)


def test_load_csv_labels(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,label\n1,2,0\n3,4,1\n5,6,1\n")
    ds = load_csv(p, two_feature_schema(), label_column="label")
    assert list(ds.labels) == [0, 1, 1]


def test_load_csv_unknown_category(tmp_path, mixed_schema):
    p = tmp_path / "d.csv"
    p.write_text("color,amount,hour\ngreen,1,2\n")
    with pytest.raises(DataError, match="unknown category"):
        load_csv(p, mixed_schema)


def test_load_csv_header_mismatch(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,c\n1,2\n")
    with pytest.raises(DataError, match="header mismatch"):
        load_csv(p, two_feature_schema())


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "nope.csv", two_feature_schema())


def test_load_csv_unparseable_numeric_becomes_null(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\noops,2\n3,4\n")
    ds = load_csv(p, two_feature_schema())
    assert ds.rows[0][0] is None


def test_load_csv_null_token(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\nNA,2\n3,4\n")
    ds = load_csv(p, two_feature_schema(), null_token="NA")
    assert ds.rows[0][0] is None


def test_csv_round_trip(tmp_path, mixed_schema):
    ds = Dataset(mixed_schema, [("red", 5.0, 10.0), ("blue", 7.5, 0.0)], [0, 1])
    p = tmp_path / "out.csv"
    save_csv(ds, p)
    back = load_csv(p, mixed_schema, label_column="label")
    assert back.rows == ds.rows
    assert list(back.labels) == [0, 1]


def test_save_csv_deterministic_bytes(tmp_path, mixed_schema):
    ds = Dataset(mixed_schema, [("red", 5.25, 10.0)], [1])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    save_csv(ds, p1)
    save_csv(ds, p2)
    assert p1.read_bytes() == p2.read_bytes()


# ---------------------------------------------------------------- cleanse


def test_cleanse_removes_duplicates():
    ds = dataset_from_matrix(np.array([[1.0, 2.0], [1.0, 2.0], [3.0, 4.0]]))
    out = cleanse(ds, 0.9)
    assert out.rows == ((1.0, 2.0), (3.0, 4.0))


def test_cleanse_drops_feature_at_threshold_boundary():
    # feature b null in 9/10 rows: 0.9 >= 0.9 drops it, all rows kept
    rows = [(float(i), None) for i in range(9)] + [(9.0, 1.0)]
    ds = Dataset(numeric_schema(["a", "b"]), rows)
    out = cleanse(ds, 0.9)
    assert out.schema.names == ["a"]
    assert out.n == 10


def test_cleanse_keeps_feature_below_threshold_drops_null_rows():
    # feature b null in 8/10 rows: kept, but those 8 rows are dropped
    rows = [(float(i), None) for i in range(8)] + [(8.0, 1.0), (9.0, 2.0)]
    ds = Dataset(numeric_schema(["a", "b"]), rows)
    out = cleanse(ds, 0.9)
    assert out.schema.names == ["a", "b"]
    assert out.n == 2
    assert out.rows == ((8.0, 1.0), (9.0, 2.0))


def test_cleanse_duplicate_key_includes_label():
    ds = Dataset(numeric_schema(["a"]), [(1.0,), (1.0,), (1.0,)], [0, 1, 0])
    out = cleanse(ds, 0.9)
    assert out.n == 2  # same cells but different labels are distinct rows


def test_cleanse_idempotent():
    rows = [(1.0, None), (1.0, None), (2.0, 3.0), (2.0, 3.0), (4.0, 5.0)]
    ds = Dataset(numeric_schema(["a", "b"]), rows)
    once = cleanse(ds, 0.6)
    twice = cleanse(once, 0.6)
    assert once.rows == twice.rows
    assert once.schema.names == twice.schema.names


def test_cleanse_error_when_everything_null():
    ds = Dataset(numeric_schema(["a"]), [(None,), (None,)])
    with pytest.raises(DataError):
        cleanse(ds, 0.9)


# ---------------------------------------------------------------- one-hot


def test_one_hot_basic(mixed_schema):
    ds = Dataset(mixed_schema, [("red", 1.0, 2.0), ("blue", 3.0, 4.0)])
    enc, mapping = encode_one_hot(ds)
    assert enc.schema.names == ["color=red", "color=blue", "amount", "hour"]
    assert enc.rows[0] == (1.0, 0.0, 1.0, 2.0)
    assert enc.rows[1] == (0.0, 1.0, 3.0, 4.0)
    assert mapping.groups() == [[0, 1]]


def test_one_hot_no_categoricals_is_identity():
    ds = dataset_from_matrix(np.array([[1.0, 2.0]]))
    enc, mapping = encode_one_hot(ds)
    assert enc.rows == ds.rows
    assert enc.schema.names == ds.schema.names
    assert mapping.groups() == []


def test_one_hot_rows_sum_to_one():
    schema = FeatureSchema([Feature("c", "categorical", categories=("a", "b", "c"))])
    ds = Dataset(schema, [("a",), ("c",), ("b",), ("a",), ("c",)])
    enc, _ = encode_one_hot(ds)
    assert all(sum(r) == 1.0 for r in enc.rows)


def test_one_hot_decode_round_trip(mixed_schema):
    ds = Dataset(mixed_schema, [("red", 1.0, 2.0), ("blue", 3.0, 4.0)])
    enc, mapping = encode_one_hot(ds)
    for original, encoded in zip(ds.rows, enc.rows):
        assert tuple(mapping.decode_row(encoded)) == original


def test_one_hot_rejects_nulls(mixed_schema):
    ds = Dataset(mixed_schema, [(None, 1.0, 2.0)])
    with pytest.raises(DataError):
        encode_one_hot(ds)


# ---------------------------------------------------------------- normalize


def test_normalize_definition():
    ds = dataset_from_matrix(np.array([[2.0], [4.0], [6.0]]))
    params = fit_normalize(ds)
    out = apply_normalize(ds, params)
    assert [r[0] for r in out.rows] == [0.0, 0.5, 1.0]


def test_normalize_constant_feature_maps_to_zero():
    ds = dataset_from_matrix(np.array([[7.0], [7.0]]))
    out = apply_normalize(ds, fit_normalize(ds))
    assert [r[0] for r in out.rows] == [0.0, 0.0]


def test_normalize_round_trip_many_random_vectors():
    rng = np.random.default_rng(3)
    base = rng.uniform(-50, 120, size=(40, 5))
    params = fit_normalize(dataset_from_matrix(base))
    samples = rng.uniform(base.min(axis=0), base.max(axis=0), size=(100, 5))
    ds = dataset_from_matrix(samples)
    back = invert_normalize(apply_normalize(ds, params), params)
    assert np.allclose(back.matrix(), samples, atol=1e-12, rtol=0)


@given(
    st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=2, max_size=20),
)
@settings(max_examples=50, deadline=None)
def test_normalize_round_trip_property(values):
    ds = dataset_from_matrix(np.array(values).reshape(-1, 1))
    params = fit_normalize(ds)
    back = invert_normalize(apply_normalize(ds, params), params)
    assert np.allclose(back.matrix().ravel(), values, atol=1e-6 * max(1, max(map(abs, values))))


def test_norm_params_validate():
    with pytest.raises(DataError):
        NormParams((("f", 2.0, 1.0),))


# ---------------------------------------------------------------- splits


def test_stratified_split_counts(imbalanced_blobs):
    pair = stratified_split(imbalanced_blobs, 0.8, seed=5)
    train_labels = pair.train.labels
    assert int(np.sum(train_labels == 0)) == 70  # round(88 * 0.8)
    assert int(np.sum(train_labels == 1)) == 10  # round(12 * 0.8)
    assert pair.train.n + pair.test.n == imbalanced_blobs.n


def test_stratified_split_full_fraction_means_empty_test(imbalanced_blobs):
    pair = stratified_split(imbalanced_blobs, 1.0, seed=1)
    assert pair.test.n == 0
    assert pair.train.n == imbalanced_blobs.n


def test_stratified_split_deterministic(imbalanced_blobs):
    a = stratified_split(imbalanced_blobs, 0.8, seed=42)
    b = stratified_split(imbalanced_blobs, 0.8, seed=42)
    assert a.train.rows == b.train.rows
    assert a.test.rows == b.test.rows


def test_stratified_split_reconstructs_multiset(imbalanced_blobs):
    pair = stratified_split(imbalanced_blobs, 0.8, seed=9)
    combined = sorted(pair.train.rows + pair.test.rows)
    assert combined == sorted(imbalanced_blobs.rows)


def test_stratified_split_proportion_bound(imbalanced_blobs):
    pair = stratified_split(imbalanced_blobs, 0.8, seed=11)
    overall = np.mean(imbalanced_blobs.labels)
    train_frac = np.mean(pair.train.labels)
    assert abs(train_frac - overall) <= 1.0 / pair.train.n


def test_stratified_split_requires_two_rows_per_class():
    ds = dataset_from_matrix(np.array([[0.0], [1.0], [2.0]]), [0, 0, 1])
    with pytest.raises(DataError):
        stratified_split(ds, 0.8, seed=0)


def test_occ_split_counts(imbalanced_blobs):
    pair = occ_split(imbalanced_blobs)
    assert pair.train.n == 88
    assert pair.test.n == 12
    assert set(pair.train.labels) == {0}
    assert set(pair.test.labels) == {1}


def test_occ_split_all_negative_errors():
    ds = dataset_from_matrix(np.zeros((4, 1)), [0, 0, 0, 0])
    with pytest.raises(DataError):
        occ_split(ds)


def test_occ_split_preserves_order():
    ds = dataset_from_matrix(np.arange(8).reshape(4, 2).astype(float), [0, 1, 0, 1])
    pair = occ_split(ds)
    assert pair.train.rows == (ds.rows[0], ds.rows[2])
    assert pair.test.rows == (ds.rows[1], ds.rows[3])


def test_save_split_writes_manifest(tmp_path, imbalanced_blobs):
    pair = stratified_split(imbalanced_blobs, 0.8, seed=2)
    save_split(pair, tmp_path, train_fraction=0.8)
    assert (tmp_path / "train.csv").exists()
    assert (tmp_path / "test.csv").exists()
    manifest = (tmp_path / "split_manifest.json").read_text()
    assert '"seed": 2' in manifest
