import numpy as np
import pytest

from mixmed import ColumnSchema, Contrast, Dataset, load_dataset, write_dataset
from mixmed.data import split_indices, split_train_analysis, standardize
from mixmed.errors import (
    DegenerateColumnError,
    InsufficientDataError,
    ParseError,
    SchemaError,
)
from mixmed.rng import SeededRng


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_dataset_basic(tmp_path):
    p = write_csv(tmp_path / "d.csv", "X1,M,Y,C1\n1,2,3,4\n2,3,4,5\n3,4,5,6\n")
    data = load_dataset(p, ColumnSchema(("X1",), "M", "Y", ("C1",)))
    assert data.n == 3 and data.p == 1 and data.s == 1
    assert data.n_dropped == 0
    np.testing.assert_allclose(data.exposures.ravel(), [1, 2, 3])
    np.testing.assert_allclose(data.outcome, [3, 4, 5])


def test_load_dataset_drops_missing(tmp_path):
    p = write_csv(tmp_path / "d.csv", "X1,M,Y\n1,2,3\n2,,4\n3,4,5\n4,5,6\n")
    data = load_dataset(p, ColumnSchema(("X1",), "M", "Y"))
    assert data.n == 3
    assert data.n_dropped == 1


def test_load_dataset_categorical_confounder(tmp_path):
    p = write_csv(
        tmp_path / "d.csv",
        "X1,M,Y,edu\n1,2,3,low\n2,3,4,mid\n3,4,5,high\n4,5,6,low\n",
    )
    data = load_dataset(p, ColumnSchema(("X1",), "M", "Y", ("edu",)))
    # 3 levels -> 2 dummies, alphabetically first level ("high") is reference
    assert data.confounder_names == ("edu=low", "edu=mid")
    np.testing.assert_allclose(data.confounders[:, 0], [1, 0, 0, 1])


def test_load_dataset_schema_error(tmp_path):
    p = write_csv(tmp_path / "d.csv", "X1,M,Y\n1,2,3\n2,3,4\n")
    with pytest.raises(SchemaError):
        load_dataset(p, ColumnSchema(("X9",), "M", "Y"))


def test_load_dataset_parse_error_names_cell(tmp_path):
    p = write_csv(tmp_path / "d.csv", "X1,M,Y\n1,2,3\nbad,3,4\n5,6,7\n")
    with pytest.raises(ParseError) as err:
        load_dataset(p, ColumnSchema(("X1",), "M", "Y"))
    assert err.value.column == "X1"
    assert err.value.row == 1


def test_load_dataset_too_few_rows(tmp_path):
    p = write_csv(tmp_path / "d.csv", "X1,M,Y\n1,2,3\n2,,4\n")
    with pytest.raises(InsufficientDataError):
        load_dataset(p, ColumnSchema(("X1",), "M", "Y"))


def test_roundtrip_write_load(tmp_path):
    gen = np.random.default_rng(3)
    data = Dataset(
        exposures=gen.standard_normal((20, 3)),
        mediator=gen.standard_normal(20),
        outcome=gen.standard_normal(20),
        confounders=gen.standard_normal((20, 2)),
        exposure_names=("X1", "X2", "X3"),
        confounder_names=("C1", "C2"),
    )
    path = tmp_path / "rt.csv"
    write_dataset(data, path)
    back = load_dataset(
        path, ColumnSchema(("X1", "X2", "X3"), "M", "Y", ("C1", "C2"))
    )
    np.testing.assert_array_equal(back.exposures, data.exposures)
    np.testing.assert_array_equal(back.mediator, data.mediator)
    np.testing.assert_array_equal(back.outcome, data.outcome)
    np.testing.assert_array_equal(back.confounders, data.confounders)


def test_standardize_hand_example():
    Z, means, sds = standardize(np.array([[1.0], [2.0], [3.0]]))
    np.testing.assert_allclose(Z.ravel(), [-1, 0, 1])
    assert means[0] == 2.0 and sds[0] == 1.0


def test_standardize_idempotent():
    gen = np.random.default_rng(11)
    X = gen.standard_normal((40, 4)) * 3 + 5
    Z1, _, _ = standardize(X)
    Z2, _, _ = standardize(Z1)
    np.testing.assert_allclose(Z1, Z2, atol=1e-12)
    assert np.all(np.abs(Z1.mean(axis=0)) < 1e-12)
    assert np.all(np.abs(Z1.std(axis=0, ddof=1) - 1) < 1e-12)


def test_standardize_constant_column():
    with pytest.raises(DegenerateColumnError, match="flat"):
        standardize(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]), names=("flat", "ok"))


def test_split_sizes_and_partition():
    for n, sizes in ((10, (5, 5)), (11, (5, 6))):
        tr, an = split_indices(n, 1)
        assert (len(tr), len(an)) == sizes
        assert sorted(np.concatenate([tr, an]).tolist()) == list(range(n))
        assert set(tr).isdisjoint(an)


def test_split_deterministic(toy_dataset):
    t1, a1 = split_train_analysis(toy_dataset, SeededRng(9))
    t2, a2 = split_train_analysis(toy_dataset, SeededRng(9))
    np.testing.assert_array_equal(t1.exposures, t2.exposures)
    np.testing.assert_array_equal(a1.outcome, a2.outcome)


def test_split_too_small():
    d = Dataset(
        np.array([[1.0], [2.0], [3.0]]),
        [1, 2, 3],
        [1, 2, 3],
        np.empty((3, 0)),
        ("X1",),
    )
    with pytest.raises(InsufficientDataError):
        split_train_analysis(d, 0)


def test_contrast_validation():
    c = Contrast.unit(3)
    np.testing.assert_allclose(c.delta, np.ones(3))
    with pytest.raises(ValueError):
        Contrast(np.zeros(2), np.zeros(3))


def test_rng_streams_isolated():
    a = SeededRng(5).child(2, 7).generator().standard_normal(4)
    b = SeededRng(5).child(2, 7).generator().standard_normal(4)
    c = SeededRng(5).child(2, 8).generator().standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
