"""
Tests for schema inference, CSV loading and re-serialization
"""

import numpy as np
import pandas as pd
import pytest

from bayes_attrib.exceptions import DataFormatError
from bayes_attrib.services.data_loader import DatasetLoader, parse_missing_markers


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_infer_schema_kinds_and_labels(mixed_csv):
    """Numeric iff every present cell is a decimal; labels in first-appearance order"""
    schema = DatasetLoader().infer_schema(str(mixed_csv), "class")
    kinds = {c.name: c.kind for c in schema.columns}
    assert kinds == {"age": "numeric", "color": "categorical", "class": "categorical"}
    assert schema.class_labels == ["yes", "no"]
    assert schema.feature_names == ["age", "color"]


def test_load_csv_maps_missing_markers(mixed_csv):
    loader = DatasetLoader()
    schema = loader.infer_schema(str(mixed_csv), "class")
    dataset = loader.load_csv(str(mixed_csv), schema)
    assert dataset.n_rows == 20
    assert np.isnan(dataset.frame["age"].iloc[5])
    assert dataset.frame["age"].iloc[0] == 20.0
    assert dataset.frame["color"].iloc[6] is None
    assert dataset.labels.tolist()[:3] == [0, 1, 1]


def test_unknown_target_is_rejected(mixed_csv):
    with pytest.raises(DataFormatError, match="Unknown target column 'label'"):
        DatasetLoader().infer_schema(str(mixed_csv), "label")


def test_single_class_target_is_rejected(tmp_path):
    path = write(tmp_path, "one.csv", "a,y\n1,k\n2,k\n")
    with pytest.raises(DataFormatError, match="at least 2 classes"):
        DatasetLoader().infer_schema(path, "y")


def test_header_only_file_is_rejected(tmp_path):
    path = write(tmp_path, "empty.csv", "a,y\n")
    with pytest.raises(DataFormatError, match="Empty data file"):
        DatasetLoader().infer_schema(path, "y")


def test_missing_file_is_rejected(tmp_path):
    with pytest.raises(DataFormatError, match="not found"):
        DatasetLoader().infer_schema(str(tmp_path / "nope.csv"), "y")


def test_row_with_extra_field_is_rejected(tmp_path):
    path = write(tmp_path, "long.csv", "a,y\n1,k\n2,j,extra\n3,k\n")
    with pytest.raises(DataFormatError):
        DatasetLoader().infer_schema(path, "y")


def test_row_with_missing_field_is_rejected(tmp_path):
    """A truncated record is an arity error, not a trailing missing value"""
    path = write(tmp_path, "short.csv", "y,a,b\np,1,x\nn,2\np,3,z\n")
    with pytest.raises(DataFormatError, match="line 3 .*expected 3 fields, got 2"):
        DatasetLoader().infer_schema(path, "y")


def test_short_row_is_rejected_when_loading(tmp_path):
    loader = DatasetLoader()
    schema = loader.infer_schema(write(tmp_path, "train.csv", "a,b,y\n1,x,p\n2,z,n\n"), "y")
    with pytest.raises(DataFormatError, match="Row arity mismatch at line 3"):
        loader.load_csv(write(tmp_path, "short.csv", "a,b,y\n1,x,p\n2,n\n"), schema)


def test_duplicate_header_names_are_rejected(tmp_path):
    path = write(tmp_path, "dup.csv", "a,a,y\n1,2,p\n3,4,n\n")
    with pytest.raises(DataFormatError, match=r"Duplicate column names \['a'\]"):
        DatasetLoader().infer_schema(path, "y")


def test_empty_header_name_is_rejected(tmp_path):
    path = write(tmp_path, "blank.csv", "a,,y\n1,2,p\n3,4,n\n")
    with pytest.raises(DataFormatError, match="Empty column name"):
        DatasetLoader().infer_schema(path, "y")


def test_line_numbers_count_blank_lines_and_multiline_cells(tmp_path):
    loader = DatasetLoader()
    schema = loader.infer_schema(write(tmp_path, "train.csv", "a,y\n1,k\n2,j\n"), "y")
    blank = write(tmp_path, "blank.csv", "a,y\n1,k\n\n2,z\n")
    with pytest.raises(DataFormatError, match="line 4"):
        loader.load_csv(blank, schema)
    schema = loader.infer_schema(write(tmp_path, "train2.csv", "a,c,y\n1,u,k\n2,v,j\n"), "y")
    quoted = write(tmp_path, "quoted.csv", 'a,c,y\n1,"u\nv",k\nten,u,k\n')
    with pytest.raises(DataFormatError, match="column 'a' at line 4"):
        loader.load_csv(quoted, schema)


def test_quoted_fields_keep_embedded_commas(tmp_path):
    path = write(tmp_path, "quoted.csv", 'a,y\n"x, y",p\nz,n\n')
    loader = DatasetLoader()
    dataset = loader.load_csv(path, loader.infer_schema(path, "y"))
    assert dataset.frame["a"].tolist() == ["x, y", "z"]


def test_unknown_label_names_the_line(tmp_path):
    loader = DatasetLoader()
    train = write(tmp_path, "train.csv", "a,y\n1,k\n2,j\n")
    other = write(tmp_path, "other.csv", "a,y\n1,k\n2,z\n")
    schema = loader.infer_schema(train, "y")
    with pytest.raises(DataFormatError, match="line 3"):
        loader.load_csv(other, schema)


def test_unparseable_numeric_names_column_and_line(tmp_path):
    loader = DatasetLoader()
    train = write(tmp_path, "train.csv", "a,y\n1,k\n2,j\n")
    other = write(tmp_path, "other.csv", "a,y\n1,k\n2,j\nten,k\n")
    schema = loader.infer_schema(train, "y")
    with pytest.raises(DataFormatError, match="column 'a' at line 4"):
        loader.load_csv(other, schema)


def test_column_mismatch_is_rejected(tmp_path, mixed_csv):
    loader = DatasetLoader()
    schema = loader.infer_schema(str(mixed_csv), "class")
    other = write(tmp_path, "other.csv", "age,shape,class\n1,sq,yes\n")
    with pytest.raises(DataFormatError, match="do not match the schema"):
        loader.load_csv(other, schema)


def test_unlabeled_rows_load_without_target(tmp_path, mixed_csv):
    loader = DatasetLoader()
    schema = loader.infer_schema(str(mixed_csv), "class")
    unlabeled = write(tmp_path, "unlabeled.csv", "age,color\n30,red\n,blue\n")
    dataset = loader.load_csv(unlabeled, schema, require_target=False)
    assert not dataset.has_labels
    assert dataset.labels is None
    assert dataset.n_rows == 2


def test_write_csv_reloads_to_the_same_dataset(tmp_path, mixed_csv):
    """Missing values survive as empty cells"""
    loader = DatasetLoader()
    schema = loader.infer_schema(str(mixed_csv), "class")
    dataset = loader.load_csv(str(mixed_csv), schema)
    copy = str(tmp_path / "copy.csv")
    loader.write_csv(dataset, copy)
    reloaded = loader.load_csv(copy, schema)
    pd.testing.assert_frame_equal(dataset.frame, reloaded.frame)


def test_parse_missing_markers_keeps_empty_marker():
    assert parse_missing_markers("?,NA,") == ["?", "NA", ""]
    assert parse_missing_markers("?") == ["?"]
