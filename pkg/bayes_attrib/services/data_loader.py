#!/usr/bin/env python3
"""
Dataset Loader Service
Schema inference, typed CSV loading and re-serialization for tabular classification data
"""

import csv
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import DataFormatError
from ..models.schemas import ColumnSpec, Schema
from .storage import atomic_write_text

logger = logging.getLogger(__name__)

DEFAULT_MISSING_MARKERS = ("", "?")
_DECIMAL = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"


@dataclass(frozen=True)
class Instance:
    """One row of feature values (float, category text, or None/NaN for missing)"""

    values: Tuple[Any, ...]


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Typed rows of a CSV file

    The frame holds the schema columns in schema order. Numeric columns are float64 with NaN
    for missing values, categorical columns are object with None for missing values. The
    target column is absent when the data was loaded without labels.
    """

    schema: Schema
    frame: pd.DataFrame

    @property
    def n_rows(self) -> int:
        return len(self.frame)

    @property
    def has_labels(self) -> bool:
        return self.schema.target in self.frame.columns

    @property
    def labels(self) -> Optional[np.ndarray]:
        if not self.has_labels:
            return None
        index = {label: k for k, label in enumerate(self.schema.class_labels)}
        return self.frame[self.schema.target].map(index).to_numpy(dtype=np.int64)

    def instance(self, row: int) -> Instance:
        return Instance(values=tuple(self.frame[self.schema.feature_names].iloc[row].tolist()))


class DatasetLoader:
    """Service for reading and writing tabular datasets"""

    def __init__(self, missing_markers: Sequence[str] = DEFAULT_MISSING_MARKERS):
        self.missing_markers = list(missing_markers)
        logger.debug(f"Dataset loader initialized with missing markers {self.missing_markers}")

    def infer_schema(self, path: str, target: str) -> Schema:
        """
        Infer column kinds and class labels from a CSV file

        Args:
            path: CSV file with a header line
            target: Name of the class column

        Returns:
            Schema: numeric iff every non-missing value is a decimal number; target is categorical
        """
        raw = self._read_raw(path)
        if target not in raw.columns:
            raise DataFormatError(f"Unknown target column '{target}' in {path}; header: {list(raw.columns)}")
        if raw.empty:
            raise DataFormatError(f"Empty data file {path}: header without data rows")

        columns = []
        for name in raw.columns:
            if name == target:
                columns.append(ColumnSpec(name=name, kind="categorical"))
                continue
            present = raw[name][~raw[name].isin(self.missing_markers)]
            numeric = bool(present.str.fullmatch(_DECIMAL).all())
            columns.append(ColumnSpec(name=name, kind="numeric" if numeric else "categorical"))

        targets = raw[target][~raw[target].isin(self.missing_markers)]
        labels = [str(label) for label in pd.unique(targets)]
        if len(labels) < 2:
            raise DataFormatError(
                f"Target column '{target}' in {path} has {len(labels)} distinct value(s) {labels}; "
                "a classification problem needs at least 2 classes"
            )
        try:
            schema = Schema(columns=columns, target=target, class_labels=labels)
        except ValueError as e:
            raise DataFormatError(f"Invalid header in {path}: {str(e)}")

        n_numeric = sum(c.kind == "numeric" for c in schema.feature_columns)
        logger.info(
            f"Inferred schema for {path}: {schema.n_features} features ({n_numeric} numeric), classes {labels}"
        )
        return schema

    def load_csv(self, path: str, schema: Schema, require_target: bool = True, allow_extra: bool = False) -> Dataset:
        """
        Load a CSV file conforming to a schema

        Args:
            path: CSV file
            schema: Expected column layout
            require_target: When False the class column may be absent (unlabeled data)
            allow_extra: When True columns outside the schema are ignored instead of rejected

        Returns:
            Dataset: rows in file order with missing markers turned into missing values
        """
        raw = self._read_raw(path)
        header = list(raw.columns)
        expected = [c.name for c in schema.columns]
        absent = [n for n in expected if n not in header and (require_target or n != schema.target)]
        extra = [] if allow_extra else [n for n in header if n not in expected]
        if absent or extra:
            raise DataFormatError(
                f"Columns of {path} do not match the schema: missing {absent}, unexpected {extra}"
            )

        columns: Dict[str, pd.Series] = {}
        for spec in schema.columns:
            if spec.name not in header:
                continue
            cells = raw[spec.name]
            is_missing = cells.isin(self.missing_markers)
            if spec.name == schema.target:
                unknown = is_missing | ~cells.isin(schema.class_labels)
                if unknown.any():
                    row = int(np.flatnonzero(unknown.to_numpy())[0])
                    line = int(cells.index[row])
                    raise DataFormatError(
                        f"Unknown class label '{cells.iloc[row]}' at line {line} of {path}; "
                        f"valid labels: {schema.class_labels}"
                    )
                columns[spec.name] = cells.astype(object)
            elif spec.kind == "numeric":
                bad = ~is_missing & ~cells.str.fullmatch(_DECIMAL)
                if bad.any():
                    row = int(np.flatnonzero(bad.to_numpy())[0])
                    line = int(cells.index[row])
                    raise DataFormatError(
                        f"Unparseable numeric value '{cells.iloc[row]}' in column '{spec.name}' "
                        f"at line {line} of {path}"
                    )
                values = [np.nan if m else float(v) for v, m in zip(cells, is_missing)]
                columns[spec.name] = pd.Series(values, index=cells.index, dtype=np.float64)
            else:
                values = [None if m else v for v, m in zip(cells, is_missing)]
                columns[spec.name] = pd.Series(values, index=cells.index, dtype=object)

        frame = pd.DataFrame(columns, columns=[n for n in expected if n in columns])
        frame = frame.reset_index(drop=True)
        logger.info(f"Loaded {len(frame)} rows from {path}")
        return Dataset(schema=schema, frame=frame)

    def write_csv(self, dataset: Dataset, path: str) -> None:
        """Write a dataset back to CSV; missing values become empty cells"""
        text = dataset.frame.to_csv(index=False, na_rep="", lineterminator="\n")
        atomic_write_text(path, text)
        logger.info(f"Wrote {dataset.n_rows} rows to {path}")

    def _read_raw(self, path: str) -> pd.DataFrame:
        """
        Read every cell as text, indexed by the physical line each record starts on

        Blank lines are skipped. A record whose field count differs from the header is rejected.
        """
        if not os.path.isfile(path):
            raise DataFormatError(f"Data file not found: {path}")
        header: Optional[List[str]] = None
        records: List[List[str]] = []
        lines: List[int] = []
        start = 1
        try:
            with open(path, "r", encoding="utf-8-sig", newline="") as handle:
                reader = csv.reader(handle, skipinitialspace=True)
                for record in reader:
                    # quoted cells may span several physical lines
                    line, start = start, reader.line_num + 1
                    if not record:
                        continue
                    if header is None:
                        header = self._check_header(record, path)
                        continue
                    if len(record) != len(header):
                        raise DataFormatError(
                            f"Row arity mismatch at line {line} of {path}: "
                            f"expected {len(header)} fields, got {len(record)}"
                        )
                    records.append(record)
                    lines.append(line)
        except csv.Error as e:
            raise DataFormatError(f"Malformed CSV near line {start} of {path}: {str(e)}")
        except UnicodeDecodeError as e:
            raise DataFormatError(f"{path} is not valid UTF-8: {str(e)}")

        if header is None:
            raise DataFormatError(f"Empty data file: {path}")
        return pd.DataFrame(records, columns=header, index=pd.Index(lines, name="line"), dtype=str)

    @staticmethod
    def _check_header(names: List[str], path: str) -> List[str]:
        empty = [i + 1 for i, name in enumerate(names) if not name.strip()]
        if empty:
            raise DataFormatError(f"Empty column name at position(s) {empty} in the header of {path}")
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise DataFormatError(f"Duplicate column names {duplicates} in the header of {path}")
        return names


def parse_missing_markers(spec: str) -> List[str]:
    """Split a --missing flag value ("?,NA,") into markers; a trailing comma adds the empty cell"""
    return list(dict.fromkeys(spec.split(",")))
