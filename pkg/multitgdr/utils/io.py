import fcntl
import logging
import os
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import InputOutputError, ParseError
from ..models import ExpressionDataset

logger = logging.getLogger(__name__)

DELIMITERS = {"comma": ",", "tab": "\t"}


class ParsedTable(NamedTuple):
    feature_names: List[str]
    features: np.ndarray
    labels: Optional[List[str]]
    studies: Optional[List[str]]


def detect_delimiter(path: str) -> str:
    """Tab if the header line has a tab, comma otherwise."""
    with open(path, "r") as f:
        header = f.readline()
    return "\t" if "\t" in header else ","


def _separator(path: str, delimiter: Optional[str]) -> str:
    if not os.path.exists(path):
        raise InputOutputError(f"{path} does not exist")
    if delimiter is None:
        return detect_delimiter(path)
    return DELIMITERS.get(delimiter, delimiter)


def _read_cells(path: str, delimiter: str) -> pd.DataFrame:
    try:
        # header kept as row 0 so duplicate names are not mangled
        cells = pd.read_csv(
            path, sep=delimiter, header=None, dtype=str, keep_default_na=False
        )
    except pd.errors.EmptyDataError:
        raise ParseError(f"{path} is empty")
    except pd.errors.ParserError as e:
        raise ParseError(f"{path} could not be parsed: {e}")
    if cells.shape[0] < 2:
        raise ParseError(f"{path} has a header but no samples")
    return cells


def _index_of(header: List[str], column: str, path: str) -> int:
    if column not in header:
        raise ParseError(f"{path} has no column {column!r}")
    return header.index(column)


def encode_values(values: Sequence[str], order: List[str], what: str) -> np.ndarray:
    lookup = {name: i + 1 for i, name in enumerate(order)}
    codes = np.empty(len(values), dtype=np.int64)
    for row, value in enumerate(values):
        if value not in lookup:
            raise ParseError(f"row {row + 1}: {what} {value!r} is not one of {order}")
        codes[row] = lookup[value]
    return codes


def _first_seen(values: Sequence[str]) -> List[str]:
    return list(dict.fromkeys(values))


def read_table(
    path: str,
    label_col: str = "label",
    study_col: Optional[str] = None,
    delimiter: Optional[str] = None,
    require_label: bool = True,
) -> ParsedTable:
    """Split a samples-as-rows table into features, labels and studies.

    Rows in error messages count samples from 1, not counting the header.
    """
    separator = _separator(path, delimiter)
    cells = _read_cells(path, separator)
    header = [str(h).strip() for h in cells.iloc[0].tolist()]
    body = cells.iloc[1:].reset_index(drop=True)

    duplicates = sorted({h for h in header if header.count(h) > 1})
    if duplicates:
        raise ParseError(f"{path} has duplicate column names {duplicates}")

    label_index = None
    if require_label or label_col in header:
        label_index = _index_of(header, label_col, path)
    study_index = _index_of(header, study_col, path) if study_col else None
    feature_columns = [
        i for i in range(len(header)) if i != label_index and i != study_index
    ]
    if not feature_columns:
        raise ParseError(f"{path} has no feature columns")

    raw = body.iloc[:, feature_columns]
    numeric = raw.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        name = header[feature_columns[col]]
        raise ParseError(
            f"row {row + 1}, column {name!r}: {raw.iat[row, col]!r} is not a finite number"
        )
    # to_numeric is not correctly rounded; the round-trip parser is
    values = pd.read_csv(
        path,
        sep=separator,
        header=None,
        skiprows=1,
        usecols=feature_columns,
        skipinitialspace=True,
        float_precision="round_trip",
    ).to_numpy(dtype=np.float64)

    def column(index: Optional[int]) -> Optional[List[str]]:
        if index is None:
            return None
        return [str(v).strip() for v in body.iloc[:, index]]

    return ParsedTable(
        feature_names=[header[i] for i in feature_columns],
        features=values,
        labels=column(label_index),
        studies=column(study_index),
    )


def load_dataset(
    path: str,
    label_col: str = "label",
    study_col: Optional[str] = None,
    classes: Optional[Sequence[str]] = None,
    delimiter: Optional[str] = None,
) -> ExpressionDataset:
    """Samples-as-rows table with a header; one label column, an optional study
    column, every other column a numeric feature.

    Classes are numbered in the order of `classes` (the last is the reference
    class) or in first-seen order; studies in first-seen order.
    """
    table = read_table(path, label_col, study_col, delimiter)

    class_names = list(classes) if classes else _first_seen(table.labels)
    if len(set(class_names)) != len(class_names):
        raise ParseError(f"class list {class_names} repeats a class")
    if len(class_names) < 2:
        raise ParseError(f"{path} has fewer than two classes")

    study_ids = None
    study_names = None
    if table.studies is not None:
        study_names = _first_seen(table.studies)
        study_ids = encode_values(table.studies, study_names, "study")

    dataset = ExpressionDataset(
        features=table.features,
        labels=encode_values(table.labels, class_names, "label"),
        study_ids=study_ids,
        feature_names=table.feature_names,
        class_names=class_names,
        study_names=study_names,
    )
    logger.info(
        f"Loaded {path}: n={dataset.n_samples}, D={dataset.n_features}, "
        f"K={dataset.class_count}, M={dataset.study_count}"
    )
    return dataset


def dataset_frame(data: ExpressionDataset, study_col: Optional[str] = None) -> pd.DataFrame:
    """Inverse of `load_dataset`: label (and study) column first, then features."""
    frame = pd.DataFrame(data.features, columns=data.feature_names)
    frame.insert(0, "label", [data.class_names[k - 1] for k in data.labels])
    if study_col:
        frame.insert(1, study_col, [data.study_names[m - 1] for m in data.study_ids])
    return frame


def safe_write_text(filepath: str, text: str) -> None:
    """Write text to file atomically under an exclusive lock"""
    directory = os.path.dirname(filepath)
    if directory:
        os.makedirs(directory, exist_ok=True)
    temp_path = f"{filepath}.tmp"
    try:
        with open(temp_path, "w") as f:
            fcntl.flock(f, fcntl.LOCK_EX)
            try:
                f.write(text)
                f.flush()
                os.fsync(f.fileno())
            finally:
                fcntl.flock(f, fcntl.LOCK_UN)

        os.rename(temp_path, filepath)
    except OSError as e:
        logger.error(f"Error writing to {filepath}: {str(e)}")
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise InputOutputError(f"could not write {filepath}: {e.strerror or e}")


def write_frame(filepath: str, frame: pd.DataFrame) -> None:
    """CSV with full-precision floats."""
    safe_write_text(filepath, frame.to_csv(index=False, float_format="%.17g"))


def probability_frame(
    labels: np.ndarray, probabilities: np.ndarray, class_names: List[str]
) -> pd.DataFrame:
    frame = pd.DataFrame(
        {
            "sample": np.arange(1, labels.shape[0] + 1),
            "predicted": [class_names[k - 1] for k in labels],
        }
    )
    for k, name in enumerate(class_names):
        frame[f"p_{name}"] = probabilities[:, k]
    return frame


def read_probability_frame(path: str) -> Tuple[List[str], np.ndarray]:
    """(class names, n x K probabilities) from the p_<class> columns of a `predict` output."""
    if not os.path.exists(path):
        raise InputOutputError(f"{path} does not exist")
    try:
        frame = pd.read_csv(path, dtype={"predicted": str}, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"could not read predictions {path}: {e}")
    columns = [c for c in frame.columns if c.startswith("p_")]
    if len(columns) < 2:
        raise ParseError(f"{path} has no probability columns")
    return [c[2:] for c in columns], frame[columns].to_numpy(dtype=np.float64)
