"""
Provides functions to export DataFrame objects and result summaries to files.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

CSV_FLOAT_FORMAT = "%.10g"


def export_as_csv(data: pd.DataFrame, *, path: str | Path | None = None) -> str | None:
    """
    Export a DataFrame as CSV with a fixed float format, so identical data gives identical bytes.

    :param data: A pandas DataFrame whose column labels are the CSV header.
    :param path: Path to csv file to save our data (optional).
    :return: CSV data as a string if no path is set.
    None otherwise.
    """

    return data.to_csv(path_or_buf=path, index=False, float_format=CSV_FLOAT_FORMAT)


def _to_serializable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _to_serializable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_serializable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _to_serializable(value.tolist())
    if isinstance(value, (np.floating, float)):
        return None if np.isnan(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, complex):
        return {"real": value.real, "imag": value.imag}

    return value


def export_as_json(summary: dict[str, Any], *, path: str | Path | None = None) -> str | None:
    """
    Export a result summary as indented JSON with sorted keys.
    Numpy scalars and arrays are converted, NaN becomes null.

    :param summary: A dictionary made of JSON-compatible or numpy values.
    :param path: Path to json file to save our data (optional).
    :return: JSON data as a string if no path is set.
    None otherwise.
    """
    text = json.dumps(_to_serializable(summary), indent=2, sort_keys=True)
    if path is None:
        return text

    Path(path).write_text(text + "\n", encoding="utf-8")

    return None


def export_as_gnuplot(
    data: pd.DataFrame, *, block_column: str, path: str | Path | None = None
) -> str | None:
    """
    Export a grid as whitespace-separated blocks, one per value of `block_column`,
    separated by blank lines as gnuplot's splot expects.

    :param data: A pandas DataFrame ordered by `block_column`.
    :param block_column: Column whose value changes between blocks.
    :param path: Path to the data file (optional).
    :return: The text if no path is set.
    None otherwise.
    """
    blocks = [
        block.to_csv(sep=" ", index=False, header=False, float_format=CSV_FLOAT_FORMAT)
        for _, block in data.groupby(block_column, sort=False)
    ]
    text = "# " + " ".join(data.columns) + "\n" + "\n".join(blocks)
    if path is None:
        return text

    Path(path).write_text(text, encoding="utf-8")

    return None
