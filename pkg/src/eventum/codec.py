"""JSON encoding of complex arrays as nested ``[re, im]`` pairs."""

from __future__ import annotations

import numpy as np


def _is_pair(x) -> bool:
    return isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x)


def decode_scalar(x) -> complex:
    if isinstance(x, bool):
        raise ValueError(f"not a number: {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if _is_pair(x):
        return complex(x[0], x[1])
    raise ValueError(f"expected a number or an [re, im] pair, got {x!r}")


def decode_vector(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        return data.astype(complex).reshape(-1)
    if not isinstance(data, (list, tuple)) or not data:
        raise ValueError(f"expected a non-empty list of entries, got {data!r}")
    return np.array([decode_scalar(x) for x in data], dtype=complex)


def decode_matrix(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        if data.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {data.shape}")
        return data.astype(complex)
    if not isinstance(data, (list, tuple)) or not data:
        raise ValueError(f"expected a non-empty list of rows, got {data!r}")
    rows = [decode_vector(row) for row in data]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows have different lengths")
    return np.array(rows)


def encode_scalar(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_vector(v) -> list:
    return [encode_scalar(z) for z in np.asarray(v).reshape(-1)]


def encode_matrix(a) -> list:
    return [encode_vector(row) for row in np.asarray(a)]
