"""Input validation helpers shared across modules."""

import numpy as np

from .exceptions import CapacityError, InputShapeError


def check_bits(x, n=None, name="x"):
    """Return ``x`` as a uint8 array of 0/1 entries, optionally of length ``n``.

    Accepts sequences of bits, or strings like ``"101"`` (first char is bit 0).
    """
    if isinstance(x, str):
        x = [int(c) for c in x]
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise InputShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InputShapeError(f"{name} has length {arr.shape[0]}, expected {n}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InputShapeError(f"{name} must contain only 0/1 entries")
    return arr.astype(np.uint8)


def bits_to_index(bits):
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def index_to_bits(index, n):
    return np.array([(index >> i) & 1 for i in range(n)], dtype=np.uint8)


def all_inputs(n):
    """Bit matrix of shape (2**n, n); row ``i`` is the bit vector of index ``i``."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def check_capacity(n, limit, what="qubits"):
    if n > limit:
        raise CapacityError(f"{n} {what} exceeds capacity {limit}")


def check_probability_vector(p, n_qubits=None, atol=1e-9, name="p"):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise InputShapeError(f"{name} must be one-dimensional")
    size = p.shape[0]
    if size == 0 or size & (size - 1):
        raise InputShapeError(f"{name} length {size} is not a power of two")
    if n_qubits is not None and size != 1 << n_qubits:
        raise InputShapeError(f"{name} length {size} does not match {n_qubits} qubits")
    if not np.all(np.isfinite(p)):
        raise InputShapeError(f"{name} has non-finite entries")
    return p


def n_qubits_of(size):
    n = size.bit_length() - 1
    if size != 1 << n:
        raise InputShapeError(f"length {size} is not a power of two")
    return n


def check_calibration_matrix(a, atol=1e-9):
    a = np.asarray(a, dtype=float)
    if a.shape != (2, 2):
        raise InputShapeError(f"calibration matrix must be 2x2, got {a.shape}")
    if np.any(a < -atol) or np.any(a > 1 + atol):
        raise InputShapeError("calibration entries must lie in [0, 1]")
    if not np.allclose(a.sum(axis=0), 1.0, atol=atol):
        raise InputShapeError("calibration matrix columns must sum to 1")
    return a


def check_shots(shots, minimum=1):
    if int(shots) != shots or shots < minimum:
        raise InputShapeError(f"shots must be an integer >= {minimum}, got {shots}")
    return int(shots)
