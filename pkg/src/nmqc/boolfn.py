"""Boolean functions as truth tables, Walsh spectra and nonlinearity.

Inputs are bit vectors ``x = (x_0, ..., x_{n-1})``; the truth table is indexed
by ``sum(x_i << i)`` so bit 0 is the least significant index bit.
"""

import json
from dataclasses import dataclass

import numpy as np

from ._validation import all_inputs, bits_to_index, check_bits, check_capacity
from .exceptions import InputShapeError, UnknownNameError

MAX_ARITY = 20


@dataclass(frozen=True, eq=False)
class BooleanFunction:
    arity: int
    table: np.ndarray

    def __post_init__(self):
        if self.arity < 1:
            raise InputShapeError("arity must be >= 1")
        table = np.asarray(self.table)
        if table.shape != (1 << self.arity,):
            raise InputShapeError(
                f"truth table of length {table.size} does not match arity {self.arity}"
            )
        if not np.isin(table, (0, 1)).all():
            raise InputShapeError("truth table entries must be 0 or 1")
        table = table.astype(np.uint8)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def __call__(self, x):
        return evaluate(self, x)

    def __eq__(self, other):
        if not isinstance(other, BooleanFunction):
            return NotImplemented
        return self.arity == other.arity and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.arity, self.table.tobytes()))

    def __repr__(self):
        return f"BooleanFunction(arity={self.arity}, table='{self.to_string()}')"

    @property
    def signs(self):
        """The table mapped to +-1 values, ``(-1)**f(x)``."""
        return 1 - 2 * self.table.astype(np.int64)

    def to_string(self):
        return "".join(str(int(b)) for b in self.table)

    @classmethod
    def from_string(cls, table):
        n = len(table).bit_length() - 1
        if n < 1 or len(table) != 1 << n:
            raise InputShapeError(f"table string length {len(table)} is not 2**n")
        return cls(n, np.array([int(c) for c in table], dtype=np.uint8))

    @classmethod
    def from_callable(cls, func, n, max_arity=MAX_ARITY):
        """Tabulate ``func(x)`` for every bit vector ``x`` of length ``n``."""
        check_capacity(n, max_arity, "input bits")
        xs = all_inputs(n)
        return cls(n, np.array([int(func(x)) & 1 for x in xs], dtype=np.uint8))


@dataclass(frozen=True)
class AffineFunction:
    """``g(x) = (mask . x) xor constant`` with ``mask`` an integer bit mask."""

    arity: int
    mask: int
    constant: int = 0

    def __call__(self, x):
        x = check_bits(x, self.arity)
        return (bin(bits_to_index(x) & self.mask).count("1") + self.constant) & 1

    def to_boolean(self):
        idx = np.arange(1 << self.arity)
        parity = np.array([bin(int(i) & self.mask).count("1") & 1 for i in idx])
        return BooleanFunction(self.arity, (parity ^ self.constant).astype(np.uint8))


@dataclass(frozen=True, eq=False)
class WalshSpectrum:
    arity: int
    coefficients: np.ndarray

    def __getitem__(self, mask):
        return int(self.coefficients[mask])

    @property
    def max_abs(self):
        return int(np.abs(self.coefficients).max())


def evaluate(f, x):
    x = check_bits(x, f.arity)
    return int(f.table[bits_to_index(x)])


def make_hk(k, max_arity=MAX_ARITY):
    """``h_k(x)``: XOR of all pairwise products ``x_i x_j`` (i < j) and all ``x_i``."""
    if k < 2:
        raise InputShapeError(f"h_k needs k >= 2, got {k}")
    check_capacity(k, max_arity, "input bits")
    # For weight w, pairwise terms contribute C(w, 2) and linear terms w.
    idx = np.arange(1 << k, dtype=np.int64)
    weight = np.zeros_like(idx)
    for i in range(k):
        weight += (idx >> i) & 1
    table = ((weight * (weight - 1) // 2 + weight) & 1).astype(np.uint8)
    return BooleanFunction(k, table)


def _nand2(x):
    return (x[0] & x[1]) ^ 1


def _or3(x):
    return x[0] | x[1] | x[2]


def _or3xor(x):
    return _or3(x) ^ (x[0] & x[2])


_NAMED = {
    "NAND2": lambda: BooleanFunction.from_callable(_nand2, 2),
    "OR3": lambda: BooleanFunction.from_callable(_or3, 3),
    "OR3XOR": lambda: BooleanFunction.from_callable(_or3xor, 3),
}


def named(name):
    """Look up one of the target functions by identifier (NAND2, OR3, OR3XOR, H3..)."""
    key = name.strip().upper()
    if key in _NAMED:
        return _NAMED[key]()
    if key.startswith("HK:"):
        key = "H" + key[3:]
    if key.startswith("H") and key[1:].isdigit():
        return make_hk(int(key[1:]))
    raise UnknownNameError(f"unknown Boolean function {name!r}")


def walsh_spectrum(f):
    """Fast Walsh-Hadamard transform of ``(-1)**f``, O(n 2**n)."""
    w = f.signs.copy()
    n = f.arity
    for i in range(n):
        h = 1 << i
        w = w.reshape(-1, 2, h)
        a = w[:, 0, :].copy()
        b = w[:, 1, :]
        w[:, 0, :] += b
        w[:, 1, :] = a - b
    w = w.reshape(-1)
    w.setflags(write=False)
    return WalshSpectrum(n, w)


def nonlinearity(f):
    spec = walsh_spectrum(f)
    return (1 << (f.arity - 1)) - spec.max_abs // 2


def closest_affine(f):
    """Affine function at minimum Hamming distance from ``f`` and that distance.

    Ties go to the smallest ``(mask, constant)`` pair.
    """
    w = walsh_spectrum(f).coefficients
    # agreement with (mask, b) is (2**n + (-1)**b W[mask]) / 2; flat index 2*mask + b
    score = np.stack([w, -w], axis=1).reshape(-1)
    best = int(np.argmax(score))
    mask, constant = divmod(best, 2)
    distance = ((1 << f.arity) - int(score[best])) // 2
    return AffineFunction(f.arity, mask, constant), distance


def is_bent(f):
    if f.arity % 2:
        return False
    target = 1 << (f.arity // 2)
    return bool(np.all(np.abs(walsh_spectrum(f).coefficients) == target))


def function_from_dict(data):
    """Build a function from ``{"arity": n, "table": "0110..."}`` or a name string."""
    if isinstance(data, str):
        return named(data)
    table = data["table"]
    if isinstance(table, str):
        f = BooleanFunction.from_string(table)
    else:
        f = BooleanFunction(int(data["arity"]), np.asarray(table, dtype=np.uint8))
    if "arity" in data and int(data["arity"]) != f.arity:
        raise InputShapeError(f"arity {data['arity']} does not match table length")
    return f


def load_function(path):
    with open(path) as fh:
        return function_from_dict(json.load(fh))


def function_to_dict(f):
    return {"arity": f.arity, "table": f.to_string()}
