"""NMQC games: target function, input distribution, parity pre-processing and
measurement angles, with their Bell coefficients and certified bounds."""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import boolfn
from ._validation import all_inputs, check_bits, check_capacity
from .exceptions import InputShapeError, UnknownNameError

HALF_PI = math.pi / 2
PHASE_TOL = 1e-9
BRUTE_FORCE_MAX_QUBITS = 16
STANDARD_GAMES = ("NAND2", "OR3", "OR3XOR", "H3", "H4", "H5", "H6")


@dataclass(frozen=True, eq=False)
class NmqcGame:
    """An NMQC game.

    ``matrix`` has shape ``(l, n + 1)``: the last column is a constant bit added
    to every setting, so ``s = matrix @ [x, 1] mod 2``.
    """

    target: boolfn.BooleanFunction
    matrix: np.ndarray
    distribution: np.ndarray
    angles: np.ndarray
    post_bit: int = 0
    name: str = "custom"

    def __post_init__(self):
        n = self.target.arity
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[1] != n + 1:
            raise InputShapeError(f"pre-processing matrix must have shape (l, {n + 1})")
        if not np.isin(m, (0, 1)).all():
            raise InputShapeError("pre-processing matrix entries must be 0 or 1")
        xi = np.asarray(self.distribution, dtype=float)
        if xi.shape != (1 << n,):
            raise InputShapeError(f"distribution must have length {1 << n}")
        if np.any(xi < 0) or abs(xi.sum() - 1.0) > 1e-12:
            raise InputShapeError("distribution must be non-negative and sum to 1")
        phi = np.broadcast_to(np.asarray(self.angles, dtype=float), (m.shape[0],)).copy()
        if np.any(phi <= -math.pi) or np.any(phi > math.pi):
            raise InputShapeError("angles must lie in (-pi, pi]")
        if self.post_bit not in (0, 1):
            raise InputShapeError("post_bit must be 0 or 1")
        m = m.astype(np.uint8)
        for arr in (m, xi, phi):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "distribution", xi)
        object.__setattr__(self, "angles", phi)

    @property
    def n_inputs(self):
        return self.target.arity

    @property
    def qubits(self):
        return self.matrix.shape[0]

    @property
    def uses_xy(self):
        """True when every angle is pi/2, i.e. sites measure X (s=0) or Y (s=1)."""
        return bool(np.allclose(self.angles, HALF_PI, atol=PHASE_TOL))

    def support(self):
        """Input indices with non-zero probability."""
        return np.flatnonzero(self.distribution > 0)

    def settings_table(self):
        """Setting bits for every input, shape ``(2**n, l)``."""
        xs = all_inputs(self.n_inputs)
        ext = np.hstack([xs, np.ones((xs.shape[0], 1), dtype=np.uint8)])
        return (ext.astype(np.int64) @ self.matrix.T.astype(np.int64) % 2).astype(np.uint8)

    def signed_weights(self):
        """``(-1)**(f(x) + c) * xi(x)`` for every input index."""
        sign = self.target.signs * (1 - 2 * self.post_bit)
        return sign * self.distribution


@dataclass(frozen=True)
class BellInequality:
    terms: tuple  # ((setting string, coefficient), ...)
    classical_bound: float
    quantum_bound: float

    def as_dict(self):
        return dict(self.terms)


def preprocess(game, x):
    """Setting bits ``s = (P [x, 1]) mod 2``."""
    x = check_bits(x, game.n_inputs)
    ext = np.append(x, 1).astype(np.int64)
    return (game.matrix.astype(np.int64) @ ext % 2).astype(np.uint8)


def setting_string(s):
    return "".join("Y" if b else "X" for b in s)


def setting_angles(game, s):
    """Measurement angle per site, ``phi_j * s_j``."""
    return np.asarray(s, dtype=float) * game.angles


def _hk_matrix(k):
    m = np.zeros((k + 1, k + 1), dtype=np.uint8)
    m[:k, :k] = np.eye(k, dtype=np.uint8)
    m[k, :k] = 1
    return m


def _hk_game(k):
    f = boolfn.make_hk(k)
    return NmqcGame(f, _hk_matrix(k), np.full(1 << k, 1.0 / (1 << k)), HALF_PI, 0, f"H{k}")


def standard_game(name):
    """One of the games NAND2, OR3, OR3XOR, H3..H6 or ``Hk:<k>`` for any k >= 2."""
    key = name.strip().upper()
    if key.startswith("HK:"):
        key = "H" + key[3:]
    elif key.startswith("HK(") and key.endswith(")"):
        key = "H" + key[3:-1]
    if key == "NAND2":
        # s = (x0, x1, x0 ^ x1 ^ 1, 1)
        m = np.array([[1, 0, 0], [0, 1, 0], [1, 1, 1], [0, 0, 1]], dtype=np.uint8)
        return NmqcGame(boolfn.named("NAND2"), m, np.full(4, 0.25), HALF_PI, 0, "NAND2")
    if key == "OR3":
        xi = np.full(8, 0.1)
        xi[0] = 0.3
        return NmqcGame(boolfn.named("OR3"), _hk_matrix(3), xi, HALF_PI, 0, "OR3")
    if key == "OR3XOR":
        # weight 3/16 on inputs 100, 010, 110, 011; 1/16 elsewhere
        xi = np.full(8, 1 / 16)
        for x in (0b001, 0b010, 0b011, 0b110):
            xi[x] = 3 / 16
        return NmqcGame(boolfn.named("OR3XOR"), _hk_matrix(3), xi, HALF_PI, 0, "OR3XOR")
    if key.startswith("H") and key[1:].isdigit():
        return _hk_game(int(key[1:]))
    raise UnknownNameError(f"unknown game {name!r}")


def bell_coefficients(game, bounds=True):
    """Group inputs by setting string and sum their signed weights.

    With ``bounds=True`` the classical bound (exact, via parity strategies) and
    the quantum GHZ value are filled in.
    """
    weights = game.signed_weights()
    settings = game.settings_table()
    terms = {}
    for x in game.support():
        key = setting_string(settings[x])
        terms[key] = terms.get(key, 0.0) + float(weights[x])
    beta_c = classical_bound(game) if bounds else float("nan")
    beta_q = ghz_value(game) if bounds else float("nan")
    return BellInequality(tuple(terms.items()), beta_c, beta_q)


def check_deterministic(game, tol=PHASE_TOL):
    """Whether ``exp(i sum_j s_j phi_j) == (-1)**(f(x) + c)`` holds for every input."""
    settings = game.settings_table().astype(float)
    phase = np.exp(1j * settings @ game.angles)
    target = game.target.signs * (1 - 2 * game.post_bit)
    return bool(np.all(np.abs(phase - target) <= tol))


def _strategy_signs(game):
    """Rows: inputs in the support; columns: setting bits. Plus their weights."""
    support = game.support()
    return game.settings_table()[support], game.signed_weights()[support]


def classical_bound_bruteforce(game, chunk=1 << 14):
    """LHV bound by enumerating all ``4**l`` deterministic local strategies.

    Strategy bit ``2j + b`` is the output bit of site ``j`` for setting ``b``.
    """
    l = game.qubits
    check_capacity(l, BRUTE_FORCE_MAX_QUBITS)
    settings, weights = _strategy_signs(game)
    shifts = (2 * np.arange(l)[None, :] + settings).astype(np.int64)  # (inputs, l)
    best = -np.inf
    total = 1 << (2 * l)
    for start in range(0, total, chunk):
        strat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = (strat[:, None, None] >> shifts[None, :, :]) & 1
        parity = bits.sum(axis=2) & 1
        values = (1 - 2 * parity) @ weights
        best = max(best, float(values.max()))
    return best


def classical_bound(game):
    """Exact LHV bound via parity strategies, O(2**l * inputs).

    A product of local +-1 outputs is ``(-1)**(a + b.s)``, so the optimum is
    ``max_b |sum_x w(x) (-1)**(b.s(x))|``.
    """
    l = game.qubits
    check_capacity(l, 24)
    settings, weights = _strategy_signs(game)
    b = np.arange(1 << l, dtype=np.int64)
    s_idx = (settings.astype(np.int64) << np.arange(l)).sum(axis=1)
    best = 0.0
    for start in range(0, b.size, 1 << 12):
        chunk = b[start:start + (1 << 12)]
        overlap = chunk[:, None] & s_idx[None, :]
        parity = np.zeros_like(overlap)
        for j in range(l):
            parity ^= (overlap >> j) & 1
        best = max(best, float(np.abs((1 - 2 * parity) @ weights).max()))
    return best


def classical_bound_formula(k):
    """LHV bound of the uniform h_k game: 2**(-k/2) (even k), 2**(-(k-1)/2) (odd k)."""
    if k < 2:
        raise InputShapeError("k must be >= 2")
    return 2.0 ** (-(k // 2)) if k % 2 == 0 else 2.0 ** (-((k - 1) // 2))


def classical_bound_from_nonlinearity(f):
    """Bias of the closest affine function for a uniform distribution."""
    size = 1 << f.arity
    return 2 * (size - boolfn.nonlinearity(f)) / size - 1


def ghz_value(game):
    """Bell value with exact GHZ expectation values (no sampling)."""
    from . import sim

    check_capacity(game.qubits, sim.STATEVECTOR_CAPACITY)
    state = sim.prepare_ghz(game.qubits)
    settings = game.settings_table()
    weights = game.signed_weights()
    beta = 0.0
    for x in game.support():
        beta += weights[x] * sim.expectation(state, setting_angles(game, settings[x]))
    return float(beta)


def game_to_dict(game):
    name = game.name if game.name in STANDARD_GAMES else None
    data = {
        "name": game.name,
        "target": name or boolfn.function_to_dict(game.target),
        "distribution": game.distribution.tolist(),
        "P": game.matrix.tolist(),
        "angles": game.angles.tolist(),
        "post_bit": int(game.post_bit),
    }
    return data


def game_from_dict(data):
    target = boolfn.function_from_dict(data["target"])
    n = target.arity
    dist = data.get("distribution", "uniform")
    if isinstance(dist, str):
        if dist != "uniform":
            raise InputShapeError(f"unknown distribution {dist!r}")
        dist = np.full(1 << n, 1.0 / (1 << n))
    matrix = np.asarray(data["P"], dtype=np.uint8)
    if matrix.ndim == 2 and matrix.shape[1] == n:
        matrix = np.hstack([matrix, np.zeros((matrix.shape[0], 1), dtype=np.uint8)])
    angles = data.get("angles", HALF_PI)
    return NmqcGame(target, matrix, np.asarray(dist, dtype=float), angles,
                    int(data.get("post_bit", 0)), data.get("name", "custom"))


def load_game(spec):
    """Resolve a CLI game spec: a standard name, ``Hk:<k>`` or a JSON file path."""
    if spec.lower().endswith(".json"):
        with open(spec) as fh:
            return game_from_dict(json.load(fh))
    return standard_game(spec)
