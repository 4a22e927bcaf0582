"""GHZ-state preparation, X/Y-plane measurements, and shot sampling with noise.

Conventions: amplitude and probability vectors are indexed with qubit 0 as the
least-significant bit.  Setting strings are written qubit 0 first (``"YXXY"``
measures Y on qubit 0), while outcome keys in a :class:`CountsTable` are written
``m_{l-1} ... m_0`` so that ``int(key, 2)`` is the probability-vector index.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._linalg import apply_local, apply_local_density
from ._validation import check_calibration_matrix, check_capacity, check_shots
from .exceptions import InputShapeError, TopologyError

STATEVECTOR_CAPACITY = 24
DENSITY_CAPACITY = 11

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (1 << self.n_qubits,):
            raise InputShapeError("amplitude vector length must be 2**n_qubits")
        if abs(np.vdot(amp, amp).real - 1.0) > 1e-10:
            raise InputShapeError("state vector is not normalised")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def fidelity(self, other):
        """``|<self|other>|**2``, insensitive to global phase."""
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


class Gate(NamedTuple):
    name: str  # "H" or "CX"
    qubits: tuple

    def __str__(self):
        if self.name == "H":
            return f"H({self.qubits[0]})"
        return f"CX({self.qubits[0]}->{self.qubits[1]})"


@dataclass(frozen=True)
class Circuit:
    """Layered H/CNOT circuit on physical qubits ``qubits``.

    Local qubit ``k`` of the simulated state is physical qubit ``qubits[k]``.
    """

    qubits: tuple
    layers: tuple

    def __post_init__(self):
        known = set(self.qubits)
        for layer in self.layers:
            used = [q for g in layer for q in g.qubits]
            if len(used) != len(set(used)):
                raise InputShapeError(f"layer {layer} acts on a qubit twice")
            if not set(used) <= known:
                raise InputShapeError(f"layer {layer} references unknown qubits")

    @property
    def n_qubits(self):
        return len(self.qubits)

    @property
    def depth(self):
        return len(self.layers)

    @property
    def cnot_layers(self):
        return sum(1 for layer in self.layers if any(g.name == "CX" for g in layer))

    def local(self, q):
        return self.qubits.index(q)

    def gates(self):
        return [g for layer in self.layers for g in layer]

    def draw(self):
        lines = [f"qubits: {' '.join(map(str, self.qubits))}"]
        for i, layer in enumerate(self.layers):
            lines.append(f"L{i}: " + " ".join(str(g) for g in layer))
        return "\n".join(lines)

    def __str__(self):
        return self.draw()


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit readout confusion matrices plus optional two-qubit depolarizing.

    ``readout[k]`` is the column-stochastic matrix ``p(measured | prepared)`` for
    local qubit ``k``.  After every CNOT, with probability ``depolarizing_2q`` the
    two qubits involved are replaced by the maximally mixed state.
    """

    readout: tuple = None
    depolarizing_2q: float = 0.0

    def __post_init__(self):
        if self.readout is not None:
            mats = tuple(check_calibration_matrix(a) for a in self.readout)
            object.__setattr__(self, "readout", mats)
        if not 0.0 <= self.depolarizing_2q <= 1.0:
            raise InputShapeError("depolarizing_2q must lie in [0, 1]")

    @classmethod
    def symmetric(cls, n, eps, depolarizing_2q=0.0):
        eps = np.broadcast_to(np.asarray(eps, dtype=float), (n,))
        return cls(tuple(symmetric_confusion(e) for e in eps), depolarizing_2q)

    @property
    def is_noiseless(self):
        return self.readout is None and self.depolarizing_2q == 0.0

    def readout_for(self, n):
        if self.readout is None:
            return None
        if len(self.readout) != n:
            raise InputShapeError(f"noise model has {len(self.readout)} readout matrices, need {n}")
        return self.readout


NOISELESS = NoiseModel()


def symmetric_confusion(eps):
    return np.array([[1 - eps, eps], [eps, 1 - eps]], dtype=float)


@dataclass(frozen=True)
class CountsTable:
    n_qubits: int
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, c in self.counts.items():
            if len(key) != self.n_qubits or set(key) - {"0", "1"}:
                raise InputShapeError(f"bad outcome key {key!r}")
            if c < 0:
                raise InputShapeError("counts must be non-negative")

    @property
    def shots(self):
        return int(sum(self.counts.values()))

    def to_vector(self):
        v = np.zeros(1 << self.n_qubits, dtype=np.int64)
        for key, c in self.counts.items():
            v[int(key, 2)] += c
        return v

    def probabilities(self):
        shots = self.shots
        if shots == 0:
            raise InputShapeError("empty counts table")
        return self.to_vector() / shots

    @classmethod
    def from_vector(cls, vec, n_qubits):
        return cls(n_qubits, {
            format(i, f"0{n_qubits}b"): int(c) for i, c in enumerate(vec) if c
        })


def prepare_ghz(l, capacity=STATEVECTOR_CAPACITY):
    if l < 1:
        raise InputShapeError("GHZ state needs at least one qubit")
    check_capacity(l, capacity)
    amp = np.zeros(1 << l, dtype=complex)
    amp[0] = amp[-1] = 1 / math.sqrt(2)
    return StateVector(l, amp)


def _bfs_tree(qubits, edges, root):
    adj = {q: [] for q in qubits}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    children = {q: [] for q in qubits}
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                children[u].append(v)
                queue.append(v)
    if len(seen) != len(qubits):
        raise TopologyError(f"configuration {tuple(qubits)} is not connected")
    return children


def _broadcast_time(children, node, memo):
    # Optimal time for `node` to reach its subtree when it may fire one CNOT per layer.
    if node not in memo:
        times = sorted((_broadcast_time(children, c, memo) for c in children[node]), reverse=True)
        memo[node] = max((i + 1 + t for i, t in enumerate(times)), default=0)
    return memo[node]


def ghz_circuit(config, root):
    """H on ``root`` followed by CNOT layers along a BFS spanning tree.

    Each qubit takes part in at most one gate per layer.  An entangled qubit
    fires one CNOT per layer to its children, slowest subtree first, which is
    the optimal broadcast order on the tree.
    """
    qubits = tuple(config.qubits)
    if root not in qubits:
        raise TopologyError(f"root {root} is not in configuration {qubits}")
    children = _bfs_tree(qubits, config.induced_edges, root)
    memo = {}
    _broadcast_time(children, root, memo)
    for q in qubits:
        children[q].sort(key=lambda c: (-memo[c], c))

    layers = [(Gate("H", (root,)),)]
    pending = {root: deque(children[root])}
    while any(pending.values()):
        layer = []
        reached = []
        for u in sorted(pending):
            if pending[u]:
                v = pending[u].popleft()
                layer.append(Gate("CX", (u, v)))
                reached.append(v)
        for v in reached:
            pending[v] = deque(children[v])
        layers.append(tuple(layer))
    return Circuit(qubits, tuple(layers))


def _cx_permutation(n, control, target):
    idx = np.arange(1 << n)
    return idx ^ (((idx >> control) & 1) << target)


def run_statevector(circuit, capacity=STATEVECTOR_CAPACITY):
    """Execute ``circuit`` on ``|0...0>``."""
    n = circuit.n_qubits
    check_capacity(n, capacity)
    amp = np.zeros(1 << n, dtype=complex)
    amp[0] = 1.0
    for layer in circuit.layers:
        for g in layer:
            if g.name == "H":
                amp = apply_local(amp, [_H], [circuit.local(g.qubits[0])])
            else:
                perm = _cx_permutation(n, *(circuit.local(q) for q in g.qubits))
                amp = amp[perm]
    return StateVector(n, amp)


def _depolarize_qubit(rho, q):
    out = rho.copy()
    for p in _PAULIS:
        out += apply_local_density(rho, [p], [q])
    return out / 4


def run_density(circuit, depolarizing_2q, capacity=DENSITY_CAPACITY):
    """Density matrix after ``circuit`` with two-qubit depolarizing after each CNOT."""
    n = circuit.n_qubits
    check_capacity(n, capacity)
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    rho[0, 0] = 1.0
    for layer in circuit.layers:
        for g in layer:
            if g.name == "H":
                rho = apply_local_density(rho, [_H], [circuit.local(g.qubits[0])])
                continue
            c, t = (circuit.local(q) for q in g.qubits)
            perm = _cx_permutation(n, c, t)
            rho = rho[perm][:, perm]
            if depolarizing_2q:
                mixed = _depolarize_qubit(_depolarize_qubit(rho, c), t)
                rho = (1 - depolarizing_2q) * rho + depolarizing_2q * mixed
    return rho


def prepare_state(circuit, noise=NOISELESS):
    """Pure state when gate noise is off, else a density matrix."""
    if noise.depolarizing_2q > 0:
        return run_density(circuit, noise.depolarizing_2q)
    return run_statevector(circuit)


def _angles(settings, n):
    if isinstance(settings, str):
        if len(settings) != n or set(settings.upper()) - {"X", "Y"}:
            raise InputShapeError(f"settings {settings!r} must be {n} characters from X/Y")
        return [0.0 if c == "X" else math.pi / 2 for c in settings.upper()]
    angles = np.asarray(settings, dtype=float)
    if angles.shape != (n,):
        raise InputShapeError(f"need {n} measurement angles, got shape {angles.shape}")
    return list(angles)


def _rotation(theta):
    # maps the eigenbasis of cos(theta) X + sin(theta) Y onto |0>, |1>
    return _H @ np.diag([1.0, np.exp(-1j * theta)])


def measurement_distribution(state, settings):
    """Outcome distribution for per-qubit measurements in the X/Y plane.

    ``settings`` is an X/Y string or a sequence of angles ``theta_k`` selecting
    ``cos(theta_k) X + sin(theta_k) Y`` on qubit ``k``.
    """
    if isinstance(state, StateVector):
        n = state.n_qubits
        rots = [_rotation(t) for t in _angles(settings, n)]
        amp = apply_local(state.amplitudes, rots)
        p = np.abs(amp) ** 2
    else:
        n = state.shape[0].bit_length() - 1
        rots = [_rotation(t) for t in _angles(settings, n)]
        p = np.real(np.diag(apply_local_density(state, rots)))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def parity_signs(n):
    idx = np.arange(1 << n)
    parity = np.zeros_like(idx)
    for i in range(n):
        parity ^= (idx >> i) & 1
    return 1 - 2 * parity


def expectation(state, settings):
    """``<prod_k m_k>`` from the exact rotated-basis probabilities."""
    p = measurement_distribution(state, settings)
    n = p.shape[0].bit_length() - 1
    return float(parity_signs(n) @ p)


def apply_readout(p, readout):
    if readout is None:
        return p
    out = np.real(apply_local(p, readout))
    out = np.clip(out, 0.0, None)
    return out / out.sum()


def exact_setting_distribution(circuit, settings, noise=NOISELESS, state=None):
    """Exact outcome distribution after gate noise and readout confusion.

    Pass a precomputed ``state`` (from :func:`prepare_state`) to reuse it across
    settings.
    """
    if state is None:
        state = prepare_state(circuit, noise)
    p = measurement_distribution(state, settings)
    return apply_readout(p, noise.readout_for(circuit.n_qubits))


def sample_distribution(p, shots, seed=None):
    shots = check_shots(shots)
    rng = np.random.default_rng(seed)
    n = p.shape[0].bit_length() - 1
    return CountsTable.from_vector(rng.multinomial(shots, p), n)


def sample(circuit, settings, shots, noise=NOISELESS, seed=None, state=None):
    """Draw ``shots`` outcomes for one setting string."""
    p = exact_setting_distribution(circuit, settings, noise, state=state)
    return sample_distribution(p, shots, seed)


def basis_distribution(n, index, noise=NOISELESS):
    """Readout distribution when computational basis state ``index`` is prepared."""
    p = np.zeros(1 << n)
    p[index] = 1.0
    return apply_readout(p, noise.readout_for(n))


def basis_sampler(n, noise=NOISELESS, seed=None):
    """Callable ``sampler(index, shots) -> CountsTable`` for calibration runs."""
    rng = np.random.default_rng(seed)

    def sampler(index, shots):
        return sample_distribution(basis_distribution(n, index, noise), shots, rng)

    return sampler
