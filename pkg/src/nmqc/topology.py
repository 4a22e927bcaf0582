"""Device coupling graphs, connected qubit configurations and GHZ root choice."""

import json
from dataclasses import dataclass
from importlib import resources

from . import sim
from .exceptions import InputShapeError, TopologyError

BUNDLED_GRAPHS = {"falcon27": "falcon27.json"}


@dataclass(frozen=True)
class CouplingGraph:
    n_qubits: int
    edges: frozenset
    readout_error: tuple

    def __post_init__(self):
        edges = set()
        for edge in self.edges:
            a, b = (int(q) for q in edge)
            if a == b:
                raise TopologyError(f"self-loop on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise TopologyError(f"edge ({a}, {b}) references a qubit outside 0..{self.n_qubits - 1}")
            edges.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(edges))
        errors = self.readout_error
        if errors is None:
            errors = (0.0,) * self.n_qubits
        errors = tuple(float(e) for e in errors)
        if len(errors) != self.n_qubits:
            raise TopologyError(f"need {self.n_qubits} readout error rates, got {len(errors)}")
        if any(not 0.0 <= e <= 1.0 for e in errors):
            raise TopologyError("readout error rates must lie in [0, 1]")
        object.__setattr__(self, "readout_error", errors)

    def adjacency(self):
        adj = {q: set() for q in range(self.n_qubits)}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def to_dict(self):
        return {
            "n_qubits": self.n_qubits,
            "edges": [list(e) for e in sorted(self.edges)],
            "readout_error": list(self.readout_error),
        }


@dataclass(frozen=True)
class QubitConfiguration:
    qubits: tuple
    induced_edges: tuple

    def __str__(self):
        return "-".join(map(str, self.qubits))


def graph_from_dict(data):
    try:
        return CouplingGraph(int(data["n_qubits"]), frozenset(map(tuple, data["edges"])),
                             data.get("readout_error"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TopologyError):
            raise
        raise InputShapeError(f"invalid coupling graph: {exc}") from exc


def load_graph(path="falcon27"):
    """Load a graph JSON file, or a bundled graph by name (``"falcon27"``)."""
    path = str(path)
    if path in BUNDLED_GRAPHS:
        text = resources.files("nmqc.data").joinpath(BUNDLED_GRAPHS[path]).read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputShapeError(f"cannot parse graph file {path}: {exc}") from exc
    return graph_from_dict(data)


def configuration(graph, qubits):
    """Build a configuration from an explicit qubit list, checking connectivity."""
    qs = tuple(sorted(set(int(q) for q in qubits)))
    if len(qs) != len(qubits):
        raise TopologyError(f"duplicate qubits in {qubits}")
    for q in qs:
        if not 0 <= q < graph.n_qubits:
            raise TopologyError(f"qubit {q} not in graph")
    inside = set(qs)
    induced = tuple(e for e in sorted(graph.edges) if e[0] in inside and e[1] in inside)
    config = QubitConfiguration(qs, induced)
    if not is_connected(config):
        raise TopologyError(f"qubits {qs} are not connected")
    return config


def is_connected(config):
    qs = config.qubits
    if not qs:
        return False
    adj = {q: [] for q in qs}
    for a, b in config.induced_edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {qs[0]}
    stack = [qs[0]]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(qs)


def enumerate_configs(graph, l):
    """All connected induced subgraphs with ``l`` vertices, sorted by vertex set.

    Extension with an exclusive neighbourhood (ESU): a set is only grown by
    vertices larger than its seed that are not adjacent to earlier members, so
    each subgraph is produced exactly once.
    """
    if not 1 <= l <= graph.n_qubits:
        raise InputShapeError(f"l must lie in 1..{graph.n_qubits}")
    adj = graph.adjacency()
    found = []

    def extend(sub, extension, seed, closed):
        if len(sub) == l:
            found.append(tuple(sorted(sub)))
            return
        extension = list(extension)
        while extension:
            w = extension.pop()
            new_ext = set(extension)
            new_ext.update(u for u in adj[w] if u > seed and u not in closed)
            extend(sub | {w}, new_ext, seed, closed | adj[w])

    for v in range(graph.n_qubits):
        ext = {u for u in adj[v] if u > v}
        extend(frozenset([v]), ext, v, adj[v] | {v})

    return [configuration(graph, qs) for qs in sorted(found)]


def select_root(config, graph):
    """Most-connected qubit of the configuration; ties by readout error, then index."""
    degree = {q: 0 for q in config.qubits}
    for a, b in config.induced_edges:
        degree[a] += 1
        degree[b] += 1
    return min(config.qubits, key=lambda q: (-degree[q], graph.readout_error[q], q))


def schedule_cnots(config, graph, root=None):
    """GHZ circuit for ``config`` rooted at ``root`` (default: :func:`select_root`)."""
    if root is None:
        root = select_root(config, graph)
    return sim.ghz_circuit(config, root)
