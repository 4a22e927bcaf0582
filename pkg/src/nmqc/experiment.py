"""Batch sweeps of NMQC games over device configurations, reports and bound
certificates."""

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from importlib import resources

import numpy as np

from . import boolfn, game as games, mitigation, sim, stats, topology
from .exceptions import InputShapeError, NmqcError, PlanError

AUTO_QREM_MAX_QUBITS = 5
CERTIFY_BRUTE_FORCE_MAX_QUBITS = 8


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce a sweep.

    ``configs`` is ``"all"``, ``"best"`` or a tuple of explicit qubit tuples.
    ``shots=0`` selects exact mode: analytic distributions, no sampling.
    """

    game: str
    graph: str = "falcon27"
    configs: object = "all"
    shots: int = 1000
    runs: int = 1
    noise: str = "none"
    mitigation: str = "auto"
    calibration: str = None
    calibration_shots: int = None
    resamples: int = 1000
    level: float = 0.99
    seed: int = 0
    workers: int = 1

    def validate(self):
        if self.shots < 0 or int(self.shots) != self.shots:
            raise PlanError("shots must be a non-negative integer (0 = exact mode)")
        if self.runs < 1:
            raise PlanError("runs must be >= 1")
        if self.mitigation not in ("auto", "none", "qrem", "mem"):
            raise PlanError(f"unknown mitigation {self.mitigation!r}")
        if self.resamples and self.resamples < 100:
            raise PlanError("resamples must be 0 (off) or >= 100")
        if not 0 < self.level < 1:
            raise PlanError("level must lie in (0, 1)")
        if isinstance(self.configs, str) and self.configs not in ("all", "best"):
            raise PlanError(f"unknown configuration selection {self.configs!r}")
        return self


@dataclass
class ReportRow:
    game: str
    configuration: str
    kind: str  # config | aggregate | best | error
    beta_raw: float
    beta_mitigated: float
    ci_low: float
    ci_high: float
    beta_std: float
    beta_c: float
    beta_q: float
    shots: int
    runs: int
    seed: int
    mitigation: str
    root: int = None
    error: str = ""

    @property
    def violation(self):
        if self.kind == "error" or self.beta_raw is None:
            return False
        if self.ci_low is not None:
            return self.ci_low > self.beta_c
        return self.beta_raw > self.beta_c


COLUMNS = [f.name for f in fields(ReportRow)]
_FIELD_TYPES = {f.name: f.type for f in fields(ReportRow)}


def parse_configs(text):
    """``"all"``, ``"best"`` or explicit configurations ``"0,1,2,4;8,9,11"``."""
    text = text.strip()
    if text in ("all", "best"):
        return text
    try:
        return tuple(tuple(int(q) for q in part.split(",")) for part in text.split(";") if part)
    except ValueError as exc:
        raise PlanError(f"cannot parse configurations {text!r}") from exc


def load_noise(spec, graph):
    """Resolve a noise spec into ``(readout error per physical qubit or None, p_2q)``.

    ``"none"`` is noiseless, ``"graph"`` uses the graph's readout errors,
    ``"bundled"`` adds the packaged two-qubit depolarizing profile, anything else
    is a JSON file ``{"readout_error_override": [...], "depolarizing_2q": p}``.
    """
    if spec in (None, "none"):
        return None, 0.0
    if spec == "graph":
        return graph.readout_error, 0.0
    if spec == "bundled":
        data = json.loads(resources.files("nmqc.data").joinpath("falcon27_noise.json").read_text())
    else:
        with open(spec) as fh:
            data = json.load(fh)
    errors = data.get("readout_error_override")
    if errors is None:
        errors = graph.readout_error
    elif np.isscalar(errors):
        errors = (float(errors),) * graph.n_qubits
    elif len(errors) != graph.n_qubits:
        raise PlanError(f"readout_error_override needs {graph.n_qubits} entries")
    return tuple(float(e) for e in errors), float(data.get("depolarizing_2q", 0.0))


def noise_for(config, readout_errors, depolarizing_2q):
    if readout_errors is None:
        return sim.NoiseModel(None, depolarizing_2q)
    return sim.NoiseModel.symmetric(len(config.qubits),
                                    [readout_errors[q] for q in config.qubits], depolarizing_2q)


def resolve_method(method, l):
    if method == "auto":
        return "qrem" if l <= AUTO_QREM_MAX_QUBITS else "mem"
    return method


def exact_mitigator(method, noise, l):
    mats = noise.readout_for(l) or [np.eye(2)] * l
    if method == "qrem":
        return mitigation.LocalReadoutMitigator(list(mats)).fit()
    return mitigation.GlobalReadoutMitigator(mitigation.tensor_calibration(mats)).fit()


def sampled_mitigator(method, noise, l, shots, seed):
    sampler = sim.basis_sampler(l, noise, seed)
    if method == "qrem":
        mats = mitigation.build_local_calibrations(sampler, l, shots)
        return mitigation.LocalReadoutMitigator(mats).fit()
    cal = mitigation.build_global_calibration(sampler, l, shots)
    return mitigation.GlobalReadoutMitigator(cal).fit()


def _seed(plan_seed, *key):
    return np.random.SeedSequence(plan_seed, spawn_key=key)


@dataclass(frozen=True)
class _Task:
    plan: ExperimentPlan
    game: games.NmqcGame
    graph: topology.CouplingGraph
    config: topology.QubitConfiguration
    index: int
    beta_c: float
    beta_q: float
    readout_errors: tuple
    depolarizing_2q: float
    loaded_mitigator: object = None


def _error_row(task, message):
    plan = task.plan
    return ReportRow(task.game.name, str(task.config), "error", None, None, None, None, None,
                     task.beta_c, task.beta_q, plan.shots, plan.runs, plan.seed,
                     plan.mitigation, None, message)


def _run_config(task):
    try:
        return _run_config_unchecked(task)
    except (NmqcError, MemoryError, np.linalg.LinAlgError) as exc:
        return _error_row(task, f"{type(exc).__name__}: {exc}")


def _run_config_unchecked(task):
    plan, game, config = task.plan, task.game, task.config
    l = game.qubits
    if len(config.qubits) != l:
        raise InputShapeError(f"configuration has {len(config.qubits)} qubits, game needs {l}")
    root = topology.select_root(config, task.graph)
    circuit = sim.ghz_circuit(config, root)
    noise = noise_for(config, task.readout_errors, task.depolarizing_2q)
    state = sim.prepare_state(circuit, noise)
    method = resolve_method(plan.mitigation, l)
    if plan.mitigation == "auto" and task.loaded_mitigator is not None:
        method = "qrem" if isinstance(task.loaded_mitigator, mitigation.LocalReadoutMitigator) else "mem"

    settings = game.settings_table()
    support = [int(x) for x in game.support()]
    distributions = {
        x: sim.exact_setting_distribution(circuit, games.setting_angles(game, settings[x]),
                                          noise, state=state)
        for x in support
    }
    cal_shots = plan.calibration_shots or plan.shots

    raw, mitigated = [], []
    pooled = {x: np.zeros(1 << l, dtype=np.int64) for x in support}
    for run in range(plan.runs):
        if method == "none":
            mit = None
        elif task.loaded_mitigator is not None:
            mit = task.loaded_mitigator
        elif plan.shots == 0:
            mit = exact_mitigator(method, noise, l)
        else:
            mit = sampled_mitigator(method, noise, l, cal_shots, _seed(plan.seed, task.index, run, 1))
        rng = np.random.default_rng(_seed(plan.seed, task.index, run, 0))
        observed = []
        for x in support:
            if plan.shots == 0:
                observed.append(distributions[x])
            else:
                counts = sim.sample_distribution(distributions[x], plan.shots, rng)
                pooled[x] += counts.to_vector()
                observed.append(counts.probabilities())
        observed = np.array(observed)
        raw.append(_beta(game, support, observed))
        if mit is not None:
            mitigated.append(_beta(game, support, mit.transform(observed)))

    ci_low = ci_high = None
    if plan.shots and plan.resamples:
        tables = {x: sim.CountsTable.from_vector(v, l) for x, v in pooled.items()}
        ci_low, ci_high = stats.bootstrap_ci(tables, game, plan.resamples, plan.level,
                                             seed=_seed(plan.seed, task.index, 0, 2))
    return ReportRow(
        game.name, str(config), "config",
        float(np.mean(raw)),
        float(np.mean(mitigated)) if mitigated else None,
        ci_low, ci_high,
        float(np.std(raw, ddof=1)) if len(raw) > 1 else 0.0,
        task.beta_c, task.beta_q, plan.shots, plan.runs, plan.seed, method, root,
    )


def _beta(game, support, distributions):
    signs = sim.parity_signs(game.qubits)
    return stats.bell_value(game, dict(zip(support, distributions @ signs))).beta


def certified_bounds(game):
    ineq = games.bell_coefficients(game)
    return ineq.classical_bound, ineq.quantum_bound


def select_configs(plan, graph, l):
    if isinstance(plan.configs, str):
        return topology.enumerate_configs(graph, l)
    return [topology.configuration(graph, qs) for qs in plan.configs]


def aggregate_rows(rows):
    """Mean/std row and best-configuration row over successful config rows."""
    good = [r for r in rows if r.kind == "config"]
    if not good:
        return []
    raw = np.array([r.beta_raw for r in good])
    mits = [r.beta_mitigated for r in good]
    first = good[0]
    mean_row = replace(
        first, configuration=f"mean({len(good)})", kind="aggregate",
        beta_raw=float(raw.mean()),
        beta_mitigated=float(np.mean(mits)) if None not in mits else None,
        ci_low=None, ci_high=None,
        beta_std=float(raw.std(ddof=1)) if len(good) > 1 else 0.0, root=None,
    )
    best = max(good, key=lambda r: r.beta_raw)
    return [mean_row, replace(best, kind="best")]


def run(plan):
    """Execute a sweep; returns config rows (canonical order) plus summary rows."""
    plan.validate()
    game = games.load_game(plan.game)
    graph = topology.load_graph(plan.graph)
    readout_errors, depol = load_noise(plan.noise, graph)
    beta_c, beta_q = certified_bounds(game)
    configs = select_configs(plan, graph, game.qubits)

    loaded = None
    if plan.calibration:
        loaded, _ = mitigation.load_calibration(plan.calibration)
    tasks = [
        _Task(plan, game, graph, c, i, beta_c, beta_q, readout_errors, depol, loaded)
        for i, c in enumerate(configs)
    ]
    if plan.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            rows = list(pool.map(_run_config, tasks, chunksize=max(1, len(tasks) // (4 * plan.workers))))
    else:
        rows = [_run_config(t) for t in tasks]

    if plan.configs == "best":
        return [r for r in aggregate_rows(rows) if r.kind == "best"] + \
            [r for r in rows if r.kind == "error"]
    if plan.configs == "all":
        rows = rows + aggregate_rows(rows)
    return rows


def summarize(rows):
    out = {}
    for r in rows:
        entry = out.setdefault(r.game, {"configs": 0, "errors": 0, "violations": 0,
                                        "beta_c": r.beta_c, "beta_q": r.beta_q})
        if r.kind == "error":
            entry["errors"] += 1
        elif r.kind == "config":
            entry["configs"] += 1
            entry["violations"] += int(r.violation)
    for name, entry in out.items():
        cfg = [r for r in rows if r.game == name and r.kind == "config"]
        if cfg:
            entry["mean_beta_raw"] = float(np.mean([r.beta_raw for r in cfg]))
            mits = [r.beta_mitigated for r in cfg]
            entry["mean_beta_mitigated"] = float(np.mean(mits)) if None not in mits else None
            entry["all_violate"] = entry["violations"] == entry["configs"]
            entry["mean_violates"] = entry["mean_beta_raw"] > entry["beta_c"]
    return out


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(name, text):
    if text == "":
        return "" if name == "error" else None
    kind = _FIELD_TYPES[name]
    if kind is float:
        return float(text)
    if kind is int:
        return int(text)
    return text


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def rows_from_csv(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [ReportRow(**{k: _parse_cell(k, v) for k, v in rec.items()}) for rec in reader]


def rows_to_json(rows):
    return json.dumps({"columns": COLUMNS, "rows": [asdict(r) for r in rows],
                       "summary": summarize(rows)}, indent=2) + "\n"


def rows_from_json(text):
    data = json.loads(text)
    return [ReportRow(**rec) for rec in data["rows"]]


def report(rows, path=None, fmt="json"):
    """Serialize rows (CSV or JSON) with a summary; write to ``path`` if given."""
    if not rows:
        raise InputShapeError("cannot report an empty set of rows")
    if fmt == "json":
        text = rows_to_json(rows)
    elif fmt == "csv":
        summary = json.dumps(summarize(rows), sort_keys=True)
        text = rows_to_csv(rows) + f"# summary {summary}\n"
    else:
        raise InputShapeError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_report(path):
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return rows_from_json(text)
    return rows_from_csv(text)


def _fraction(value):
    frac = Fraction(value).limit_denominator(1 << 12)
    return str(frac) if abs(float(frac) - value) < 1e-12 else f"{value:.12g}"


def certify(spec):
    """Classical/quantum bounds, determinism and coefficients for a game."""
    game = games.load_game(spec) if isinstance(spec, str) else spec
    ineq = games.bell_coefficients(game)
    result = {
        "game": game.name,
        "inputs": game.n_inputs,
        "qubits": game.qubits,
        "beta_c": ineq.classical_bound,
        "beta_q": ineq.quantum_bound,
        "deterministic": games.check_deterministic(game),
        "terms": [{"setting": s, "coefficient": c} for s, c in ineq.terms],
    }
    if game.qubits <= CERTIFY_BRUTE_FORCE_MAX_QUBITS:
        result["beta_c_bruteforce"] = games.classical_bound_bruteforce(game)
    uniform = np.allclose(game.distribution, game.distribution[0])
    if uniform and game.matrix.shape[0] >= game.n_inputs:
        result["beta_c_nonlinearity"] = games.classical_bound_from_nonlinearity(game.target)
    if game.name.startswith("H") and game.name[1:].isdigit():
        k = int(game.name[1:])
        if game.target == boolfn.make_hk(k):
            result["beta_c_formula"] = games.classical_bound_formula(k)
    return result


def format_certificate(cert):
    lines = [f"game {cert['game']}: {cert['inputs']} input bits, {cert['qubits']} qubits"]
    for key in ("beta_c", "beta_c_bruteforce", "beta_c_formula", "beta_c_nonlinearity", "beta_q"):
        if key in cert:
            lines.append(f"  {key:<20} {_fraction(cert[key])}")
    lines.append(f"  {'deterministic':<20} {str(cert['deterministic']).lower()}")
    lines.append("  coefficients:")
    for term in cert["terms"]:
        lines.append(f"    <{term['setting']}>  {_fraction(term['coefficient']):>8}")
    return "\n".join(lines)
