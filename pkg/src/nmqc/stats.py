"""Expectation values, Bell values and bootstrap confidence intervals from counts."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputShapeError
from .sim import CountsTable, parity_signs


@dataclass(frozen=True)
class ExpectationEstimate:
    value: float
    shots: int
    setting: str
    input_x: int

    def __post_init__(self):
        if abs(self.value) > 1 + 1e-12:
            raise InputShapeError(f"expectation {self.value} outside [-1, 1]")


@dataclass(frozen=True)
class BellEstimate:
    beta: float
    success_prob: float
    per_input: tuple = ()
    ci: tuple = None  # (low, high, level)


def expectation_from_counts(counts):
    """Parity expectation ``sum (-1)**parity(m) count(m) / shots``."""
    shots = counts.shots
    if shots < 1:
        raise InputShapeError("cannot estimate an expectation from empty counts")
    return float(parity_signs(counts.n_qubits) @ counts.to_vector()) / shots


def expectation_from_distribution(p):
    p = np.asarray(p, dtype=float)
    return float(parity_signs(p.size.bit_length() - 1) @ p)


def _value(est):
    return est.value if isinstance(est, ExpectationEstimate) else float(est)


def bell_value(game, estimates):
    """``beta = sum_x (-1)**(f(x)+c) xi(x) E(x)`` and ``p_s = (beta + 1) / 2``.

    ``estimates`` maps input index ``x`` to a parity expectation (float or
    :class:`ExpectationEstimate`); every ``x`` with ``xi(x) > 0`` is required.
    """
    weights = game.signed_weights()
    beta = 0.0
    per_input = []
    for x in game.support():
        x = int(x)
        if x not in estimates:
            raise InputShapeError(f"no expectation estimate for input {x}")
        beta += weights[x] * _value(estimates[x])
        if isinstance(estimates[x], ExpectationEstimate):
            per_input.append(estimates[x])
    beta = float(beta)
    return BellEstimate(beta, (beta + 1) / 2, tuple(per_input))


def bell_from_counts(game, counts):
    return bell_value(game, {x: expectation_from_counts(c) for x, c in counts.items()})


def bootstrap_betas(counts, game, resamples=1000, seed=0):
    """Bell values of ``resamples`` multinomial redraws of every input's counts."""
    if resamples < 1:
        raise InputShapeError("resamples must be >= 1")
    rng = np.random.default_rng(seed)
    weights = game.signed_weights()
    betas = np.zeros(resamples)
    for x in game.support():
        x = int(x)
        if x not in counts:
            raise InputShapeError(f"no counts for input {x}")
        table = counts[x]
        shots = table.shots
        if shots < 1:
            raise InputShapeError(f"degenerate counts for input {x}: zero shots")
        vec = table.to_vector()
        draws = rng.multinomial(shots, vec / shots, size=resamples)
        betas += weights[x] * (draws @ parity_signs(table.n_qubits)) / shots
    return betas


def bootstrap_ci(counts, game, resamples=1000, level=0.99, seed=0):
    """Percentile bootstrap interval for beta, resampling each input's shots."""
    if resamples < 100:
        raise InputShapeError("use at least 100 bootstrap resamples")
    if not 0 < level < 1:
        raise InputShapeError("level must lie in (0, 1)")
    betas = bootstrap_betas(counts, game, resamples, seed)
    alpha = (1 - level) / 2
    low, high = np.quantile(betas, [alpha, 1 - alpha])
    return float(low), float(high)


def counts_per_input(game, tables):
    """Check a mapping ``x -> CountsTable`` covers the game's support."""
    for x in game.support():
        if int(x) not in tables or not isinstance(tables[int(x)], CountsTable):
            raise InputShapeError(f"missing counts for input {int(x)}")
    return tables
