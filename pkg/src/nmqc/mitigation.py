"""Readout-error mitigation: local (tensor-factored) QREM and global MEM.

Both mitigators follow the scikit-learn estimator protocol: ``fit`` on
calibration data (measured distributions ``X`` for prepared basis states ``y``),
then ``transform`` noisy distributions into corrected probability vectors.
"""

import json
import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._linalg import apply_local
from ._validation import (
    check_calibration_matrix,
    check_capacity,
    check_probability_vector,
    check_shots,
    n_qubits_of,
)
from .exceptions import InputShapeError, MitigationError

GLOBAL_CALIBRATION_MAX_QUBITS = 12
CONDITION_WARN = 1e6


def project_simplex(v):
    """Euclidean projection onto ``{p >= 0, sum(p) = 1}`` (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InputShapeError("project_simplex expects a non-empty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise InputShapeError("project_simplex input has non-finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    p = np.maximum(v - tau, 0.0)
    return p / p.sum()


def is_physical(p, atol=1e-12):
    return bool(np.all(p >= -atol) and abs(p.sum() - 1.0) <= atol)


def _finish(p, project):
    if project and not is_physical(p):
        return project_simplex(p)
    return p


def _check_invertible(a, label):
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e15:
        raise MitigationError(f"{label} is singular (condition number {cond:.3g})")
    return cond


def qrem_correct(p_noisy, calibrations, project=True):
    """Undo local readout errors by solving each qubit's 2x2 system in turn.

    ``calibrations[i]`` is the confusion matrix of qubit ``i`` (qubit 0 = least
    significant index bit).  The result is projected onto the simplex when the
    raw inverse is not a probability vector.
    """
    p = check_probability_vector(p_noisy)
    n = n_qubits_of(p.size)
    if len(calibrations) != n:
        raise InputShapeError(f"{len(calibrations)} calibration matrices for {n} qubits")
    inverses = []
    for i, a in enumerate(calibrations):
        a = check_calibration_matrix(a)
        _check_invertible(a, f"calibration matrix of qubit {i}")
        inverses.append(np.linalg.inv(a))
    return _finish(np.real(apply_local(p, inverses)), project)


def mem_correct(p_noisy, calibration, project=True):
    """Undo global readout errors: least-squares solve of ``A p = p_noisy``."""
    p = check_probability_vector(p_noisy)
    a = np.asarray(calibration, dtype=float)
    if a.shape != (p.size, p.size):
        raise InputShapeError(f"calibration shape {a.shape} does not match vector length {p.size}")
    cond = _check_invertible(a, "global calibration matrix")
    if cond > CONDITION_WARN:
        warnings.warn(f"global calibration matrix is ill-conditioned ({cond:.3g})", stacklevel=2)
    sol, *_ = np.linalg.lstsq(a, p, rcond=None)
    return _finish(sol, project)


def apply_readout_noise(p, calibrations):
    """Forward model: ``(kron_i A_i) p``."""
    p = check_probability_vector(p)
    return np.real(apply_local(p, [check_calibration_matrix(a) for a in calibrations]))


def tensor_calibration(calibrations):
    """Full ``2**n x 2**n`` matrix of independent local confusions."""
    full = np.ones((1, 1))
    for a in calibrations:
        full = np.kron(a, full)  # qubit 0 is the fastest-varying index
    return full


def _marginal_columns(dist, n):
    """Per-qubit probability of reading 1 from a distribution over 2**n outcomes."""
    idx = np.arange(dist.size)
    return np.array([dist[(idx >> i) & 1 == 1].sum() for i in range(n)])


def local_calibrations_from_data(X, y, n):
    """Estimate per-qubit confusion matrices from distributions ``X[k]`` measured
    after preparing basis state ``y[k]``; every qubit must be seen in both states."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    ones = np.zeros((n, 2))
    seen = np.zeros((n, 2))
    for dist, prepared in zip(X, y):
        dist = dist / dist.sum()
        read1 = _marginal_columns(dist, n)
        for i in range(n):
            bit = (prepared >> i) & 1
            ones[i, bit] += read1[i]
            seen[i, bit] += 1
    if np.any(seen == 0):
        raise MitigationError("each qubit needs calibration data for both |0> and |1>")
    p1 = ones / seen  # p(read 1 | prepared b)
    return [np.array([[1 - p1[i, 0], 1 - p1[i, 1]], [p1[i, 0], p1[i, 1]]]) for i in range(n)]


def build_local_calibrations(sampler, n, shots):
    """Estimate QREM matrices from two runs: all qubits in |0>, then all in |1>."""
    shots = check_shots(shots)
    prepared = [0, (1 << n) - 1]
    X = [sampler(j, shots).probabilities() for j in prepared]
    return local_calibrations_from_data(X, prepared, n)


def build_global_calibration(sampler, n, shots):
    """Column ``j`` is the measured distribution after preparing basis state ``j``."""
    shots = check_shots(shots)
    check_capacity(n, GLOBAL_CALIBRATION_MAX_QUBITS)
    return np.column_stack([sampler(j, shots).probabilities() for j in range(1 << n)])


class LocalReadoutMitigator(TransformerMixin, BaseEstimator):
    """QREM: mitigation assuming independent readout errors per qubit.

    Parameters
    ----------
    calibrations : list of 2x2 arrays, optional
        Known confusion matrices; if given, ``fit`` may be called without data.
    project : bool
        Project corrected vectors onto the probability simplex when needed.
    """

    def __init__(self, calibrations=None, project=True):
        self.calibrations = calibrations
        self.project = project

    def fit(self, X=None, y=None):
        if X is None:
            if self.calibrations is None:
                raise MitigationError("no calibration data and no calibrations given")
            mats = [check_calibration_matrix(a) for a in self.calibrations]
        else:
            X = np.atleast_2d(np.asarray(X, dtype=float))
            if y is None:
                raise InputShapeError("fit needs the prepared basis states y")
            mats = local_calibrations_from_data(X, y, n_qubits_of(X.shape[1]))
        self.calibrations_ = mats
        self.n_qubits_ = len(mats)
        return self

    def transform(self, X):
        check_is_fitted(self, "calibrations_")
        X = np.asarray(X, dtype=float)
        rows = np.atleast_2d(X)
        out = np.array([qrem_correct(r, self.calibrations_, self.project) for r in rows])
        return out[0] if X.ndim == 1 else out

    def inverse_transform(self, X):
        check_is_fitted(self, "calibrations_")
        X = np.asarray(X, dtype=float)
        rows = np.atleast_2d(X)
        out = np.array([apply_readout_noise(r, self.calibrations_) for r in rows])
        return out[0] if X.ndim == 1 else out


class GlobalReadoutMitigator(TransformerMixin, BaseEstimator):
    """MEM: mitigation with one full ``2**n x 2**n`` calibration matrix."""

    def __init__(self, calibration=None, project=True):
        self.calibration = calibration
        self.project = project

    def fit(self, X=None, y=None):
        if X is None:
            if self.calibration is None:
                raise MitigationError("no calibration data and no calibration matrix given")
            a = np.asarray(self.calibration, dtype=float)
        else:
            X = np.atleast_2d(np.asarray(X, dtype=float))
            y = np.arange(X.shape[0]) if y is None else np.asarray(y)
            dim = X.shape[1]
            if sorted(y.tolist()) != list(range(dim)):
                raise MitigationError("global calibration needs every basis state exactly once")
            a = np.zeros((dim, dim))
            for dist, j in zip(X, y):
                a[:, j] = dist / dist.sum()
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputShapeError("global calibration must be square")
        if not np.allclose(a.sum(axis=0), 1.0, atol=1e-9):
            raise InputShapeError("global calibration columns must sum to 1")
        cond = _check_invertible(a, "global calibration matrix")
        if cond > CONDITION_WARN:
            warnings.warn(f"global calibration matrix is ill-conditioned ({cond:.3g})", stacklevel=2)
        self.calibration_ = a
        self.n_qubits_ = n_qubits_of(a.shape[0])
        return self

    def transform(self, X):
        check_is_fitted(self, "calibration_")
        X = np.asarray(X, dtype=float)
        rows = np.atleast_2d(X)
        if rows.shape[1] != self.calibration_.shape[0]:
            raise InputShapeError("distribution length does not match the calibration")
        sol, *_ = np.linalg.lstsq(self.calibration_, rows.T, rcond=None)
        out = np.array([_finish(r, self.project) for r in sol.T])
        return out[0] if X.ndim == 1 else out

    def inverse_transform(self, X):
        check_is_fitted(self, "calibration_")
        return np.asarray(X, dtype=float) @ self.calibration_.T


def calibration_to_dict(mitigator, qubits=None):
    if isinstance(mitigator, LocalReadoutMitigator):
        data = {"method": "qrem", "matrices": [np.asarray(a).tolist() for a in mitigator.calibrations_]}
    else:
        data = {"method": "mem", "matrix": np.asarray(mitigator.calibration_).tolist()}
    if qubits is not None:
        data["qubits"] = list(qubits)
    return data


def calibration_from_dict(data):
    method = data.get("method")
    if method == "qrem":
        return LocalReadoutMitigator([np.asarray(a) for a in data["matrices"]]).fit()
    if method == "mem":
        return GlobalReadoutMitigator(np.asarray(data["matrix"])).fit()
    raise InputShapeError(f"unknown calibration method {method!r}")


def save_calibration(mitigator, path, qubits=None):
    with open(path, "w") as fh:
        json.dump(calibration_to_dict(mitigator, qubits), fh, indent=2)


def load_calibration(path):
    with open(path) as fh:
        data = json.load(fh)
    return calibration_from_dict(data), data.get("qubits")
