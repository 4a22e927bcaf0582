import numpy as np


def apply_local(vec, matrices, qubits=None):
    """Apply one 2x2 matrix per qubit to a length-2**n vector.

    ``matrices[k]`` acts on qubit ``qubits[k]`` (default: qubit ``k``).  Qubit 0 is
    the least-significant index bit, i.e. the last tensor axis.
    """
    vec = np.asarray(vec)
    n = vec.shape[0].bit_length() - 1
    if qubits is None:
        qubits = range(len(matrices))
    t = vec.reshape((2,) * n) if n else vec
    for q, m in zip(qubits, matrices):
        if m is None:
            continue
        axis = n - 1 - q
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def apply_local_density(rho, matrices, qubits=None):
    """``U rho U^dagger`` for ``U`` a tensor product of single-qubit matrices."""
    rho = np.asarray(rho)
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if qubits is None:
        qubits = range(len(matrices))
    t = rho.reshape((2,) * (2 * n))
    for q, m in zip(qubits, matrices):
        if m is None:
            continue
        ket, bra = n - 1 - q, 2 * n - 1 - q
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ket])), 0, ket)
        t = np.moveaxis(np.tensordot(m.conj(), t, axes=([1], [bra])), 0, bra)
    return t.reshape(dim, dim)


def solve_local(vec, matrices):
    """Solve ``(kron_i A_i) p = vec`` axis by axis without forming the full matrix."""
    return apply_local(vec, [np.linalg.inv(a) for a in matrices])
