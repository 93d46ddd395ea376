"""Reference implementations built from explicit Kronecker products.

Nothing here calls the package's simulators; the tests compare the
package against these.  Convention: qubit q is bit q of the basis index, so
the matrix of a product operator is ``kron(P_{n-1}, ..., P_1, P_0)``.
"""

from functools import reduce

import numpy as np

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1j], [1j, 0.0]])
Z = np.diag([1.0, -1.0])
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
LETTER = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_qubits(ops):
    """``ops[q]`` acts on qubit ``q``."""
    return reduce(np.kron, list(ops)[::-1])


def pauli_matrix(string):
    return kron_qubits([LETTER[c] for c in string])


def hamiltonian_matrix(terms, n):
    """Dense matrix of ``[(coeff, string), ...]``."""
    M = np.zeros((1 << n, 1 << n), dtype=complex)
    for c, s in terms:
        M += c * pauli_matrix(s)
    return M


def single(n, q, m):
    ops = [I2] * n
    ops[q] = m
    return kron_qubits(ops)


def ry_matrix(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def cnot_matrix(n, control, target):
    a = [I2] * n
    a[control] = P0
    b = [I2] * n
    b[control] = P1
    b[target] = X
    return kron_qubits(a) + kron_qubits(b)


def real_amplitude_unitary(n, depth, params):
    """RY layer then ``depth`` x [CNOT chain, RY layer]; slot ``layer*n + q``."""
    params = np.asarray(params, dtype=float)
    U = np.eye(1 << n)

    def ry_layer(layer):
        return kron_qubits([ry_matrix(params[layer * n + q]) for q in range(n)])

    U = ry_layer(0) @ U
    for layer in range(1, depth + 1):
        for q in range(n - 1):
            U = cnot_matrix(n, q, q + 1) @ U
        U = ry_layer(layer) @ U
    return U


def basis(n, h):
    v = np.zeros(1 << n)
    v[h] = 1.0
    return v


def htn_dense(dec_groups, depth, lower_params, upper_params, masks=None):
    """``sum_i psi_i prod_m phi_m^{i_m}`` assembled index by index.

    ``phi_m^{i} = X^{mask_m} U_Lm |i>|0...>`` with the leg as local qubit 0;
    ``psi = U_U |0...0>``.
    """
    k = len(dec_groups)
    n = len(dec_groups[0])
    nk = n * k
    masks = masks or [0] * k
    psi = real_amplitude_unitary(k, depth, upper_params)[:, 0]
    phis = []
    for m in range(k):
        U = real_amplitude_unitary(n, depth, lower_params[m])
        flip = kron_qubits([X if (masks[m] >> r) & 1 else I2 for r in range(n)])
        phis.append([flip @ U[:, 0], flip @ U[:, 1]])
    g = np.arange(1 << nk)
    locals_ = [sum(((g >> q) & 1) << r for r, q in enumerate(grp)) for grp in dec_groups]
    out = np.zeros(1 << nk)
    for i in range(1 << k):
        term = np.full(1 << nk, psi[i])
        for m in range(k):
            term = term * phis[m][(i >> m) & 1][locals_[m]]
        out += term
    return out


def apply_pauli_sum(terms, n, vec):
    """``sum_j c_j P_j |vec>`` by per-qubit tensor contraction (no 2^n x 2^n matrix)."""
    out = np.zeros(1 << n, dtype=complex)
    for c, s in terms:
        t = np.asarray(vec, dtype=complex).reshape((2,) * n)  # axis a holds qubit n-1-a
        for q, ch in enumerate(s):
            if ch != "I":
                t = np.moveaxis(np.tensordot(LETTER[ch], t, axes=([1], [n - 1 - q])), 0, n - 1 - q)
        out += c * t.reshape(-1)
    return out
