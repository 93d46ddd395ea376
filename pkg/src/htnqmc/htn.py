"""Two-layer quantum-quantum tree tensor network (QQTN) with one leg per subsystem.

The network state is

    |psi_HTN> = sum_i psi_i  (x)_m |phi_m^{i_m}>

with ``|psi> = U_U |0...0>`` on ``k`` qubits and
``|phi_m^{i}> = X^{mask_m} U_Lm |i>|0...0>`` on the ``n`` qubits of subsystem
``m``.  Local qubit 0 of a subsystem is its leg qubit.  Both layers use the
real-amplitude ansatz with the same depth.

Observables and overlaps are evaluated by contracting per-subsystem 2x2
transition matrices and the upper state, either exactly or by emulating the
ancilla-based Hadamard-test circuits with a finite number of shots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import Decomposition
from .pauli import IMAG_TOL, NonRealError, PauliSum, pauli_masks, parity_sign
from .statevector import Circuit, Gate, apply_circuit, basis_state, cnot, real_amplitude_ansatz

MAX_DENSE_QUBITS = 24


@dataclass(frozen=True, eq=False)
class HtnState:
    """Parameters of a two-layer QQTN.

    ``lower_params[m]`` holds the ``(depth + 1) * n`` angles of subsystem
    ``m``; ``upper_params`` the ``(depth + 1) * k`` angles of the upper
    circuit.  ``basis_mask`` is a global basis index whose set bits get an X
    after the lower circuits (zero angles then encode ``|basis_mask>``).
    """

    dec: Decomposition
    depth: int
    lower_params: tuple[np.ndarray, ...]
    upper_params: np.ndarray
    basis_mask: int = 0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        lower = tuple(np.array(p, dtype=float) for p in self.lower_params)
        upper = np.array(self.upper_params, dtype=float)
        object.__setattr__(self, "lower_params", lower)
        object.__setattr__(self, "upper_params", upper)
        n, k = self.dec.n, self.dec.k
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if len(lower) != k:
            raise ValueError(f"need {k} lower parameter vectors, got {len(lower)}")
        for p in lower:
            if p.shape != ((self.depth + 1) * n,):
                raise ValueError(f"lower parameters must have length {(self.depth + 1) * n}")
        if upper.shape != ((self.depth + 1) * k,):
            raise ValueError(f"upper parameters must have length {(self.depth + 1) * k}")
        if not 0 <= self.basis_mask < 1 << self.dec.n_qubits:
            raise ValueError("basis_mask out of range")
        for p in (*lower, upper):
            p.flags.writeable = False

    # -- construction -------------------------------------------------------
    @staticmethod
    def n_params_for(dec: Decomposition, depth: int) -> int:
        return (depth + 1) * (dec.n_qubits + dec.k)

    @property
    def n_params(self) -> int:
        return self.n_params_for(self.dec, self.depth)

    @classmethod
    def from_vector(cls, dec: Decomposition, depth: int, vec, basis_mask: int = 0) -> "HtnState":
        """Split a flat vector ``[lower_0, ..., lower_{k-1}, upper]``."""
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (cls.n_params_for(dec, depth),):
            raise ValueError(f"expected {cls.n_params_for(dec, depth)} parameters, got {vec.shape}")
        size = (depth + 1) * dec.n
        lower = tuple(vec[m * size:(m + 1) * size] for m in range(dec.k))
        return cls(dec, depth, lower, vec[dec.k * size:], basis_mask)

    @classmethod
    def zeros(cls, dec: Decomposition, depth: int, basis_mask: int = 0) -> "HtnState":
        return cls.from_vector(dec, depth, np.zeros(cls.n_params_for(dec, depth)), basis_mask)

    @classmethod
    def basis_encoding(cls, dec: Decomposition, h: int) -> "HtnState":
        """Identity upper circuit and X-string lower circuits encoding ``|h>``."""
        return cls.zeros(dec, 0, basis_mask=h)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([*self.lower_params, self.upper_params])

    def local_mask(self, m: int) -> int:
        return sum(1 << r for r, q in enumerate(self.dec.groups[m]) if self.basis_mask >> q & 1)

    # -- states -------------------------------------------------------------
    def lower_states(self, m: int) -> np.ndarray:
        """``(2, 2**n)`` array whose row ``i`` is ``|phi_m^i>``."""
        key = ("lower", m)
        if key not in self._cache:
            n = self.dec.n
            circ = real_amplitude_ansatz(n, self.depth)
            inputs = np.stack([basis_state(n, 0), basis_state(n, 1)])
            phi = apply_circuit(circ, self.lower_params[m], inputs)
            mask = self.local_mask(m)
            if mask:
                phi = phi[:, np.arange(1 << n) ^ mask]
            phi.flags.writeable = False
            self._cache[key] = phi
        return self._cache[key]

    def upper_state(self) -> np.ndarray:
        if "upper" not in self._cache:
            k = self.dec.k
            psi = apply_circuit(real_amplitude_ansatz(k, self.depth), self.upper_params, basis_state(k, 0))
            psi.flags.writeable = False
            self._cache["upper"] = psi
        return self._cache["upper"]


def lower_state(s: HtnState, m: int, i_m: int) -> np.ndarray:
    """``|phi_m^{i_m}>`` on the ``n`` qubits of subsystem ``m`` (local ordering)."""
    if not 0 <= m < s.dec.k or i_m not in (0, 1):
        raise ValueError("need 0 <= m < k and i_m in {0, 1}")
    return s.lower_states(m)[i_m].copy()


def _check_pair(bra: HtnState, ket: HtnState) -> None:
    if bra.dec.groups != ket.dec.groups:
        raise ValueError("bra and ket use different decompositions")


def _pauli_apply_local(string: str, vecs: np.ndarray) -> np.ndarray:
    x, z = pauli_masks(string)
    if x == 0 and z == 0:
        return vecs
    dim = vecs.shape[-1]
    idx = np.arange(dim, dtype=np.int64)
    phase = (1j) ** ((x & z).bit_count())
    out = np.empty(vecs.shape, dtype=complex)
    out[..., idx ^ x] = phase * parity_sign(idx, z) * vecs
    return out


def _exact_transition(phi_bra: np.ndarray, phi_ket: np.ndarray, op: str) -> np.ndarray:
    return phi_bra.conj() @ _pauli_apply_local(op, phi_ket).T


def transition_matrix(bra: HtnState, ket: HtnState, m: int, op: str,
                      shots: int | None = None, rng: np.random.Generator | None = None,
                      real_only: bool = False) -> np.ndarray:
    """2x2 matrix ``N[i', i] = <phi_m^{i'}(bra)| op |phi_m^{i}(ket)>``.

    ``op`` is the Pauli string on the subsystem's qubits in local order.
    With ``shots`` the entries are estimated from emulated Hadamard tests;
    ``real_only`` skips the imaginary-part circuits.
    """
    _check_pair(bra, ket)
    if len(op) != bra.dec.n:
        raise ValueError(f"subsystem operator must act on {bra.dec.n} qubits")
    if shots is None:
        return _exact_transition(bra.lower_states(m), ket.lower_states(m), op)
    rng = np.random.default_rng() if rng is None else rng
    out = np.zeros((2, 2), dtype=complex)
    for ip in (0, 1):
        for i in (0, 1):
            re = _sample_pm(hadamard_test_lower(bra, ket, m, op, ip, i, "x"), shots, rng)
            im = 0.0 if real_only else -_sample_pm(hadamard_test_lower(bra, ket, m, op, ip, i, "y"), shots, rng)
            out[ip, i] = re + 1j * im
    return out


def svd_2x2(N: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor ``N = U^dagger diag(D) V`` with unitary ``U``, ``V`` and ``D >= 0``.

    Works on stacks ``(..., 2, 2)``.  An all-zero matrix gets ``U = V = I``.
    """
    N = np.asarray(N, dtype=complex)
    W, D, Vh = np.linalg.svd(N)
    zero = np.all(D == 0, axis=-1)
    if np.any(zero):
        eye = np.broadcast_to(np.eye(2, dtype=complex), W.shape)
        W = np.where(zero[..., None, None], eye, W)
        Vh = np.where(zero[..., None, None], eye, Vh)
    return np.conj(np.swapaxes(W, -1, -2)), D, Vh


def _apply_per_qubit(vec: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``mats[q]`` to qubit ``q`` of a ``k``-qubit vector."""
    k = len(mats)
    t = np.asarray(vec, dtype=complex).reshape((2,) * k)
    for q, m in enumerate(mats):
        axis = k - 1 - q
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def _diag_product(Ds: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1)
    for D in Ds:
        out = np.kron(D, out)
    return out


def upper_contraction(psi_bra: np.ndarray, psi_ket: np.ndarray, Ns: Sequence[np.ndarray]) -> complex:
    """``<psi_bra| (x)_m N_m |psi_ket>`` through the SVD of each ``N_m``."""
    U, D, V = zip(*(svd_2x2(N) for N in Ns))
    a = _apply_per_qubit(psi_bra, U)
    b = _apply_per_qubit(psi_ket, V)
    return complex(np.sum(a.conj() * _diag_product(D) * b))


def transition_amplitude(bra: HtnState, ket: HtnState, O: PauliSum,
                         shots: int | None = None, rng: np.random.Generator | None = None,
                         real_only: bool = False) -> complex:
    """``<psi_HTN(bra)| O |psi_HTN(ket)>`` term by term.

    For every Pauli term the ``k`` transition matrices are built, factored by
    a 2x2 SVD and contracted with the upper states.  ``shots`` switches both
    layers to Hadamard-test emulation.
    """
    _check_pair(bra, ket)
    dec = bra.dec
    if O.n_qubits != dec.n_qubits:
        raise ValueError(f"operator acts on {O.n_qubits} qubits, network has {dec.n_qubits}")
    if shots is not None and rng is None:
        rng = np.random.default_rng()
    psi1, psi2 = bra.upper_state(), ket.upper_state()
    cache: dict[tuple[int, str], np.ndarray] = {}
    total = 0j
    for c, string in O:
        Ns = []
        for m in range(dec.k):
            key = (m, dec.substring(string, m))
            if key not in cache:
                cache[key] = transition_matrix(bra, ket, m, key[1], shots, rng, real_only)
            Ns.append(cache[key])
        if shots is None:
            total += c * upper_contraction(psi1, psi2, Ns)
        else:
            total += c * _upper_hadamard(bra, ket, Ns, shots, rng, real_only)
    return total


def _as_real(z: complex, what: str) -> float:
    if abs(z.imag) > IMAG_TOL:
        raise NonRealError(f"{what} has imaginary part {z.imag:.3e}")
    return z.real


def htn_energy(s: HtnState, H: PauliSum) -> float:
    """``<psi_HTN|H|psi_HTN>`` via transition amplitudes."""
    return _as_real(transition_amplitude(s, s, H), "HTN energy")


def htn_overlap_basis(s: HtnState, h: int) -> float:
    """``<psi_HTN|h>`` from the contraction against the basis-encoding network."""
    dec = s.dec
    if not 0 <= h < 1 << dec.n_qubits:
        raise ValueError(f"basis index {h} out of range")
    ket = HtnState.basis_encoding(dec, h)
    Ns = [_exact_transition(s.lower_states(m), ket.lower_states(m), "I" * dec.n) for m in range(dec.k)]
    return _as_real(upper_contraction(s.upper_state(), ket.upper_state(), Ns), "HTN overlap")


def htn_overlap_vector(s: HtnState, indices=None) -> np.ndarray:
    """Overlaps ``<psi_HTN|h>`` for ``indices`` (default: every basis state)."""
    if indices is None:
        indices = range(1 << s.dec.n_qubits)
    return np.array([htn_overlap_basis(s, int(h)) for h in indices])


def _local_index_maps(dec: Decomposition) -> list[np.ndarray]:
    g = np.arange(1 << dec.n_qubits, dtype=np.int64)
    maps = []
    for grp in dec.groups:
        j = np.zeros_like(g)
        for r, q in enumerate(grp):
            j |= ((g >> q) & 1) << r
        maps.append(j)
    return maps


def expand_dense(s: HtnState) -> np.ndarray:
    """Full ``2**(nk)`` statevector ``sum_i psi_i (x)_m |phi_m^{i_m}>``."""
    dec = s.dec
    if dec.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"dense expansion limited to {MAX_DENSE_QUBITS} qubits")
    psi = s.upper_state()
    return _expand(psi, [s.lower_states(m) for m in range(dec.k)], _local_index_maps(dec))


def _expand(psi: np.ndarray, phis: Sequence[np.ndarray], maps: Sequence[np.ndarray]) -> np.ndarray:
    # psi: (..., 2**k); phis[m]: (..., 2, 2**n)
    k = len(phis)
    out = 0
    for i in range(1 << k):
        term = psi[..., i, None]
        for m in range(k):
            term = term * phis[m][..., (i >> m) & 1, :][..., maps[m]]
        out = out + term
    return out


class DenseExpander:
    """Batched dense expansion for many parameter vectors of one network layout.

    Used by the variational optimizer; ``__call__`` maps ``(..., P)`` flat
    parameter arrays to ``(..., 2**(nk))`` real states.
    """

    def __init__(self, dec: Decomposition, depth: int, basis_mask: int = 0):
        self.dec, self.depth, self.basis_mask = dec, depth, basis_mask
        self.lower = real_amplitude_ansatz(dec.n, depth)
        self.upper = real_amplitude_ansatz(dec.k, depth)
        self.maps = _local_index_maps(dec)
        ref = HtnState.zeros(dec, depth, basis_mask)
        self.local_masks = [ref.local_mask(m) for m in range(dec.k)]
        n = dec.n
        self.inputs = np.stack([basis_state(n, 0), basis_state(n, 1)])
        self.n_params = HtnState.n_params_for(dec, depth)

    def __call__(self, params: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        dec, size = self.dec, (self.depth + 1) * self.dec.n
        n = dec.n
        phis = []
        for m in range(dec.k):
            p = params[..., m * size:(m + 1) * size]
            phi = apply_circuit(self.lower, p[..., None, :], self.inputs)
            if self.local_masks[m]:
                phi = phi[..., np.arange(1 << n) ^ self.local_masks[m]]
            phis.append(phi)
        psi = apply_circuit(self.upper, params[..., dec.k * size:], basis_state(dec.k, 0))
        return _expand(psi, phis, self.maps)


def htn_circuit(s: HtnState) -> tuple[Circuit, np.ndarray]:
    """Equivalent ``nk``-qubit circuit: ``U_U`` on the leg qubits, then each ``U_Lm``.

    Returns the circuit and its parameter vector (upper angles first).
    """
    dec = s.dec
    nq = dec.n_qubits
    legs = [g[0] for g in dec.groups]
    circ = real_amplitude_ansatz(dec.k, s.depth).embed(nq, legs)
    for m in range(dec.k):
        circ = circ + real_amplitude_ansatz(dec.n, s.depth).embed(nq, dec.groups[m])
    flips = tuple(Gate("x", q) for q in range(nq) if s.basis_mask >> q & 1)
    circ = circ + Circuit(nq, flips, 0)
    return circ, np.concatenate([s.upper_params, *s.lower_params])


# -- Hadamard-test emulation ---------------------------------------------------

def _sample_pm(expval: float, shots: int, rng: np.random.Generator) -> float:
    """Mean of ``shots`` samples of a +-1 observable with mean ``expval``."""
    p = min(max((1.0 + expval) / 2.0, 0.0), 1.0)
    return 2.0 * rng.binomial(shots, p) / shots - 1.0


def _ancilla_prep_lower(bra: HtnState, ket: HtnState, m: int, ip: int, i: int) -> np.ndarray:
    """State ``(|0>|phi^{i}(ket)> + |1>|phi^{ip}(bra)>) / sqrt(2)``, ancilla = qubit n."""
    n = bra.dec.n
    anc = n
    nq = n + 1
    qmap = list(range(n))
    gates = [Gate("h", anc)]
    if ip:
        gates.append(cnot(anc, 0))
    if i:
        gates += [Gate("x", anc), cnot(anc, 0), Gate("x", anc)]
    head = Circuit(nq, tuple(gates))
    c_bra = real_amplitude_ansatz(n, bra.depth).embed(nq, qmap, controls=(anc,))
    c_ket = real_amplitude_ansatz(n, ket.depth).embed(nq, qmap, controls=(anc,))
    mask_bra = tuple(Gate("x", r, controls=(anc,)) for r in range(n) if bra.local_mask(m) >> r & 1)
    mask_ket = tuple(Gate("x", r, controls=(anc,)) for r in range(n) if ket.local_mask(m) >> r & 1)
    flip = Circuit(nq, (Gate("x", anc),))
    circ = (head + c_bra + Circuit(nq, mask_bra) + flip + c_ket + Circuit(nq, mask_ket) + flip)
    params = np.concatenate([bra.lower_params[m], ket.lower_params[m]])
    return apply_circuit(circ, params, basis_state(nq, 0))


def hadamard_test_lower(bra: HtnState, ket: HtnState, m: int, op: str, ip: int, i: int,
                        basis: str) -> float:
    """Exact ``<A (x) op>`` of the lower-tensor Hadamard-test circuit, ``A`` = X or Y on the ancilla.

    ``basis="x"`` yields ``Re N[ip, i]``; ``basis="y"`` yields ``-Im N[ip, i]``.
    """
    state = _ancilla_prep_lower(bra, ket, m, ip, i)
    obs = PauliSum(bra.dec.n + 1, [(1.0, op + basis.upper())])
    return float(np.real(np.vdot(state, obs.apply(state))))


def _upper_ancilla_state(bra: HtnState, ket: HtnState, Us, Vs, basis: str) -> np.ndarray:
    k = bra.dec.k
    anc = k
    nq = k + 1
    qmap = list(range(k))
    c1 = real_amplitude_ansatz(k, bra.depth).embed(nq, qmap, controls=(anc,))
    c2 = real_amplitude_ansatz(k, ket.depth).embed(nq, qmap, controls=(anc,))
    u_gates = tuple(Gate("u", q, controls=(anc,), matrix=Us[q]) for q in range(k))
    v_gates = tuple(Gate("u", q, controls=(anc,), matrix=Vs[q]) for q in range(k))
    flip = Circuit(nq, (Gate("x", anc),))
    readout = (Gate("s", anc, dagger=True), Gate("h", anc)) if basis == "y" else (Gate("h", anc),)
    circ = (Circuit(nq, (Gate("h", anc),)) + c1 + Circuit(nq, u_gates) + flip + c2
            + Circuit(nq, v_gates) + flip + Circuit(nq, readout))
    params = np.concatenate([bra.upper_params, ket.upper_params])
    return apply_circuit(circ, params, basis_state(nq, 0))


def _upper_hadamard(bra: HtnState, ket: HtnState, Ns, shots: int, rng: np.random.Generator,
                    real_only: bool) -> complex:
    """Estimate ``<psi1|(x) N_m|psi2>`` by sampling the upper Hadamard-test circuit."""
    U, D, V = zip(*(svd_2x2(N) for N in Ns))
    k = bra.dec.k
    dvals = _diag_product(D)
    out = []
    for basis in ("x",) if real_only else ("x", "y"):
        probs = np.abs(_upper_ancilla_state(bra, ket, U, V, basis)) ** 2
        counts = rng.multinomial(shots, probs / probs.sum())
        outcomes = np.arange(1 << (k + 1))
        anc_sign = 1 - 2 * ((outcomes >> k) & 1)
        values = anc_sign * dvals[outcomes & ((1 << k) - 1)]
        out.append(float(np.dot(counts, values)) / shots)
    re = out[0]
    im = 0.0 if real_only else -out[1]
    return complex(re, im)


def measurement_count(k: int, legs: int = 1, real_valued: bool = False) -> int:
    """Number of distinct circuits measured for one transition amplitude.

    ``2 * 4**L * k + 2`` in general; real states and operators skip the
    imaginary parts, leaving ``4**L * k + 1``.
    """
    if legs < 1 or k < 1:
        raise ValueError("need k >= 1 and L >= 1")
    full = 2 * 4 ** legs * k + 2
    return full // 2 if real_valued else full
