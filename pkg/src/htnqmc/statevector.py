"""Dense statevector simulation for the small circuits used by the ansatze.

States are plain numpy vectors of length ``2**n`` (or arrays with leading
batch axes).  Bit ``q`` of the index is qubit ``q``.  Circuits reference
rotation angles through parameter slots, so the same circuit can be run on
many parameter vectors at once: pass ``params`` with shape ``(batch, P)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .pauli import IMAG_TOL, NonRealError, PauliSum

_FIXED = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_REAL_GATES = {"ry", "x", "h", "z"}


@dataclass(frozen=True)
class Gate:
    """Single-target gate, optionally controlled on ``controls`` (all must be 1).

    ``name`` is one of ``ry``, ``x``, ``h``, ``s``, ``z`` or ``u`` (explicit
    2x2 ``matrix``).  An ``ry`` takes its angle from parameter slot ``param``
    or from the fixed ``angle``.
    """

    name: str
    target: int
    controls: tuple[int, ...] = ()
    param: int | None = None
    angle: float | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)
    dagger: bool = False

    def fixed_matrix(self) -> np.ndarray:
        if self.name == "u":
            m = np.asarray(self.matrix, dtype=complex)
        else:
            m = _FIXED[self.name]
        return m.conj().T if self.dagger else m

    @property
    def is_real(self) -> bool:
        if self.name == "u":
            return bool(np.all(np.asarray(self.matrix).imag == 0))
        return self.name in _REAL_GATES


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    n_params: int = 0

    def __post_init__(self):
        for g in self.gates:
            qubits = (g.target, *g.controls)
            if any(not 0 <= q < self.n_qubits for q in qubits) or len(set(qubits)) != len(qubits):
                raise ValueError(f"gate {g.name} on qubits {qubits} invalid for {self.n_qubits} qubits")
            if g.name == "ry" and g.param is None and g.angle is None:
                raise ValueError("ry gate needs a parameter slot or a fixed angle")
            if g.param is not None and not 0 <= g.param < self.n_params:
                raise ValueError(f"parameter slot {g.param} outside 0..{self.n_params - 1}")

    @property
    def is_real(self) -> bool:
        return all(g.is_real for g in self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        """Run ``self`` then ``other``; parameter slots of ``other`` are shifted."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        shifted = tuple(replace(g, param=None if g.param is None else g.param + self.n_params)
                        for g in other.gates)
        return Circuit(self.n_qubits, self.gates + shifted, self.n_params + other.n_params)

    def adjoint(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(replace(g, dagger=not g.dagger) for g in reversed(self.gates)),
                       self.n_params)

    def embed(self, n_total: int, qubit_map, controls: tuple[int, ...] = ()) -> "Circuit":
        """Place on ``n_total`` qubits via ``qubit_map`` and add extra ``controls``."""
        gates = tuple(replace(g, target=qubit_map[g.target],
                              controls=tuple(qubit_map[c] for c in g.controls) + tuple(controls))
                      for g in self.gates)
        return Circuit(n_total, gates, self.n_params)


def ry(target: int, param: int | None = None, angle: float | None = None) -> Gate:
    return Gate("ry", target, param=param, angle=angle)


def cnot(control: int, target: int) -> Gate:
    return Gate("x", target, controls=(control,))


def real_amplitude_ansatz(n: int, depth: int) -> Circuit:
    """RY layer, then ``depth`` blocks of [CNOT chain q -> q+1, RY layer].

    Has ``(depth + 1) * n`` parameters; slot ``layer * n + q`` drives the RY
    on qubit ``q`` in rotation layer ``layer``.  All-zero angles give the
    identity.
    """
    if n < 1 or depth < 0:
        raise ValueError("need n >= 1 and depth >= 0")
    gates = [ry(q, param=q) for q in range(n)]
    for layer in range(1, depth + 1):
        gates += [cnot(q, q + 1) for q in range(n - 1)]
        gates += [ry(q, param=layer * n + q) for q in range(n)]
    return Circuit(n, tuple(gates), (depth + 1) * n)


@lru_cache(maxsize=512)
def _pair_indices(n: int, target: int, cmask: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n, dtype=np.int64)
    sel = idx[((idx >> target) & 1 == 0) & ((idx & cmask) == cmask)]
    return sel, sel | (1 << target)


def _apply_gate(state: np.ndarray, g: Gate, n: int, params: np.ndarray | None) -> None:
    cmask = 0
    for c in g.controls:
        cmask |= 1 << c
    i0, i1 = _pair_indices(n, g.target, cmask)
    s0 = state[..., i0]
    s1 = state[..., i1]
    if g.name == "ry":
        theta = params[..., g.param] if g.param is not None else np.asarray(g.angle)
        if g.dagger:
            theta = -theta
        c = np.cos(theta / 2)[..., None]
        s = np.sin(theta / 2)[..., None]
        state[..., i0] = c * s0 - s * s1
        state[..., i1] = s * s0 + c * s1
    elif g.name == "x":
        state[..., i0] = s1
        state[..., i1] = s0
    else:
        m = g.fixed_matrix()
        if not np.iscomplexobj(state):
            m = m.real
        state[..., i0] = m[0, 0] * s0 + m[0, 1] * s1
        state[..., i1] = m[1, 0] * s0 + m[1, 1] * s1


def apply_circuit(circuit: Circuit, params, state: np.ndarray) -> np.ndarray:
    """Return ``U(params) |state>``; the input array is not modified.

    ``params`` of shape ``(..., P)`` broadcasts against the leading axes of
    ``state``; the result keeps a real dtype when both state and circuit are
    real.
    """
    state = np.asarray(state)
    if state.shape[-1] != 1 << circuit.n_qubits:
        raise ValueError(f"state length {state.shape[-1]} does not match {circuit.n_qubits} qubits")
    params = np.asarray(params if params is not None else np.zeros(0), dtype=float)
    if params.shape[-1] != circuit.n_params:
        raise ValueError(f"circuit expects {circuit.n_params} parameters, got {params.shape[-1]}")
    real = circuit.is_real and not np.iscomplexobj(state)
    batch = np.broadcast_shapes(state.shape[:-1], params.shape[:-1])
    out = np.array(np.broadcast_to(state, batch + state.shape[-1:]),
                   dtype=float if real else complex)
    for g in circuit.gates:
        _apply_gate(out, g, circuit.n_qubits, params)
    return out


def basis_state(n: int, h: int, dtype=float) -> np.ndarray:
    """Computational basis vector ``|h>`` on ``n`` qubits."""
    if not 0 <= h < 1 << n:
        raise ValueError(f"basis index {h} out of range for {n} qubits")
    v = np.zeros(1 << n, dtype=dtype)
    v[h] = 1
    return v


def expectation(state: np.ndarray, op: PauliSum) -> float:
    """``<state|op|state>`` for a normalized state; must be real."""
    state = np.asarray(state)
    if state.shape[-1] != 1 << op.n_qubits:
        raise ValueError("state and operator sizes differ")
    val = np.sum(state.conj() * (op.to_sparse() @ state.T).T, axis=-1)
    if np.any(np.abs(np.imag(val)) > IMAG_TOL):
        raise NonRealError(f"expectation has imaginary part {np.max(np.abs(np.imag(val))):.3e}")
    val = np.real(val)
    return float(val) if val.ndim == 0 else val


def norm(state: np.ndarray) -> float:
    return float(np.linalg.norm(state))
