"""Argument checks shared by the estimators and the experiment runner."""

from __future__ import annotations

import numbers

import numpy as np

from .models import Decomposition, named_decomposition
from .pauli import PauliSum


def check_hamiltonian(H, n_qubits: int | None = None) -> PauliSum:
    if not isinstance(H, PauliSum):
        raise TypeError(f"expected a PauliSum Hamiltonian, got {type(H).__name__}")
    if n_qubits is not None and H.n_qubits != n_qubits:
        raise ValueError(f"Hamiltonian acts on {H.n_qubits} qubits, expected {n_qubits}")
    return H


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, numbers.Integral) or seed < 0:
        raise ValueError(f"random_state must be a non-negative integer, got {seed!r}")
    return int(seed)


def check_positive(value, name: str, integer: bool = False, allow_zero: bool = False):
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(value, bool) or not isinstance(value, kind):
        raise TypeError(f"{name} must be {'an integer' if integer else 'a number'}, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'>= 0' if allow_zero else '> 0'}, got {value!r}")
    return value


def check_decomposition(dec, n_qubits: int) -> Decomposition:
    """Accept a Decomposition, a known name, or explicit qubit groups."""
    if isinstance(dec, str):
        dec = named_decomposition(dec, n_qubits)
    elif not isinstance(dec, Decomposition):
        dec = Decomposition(tuple(tuple(int(q) for q in g) for g in dec), "custom")
    if dec.n_qubits != n_qubits:
        raise ValueError(f"decomposition covers {dec.n_qubits} qubits, Hamiltonian has {n_qubits}")
    return dec


def check_statevector(psi, n_qubits: int | None = None, atol: float = 1e-8) -> np.ndarray:
    psi = np.asarray(psi)
    if psi.ndim != 1:
        raise ValueError("statevector must be one-dimensional")
    n = psi.size.bit_length() - 1
    if psi.size == 0 or 1 << n != psi.size:
        raise ValueError(f"statevector length {psi.size} is not a power of two")
    if n_qubits is not None and n != n_qubits:
        raise ValueError(f"statevector has {n} qubits, expected {n_qubits}")
    if not np.all(np.isfinite(psi)):
        raise ValueError("statevector contains non-finite values")
    if abs(np.linalg.norm(psi) - 1.0) > atol:
        raise ValueError("statevector is not normalized")
    return psi
