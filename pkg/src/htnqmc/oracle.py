"""Exact diagonalization and derived diagnostics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .pauli import PauliSum

MAX_ORACLE_QUBITS = 14
DENSE_DIM_LIMIT = 4096
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    energy: float
    state: np.ndarray
    sector: int | None = None
    degeneracy: int = 1


def sector_indices(n_qubits: int, electrons: int) -> np.ndarray:
    """Basis indices with Hamming weight ``electrons``, ascending."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    return idx[np.bitwise_count(idx) == electrons]


def _canonical_sign(psi: np.ndarray) -> np.ndarray:
    mags = np.abs(psi)
    h = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    return psi * (np.conj(psi[h]) / abs(psi[h]))


def ground_state(H: PauliSum, sector: int | None = None, n_eigs: int = 6) -> SpectrumResult:
    """Lowest eigenpair of ``H``, optionally inside a fixed-particle-number sector.

    A degenerate ground space is resolved by projecting the basis vector
    with the largest weight in it (lowest index on ties).  The returned
    state has its dominant amplitude real and positive.
    """
    n = H.n_qubits
    if n > MAX_ORACLE_QUBITS:
        raise ValueError(f"exact oracle limited to {MAX_ORACLE_QUBITS} qubits")
    M = H.to_sparse()
    idx = np.arange(1 << n) if sector is None else sector_indices(n, sector)
    if idx.size == 0:
        raise ValueError(f"sector {sector} is empty for {n} qubits")
    sub = M[idx][:, idx]
    if idx.size <= DENSE_DIM_LIMIT:
        w, v = np.linalg.eigh(sub.toarray())
    else:
        w, v = spla.eigsh(sub, k=min(n_eigs, idx.size - 1), which="SA")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    e0 = w[0]
    ground = v[:, w <= e0 + DEGENERACY_TOL * max(1.0, abs(e0))]
    if ground.shape[1] == 1:
        local = ground[:, 0]
    else:
        weight = np.sum(np.abs(ground) ** 2, axis=1)
        h = int(np.flatnonzero(weight >= weight.max() - 1e-12)[0])
        local = ground @ ground[h].conj()
        local /= np.linalg.norm(local)
    psi = np.zeros(1 << n, dtype=local.dtype)
    psi[idx] = local
    return SpectrumResult(float(e0), _canonical_sign(psi), sector, ground.shape[1])


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Squared overlap ``|<a|b>|**2``."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("state sizes differ")
    return float(abs(np.vdot(a, b)) ** 2)


def bipartite_entropy(psi: np.ndarray, part: Sequence[int]) -> float:
    """Base-2 von Neumann entropy of the reduced state on qubits ``part``."""
    psi = np.asarray(psi)
    n = int(np.log2(psi.size))
    if 1 << n != psi.size:
        raise ValueError("state length is not a power of two")
    part = sorted({int(q) for q in part})
    if not part or len(part) >= n or part[0] < 0 or part[-1] >= n:
        raise ValueError("part must be a proper, non-empty subset of the qubits")
    t = psi.reshape((2,) * n)  # axis a holds qubit n-1-a
    keep = [n - 1 - q for q in part]
    rest = [a for a in range(n) if a not in keep]
    mat = np.transpose(t, keep + rest).reshape(1 << len(part), -1)
    p = np.linalg.svd(mat, compute_uv=False) ** 2
    p = p[p > 1e-14]
    return float(-np.sum(p * np.log2(p)))


def single_reference_state(H: PauliSum, sector: int | None = None) -> int:
    """Basis state carrying the largest ground-state amplitude (lowest index on ties)."""
    psi = ground_state(H, sector).state
    mags = np.abs(psi)
    return int(np.flatnonzero(mags >= mags.max() - 1e-10)[0])


def permute_index(h: int, perm: Sequence[int]) -> int:
    """Index after relabeling: new qubit ``p`` takes the value of old qubit ``perm[p]``."""
    return sum(((h >> q) & 1) << p for p, q in enumerate(perm))


def wavefunction_distribution(psi: np.ndarray, reorder: Sequence[int] | None = None
                              ) -> list[tuple[int, float]]:
    """``(basis index, |amplitude|)`` pairs sorted by index.

    ``reorder`` relabels qubits first so states prepared under different
    decompositions can be compared on the same axis.
    """
    psi = np.asarray(psi)
    n = int(np.log2(psi.size))
    mags = np.abs(psi)
    if reorder is not None:
        perm = [int(q) for q in reorder]
        if sorted(perm) != list(range(n)):
            raise ValueError(f"invalid qubit permutation {reorder}")
        new = np.zeros_like(mags)
        for h in range(psi.size):
            new[permute_index(h, perm)] = mags[h]
        mags = new
    return [(h, float(a)) for h, a in enumerate(mags)]


def write_distribution_csv(dist, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["basis_index", "abs_coefficient"])
        w.writerows(dist)


class EnergyStats(NamedTuple):
    mean: float
    std: float
    abs_error: float
    n_valid: int
    n_invalid: int


def energy_stats(trace, window: tuple[int, int] = (5000, 10000),
                 e_exact: float | None = None) -> EnergyStats:
    """Window mean and population standard deviation of the mixed energy.

    Rows with an invalid mixed energy are skipped and counted.  ``window``
    is inclusive on both ends.
    """
    it = np.asarray(trace.iteration)
    sel = (it >= window[0]) & (it <= window[1])
    if not np.any(sel):
        raise ValueError(f"window {window} lies outside the trace")
    valid = np.asarray(trace.e_mix_valid, dtype=bool)[sel]
    vals = np.asarray(trace.e_mix, dtype=float)[sel][valid]
    if vals.size == 0:
        raise ValueError("no valid mixed-energy rows in the window")
    mean = float(np.mean(vals))
    err = float("nan") if e_exact is None else abs(mean - e_exact)
    return EnergyStats(mean, float(np.std(vals)), err, int(valid.sum()), int((~valid).sum()))
