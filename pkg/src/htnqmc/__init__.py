"""Hybrid tree tensor network references for FCIQMC.

Modules
-------
pauli        Pauli-string Hamiltonians, sparse matrices, text I/O
models       Heisenberg chain, graphite Hubbard cell, decompositions, G_mr
statevector  dense circuit simulation and the real-amplitude ansatz
htn          two-layer HTN states, contraction, Hadamard-test emulation
vqe          variational optimization (plain and HTN)
fciqmc       walker dynamics and the mixed-energy estimator
oracle       exact diagonalization and diagnostics
estimators   fit/predict wrappers
experiment   config-driven runs and sweeps
"""

__version__ = "0.1.0"

from .estimators import FCIQMC, HTNVQE, VQE
from .fciqmc import (DenseReference, HtnReference, QmcConfig, RunTrace, SingleReference,
                     WalkerPopulation, annihilate, build_deviated_reference, death_clone_step,
                     mixed_energy, run_fciqmc, spawn_step, update_shift)
from .htn import (HtnState, expand_dense, htn_energy, htn_overlap_basis, measurement_count,
                  transition_amplitude)
from .models import (Decomposition, build_graphite_hubbard, build_heisenberg_chain,
                     interaction_strength_gmr, named_decomposition)
from .oracle import (bipartite_entropy, energy_stats, fidelity, ground_state,
                     single_reference_state, wavefunction_distribution)
from .pauli import PauliSum, load_hamiltonian_file, matrix_element
from .statevector import Circuit, apply_circuit, real_amplitude_ansatz
from .vqe import OptimizerConfig, htn_vqe_minimize, vqe_minimize

__all__ = [
    "FCIQMC", "HTNVQE", "VQE",
    "DenseReference", "HtnReference", "QmcConfig", "RunTrace", "SingleReference",
    "WalkerPopulation", "annihilate", "build_deviated_reference", "death_clone_step",
    "mixed_energy", "run_fciqmc", "spawn_step", "update_shift",
    "HtnState", "expand_dense", "htn_energy", "htn_overlap_basis", "measurement_count",
    "transition_amplitude",
    "Decomposition", "build_graphite_hubbard", "build_heisenberg_chain",
    "interaction_strength_gmr", "named_decomposition",
    "bipartite_entropy", "energy_stats", "fidelity", "ground_state", "single_reference_state",
    "wavefunction_distribution",
    "PauliSum", "load_hamiltonian_file", "matrix_element",
    "Circuit", "apply_circuit", "real_amplitude_ansatz",
    "OptimizerConfig", "htn_vqe_minimize", "vqe_minimize",
]
