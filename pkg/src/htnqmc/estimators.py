"""Estimator-style wrappers: construct with settings, ``fit(H)``, read fitted attributes.

The wrappers follow the scikit-learn conventions (constructor stores
arguments verbatim, ``get_params``/``set_params`` via ``BaseEstimator``,
fitted attributes end in ``_``).  The "data" passed to ``fit`` is the
Hamiltonian, not a design matrix, so the estimators do not plug into
sklearn pipelines or model selection.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _validation as v
from .fciqmc import (DenseReference, HtnReference, QmcConfig, ReferenceWavefunction,
                     SingleReference, run_fciqmc)
from .htn import HtnState, expand_dense, htn_energy
from .oracle import energy_stats, ground_state, single_reference_state
from .pauli import PauliSum
from .statevector import apply_circuit, basis_state, expectation, real_amplitude_ansatz
from .vqe import OptimizerConfig, htn_vqe_minimize, vqe_minimize


class VQE(BaseEstimator):
    """Real-amplitude ansatz on all qubits, minimized with a scipy optimizer.

    After ``fit``: ``params_``, ``energy_``, ``state_``, ``result_``.
    """

    def __init__(self, depth=1, method="SLSQP", maxiter=1000, tol=1e-8, random_state=0):
        self.depth = depth
        self.method = method
        self.maxiter = maxiter
        self.tol = tol
        self.random_state = random_state

    def _optimizer(self):
        return OptimizerConfig(method=self.method, maxiter=self.maxiter, tol=self.tol,
                               seed=v.check_seed(self.random_state))

    def fit(self, H, y=None):
        H = v.check_hamiltonian(H)
        v.check_positive(self.depth, "depth", integer=True, allow_zero=True)
        self.circuit_ = real_amplitude_ansatz(H.n_qubits, self.depth)
        self.result_ = vqe_minimize(H, self.circuit_, self._optimizer())
        self.params_ = self.result_.params
        self.energy_ = self.result_.energy
        self.state_ = apply_circuit(self.circuit_, self.params_, basis_state(H.n_qubits, 0))
        self.n_qubits_ = H.n_qubits
        return self

    def transform(self, H=None):
        """The optimized statevector."""
        check_is_fitted(self, "state_")
        return self.state_

    def predict(self, H):
        """``<psi|H|psi>`` for another operator on the same qubits."""
        check_is_fitted(self, "state_")
        return expectation(self.state_, v.check_hamiltonian(H, self.n_qubits_))

    def reference(self) -> ReferenceWavefunction:
        check_is_fitted(self, "state_")
        return DenseReference(self.state_, label="vqe")


class HTNVQE(BaseEstimator):
    """Two-layer HTN ansatz minimized with a scipy optimizer.

    ``decomposition`` is a name (``cluster``, ``even-odd``, ``horizontal``,
    ``vertical``), a Decomposition, or explicit qubit groups.  After ``fit``:
    ``htn_state_``, ``params_``, ``energy_``, ``state_``, ``result_``.
    """

    def __init__(self, decomposition="cluster", depth=4, method="SLSQP", maxiter=1000, tol=1e-8,
                 schedule="joint", random_state=0):
        self.decomposition = decomposition
        self.depth = depth
        self.method = method
        self.maxiter = maxiter
        self.tol = tol
        self.schedule = schedule
        self.random_state = random_state

    def fit(self, H, y=None):
        H = v.check_hamiltonian(H)
        v.check_positive(self.depth, "depth", integer=True, allow_zero=True)
        dec = v.check_decomposition(self.decomposition, H.n_qubits)
        opt = OptimizerConfig(method=self.method, maxiter=self.maxiter, tol=self.tol,
                              seed=v.check_seed(self.random_state), schedule=self.schedule)
        self.decomposition_ = dec
        self.result_ = htn_vqe_minimize(H, HtnState.zeros(dec, self.depth), opt)
        self.htn_state_ = self.result_.htn_state
        self.params_ = self.result_.params
        self.energy_ = self.result_.energy
        self.state_ = expand_dense(self.htn_state_)
        self.n_qubits_ = H.n_qubits
        return self

    def transform(self, H=None):
        check_is_fitted(self, "state_")
        return self.state_

    def predict(self, H):
        """Expectation value from the tensor contraction (no dense state)."""
        check_is_fitted(self, "htn_state_")
        return htn_energy(self.htn_state_, v.check_hamiltonian(H, self.n_qubits_))

    def reference(self) -> ReferenceWavefunction:
        check_is_fitted(self, "htn_state_")
        return HtnReference(self.htn_state_)


class FCIQMC(BaseEstimator):
    """FCIQMC run with a mixed-energy estimator.

    ``reference`` is ``"single"`` (the single reference state), ``"exact"``
    (the exact ground state, mostly for testing), a fitted VQE/HTNVQE, a
    ReferenceWavefunction, or a normalized statevector.  After ``fit``:
    ``trace_``, ``energy_`` (window mean), ``std_``, ``initial_state_``.
    """

    def __init__(self, reference="single", dtau=0.001, max_iter=10000, n_shift=1000,
                 shift_interval=5, damping=0.1, window=(5000, 10000), spawn_mode="exact",
                 random_state=0):
        self.reference = reference
        self.dtau = dtau
        self.max_iter = max_iter
        self.n_shift = n_shift
        self.shift_interval = shift_interval
        self.damping = damping
        self.window = window
        self.spawn_mode = spawn_mode
        self.random_state = random_state

    def _reference(self, H: PauliSum, h0: int) -> ReferenceWavefunction:
        ref = self.reference
        if isinstance(ref, str):
            if ref == "single":
                return SingleReference(H.n_qubits, h0)
            if ref == "exact":
                return DenseReference(ground_state(H).state, label="exact")
            raise ValueError(f"unknown reference {ref!r}")
        if isinstance(ref, ReferenceWavefunction):
            if ref.n_qubits != H.n_qubits:
                raise ValueError("reference and Hamiltonian sizes differ")
            return ref
        if isinstance(ref, (VQE, HTNVQE)):
            return ref.reference()
        return DenseReference(v.check_statevector(ref, H.n_qubits))

    def fit(self, H, y=None):
        H = v.check_hamiltonian(H)
        cfg = QmcConfig(dtau=self.dtau, max_iter=self.max_iter, n_shift=self.n_shift,
                        shift_interval=self.shift_interval, damping=self.damping,
                        window=tuple(self.window), seed=v.check_seed(self.random_state),
                        spawn_mode=self.spawn_mode)
        self.initial_state_ = single_reference_state(H)
        self.reference_ = self._reference(H, self.initial_state_)
        self.trace_ = run_fciqmc(H, self.reference_, cfg, initial_state=self.initial_state_)
        stats = energy_stats(self.trace_, cfg.window)
        self.energy_, self.std_ = stats.mean, stats.std
        self.stats_ = stats
        return self

    def predict(self, H=None):
        """Window-averaged mixed energy."""
        check_is_fitted(self, "energy_")
        return self.energy_

    def score(self, H, y=None):
        """Negative absolute error against exact diagonalization (higher is better)."""
        check_is_fitted(self, "energy_")
        return -abs(self.energy_ - ground_state(v.check_hamiltonian(H)).energy)
