"""Variational minimization of <H> for plain circuits and for the HTN ansatz."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .htn import DenseExpander, HtnState
from .models import number_operator
from .pauli import PauliSum
from .statevector import Circuit, apply_circuit, basis_state

logger = logging.getLogger(__name__)

METHODS = ("SLSQP", "BFGS", "L-BFGS-B", "Nelder-Mead", "Powell")


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for one variational run.

    ``tol`` is the energy-change tolerance in Hartree.  ``init_low`` and
    ``init_high`` bound the uniform initial angles.  ``schedule`` is
    ``"joint"`` (one parameter vector) or ``"alternating"`` (tensor by tensor,
    HTN only).
    """

    method: str = "SLSQP"
    maxiter: int = 1000
    tol: float = 1e-8
    seed: int = 0
    init_low: float = 0.0
    init_high: float = 1.0
    schedule: str = "joint"
    sweeps: int = 5

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.maxiter < 1:
            raise ValueError("maxiter must be >= 1")
        if self.init_low > self.init_high:
            raise ValueError("init_low must not exceed init_high")
        if self.schedule not in ("joint", "alternating"):
            raise ValueError("schedule must be 'joint' or 'alternating'")


@dataclass(eq=False)
class VqeResult:
    params: np.ndarray
    energy: float
    trace: list[float] = field(default_factory=list)
    n_evals: int = 0
    success: bool = True
    message: str = ""
    schedule: str = "joint"
    htn_state: HtnState | None = None

    @property
    def best_trace(self) -> np.ndarray:
        """Running minimum of the per-iteration energies."""
        return np.minimum.accumulate(np.asarray(self.trace)) if self.trace else np.zeros(0)


def init_params(count: int, seed: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Uniform angles in ``[low, high)`` drawn from a generator seeded with ``seed``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    return np.random.default_rng(seed).uniform(low, high, count)


class _Objective:
    """Energy and parameter-shift gradient of ``psi(theta)^T H psi(theta)``."""

    def __init__(self, H: PauliSum, states: Callable[[np.ndarray], np.ndarray], n_params: int,
                 shift_exact: bool = True):
        self.M = H.to_sparse()
        self.states = states
        self.n_params = n_params
        self.shift_exact = shift_exact
        self.n_evals = 0
        self.best = (np.inf, None)

    def _energies(self, batch: np.ndarray) -> np.ndarray:
        psi = self.states(batch)
        hpsi = (self.M @ psi.T).T
        e = np.real(np.sum(psi.conj() * hpsi, axis=-1))
        self.n_evals += batch.shape[0]
        return e

    def energy(self, x: np.ndarray) -> float:
        e = float(self._energies(x[None, :])[0])
        if e < self.best[0]:
            self.best = (e, np.array(x))
        return e

    def gradient(self, x: np.ndarray) -> np.ndarray:
        P = self.n_params
        if self.shift_exact:
            shifts = np.eye(P) * (np.pi / 2)
            e = self._energies(np.concatenate([x + shifts, x - shifts]))
            return 0.5 * (e[:P] - e[P:])
        h = 1e-6
        shifts = np.eye(P) * h
        e = self._energies(np.concatenate([x + shifts, x - shifts]))
        return (e[:P] - e[P:]) / (2 * h)


def _run_scipy(obj: _Objective, x0: np.ndarray, opt: OptimizerConfig, free: np.ndarray | None = None):
    """Minimize over the coordinates in ``free`` (all when None)."""
    trace: list[float] = []
    full = np.array(x0, dtype=float)
    idx = np.arange(full.size) if free is None else free

    def embed(y):
        z = full.copy()
        z[idx] = y
        return z

    fun = lambda y: obj.energy(embed(y))  # noqa: E731
    jac = lambda y: obj.gradient(embed(y))[idx]  # noqa: E731
    cb = lambda y, *_: trace.append(obj.energy(embed(y)))  # noqa: E731
    kwargs = {}
    if opt.method in ("SLSQP", "BFGS", "L-BFGS-B"):
        kwargs["jac"] = jac
    options = {"maxiter": opt.maxiter}
    if opt.method == "SLSQP":
        options["ftol"] = opt.tol
    res = minimize(fun, full[idx], method=opt.method, tol=opt.tol, callback=cb, options=options, **kwargs)
    return embed(res.x), trace, bool(res.success), str(res.message)


def _finish(obj: _Objective, x: np.ndarray, trace, success, message, schedule) -> VqeResult:
    e = obj.energy(x)
    best_e, best_x = obj.best
    if best_x is not None and best_e < e:
        x, e = best_x, best_e
    return VqeResult(np.array(x), float(e), list(trace), obj.n_evals, success, message, schedule)


def _shift_rule_ok(circuit: Circuit) -> bool:
    uses = Counter(g.param for g in circuit.gates if g.param is not None)
    gates_ok = all(g.name == "ry" for g in circuit.gates if g.param is not None)
    return gates_ok and all(v == 1 for v in uses.values())


def vqe_minimize(H: PauliSum, circuit: Circuit, opt: OptimizerConfig = OptimizerConfig(),
                 x0: np.ndarray | None = None) -> VqeResult:
    """Minimize ``<0|U^dagger H U|0>`` over the circuit's parameters."""
    if circuit.n_qubits != H.n_qubits:
        raise ValueError("circuit and Hamiltonian sizes differ")
    zero = basis_state(circuit.n_qubits, 0)
    obj = _Objective(H, lambda b: apply_circuit(circuit, b, zero), circuit.n_params,
                     shift_exact=_shift_rule_ok(circuit))
    if x0 is None:
        x0 = init_params(circuit.n_params, opt.seed, opt.init_low, opt.init_high)
    try:
        x, trace, ok, msg = _run_scipy(obj, x0, opt)
    except (ValueError, ArithmeticError) as exc:  # surfaced as a diagnostic
        logger.warning("optimizer failed: %s", exc)
        x, trace, ok, msg = obj.best[1] if obj.best[1] is not None else x0, [], False, str(exc)
    return _finish(obj, x, trace, ok, msg, "joint")


def htn_vqe_minimize(H: PauliSum, s0: HtnState, opt: OptimizerConfig = OptimizerConfig(),
                     randomize: bool = True) -> VqeResult:
    """Optimize all lower and upper angles of an HTN state.

    With ``randomize`` the starting angles are drawn from ``opt`` (the
    decomposition, depth and basis mask of ``s0`` are kept); otherwise
    ``s0``'s angles are the starting point.
    """
    dec = s0.dec
    if dec.n_qubits != H.n_qubits:
        raise ValueError("decomposition does not match the Hamiltonian size")
    expander = DenseExpander(dec, s0.depth, s0.basis_mask)
    obj = _Objective(H, expander, expander.n_params)
    x0 = (init_params(expander.n_params, opt.seed, opt.init_low, opt.init_high) if randomize
          else s0.to_vector())
    try:
        if opt.schedule == "joint":
            x, trace, ok, msg = _run_scipy(obj, x0, opt)
        else:
            size = (s0.depth + 1) * dec.n
            blocks = [np.arange(m * size, (m + 1) * size) for m in range(dec.k)]
            blocks.append(np.arange(dec.k * size, expander.n_params))
            x, trace, ok, msg = np.array(x0), [], True, ""
            for sweep in range(opt.sweeps):
                before = obj.energy(x)
                for free in blocks:
                    x, t, ok_b, msg = _run_scipy(obj, x, opt, free)
                    trace += t
                    ok = ok and ok_b
                if before - obj.energy(x) < opt.tol:
                    break
    except (ValueError, ArithmeticError) as exc:
        logger.warning("optimizer failed: %s", exc)
        x, trace, ok, msg = obj.best[1] if obj.best[1] is not None else x0, [], False, str(exc)
    res = _finish(obj, x, trace, ok, msg, opt.schedule)
    res.htn_state = HtnState.from_vector(dec, s0.depth, res.params, s0.basis_mask)
    return res


def number_penalty(H: PauliSum, n_target: int, lam: float = 10.0) -> PauliSum:
    """``H + lam * (N - n_target)**2`` with ``N = sum_q (I - Z_q) / 2``."""
    if lam <= 0:
        raise ValueError("penalty strength must be positive")
    shifted = number_operator(H.n_qubits) - PauliSum.identity(H.n_qubits, float(n_target))
    return H + lam * (shifted * shifted)


def sector_weight(psi: np.ndarray, electrons: int) -> float:
    """Probability weight of ``psi`` on basis states with ``electrons`` set bits."""
    psi = np.asarray(psi)
    idx = np.arange(psi.size, dtype=np.int64)
    return float(np.sum(np.abs(psi[np.bitwise_count(idx) == electrons]) ** 2))
