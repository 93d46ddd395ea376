"""Full configuration interaction QMC with integer walkers and a mixed-energy estimator.

One iteration applies, to the walkers present at its start,

* spawning: every walker on ``h`` attempts a child on each connected ``h'``;
  ``p = |H[h', h]| * dtau`` children are produced as ``floor(p)`` for sure plus
  one more with probability ``p - floor(p)``; the child sign is
  ``sign(parent) * sign(-H[h', h])``;
* death/cloning: with ``q = |H[h, h] - S| * dtau`` each walker is removed
  (``H[h, h] > S``) or copied (``H[h, h] < S``) ``floor(q)`` times for sure and
  once more with probability ``q - floor(q)``;
* annihilation: all contributions are summed per basis state.

Per-walker trials on the same basis state are independent, so their totals
are drawn as ``|w| * floor(p) + Binomial(|w|, p - floor(p))``, which has
exactly the per-walker distribution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .htn import HtnState, htn_overlap_basis
from .pauli import PauliSum


class FciqmcError(RuntimeError):
    """Run aborted; ``trace`` holds the records produced so far."""

    def __init__(self, message: str, trace: "RunTrace | None" = None):
        super().__init__(message)
        self.trace = trace


class PopulationExtinct(FciqmcError):
    pass


# -- walkers -----------------------------------------------------------------

class WalkerPopulation:
    """Signed integer walker counts keyed by basis index (zeros dropped)."""

    __slots__ = ("indices", "counts")

    def __init__(self, walkers: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        items = walkers.items() if isinstance(walkers, Mapping) else walkers
        acc: dict[int, int] = {}
        for h, w in items:
            acc[int(h)] = acc.get(int(h), 0) + int(w)
        keys = sorted(h for h, w in acc.items() if w != 0)
        self.indices = np.array(keys, dtype=np.int64)
        self.counts = np.array([acc[h] for h in keys], dtype=np.int64)

    @classmethod
    def from_arrays(cls, indices: np.ndarray, counts: np.ndarray) -> "WalkerPopulation":
        """Merge possibly repeated ``indices`` by summing ``counts``."""
        pop = cls()
        if len(indices):
            uniq, inv = np.unique(np.asarray(indices, dtype=np.int64), return_inverse=True)
            summed = np.zeros(uniq.size, dtype=np.int64)
            np.add.at(summed, inv, np.asarray(counts, dtype=np.int64))
            keep = summed != 0
            pop.indices, pop.counts = uniq[keep], summed[keep]
        return pop

    @classmethod
    def from_dense(cls, w: np.ndarray) -> "WalkerPopulation":
        pop = cls()
        nz = np.flatnonzero(w)
        pop.indices, pop.counts = nz.astype(np.int64), np.asarray(w)[nz].astype(np.int64)
        return pop

    def to_dense(self, dim: int) -> np.ndarray:
        w = np.zeros(dim, dtype=np.int64)
        w[self.indices] = self.counts
        return w

    @property
    def total(self) -> int:
        """Total number of walkers ``sum |w_h|``."""
        return int(np.abs(self.counts).sum())

    def to_dict(self) -> dict[int, int]:
        return dict(zip(self.indices.tolist(), self.counts.tolist()))

    def __len__(self) -> int:
        return self.indices.size

    def __getitem__(self, h: int) -> int:
        pos = np.searchsorted(self.indices, h)
        if pos < self.indices.size and self.indices[pos] == h:
            return int(self.counts[pos])
        return 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, WalkerPopulation):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(self.counts, other.counts)

    def __repr__(self) -> str:
        return f"WalkerPopulation({self.to_dict()})"


@dataclass(frozen=True)
class SpawnBuffer:
    """Unmerged signed contributions ``counts[j]`` destined for ``targets[j]``."""

    targets: np.ndarray
    counts: np.ndarray

    @classmethod
    def empty(cls) -> "SpawnBuffer":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    def __add__(self, other: "SpawnBuffer") -> "SpawnBuffer":
        return SpawnBuffer(np.concatenate([self.targets, other.targets]),
                           np.concatenate([self.counts, other.counts]))

    def total(self) -> int:
        return int(np.abs(self.counts).sum())


class HamiltonianTable:
    """Column-wise off-diagonal entries and the diagonal of ``H`` for fast stepping."""

    def __init__(self, H: PauliSum):
        M = H.to_sparse()
        self.dim = M.shape[0]
        self.diag = M.diagonal().copy()
        off = (M - sp.diags(self.diag)).tocsc()
        off.eliminate_zeros()
        off.sort_indices()
        self.indptr = off.indptr.astype(np.int64)
        self.rows = off.indices.astype(np.int64)
        self.vals = off.data.astype(float)
        self.matrix = M.tocsr()

    def connections(self, h: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.indptr[h], self.indptr[h + 1]
        return self.rows[a:b], self.vals[a:b]

    def gather(self, parents: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened ``(parent position, child, H[child, parent])`` for all parents."""
        starts = self.indptr[parents]
        lengths = self.indptr[parents + 1] - starts
        owner = np.repeat(np.arange(parents.size), lengths)
        offsets = np.arange(owner.size) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        pos = np.repeat(starts, lengths) + offsets
        return owner, self.rows[pos], self.vals[pos]


def _as_table(H) -> HamiltonianTable:
    return H if isinstance(H, HamiltonianTable) else HamiltonianTable(H)


def _stochastic_round(n: np.ndarray, p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Total events of ``n`` independent walkers each firing ``floor(p)`` + Bernoulli(frac)."""
    whole = np.floor(p)
    return n * whole.astype(np.int64) + rng.binomial(n, p - whole)


def spawn_step(pop: WalkerPopulation, H, dtau: float, rng: np.random.Generator,
               mode: str = "exact") -> SpawnBuffer:
    """Children spawned by every walker of ``pop`` along off-diagonal entries of ``H``.

    ``mode="exact"`` attempts every connection of every walker.  In
    ``mode="uniform"`` each walker picks one connection uniformly and the
    spawn probability is scaled by the number of connections.
    """
    if dtau <= 0:
        raise ValueError("dtau must be positive")
    table = _as_table(H)
    if len(pop) == 0:
        return SpawnBuffer.empty()
    owner, child, hval = table.gather(pop.indices)
    if child.size == 0:
        return SpawnBuffer.empty()
    w = pop.counts[owner]
    if mode == "exact":
        attempts = np.abs(w)
        p = np.abs(hval) * dtau
    elif mode == "uniform":
        n_conn = np.diff(table.indptr)[pop.indices]
        attempts = np.zeros(child.size, dtype=np.int64)
        start = 0
        for j, n in enumerate(n_conn):
            if n:
                attempts[start:start + n] = rng.multinomial(abs(int(pop.counts[j])), np.full(n, 1.0 / n))
            start += n
        p = np.abs(hval) * dtau * n_conn[owner]
    else:
        raise ValueError(f"unknown spawning mode {mode!r}")
    n_children = _stochastic_round(attempts, p, rng)
    keep = n_children > 0
    signs = np.sign(w[keep]) * np.sign(-hval[keep]).astype(np.int64)
    return SpawnBuffer(child[keep], signs * n_children[keep])


def death_clone_step(pop: WalkerPopulation, H, shift: float, dtau: float,
                     rng: np.random.Generator) -> SpawnBuffer:
    """Signed population changes from the diagonal term ``-(H[h, h] - S) * dtau``."""
    table = _as_table(H)
    if len(pop) == 0:
        return SpawnBuffer.empty()
    d = (table.diag[pop.indices] - shift) * dtau
    events = _stochastic_round(np.abs(pop.counts), np.abs(d), rng)
    delta = -np.sign(d).astype(np.int64) * np.sign(pop.counts) * events
    keep = delta != 0
    return SpawnBuffer(pop.indices[keep], delta[keep])


def annihilate(main: WalkerPopulation, *buffers: SpawnBuffer) -> WalkerPopulation:
    """Merge buffers into ``main``; opposite-sign walkers on one state cancel."""
    idx = np.concatenate([main.indices, *(b.targets for b in buffers)])
    cnt = np.concatenate([main.counts, *(b.counts for b in buffers)])
    return WalkerPopulation.from_arrays(idx, cnt)


def update_shift(s_prev: float, n_now: int, n_prev: int, interval: int, dtau: float,
                 damping: float) -> float:
    """Variable-shift update ``S - damping / (A dtau) * ln(N_now / N_prev)``."""
    if n_now <= 0 or n_prev <= 0:
        raise PopulationExtinct("walker population vanished; cannot update the shift")
    return s_prev - damping / (interval * dtau) * math.log(n_now / n_prev)


# -- reference wave functions ------------------------------------------------

class ReferenceWavefunction:
    """Provides ``<xi|h>`` for basis states ``h``."""

    n_qubits: int

    def overlap(self, h: int) -> float:
        return float(self.overlaps(np.array([h]))[0])

    def overlaps(self, indices: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def vector(self) -> np.ndarray:
        return self.overlaps(np.arange(1 << self.n_qubits))


class SingleReference(ReferenceWavefunction):
    def __init__(self, n_qubits: int, h: int):
        if not 0 <= h < 1 << n_qubits:
            raise ValueError("reference index out of range")
        self.n_qubits, self.h = n_qubits, int(h)

    def overlaps(self, indices):
        return (np.asarray(indices) == self.h).astype(float)

    def __repr__(self):
        return f"SingleReference(h={self.h})"


class DenseReference(ReferenceWavefunction):
    """Reference given as a full statevector; overlaps are ``conj(xi[h])``."""

    def __init__(self, state: np.ndarray, label: str = "dense"):
        state = np.asarray(state)
        self.n_qubits = int(np.log2(state.size))
        if 1 << self.n_qubits != state.size:
            raise ValueError("state length must be a power of two")
        self.state = state
        self.label = label
        self._ov = np.conj(state)
        if np.all(np.abs(self._ov.imag) == 0):
            self._ov = self._ov.real

    def overlaps(self, indices):
        return self._ov[np.asarray(indices)]

    def __repr__(self):
        return f"DenseReference({self.label})"


class HtnReference(ReferenceWavefunction):
    """Overlaps from the HTN contraction against basis-encoding networks, cached per index."""

    def __init__(self, s: HtnState):
        self.state = s
        self.n_qubits = s.dec.n_qubits
        self._ov = np.full(1 << self.n_qubits, np.nan)

    def overlaps(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        missing = indices[np.isnan(self._ov[indices])]
        for h in np.unique(missing):
            self._ov[h] = htn_overlap_basis(self.state, int(h))
        return self._ov[indices]

    @property
    def n_evaluated(self) -> int:
        return int(np.count_nonzero(~np.isnan(self._ov)))

    def __repr__(self):
        return f"HtnReference(k={self.state.dec.k}, depth={self.state.depth})"


def build_deviated_reference(psi_g: np.ndarray, F: float, seed: int) -> DenseReference:
    """``F |psi_g> + (1 - F) |v>`` with a seeded random unit ``|v>`` orthogonal to ``psi_g``, normalized."""
    if not 0.0 <= F <= 1.0:
        raise ValueError("F must lie in [0, 1]")
    psi_g = np.asarray(psi_g)
    g = psi_g / np.linalg.norm(psi_g)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.size)
    if np.iscomplexobj(g):
        v = v + 1j * rng.standard_normal(g.size)
    v = v - g * np.vdot(g, v)
    v /= np.linalg.norm(v)
    xi = F * g + (1.0 - F) * v
    ref = DenseReference(xi / np.linalg.norm(xi), label=f"deviated(F={F})")
    ref.F = F
    return ref


def mixed_energy(ref: ReferenceWavefunction, pop: WalkerPopulation, H,
                 floor: float = 1e-12) -> float | None:
    """``sum_{h,h'} <xi|h> H[h,h'] w[h'] / sum_h <xi|h> w[h]``; None when the denominator is below ``floor``."""
    table = _as_table(H)
    num, den = _mixed_parts(ref, pop.to_dense(table.dim), table)
    if abs(den) < floor:
        return None
    return num / den


def _mixed_parts(ref: ReferenceWavefunction, w: np.ndarray, table: HamiltonianTable) -> tuple[float, float]:
    hw = table.matrix @ w
    need = np.flatnonzero(hw)
    support = np.flatnonzero(w)
    num = float(np.dot(ref.overlaps(need), hw[need])) if need.size else 0.0
    den = float(np.dot(ref.overlaps(support), w[support])) if support.size else 0.0
    return num, den


# -- driver ------------------------------------------------------------------

@dataclass(frozen=True)
class QmcConfig:
    """FCIQMC run settings (times in 1/Hartree, energies in Hartree).

    ``initial_state`` defaults to the single reference state of the exact
    ground state and ``initial_shift`` to its diagonal energy.
    """

    dtau: float = 0.001
    max_iter: int = 10000
    n_shift: int = 1000
    shift_interval: int = 5
    damping: float = 0.1
    initial_shift: float | None = None
    window: tuple[int, int] = (5000, 10000)
    seed: int = 0
    initial_state: int | None = None
    initial_walkers: int = 1
    spawn_mode: str = "exact"
    denominator_floor: float = 1e-12
    max_invalid_streak: int | None = 1000

    def __post_init__(self):
        if self.dtau <= 0:
            raise ValueError("dtau must be positive")
        if self.shift_interval < 1:
            raise ValueError("shift_interval must be >= 1")
        start, end = self.window
        if not start < end <= self.max_iter:
            raise ValueError("window must satisfy start < end <= max_iter")
        if self.initial_walkers < 1:
            raise ValueError("initial_walkers must be >= 1")
        if self.spawn_mode not in ("exact", "uniform"):
            raise ValueError("spawn_mode must be 'exact' or 'uniform'")


@dataclass(eq=False)
class RunTrace:
    """Per-iteration records; row ``i`` is the state after iteration ``i`` (row 0 = start)."""

    dtau: float
    iteration: np.ndarray
    n_walkers: np.ndarray
    shift: np.ndarray
    e_mix: np.ndarray
    e_mix_valid: np.ndarray
    shift_mode_start: int | None = None
    final_population: WalkerPopulation | None = None
    meta: dict = field(default_factory=dict)

    @property
    def tau(self) -> np.ndarray:
        return self.iteration * self.dtau

    def __len__(self) -> int:
        return self.iteration.size

    def truncated(self, n: int) -> "RunTrace":
        return RunTrace(self.dtau, self.iteration[:n], self.n_walkers[:n], self.shift[:n],
                        self.e_mix[:n], self.e_mix_valid[:n], self.shift_mode_start,
                        self.final_population, dict(self.meta))


def qmc_rng(seed: int, iteration: int) -> np.random.Generator:
    """Counter-based substream for one iteration of one run."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(iteration)))


def run_fciqmc(H: PauliSum, ref: ReferenceWavefunction, cfg: QmcConfig = QmcConfig(),
               initial_state: int | None = None) -> RunTrace:
    """Run FCIQMC and record walker count, shift and mixed energy every iteration."""
    table = HamiltonianTable(H)
    h0 = cfg.initial_state if initial_state is None else initial_state
    if h0 is None:
        from .oracle import single_reference_state
        h0 = single_reference_state(H)
    s = float(table.diag[h0]) if cfg.initial_shift is None else float(cfg.initial_shift)

    n = cfg.max_iter + 1
    it_arr = np.arange(n)
    nw = np.zeros(n, dtype=np.int64)
    shift = np.zeros(n)
    emix = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)

    pop = WalkerPopulation({h0: cfg.initial_walkers})
    w = pop.to_dense(table.dim)

    def record(i, pop, w):
        nw[i] = pop.total
        shift[i] = s
        num, den = _mixed_parts(ref, w, table)
        if abs(den) >= cfg.denominator_floor:
            emix[i] = num / den
            valid[i] = True

    def trace_upto(i):
        return RunTrace(cfg.dtau, it_arr[:i], nw[:i], shift[:i], emix[:i], valid[:i], shift_start, pop)

    shift_start = None
    n_anchor = 0
    streak = 0
    record(0, pop, w)
    for i in range(1, n):
        rng = qmc_rng(cfg.seed, i)
        spawned = spawn_step(pop, table, cfg.dtau, rng, cfg.spawn_mode)
        died = death_clone_step(pop, table, s, cfg.dtau, rng)
        pop = annihilate(pop, spawned, died)
        w = pop.to_dense(table.dim)
        total = pop.total
        if total == 0:
            raise PopulationExtinct(f"walker population died out at iteration {i}", trace_upto(i))
        if shift_start is None:
            if total > cfg.n_shift:
                shift_start, n_anchor = i, total
        elif (i - shift_start) % cfg.shift_interval == 0:
            s = update_shift(s, total, n_anchor, cfg.shift_interval, cfg.dtau, cfg.damping)
            n_anchor = total
        record(i, pop, w)
        streak = 0 if valid[i] else streak + 1
        if cfg.max_invalid_streak is not None and streak > cfg.max_invalid_streak:
            raise FciqmcError(f"reference orthogonal to the walkers for {streak} iterations", trace_upto(i + 1))
    trace = RunTrace(cfg.dtau, it_arr, nw, shift, emix, valid, shift_start, pop)
    trace.meta.update(initial_state=int(h0), initial_shift=float(shift[0]), reference=repr(ref),
                      seed=cfg.seed)
    return trace


TRACE_HEADER = ["iteration", "tau", "n_walkers", "shift", "e_mix", "e_mix_valid"]


def write_trace_csv(trace: RunTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(TRACE_HEADER)
        for i, t, n, s, e, v in zip(trace.iteration, trace.tau, trace.n_walkers, trace.shift,
                                    trace.e_mix, trace.e_mix_valid):
            wr.writerow([int(i), repr(float(t)), int(n), repr(float(s)),
                         repr(float(e)) if v else "", int(bool(v))])


def read_trace_csv(path, dtau: float | None = None) -> RunTrace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    it = np.array([int(r["iteration"]) for r in rows])
    tau = np.array([float(r["tau"]) for r in rows])
    if dtau is None:
        dtau = float(tau[1] / it[1]) if it.size > 1 and it[1] else 0.0
    return RunTrace(dtau, it, np.array([int(r["n_walkers"]) for r in rows]),
                    np.array([float(r["shift"]) for r in rows]),
                    np.array([float(r["e_mix"]) if r["e_mix"] else np.nan for r in rows]),
                    np.array([r["e_mix_valid"] == "1" for r in rows]))
