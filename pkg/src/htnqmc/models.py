"""Model Hamiltonians, Jordan-Wigner mapping, qubit decompositions and G_mr.

Physical sites are numbered from 1 in the usual model definitions; here
site ``s`` lives on qubit ``s - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .pauli import PauliError, PauliSum

# graphite unit-cell parameters in Hartree
GRAPHITE_T1 = -1.05e-1
GRAPHITE_T2 = 1.03e-2
GRAPHITE_U = 3.00e-1


@dataclass(frozen=True)
class Decomposition:
    """Partition of the qubits into ``k`` ordered subsystems of equal size.

    ``groups[m][r]`` is the global qubit holding qubit ``r`` of subsystem
    ``m``.  Qubit ``r = 0`` of each subsystem is the leg qubit of the
    tensor network.
    """

    groups: tuple[tuple[int, ...], ...]
    name: str = "custom"

    def __post_init__(self):
        groups = tuple(tuple(int(q) for q in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if not groups or any(len(g) == 0 for g in groups):
            raise ValueError("decomposition needs at least one non-empty group")
        if len({len(g) for g in groups}) != 1:
            raise ValueError(f"groups must have equal size, got sizes {[len(g) for g in groups]}")
        flat = [q for g in groups for q in g]
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("groups must be disjoint and cover qubits 0..nk-1")

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def n(self) -> int:
        return len(self.groups[0])

    @property
    def n_qubits(self) -> int:
        return self.k * self.n

    def owner(self) -> list[int]:
        """``owner()[q]`` is the subsystem containing qubit ``q``."""
        out = [0] * self.n_qubits
        for m, g in enumerate(self.groups):
            for q in g:
                out[q] = m
        return out

    def substring(self, string: str, m: int) -> str:
        """Letters of ``string`` restricted to subsystem ``m`` in local order."""
        return "".join(string[q] for q in self.groups[m])


def cluster_decomposition(k: int, n: int = 4) -> Decomposition:
    return Decomposition(tuple(tuple(range(n * m, n * (m + 1))) for m in range(k)), "cluster")


def even_odd_decomposition(n_qubits: int) -> Decomposition:
    # sites 1,3,5,... (qubits 0,2,4,...) form subsystem 0
    return Decomposition((tuple(range(0, n_qubits, 2)), tuple(range(1, n_qubits, 2))), "even-odd")


def no_decomposition(n_qubits: int) -> Decomposition:
    return Decomposition((tuple(range(n_qubits)),), "none")


def named_decomposition(name: str, n_qubits: int) -> Decomposition:
    """Resolve a decomposition name, or explicit groups such as ``0,1,2,3;4,5,6,7``."""
    if any(ch.isdigit() for ch in name):
        try:
            groups = tuple(tuple(int(q) for q in g.split(",") if q.strip()) for g in name.split(";"))
        except ValueError:
            raise ValueError(f"cannot parse decomposition groups {name!r}") from None
        dec = Decomposition(groups, "custom")
        if dec.n_qubits != n_qubits:
            raise ValueError(f"decomposition {name!r} covers {dec.n_qubits} qubits, expected {n_qubits}")
        return dec
    key = name.lower().replace("_", "-")
    if key == "cluster":
        if n_qubits % 4:
            raise ValueError("cluster decomposition needs a multiple of 4 qubits")
        return cluster_decomposition(n_qubits // 4)
    if key in ("even-odd", "evenodd"):
        return even_odd_decomposition(n_qubits)
    if key == "horizontal":
        return Decomposition((tuple(range(n_qubits // 2)), tuple(range(n_qubits // 2, n_qubits))),
                             "horizontal")
    if key == "vertical":
        if n_qubits != 8:
            raise ValueError("vertical decomposition is defined for the 8-qubit graphite cell")
        return Decomposition(((0, 1, 4, 5), (2, 3, 6, 7)), "vertical")
    if key in ("none", "no-decomposition"):
        return no_decomposition(n_qubits)
    raise ValueError(f"unknown decomposition {name!r}")


def _two_site(n_qubits: int, a: int, b: int, letter: str) -> str:
    s = ["I"] * n_qubits
    s[a] = s[b] = letter
    return "".join(s)


def build_heisenberg_chain(k: int, j_inter: float) -> PauliSum:
    """Chain of ``k`` four-site Heisenberg clusters on ``4k`` qubits.

    Intra-cluster bonds carry coefficient 1, the bond between the last site
    of one cluster and the first site of the next carries ``j_inter``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    nq = 4 * k
    terms = []
    for p in range(k):
        for f in range(3):
            a = 4 * p + f
            terms += [(1.0, _two_site(nq, a, a + 1, P)) for P in "XYZ"]
    for p in range(k - 1):
        a = 4 * p + 3
        terms += [(j_inter, _two_site(nq, a, a + 1, P)) for P in "XYZ"]
    return PauliSum(nq, terms)


@dataclass(frozen=True)
class FermionTerm:
    """One real-weighted fermionic operator on spin-orbitals.

    kind is ``"hopping"`` (``a+_p a_q + a+_q a_p``), ``"number_number"``
    (``n_p n_q``) or ``"number"`` (``n_p``).
    """

    kind: str
    indices: tuple[int, ...]
    coefficient: float

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        arity = {"hopping": 2, "number_number": 2, "number": 1}
        if self.kind not in arity:
            raise ValueError(f"unknown fermion term kind {self.kind!r}")
        if len(self.indices) != arity[self.kind]:
            raise ValueError(f"{self.kind} needs {arity[self.kind]} indices")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("fermion term indices must be distinct")


def jordan_wigner(term: FermionTerm, n_qubits: int) -> PauliSum:
    """Jordan-Wigner image of ``term``; occupied orbital = qubit state 1."""
    if any(not 0 <= i < n_qubits for i in term.indices):
        raise PauliError(f"orbital index out of range for {n_qubits} qubits: {term.indices}")
    c = term.coefficient
    if term.kind == "number":
        (p,) = term.indices
        z = ["I"] * n_qubits
        z[p] = "Z"
        return PauliSum(n_qubits, [(0.5 * c, "I" * n_qubits), (-0.5 * c, "".join(z))])
    if term.kind == "number_number":
        p, q = term.indices
        zp, zq, zz = ["I"] * n_qubits, ["I"] * n_qubits, ["I"] * n_qubits
        zp[p] = "Z"
        zq[q] = "Z"
        zz[p] = zz[q] = "Z"
        return PauliSum(n_qubits, [(0.25 * c, "I" * n_qubits), (-0.25 * c, "".join(zp)),
                                   (-0.25 * c, "".join(zq)), (0.25 * c, "".join(zz))])
    p, q = sorted(term.indices)
    out = []
    for P in "XY":
        s = ["I"] * n_qubits
        s[p] = s[q] = P
        for r in range(p + 1, q):
            s[r] = "Z"
        out.append((0.5 * c, "".join(s)))
    return PauliSum(n_qubits, out)


def fermion_hamiltonian(terms: Sequence[FermionTerm], n_qubits: int) -> PauliSum:
    total = PauliSum(n_qubits)
    for t in terms:
        total = total + jordan_wigner(t, n_qubits)
    return total


def graphite_terms(t1: float = GRAPHITE_T1, t2: float = GRAPHITE_T2,
                   u: float = GRAPHITE_U) -> list[FermionTerm]:
    """Fermionic terms of the 8-spin-orbital graphite Hubbard cell.

    Orbitals 1-4 (qubits 0-3) form the first layer, 5-8 the second.
    """
    terms = [FermionTerm("hopping", (q, q + 2), 3 * t1) for q in (0, 1, 4, 5)]
    terms += [FermionTerm("hopping", (q, q + 4), 2 * t2) for q in (0, 1)]
    terms += [FermionTerm("number_number", (q, q + 1), u) for q in (0, 2, 4, 6)]
    return terms


def build_graphite_hubbard(t1: float = GRAPHITE_T1, t2: float = GRAPHITE_T2,
                           u: float = GRAPHITE_U) -> PauliSum:
    return fermion_hamiltonian(graphite_terms(t1, t2, u), 8)


def number_operator(n_qubits: int) -> PauliSum:
    """Total particle number ``sum_q (I - Z_q) / 2``."""
    return fermion_hamiltonian([FermionTerm("number", (q,), 1.0) for q in range(n_qubits)], n_qubits)


def interaction_strength_gmr(H: PauliSum, dec: Decomposition) -> float:
    """Average inter-subsystem interaction strength.

    Sums ``|c_a|`` over terms whose non-identity letters touch two or more
    subsystems and divides by the number of subsystems.
    """
    if dec.n_qubits != H.n_qubits:
        raise ValueError(f"decomposition covers {dec.n_qubits} qubits, Hamiltonian has {H.n_qubits}")
    owner = dec.owner()
    total = 0.0
    for c, s in H:
        touched = {owner[q] for q, letter in enumerate(s) if letter != "I"}
        if len(touched) >= 2:
            total += abs(c)
    return total / dec.k
