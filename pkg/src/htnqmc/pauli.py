"""Pauli strings, Pauli sums and computational-basis matrix elements.

Bit convention (shared by every module in the package): bit ``b`` of a basis
index is the state of qubit ``b``.  Qubit 0 is the least significant bit and
corresponds to site 1 in 1-based site labelings.  Pauli strings are written
left-to-right as qubit 0, 1, ..., n-1, so ``"XI"`` acts with X on qubit 0.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

PAULI_LETTERS = "IXYZ"
DROP_TOL = 1e-12
IMAG_TOL = 1e-10

# single-qubit products: (a, b) -> (phase, letter) with a * b = phase * letter
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def parity_sign(idx: np.ndarray, mask: int) -> np.ndarray:
    """``(-1) ** popcount(idx & mask)`` as int64."""
    return 1 - 2 * (np.bitwise_count(idx & mask) & 1).astype(np.int64)


class PauliError(ValueError):
    """Malformed Pauli string or Hamiltonian."""


class NonRealError(ArithmeticError):
    """A quantity expected to be real carries an imaginary residue."""


def parse_pauli_string(text: str, n_qubits: int) -> str:
    """Validate ``text`` as an ``n_qubits`` Pauli string and return it canonicalized.

    Canonical form is the upper-case letter sequence of fixed length.
    """
    s = text.strip().upper()
    if len(s) != n_qubits:
        raise PauliError(f"Pauli string {text!r} has length {len(s)}, expected {n_qubits}")
    bad = set(s) - set(PAULI_LETTERS)
    if bad:
        raise PauliError(f"illegal character(s) {''.join(sorted(bad))!r} in Pauli string {text!r}")
    return s


def pauli_masks(string: str) -> tuple[int, int]:
    """Return ``(x_mask, z_mask)``; Y sets both bits."""
    x = z = 0
    for q, c in enumerate(string):
        if c in "XY":
            x |= 1 << q
        if c in "ZY":
            z |= 1 << q
    return x, z


def apply_pauli_to_basis(string: str, h: int) -> tuple[int, complex]:
    """Return ``(h', phase)`` with ``P|h> = phase |h'>``."""
    x, z = pauli_masks(string)
    ny = (x & z).bit_count()
    sign = -1 if (h & z).bit_count() % 2 else 1
    return h ^ x, sign * (1j) ** ny


def multiply_strings(a: str, b: str) -> tuple[complex, str]:
    """Product of two Pauli strings as ``(phase, string)``."""
    phase: complex = 1
    out = []
    for pa, pb in zip(a, b):
        ph, c = _PRODUCT[(pa, pb)]
        phase *= ph
        out.append(c)
    return phase, "".join(out)


def support(string: str) -> tuple[int, ...]:
    """Qubits on which ``string`` acts non-trivially."""
    return tuple(q for q, c in enumerate(string) if c != "I")


class PauliSum:
    """Real-weighted sum of Pauli strings on ``n_qubits`` qubits.

    Terms are stored canonically: duplicates are merged by adding
    coefficients and terms with ``|c| < drop_tol`` are removed.  Instances are
    treated as immutable.
    """

    __slots__ = ("n_qubits", "_terms", "_cache")

    def __init__(self, n_qubits: int, terms: Iterable[tuple[float, str]] | Mapping[str, float] = (),
                 drop_tol: float = DROP_TOL):
        if n_qubits < 0:
            raise PauliError("n_qubits must be non-negative")
        self.n_qubits = int(n_qubits)
        if isinstance(terms, Mapping):
            terms = [(c, s) for s, c in terms.items()]
        merged: dict[str, float] = {}
        for coeff, string in terms:
            string = parse_pauli_string(string, self.n_qubits)
            if isinstance(coeff, complex) or np.iscomplexobj(coeff):
                if abs(complex(coeff).imag) > IMAG_TOL:
                    raise NonRealError(f"non-real coefficient {coeff} on {string}")
                coeff = complex(coeff).real
            merged[string] = merged.get(string, 0.0) + float(coeff)
        self._terms = {s: c for s, c in merged.items() if abs(c) >= drop_tol}
        self._cache: dict = {}

    # -- container protocol -------------------------------------------------
    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[float, str]]:
        return ((c, s) for s, c in self._terms.items())

    def __contains__(self, string: str) -> bool:
        return string in self._terms

    def __getitem__(self, string: str) -> float:
        return self._terms.get(string, 0.0)

    @property
    def terms(self) -> list[tuple[float, str]]:
        return list(self)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        if self.n_qubits != other.n_qubits:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self[k] - other[k]) <= atol for k in keys)

    # -- algebra ------------------------------------------------------------
    @classmethod
    def identity(cls, n_qubits: int, coeff: float = 1.0) -> "PauliSum":
        return cls(n_qubits, [(coeff, "I" * n_qubits)])

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise PauliError("qubit count mismatch")
        return PauliSum(self.n_qubits, list(self) + list(other))

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "PauliSum":
        return PauliSum(self.n_qubits, [(scalar * c, s) for c, s in self])

    def __mul__(self, other):
        if not isinstance(other, PauliSum):
            return self.__rmul__(other)
        if other.n_qubits != self.n_qubits:
            raise PauliError("qubit count mismatch")
        acc: dict[str, complex] = {}
        for ca, sa in self:
            for cb, sb in other:
                ph, s = multiply_strings(sa, sb)
                acc[s] = acc.get(s, 0) + ph * ca * cb
        # products of Hermitian operators that do not commute leave imaginary
        # pieces; they cancel for the symmetric combinations used here
        return PauliSum(self.n_qubits, [(c, s) for s, c in acc.items()])

    def __neg__(self) -> "PauliSum":
        return (-1.0) * self

    # -- basis-state action -------------------------------------------------
    def _masks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if "masks" not in self._cache:
            xs, zs, cs = [], [], []
            for c, s in self:
                x, z = pauli_masks(s)
                xs.append(x)
                zs.append(z)
                cs.append(c * (1j) ** ((x & z).bit_count()))
            self._cache["masks"] = (np.array(xs, dtype=np.int64), np.array(zs, dtype=np.int64),
                                    np.array(cs, dtype=complex))
        return self._cache["masks"]

    def to_sparse(self) -> sp.csr_matrix:
        """Real sparse matrix in the computational basis (cached)."""
        if "sparse" not in self._cache:
            dim = 1 << self.n_qubits
            cols = np.arange(dim, dtype=np.int64)
            rows_all, cols_all, vals_all = [], [], []
            for x, z, c in zip(*self._masks()):
                sign = parity_sign(cols, z)
                rows_all.append(cols ^ x)
                cols_all.append(cols)
                vals_all.append(c * sign)
            if rows_all:
                vals = np.concatenate(vals_all)
                m = sp.coo_matrix((vals, (np.concatenate(rows_all), np.concatenate(cols_all))),
                                  shape=(dim, dim)).tocsr()
                m.sum_duplicates()
                if m.nnz and np.max(np.abs(m.data.imag)) > IMAG_TOL:
                    raise NonRealError("Hamiltonian has non-real matrix elements")
                m = sp.csr_matrix((m.data.real, m.indices, m.indptr), shape=(dim, dim))
                m.data[np.abs(m.data) < DROP_TOL] = 0.0
                m.eliminate_zeros()
            else:
                m = sp.csr_matrix((dim, dim))
            self._cache["sparse"] = m
        return self._cache["sparse"]

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def diagonal(self) -> np.ndarray:
        """Diagonal of the matrix, computed from the Z/I terms only."""
        if "diag" not in self._cache:
            dim = 1 << self.n_qubits
            idx = np.arange(dim, dtype=np.int64)
            d = np.zeros(dim)
            for x, z, c in zip(*self._masks()):
                if x == 0:
                    d += c.real * parity_sign(idx, z)
            self._cache["diag"] = d
        return self._cache["diag"]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Matrix-free ``H @ vec`` for a length ``2**n`` vector."""
        vec = np.asarray(vec)
        dim = 1 << self.n_qubits
        if vec.shape[-1] != dim:
            raise PauliError(f"vector length {vec.shape[-1]} does not match 2**{self.n_qubits}")
        idx = np.arange(dim, dtype=np.int64)
        out = np.zeros(vec.shape, dtype=complex)
        for x, z, c in zip(*self._masks()):
            sign = parity_sign(idx, z)
            # (P v)[h ^ x] = c * sign(h) * v[h]
            out[..., idx ^ x] += c * sign * vec
        return out

    def signature(self) -> list[tuple[str, float]]:
        """Sorted ``(string, coefficient)`` pairs, handy for multiset comparisons."""
        return sorted(self._terms.items())


def matrix_element(H: PauliSum, row: int, col: int) -> float:
    """``<row|H|col>`` accumulated with complex phases, asserted real."""
    dim = 1 << H.n_qubits
    if not (0 <= row < dim and 0 <= col < dim):
        raise PauliError(f"basis index out of range for {H.n_qubits} qubits")
    acc = 0j
    flip = row ^ col
    for x, z, c in zip(*H._masks()):
        if x == flip:
            acc += c * (-1 if (col & int(z)).bit_count() % 2 else 1)
    if abs(acc.imag) > IMAG_TOL:
        raise NonRealError(f"matrix element <{row}|H|{col}> has imaginary part {acc.imag:.3e}")
    return acc.real


def connected_states(H: PauliSum, h: int) -> list[tuple[int, float]]:
    """Non-zero off-diagonal entries of column ``h`` as ``(h', H[h', h])``, ascending in ``h'``."""
    dim = 1 << H.n_qubits
    if not 0 <= h < dim:
        raise PauliError(f"basis index {h} out of range for {H.n_qubits} qubits")
    acc: dict[int, complex] = {}
    for x, z, c in zip(*H._masks()):
        if x == 0:
            continue
        hp = h ^ int(x)
        acc[hp] = acc.get(hp, 0) + c * (-1 if (h & int(z)).bit_count() % 2 else 1)
    out = []
    for hp in sorted(acc):
        v = acc[hp]
        if abs(v.imag) > IMAG_TOL:
            raise NonRealError(f"matrix element <{hp}|H|{h}> has imaginary part {v.imag:.3e}")
        if abs(v.real) >= DROP_TOL:
            out.append((hp, v.real))
    return out


# -- file format --------------------------------------------------------------

def _format_coeff(c: float) -> str:
    return repr(float(c))


def dumps_hamiltonian(H: PauliSum) -> str:
    lines = [str(H.n_qubits)]
    lines += [f"{_format_coeff(c)} {s}" for c, s in H]
    return "\n".join(lines) + "\n"


def loads_hamiltonian(text: str, source: str = "<string>") -> PauliSum:
    """Parse the text Hamiltonian format.

    Line 1 holds the qubit count; every other non-empty line is
    ``<coefficient> <letters>``.  ``#`` starts a comment.
    """
    n_qubits = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n_qubits is None:
            try:
                n_qubits = int(line)
            except ValueError:
                raise PauliError(f"{source}:{lineno}: expected qubit count, got {line!r}") from None
            if n_qubits < 0:
                raise PauliError(f"{source}:{lineno}: negative qubit count")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PauliError(f"{source}:{lineno}: expected '<coefficient> <pauli letters>'")
        tok, letters = parts
        try:
            coeff = float(tok)
        except ValueError:
            try:
                z = complex(tok.replace("i", "j"))
            except ValueError:
                raise PauliError(f"{source}:{lineno}: malformed coefficient {tok!r}") from None
            if abs(z.imag) > 0:
                raise PauliError(f"{source}:{lineno}: non-real coefficient {tok!r}") from None
            coeff = z.real
        if not math.isfinite(coeff):
            raise PauliError(f"{source}:{lineno}: non-finite coefficient {tok!r}")
        try:
            letters = parse_pauli_string(letters, n_qubits)
        except PauliError as exc:
            raise PauliError(f"{source}:{lineno}: {exc}") from None
        terms.append((coeff, letters))
    if n_qubits is None:
        raise PauliError(f"{source}: missing qubit-count header")
    return PauliSum(n_qubits, terms)


def load_hamiltonian_file(path) -> PauliSum:
    with open(path, encoding="utf-8") as fh:
        return loads_hamiltonian(fh.read(), source=str(path))


def save_hamiltonian_file(H: PauliSum, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_hamiltonian(H))
