"""CP-format quantum states and the algebra on them.

An n-qubit state is stored as a sum of R rank-1 terms.  Term k is the outer
product of column k of each of the n factor matrices, every factor being a
2 x R complex array.  R = 0 encodes the zero state.  Qubit 0 is the most
significant bit everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Columns whose term norm falls below this are dropped by prune().
PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class CPState:
    n: int
    factors: tuple  # n arrays, each complex with shape (2, R)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if len(self.factors) != self.n:
            raise ValueError("factor count does not match qubit count")
        ranks = {f.shape[1] for f in self.factors}
        if len(ranks) > 1:
            raise ValueError("factor matrices disagree on rank: %s" % ranks)
        for f in self.factors:
            if f.shape[0] != 2:
                raise ValueError("factors must have two rows")
            if not np.all(np.isfinite(f)):
                raise ValueError("non-finite factor entry")

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    def term(self, k: int):
        """The n length-2 column vectors of term k."""
        return [f[:, k].copy() for f in self.factors]

    def term_norms(self) -> np.ndarray:
        """Norm of each rank-1 term (product of factor column norms)."""
        norms = np.ones(self.rank)
        for f in self.factors:
            norms *= np.linalg.norm(f, axis=0)
        return norms

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "rank": self.rank,
            "factors": [
                [[[float(v.real), float(v.imag)] for v in row] for row in f]
                for f in self.factors
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CPState":
        factors = []
        for rows in doc["factors"]:
            f = np.array([[complex(re, im) for re, im in row] for row in rows],
                         dtype=complex).reshape(2, -1)
            factors.append(f)
        return cls(doc["n"], tuple(factors))


def from_factors(factors) -> CPState:
    fs = tuple(np.ascontiguousarray(f, dtype=complex) for f in factors)
    return CPState(len(fs), fs)


def zero_state(n: int) -> CPState:
    """The zero vector (rank 0)."""
    return CPState(n, tuple(np.zeros((2, 0), dtype=complex) for _ in range(n)))


def basis_state(n: int, bits) -> CPState:
    """|b_0 b_1 ... b_{n-1}> with qubit 0 most significant."""
    bits = _as_bits(bits, n)
    cols = []
    for b in bits:
        c = np.zeros((2, 1), dtype=complex)
        c[b, 0] = 1.0
        cols.append(c)
    return CPState(n, tuple(cols))


def uniform_state(n: int) -> CPState:
    """|h> = H^{x n} |0...0>, rank 1."""
    col = np.full((2, 1), 1.0 / np.sqrt(2.0), dtype=complex)
    return CPState(n, tuple(col.copy() for _ in range(n)))


def random_rank1_state(n: int, rng) -> CPState:
    """Rank-1 state with factor entries uniform on [0, 1], then normalized."""
    state = from_factors([rng.uniform(0.0, 1.0, size=(2, 1)) for _ in range(n)])
    return normalize(state)


def _as_bits(bits, n):
    if isinstance(bits, str):
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ValueError("bad bit-string %r for %d qubits" % (bits, n))
        return [int(c) for c in bits]
    bits = list(bits)
    if len(bits) != n:
        raise ValueError("bit sequence length %d != %d" % (len(bits), n))
    return [int(b) for b in bits]


def inner_product(x: CPState, y: CPState) -> complex:
    """<x|y> via Hadamard-accumulated per-mode Grams, O(n R_x R_y)."""
    if x.n != y.n:
        raise ValueError("qubit counts differ: %d vs %d" % (x.n, y.n))
    if x.rank == 0 or y.rank == 0:
        return 0.0 + 0.0j
    acc = x.factors[0].conj().T @ y.factors[0]
    for j in range(1, x.n):
        acc *= x.factors[j].conj().T @ y.factors[j]
    return complex(acc.sum())


def norm(x: CPState) -> float:
    if x.rank == 0:
        return 0.0
    return float(np.sqrt(abs(inner_product(x, x))))


def fidelity(x: CPState, y: CPState) -> float:
    """|<x|y>|^2 for normalized x, y, clamped to [0, 1]."""
    return float(min(1.0, abs(inner_product(x, y)) ** 2))


def amplitude(x: CPState, basis) -> complex:
    bits = _as_bits(basis, x.n)
    if x.rank == 0:
        return 0.0 + 0.0j
    prod = np.ones(x.rank, dtype=complex)
    for j, b in enumerate(bits):
        prod *= x.factors[j][b, :]
    return complex(prod.sum())


def scale(x: CPState, c: complex) -> CPState:
    """Multiply the state by a scalar (folded into the first factor)."""
    if x.rank == 0:
        return x
    factors = list(x.factors)
    factors[0] = factors[0] * c
    return CPState(x.n, tuple(factors))


def normalize(x: CPState) -> CPState:
    nrm = norm(x)
    if nrm <= 0.0:
        raise ValueError("cannot normalize a zero-norm state")
    return scale(x, 1.0 / nrm)


def concat_terms(x: CPState, y: CPState) -> CPState:
    """Term-list union; the dense vector of the result is the sum."""
    if x.n != y.n:
        raise ValueError("qubit counts differ")
    factors = tuple(np.hstack([fx, fy]) for fx, fy in zip(x.factors, y.factors))
    return CPState(x.n, factors)


def prune(x: CPState, tol: float = PRUNE_TOL) -> CPState:
    """Drop terms whose norm is below tol."""
    if x.rank == 0:
        return x
    keep = x.term_norms() >= tol
    if keep.all():
        return x
    return CPState(x.n, tuple(f[:, keep] for f in x.factors))


def project_register(x: CPState, bits, register) -> CPState | complex:
    """Project the given qubits onto a basis string, leaving a state on the rest.

    When the register covers every qubit the result is the plain amplitude.
    """
    register = list(register)
    bits = _as_bits(bits, len(register))
    if len(set(register)) != len(register):
        raise ValueError("duplicate qubit in register")
    if any(q < 0 or q >= x.n for q in register):
        raise ValueError("register qubit out of range")
    if len(register) == x.n and x.rank == 0:
        return 0.0 + 0.0j

    coeff = np.ones(x.rank, dtype=complex)
    for q, b in zip(register, bits):
        coeff *= x.factors[q][b, :]
    rest = [q for q in range(x.n) if q not in set(register)]
    if not rest:
        return complex(coeff.sum())
    factors = [x.factors[q].copy() for q in rest]
    factors[0] *= coeff
    return prune(CPState(len(rest), tuple(factors)))


def marked_probability(x: CPState, marked, register=None) -> float:
    """Probability mass on the marked strings of a qubit register.

    With register=None the strings address all qubits and the result is
    the sum of squared amplitudes.  For a proper subset the rest of the
    system is traced out by summing the squared norm of each projection.
    """
    if register is None:
        register = list(range(x.n))
    register = list(register)
    total = 0.0
    for m in marked:
        proj = project_register(x, m, register)
        if isinstance(proj, CPState):
            total += norm(proj) ** 2
        else:
            total += abs(proj) ** 2
    return total
