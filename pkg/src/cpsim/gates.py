"""Gate descriptions and their action on CP-format states.

Gates are structural: a one-qubit gate rewrites a single factor matrix, a
SWAP exchanges two factors, a controlled gate splits every term in two, and
a Kronecker-sum operator (a sum of elementary tensor-product operators)
multiplies the rank by its number of terms.  Pruning of zero-norm branches
keeps basis-controlled circuits at their true rank.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .state import CPState, PRUNE_TOL, prune

I2 = np.eye(2, dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
# Projectors onto |0> and |1>.
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
# |h><h| on one qubit.
PH = np.full((2, 2), 0.5, dtype=complex)


def rn(k: int) -> np.ndarray:
    """Phase gate diag(1, e^{2 pi i / 2^k})."""
    return np.array([[1, 0], [0, np.exp(2j * np.pi / 2 ** k)]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _check_unitary(mat, tol=1e-10):
    if np.max(np.abs(mat.conj().T @ mat - I2)) > tol:
        raise ValueError("matrix is not unitary")


@dataclass(frozen=True)
class OneQubit:
    target: int
    matrix: np.ndarray
    label: str = "U"


@dataclass(frozen=True)
class Swap:
    q1: int
    q2: int

    def __post_init__(self):
        if self.q1 == self.q2:
            raise ValueError("SWAP needs two distinct qubits")


@dataclass(frozen=True)
class Controlled:
    control: int
    on_bit: int
    target: int
    matrix: np.ndarray
    label: str = "CU"

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("control and target coincide")


@dataclass(frozen=True)
class MultiControlled:
    controls: tuple  # of (qubit, bit)
    target: int
    matrix: np.ndarray
    label: str = "CCU"

    def __post_init__(self):
        qs = [q for q, _ in self.controls] + [self.target]
        if len(set(qs)) != len(qs):
            raise ValueError("controls/target must be distinct qubits")


@dataclass(frozen=True)
class KronSum:
    """Sum of elementary tensor-product operators.

    Each term maps qubit -> 2x2 matrix, identity implied elsewhere; scalar
    coefficients are pre-folded into one of the mapped matrices.  Local
    matrices need not be unitary (projectors are the typical use).
    """
    terms: tuple  # of dict {qubit: 2x2 ndarray}
    label: str = "KS"


def qubits_of(gate):
    if isinstance(gate, OneQubit):
        return {gate.target}
    if isinstance(gate, Swap):
        return {gate.q1, gate.q2}
    if isinstance(gate, Controlled):
        return {gate.control, gate.target}
    if isinstance(gate, MultiControlled):
        return {q for q, _ in gate.controls} | {gate.target}
    if isinstance(gate, KronSum):
        out = set()
        for t in gate.terms:
            out |= set(t)
        return out
    raise TypeError("unknown gate %r" % (gate,))


def _check_indices(gate, n):
    qs = qubits_of(gate)
    if any(q < 0 or q >= n for q in qs):
        raise IndexError("gate %r touches qubits outside 0..%d" % (gate, n - 1))


def apply_one_qubit(state: CPState, target: int, mat) -> CPState:
    if target < 0 or target >= state.n:
        raise IndexError("qubit %d out of range" % target)
    factors = list(state.factors)
    factors[target] = np.asarray(mat, dtype=complex) @ factors[target]
    return CPState(state.n, tuple(factors))


def apply_swap(state: CPState, q1: int, q2: int) -> CPState:
    if q1 == q2:
        raise ValueError("SWAP needs two distinct qubits")
    for q in (q1, q2):
        if q < 0 or q >= state.n:
            raise IndexError("qubit %d out of range" % q)
    factors = list(state.factors)
    factors[q1], factors[q2] = factors[q2], factors[q1]
    return CPState(state.n, tuple(factors))


def _interleave(children_a, children_b):
    """Stack two child factor lists so term k's children sit at 2k, 2k+1."""
    out = []
    for fa, fb in zip(children_a, children_b):
        r = fa.shape[1]
        f = np.empty((2, 2 * r), dtype=complex)
        f[:, 0::2] = fa
        f[:, 1::2] = fb
        out.append(f)
    return out


def apply_controlled(state: CPState, control: int, on_bit: int, target: int,
                     mat, prune_tol: float = PRUNE_TOL) -> CPState:
    if control == target:
        raise ValueError("control and target coincide")
    for q in (control, target):
        if q < 0 or q >= state.n:
            raise IndexError("qubit %d out of range" % q)
    mat = np.asarray(mat, dtype=complex)
    proj_pass = P0 if on_bit == 1 else P1
    proj_act = P1 if on_bit == 1 else P0

    passed = [f.copy() for f in state.factors]
    passed[control] = proj_pass @ passed[control]
    active = [f.copy() for f in state.factors]
    active[control] = proj_act @ active[control]
    active[target] = mat @ active[target]
    out = CPState(state.n, tuple(_interleave(passed, active)))
    return prune(out, prune_tol)


def apply_multi_controlled(state: CPState, controls, target: int, mat,
                           prune_tol: float = PRUNE_TOL) -> CPState:
    qs = [q for q, _ in controls] + [target]
    if len(set(qs)) != len(qs):
        raise ValueError("controls/target must be distinct qubits")
    if any(q < 0 or q >= state.n for q in qs):
        raise IndexError("gate qubit out of range")
    mat = np.asarray(mat, dtype=complex)

    # Identity branch kept verbatim plus one correction branch carrying the
    # projected controls and (U - I) on the target.
    correction = [f.copy() for f in state.factors]
    for q, b in controls:
        correction[q] = (P1 if b == 1 else P0) @ correction[q]
    correction[target] = (mat - I2) @ correction[target]
    out = CPState(state.n, tuple(_interleave(list(state.factors), correction)))
    return prune(out, prune_tol)


def apply_kron_sum(state: CPState, op: KronSum,
                   prune_tol: float = PRUNE_TOL) -> CPState:
    blocks = [[] for _ in range(state.n)]
    for term in op.terms:
        if any(q < 0 or q >= state.n for q in term):
            raise IndexError("operator qubit out of range")
        for j in range(state.n):
            f = state.factors[j]
            if j in term:
                f = np.asarray(term[j], dtype=complex) @ f
            blocks[j].append(f)
    factors = tuple(np.hstack(b) for b in blocks)
    return prune(CPState(state.n, factors), prune_tol)


def apply_gate(state: CPState, gate) -> CPState:
    _check_indices(gate, state.n)
    if isinstance(gate, OneQubit):
        return apply_one_qubit(state, gate.target, gate.matrix)
    if isinstance(gate, Swap):
        return apply_swap(state, gate.q1, gate.q2)
    if isinstance(gate, Controlled):
        return apply_controlled(state, gate.control, gate.on_bit, gate.target,
                                gate.matrix)
    if isinstance(gate, MultiControlled):
        return apply_multi_controlled(state, gate.controls, gate.target,
                                      gate.matrix)
    if isinstance(gate, KronSum):
        return apply_kron_sum(state, gate)
    raise TypeError("unknown gate %r" % (gate,))


def apply_layer(state: CPState, gates) -> CPState:
    seen = set()
    for g in gates:
        qs = qubits_of(g)
        if qs & seen:
            raise ValueError("gates within a layer must act on disjoint qubits")
        seen |= qs
        state = apply_gate(state, g)
    return state


# ---------------------------------------------------------------------------
# Named-gate registry (used by circuit (de)serialization)

_RN_RE = re.compile(r"^Rn\((\d+)\)$")
_RY_RE = re.compile(r"^Ry\(([-+0-9.eE]+)\)$")


def named_matrix(name: str) -> np.ndarray:
    """Look up a 2x2 gate matrix by registry name."""
    fixed = {"H": H, "X": X, "Z": Z}
    if name in fixed:
        return fixed[name]
    m = _RN_RE.match(name)
    if m:
        return rn(int(m.group(1)))
    m = _RY_RE.match(name)
    if m:
        return ry(float(m.group(1)))
    raise KeyError("unknown gate name %r" % name)


def gate_to_json(gate) -> dict:
    if isinstance(gate, OneQubit):
        return {"kind": "1q", "name": gate.label, "target": gate.target}
    if isinstance(gate, Swap):
        return {"kind": "SWAP", "q1": gate.q1, "q2": gate.q2}
    if isinstance(gate, Controlled):
        return {"kind": "CU", "name": gate.label, "control": gate.control,
                "on_bit": gate.on_bit, "target": gate.target}
    if isinstance(gate, MultiControlled):
        return {"kind": "CCU", "name": gate.label,
                "controls": [[q, b] for q, b in gate.controls],
                "target": gate.target}
    if isinstance(gate, KronSum):
        return {"kind": "kron_sum", "name": gate.label,
                "terms": [{str(q): [[[v.real, v.imag] for v in row]
                                    for row in np.asarray(m)]
                           for q, m in t.items()} for t in gate.terms]}
    raise TypeError("unknown gate %r" % (gate,))


def gate_from_json(doc: dict):
    kind = doc["kind"]
    if kind == "1q":
        return OneQubit(doc["target"], named_matrix(doc["name"]), doc["name"])
    if kind == "SWAP":
        return Swap(doc["q1"], doc["q2"])
    if kind == "CU":
        return Controlled(doc["control"], doc["on_bit"], doc["target"],
                          named_matrix(doc["name"]), doc["name"])
    if kind == "CCU":
        return MultiControlled(tuple((q, b) for q, b in doc["controls"]),
                               doc["target"], named_matrix(doc["name"]),
                               doc["name"])
    if kind == "kron_sum":
        terms = tuple(
            {int(q): np.array([[complex(re_, im) for re_, im in row]
                               for row in rows])
             for q, rows in t.items()}
            for t in doc["terms"])
        return KronSum(terms, doc.get("name", "KS"))
    raise KeyError("unknown gate kind %r" % kind)


def make_named(name: str, target: int) -> OneQubit:
    mat = named_matrix(name)
    _check_unitary(mat)
    return OneQubit(target, mat, name)
