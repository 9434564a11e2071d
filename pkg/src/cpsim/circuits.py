"""Circuit builders: QFT, phase estimation, Grover, and walk-search operators.

A Circuit is an ordered list of layers; gates within one layer act on
disjoint qubits.  Builders emit one gate per layer unless gates are
genuinely parallel (Hadamard walls, register swaps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gates as g
from .state import CPState, from_factors, normalize, uniform_state, concat_terms, scale


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple  # of tuple of GateOps
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for layer in self.layers:
            seen = set()
            for gate in layer:
                qs = g.qubits_of(gate)
                if any(q < 0 or q >= self.n for q in qs):
                    raise ValueError("gate outside qubit range in %r" % self.name)
                if qs & seen:
                    raise ValueError("overlapping gates in one layer")
                seen |= qs

    @property
    def depth(self) -> int:
        return len(self.layers)

    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def inverse(self) -> "Circuit":
        inv_layers = tuple(tuple(_dagger(gate) for gate in layer)
                           for layer in reversed(self.layers))
        return Circuit(self.n, inv_layers, self.name + "^-1", dict(self.params))

    def to_json(self) -> dict:
        return {"n": self.n, "name": self.name, "params": self.params,
                "layers": [[g.gate_to_json(gate) for gate in layer]
                           for layer in self.layers]}

    @classmethod
    def from_json(cls, doc: dict) -> "Circuit":
        layers = tuple(tuple(g.gate_from_json(gd) for gd in layer)
                       for layer in doc["layers"])
        return cls(doc["n"], layers, doc.get("name", ""), doc.get("params", {}))


def _dagger(gate):
    if isinstance(gate, g.OneQubit):
        return g.OneQubit(gate.target, gate.matrix.conj().T, gate.label + "+")
    if isinstance(gate, g.Swap):
        return gate
    if isinstance(gate, g.Controlled):
        return g.Controlled(gate.control, gate.on_bit, gate.target,
                            gate.matrix.conj().T, gate.label + "+")
    if isinstance(gate, g.MultiControlled):
        return g.MultiControlled(gate.controls, gate.target,
                                 gate.matrix.conj().T, gate.label + "+")
    if isinstance(gate, g.KronSum):
        terms = tuple({q: np.asarray(m).conj().T for q, m in t.items()}
                      for t in gate.terms)
        return g.KronSum(terms, gate.label + "+")
    raise TypeError(gate)


@dataclass(frozen=True)
class WalkSpec:
    family: str          # complete_with_loops | complete_bipartite | cyclic
    n: int               # vertex-register qubits (n1 for bipartite)
    xstar: str           # marked vertex as a bit-string on the vertex register
    m: int = 1           # cyclic only: a = 2^m - 1

    def __post_init__(self):
        if self.family not in ("complete_with_loops", "complete_bipartite",
                               "cyclic"):
            raise ValueError("unknown graph family %r" % self.family)
        if len(self.xstar) != self.n or set(self.xstar) - {"0", "1"}:
            raise ValueError("marked vertex must be a %d-bit string" % self.n)
        if self.family == "cyclic" and not self.m < self.n:
            raise ValueError("cyclic walk needs m < n")

    @property
    def total_qubits(self) -> int:
        if self.family == "complete_bipartite":
            return 2 * self.n + 2
        return 2 * self.n


# ---------------------------------------------------------------------------
# QFT and phase estimation

def build_qft(n: int) -> Circuit:
    """n Hadamards, n(n-1)/2 controlled rotations, floor(n/2) final swaps."""
    if n < 1:
        raise ValueError("QFT needs at least one qubit")
    layers = []
    for j in range(n):
        layers.append((g.make_named("H", j),))
        for k in range(j + 1, n):
            order = k - j + 1
            layers.append((g.Controlled(k, 1, j, g.rn(order),
                                        "Rn(%d)" % order),))
    if n >= 2:
        layers.append(tuple(g.Swap(j, n - 1 - j) for j in range(n // 2)))
    return Circuit(n, tuple(layers), "qft", {"n": n})


def build_inverse_qft(n: int) -> Circuit:
    circ = build_qft(n).inverse()
    return Circuit(n, circ.layers, "qft_inverse", {"n": n})


def build_phase_estimation_register(n: int, theta: float) -> CPState:
    """The counting register after the controlled-power stage, rank 1.

    Qubit j (1-based) carries the factor (1, e^{i 2 pi 2^{n-j} theta})/sqrt(2);
    the eigenvector register is a spectator and is not represented.
    """
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    factors = []
    for j in range(1, n + 1):
        phase = np.exp(2j * np.pi * (2 ** (n - j)) * theta)
        factors.append(np.array([[1.0], [phase]], dtype=complex) / np.sqrt(2.0))
    return from_factors(factors)


# ---------------------------------------------------------------------------
# Grover

def _projector(bit: str) -> np.ndarray:
    return g.P1 if bit == "1" else g.P0


def grover_oracle(n: int, marked) -> g.KronSum:
    """I - sum_y 2 |y><y| as a Kronecker sum with one term per marked item."""
    marked = list(marked)
    if not marked:
        raise ValueError("need at least one marked item")
    if len(set(marked)) != len(marked):
        raise ValueError("duplicate marked items")
    terms = [{0: g.I2}]
    for y in marked:
        if len(y) != n or set(y) - {"0", "1"}:
            raise ValueError("marked item %r is not an %d-bit string" % (y, n))
        term = {i: _projector(b) for i, b in enumerate(y)}
        term[0] = -2.0 * term[0]
        terms.append(term)
    return g.KronSum(tuple(terms), "oracle")


def zero_reflector(qubits) -> g.KronSum:
    """2|0...0><0...0| - I on the given qubits."""
    qubits = list(qubits)
    refl = {q: g.P0 for q in qubits}
    refl[qubits[0]] = 2.0 * refl[qubits[0]]
    return g.KronSum((refl, {qubits[0]: -g.I2}), "reflect0")


def _hadamard_wall(qubits):
    return tuple(g.make_named("H", q) for q in qubits)


def diffusion_circuit(n: int, qubits=None) -> Circuit:
    """U_d = 2|h><h| - I as an H wall, zero reflector, H wall."""
    qubits = list(range(n)) if qubits is None else list(qubits)
    layers = (
        _hadamard_wall(qubits),
        (zero_reflector(qubits),),
        _hadamard_wall(qubits),
    )
    return Circuit(n, layers, "diffusion")


def grover_iterations(n: int, a: int, approximate: bool = False) -> int:
    big_n = 2 ** n
    if approximate:
        return int(math.floor(math.pi / 4.0 * math.sqrt(big_n)))
    return int(math.floor(math.pi / 4.0 * math.sqrt(big_n / a)))


def build_grover(n: int, marked):
    """Returns (oracle KronSum, diffusion Circuit, iteration count)."""
    oracle = grover_oracle(n, marked)
    return oracle, diffusion_circuit(n), grover_iterations(n, len(list(marked)))


def grover_step_circuit(n: int, marked) -> Circuit:
    """One U_g application: oracle first, then the diffusion."""
    oracle, diff, _ = build_grover(n, marked)
    layers = ((oracle,),) + diff.layers
    return Circuit(n, layers, "grover_step", {"marked": sorted(marked)})


# ---------------------------------------------------------------------------
# Quantum-walk search operators
#
# All three families apply U_s = U_o S U_d S U_d per search step; builders
# return the layer sequence of one step (rightmost operator first) plus the
# default iteration count floor(pi/4 sqrt(#vertices)).

def _swap_layer(pairs):
    return tuple(g.Swap(a, b) for a, b in pairs)


def build_walk_complete_loops(n: int, xstar: str):
    spec = WalkSpec("complete_with_loops", n, xstar)
    total = 2 * n
    first = list(range(n))
    second = list(range(n, total))
    u_d = diffusion_circuit(total, second).layers
    swap = (_swap_layer(zip(first, second)),)
    oracle_terms = ({0: g.I2},
                    {i: (-2.0 if i == 0 else 1.0) * _projector(b)
                     for i, b in enumerate(xstar)})
    u_o = ((g.KronSum(oracle_terms, "walk_oracle"),),)
    layers = u_d + swap + u_d + swap + u_o
    circ = Circuit(total, layers, "walk_complete_loops", {"n": n, "xstar": xstar})
    return circ, walk_iterations(spec)


def loops_initial_state(n: int) -> CPState:
    return uniform_state(2 * n)


def build_walk_bipartite(n1: int, xstar: str):
    """Search on K_{N,N}; vertices are tagged |0>|x> (left) and |1>|x> (right).

    The diffusion is a three-term Kronecker sum: the two projector-gated
    half-graph reflections share the -I remainder.
    """
    spec = WalkSpec("complete_bipartite", n1, xstar)
    total = 2 * n1 + 2
    tag1, tag2 = 0, n1 + 1
    first = list(range(0, n1 + 1))
    second = list(range(n1 + 1, total))

    term_left = {tag1: 2.0 * g.P0, tag2: g.P1}
    term_right = {tag1: 2.0 * g.P1, tag2: g.P0}
    for q in second[1:]:
        term_left[q] = g.PH
        term_right[q] = g.PH
    u_d = ((g.KronSum((term_left, term_right, {tag1: -g.I2}), "walk_ud"),),)

    swap = (_swap_layer(zip(first, second)),)

    oracle_term = {tag1: -2.0 * g.P0, tag2: g.P1}
    for i, b in enumerate(xstar):
        oracle_term[1 + i] = _projector(b)
    u_o = ((g.KronSum(({0: g.I2}, oracle_term), "walk_oracle"),),)

    layers = u_d + swap + u_d + swap + u_o
    circ = Circuit(total, layers, "walk_bipartite", {"n1": n1, "xstar": xstar})
    return circ, walk_iterations(spec)


def bipartite_initial_state(n1: int) -> CPState:
    """The rank-2 superposition of all edge states."""
    h = np.full((2, 1), 1.0 / np.sqrt(2.0), dtype=complex)
    e0 = np.array([[1.0], [0.0]], dtype=complex)
    e1 = np.array([[0.0], [1.0]], dtype=complex)
    left = from_factors([e0] + [h] * n1 + [e1] + [h] * n1)
    right = from_factors([e1] + [h] * n1 + [e0] + [h] * n1)
    return concat_terms(scale(left, 1 / np.sqrt(2.0)),
                        scale(right, 1 / np.sqrt(2.0)))


def bipartite_diffusion_gates(n1: int) -> Circuit:
    """Gate-level diffusion for the bipartite walk (reference realization).

    Dense action equals minus the Kronecker-sum diffusion; the sign cancels
    over the two diffusion applications inside one search step.
    """
    total = 2 * n1 + 2
    tag1, tag2 = 0, n1 + 1
    rest = list(range(n1 + 2, total))
    layers = []
    # Left half: tag1 = 0 gates the reflection about |1>|h...h>.
    for q in rest:
        layers.append((g.Controlled(tag1, 0, q, g.H, "H"),))
    layers.append((g.MultiControlled(
        ((tag1, 0),) + tuple((q, 0) for q in rest), tag2, g.Z, "Z"),))
    for q in rest:
        layers.append((g.Controlled(tag1, 0, q, g.H, "H"),))
    # Right half: tag1 = 1 gates the reflection about |0>|h...h>.
    for q in rest:
        layers.append((g.Controlled(tag1, 1, q, g.H, "H"),))
    layers.append((g.Controlled(tag1, 1, tag2, g.X, "X"),))
    layers.append((g.MultiControlled(
        ((tag1, 1),) + tuple((q, 0) for q in rest), tag2, g.Z, "Z"),))
    layers.append((g.Controlled(tag1, 1, tag2, g.X, "X"),))
    for q in rest:
        layers.append((g.Controlled(tag1, 1, q, g.H, "H"),))
    return Circuit(total, tuple(layers), "walk_ud_gates", {"n1": n1})


# --- cyclic graphs ---------------------------------------------------------

def _ripple_gates(qubits, on_bit, extra_controls=()):
    """Cyclic +1 (on_bit=1) or -1 (on_bit=0) counter on `qubits` (MSB first)."""
    qubits = list(qubits)
    out = []
    for t in range(len(qubits)):
        controls = tuple(extra_controls) + tuple(
            (q, on_bit) for q in qubits[t + 1:])
        if controls:
            out.append(g.MultiControlled(controls, qubits[t], g.X, "X"))
        else:
            out.append(g.OneQubit(qubits[t], g.X, "X"))
    return out


def build_shift(n: int, direction: str = "L") -> Circuit:
    """Cyclic shift on n qubits: 'L' maps |x> to |x+1 mod N>, 'R' to |x-1>."""
    if direction not in ("L", "R"):
        raise ValueError("direction must be 'L' or 'R'")
    on_bit = 1 if direction == "L" else 0
    layers = tuple((gate,) for gate in _ripple_gates(range(n), on_bit))
    return Circuit(n, layers, "shift_%s" % direction, {"n": n})


def kb_angle(n: int, i: int) -> float:
    """Rotation angle for step i (1-based) of the K^(b) ladder."""
    return math.acos(math.sqrt((2 ** (n - i) - 1) / (2 ** (n - i + 1) - 1)))


def build_kb(n: int, offset: int = 0, total: int | None = None) -> Circuit:
    """K^(b) for the complete graph: maps |0...0> to the uniform state over
    the N-1 vertices adjacent to vertex 0 (everything but |0...0>)."""
    if n < 1:
        raise ValueError("K^(b) needs at least one qubit")
    total = total if total is not None else n
    qs = [offset + i for i in range(n)]
    layers = []
    for i in range(n - 1):
        zeros = tuple((qs[q], 0) for q in range(i))
        theta = kb_angle(n, i + 1)
        if zeros:
            layers.append((g.MultiControlled(zeros, qs[i], g.ry(theta),
                                             "Ry(%g)" % theta),))
        else:
            layers.append((g.OneQubit(qs[i], g.ry(theta), "Ry(%g)" % theta),))
        for j in range(i + 1, n):
            controls = zeros + ((qs[i], 1),)
            layers.append((g.MultiControlled(controls, qs[j], g.H, "H"),))
    final_controls = tuple((qs[q], 0) for q in range(n - 1))
    if final_controls:
        layers.append((g.MultiControlled(final_controls, qs[n - 1], g.X, "X"),))
    else:
        layers.append((g.OneQubit(qs[n - 1], g.X, "X"),))
    return Circuit(total, tuple(layers), "kb", {"n": n, "offset": offset})


def _controlled_cascade(n: int, on_bit: int):
    """Shift the second register by +/- the first-register value.

    First-register qubit k (0-indexed, MSB first) drives a ripple counter on
    the top k+1 second-register qubits, i.e. adds or subtracts 2^(n-1-k).
    """
    layers = []
    for k in range(n):
        block = range(n, n + k + 1)
        for gate in _ripple_gates(block, on_bit, extra_controls=((k, 1),)):
            layers.append((gate,))
    return tuple(layers)


def cyclic_diffusion_layers(n: int):
    """Diffusion for the complete graph (cyclic family, a=1), gate level.

    Dense action equals minus the reflection-form diffusion; the sign
    cancels over the two applications inside one search step.
    """
    down = _controlled_cascade(n, on_bit=0)     # subtract the row index
    up = _controlled_cascade(n, on_bit=1)       # add it back
    kb = build_kb(n, offset=n, total=2 * n)
    kb_dag = kb.inverse()
    last = 2 * n - 1
    d_layers = (
        (g.OneQubit(last, g.X, "X"),),
        (g.MultiControlled(tuple((q, 0) for q in range(n, last)), last,
                           g.Z, "Z"),) if n > 1 else ((g.OneQubit(last, g.Z, "Z"),)),
        (g.OneQubit(last, g.X, "X"),),
    )
    return down + kb_dag.layers + d_layers + kb.layers + up


def build_walk_cyclic(n: int, m: int, xstar: str):
    spec = WalkSpec("cyclic", n, xstar, m)
    a = 2 ** m - 1
    if a != 1:
        raise NotImplementedError(
            "only the complete-graph case (m=1, a=1) has a circuit "
            "realization; denser transition matrices are available in the "
            "dense reference module only")
    total = 2 * n
    u_d = cyclic_diffusion_layers(n)
    swap = (_swap_layer(zip(range(n), range(n, total))),)
    oracle_terms = ({0: g.I2},
                    {i: (-2.0 if i == 0 else 1.0) * _projector(b)
                     for i, b in enumerate(xstar)})
    u_o = ((g.KronSum(oracle_terms, "walk_oracle"),),)
    layers = u_d + swap + u_d + swap + u_o
    circ = Circuit(total, layers, "walk_cyclic",
                   {"n": n, "m": m, "xstar": xstar})
    return circ, walk_iterations(spec)


def cyclic_initial_state(n: int) -> CPState:
    return uniform_state(2 * n)


def walk_iterations(spec: WalkSpec) -> int:
    return int(math.floor(math.pi / 4.0 * math.sqrt(2 ** spec.n)))


def build_walk(spec: WalkSpec):
    if spec.family == "complete_with_loops":
        return build_walk_complete_loops(spec.n, spec.xstar)
    if spec.family == "complete_bipartite":
        return build_walk_bipartite(spec.n, spec.xstar)
    return build_walk_cyclic(spec.n, spec.m, spec.xstar)


def walk_initial_state(spec: WalkSpec) -> CPState:
    if spec.family == "complete_with_loops":
        return loops_initial_state(spec.n)
    if spec.family == "complete_bipartite":
        return bipartite_initial_state(spec.n)
    return cyclic_initial_state(spec.n)
