"""Brute-force state-vector reference used only for testing and verification.

Everything here is O(2^n) and guarded by a qubit cap (default 14, override
with the CPSIM_DENSE_CAP environment variable).
"""

from __future__ import annotations

import os

import numpy as np

from . import gates
from .state import CPState

DEFAULT_CAP = 14


def dense_cap() -> int:
    return int(os.environ.get("CPSIM_DENSE_CAP", DEFAULT_CAP))


def _check_cap(n):
    cap = dense_cap()
    if n > cap:
        raise ValueError(
            "dense path refused at n=%d (cap %d; set CPSIM_DENSE_CAP to raise)"
            % (n, cap))


def materialize(x: CPState, chunk: int = 256) -> np.ndarray:
    """Expand a CP state to its full 2^n vector, qubit 0 most significant."""
    _check_cap(x.n)
    out = np.zeros(2 ** x.n, dtype=complex)
    for lo in range(0, x.rank, chunk):
        hi = min(lo + chunk, x.rank)
        block = x.factors[0][:, lo:hi]
        for j in range(1, x.n):
            f = x.factors[j][:, lo:hi]
            block = (block[:, None, :] * f[None, :, :]).reshape(-1, hi - lo)
        out += block.sum(axis=1)
    return out


def from_dense(vec: np.ndarray, n: int, tol: float = 0.0) -> CPState:
    """Rewrite a dense vector as a CP state with one term per nonzero entry."""
    _check_cap(n)
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    if vec.shape[0] != 2 ** n:
        raise ValueError("vector length is not 2^n")
    idx = np.nonzero(np.abs(vec) > tol)[0]
    if idx.size == 0:
        from .state import zero_state
        return zero_state(n)
    factors = []
    for j in range(n):
        bits = (idx >> (n - 1 - j)) & 1
        f = np.zeros((2, idx.size), dtype=complex)
        f[bits, np.arange(idx.size)] = 1.0
        factors.append(f)
    factors[0][:, :] *= vec[idx]
    return CPState(n, tuple(factors))


def _kron_terms_dense(psi: np.ndarray, n: int, terms) -> np.ndarray:
    """Apply a sum of elementary tensor-product operators to a dense vector."""
    shape = (2,) * n
    src = psi.reshape(shape)
    out = np.zeros_like(src)
    for term in terms:
        cur = src
        for q, mat in term.items():
            cur = np.tensordot(np.asarray(mat, dtype=complex), cur,
                               axes=([1], [q]))
            cur = np.moveaxis(cur, 0, q)
        out = out + cur
    return out.reshape(-1)


def apply_gate_dense(vec: np.ndarray, gate, n: int) -> np.ndarray:
    _check_cap(n)
    if isinstance(gate, gates.OneQubit):
        return _kron_terms_dense(vec, n, [{gate.target: gate.matrix}])
    if isinstance(gate, gates.Swap):
        psi = vec.reshape((2,) * n)
        return np.swapaxes(psi, gate.q1, gate.q2).reshape(-1)
    if isinstance(gate, gates.Controlled):
        proj_pass = gates.P0 if gate.on_bit == 1 else gates.P1
        proj_act = gates.P1 if gate.on_bit == 1 else gates.P0
        return _kron_terms_dense(vec, n, [
            {gate.control: proj_pass},
            {gate.control: proj_act, gate.target: gate.matrix},
        ])
    if isinstance(gate, gates.MultiControlled):
        corr = {q: (gates.P1 if b == 1 else gates.P0) for q, b in gate.controls}
        corr[gate.target] = gate.matrix - gates.I2
        return _kron_terms_dense(vec, n, [{}, corr])
    if isinstance(gate, gates.KronSum):
        return _kron_terms_dense(vec, n, gate.terms)
    raise TypeError("unknown gate %r" % (gate,))


def apply_layers_dense(vec: np.ndarray, layers, n: int) -> np.ndarray:
    for layer in layers:
        for g in layer:
            vec = apply_gate_dense(vec, g, n)
    return vec


def circuit_matrix(layers, n: int) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a layered circuit (small n only)."""
    _check_cap(n)
    dim = 2 ** n
    cols = np.eye(dim, dtype=complex)
    out = np.empty((dim, dim), dtype=complex)
    for c in range(dim):
        out[:, c] = apply_layers_dense(cols[:, c], layers, n)
    return out


def dft_matrix(n: int) -> np.ndarray:
    """F^(N), N = 2^n, with F[j, k] = omega^{jk} / sqrt(N), omega = e^{2 pi i/N}."""
    dim = 2 ** n
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    return np.exp(2j * np.pi * j * k / dim) / np.sqrt(dim)


def shift_matrix(n: int, step: int = 1) -> np.ndarray:
    """Cyclic shift permutation: column x has its 1 in row (x + step) mod N."""
    dim = 2 ** n
    mat = np.zeros((dim, dim))
    mat[(np.arange(dim) + step) % dim, np.arange(dim)] = 1.0
    return mat


def circulant_transition(n: int, a: int) -> np.ndarray:
    """P with P[y, x] = 1/(N-a) when (y-x) mod N >= a, else 0."""
    dim = 2 ** n
    y, x = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    return np.where((y - x) % dim >= a, 1.0 / (dim - a), 0.0)


# ---------------------------------------------------------------------------
# Dense CP-ALS, used as the best-rank-s reference in compression tests.

_LETTERS = "abcdefghij"


def _dense_mttkrp(target, facs, i, n):
    """M^(i)[x, k] = sum_T T[..x..] prod_{j != i} conj(B^(j)[i_j, k])."""
    operands = [target]
    subs = [_LETTERS[:n]]
    for j in range(n):
        if j == i:
            continue
        operands.append(facs[j].conj())
        subs.append(_LETTERS[j] + "z")
    expr = ",".join(subs) + "->" + _LETTERS[i] + "z"
    return np.einsum(expr, *operands, optimize=True)


def _dense_cp_als(vec, n, s, rng, sweeps=200, tol=1e-12):
    target = vec.reshape((2,) * n)
    facs = [rng.uniform(0.0, 1.0, size=(2, s)).astype(complex) for _ in range(n)]
    norm_t2 = float(np.vdot(vec, vec).real)
    prev = -1.0
    for _ in range(sweeps):
        for i in range(n):
            m = _dense_mttkrp(target, facs, i, n)
            gam = np.ones((s, s), dtype=complex)
            for j in range(n):
                if j != i:
                    gam *= facs[j].T @ facs[j].conj()
            facs[i] = _solve_gram(m, gam)
        approx = _cp_to_dense(facs, n)
        num = abs(np.vdot(approx, vec)) ** 2
        den = norm_t2 * float(np.vdot(approx, approx).real)
        f = num / den if den > 0 else 0.0
        if abs(f - prev) < tol:
            break
        prev = f
    return facs, prev


def _cp_to_dense(facs, n):
    vec = facs[0]
    for j in range(1, n):
        vec = (vec[:, None, :] * facs[j][None, :, :]).reshape(-1, facs[0].shape[1])
    return vec.sum(axis=1)


def _solve_gram(m, gam):
    try:
        return np.linalg.solve(gam.T, m.T).T
    except np.linalg.LinAlgError:
        return m @ np.linalg.pinv(gam, hermitian=True, rcond=1e-12)


def best_rank_fidelity(vec: np.ndarray, n: int, s: int, restarts: int = 20,
                       seed: int = 0) -> float:
    """Fidelity of the best rank-s CP approximation found by dense ALS."""
    if n > 10:
        raise ValueError("best_rank_fidelity is limited to n <= 10")
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    best = 0.0
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        _, f = _dense_cp_als(vec, n, s, rng)
        best = max(best, f)
        if best >= 1.0 - 1e-12:
            break
    return min(1.0, best)
