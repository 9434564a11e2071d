"""Rank reduction for CP states.

Two engines: direct elimination of terms that are scalar multiples of one
another, and alternating least squares run directly on the CP representation
(the target tensor is never materialized).  `reduce` wires them together
behind a strategy switch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .state import CPState, PRUNE_TOL, inner_product, norm, normalize, prune


class AlsDegenerateError(RuntimeError):
    """Every restart hit a numerically zero Gram system."""


@dataclass
class AlsConfig:
    rank: int = 2                 # target rank s
    max_sweeps: int = 100
    tol: float = 1e-10            # stop when |delta fidelity| drops below this
    restarts: int = 3
    seed: object = 0              # int or sequence of ints
    pinv_cutoff: float = 1e-12

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("target rank must be >= 1")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.pinv_cutoff <= 0:
            raise ValueError("pinv cutoff must be positive")


@dataclass
class ReductionReport:
    method: str
    rank_in: int
    rank_out: int
    fidelity: float = 1.0
    sweeps: int = 0
    restart: int = 0

    def to_json(self) -> dict:
        return {"method": self.method, "rank_in": self.rank_in,
                "rank_out": self.rank_out, "fidelity": self.fidelity,
                "sweeps": self.sweeps, "restart": self.restart}


def _term_gram(state: CPState) -> np.ndarray:
    """G[p, q] = <term_p | term_q>."""
    g = state.factors[0].conj().T @ state.factors[0]
    for j in range(1, state.n):
        g = g * (state.factors[j].conj().T @ state.factors[j])
    return g


def direct_eliminate(state: CPState, tol: float = 1e-12):
    """Merge collinear rank-1 terms and drop negligible ones.

    Terms p and q are combined when the cosine of the angle between them has
    modulus within tol of 1; q is folded into p by scaling a single factor
    column of p, so the dense vector is preserved up to roundoff.
    """
    if not 0.0 <= tol < 1.0:
        raise ValueError("tol must lie in [0, 1)")
    rank_in = state.rank
    if rank_in <= 1:
        return state, ReductionReport("direct", rank_in, rank_in)

    g = _term_gram(state)
    d = np.abs(np.diag(g).real)
    alive = d > PRUNE_TOL ** 2
    scale = np.ones(rank_in, dtype=complex)
    owner = np.full(rank_in, -1)

    root = np.sqrt(d, where=d > 0, out=np.zeros_like(d))
    for p in range(rank_in):
        if not alive[p] or owner[p] >= 0:
            continue
        owner[p] = p
        tail = slice(p + 1, rank_in)
        free = alive[tail] & (owner[tail] < 0)
        if not free.any():
            continue
        cos = g[p, tail] / (root[p] * root[tail])
        hit = free & (np.abs(np.abs(cos) - 1.0) <= tol)
        if hit.any():
            # term_q = cos * (|q|/|p|) * term_p for each merged q
            scale[p] += (cos[hit] * root[tail][hit]).sum() / root[p]
            idx = np.where(hit)[0] + p + 1
            owner[idx] = p
            alive[idx] = False

    keep = np.where(alive)[0]
    factors = [f[:, keep].copy() for f in state.factors]
    factors[0] *= scale[keep]
    out = prune(CPState(state.n, tuple(factors)))
    return out, ReductionReport("direct", rank_in, out.rank)


def _truncate_terms(state: CPState, limit: int) -> CPState:
    """Keep the `limit` largest-norm terms (ties go to the lowest index)."""
    norms = state.term_norms()
    order = np.argsort(-norms, kind="stable")[:limit]
    keep = np.sort(order)
    return CPState(state.n, tuple(f[:, keep] for f in state.factors))


# ---------------------------------------------------------------------------
# CP-ALS on an implicit target


def _hadamard_chain(mats):
    out = mats[0].copy()
    for m in mats[1:]:
        out *= m
    return out


def _solve_normal(m, gamma, cutoff):
    """Solve B = M @ pinv(Gamma) for Hermitian PSD Gamma."""
    try:
        return np.linalg.solve(gamma.T, m.T).T
    except np.linalg.LinAlgError:
        return m @ np.linalg.pinv(gamma, hermitian=True, rcond=cutoff)


def _als_instance(a_factors, n, rank_a, norm_a2, b_factors, cfg):
    """Run one ALS instance; returns (factors, fidelity, sweeps_used)."""
    s = b_factors[0].shape[1]
    # Per-mode cross and Gram matrices against the (fixed) target factors.
    cross = [a_factors[j].T @ b_factors[j].conj() for j in range(n)]   # R x s
    grams = [b_factors[j].T @ b_factors[j].conj() for j in range(n)]   # s x s

    prev_f = -1.0
    sweeps = 0
    degenerate = False
    for sweep in range(cfg.max_sweeps):
        # Suffix Hadamard products use the not-yet-updated modes; the prefix
        # is maintained with the freshly updated ones.
        suf_c = [None] * (n + 1)
        suf_g = [None] * (n + 1)
        suf_c[n] = np.ones((rank_a, s), dtype=complex)
        suf_g[n] = np.ones((s, s), dtype=complex)
        for j in range(n - 1, -1, -1):
            suf_c[j] = suf_c[j + 1] * cross[j]
            suf_g[j] = suf_g[j + 1] * grams[j]
        pre_c = np.ones((rank_a, s), dtype=complex)
        pre_g = np.ones((s, s), dtype=complex)

        for i in range(n):
            gamma = pre_g * suf_g[i + 1]
            if not np.any(np.abs(gamma) > 0):
                degenerate = True
                break
            m = a_factors[i] @ (pre_c * suf_c[i + 1])
            b = _solve_normal(m, gamma, cfg.pinv_cutoff)
            if not np.all(np.isfinite(b)):
                b = m @ np.linalg.pinv(gamma, hermitian=True,
                                       rcond=cfg.pinv_cutoff)
            if i < n - 1:
                # Column-normalize every mode but the last; the scaling
                # indeterminacy of CP otherwise lets factor magnitudes
                # drift to overflow over many sweeps.  The next solves
                # absorb the rescaling, so the sweep-end tensor (and the
                # fidelity below) are unaffected.
                col = np.linalg.norm(b, axis=0)
                nz = col > 0
                b[:, nz] /= col[nz]
            b_factors[i] = b
            cross[i] = a_factors[i].T @ b.conj()
            grams[i] = b.T @ b.conj()
            pre_c = pre_c * cross[i]
            pre_g = pre_g * grams[i]

        sweeps = sweep + 1
        if degenerate:
            break
        overlap = pre_c.sum()                 # sum of Hadamard of cross mats
        norm_b2 = abs(pre_g.sum())
        if norm_b2 <= 0 or norm_a2 <= 0:
            f = 0.0
        else:
            f = min(1.0, abs(overlap) ** 2 / (norm_a2 * norm_b2))
        if abs(f - prev_f) < cfg.tol:
            prev_f = f
            break
        prev_f = f
    return b_factors, max(prev_f, 0.0), sweeps, degenerate


def cp_als(state: CPState, cfg: AlsConfig, warm_start=None):
    """Compress `state` to rank cfg.rank with restarted ALS.

    `warm_start` (a list of n factor matrices of the target rank) is tried
    as the first candidate before the random initializations.  The winner is
    the candidate with the highest fidelity against the input; ties go to
    the earliest candidate.
    """
    rank_in = state.rank
    if rank_in <= cfg.rank:
        return state, ReductionReport("als", rank_in, rank_in)

    n = state.n
    a_factors = [np.asarray(f) for f in state.factors]
    norm_a2 = norm(state) ** 2
    input_normalized = abs(norm_a2 - 1.0) < 1e-10

    seed = cfg.seed if isinstance(cfg.seed, (list, tuple)) else [cfg.seed]
    candidates = []
    if warm_start is not None:
        ws = [np.asarray(f, dtype=complex).copy() for f in warm_start]
        if ws[0].shape[1] != cfg.rank:
            raise ValueError("warm start has the wrong rank")
        candidates.append(ws)
    n_random = cfg.restarts - (1 if warm_start is not None else 0)
    for r in range(max(n_random, 0)):
        rng = np.random.default_rng(np.random.SeedSequence(list(seed) + [r]))
        candidates.append([rng.uniform(0.0, 1.0, size=(2, cfg.rank))
                           .astype(complex) for _ in range(n)])
    if not candidates:
        candidates.append([np.asarray(f, dtype=complex).copy()
                           for f in warm_start])

    best = None
    all_degenerate = True
    for idx, init in enumerate(candidates):
        b, f, sweeps, degenerate = _als_instance(
            a_factors, n, rank_in, norm_a2, init, cfg)
        if not degenerate:
            all_degenerate = False
        if best is None or f > best[1]:
            best = (b, f, sweeps, idx)
        if f >= 1.0 - 1e-12:
            break
    if all_degenerate:
        raise AlsDegenerateError(
            "ALS Gram system vanished in every restart (rank %d -> %d)"
            % (rank_in, cfg.rank))

    b_factors, f, sweeps, idx = best
    out = CPState(n, tuple(b_factors))
    if input_normalized and norm(out) > 0:
        out = normalize(out)
    return out, ReductionReport("als", rank_in, out.rank, f, sweeps, idx)


def reduce(state: CPState, limit, strategy: str = "direct",
           als_cfg: AlsConfig | None = None, warm_start=None,
           eliminate_tol: float = 1e-12):
    """Bring the rank of `state` at or below `limit` using the strategy.

    Returns (state, ReductionReport).  The report's fidelity is the local
    fidelity of the truncation (1.0 when nothing was discarded).
    """
    if limit is not None and limit < 1:
        raise ValueError("rank limit must be >= 1")
    rank_in = state.rank
    if limit is None or rank_in <= limit:
        return state, ReductionReport("none", rank_in, rank_in)

    if strategy not in ("direct", "als", "direct_then_als"):
        raise ValueError("unknown strategy %r" % strategy)

    if strategy == "als":
        cfg = als_cfg or AlsConfig(rank=limit)
        if cfg.rank != limit:
            cfg = AlsConfig(rank=limit, max_sweeps=cfg.max_sweeps, tol=cfg.tol,
                            restarts=cfg.restarts, seed=cfg.seed,
                            pinv_cutoff=cfg.pinv_cutoff)
        return cp_als(state, cfg, warm_start=warm_start)

    before = state
    out, rep = direct_eliminate(state, eliminate_tol)
    if out.rank > limit and strategy == "direct_then_als":
        cfg = als_cfg or AlsConfig(rank=limit)
        if cfg.rank != limit:
            cfg = AlsConfig(rank=limit, max_sweeps=cfg.max_sweeps, tol=cfg.tol,
                            restarts=cfg.restarts, seed=cfg.seed,
                            pinv_cutoff=cfg.pinv_cutoff)
        out, rep2 = cp_als(out, cfg, warm_start=warm_start)
        return out, ReductionReport("direct_then_als", rank_in, out.rank,
                                    rep2.fidelity, rep2.sweeps, rep2.restart)
    if out.rank > limit:
        # Scalar-multiple elimination was not enough: keep the largest terms.
        out = _truncate_terms(out, limit)
        f = _local_fidelity(before, out)
        return out, ReductionReport("direct", rank_in, out.rank, f)
    return out, rep


def _local_fidelity(before: CPState, after: CPState) -> float:
    nb, na = norm(before), norm(after)
    if nb == 0 or na == 0:
        return 0.0
    return float(min(1.0, abs(inner_product(after, before)) ** 2 /
                 (nb ** 2 * na ** 2)))
