"""Low-rank Arnoldi iteration with full reorthogonalization.

The iteration is generic over the vector representation: dense spatial
vectors (initial-condition and steady modes) or low-rank space-time fields
(distributed-source mode).  Orthogonalization is modified Gram-Schmidt with
one reorthogonalization pass (MGS2); in low-rank mode every basis update is
recompressed to the truncation policy, which is what keeps storage at
O(n_x + n_t) per vector.

Stopping combines a hard iteration cap with a Ritz refresh: the run ends
early once every Ritz value above the retention threshold is stable between
refreshes and the rest sit below the threshold.  Truncated Arnoldi has no
exact residual bound, so stability-between-refreshes stands in for one.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .lowrank import (
    LowRankMat,
    TruncationPolicy,
    lr_add,
    lr_dot,
    lr_norm,
    lr_scale,
    lr_singular_values,
    lr_truncate,
)

BREAKDOWN_TOL = 1e-14


@dataclass(frozen=True)
class StopRule:
    """Iteration cap plus eigenvalue-threshold stopping.

    on_breakdown selects what happens when an invariant subspace is reached
    (H_{j+1,j} <= 1e-14): "stop" terminates cleanly; "restart" continues
    with a fresh direction orthogonal to the basis, which is required when
    the full spectrum of an operator with high eigenvalue multiplicity is
    needed (rounding noise alone does not reseed every copy).
    """

    m_a: int
    eps_eig: float = 1e-1
    check_every: int = 10
    stability_rtol: float = 1e-3
    on_breakdown: str = "stop"
    restart_seed: int = 0

    def __post_init__(self):
        if self.m_a < 1:
            raise ValueError(f"m_a must be >= 1, got {self.m_a}")
        if self.eps_eig <= 0:
            raise ValueError(f"eps_eig must be positive, got {self.eps_eig}")
        if self.on_breakdown not in ("stop", "restart"):
            raise ValueError(f"on_breakdown must be stop or restart, got {self.on_breakdown!r}")


@dataclass
class ArnoldiResult:
    H: np.ndarray                 # (m+1, m) Hessenberg matrix
    basis: list                   # m (or m+1) orthonormal vectors
    rank_trace: list[int]         # max intermediate rank per iteration
    ritz_values: np.ndarray       # complex, descending real part
    ritz_vectors: list            # same representation as the basis
    converged_count: int
    breakdown: bool               # an invariant subspace was reached
    iterations: int
    diagnostics: list[tuple]      # (j, h_subdiag, max_rank, seconds)
    restarts: int = 0

    def gram_defect(self) -> float:
        """max |<v_i, v_j> - δ_ij| over the stored basis."""
        ops = _ops_for(self.basis[0])
        m = len(self.basis)
        worst = 0.0
        for i in range(m):
            for j in range(i, m):
                g = ops.dot(self.basis[i], self.basis[j])
                worst = max(worst, abs(g - (1.0 if i == j else 0.0)))
        return worst


class _DenseOps:
    """Vector operations for dense ndarray iterates."""

    def __init__(self, pol: TruncationPolicy):
        self.pol = pol

    @staticmethod
    def dot(a, b) -> float:
        return float(np.dot(a, b))

    @staticmethod
    def norm(a) -> float:
        return float(np.linalg.norm(a))

    @staticmethod
    def scale(a, c):
        return a * c

    @staticmethod
    def sub(w, h, v):
        return w - h * v

    @staticmethod
    def compress(w, final=False):
        return w

    @staticmethod
    def rank(w) -> int:
        return 0

    @staticmethod
    def combine(basis, coeffs):
        out = np.zeros_like(basis[0], dtype=float)
        for v, c in zip(basis, coeffs):
            out = out + float(np.real(c)) * v
        return out


class _LowRankOps:
    """Vector operations for LowRankMat iterates, with working-rank control."""

    def __init__(self, pol: TruncationPolicy, work_cap: int = 48):
        self.pol = pol
        self.work_cap = work_cap

    @staticmethod
    def dot(a, b) -> float:
        return lr_dot(a, b)

    @staticmethod
    def norm(a) -> float:
        return lr_norm(a)

    @staticmethod
    def scale(a, c):
        return lr_scale(a, c)

    def sub(self, w, h, v):
        w = lr_add(w, lr_scale(v, -h))
        if w.r > self.work_cap:
            w = lr_truncate(w, self.pol)
        return w

    def compress(self, w, final=False):
        return lr_truncate(w, self.pol)

    @staticmethod
    def rank(w) -> int:
        return w.r

    def combine(self, basis, coeffs):
        out = LowRankMat.zeros(*basis[0].shape)
        for v, c in zip(basis, coeffs):
            out = lr_add(out, lr_scale(v, float(np.real(c))))
            if out.r > self.work_cap:
                out = lr_truncate(out, self.pol)
        return lr_truncate(out, self.pol)


def _ops_for(v, pol: TruncationPolicy | None = None):
    pol = pol or TruncationPolicy()
    return _LowRankOps(pol) if isinstance(v, LowRankMat) else _DenseOps(pol)


def _hessenberg_eigs(Hm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the leading square Hessenberg block, descending real part."""
    try:
        vals, vecs = np.linalg.eig(Hm)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"dense Hessenberg eigensolve failed: {exc}") from exc
    order = np.argsort(-vals.real)
    return vals[order], vecs[:, order]


def ritz_pairs(H: np.ndarray, basis: list, pol: TruncationPolicy | None = None) -> list:
    """Ritz pairs from the leading m×m Hessenberg block.

    Values are reported as complex (imaginary parts are not dropped); the
    vectors are basis combinations using the real part of the coefficients,
    normalized, and recompressed in low-rank mode.

    When the block is numerically symmetric (the operator is a Hessian and
    full reorthogonalization keeps H = VᵀAV symmetric up to truncation
    noise), the combination coefficients come from a symmetric eigensolve:
    general eigenvectors are arbitrarily skewed inside degenerate clusters,
    which would bias every downstream V-based quantity.
    """
    m = H.shape[1]
    Hm = H[:m, :m]
    vals, vecs = _hessenberg_eigs(Hm)
    scale = float(np.abs(Hm).max()) if m else 0.0
    defect = float(np.abs(Hm - Hm.T).max()) if m else 0.0
    if scale > 0 and defect <= 1e-6 * scale:
        sym_vals, sym_vecs = np.linalg.eigh(0.5 * (Hm + Hm.T))
        vecs = sym_vecs[:, ::-1]  # descending, orthonormal columns
    ops = _ops_for(basis[0], pol)
    pairs = []
    for i in range(m):
        v = ops.combine(basis[:m], vecs[:, i])
        nrm = ops.norm(v)
        if nrm > 0:
            v = ops.scale(v, 1.0 / nrm)
        pairs.append((complex(vals[i]), v))
    return pairs


def _fresh_direction(basis: list, ops, seed: int):
    """Seeded random direction orthogonalized against the basis, or None.

    Used by breakdown restarts to reach eigenspace copies that a single
    Krylov sequence cannot produce.  Returns None when the complement of the
    basis span is numerically empty.
    """
    rng = np.random.default_rng(0x5EED + seed)
    proto = basis[0]
    if isinstance(proto, LowRankMat):
        n_x, n_t = proto.shape
        w = LowRankMat(rng.standard_normal((n_x, 2)), rng.standard_normal((n_t, 2)))
    else:
        w = rng.standard_normal(proto.shape[0])
    nrm = ops.norm(w)
    w = ops.scale(w, 1.0 / nrm)
    for _pass in range(2):
        for v in basis:
            w = ops.sub(w, ops.dot(w, v), v)
        w = ops.compress(w)
    nrm = ops.norm(w)
    if nrm <= 1e-6:
        return None
    return ops.compress(ops.scale(w, 1.0 / nrm))


def _stop_ready(
    vals: np.ndarray,
    prev: np.ndarray | None,
    stop: StopRule,
) -> tuple[bool, int]:
    """Check the refresh-to-refresh stopping condition.

    Returns (should_stop, count_above_threshold).  Values above eps_eig must
    be matched in count and stable to stability_rtol against the previous
    refresh; when nothing exceeds the threshold the leading value itself
    must have stabilized (guards against stopping while the spectrum is
    still emerging).
    """
    above = int(np.sum(vals.real >= stop.eps_eig))
    if prev is None:
        return False, above
    prev_above = int(np.sum(prev.real >= stop.eps_eig))
    if above != prev_above:
        return False, above
    n_check = above if above > 0 else min(1, len(vals), len(prev))
    if n_check > len(prev):
        return False, above
    for i in range(n_check):
        denom = max(abs(vals[i].real), abs(prev[i].real), 1e-300)
        if abs(vals[i].real - prev[i].real) / denom > stop.stability_rtol:
            return False, above
    return True, above


def lr_arnoldi(
    apply,
    v1,
    pol: TruncationPolicy,
    stop: StopRule,
    rank_source: list | None = None,
) -> ArnoldiResult:
    """Arnoldi iteration for a self-adjoint-up-to-truncation operator action.

    Parameters
    ----------
    apply : callable
        Operator action on one vector; must accept and return the same
        representation as ``v1`` (ndarray or LowRankMat) and is expected to
        truncate its own output in low-rank mode.
    v1 : ndarray or LowRankMat
        Start vector; normalized internally if needed.
    pol : TruncationPolicy
        Recompression policy for basis updates (low-rank mode).
    stop : StopRule
        Iteration cap and Ritz stopping thresholds.
    rank_source : list, optional
        A list the operator appends per-application max ranks to (e.g., a
        HessianContext.rank_trace); consumed for the per-iteration trace.
    """
    ops = _ops_for(v1, pol)
    nrm = ops.norm(v1)
    if nrm == 0:
        raise ValueError("start vector must be nonzero")
    v1 = ops.compress(ops.scale(v1, 1.0 / nrm))

    basis = [v1]
    H = np.zeros((stop.m_a + 1, stop.m_a))
    rank_trace: list[int] = []
    diagnostics: list[tuple] = []
    prev_vals: np.ndarray | None = None
    converged_count = 0
    breakdown = False
    restarts = 0
    j_done = 0
    src_seen = len(rank_source) if rank_source is not None else 0

    for j in range(stop.m_a):
        t0 = _time.perf_counter()
        w = apply(basis[j])

        apply_rank = ops.rank(w)
        if rank_source is not None and len(rank_source) > src_seen:
            apply_rank = max(apply_rank, max(rank_source[src_seen:]))
            src_seen = len(rank_source)

        for _pass in range(2):  # MGS with one reorthogonalization pass
            for i in range(j + 1):
                hij = ops.dot(w, basis[i])
                H[i, j] += hij
                w = ops.sub(w, hij, basis[i])
            w = ops.compress(w)

        h_sub = ops.norm(w)
        H[j + 1, j] = h_sub
        max_rank = max(apply_rank, ops.rank(w))
        rank_trace.append(max_rank)
        diagnostics.append((j + 1, h_sub, max_rank, _time.perf_counter() - t0))
        j_done = j + 1

        if h_sub <= BREAKDOWN_TOL:
            breakdown = True  # invariant subspace reached
            if stop.on_breakdown != "restart" or j + 1 >= stop.m_a:
                break
            H[j + 1, j] = 0.0
            fresh = _fresh_direction(basis, ops, stop.restart_seed + restarts)
            if fresh is None:  # orthogonal complement exhausted
                break
            restarts += 1
            basis.append(fresh)
            continue
        basis.append(ops.compress(ops.scale(w, 1.0 / h_sub)))

        if (j + 1) % stop.check_every == 0 and j + 1 < stop.m_a:
            vals, _ = _hessenberg_eigs(H[: j + 1, : j + 1])
            ready, converged_count = _stop_ready(vals, prev_vals, stop)
            prev_vals = vals
            if ready:
                break

    Hout = H[: j_done + 1, : j_done]
    pairs = ritz_pairs(Hout, basis, pol)
    vals = np.array([p[0] for p in pairs])
    if prev_vals is not None:
        _, converged_count = _stop_ready(vals, prev_vals, stop)
    else:
        converged_count = int(np.sum(vals.real >= stop.eps_eig))

    return ArnoldiResult(
        H=Hout,
        basis=basis,
        rank_trace=rank_trace,
        ritz_values=vals,
        ritz_vectors=[p[1] for p in pairs],
        converged_count=converged_count,
        breakdown=breakdown,
        iterations=j_done,
        diagnostics=diagnostics,
        restarts=restarts,
    )


def rank_one_check(vec, reshape: tuple[int, int] | None = None,
                   tail_tol: float = 1e-6) -> tuple[int, float]:
    """Numerical separation rank of a vector under its natural 2-way layout.

    Dense vectors are reshaped to ``reshape`` (e.g. (n_side, n_side) for
    spatial modes); LowRankMat inputs use their own factorization.  Returns
    (smallest r with relative singular tail <= tail_tol, sigma_2/sigma_1).
    """
    if isinstance(vec, LowRankMat):
        s = lr_singular_values(vec)
    else:
        if reshape is None:
            raise ValueError("dense input needs an explicit 2-way reshape")
        s = np.linalg.svd(np.asarray(vec, dtype=float).reshape(reshape),
                          compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, 0.0
    total = float(np.linalg.norm(s))
    tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
    r = int(np.searchsorted(-tail, -tail_tol * total, side="left"))
    ratio = float(s[1] / s[0]) if s.size > 1 else 0.0
    return r, ratio
