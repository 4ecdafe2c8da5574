"""Truncated minimal isometric dilation, the coupling oracle and the map W.

The depth-N dilation space is H (+) (Gamma_N (x) D_A), where Gamma_N is
spanned by e_alpha with |alpha| <= N.  Coordinates: the n entries of H come
first, then one block of r = dim D_A entries per word, in canonical word
order.  Because the word order is by length, the depth-N space sits inside
the depth-(N+1) space as a prefix, so embedding is zero padding.

V_i is treated as a map from depth N to depth N+1, which keeps every
identity checked here exact instead of polluted at the top level.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charfun import DefectData, poisson_hat
from .errors import BudgetExceeded, DimensionMismatch
from .fock import (WORD_BUDGET, MultiAnalyticSymbol, check_budget, fock_difference, fock_norm,
                   prepend_indices, word_count, word_index, words_up_to)
from .numerics import dag, operator_norm
from .tuples import ErgodicProfile, RowContraction, ensure_ergodic

COUPLING_PRUNE = 1e-14


@dataclass(frozen=True)
class DilationSpace:
    n: int
    d: int
    N: int
    r: int

    @property
    def total_dim(self) -> int:
        return self.n + word_count(self.d, self.N) * self.r

    def index(self, word=None, k: int = 0) -> int:
        """Coordinate of H-basis vector k (word None) or of e_word (x) xi_k."""
        if word is None:
            if not 0 <= k < self.n:
                raise IndexError(k)
            return k
        if len(word) > self.N or not 0 <= k < self.r:
            raise IndexError((word, k))
        return self.n + word_index(tuple(word), self.d) * self.r + k

    def embed(self, x, N: int) -> np.ndarray:
        """Zero-pad a vector of this space into the depth-N space."""
        x = np.asarray(x, dtype=complex)
        out = np.zeros(DilationSpace(self.n, self.d, N, self.r).total_dim, dtype=complex)
        out[:x.size] = x
        return out


@dataclass(frozen=True)
class PopescuDilation:
    """V_i(h (+) sum e_alpha (x) x_alpha) = A_i h (+) [e_0 (x) D_i h + sum e_{i alpha} (x) x_alpha]."""

    A: np.ndarray  # (d, n, n)
    Dis: np.ndarray  # (d, r, n): D_i in defect-basis coordinates

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def r(self) -> int:
        return self.Dis.shape[1]

    def space(self, N: int) -> DilationSpace:
        check_budget(self.d, N + 1)
        return DilationSpace(self.n, self.d, N, self.r)

    def apply(self, i: int, x, N: int) -> np.ndarray:
        """V_i x for x in the depth-N space (1-based i); result at depth N+1."""
        x = np.asarray(x, dtype=complex)
        n, r = self.n, self.r
        if x.shape[0] != self.space(N).total_dim:
            raise DimensionMismatch(f"vector of length {x.shape[0]} is not a depth-{N} vector")
        out = np.zeros((self.space(N + 1).total_dim,) + x.shape[1:], dtype=complex)
        h = x[:n]
        out[:n] = self.A[i - 1] @ h
        out[n:n + r] = self.Dis[i - 1] @ h
        blocks = x[n:].reshape((-1, r) + x.shape[1:])
        tgt = out[n:].reshape((-1, r) + x.shape[1:])
        tgt[prepend_indices(self.d, N, i)] = blocks
        return out

    def adjoint(self, i: int, y, N: int) -> np.ndarray:
        """V_i^* y for y in the depth-(N+1) space; result at depth N."""
        y = np.asarray(y, dtype=complex)
        n, r = self.n, self.r
        if y.shape[0] != self.space(N + 1).total_dim:
            raise DimensionMismatch(f"vector of length {y.shape[0]} is not a depth-{N + 1} vector")
        out = np.zeros((self.space(N).total_dim,) + y.shape[1:], dtype=complex)
        out[:n] = dag(self.A[i - 1]) @ y[:n] + dag(self.Dis[i - 1]) @ y[n:n + r]
        blocks = y[n:].reshape((-1, r) + y.shape[1:])
        out[n:] = blocks[prepend_indices(self.d, N, i)].reshape((-1,) + y.shape[1:])
        return out

    def matrix(self, i: int, N: int) -> np.ndarray:
        return self.apply(i, np.eye(self.space(N).total_dim, dtype=complex), N)


def popescu_dilation(A: RowContraction, defects: DefectData) -> PopescuDilation:
    n = A.n
    Dis = np.stack([defects.D_i(i, n) for i in range(A.d)])
    return PopescuDilation(A=np.array(A.A), Dis=Dis)


def omega_dilation(omega, frame: np.ndarray) -> PopescuDilation:
    """Dilation of the 1 x 1 tuple omega; its defect space is D_omega with the given frame.

    For a unit vector omega the defect projection is 1 - |Omega_P><Omega_P|,
    so D_i c = c * frame^* (e_i - omega_i Omega_P) = c * frame^* e_i.
    """
    omega = np.asarray(omega, dtype=complex)
    d = omega.size
    A = omega.reshape(d, 1, 1)
    Dis = np.stack([dag(frame)[:, i:i + 1] for i in range(d)])
    return PopescuDilation(A=A, Dis=Dis)


def dilation_property_residual(dil: PopescuDilation, N: int) -> float:
    """max_{|alpha| <= N} || p_H V_alpha |_H - A_alpha ||"""
    worst = 0.0
    n = dil.n
    # breadth-first: V_{a alpha} = V_a V_alpha, one application per word
    level = {(): np.vstack([np.eye(n), np.zeros((dil.space(0).total_dim - n, n))])}
    prods = {(): np.eye(n, dtype=complex)}
    for k in range(N + 1):
        for w, X in level.items():
            worst = max(worst, operator_norm(X[:n] - prods[w]))
        if k == N:
            break
        nxt, nprods = {}, {}
        for w, X in level.items():
            for a in range(1, dil.d + 1):
                nxt[(a,) + w] = dil.apply(a, X, k)
                nprods[(a,) + w] = dil.A[a - 1] @ prods[w]
        level, prods = nxt, nprods
    return worst


def isometry_residual(dil: PopescuDilation, N: int) -> float:
    """max_{i, j} || V_i^* V_j - delta_ij || on the depth-N space."""
    mats = [dil.matrix(i, N) for i in range(1, dil.d + 1)]
    eye = np.eye(dil.space(N).total_dim)
    worst = 0.0
    for i, Vi in enumerate(mats):
        for j, Vj in enumerate(mats):
            worst = max(worst, operator_norm(dag(Vi) @ Vj - (eye if i == j else 0)))
    return worst


def cuntz_state_check(dil: PopescuDilation, Omega, omega, N: int) -> float:
    """max over |alpha|, |beta| <= N of |<Omega, V_alpha V_beta^* Omega> - omega_alpha conj(omega_beta)|."""
    Omega = np.asarray(Omega, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    words = words_up_to(dil.d, N)
    # V_beta^* Omega lands in the depth-0 space, which is H (+) e_0 (x) D_A
    down = {}
    for beta in words:
        y = dil.space(0).embed(Omega, len(beta))
        for k, a in enumerate(beta):
            y = dil.adjoint(a, y, len(beta) - k - 1)
        down[beta] = y
    # <Omega, V_alpha y> = <V_alpha^* Omega, y>
    worst = 0.0
    for alpha in words:
        wa = np.prod(omega[np.array(alpha, dtype=int) - 1]) if alpha else 1.0
        for beta in words:
            wb = np.prod(omega[np.array(beta, dtype=int) - 1]) if beta else 1.0
            val = np.vdot(down[alpha], down[beta])
            worst = max(worst, abs(val - wa * np.conj(wb)))
    return worst


def minimality_rank(dil: PopescuDilation, N: int, tol: float = 1e-9) -> tuple[int, int]:
    """(rank of span{V_alpha h : |alpha| <= N}, dim of H (+) Gamma_{N-1} (x) D_A)."""
    cols = []
    n = dil.n
    level = [np.vstack([np.eye(n), np.zeros((dil.space(0).total_dim - n, n))])]
    for k in range(N + 1):
        cols.extend(dil.space(k).embed(X[:, c], N) for X in level for c in range(n))
        if k == N:
            break
        level = [dil.apply(a, X, k) for X in level for a in range(1, dil.d + 1)]
    M = np.column_stack(cols)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > tol * s[0]))
    expected = n + (word_count(dil.d, N - 1) * dil.r if N >= 1 else 0)
    return rank, expected


@dataclass
class CouplingState:
    """sum_beta h_beta (x) eps_beta after ``step`` applications of u^*."""

    step: int
    coeffs: dict = field(default_factory=dict)

    def norm_sq(self) -> float:
        return float(sum(np.vdot(v, v).real for v in self.coeffs.values()))


def coupling_start(h) -> CouplingState:
    return CouplingState(0, {(): np.asarray(h, dtype=complex)})


def coupling_step(state: CouplingState, A: RowContraction, prune: float = COUPLING_PRUNE,
                  budget: int = WORD_BUDGET) -> CouplingState:
    """Apply u^* on the next tensor leg: h_beta -> sum_i A_i^* h_beta (x) eps_i."""
    adj = dag(np.asarray(A.A))
    out = {}
    for beta, h in state.coeffs.items():
        for i, Ai in enumerate(adj):
            v = Ai @ h
            if np.linalg.norm(v) > prune:
                out[beta + (i + 1,)] = v
        if len(out) > budget:
            raise BudgetExceeded(f"coupling state exceeds {budget} words")
    return CouplingState(state.step + 1, out)


@dataclass
class OracleCoefficients:
    vacuum: complex
    coeffs: dict
    residual_mass: float
    steps: int


def product_intertwiner_coefficients(A: RowContraction, profile: ErgodicProfile, h, steps: int,
                                     check_ergodic: bool = False) -> OracleCoefficients:
    """Fock coefficients of C-hat h read off from ``steps`` coupling steps.

    Each leg splits against Omega_P = conj(omega) and D_omega.  A word with
    prefix alpha, a D_omega leg, then only Omega_P legs becomes e_alpha;
    legs carry <Omega_P, eps_j> = omega_j.  Words with |alpha| < steps are
    final; the rest of the mass, sum ||Q h_beta||^2, is still unresolved.
    """
    if check_ergodic:
        ensure_ergodic(A, profile=profile)
    d = A.d
    omega = np.asarray(profile.omega, dtype=complex)
    P = profile.Omega_P / np.linalg.norm(profile.Omega_P)
    proj = np.eye(d) - np.outer(P, np.conj(P))
    state = coupling_start(h)
    for _ in range(steps):
        state = coupling_step(state, A)
    R = {beta: np.vdot(profile.Omega, v) for beta, v in state.coeffs.items()}
    residual = float(sum(np.linalg.norm(profile.Q @ v) ** 2 for v in state.coeffs.values()))
    coeffs = {}
    for p in range(steps - 1, -1, -1):
        parents = {}
        for beta, val in R.items():
            parents.setdefault(beta[:-1], np.zeros(d, dtype=complex))[beta[-1] - 1] += val
        for alpha, vec in parents.items():
            coeffs[alpha] = proj @ vec
        R = {alpha: vec @ omega for alpha, vec in parents.items()}
    return OracleCoefficients(vacuum=R.get((), 0.0), coeffs=coeffs, residual_mass=residual,
                              steps=steps)


def w_matrix(profile: ErgodicProfile, defects: DefectData, theta: MultiAnalyticSymbol,
             C: MultiAnalyticSymbol, N: int, T: int) -> np.ndarray:
    """Dense W from the depth-N dilation space of A to the depth-T space of omega.

    W h = C-hat h and W (e_alpha (x) xi) = (L_alpha (x) 1) M_theta xi, with
    Fock values in D_omega frame coordinates.  ``theta`` and ``C`` must
    reach depth >= T.
    """
    d, n, r = profile.d, profile.n, defects.rank
    F = defects.omega_defect_frame
    k = F.shape[1]
    src = DilationSpace(n, d, N, r)
    tgt = DilationSpace(1, d, T, k)
    check_budget(d, T)
    W = np.zeros((tgt.total_dim, src.total_dim), dtype=complex)
    W[0, :n] = np.conj(profile.Omega)
    QF = dag(F)
    for beta, c in C.coeffs.items():
        if len(beta) <= T:
            row = tgt.index(beta)
            W[row:row + k, :n] = QF @ c @ profile.Q
    for alpha in words_up_to(d, N):
        col = src.index(alpha)
        for gamma, t in theta.coeffs.items():
            if len(alpha) + len(gamma) <= T:
                row = tgt.index(alpha + gamma)
                W[row:row + k, col:col + r] += t
    return W


def w_isometry_defect(profile: ErgodicProfile, defects: DefectData, theta: MultiAnalyticSymbol,
                      N: int, T: int | None = None, C: MultiAnalyticSymbol | None = None) -> float:
    """|| W^* W - 1 || for W from depth N to depth T (dense; small cases only)."""
    T = theta.depth if T is None else T
    C = poisson_hat(profile, T) if C is None else C
    W = w_matrix(profile, defects, theta, C, N, T)
    return operator_norm(dag(W) @ W - np.eye(W.shape[1]))


def _w_apply(profile, F, theta, C, h, blocks: dict, T: int):
    """W on columns h (+) sum e_alpha (x) blocks[alpha]: (vacuum row, {word: D_omega coords}).

    ``h`` is n x m and every block r x m, so m vectors go through at once.
    """
    vac = np.conj(profile.Omega) @ h
    out = {}
    if np.any(h):
        hr = profile.Q @ h
        for beta, c in C.coeffs.items():
            if len(beta) <= T:
                out[beta] = dag(F) @ (c @ hr)
    by_len = sorted(theta.coeffs.items(), key=lambda kv: len(kv[0]))
    lengths = [len(g) for g, _ in by_len]
    for alpha, x in blocks.items():
        stop = np.searchsorted(lengths, T - len(alpha), side="right")
        for gamma, t in by_len[:stop]:
            key = alpha + gamma
            out[key] = out.get(key, 0) + t @ x
    return vac, out


def _column_norms(vac, fock: dict) -> np.ndarray:
    sq = np.abs(vac) ** 2
    if fock:
        sq = sq + np.sum(np.abs(np.stack(list(fock.values()))) ** 2, axis=(0, 1))
    return np.sqrt(sq)


@dataclass(frozen=True)
class IntertwiningReport:
    residual: float
    N: int
    T: int
    vectors: int


def intertwining_check(profile: ErgodicProfile, defects: DefectData, theta: MultiAnalyticSymbol,
                       N: int, T: int | None = None, C: MultiAnalyticSymbol | None = None) -> IntertwiningReport:
    """max over i and basis vectors x of depth N-1 of ||W V_i x - V~_i W x||.

    W V_i x is evaluated up to depth T and V~_i W x from W up to depth T-1.
    Vectors are word dictionaries, so nothing of size d^T x d^N is formed.
    ``theta`` and ``C`` must reach depth >= T (default T = theta.depth).
    """
    T = theta.depth if T is None else T
    if T < 1 or N < 1:
        raise ValueError("need N >= 1 and T >= 1")
    if C is None:
        C = poisson_hat(profile, T)
    F = defects.omega_defect_frame
    n, r, d = profile.n, defects.rank, profile.d
    A = profile.tuple.A
    omega = profile.omega
    Dis = [defects.D_i(i, n) for i in range(d)]
    groups = [(np.eye(n, dtype=complex), {})]
    for alpha in words_up_to(d, N - 1):
        groups.append((np.zeros((n, r), dtype=complex), {alpha: np.eye(r, dtype=complex)}))
    worst = 0.0
    count = 0
    for h, blocks in groups:
        count += h.shape[1]
        vac, fock = _w_apply(profile, F, theta, C, h, blocks, T - 1)
        for i in range(d):
            vblocks = {(i + 1,) + a: x for a, x in blocks.items()}
            if np.any(h):
                vblocks[()] = Dis[i] @ h
            lv, lf = _w_apply(profile, F, theta, C, A[i] @ h, vblocks, T)
            rf = {(i + 1,) + b: v for b, v in fock.items()}
            rf[()] = rf.get((), 0) + np.outer(dag(F)[:, i], vac)
            res = _column_norms(lv - omega[i] * vac, fock_difference(lf, rf))
            worst = max(worst, float(res.max()))
    return IntertwiningReport(residual=worst, N=N, T=T, vectors=count)
