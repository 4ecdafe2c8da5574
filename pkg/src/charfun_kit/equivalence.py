"""Unitary equivalence of tuples and of their extended characteristic functions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .charfun import defect_data, extended_charfun
from .errors import CharfunError, FrameMismatch, NotComparable, NotUnitary
from .fock import MultiAnalyticSymbol
from .numerics import dag, operator_norm, orthonormal_range, solve_linear_nullspace
from .tuples import ErgodicProfile, RowContraction, profile_of, star_stability_norms

OMEGA_TOL = 1e-8
NULLSPACE_TOL = 1e-9


@dataclass(frozen=True)
class EquivalenceReport:
    equivalent: bool
    V: np.ndarray | None
    residual: float
    unitarity_defect: float
    depth: int
    threshold: float
    full_rank: bool = True


def equivalence_threshold(profile_A: ErgodicProfile, profile_B: ErgodicProfile, depth: int) -> float:
    """Tail-based bound max(1e-8, 10 sqrt(s_{N+1}^A + s_{N+1}^B)).

    Not the default: truncated coefficients are exact word by word, so a
    fixed 1e-8 already has no false negatives, while this bound exceeds 1
    for slowly decaying tuples and then accepts everything.
    """
    sA = star_stability_norms(profile_A, depth + 1)[-1]
    sB = star_stability_norms(profile_B, depth + 1)[-1]
    return max(1e-8, 10.0 * np.sqrt(sA + sB))


def symbols_equivalent(theta_A: MultiAnalyticSymbol, theta_B: MultiAnalyticSymbol,
                       tol: float = 1e-8) -> EquivalenceReport:
    """Look for a unitary V with theta_A = theta_B V on the stacked coefficients."""
    if theta_A.d != theta_B.d or theta_A.depth != theta_B.depth:
        raise NotComparable("symbols differ in d or depth")
    FA, FB = theta_A.target_frame, theta_B.target_frame
    if FA is not None and FB is not None and (FA.shape != FB.shape or operator_norm(FA - FB) > OMEGA_TOL):
        raise FrameMismatch("symbols have different D_omega frames")
    depth = theta_A.depth
    if theta_A.source_dim != theta_B.source_dim:
        return EquivalenceReport(False, None, np.inf, np.inf, depth, tol, False)
    TA, TB = theta_A.stacked(), theta_B.stacked()
    s = np.linalg.svd(TB, compute_uv=False)
    full = bool(s.size == 0 or s[-1] > 1e-8 * max(s[0], 1e-300))
    V = np.linalg.pinv(TB) @ TA
    residual = operator_norm(TA - TB @ V)
    unit = operator_norm(dag(V) @ V - np.eye(V.shape[1]))
    ok = full and residual <= tol and unit <= tol
    return EquivalenceReport(ok, V, residual, unit, depth, tol, full)


@dataclass(frozen=True)
class IntertwinerResult:
    U: np.ndarray | None
    nullity: int
    unitarity_defect: float
    vacuum_defect: float | None = None

    @property
    def found(self) -> bool:
        return self.U is not None


def intertwiner_system(A: RowContraction, B: RowContraction) -> np.ndarray:
    """Matrix of U -> (U A_i - B_i U, U A_i^* - B_i^* U)_i on row-major vec U."""
    n = A.n
    eye = np.eye(n)
    rows = []
    for Ai, Bi in zip(A.A, B.A):
        rows.append(np.kron(eye, Ai.T) - np.kron(Bi, eye))
        rows.append(np.kron(eye, np.conj(Ai)) - np.kron(dag(Bi), eye))
    return np.vstack(rows)


def tuples_unitarily_equivalent(A: RowContraction, B: RowContraction, tol: float = 1e-8,
                                Omega_A=None, Omega_B=None) -> IntertwinerResult:
    """Unitary U with U A_i = B_i U (and the adjoint relations), or none."""
    if A.d != B.d or A.n != B.n:
        return IntertwinerResult(None, 0, np.inf)
    N = solve_linear_nullspace(intertwiner_system(A, B), tol=NULLSPACE_TOL, scale=1.0)
    if N.shape[1] == 0:
        return IntertwinerResult(None, 0, np.inf)
    n = A.n
    U = N[:, 0].reshape(n, n)
    U = U / np.linalg.norm(U, 2)
    defect = operator_norm(dag(U) @ U - np.eye(n))
    if defect > tol:
        return IntertwinerResult(None, N.shape[1], defect)
    vac = None
    if Omega_A is not None and Omega_B is not None:
        z = np.vdot(Omega_B, U @ Omega_A)
        if abs(z) > 0:
            U = U * (np.conj(z) / abs(z))
        vac = float(np.linalg.norm(U @ Omega_A - Omega_B))
    return IntertwinerResult(U, N.shape[1], defect, vac)


def phase_distance(U, U0) -> float:
    """min over phases phi of ||U - e^{i phi} U0||, attained at phi = arg tr(U0^* U)."""
    t = np.trace(dag(U0) @ U)
    ph = t / abs(t) if abs(t) > 0 else 1.0
    return operator_norm(U - ph * U0)


@dataclass(frozen=True)
class CrosscheckReport:
    symbol: EquivalenceReport
    intertwiner: IntertwinerResult

    @property
    def agree(self) -> bool:
        return self.symbol.equivalent == self.intertwiner.found

    @property
    def equivalent(self) -> bool:
        return self.symbol.equivalent and self.intertwiner.found


def theorem61_crosscheck(A: RowContraction, B: RowContraction, depth: int = 6,
                         tol: float = 1e-8, profile_A: ErgodicProfile | None = None,
                         profile_B: ErgodicProfile | None = None) -> CrosscheckReport:
    """Run the symbol comparison and the intertwiner oracle; both must agree."""
    pA = profile_A or profile_of(A)
    pB = profile_B or profile_of(B)
    if A.d != B.d or np.linalg.norm(pA.omega - pB.omega) > OMEGA_TOL:
        raise NotComparable("tuples do not share the eigenvalue tuple omega")
    if A.n != B.n:
        rep = EquivalenceReport(False, None, np.inf, np.inf, depth, tol, False)
        return CrosscheckReport(rep, IntertwinerResult(None, 0, np.inf))
    thA = extended_charfun(pA, defect_data(A, pA.omega), depth)
    thB = extended_charfun(pB, defect_data(B, pB.omega), depth)
    return CrosscheckReport(symbols_equivalent(thA, thB, tol),
                            tuples_unitarily_equivalent(A, B, Omega_A=pA.Omega, Omega_B=pB.Omega))


def mixing_transform(A: RowContraction, u, tol: float = 1e-10) -> tuple[RowContraction, np.ndarray | None]:
    """A'_i = sum_j u_ij A_j; returns A' and omega' = u omega when A has a vector state."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (A.d, A.d) or operator_norm(dag(u) @ u - np.eye(A.d)) > tol:
        raise NotUnitary("mixing matrix is not a d x d unitary")
    mixed = RowContraction(np.einsum("ij,jab->iab", u, A.A), label=A.label)
    try:
        omega = u @ profile_of(A).omega
    except CharfunError:
        omega = None
    return mixed, omega


def kraus_residual(A: RowContraction, B: RowContraction, U=None) -> float:
    """max over matrix units E_kl of ||Z_B(U E U^*) - U Z_A(E) U^*||."""
    n = A.n
    U = np.eye(n) if U is None else np.asarray(U, dtype=complex)
    worst = 0.0
    for k in range(n):
        for l in range(n):
            E = np.zeros((n, n), dtype=complex)
            E[k, l] = 1.0
            lhs = B.cp_map(U @ E @ dag(U))
            rhs = U @ A.cp_map(E) @ dag(U)
            worst = max(worst, operator_norm(lhs - rhs))
    return worst


def aligning_unitary(src, dst) -> np.ndarray:
    """Deterministic unitary u with u src = dst for unit vectors (a complex reflection pair)."""
    src = np.asarray(src, dtype=complex) / np.linalg.norm(src)
    dst = np.asarray(dst, dtype=complex) / np.linalg.norm(dst)
    d = src.size
    # map src -> e_1 -> dst using phase-fixed Householder-type unitaries
    def to_e1(v):
        z = v[0]
        ph = z / abs(z) if abs(z) > 1e-14 else 1.0
        w = v * np.conj(ph)
        e1 = np.zeros(d, dtype=complex)
        e1[0] = 1.0
        x = w - e1
        if np.linalg.norm(x) < 1e-14:
            H = np.eye(d, dtype=complex)
        else:
            x = x / np.linalg.norm(x)
            H = np.eye(d) - 2.0 * np.outer(x, np.conj(x))
        return H * np.conj(ph)
    return dag(to_e1(dst)) @ to_e1(src)


def _hermitian(params, k: int) -> np.ndarray:
    p = np.asarray(params, dtype=float)
    H = np.zeros((k, k), dtype=complex)
    iu = np.triu_indices(k, 1)
    m = len(iu[0])
    H[iu] = p[k:k + m] + 1j * p[k + m:k + 2 * m]
    H = H + dag(H)
    H[np.diag_indices(k)] = p[:k]
    return H


def _expm_ih(H: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)) @ dag(V)


def stabilizer_unitary(omega, params) -> np.ndarray:
    """u = |w><w| + F expm(iH) F^*, fixing w = omega/|omega|; H Hermitian from k^2 real params."""
    w = np.asarray(omega, dtype=complex)
    w = w / np.linalg.norm(w)
    d = w.size
    F = orthonormal_range(np.eye(d) - np.outer(w, np.conj(w)), tol=1e-8)
    return np.outer(w, np.conj(w)) + F @ _expm_ih(_hermitian(params, d - 1)) @ dag(F)


def _sigma_min(A: RowContraction, B: RowContraction) -> float:
    s = np.linalg.svd(intertwiner_system(A, B), compute_uv=False)
    return float(s[-1] / s[0])


def _polar(M: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(M)
    return W @ Vh


def _mix(B: RowContraction, u: np.ndarray) -> RowContraction:
    return RowContraction(np.einsum("ij,jab->iab", u, B.A))


def polish_mixing(A: RowContraction, B: RowContraction, u: np.ndarray, steps: int = 50) -> np.ndarray:
    """Alternate U (smallest singular vector) and u (least squares), both polar-projected.

    Fixed points are exact solutions of U A_i U^* = sum_j u_ij B_j.
    """
    n, d = A.n, A.d
    X = B.A.reshape(d, n * n).T
    for _ in range(steps):
        _, _, Vh = np.linalg.svd(intertwiner_system(A, _mix(B, u)))
        U = _polar(np.conj(Vh[-1]).reshape(n, n))
        Y = np.stack([(U @ Ai @ dag(U)).ravel() for Ai in A.A], axis=1)
        u_new = _polar(np.linalg.lstsq(X, Y, rcond=None)[0].T)
        if operator_norm(u_new - u) < 1e-15:
            return u_new
        u = u_new
    return u


@dataclass(frozen=True)
class ConjugacyReport:
    conjugate: bool
    u: np.ndarray | None
    U: np.ndarray | None
    sigma_min: float
    kraus_residual: float | None
    crosscheck: CrosscheckReport | None

    @property
    def consistent(self) -> bool:
        return self.crosscheck is None or self.crosscheck.agree


def corollary63_check(A: RowContraction, B: RowContraction, depth: int = 6, seed: int = 0,
                      restarts: int = 8) -> ConjugacyReport:
    """Decide whether Z_A and Z_B are conjugate by a unitary.

    Kraus decompositions of one map differ by a d x d unitary mixing, so
    we first rotate omega_B onto omega_A, then search the stabilizer of
    omega_A (a copy of U(d-1)) for a mixing that admits an intertwiner.
    The best candidate is polished and only accepted after the conjugacy
    is verified on all matrix units.
    """
    if A.d != B.d:
        raise NotComparable("tuples have different d")
    pA, pB = profile_of(A), profile_of(B)
    if A.n != B.n:
        return ConjugacyReport(False, None, None, np.inf, None, None)
    u0 = aligning_unitary(pB.omega, pA.omega)
    B1 = _mix(B, u0)
    k = A.d - 1
    nparams = k * k

    w = pA.omega / np.linalg.norm(pA.omega)
    F = orthonormal_range(np.eye(A.d) - np.outer(w, np.conj(w)), tol=1e-8)
    P = np.outer(w, np.conj(w))
    # the intertwiner system is affine in the mixing matrix
    eye = np.eye(A.n)
    KA = np.stack([np.kron(eye, Ai.T) for Ai in A.A])
    KAc = np.stack([np.kron(eye, np.conj(Ai)) for Ai in A.A])
    KB = np.stack([np.kron(Bj, eye) for Bj in B1.A])
    KBh = dag(KB)

    def objective(p):
        u = P + F @ _expm_ih(_hermitian(p, k)) @ dag(F)
        top = KA - np.einsum("ij,jab->iab", u, KB)
        bot = KAc - np.einsum("ij,jab->iab", np.conj(u), KBh)
        sv = np.linalg.svd(np.concatenate([top, bot]).reshape(-1, KA.shape[2]), compute_uv=False)
        return (sv[-1] / sv[0]) ** 2

    if nparams == 0:
        best_p = np.zeros(0)
    elif nparams == 1:
        grid = np.linspace(0.0, 2 * np.pi, 73)[:-1]
        vals = [objective([t]) for t in grid]
        t0 = grid[int(np.argmin(vals))]
        step = grid[1] - grid[0]
        res = minimize_scalar(lambda t: objective([t]), bounds=(t0 - step, t0 + step),
                              method="bounded", options={"xatol": 1e-12})
        best_p = np.array([res.x])
    else:
        rng = np.random.default_rng(seed)
        best_p, best_val = None, np.inf
        for trial in range(restarts):
            p0 = np.zeros(nparams) if trial == 0 else rng.uniform(-np.pi, np.pi, nparams)
            res = minimize(objective, p0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-22, "maxiter": 2000})
            if res.fun < best_val:
                best_p, best_val = res.x, res.fun
            if best_val < 1e-16:
                break
    u = stabilizer_unitary(pA.omega, best_p) @ u0
    if _sigma_min(A, _mix(B, u)) < 1e-4:
        u = polish_mixing(A, B, u)
    B2 = _mix(B, u)
    smin = _sigma_min(A, B2)
    found = tuples_unitarily_equivalent(A, B2)
    if not found.found:
        return ConjugacyReport(False, u, None, smin, None, None)
    # U A_i = B2_i U, so Z_B(U x U^*) = U Z_A(x) U^*
    kres = kraus_residual(A, B, found.U)
    if kres > 1e-8:
        return ConjugacyReport(False, u, None, smin, kres, None)
    cross = theorem61_crosscheck(A, B2, depth=depth, profile_A=pA)
    return ConjugacyReport(True, u, found.U, smin, kres, cross)
