"""Extended characteristic function of an ergodic coisometric tuple.

All objects are truncated at a word depth N.  Coefficients are exact per
word; truncation only removes words longer than N.

Coordinate conventions
----------------------
* ``poisson_hat`` coefficients ``c_alpha`` are d x n matrices acting on
  ambient vectors of C^n (they vanish on Omega) with values in C^d.
* ``extended_charfun`` coefficients are (d-1) x r matrices: source is the
  orthonormal basis of D_A (columns of ``DefectData.basis_DA``), target is
  the frame of D_omega (``DefectData.omega_defect_frame``).
* The Popescu objects for the compressed tuple live in ring coordinates
  (``ErgodicProfile.ring_basis``), with targets expressed in an orthonormal
  basis of the range of the ring defect ``Dring_star``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, FrameMembership, NotCoisometric, NotIsometric, NotStarStable
from .fock import WORD_BUDGET, MultiAnalyticSymbol, fock_norm
from .numerics import DEFAULT_TOL, dag, operator_norm, orthonormal_range, psd_sqrt
from .tuples import ErgodicProfile, RowContraction, _decay_until, ensure_ergodic, validate

PRUNE_TOL = 1e-15
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class DefectData:
    D: np.ndarray
    basis_DA: np.ndarray
    omega_defect_frame: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis_DA.shape[1]

    def D_i(self, i: int, n: int) -> np.ndarray:
        """h -> D(0, .., h, .., 0) in basis_DA coordinates (r x n); i is 0-based."""
        return dag(self.basis_DA) @ self.D[:, i * n:(i + 1) * n]


def row_operator(A: RowContraction) -> np.ndarray:
    """[A_1 ... A_d] as an n x dn matrix."""
    return np.hstack(list(A.A))


def omega_defect_frame(omega, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (d x (d-1)) of the complement of Omega_P = conj(omega)."""
    v = np.conj(np.asarray(omega, dtype=complex))
    v = v / np.linalg.norm(v)
    return orthonormal_range(np.eye(v.size) - np.outer(v, np.conj(v)), tol=1e-8)


def defect_data(A: RowContraction, omega, tol: float = DEFAULT_TOL) -> DefectData:
    T = row_operator(A)
    D2 = np.eye(T.shape[1]) - dag(T) @ T
    D = psd_sqrt(D2, tol=max(tol, 1e-10))
    basis = orthonormal_range(D2, tol=1e-10)
    return DefectData(D=D, basis_DA=basis, omega_defect_frame=omega_defect_frame(omega, tol))


@dataclass(frozen=True)
class RingDefectData:
    """Defect operators of the compressed (*-stable) tuple, in ring coordinates."""

    Dring: np.ndarray
    Dring_star: np.ndarray
    basis: np.ndarray
    basis_star: np.ndarray
    square_residual: float

    @property
    def source_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def target_dim(self) -> int:
        return self.basis_star.shape[1]


def ring_defects(profile: ErgodicProfile, tol: float = DEFAULT_TOL) -> RingDefectData:
    Ar = profile.Aring_coords
    m = Ar.shape[1]
    d = profile.d
    if m == 0:
        z = np.zeros((0, 0), dtype=complex)
        return RingDefectData(z, z, np.zeros((0, 0), dtype=complex), z, 0.0)
    row = np.hstack(list(Ar))
    Dring_sq = np.eye(d * m) - dag(row) @ row
    Dring = psd_sqrt(Dring_sq, tol=max(tol, 1e-10))
    ell = profile.ell_coords
    ell_sq = np.einsum("ia,ib->ab", ell, np.conj(ell))
    Dring_star = psd_sqrt(ell_sq, tol=max(tol, 1e-10))
    residual = operator_norm(ell_sq - (np.eye(m) - row @ dag(row)))
    return RingDefectData(
        Dring=Dring,
        Dring_star=Dring_star,
        # ranks from the squares: a square root lifts round-off to ~1e-8
        basis=orthonormal_range(Dring_sq, tol=1e-10),
        basis_star=orthonormal_range(ell_sq, tol=1e-10),
        square_residual=residual,
    )


def dstar_hat(profile: ErgodicProfile) -> np.ndarray:
    """d x n matrix whose i-th row is <ell_i|, so Dhat h = sum_i <ell_i, h> eps_i."""
    return np.conj(np.asarray(profile.ell))


def adjoint_word_products(mats: np.ndarray, depth: int, prune: float = PRUNE_TOL,
                          budget: int = WORD_BUDGET):
    """Yield ``(alpha, (M_alpha)^*)`` for all words |alpha| <= depth in canonical order.

    ``(M_{alpha j})^* = M_j^* (M_alpha)^*``, so each word costs one product.
    Subtrees whose product has norm below ``prune`` are skipped: every
    descendant is at most as large, because the tuple is a row contraction.
    """
    n = mats.shape[-1]
    adj = dag(mats)
    frontier = [((), np.eye(n, dtype=complex))]
    count = 0
    for level in range(depth + 1):
        for word, P in frontier:
            count += 1
            if count > budget:
                raise BudgetExceeded(f"more than {budget} words at depth {depth}")
            yield word, P
        if level == depth:
            break
        nxt = []
        for word, P in frontier:
            for j, Mj in enumerate(adj):
                child = Mj @ P
                if np.abs(child).max(initial=0.0) > prune:
                    nxt.append((word + (j + 1,), child))
        frontier = nxt


def poisson_hat(profile: ErgodicProfile, depth: int, prune: float = PRUNE_TOL) -> MultiAnalyticSymbol:
    """Coefficients c_alpha = Dhat (Aring_alpha)^* of C-hat on Omega-perp."""
    Dh = dstar_hat(profile)
    coeffs = {}
    for word, P in adjoint_word_products(profile.Aring, depth, prune):
        c = Dh @ P
        if np.abs(c).max(initial=0.0) > prune:
            coeffs[word] = c
    return MultiAnalyticSymbol(d=profile.d, depth=depth, source_dim=profile.n,
                               target_dim=profile.d, coeffs=coeffs)


def poisson_hat_apply(profile: ErgodicProfile, C: MultiAnalyticSymbol, h):
    """C-hat h as ``(vacuum scalar, {word: vector in C^d})``.

    C-hat Omega = 1 and C-hat acts through the coefficients on Q h.
    """
    h = np.asarray(h, dtype=complex)
    vac = np.vdot(profile.Omega, h)
    hr = profile.Q @ h
    return vac, {w: c @ hr for w, c in C.coeffs.items()}


def _theta_hat_core(profile: ErgodicProfile, C: MultiAnalyticSymbol, c: np.ndarray,
                    H: np.ndarray, depth: int) -> dict:
    """theta-hat applied to sum_i d^i_{c_i Omega + H_i}; ambient C^d coefficients.

    ``c`` has shape (d, r) and ``H`` shape (d, n, r) with H_i in Omega-perp.
    """
    A = profile.tuple.A
    Omega = profile.Omega
    Ar = profile.Aring
    AO = A @ Omega
    gram = np.conj(AO) @ AO.T  # [j, i] = <A_j Omega, A_i Omega>
    L = np.einsum("in,ir->nr", profile.ell, c)
    S = np.einsum("iab,ibr->ar", Ar, H)
    out = {(): (np.eye(profile.d) - gram) @ c - dstar_hat(profile) @ S}
    # Case II argument for first letter j
    G = [H[j] - dag(Ar[j]) @ S for j in range(profile.d)]
    for word, cw in C.coeffs.items():
        if word:
            out[word] = out.get(word, 0) - cw @ L
        if len(word) < depth:
            for j in range(profile.d):
                key = (j + 1,) + word
                out[key] = out.get(key, 0) + cw @ G[j]
    return out


def theta_hat_on(profile: ErgodicProfile, i: int, h, depth: int,
                 C: MultiAnalyticSymbol | None = None) -> dict:
    """Ambient coefficients of theta-hat d^i_h, with 1-based ``i`` and h in C^n."""
    if C is None:
        C = poisson_hat(profile, depth)
    h = np.asarray(h, dtype=complex)
    d, n = profile.d, profile.n
    c = np.zeros((d, 1), dtype=complex)
    H = np.zeros((d, n, 1), dtype=complex)
    c[i - 1, 0] = np.vdot(profile.Omega, h)
    H[i - 1, :, 0] = profile.Q @ h
    return {w: v[:, 0] for w, v in _theta_hat_core(profile, C, c, H, depth).items()}


def extended_charfun(profile: ErgodicProfile, defects: DefectData, depth: int,
                     basis=None, tol: float = DEFAULT_TOL, check_ergodic: bool = True,
                     C: MultiAnalyticSymbol | None = None) -> MultiAnalyticSymbol:
    """Symbol of the extended characteristic function, truncated at ``depth``.

    Each orthonormal basis vector xi of D_A satisfies xi = D xi =
    sum_i d^i_{xi_i}; splitting xi_i = <Omega, xi_i> Omega + Q xi_i
    reduces theta-hat xi to the two explicit cases (vacuum direction and
    Omega-perp).  Coefficients are returned in D_omega frame coordinates.
    """
    A = profile.tuple
    rep = validate(A, tol)
    if not rep.is_coisometric:
        raise NotCoisometric(f"coisometry defect {rep.coisometry_defect:.3e}")
    if check_ergodic:
        ensure_ergodic(A, profile=profile)
    Xi = defects.basis_DA if basis is None else np.asarray(basis, dtype=complex)
    d, n = profile.d, profile.n
    r = Xi.shape[1]
    blocks = Xi.reshape(d, n, r)
    c = np.einsum("n,inr->ir", np.conj(profile.Omega), blocks)
    H = np.einsum("ab,ibr->iar", profile.Q, blocks)
    if C is None:
        C = poisson_hat(profile, depth)
    amb = _theta_hat_core(profile, C, c, H, depth)
    F = defects.omega_defect_frame
    coeffs = {}
    worst = 0.0
    for w, v in amb.items():
        fc = dag(F) @ v
        worst = max(worst, operator_norm(v - F @ fc))
        if np.abs(fc).max(initial=0.0) > PRUNE_TOL:
            coeffs[w] = fc
    if worst > MEMBERSHIP_TOL:
        raise FrameMembership(f"coefficient leaves D_omega by {worst:.3e}")
    return MultiAnalyticSymbol(
        d=d, depth=depth, source_dim=r, target_dim=F.shape[1], coeffs=coeffs,
        target_frame=F,
    )


def membership_residual(profile: ErgodicProfile, C: MultiAnalyticSymbol) -> float:
    """max_alpha |<Omega_P, c_alpha h>| over the C-hat coefficients (operator norm)."""
    v = profile.Omega_P / np.linalg.norm(profile.Omega_P)
    return max((operator_norm(np.conj(v) @ c) for c in C.coeffs.values()), default=0.0)


def _require_star_stable(profile: ErgodicProfile):
    if profile.n <= 1:
        return
    s = _decay_until(profile, 40, 1e-8, 20000)
    if s[-1] >= 1e-8:
        raise NotStarStable(f"compressed tuple tail stalls at {s[-1]:.3e}")


def popescu_poisson(profile: ErgodicProfile, ring: RingDefectData, depth: int,
                    prune: float = PRUNE_TOL) -> MultiAnalyticSymbol:
    """Poisson kernel of the compressed tuple, h -> sum e_alpha (x) Dring_star Aring_alpha^* h.

    Source: ring coordinates; target: ``ring.basis_star`` coordinates.
    """
    Ar = profile.Aring_coords
    Bs = ring.basis_star
    coeffs = {}
    if Ar.shape[1]:
        left = dag(Bs) @ ring.Dring_star
        for word, P in adjoint_word_products(Ar, depth, prune):
            c = left @ P
            if np.abs(c).max(initial=0.0) > prune:
                coeffs[word] = c
    return MultiAnalyticSymbol(
        d=profile.d, depth=depth, source_dim=Ar.shape[1], target_dim=Bs.shape[1],
        coeffs=coeffs, target_frame=profile.ring_basis @ Bs,
    )


def popescu_charfun(profile: ErgodicProfile, ring: RingDefectData, depth: int,
                    prune: float = PRUNE_TOL) -> MultiAnalyticSymbol:
    """Popescu's characteristic function of the compressed tuple.

    f -> -e_0 (x) sum_j Aring_j P_j f + sum_j e_j (x) sum_alpha e_alpha (x)
    Dring_star Aring_alpha^* P_j Dring f, for f in the basis of range Dring.
    """
    _require_star_stable(profile)
    Ar = profile.Aring_coords
    d, m = profile.d, Ar.shape[1]
    B, Bs = ring.basis, ring.basis_star
    s = B.shape[1]
    coeffs = {}
    if m and s:
        row = np.hstack(list(Ar))
        e0 = -dag(Bs) @ row @ B
        if np.abs(e0).max(initial=0.0) > prune:
            coeffs[()] = e0
        Y = (ring.Dring @ B).reshape(d, m, s)
        left = dag(Bs) @ ring.Dring_star
        if depth >= 1:
            for word, P in adjoint_word_products(Ar, depth - 1, prune):
                Z = left @ P
                for j in range(d):
                    c = Z @ Y[j]
                    if np.abs(c).max(initial=0.0) > prune:
                        coeffs[(j + 1,) + word] = c
    return MultiAnalyticSymbol(
        d=d, depth=depth, source_dim=s, target_dim=Bs.shape[1], coeffs=coeffs,
        target_frame=profile.ring_basis @ Bs,
    )


def gamma_isometry(profile: ErgodicProfile, ring: RingDefectData, defects: DefectData,
                   tol: float = 1e-9) -> np.ndarray:
    """Isometry from range(Dring_star) to D_omega with gamma Dring_star h = Dhat h.

    Solved by least squares on the images of the ring basis, then checked.
    Returned in (basis_star coordinates) -> (omega frame coordinates).
    """
    F = defects.omega_defect_frame
    Bs = ring.basis_star
    if Bs.shape[1] == 0:
        return np.zeros((F.shape[1], 0), dtype=complex)
    X = dag(Bs) @ ring.Dring_star
    Y = dag(F) @ dstar_hat(profile) @ profile.ring_basis
    gamma = Y @ np.linalg.pinv(X)
    fit = operator_norm(gamma @ X - Y)
    iso = operator_norm(dag(gamma) @ gamma - np.eye(Bs.shape[1]))
    if fit > tol or iso > tol:
        raise NotIsometric(f"gamma residual {fit:.3e}, isometry defect {iso:.3e}")
    return gamma


@dataclass(frozen=True)
class Theorem52Report:
    poisson_residual: float
    charfun_residual: float
    depth: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.poisson_residual <= self.tol and self.charfun_residual <= self.tol


def theorem52_check(profile: ErgodicProfile, depth: int, defects: DefectData | None = None,
                    ring: RingDefectData | None = None, tol: float = 1e-9) -> Theorem52Report:
    """Compare gamma-transported Popescu objects with C-hat and theta-hat.

    Residual 1: max_h || (1 (x) gamma) Cring h - C-hat h ||
    Residual 2: max_{h, i} || (1 (x) gamma) theta_ring d^i_h - theta-hat d^i_h ||
    with h running over the ring basis.
    """
    if defects is None:
        defects = defect_data(profile.tuple, profile.omega)
    if ring is None:
        ring = ring_defects(profile)
    m = profile.ring_basis.shape[1]
    if m == 0:
        return Theorem52Report(0.0, 0.0, depth, tol)
    F = defects.omega_defect_frame
    gamma = gamma_isometry(profile, ring, defects)
    transport = F @ gamma  # basis_star coords -> ambient C^d
    C = poisson_hat(profile, depth)
    Cring = popescu_poisson(profile, ring, depth)
    theta_ring = popescu_charfun(profile, ring, depth)
    R = profile.ring_basis
    d = profile.d
    res1 = res2 = 0.0
    for k in range(m):
        h = R[:, k]
        lhs = {w: transport @ c[:, k] for w, c in Cring.coeffs.items()}
        rhs = {w: c @ h for w, c in C.coeffs.items()}
        res1 = max(res1, _fock_distance(lhs, rhs))
        for i in range(d):
            e = np.zeros(d * m, dtype=complex)
            e[i * m + k] = 1.0
            coords = dag(ring.basis) @ ring.Dring @ e
            lhs = {w: transport @ (c @ coords) for w, c in theta_ring.coeffs.items()}
            rhs = theta_hat_on(profile, i + 1, h, depth, C=C)
            res2 = max(res2, _fock_distance(lhs, rhs))
    return Theorem52Report(res1, res2, depth, tol)


def _fock_distance(a: dict, b: dict) -> float:
    diff = {}
    for w in set(a) | set(b):
        diff[w] = a.get(w, 0) - b.get(w, 0)
    return fock_norm({w: np.atleast_1d(v) for w, v in diff.items()})


@dataclass
class CharfunBundle:
    """Everything computed for one tuple at one depth."""

    profile: ErgodicProfile
    defects: DefectData
    poisson: MultiAnalyticSymbol
    theta: MultiAnalyticSymbol


def compute_all(profile: ErgodicProfile, depth: int, tol: float = DEFAULT_TOL,
                check_ergodic: bool = True) -> CharfunBundle:
    defects = defect_data(profile.tuple, profile.omega, tol)
    C = poisson_hat(profile, depth)
    theta = extended_charfun(profile, defects, depth, tol=tol, check_ergodic=check_ergodic, C=C)
    return CharfunBundle(profile, defects, C, theta)
