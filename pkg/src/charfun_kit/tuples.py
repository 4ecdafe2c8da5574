"""Row contractions, their invariant vector states and the ergodic block profile."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import (
    DimensionMismatch,
    EigenvectorMismatch,
    GenerationFailed,
    Inconclusive,
    NotCoisometric,
    NotErgodic,
    NoVectorState,
)
from .numerics import (
    DEFAULT_TOL,
    dag,
    hermitian_eig,
    operator_norm,
    orthonormal_range,
    phase_normalize,
    sandwich_matrix,
    solve_linear_nullspace,
)

FIXED_POINT_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RowContraction:
    """A d-tuple of n x n complex matrices, stored as one ``(d, n, n)`` array."""

    A: np.ndarray
    label: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise DimensionMismatch(f"expected d square matrices, got shape {A.shape}")
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionMismatch("empty tuple")
        if not np.all(np.isfinite(A)):
            raise ValueError("tuple has non-finite entries")
        object.__setattr__(self, "A", _frozen(A))

    @classmethod
    def from_list(cls, mats, label: str = "") -> "RowContraction":
        mats = [np.asarray(m, dtype=complex) for m in mats]
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise DimensionMismatch(f"inconsistent matrix shapes {sorted(shapes)}")
        return cls(np.stack(mats), label=label)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def __len__(self):
        return self.d

    def __getitem__(self, i) -> np.ndarray:
        return self.A[i]

    def gram(self) -> np.ndarray:
        """sum_i A_i A_i^*"""
        return np.einsum("iab,icb->ac", self.A, np.conj(self.A))

    def cp_map(self, x) -> np.ndarray:
        """Z(x) = sum_i A_i x A_i^*"""
        return np.einsum("iab,bc,idc->ad", self.A, x, np.conj(self.A))

    def word(self, alpha) -> np.ndarray:
        """A_alpha = A_{alpha_1} ... A_{alpha_m} for 1-based letters."""
        M = np.eye(self.n, dtype=complex)
        for a in alpha:
            M = M @ self.A[a - 1]
        return M


@dataclass(frozen=True)
class ValidationReport:
    contraction_norm: float
    coisometry_defect: float
    tol: float

    @property
    def is_contraction(self) -> bool:
        return self.contraction_norm <= 1.0 + self.tol

    @property
    def is_coisometric(self) -> bool:
        return self.coisometry_defect <= self.tol

    @property
    def passed(self) -> bool:
        return self.is_contraction and self.is_coisometric


def validate(A: RowContraction, tol: float = DEFAULT_TOL) -> ValidationReport:
    G = A.gram()
    return ValidationReport(
        contraction_norm=operator_norm(G),
        coisometry_defect=operator_norm(G - np.eye(A.n)),
        tol=tol,
    )


def cp_map_matrix(A: RowContraction) -> np.ndarray:
    """n^2 x n^2 matrix of Z(x) = sum A_i x A_i^* acting on row-major vec(x)."""
    return sandwich_matrix(A.A, dag(A.A))


def predual_map_matrix(A: RowContraction) -> np.ndarray:
    """n^2 x n^2 matrix of rho -> sum A_i^* rho A_i."""
    return sandwich_matrix(dag(A.A), A.A)


def fixed_point_dimension(A: RowContraction, tol: float = FIXED_POINT_TOL) -> int:
    Z = cp_map_matrix(A)
    return solve_linear_nullspace(Z - np.eye(A.n**2), tol=tol, scale=1.0).shape[1]


def find_invariant_vector_state(A: RowContraction, tol: float = DEFAULT_TOL):
    """Return ``(Omega, omega)`` with ``A_i^* Omega = conj(omega_i) Omega``.

    The invariant vector state is found as the rank-one fixed point of the
    predual map.  A fixed-point space of dimension other than one means the
    state is absent or not unique, and :class:`NoVectorState` is raised.
    """
    rep = validate(A, tol)
    if not rep.is_coisometric:
        raise NotCoisometric(f"coisometry defect {rep.coisometry_defect:.3e}")
    n = A.n
    T = predual_map_matrix(A)
    fixed = solve_linear_nullspace(T - np.eye(n * n), tol=FIXED_POINT_TOL, scale=1.0)
    if fixed.shape[1] != 1:
        raise NoVectorState(
            f"predual fixed-point space has dimension {fixed.shape[1]}, expected 1"
        )
    X = fixed[:, 0].reshape(n, n)
    # the predual map preserves adjoints, so both Hermitian parts are fixed points
    candidates = [X + dag(X), 1j * (X - dag(X))]
    rho = max(candidates, key=operator_norm)
    if np.trace(rho).real < 0:
        rho = -rho
    w, V = hermitian_eig(rho, tol=1e-8)
    top = w[-1]
    if top <= 0 or (n > 1 and max(abs(w[0]), abs(w[-2])) > 1e-8 * top):
        raise NoVectorState("invariant state of the predual map is not a vector state")
    Omega = phase_normalize(V[:, -1])
    omega = np.array([np.vdot(Omega, Ai @ Omega) for Ai in A.A])
    mismatch = max(np.linalg.norm(dag(Ai) @ Omega - np.conj(w_i) * Omega)
                   for Ai, w_i in zip(A.A, omega))
    if mismatch > max(tol, 1e-9):
        raise NoVectorState(f"eigenvector relation violated by {mismatch:.3e}")
    return Omega, omega


@dataclass(frozen=True)
class ErgodicProfile:
    """Block data of a tuple with respect to C Omega (+) Omega-perp.

    ``Aring`` keeps the compressions ``Q A_i Q`` in ambient n x n coordinates;
    ``ring_basis`` gives (n-1)-dimensional coordinates when those are needed.
    """

    tuple: RowContraction
    Omega: np.ndarray
    omega: np.ndarray
    Q: np.ndarray
    ell: np.ndarray
    Aring: np.ndarray
    ring_basis: np.ndarray
    tol: float = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def d(self) -> int:
        return self.tuple.d

    @property
    def n(self) -> int:
        return self.tuple.n

    @property
    def Omega_P(self) -> np.ndarray:
        return np.conj(self.omega)

    def ring(self, M: np.ndarray) -> np.ndarray:
        """Express an ambient operator on Omega-perp in ring_basis coordinates."""
        R = self.ring_basis
        return dag(R) @ M @ R

    @property
    def Aring_coords(self) -> np.ndarray:
        return np.array([self.ring(M) for M in self.Aring])

    @property
    def ell_coords(self) -> np.ndarray:
        return self.ell @ np.conj(self.ring_basis)

    def omega_p_operator(self) -> np.ndarray:
        """A_{Omega_P} = sum_i conj(omega_i) A_i"""
        return np.einsum("i,iab->ab", np.conj(self.omega), self.tuple.A)


def block_decompose(A: RowContraction, Omega, omega, tol: float = DEFAULT_TOL) -> ErgodicProfile:
    Omega = np.asarray(Omega, dtype=complex).ravel()
    omega = np.asarray(omega, dtype=complex).ravel()
    if Omega.shape != (A.n,) or omega.shape != (A.d,):
        raise DimensionMismatch("Omega/omega have wrong length")
    if abs(np.linalg.norm(Omega) - 1.0) > max(tol, 1e-9):
        raise EigenvectorMismatch("Omega is not a unit vector")
    for Ai, w in zip(A.A, omega):
        err = np.linalg.norm(dag(Ai) @ Omega - np.conj(w) * Omega)
        if err > max(tol, 1e-9):
            raise EigenvectorMismatch(f"A_i^* Omega != conj(omega_i) Omega (error {err:.3e})")
    n = A.n
    P = np.outer(Omega, np.conj(Omega))
    Q = np.eye(n) - P
    ell = np.array([Ai @ Omega - w * Omega for Ai, w in zip(A.A, omega)])
    Aring = np.array([Q @ Ai @ Q for Ai in A.A])
    ring_basis = orthonormal_range(Q, tol=1e-8) if n > 1 else np.zeros((n, 0), dtype=complex)
    return ErgodicProfile(
        tuple=A,
        Omega=_frozen(Omega),
        omega=_frozen(omega),
        Q=_frozen(Q),
        ell=_frozen(ell),
        Aring=_frozen(Aring),
        ring_basis=_frozen(ring_basis),
        tol=tol,
    )


def profile_of(A: RowContraction, tol: float = DEFAULT_TOL, Omega_hint=None) -> ErgodicProfile:
    """Vector state search followed by :func:`block_decompose`."""
    if Omega_hint is not None:
        Omega = phase_normalize(np.asarray(Omega_hint, dtype=complex))
        Omega = Omega / np.linalg.norm(Omega)
        omega = np.array([np.vdot(Omega, Ai @ Omega) for Ai in A.A])
        try:
            return block_decompose(A, Omega, omega, tol)
        except EigenvectorMismatch:
            pass
    Omega, omega = find_invariant_vector_state(A, tol)
    return block_decompose(A, Omega, omega, tol)


def star_stability_matrices(profile: ErgodicProfile, n_max: int) -> list[np.ndarray]:
    """[M_0, ..., M_{n_max}] with M_0 = Q and M_{m+1} = sum_i Aring_i M_m Aring_i^*."""
    Ar = profile.Aring
    M = np.array(profile.Q)
    out = [M]
    for _ in range(n_max):
        M = np.einsum("iab,bc,idc->ad", Ar, M, np.conj(Ar))
        out.append(M)
    return out


def star_stability_norms(profile: ErgodicProfile, n_max: int) -> np.ndarray:
    """s_1..s_{n_max}, s_n = || sum_{|alpha|=n} Aring_alpha Aring_alpha^* ||."""
    mats = star_stability_matrices(profile, n_max)
    return np.array([operator_norm(M) for M in mats[1:]])


def star_stability_bruteforce(profile: ErgodicProfile, n: int) -> np.ndarray:
    """Word-enumeration version of M_n, used as an oracle for the recursion."""
    Ar = profile.Aring
    total = np.zeros((profile.n, profile.n), dtype=complex)
    for alpha in product(range(profile.d), repeat=n):
        M = np.array(profile.Q)
        for a in alpha:
            M = M @ Ar[a]
        total += M @ dag(M)
    return total


@dataclass(frozen=True)
class ErgodicityReport:
    fixed_point_dim: int
    decay: np.ndarray | None
    threshold: float
    decay_rate: float | None

    @property
    def decay_passed(self) -> bool | None:
        if self.decay is None:
            return None
        return bool(self.decay.size == 0 or self.decay[-1] < self.threshold)

    @property
    def verdict(self) -> str:
        if self.fixed_point_dim != 1:
            return "not_ergodic"
        if self.decay_passed:
            return "ergodic"
        return "inconclusive"

    @property
    def ergodic(self) -> bool:
        return self.verdict == "ergodic"

    @property
    def consistent(self) -> bool:
        """Both tests point the same way (an inconclusive run is flagged as disagreement)."""
        return self.verdict != "inconclusive"


def _geometric_rate(s: np.ndarray) -> float | None:
    tail = s[-5:]
    if tail.size < 2 or np.any(tail <= 0):
        return None
    slope = np.polyfit(np.arange(tail.size), np.log(tail), 1)[0]
    return float(np.exp(slope))


def is_ergodic(A: RowContraction, n_max: int = 40, threshold: float = 1e-8,
               tol: float = DEFAULT_TOL, profile: ErgodicProfile | None = None,
               max_steps: int = 20000) -> ErgodicityReport:
    """Two redundant ergodicity tests.

    Primary: *-stability of the compressed tuple, s_n below ``threshold``.
    The recursion runs at least ``n_max`` steps and keeps going (up to
    ``max_steps``) while the tail is still above threshold, so slowly mixing
    tuples are not misreported.  Cross-check: the fixed-point space of Z is
    one-dimensional.
    """
    dim = fixed_point_dimension(A)
    decay = rate = None
    if dim == 1:
        if profile is None:
            try:
                profile = profile_of(A, tol)
            except NoVectorState:
                profile = None
        if profile is not None:
            decay = _decay_until(profile, n_max, threshold, max_steps)
            rate = _geometric_rate(decay)
    return ErgodicityReport(dim, decay, threshold, rate)


def _decay_until(profile: ErgodicProfile, n_max: int, threshold: float, max_steps: int) -> np.ndarray:
    Ar = profile.Aring
    M = np.array(profile.Q)
    out = []
    for step in range(1, max_steps + 1):
        M = np.einsum("iab,bc,idc->ad", Ar, M, np.conj(Ar))
        out.append(operator_norm(M))
        if step >= n_max and out[-1] < threshold:
            break
    return np.array(out)


def ensure_ergodic(A: RowContraction, **kwargs) -> ErgodicityReport:
    rep = is_ergodic(A, **kwargs)
    if rep.verdict == "inconclusive":
        raise Inconclusive(
            f"fixed-point space is 1-dimensional but s_n stalls at {rep.decay[-1]:.3e}"
        )
    if not rep.ergodic:
        raise NotErgodic(f"fixed-point space of Z has dimension {rep.fixed_point_dim}")
    return rep


def omega_p_power_decay(A: RowContraction, profile: ErgodicProfile, n_max: int) -> np.ndarray:
    """r_0..r_{n_max}, r_n = ||(A_{Omega_P}^*)^n - |Omega><Omega|||."""
    K = dag(profile.omega_p_operator())
    P = np.outer(profile.Omega, np.conj(profile.Omega))
    M = np.eye(A.n, dtype=complex)
    out = []
    for _ in range(n_max + 1):
        out.append(operator_norm(M - P))
        M = K @ M
    return np.array(out)


def ring_span_rank(profile: ErgodicProfile, tol: float = 1e-9) -> int:
    """Rank of {Aring_alpha ell_i : |alpha| <= n-1}."""
    vecs = [v for v in profile.ell]
    frontier = list(profile.ell)
    for _ in range(max(profile.n - 2, 0)):
        frontier = [Ai @ v for v in frontier for Ai in profile.Aring]
        vecs.extend(frontier)
    M = np.column_stack(vecs)
    if np.abs(M).max() <= tol:
        return 0
    return orthonormal_range(M, tol=tol).shape[1]


def random_ergodic_tuple(d: int, n: int, seed=None, omega=None, max_retries: int = 20):
    """Random ergodic coisometric tuple with Omega = e_1.

    The stacked adjoint (A_1^*; ...; A_d^*) is an isometry C^n -> C^{dn}; its
    first column is pinned to (conj(omega_i) e_1)_i and the remaining columns
    are drawn at random in the orthocomplement.  Returns ``(tuple, profile)``.
    """
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        if omega is None:
            w = rng.normal(size=d) + 1j * rng.normal(size=d)
            w = w / np.linalg.norm(w)
        else:
            w = np.asarray(omega, dtype=complex)
            w = w / np.linalg.norm(w)
        first = np.zeros(d * n, dtype=complex)
        first[::n] = np.conj(w)
        G = rng.normal(size=(d * n, n - 1)) + 1j * rng.normal(size=(d * n, n - 1))
        G = G - np.outer(first, np.conj(first) @ G)
        Qr, _ = np.linalg.qr(G)
        X = np.column_stack([first, Qr]) if n > 1 else first[:, None]
        A = RowContraction(np.array([dag(X[i * n:(i + 1) * n]) for i in range(d)]))
        Omega = np.zeros(n, dtype=complex)
        Omega[0] = 1.0
        profile = block_decompose(A, Omega, w)
        if is_ergodic(A, profile=profile).ergodic:
            return A, profile
    raise GenerationFailed(f"no ergodic tuple after {max_retries} draws")


def section7_tuple() -> RowContraction:
    s = 1 / np.sqrt(2)
    A1 = s * np.array([[0, 0, 0], [1, 0, 0], [0, 1, 1]])
    A2 = s * np.array([[1, 1, 0], [0, 0, 1], [0, 0, 0]])
    return RowContraction.from_list([A1, A2], label="section7")


def scalar_tuple(omega) -> RowContraction:
    w = np.asarray(omega, dtype=complex)
    return RowContraction(w.reshape(-1, 1, 1), label="scalar")


def direct_sum(A: RowContraction, B: RowContraction) -> RowContraction:
    if A.d != B.d:
        raise DimensionMismatch("direct sum needs equal d")
    n, m = A.n, B.n
    out = np.zeros((A.d, n + m, n + m), dtype=complex)
    out[:, :n, :n] = A.A
    out[:, n:, n:] = B.A
    return RowContraction(out)
