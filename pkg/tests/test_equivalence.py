import numpy as np
import pytest
from scipy.stats import unitary_group

from charfun_kit.charfun import defect_data, extended_charfun
from charfun_kit.equivalence import (corollary63_check, kraus_residual, mixing_transform, phase_distance,
                                     symbols_equivalent, theorem61_crosscheck,
                                     tuples_unitarily_equivalent)
from charfun_kit.errors import FrameMismatch, NotComparable, NotUnitary
from charfun_kit.fock import MultiAnalyticSymbol
from charfun_kit.tuples import RowContraction, profile_of, random_ergodic_tuple

SWAP = np.array([[0, 1], [1, 0]])


def conjugate(A, U0):
    return RowContraction(np.einsum("ab,ibc,dc->iad", U0, A.A, np.conj(U0)))


@pytest.fixture(scope="module")
def s7_theta(s7, s7_profile):
    return extended_charfun(s7_profile, defect_data(s7, s7_profile.omega), 6)


def test_self_equivalence(s7_theta):
    rep = symbols_equivalent(s7_theta, s7_theta)
    assert rep.equivalent and rep.full_rank
    assert np.allclose(rep.V, np.eye(3), atol=1e-10)
    assert rep.residual < 1e-12


def test_rebased_defect_basis(s7, s7_profile, s7_theta):
    dd = defect_data(s7, s7_profile.omega)
    V0 = unitary_group.rvs(3, random_state=3)
    rebased = extended_charfun(s7_profile, dd, 6, basis=dd.basis_DA @ V0)
    # theta_rebased = theta V0, so theta = theta_rebased V0^*
    rep = symbols_equivalent(s7_theta, rebased)
    assert rep.equivalent
    assert np.allclose(rep.V, V0.conj().T, atol=1e-9)


def test_symbol_times_unitary(s7_theta):
    V0 = unitary_group.rvs(3, random_state=8)
    moved = MultiAnalyticSymbol(d=2, depth=6, source_dim=3, target_dim=1,
                                coeffs={w: c @ V0 for w, c in s7_theta.coeffs.items()},
                                target_frame=s7_theta.target_frame)
    rep = symbols_equivalent(moved, s7_theta)
    assert rep.full_rank
    assert np.linalg.norm(rep.V - V0, 2) <= 1e-8


def test_frame_mismatch(s7_theta):
    other = MultiAnalyticSymbol(d=2, depth=6, source_dim=3, target_dim=1,
                                coeffs=s7_theta.coeffs,
                                target_frame=np.array([[1.0], [0.0]], dtype=complex))
    with pytest.raises(FrameMismatch):
        symbols_equivalent(s7_theta, other)


def test_intertwiner_identity(s7, s7_profile):
    res = tuples_unitarily_equivalent(s7, s7, Omega_A=s7_profile.Omega, Omega_B=s7_profile.Omega)
    assert res.found and res.nullity == 1
    assert phase_distance(res.U, np.eye(3)) < 1e-10
    assert res.vacuum_defect < 1e-10


def test_intertwiner_recovers_conjugation():
    A, _ = random_ergodic_tuple(2, 4, seed=1)
    U0 = unitary_group.rvs(4, random_state=2)
    res = tuples_unitarily_equivalent(A, conjugate(A, U0))
    assert res.found
    assert res.unitarity_defect <= 1e-10
    assert phase_distance(res.U, U0) <= 1e-9


def test_intertwiner_symmetric_and_reflexive():
    A, pA = random_ergodic_tuple(3, 3, seed=12)
    B, _ = random_ergodic_tuple(3, 3, seed=13, omega=pA.omega)
    C = conjugate(A, unitary_group.rvs(3, random_state=4))
    for X, Y in [(A, B), (A, C), (B, C)]:
        assert tuples_unitarily_equivalent(X, Y).found == tuples_unitarily_equivalent(Y, X).found
    assert tuples_unitarily_equivalent(B, B).found
    assert not tuples_unitarily_equivalent(A, B).found
    assert tuples_unitarily_equivalent(A, C).found


def test_golden_vs_its_mixing_has_no_intertwiner(s7):
    u = unitary_group.rvs(2, random_state=5)
    mixed, _ = mixing_transform(s7, u)
    assert not tuples_unitarily_equivalent(s7, mixed).found


def test_crosscheck_forward():
    A, pA = random_ergodic_tuple(3, 4, seed=21)
    U0 = unitary_group.rvs(4, random_state=22)
    rep = theorem61_crosscheck(A, conjugate(A, U0))
    assert rep.agree and rep.equivalent
    assert rep.symbol.residual <= 1e-8


def test_crosscheck_converse(s7, s7_profile):
    B, _ = random_ergodic_tuple(2, 3, seed=31, omega=s7_profile.omega)
    rep = theorem61_crosscheck(s7, B)
    assert rep.agree and not rep.equivalent
    assert rep.symbol.residual > 1e-3


def test_crosscheck_self(s7):
    rep = theorem61_crosscheck(s7, s7)
    assert rep.equivalent
    assert np.allclose(rep.symbol.V, np.eye(3), atol=1e-10)


def test_crosscheck_needs_same_omega(s7):
    B, _ = random_ergodic_tuple(2, 3, seed=2)
    with pytest.raises(NotComparable):
        theorem61_crosscheck(s7, B)


def test_mixing_identity_and_swap(s7, s7_profile):
    same, w = mixing_transform(s7, np.eye(2))
    assert np.array_equal(same.A, s7.A)
    swapped, w = mixing_transform(s7, SWAP)
    assert np.allclose(swapped.A[0], s7.A[1]) and np.allclose(swapped.A[1], s7.A[0])
    assert np.allclose(w, s7_profile.omega)
    assert np.allclose(profile_of(swapped).omega, w)


def test_mixing_rejects_non_unitary(s7):
    with pytest.raises(NotUnitary):
        mixing_transform(s7, np.array([[1, 1], [0, 1]]))


def test_mixing_keeps_the_cp_map(s7):
    for seed in range(5):
        mixed, w = mixing_transform(s7, unitary_group.rvs(2, random_state=seed))
        assert kraus_residual(s7, mixed) <= 1e-12
        assert np.allclose(profile_of(mixed).omega, w, atol=1e-10)


def test_conjugacy_mixing(s7):
    mixed, _ = mixing_transform(s7, unitary_group.rvs(2, random_state=40))
    rep = corollary63_check(s7, mixed)
    assert rep.conjugate and rep.consistent
    assert rep.kraus_residual <= 1e-8


def test_conjugacy_conjugation():
    A, _ = random_ergodic_tuple(3, 3, seed=50)
    B = conjugate(A, unitary_group.rvs(3, random_state=51))
    rep = corollary63_check(A, B)
    assert rep.conjugate and rep.consistent


def test_conjugacy_negative(s7):
    B, _ = random_ergodic_tuple(2, 3, seed=60)
    rep = corollary63_check(s7, B)
    assert not rep.conjugate
    assert rep.consistent
