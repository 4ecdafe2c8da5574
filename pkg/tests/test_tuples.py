import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charfun_kit.errors import DimensionMismatch, EigenvectorMismatch, NoVectorState, NotErgodic
from charfun_kit.tuples import (RowContraction, block_decompose, direct_sum, ensure_ergodic,
                                find_invariant_vector_state, fixed_point_dimension, is_ergodic,
                                omega_p_power_decay, profile_of, random_ergodic_tuple, ring_span_rank,
                                scalar_tuple, star_stability_bruteforce, star_stability_matrices,
                                star_stability_norms, validate)

S2 = np.sqrt(2)
G = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)


def test_golden_is_coisometric(s7):
    rep = validate(s7)
    assert rep.passed
    assert rep.coisometry_defect <= 1e-12


def test_validate_flags_non_contraction():
    A = RowContraction.from_list([1.1 * np.eye(2) / S2, 1.1 * np.eye(2) / S2])
    rep = validate(A)
    assert not rep.is_contraction
    assert not rep.passed


def test_shape_errors():
    with pytest.raises(DimensionMismatch):
        RowContraction.from_list([np.eye(2), np.eye(3)])
    with pytest.raises(DimensionMismatch):
        RowContraction(np.ones((2, 2, 3)))


def test_tuple_is_immutable(s7):
    with pytest.raises(ValueError):
        s7.A[0, 0, 0] = 1.0


def test_vector_state_golden(s7):
    Omega, omega = find_invariant_vector_state(s7)
    assert np.allclose(Omega, np.ones(3) / np.sqrt(3), atol=1e-12)
    assert np.allclose(omega, [1 / S2, 1 / S2], atol=1e-12)


def test_vector_state_scalar():
    w = np.array([0.6, 0.8j])
    Omega, omega = find_invariant_vector_state(scalar_tuple(w))
    assert np.allclose(Omega, [1.0])
    assert np.allclose(omega, w)


def test_direct_sum_has_no_unique_state(s7):
    D = direct_sum(s7, s7)
    # two identical blocks: rho (x) E_jk is fixed for all four matrix units
    assert fixed_point_dimension(D) == 4
    with pytest.raises(NoVectorState):
        find_invariant_vector_state(D)
    rep = is_ergodic(D)
    assert rep.verdict == "not_ergodic"
    with pytest.raises(NotErgodic):
        ensure_ergodic(D)


def test_block_form_golden(s7_profile):
    p = s7_profile
    Q = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]) / 3
    A1r = np.array([[0, 0, 0], [2, -1, -1], [-2, 1, 1]]) / (3 * S2)
    A2r = np.array([[1, 1, -2], [-1, -1, 2], [0, 0, 0]]) / (3 * S2)
    assert np.allclose(p.Q, Q, atol=1e-12)
    assert np.allclose(p.Aring[0], A1r, atol=1e-12)
    assert np.allclose(p.Aring[1], A2r, atol=1e-12)
    assert np.allclose(p.ell[0], np.array([-1, 0, 1]) / np.sqrt(6), atol=1e-12)
    assert np.allclose(p.ell[1], np.array([1, 0, -1]) / np.sqrt(6), atol=1e-12)
    assert np.allclose(p.Aring[0] @ p.ell[0], np.array([0, -1, 1]) / (2 * np.sqrt(3)), atol=1e-12)


def check_block_identities(p, tol=1e-10):
    A = p.tuple.A
    for i in range(p.d):
        assert np.allclose(A[i].conj().T @ p.Omega, np.conj(p.omega[i]) * p.Omega, atol=tol)
        assert abs(np.vdot(p.Omega, p.ell[i])) < tol
    assert np.allclose(np.einsum("i,in->n", np.conj(p.omega), p.ell), 0, atol=tol)
    total = sum(np.outer(l, l.conj()) + Ar @ Ar.conj().T for l, Ar in zip(p.ell, p.Aring))
    assert np.allclose(total, p.Q, atol=tol)


def test_block_identities_golden(s7_profile):
    check_block_identities(s7_profile)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 3), st.integers(1, 5), st.integers(0, 10**6))
def test_block_identities_random(d, n, seed):
    A, p = random_ergodic_tuple(d, n, seed=seed)
    assert validate(A).coisometry_defect <= 1e-12
    check_block_identities(p)


def test_block_decompose_rejects_wrong_vector(s7):
    with pytest.raises(EigenvectorMismatch):
        block_decompose(s7, np.array([1, 0, 0]), np.array([1 / S2, 1 / S2]))


def test_scalar_profile():
    p = profile_of(scalar_tuple([1 / S2, 1 / S2]))
    assert np.allclose(p.Q, 0)
    assert np.allclose(p.ell, 0)
    assert p.ring_basis.shape == (1, 0)
    assert np.allclose(star_stability_norms(p, 5), 0)
    assert is_ergodic(p.tuple).ergodic
    assert np.allclose(omega_p_power_decay(p.tuple, p, 4), 0)


def test_decay_golden(s7_profile):
    mats = star_stability_matrices(s7_profile, 12)
    for n in range(1, 13):
        assert np.allclose(mats[n], G / (3 * 2 ** (n - 1)), atol=1e-12)
    assert np.allclose(star_stability_norms(s7_profile, 12), 2.0 ** (1 - np.arange(1, 13)), atol=1e-12)


def test_decay_recursion_matches_enumeration(s7_profile):
    A, p = random_ergodic_tuple(3, 3, seed=7)
    mats = star_stability_matrices(p, 4)
    for n in range(1, 5):
        assert np.allclose(mats[n], star_stability_bruteforce(p, n), atol=1e-12)
    assert np.allclose(star_stability_matrices(s7_profile, 3)[3], star_stability_bruteforce(s7_profile, 3))


def test_golden_ergodic(s7):
    rep = is_ergodic(s7)
    assert rep.verdict == "ergodic"
    assert rep.consistent
    assert rep.decay_rate == pytest.approx(0.5, rel=1e-6)


def test_omega_p_power_decay_golden(s7, s7_profile):
    r = omega_p_power_decay(s7, s7_profile, 20)
    assert r[0] == pytest.approx(1.0)
    assert np.all(np.diff(r) <= 1e-15)
    assert r[20] <= 1e-3


def test_random_tuple_seeded_and_spanning():
    A, p = random_ergodic_tuple(2, 3, seed=11)
    B, _ = random_ergodic_tuple(2, 3, seed=11)
    assert np.array_equal(A.A, B.A)
    assert np.allclose(p.Omega, [1, 0, 0])
    # the ring is generated by the vectors Aring_alpha ell_i
    assert ring_span_rank(p) == 2


def test_random_tuple_with_given_omega():
    w = np.array([0.6, 0.8j])
    _, p = random_ergodic_tuple(2, 4, seed=3, omega=w)
    assert np.allclose(p.omega, w, atol=1e-12)
