"""Acceptance criteria 1 to 11, one test each.

Every test prints a single ``criterion N: PASS/FAIL`` line with the measured
quantity; the terminal summary repeats the verdicts.
"""
import time

import numpy as np
import pytest
from scipy.stats import unitary_group

from charfun_kit.charfun import (defect_data, dstar_hat, extended_charfun, gamma_isometry, poisson_hat,
                                 poisson_hat_apply, ring_defects, theorem52_check, theta_hat_on)
from charfun_kit.dilation import (cuntz_state_check, dilation_property_residual, intertwining_check,
                                  popescu_dilation, product_intertwiner_coefficients)
from charfun_kit.equivalence import (corollary63_check, kraus_residual, mixing_transform, phase_distance,
                                     symbols_equivalent, tuples_unitarily_equivalent)
from charfun_kit.fock import words_up_to
from charfun_kit.tuples import (RowContraction, find_invariant_vector_state, omega_p_power_decay,
                                profile_of, random_ergodic_tuple, section7_tuple,
                                star_stability_matrices, star_stability_norms)

from oracles import (S2, S3, S6, V, alternating, example_case1, example_case2_d1, example_case2_d2,
                     max_word_diff, poisson_tail, ring_vector)

M7 = np.array([[1, 0, -1], [0, 0, 0], [-1, 0, 1]], dtype=float)
G = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)


def report(num, ok, detail):
    print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def random_cases(count, seed, d_choices=(2, 3), n_choices=(2, 3, 4, 5)):
    rng = np.random.default_rng(seed)
    for t in range(count):
        yield int(rng.choice(d_choices)), int(rng.choice(n_choices)), int(rng.integers(2**31)), t


def test_criterion_1_golden_values():
    start = time.perf_counter()
    A = section7_tuple()
    Omega, omega = find_invariant_vector_state(A)
    p = profile_of(A)
    dd = defect_data(A, p.omega)
    ring = ring_defects(p)
    gamma = gamma_isometry(p, ring, dd)
    Dh = dstar_hat(p)
    errs = {
        "Omega": np.abs(Omega - np.ones(3) / S3).max(),
        "omega": np.abs(omega - np.array([1, 1]) / S2).max(),
        "Q": np.abs(p.Q - np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]) / 3).max(),
        "Aring1": np.abs(p.Aring[0] - np.array([[0, 0, 0], [2, -1, -1], [-2, 1, 1]]) / (3 * S2)).max(),
        "Aring2": np.abs(p.Aring[1] - np.array([[1, 1, -2], [-1, -1, 2], [0, 0, 0]]) / (3 * S2)).max(),
        "ell1": np.abs(p.ell[0] - np.array([-1, 0, 1]) / S6).max(),
        "ell2": np.abs(p.ell[1] - np.array([1, 0, -1]) / S6).max(),
        "Aring1 ell1": np.abs(p.Aring[0] @ p.ell[0] - np.array([0, -1, 1]) / (2 * S3)).max(),
        "Dring_star": np.abs(p.ring_basis @ ring.Dring_star @ p.ring_basis.conj().T - M7 / S6).max(),
    }
    for k1, k2 in [(1, 0), (0, 1), (1, 1), (0.5, -2)]:
        h = ring_vector(k1, k2)
        errs[f"Dhat {k1},{k2}"] = np.abs(Dh @ h - (2 * k1 + k2) / S6 * V).max()
    x = np.array([1, 0, -1]) / S2
    gx = dd.omega_defect_frame @ gamma @ (ring.basis_star.conj().T @ p.ring_basis.conj().T @ x)
    errs["gamma"] = np.abs(gx - V / S2).max()
    elapsed = time.perf_counter() - start
    worst = max(errs.values())
    report(1, worst <= 1e-10 and elapsed < 1.0, f"max error {worst:.2e}, {elapsed:.3f} s")


def test_criterion_2_decay_law():
    p = profile_of(section7_tuple())
    mats = star_stability_matrices(p, 12)
    e_m = max(np.abs(mats[n] - G / (3 * 2 ** (n - 1))).max() for n in range(1, 13))
    e_s = np.abs(star_stability_norms(p, 12) - 2.0 ** (1 - np.arange(1, 13))).max()
    report(2, e_m <= 1e-12 and e_s <= 1e-12, f"M_n error {e_m:.2e}, s_n error {e_s:.2e}")


def test_criterion_3_extended_charfun():
    p = profile_of(section7_tuple())
    N = 6
    t1 = theta_hat_on(p, 1, p.Omega, N)
    t2 = theta_hat_on(p, 2, p.Omega, N)
    e1 = max_word_diff(t1, example_case1(N))
    e0 = np.abs(t1[()] - np.array([1, -1]) / 6).max()
    nonalt = max((np.abs(v).max() for w, v in t1.items() if not alternating(w)), default=0.0)
    anti = max_word_diff(t1, {w: -v for w, v in t2.items()})
    e2 = 0.0
    for k1, k2 in [(1, 0), (0, 1), (1, 1)]:
        h = ring_vector(k1, k2)
        e2 = max(e2, max_word_diff(theta_hat_on(p, 1, h, N), example_case2_d1(k1, k2, N)),
                 max_word_diff(theta_hat_on(p, 2, h, N), example_case2_d2(k1, k2, N)))
    ok = max(e1, e0, nonalt, e2) <= 1e-10 and anti <= 1e-15
    report(3, ok, f"case I {max(e1, e0):.2e}, non-alternating {nonalt:.2e}, "
                  f"antisymmetry {anti:.2e}, case II {e2:.2e}")


def _truncation_gap(p, h, N):
    _, coeffs = poisson_hat_apply(p, poisson_hat(p, N), h)
    lhs = np.linalg.norm(h) ** 2 - sum(np.linalg.norm(v) ** 2 for v in coeffs.values())
    return abs(lhs - poisson_tail(p.Aring, h, N + 1))


def test_criterion_4_truncation_identity():
    p = profile_of(section7_tuple())
    worst = max(_truncation_gap(p, ring_vector(k1, k2), N)
                for k1, k2 in [(1, 0), (0.3, -1.2j)] for N in range(7))
    rng = np.random.default_rng(4)
    for d, n, seed, t in random_cases(20, 44, n_choices=(2, 3, 4, 5)):
        _, q = random_ergodic_tuple(d, n, seed=seed)
        h = q.Q @ (rng.normal(size=n) + 1j * rng.normal(size=n))
        worst = max(worst, _truncation_gap(q, h, t % 7))
    report(4, worst <= 1e-10, f"max gap {worst:.2e} over the golden tuple and 20 random tuples")


def _oracle_gap(A, p, h, steps):
    o = product_intertwiner_coefficients(A, p, h, steps, check_ergodic=True)
    vac, coeffs = poisson_hat_apply(p, poisson_hat(p, steps - 1), h)
    gap = abs(o.vacuum - vac)
    for w in words_up_to(p.d, steps - 1):
        gap = max(gap, float(np.abs(o.coeffs.get(w, 0) - coeffs.get(w, 0)).max()))
    return gap


def test_criterion_5_oracle_equivalence():
    A = section7_tuple()
    p = profile_of(A)
    worst = max(_oracle_gap(A, p, h, 8) for h in [p.Omega, ring_vector(1, 0), ring_vector(0.2, 1j)])
    rng = np.random.default_rng(5)
    for d, n, seed, _ in random_cases(5, 55):
        B, q = random_ergodic_tuple(d, n, seed=seed)
        h = rng.normal(size=n) + 1j * rng.normal(size=n)
        worst = max(worst, _oracle_gap(B, q, h, 6))
    report(5, worst <= 1e-10, f"max coefficient deviation {worst:.2e}")


def test_criterion_6_ring_transport():
    rep = theorem52_check(profile_of(section7_tuple()), 6)
    worst = max(rep.poisson_residual, rep.charfun_residual)
    for d, n, seed, _ in random_cases(20, 66):
        _, q = random_ergodic_tuple(d, n, seed=seed)
        r = theorem52_check(q, 6)
        worst = max(worst, r.poisson_residual, r.charfun_residual)
    report(6, worst <= 1e-9, f"max residual {worst:.2e} over the golden tuple and 20 random tuples")


def test_criterion_7_dilation_identities():
    A = section7_tuple()
    p = profile_of(A)
    dd = defect_data(A, p.omega)
    dil = popescu_dilation(A, dd)
    e_dil = dilation_property_residual(dil, 6)
    e_cuntz = cuntz_state_check(dil, p.Omega, p.omega, 3)
    ok = e_dil <= 1e-12 and e_cuntz <= 1e-12
    ratios = []
    cases = [(A, p, dd, 8)]
    for d, n, seed, _ in random_cases(3, 77, n_choices=(2, 3, 4)):
        B, q = random_ergodic_tuple(d, n, seed=seed)
        cases.append((B, q, defect_data(B, q.omega), 6 if d == 2 else 5))
    for B, q, dq, N in cases:
        theta = extended_charfun(q, dq, N)
        res = intertwining_check(q, dq, theta, N).residual
        bound = 10 * np.sqrt(star_stability_norms(q, N + 1)[-1])
        ratios.append(res / bound if bound > 0 else (0.0 if res == 0 else np.inf))
        ok = ok and res <= bound
    report(7, ok, f"dilation {e_dil:.2e}, Cuntz {e_cuntz:.2e}, "
                  f"worst intertwining/bound {max(ratios):.2e}")


def test_criterion_8_forward_equivalence():
    passed = 0
    worst = 0.0
    for d, n, seed, t in random_cases(50, 88):
        A, pA = random_ergodic_tuple(d, n, seed=seed)
        U0 = unitary_group.rvs(n, random_state=seed % 2**32)
        B = RowContraction(np.einsum("ab,ibc,dc->iad", U0, A.A, np.conj(U0)))
        pB = profile_of(B)
        thA = extended_charfun(pA, defect_data(A, pA.omega), 6)
        thB = extended_charfun(pB, defect_data(B, pB.omega), 6)
        rep = symbols_equivalent(thA, thB)
        res = tuples_unitarily_equivalent(A, B, Omega_A=pA.Omega, Omega_B=pB.Omega)
        dist = phase_distance(res.U, U0) if res.found else np.inf
        worst = max(worst, rep.residual, rep.unitarity_defect, dist)
        if rep.equivalent and rep.residual <= 1e-8 and rep.unitarity_defect <= 1e-8 and dist <= 1e-8:
            passed += 1
    report(8, passed == 50, f"{passed}/50 trials, worst residual {worst:.2e}")


def test_criterion_9_converse():
    agree = 0
    smallest = np.inf
    for d, n, seed, _ in random_cases(50, 99):
        A, pA = random_ergodic_tuple(d, n, seed=seed)
        B, pB = random_ergodic_tuple(d, n, seed=seed + 1, omega=pA.omega)
        thA = extended_charfun(pA, defect_data(A, pA.omega), 6)
        thB = extended_charfun(pB, defect_data(B, pB.omega), 6)
        rep = symbols_equivalent(thA, thB)
        found = tuples_unitarily_equivalent(A, B).found
        smallest = min(smallest, rep.residual)
        if rep.residual >= 1e-3 and not found and rep.equivalent == found:
            agree += 1
    report(9, agree == 50, f"{agree}/50 agree, smallest symbol residual {smallest:.3f}")


def test_criterion_10_mixing_invariance():
    A = section7_tuple()
    worst = 0.0
    conj = 0
    for t in range(20):
        u = unitary_group.rvs(2, random_state=1000 + t)
        mixed, _ = mixing_transform(A, u)
        worst = max(worst, kraus_residual(A, mixed))
        rep = corollary63_check(A, mixed)
        conj += rep.conjugate and rep.consistent
    report(10, worst <= 1e-12 and conj == 20, f"Kraus residual {worst:.2e}, {conj}/20 conjugate")


def test_criterion_11_omega_p_decay():
    A = section7_tuple()
    r = omega_p_power_decay(A, profile_of(A), 20)
    monotone = bool(np.all(np.diff(r) <= 1e-15))
    report(11, monotone and r[20] <= 1e-3, f"r_0 = {r[0]:.3f}, r_20 = {r[20]:.2e}, monotone {monotone}")
