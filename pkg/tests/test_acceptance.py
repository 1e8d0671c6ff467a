"""Acceptance checks, one group per criterion; the summary lines come from conftest."""

import time

import numpy as np
import pytest
from scipy.linalg import expm

import oracles
from steercert import certify_analytic as ca
from steercert import certify_sdp as cs
from steercert import model, qmat, sampling, sos
from steercert.model import Family, SteeringInequality


@pytest.mark.criterion(1)
def test_bounds_table():
    t0 = time.perf_counter()
    for alpha, lhs, q in [(0.0, 2.0, 2 * np.sqrt(2)), (0.5, 2.5, np.sqrt(8.5)), (1.0, 3.0, np.sqrt(10))]:
        ineq = SteeringInequality(Family.TILTED_ANALOG, alpha)
        assert model.lhs_bound_closed_form(ineq) == lhs
        assert model.quantum_bound(ineq) == pytest.approx(q, abs=1e-15)
        assert abs(model.lhs_bound(ineq) - lhs) < 1e-10
        op = lambda sg, a=alpha: a * qmat.Z + (sg[0] + sg[1]) * qmat.Z + (sg[0] - sg[1]) * qmat.X
        assert abs(oracles.lhs_by_enumeration(op, 2) - lhs) < 1e-10
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2)
def test_tilted_certificate_values():
    t0 = time.perf_counter()
    certs = {alpha: ca.certify_tilted_analog(alpha) for alpha in (0.0, 0.5, 1.0)}
    assert time.perf_counter() - t0 < 10.0
    assert all(c.valid for c in certs.values())
    assert round(certs[0.0].s, 6) == 0.603553 and round(certs[0.0].tau, 6) == -0.707107
    for alpha in np.linspace(0, 1.9, 20):
        s, tau = ca.tilted_s_tau(alpha)
        theta = model.target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
        assert abs(s * (alpha + 2) + tau - np.cos(theta) ** 2) < 1e-9
    for alpha, printed in [(0.0, 0.5), (1.0, 0.816)]:
        assert abs(certs[alpha].fidelity(alpha + 2) - printed) < 5e-4


@pytest.mark.criterion(2)
@pytest.mark.xfail(strict=True, reason="cos^2(theta) at alpha = 0.5 is 0.671499, 5.01e-4 from the "
                                       "printed 0.672")
def test_tilted_printed_threshold_at_alpha_half():
    cert = ca.certify_tilted_analog(0.5)
    assert abs(cert.fidelity(2.5) - 0.672) < 5e-4


@pytest.mark.criterion(3)
def test_chsh_steering_bound():
    cert = ca.certify_chsh_steering()
    assert cert.valid
    assert abs(cert.s - 1 / (4 - 2 * np.sqrt(2))) < 1e-10
    assert abs(cert.fidelity(np.sqrt(2)) - 0.5) < 1e-10
    prior = ca.prior_chsh_bound(1.99957)
    assert 0.5 < prior < 0.51


@pytest.mark.criterion(4)
def test_three_setting_slope_and_thresholds():
    assert round(ca.THREE_SETTING_S, 4) == 0.4730
    p3 = sampling.guessing_probability(SteeringInequality(Family.THREE_TRUSTED, 0, 1),
                                       3 - 1 / (2 * ca.THREE_SETTING_S))
    s2 = 1 / (4 - 2 * np.sqrt(2))
    p2 = sampling.guessing_probability(SteeringInequality(Family.TWO_TRUSTED, 0, 1), 2 - 1 / (2 * s2))
    assert abs(p3 - 0.82381) < 1e-4 and abs(p2 - 0.85355) < 1e-4
    assert p3 < p2


@pytest.mark.criterion(4)
@pytest.mark.xfail(strict=True, reason="with q3 = 1/2 the channel leaves G_1 and G_2 with negative "
                                       "eigenvalues (about -0.027 and -0.25)")
def test_three_setting_psd_margins():
    t0 = time.perf_counter()
    cert = ca.certify_three_setting(strict=False)
    assert time.perf_counter() - t0 < 60.0
    assert cert.extra["g1_margin"] >= -1e-9
    assert cert.extra["g2_margin"] >= -1e-9


@pytest.mark.criterion(5)
def test_scenario_ordering_and_di_crossings():
    for alpha, printed in [(0.0, 2.1059), (0.5, 2.655), (1.0, 3.103)]:
        sq = np.sqrt(8 + 2 * alpha ** 2)
        rows = np.array(ca.comparison_table(alpha, np.linspace(alpha + 2, sq, 100)))
        assert np.all(rows[:, 1] >= rows[:, 2] - 1e-12)
        assert np.all(rows[:, 2] >= rows[:, 3] - 1e-12)
        sa = ca.di_slope(alpha)
        theta = model.target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
        crossing = (np.cos(theta) ** 2 - 1 + sa * sq) / sa
        assert abs(crossing - printed) < 2e-3


@pytest.mark.criterion(6)
def test_sos_boundaries_and_runtime():
    t0 = time.perf_counter()
    _, checks = sos.verify_report(draws=100, seed=0)
    assert time.perf_counter() - t0 < 5.0
    passed = {c.sos_id for c in checks if c.passed}
    assert passed == set(sos.SOS_IDS) - {"D_S1_SOS3", "D_I1_SOS3"}
    for sos_id, root in [("D_S2_SOS1", 1), ("D_I2_SOS1", 4)]:
        for alpha in (0.5, 1.5):
            edge = np.sqrt(root + alpha ** 2)
            assert abs(sos.weight_boundary(sos_id, alpha, 0.5 * edge, edge + 1) - edge) < 1e-6


@pytest.mark.criterion(6)
@pytest.mark.xfail(strict=True, reason="D_S1_SOS3 and D_I1_SOS3 do not close for generic Bob "
                                       "observables with alpha > 0")
def test_all_sos_ids_close():
    _, checks = sos.verify_report(draws=100, seed=0)
    assert all(c.max_residual < 1e-10 for c in checks)


@pytest.mark.criterion(7)
def test_self_testing_relations_at_maximal_violation():
    cases = [SteeringInequality(Family.TILTED_ANALOG, 0.8), SteeringInequality(Family.TWO_TRUSTED, 0.8, 1.2),
             SteeringInequality(Family.TWO_UNTRUSTED, 0.8, 1.5),
             SteeringInequality(Family.THREE_TRUSTED, 0.8, 1.2),
             SteeringInequality(Family.THREE_UNTRUSTED, 0.8, 2.5)]
    for ineq in cases:
        bob = model.ideal_bob_settings(ineq)
        psi = model.target_state(model.target_theta(ineq))
        assert max(sos.relation_residuals(ineq, psi, bob).values()) < 1e-10
        _, fid, _ = sos.swap_isometry_output(psi, ineq, bob)
        assert abs(1 - fid) < 1e-10
        assert max(sos.measurement_selftest_residual(ineq, psi, bob).values()) < 1e-10


@pytest.mark.criterion(8)
def test_sdp_certifier():
    for a, b in [(0, 1), (1, 1), (1, 2), (2, 2)]:
        ineq = SteeringInequality(Family.THREE_TRUSTED, a, b)
        res = cs.solve_min_fidelity(ineq, model.target_theta(ineq), model.quantum_bound(ineq))
        assert abs(res.f_min - 1) < 1e-4
    ineq = SteeringInequality(Family.THREE_TRUSTED, 0.0, 1.0)
    theta = model.target_theta(ineq)
    at_lhs = cs.solve_min_fidelity(ineq, theta, model.lhs_bound(ineq))
    assert at_lhs.f_min <= at_lhs.f_upper + cs.SOLVER_TOL
    t0 = time.perf_counter()
    rows = cs.sweep_curve(ineq, theta, np.linspace(model.lhs_bound(ineq), model.quantum_bound(ineq), 30))
    assert time.perf_counter() - t0 < 300
    f = np.array([r[1] for r in rows])
    assert np.all(np.diff(f) >= -2e-6)
    assert f[0] == pytest.approx(at_lhs.f_min, abs=1e-5) and abs(f[-1] - 1) < 1e-4
    rng = np.random.default_rng(0)
    pattern = cs.build_gamma_pattern(3)
    for _ in range(50):
        d = int(rng.integers(2, 5))
        rho = qmat.random_density(2 * d, rng)
        proj = [(np.eye(d) + qmat.random_dichotomic(d, rng)) / 2 for _ in range(3)]
        assert qmat.min_eigenvalue(cs.gamma_from_strategy(pattern, rho, proj)) >= -1e-10


@pytest.mark.criterion(9)
def test_sample_planning():
    ineq = SteeringInequality(Family.THREE_TRUSTED, 0.0, 1.0)
    assert sampling.sample_count(ineq, 0.01, 0.01).n_required == 1305
    rho = model.noisy_state(np.pi / 4, 0.85)
    p = 0.5 + model.violation(ineq, rho, model.ideal_bob_settings(ineq)) / (2 * 3)
    emp = sampling.simulate_game(ineq, rho, 100_000, np.random.default_rng(2024))
    assert abs(emp - p) <= 3 * np.sqrt(p * (1 - p) / 100_000)


def _noisy_state(rng, theta, d=2):
    # cos(theta)|00> + sin(theta)|11> with Bob's qubit embedded in C^d
    pure = np.zeros(2 * d, dtype=complex)
    pure[0], pure[d + 1] = np.cos(theta), np.sin(theta)
    v = rng.uniform(0.5, 1)
    return v * qmat.projector(pure) + (1 - v) * qmat.random_density(2 * d, rng)


@pytest.mark.criterion(10)
def test_end_to_end_soundness():
    rng = np.random.default_rng(10)
    sdp_cases = [SteeringInequality(Family.THREE_TRUSTED, 0.0, 1.0),
                 SteeringInequality(Family.TWO_TRUSTED, 0.0, 1.0),
                 SteeringInequality(Family.THREE_UNTRUSTED, 1.0, 3.0)]
    for k in range(200):
        # analytic: tilted certificate with its own channel, Bob at a random angle
        alpha = rng.uniform(0, 1.9)
        ineq = SteeringInequality(Family.TILTED_ANALOG, alpha)
        theta = model.target_theta(ineq)
        s, tau = ca.tilted_s_tau(alpha)
        mu = rng.uniform(1e-3, np.pi / 4)
        rho = _noisy_state(rng, theta)
        ch, _, _ = ca.tilted_channel(alpha, mu, s, tau)
        extracted = sum(q * np.kron(np.eye(2), u) @ rho @ np.kron(np.eye(2), u).conj().T
                        for q, u in ch.branches)
        true_f = qmat.fidelity_pure(extracted, model.target_state(theta))
        assert s * model.violation(ineq, rho, model.tilted_settings(mu)) + tau <= true_f + 1e-9
        # SDP: any strategy's SWAP fidelity lies above the certified minimum
        ineq = sdp_cases[k % 3]
        theta = model.target_theta(ineq)
        d = 2 + k % 2
        rho = _noisy_state(rng, theta, d)
        bob = model.bob_matrices(model.ideal_bob_settings(ineq))
        proj = []
        for b in bob:
            u = qmat.random_unitary(d, rng) if d > 2 else np.eye(2)
            mat = np.eye(d, dtype=complex)
            mat[:2, :2] = b
            w = qmat.random_hermitian(d, rng) * 0.05
            rot = expm(1j * w) @ u
            proj.append((np.eye(d) + rot @ mat @ rot.conj().T) / 2)
        obs = model.violation(ineq, rho, [2 * p - np.eye(d) for p in proj])
        res = cs.solve_min_fidelity(ineq, theta, obs)
        assert res.status is cs.SdpStatus.OPTIMAL
        assert res.f_min <= cs.one_sided_swap_fidelity(rho, proj, theta) + 1e-9 + cs.SOLVER_TOL
