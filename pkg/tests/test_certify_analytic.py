import numpy as np
import pytest

import frozen
from steercert import certify_analytic as ca
from steercert import model, qmat
from steercert.model import Family, SteeringInequality


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_tilted_slope_offset_frozen(alpha):
    s, tau = ca.tilted_s_tau(alpha)
    np.testing.assert_allclose((s, tau), frozen.TILTED_SLOPE_OFFSET[alpha], atol=1e-13)
    cert = ca.certify_tilted_analog(alpha, mu_grid_size=128)
    assert cert.valid
    assert cert.fidelity(alpha + 2) == pytest.approx(frozen.TILTED_F_AT_LHS[alpha], abs=1e-12)


@pytest.mark.parametrize("alpha", np.linspace(0, 1.9, 20))
def test_tilted_bound_is_cos2_theta_at_lhs(alpha):
    s, tau = ca.tilted_s_tau(alpha)
    theta = model.target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
    assert s * (alpha + 2) + tau == pytest.approx(np.cos(theta) ** 2, abs=1e-12)
    assert s * np.sqrt(8 + 2 * alpha ** 2) + tau == pytest.approx(1.0, abs=1e-12)


def test_tilted_certificate_covers_both_cases():
    cert = ca.certify_tilted_analog(1.0, mu_grid_size=64)
    assert set(np.unique(cert.extra["case"])) == {1, 2}
    assert ca.case_boundary(1.0) in cert.grid
    assert cert.worst_margin >= -ca.MARGIN_TOL


def test_spectral_data_matches_numerics():
    for alpha, mu in [(0.0, 0.3), (1.0, 0.2), (1.0, 0.7), (1.5, 0.5)]:
        sd = ca.spectral_tilted(alpha, mu)
        op = model.steering_operator(SteeringInequality(Family.TILTED_ANALOG, alpha),
                                     model.tilted_settings(mu))
        vecs = sd.eigenvectors()
        np.testing.assert_allclose(op @ vecs, vecs * np.array(sd.lambdas), atol=1e-12)
        assert list(sd.lambdas) == sorted(sd.lambdas, reverse=True)


def test_shallower_slope_is_rejected():
    # the optimal slope is the smallest one; any shallower line claims more
    ineq = SteeringInequality(Family.TILTED_ANALOG, 0.5)
    s = 0.9 * ca.tilted_s_tau(0.5)[0]
    tau = 1 - s * model.quantum_bound(ineq)
    margins = []
    for mu in ca.mu_grid(32):
        ch, _, _ = ca.tilted_channel(0.5, mu, s, tau)
        margins.append(-np.inf if ch is None else ca.g_margin(ineq, model.tilted_settings(mu), ch, s, tau))
    assert min(margins) < -1e-6


def test_pencil_window_matches_bisection():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = qmat.random_hermitian(2, rng)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        r = np.outer(v, v.conj())
        win = ca.pencil_window(a, r)
        qs = np.linspace(-5, 5, 2001)
        ok = [qmat.min_eigenvalue(a + q * r) >= -1e-9 for q in qs]
        if win is None:
            assert not any(ok)
        else:
            inside = qs[np.array(ok)]
            assert inside.min() >= win[0] - 0.01 and inside.max() <= win[1] + 0.01


def test_chsh_certificate():
    cert = ca.certify_chsh_steering(mu_grid_size=128)
    assert cert.s == pytest.approx(1 / (4 - 2 * np.sqrt(2)), abs=1e-15)
    assert cert.fidelity(np.sqrt(2)) == pytest.approx(0.5, abs=1e-10)
    assert cert.fidelity(2.0) == pytest.approx(1.0, abs=1e-12)
    assert cert.valid


def test_prior_chsh_bound():
    assert ca.prior_chsh_bound(1.99957) == pytest.approx(frozen.PRIOR_CHSH_AT_1_99957, abs=1e-12)
    assert ca.prior_chsh_bound(1.99957) > 0.5
    assert ca.prior_chsh_bound(1.99) < 0.5


def test_three_setting_slope_and_g1():
    assert ca.THREE_SETTING_S == pytest.approx(frozen.THREE_SETTING_SLOPE, abs=1e-15)
    for mu in ca.mu_grid(32):
        g1, q1, q2 = ca.three_setting_g1(mu)
        assert 0 <= q1 <= 0.5 and 0 <= q2 <= 0.5
        assert q1 + q2 == pytest.approx(0.5)
        if mu <= 0.5:
            assert qmat.min_eigenvalue(g1) >= -1e-9
    # near mu = pi/4, s l1 + tau exceeds 1 - q3 and G_1 has a negative direction
    g1, q1, _ = ca.three_setting_g1(np.pi / 4)
    assert q1 == 0.5
    assert qmat.min_eigenvalue(g1) == pytest.approx(0.5 - (ca.THREE_SETTING_S * 2 + 1 - 3 * ca.THREE_SETTING_S))


def test_three_setting_margins_are_reported():
    cert = ca.certify_three_setting(grid=12, refine=False, strict=False)
    assert cert.extra["g1_margin"] < -0.02
    assert cert.extra["g2_margin"] < -0.1
    assert not cert.valid
    with pytest.raises(ca.CertificateInvalid) as err:
        ca.certify_three_setting(grid=8, refine=False)
    assert err.value.certificate is not None


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_scenario_ordering_and_crossings(alpha):
    sq = np.sqrt(8 + 2 * alpha ** 2)
    grid = np.linspace(alpha + 2, sq, 100)
    rows = np.array(ca.comparison_table(alpha, grid, clamp=False))
    assert np.all(rows[:, 1] >= rows[:, 2] - 1e-12)
    assert np.all(rows[:, 2] >= rows[:, 3] - 1e-12)
    sa = ca.di_slope(alpha)
    theta = model.target_theta(SteeringInequality(Family.TILTED_ANALOG, alpha))
    crossing = (np.cos(theta) ** 2 - (1 - sa * sq)) / sa
    assert crossing == pytest.approx(frozen.DI_CROSSING[alpha], abs=1e-12)
    np.testing.assert_allclose(rows[-1, 1:], 1.0, atol=1e-12)


def test_fidelity_lower_rejects_supra_quantum():
    with pytest.raises(ValueError):
        ca.fidelity_lower("DD", 0.0, 3.0)
    assert ca.fidelity_lower("1SDI", 0.0, 2.0) == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 1.5])
def test_dd_operator_inequality(alpha):
    assert ca.dd_operator_check(alpha) >= -1e-12


def test_extraction_channel_validation():
    with pytest.raises(ValueError):
        ca.ExtractionChannel(((0.6, np.eye(2)), (0.6, np.eye(2))))
    with pytest.raises(ValueError):
        ca.ExtractionChannel(((1.0, 2 * np.eye(2)),))


def _extracted_fidelity(rho, channel, psi):
    out = sum(q * np.kron(np.eye(2), u.conj().T) @ rho @ np.kron(np.eye(2), u.conj().T).conj().T
              for q, u in channel.branches)
    return float(np.real(psi.conj() @ out @ psi))


@pytest.mark.parametrize("alpha", [0.0, 0.7, 1.4])
def test_tilted_soundness_on_random_states(alpha):
    rng = np.random.default_rng(int(alpha * 10))
    ineq = SteeringInequality(Family.TILTED_ANALOG, alpha)
    s, tau = ca.tilted_s_tau(alpha)
    psi = model.target_state(model.target_theta(ineq))
    for _ in range(30):
        mu = rng.uniform(1e-3, np.pi / 4)
        ch, _, _ = ca.tilted_channel(alpha, mu, s, tau)
        v = rng.uniform(0, 1)
        rho = v * model.noisy_state(model.target_theta(ineq), 1.0) + (1 - v) * qmat.random_density(4, rng)
        observed = model.violation(ineq, rho, model.tilted_settings(mu))
        assert _extracted_fidelity(rho, ch, psi) >= s * observed + tau - 1e-9
