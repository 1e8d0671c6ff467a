import mpmath as mp
import pytest

import frozen
import oracles


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_tilted_values_frozen(alpha):
    s, tau = oracles.tilted_slope_offset(alpha)
    assert float(s) == pytest.approx(frozen.TILTED_SLOPE_OFFSET[alpha][0], abs=1e-15)
    assert float(tau) == pytest.approx(frozen.TILTED_SLOPE_OFFSET[alpha][1], abs=1e-15)
    assert float(oracles.tilted_fidelity_at_lhs(alpha)) == pytest.approx(frozen.TILTED_F_AT_LHS[alpha], abs=1e-15)
    assert float(oracles.di_crossing(alpha)) == pytest.approx(frozen.DI_CROSSING[alpha], abs=1e-15)


def test_scalar_values_frozen():
    s3 = oracles.three_setting_slope()
    assert float(s3) == pytest.approx(frozen.THREE_SETTING_SLOPE, abs=1e-15)
    assert float(oracles.prior_chsh("1.99957")) == pytest.approx(frozen.PRIOR_CHSH_AT_1_99957, abs=1e-15)
    assert float(oracles.guessing_threshold(s3, 3)) == pytest.approx(frozen.THRESHOLD_P_THREE, abs=1e-15)
    s2 = 1 / (4 - 2 * mp.sqrt(2))
    assert float(oracles.guessing_threshold(s2, 2)) == pytest.approx(frozen.THRESHOLD_P_TWO, abs=1e-15)
    c = 1 / (2 * s3 * 3)
    assert float(c) == pytest.approx(frozen.THREE_SETTING_C, abs=1e-15)
    assert oracles.copies_coinciding(c, mp.mpf("0.01"), mp.mpf("0.01")) == frozen.COPIES_THREE_EPS_001
    assert oracles.copies_coinciding(c, mp.mpf("0.1"), mp.mpf("0.01")) == frozen.COPIES_THREE_EPS_01
