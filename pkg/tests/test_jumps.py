import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mmv_lab import (
    DegenerateMarket,
    InputError,
    JumpDiffusionParams,
    SimConfig,
    ZeroRiskPremium,
    simulate,
)
from mmv_lab.jumps import (
    _resolve_workers,
    analytic_second_moment,
    jump_threshold,
    kernel_loading,
    negative_sign_probability,
)
from mmv_lab.preferences import PreferenceParams

THETA1 = PreferenceParams(1.0)


def _law(sizes, weights, **overrides):
    base = dict(r=0.01, mu=0.07, sigma=0.25, intensity=2.0, horizon=0.5)
    base.update(overrides)
    return JumpDiffusionParams(
        jump_sizes=np.array(sizes), jump_weights=np.array(weights), **base
    )


# ----------------------------------------------------------- closed forms


def test_loading_and_threshold_manual_arithmetic():
    params = _law([-0.2, 0.5], [0.3, 0.7])
    xi1 = 0.3 * -0.2 + 0.7 * 0.5
    xi2 = 0.3 * 0.04 + 0.7 * 0.25
    assert params.xi1 == pytest.approx(xi1, abs=1e-15)
    assert params.xi2 == pytest.approx(xi2, abs=1e-15)
    a = (0.07 - 0.01 + 2.0 * xi1) / (0.25**2 + 2.0 * xi2)
    assert kernel_loading(params) == pytest.approx(a, abs=1e-15)
    assert jump_threshold(params) == pytest.approx(1.0 / a, abs=1e-12)
    assert kernel_loading(params) * jump_threshold(params) == pytest.approx(
        1.0, abs=1e-12
    )
    m2 = math.exp(a * a * (0.0625 + 2.0 * xi2) * 0.5)
    assert analytic_second_moment(params) == pytest.approx(m2, rel=1e-14)


def test_threshold_is_one_for_diffusion_only_unit_loadings():
    # without jumps a = (mu - r) / sigma^2, so these premia make qbar = 1
    for sigma, premium in [(0.2, 0.04), (0.3, 0.09)]:
        params = _law([0.5], [1.0], r=0.0, mu=premium, sigma=sigma, intensity=0.0)
        assert kernel_loading(params) == pytest.approx(1.0, abs=1e-15)
        assert jump_threshold(params) == pytest.approx(1.0, abs=1e-15)


def test_part1_law_sits_just_below_threshold(jump_part1):
    upper = float(jump_part1.jump_sizes[1])
    assert upper / jump_threshold(jump_part1) == pytest.approx(0.99, abs=1e-12)
    assert negative_sign_probability(jump_part1) == 0.0


def test_part2_law_crosses_threshold(jump_part2):
    upper = float(jump_part2.jump_sizes[1])
    threshold = jump_threshold(jump_part2)
    assert upper > threshold
    # one oversized jump flips the kernel's sign; flips cancel in pairs
    prob = 0.5 * (1.0 - math.exp(-2.0 * 1.0 * 0.5 * 1.0))
    assert negative_sign_probability(jump_part2) == pytest.approx(prob, abs=1e-15)


def test_literal_low_weight_variant_cannot_cross(jump_literal):
    upper = float(jump_literal.jump_sizes[1])
    assert upper < jump_threshold(jump_literal)
    assert negative_sign_probability(jump_literal) == 0.0


def test_zero_risk_premium():
    params = _law([0.5], [1.0], r=0.02, mu=0.02, intensity=0.0)
    assert kernel_loading(params) == 0.0
    with pytest.raises(ZeroRiskPremium):
        jump_threshold(params)
    assert negative_sign_probability(params) == 0.0


def test_degenerate_market():
    params = _law([0.5], [1.0], sigma=0.0, intensity=0.0)
    with pytest.raises(DegenerateMarket):
        kernel_loading(params)


def test_negative_premium_flips_loading_sign():
    params = _law([0.1], [1.0], r=0.05, mu=0.0, intensity=0.0)
    assert kernel_loading(params) < 0.0
    assert jump_threshold(params) < 0.0
    assert negative_sign_probability(params) == 0.0


# ------------------------------------------------------------- validation


def test_params_validation():
    with pytest.raises(InputError):
        _law([0.5, 0.6], [0.5, 0.6])  # weights exceed 1
    with pytest.raises(InputError):
        _law([-1.0], [1.0])  # size at the liability boundary
    with pytest.raises(InputError):
        _law([0.5, 0.6], [1.0, 0.0])  # zero weight
    with pytest.raises(InputError):
        _law([0.5], [1.0], sigma=-0.1)
    with pytest.raises(InputError):
        _law([0.5], [1.0], horizon=0.0)
    with pytest.raises(InputError):
        _law([], [])
    with pytest.raises(InputError):
        _law([0.5, 0.6], [1.0])
    with pytest.raises(InputError):
        SimConfig(0, 64, 1)
    with pytest.raises(InputError):
        SimConfig(100, 0, 1)


def test_params_are_frozen_copies():
    sizes = np.array([0.5])
    params = _law(sizes, [1.0])
    with pytest.raises(ValueError):
        params.jump_sizes[0] = 1.0
    sizes[0] = 2.0
    assert params.jump_sizes[0] == 0.5


# ------------------------------------------------------------- simulation


def test_part1_statistics_match_closed_forms(jump_part1):
    report = simulate(jump_part1, SimConfig(20_000, 64, 3), 1.0, THETA1)
    assert report.frac_negative_kernel == 0.0
    assert report.sign_oracle_frac == 0.0
    assert abs(report.kernel_mean.value - 1.0) <= 4.0 * report.kernel_mean.se
    m2 = report.analytic_second_moment
    assert (
        abs(report.kernel_second_moment.value - m2)
        <= 4.0 * report.kernel_second_moment.se
    )
    assert abs(report.budget_check.value - 1.0) <= 4.0 * report.budget_check.se
    value = 1.0 + (m2 - 1.0) / 2.0
    assert (
        abs(report.mv_value_estimate.value - value)
        <= 4.0 * report.mv_value_estimate.se
    )
    assert report.warnings == ()


def test_part2_sign_frequency_matches_oracle(jump_part2):
    report = simulate(jump_part2, SimConfig(20_000, 64, 5), 1.0, THETA1)
    # the parity oracle is exact path by path, not merely in distribution
    assert report.frac_negative_kernel == report.sign_oracle_frac
    p = report.sign_oracle_prob
    se = math.sqrt(p * (1.0 - p) / report.n_paths)
    assert abs(report.frac_negative_kernel - p) <= 4.0 * se
    assert report.frac_negative_kernel > 0.25


def test_wealth_identity_on_collected_paths(jump_part2):
    x0 = 1.3
    theta = 2.0
    report = simulate(
        jump_part2,
        SimConfig(2_000, 64, 9),
        x0,
        PreferenceParams(theta),
        collect_paths=True,
    )
    assert report.path_kernel.shape == (2_000,)
    growth = math.exp(jump_part2.r * jump_part2.horizon) * x0
    expected = growth + report.analytic_second_moment / theta - report.path_kernel / theta
    assert_allclose(report.path_wealth, expected, atol=1e-12)


def test_reports_identical_across_worker_counts(jump_part2):
    config = SimConfig(8_292, 32, 11)  # several chunks plus a ragged tail
    solo = simulate(jump_part2, config, 1.0, THETA1, workers=1)
    again = simulate(jump_part2, config, 1.0, THETA1, workers=1)
    pooled = simulate(jump_part2, config, 1.0, THETA1, workers=3)
    wide = simulate(jump_part2, config, 1.0, THETA1, workers=8)
    assert solo == again
    assert solo == pooled
    assert solo == wide


def test_seed_and_grid_change_the_draw(jump_part2):
    base = simulate(jump_part2, SimConfig(2_000, 32, 11), 1.0, THETA1)
    other_seed = simulate(jump_part2, SimConfig(2_000, 32, 12), 1.0, THETA1)
    assert base.kernel_mean != other_seed.kernel_mean


def test_thread_env_cap(monkeypatch):
    monkeypatch.delenv("MMV_LAB_THREADS", raising=False)
    assert _resolve_workers(None) == 1
    assert _resolve_workers(6) == 6
    monkeypatch.setenv("MMV_LAB_THREADS", "2")
    assert _resolve_workers(None) == 2
    assert _resolve_workers(8) == 2
    assert _resolve_workers(1) == 1
    monkeypatch.setenv("MMV_LAB_THREADS", "soon")
    with pytest.raises(InputError):
        _resolve_workers(None)


def test_env_capped_run_matches_serial_run(jump_part1, monkeypatch):
    config = SimConfig(6_000, 16, 21)
    monkeypatch.delenv("MMV_LAB_THREADS", raising=False)
    serial = simulate(jump_part1, config, 1.0, THETA1)
    monkeypatch.setenv("MMV_LAB_THREADS", "2")
    capped = simulate(jump_part1, config, 1.0, THETA1, workers=16)
    assert serial == capped


def test_coarse_grid_warning(jump_part1):
    report = simulate(jump_part1, SimConfig(500, 16, 2), 1.0, THETA1)
    assert any("coarse grid" in w for w in report.warnings)
    report = simulate(jump_part1, SimConfig(500, 64, 2), 1.0, THETA1)
    assert not any("coarse grid" in w for w in report.warnings)


def test_nonpositive_premium_warning():
    params = _law([0.1], [1.0], r=0.05, mu=0.0, intensity=0.0)
    report = simulate(params, SimConfig(500, 64, 2), 1.0, THETA1)
    assert any("premium" in w for w in report.warnings)
    assert report.frac_negative_kernel == 0.0
