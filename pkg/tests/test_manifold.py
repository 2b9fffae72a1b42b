from dataclasses import replace

import numpy as np
import pytest

from stochastic_rim.errors import FixedPointError, PreconditionError
from stochastic_rim.models.manifold import (
    PerronConfig,
    PerronOperator,
    PsiCache,
    apply_T,
    compute_g_chain,
    dist_to_manifold,
    measure_contraction,
    psi_graph,
    psi_sample,
    solve_fixed_point,
)
from stochastic_rim.models.noise import z_origin
from stochastic_rim.models.spectral import build_burgers, ls_inverse_bs, norms


@pytest.fixture(scope="module")
def operator(burgers, noisy_path, perron_config):
    return PerronOperator(burgers, noisy_path, perron_config)


def test_operator_on_zero_history(burgers, noisy_path, operator):
    xi = burgers.basis_vector(1, 0.02)
    free = apply_T(burgers, noisy_path, [0.02], operator.zero_history(), operator=operator)
    expected = np.exp(operator.config.nu * operator.times + operator.big_z)[:, None] * xi
    np.testing.assert_allclose(free.values, expected, rtol=1e-14)
    assert free.norm(burgers) == pytest.approx(float(norms(burgers, xi)), rel=1e-12)

    zero = apply_T(burgers, noisy_path, [0.0], operator.zero_history(), operator=operator)
    assert np.all(zero.values == 0.0)


def test_zero_argument_has_zero_fixed_point(burgers, noisy_path, operator):
    sample = solve_fixed_point(burgers, noisy_path, [0.0], operator=operator)
    assert np.all(sample.v_star.values == 0.0)
    assert np.all(sample.h == 0.0)
    assert sample.g.som2 == 0.0 and sample.g.g3_pred == 0.0
    assert psi_graph(burgers, noisy_path, [0.0], operator=operator).tolist() == [0.0] * burgers.n_total


def test_fixed_point_bounds(burgers, noisy_path, operator):
    q = operator.conditions.contraction_bound
    for a in (0.005, 0.01, 0.02):
        sample = solve_fixed_point(burgers, noisy_path, [a], operator=operator)
        xi_norm = float(norms(burgers, sample.xi))
        assert sample.v_star.norm(burgers) <= xi_norm / (1.0 - q) * (1.0 + 1e-12)
        assert sample.residual < 1e-9
        assert sample.contraction_estimate <= 1.05 * q
        assert sample.in_hypothesis
        np.testing.assert_array_equal(sample.h, burgers.project_s(sample.v_star.at_zero()))


def test_hypothesis_bounds_the_graph_point(burgers, noisy_path, operator):
    z0 = z_origin(noisy_path)
    edge = burgers.r_cut * np.exp(-z0)
    inside = solve_fixed_point(burgers, noisy_path, [0.99 * edge], operator=operator)
    outside = solve_fixed_point(burgers, noisy_path, [1.01 * edge], operator=operator)
    assert inside.z0 == outside.z0 == z0
    assert inside.in_hypothesis
    assert not outside.in_hypothesis


def test_stable_part_scales_linearly_in_xi(burgers, noisy_path, operator):
    ratios = []
    for a in (0.005, 0.01, 0.02):
        sample = solve_fixed_point(burgers, noisy_path, [a], operator=operator)
        ratios.append(sample.g.vs_norm / float(norms(burgers, sample.xi)))
    # |v*_s| <= C R |xi| with the same C for every xi
    assert max(ratios) <= 0.5
    assert np.all(np.diff(ratios) > 0)


def test_precondition_and_iteration_errors(burgers, noisy_path, perron_config):
    wide = build_burgers(8, R=10.0)
    with pytest.raises(PreconditionError):
        solve_fixed_point(wide, noisy_path, [0.01], config=perron_config)

    with pytest.raises(FixedPointError) as err:
        solve_fixed_point(burgers, noisy_path, [0.02], config=perron_config, max_iter=1)
    assert err.value.iterations == 1


def test_psi_matches_quadratic_prediction_in_quiet_limit(burgers, quiet_path):
    config = PerronConfig(window=20.0, stride=4, tol=1e-14)
    op = PerronOperator(burgers, quiet_path, config)
    amplitudes = np.array([0.0075, 0.015, 0.03])
    errors = []
    for a in amplitudes:
        sample = psi_sample(burgers, quiet_path, [a], operator=op, with_g_chain=False)
        errors.append(sample.shape_error(burgers))
        assert sample.psi[1] == pytest.approx(a * a / 6.0, rel=0.05)
    slope = np.polyfit(np.log(amplitudes), np.log(errors), 1)[0]
    assert 2.7 <= slope <= 3.3
    # leading remainder is the mode-3 term a^3 / 32
    assert errors[0] == pytest.approx(amplitudes[0] ** 3 / 32.0 * np.sqrt(np.pi / 2.0), rel=0.25)


def test_quadratic_term_is_even(burgers, quiet_path):
    op = PerronOperator(burgers, quiet_path, PerronConfig(window=20.0, stride=4, tol=1e-13))
    plus = psi_graph(burgers, quiet_path, [0.02], operator=op)
    minus = psi_graph(burgers, quiet_path, [-0.02], operator=op)
    assert float(norms(burgers, plus - minus)) <= 0.1 * float(norms(burgers, ls_inverse_bs(burgers, burgers.basis_vector(1, 0.02))))


def test_g_chain_stages(burgers, noisy_path, operator):
    sample = psi_sample(burgers, noisy_path, [0.02], operator=operator)
    chain = sample.g
    assert compute_g_chain(sample).som2 == chain.som2
    assert len(chain.stage_errors) == 4
    assert chain.vs_g1_norm <= chain.vs_norm
    # removing the noise from g4 costs at most the size of the prediction
    assert chain.cut3 <= float(norms(burgers, chain.prediction))
    assert set(chain.to_dict()) >= {"som2", "g1_g2", "g2_g3", "cut2", "cut3", "vs_norm"}


def test_measured_contraction_within_bound(burgers, noisy_path, operator, rng):
    sample = solve_fixed_point(burgers, noisy_path, [0.02], operator=operator, with_g_chain=False)
    measured = measure_contraction(operator, sample.xi, 6, 0.1, rng, center=sample.v_star.values)
    assert 0.0 < measured <= operator.conditions.contraction_bound


def test_distance_to_manifold(burgers, noisy_path, perron_config):
    cache = PsiCache(burgers, noisy_path, replace(perron_config, psi_nodes=17))
    on_graph = cache.graph_point([0.02])
    result = dist_to_manifold(burgers, noisy_path, on_graph, cache=cache)
    assert result.distance <= 1e-7
    assert result.xi[0] == pytest.approx(0.02, abs=1e-6)
    assert not result.at_boundary

    bump = 0.01 * burgers.basis_vector(3)
    off = dist_to_manifold(burgers, noisy_path, on_graph + bump, cache=cache)
    assert off.distance <= float(norms(burgers, bump)) * (1.0 + 1e-6)

    far = dist_to_manifold(burgers, noisy_path, burgers.basis_vector(1, 1.0), cache=cache)
    assert far.at_boundary


def test_refining_the_history_step(burgers, quiet_path):
    xi = [0.02]
    h = {
        stride: solve_fixed_point(
            burgers, quiet_path, xi, config=PerronConfig(window=20.0, stride=stride, tol=1e-14), with_g_chain=False
        ).h
        for stride in (4, 2, 1)
    }
    scale = float(norms(burgers, h[1]))
    coarse = float(norms(burgers, h[4] - h[1]))
    finer = float(norms(burgers, h[2] - h[1]))
    assert finer <= coarse
    assert coarse <= 1e-4 * scale
