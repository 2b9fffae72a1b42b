import numpy as np
import pytest

from conftest import short_noise
from stochastic_rim.errors import BlowUpError, ConfigurationError, NoiseRangeError
from stochastic_rim.experiments.fitting import is_non_increasing
from stochastic_rim.models.dynamics import (
    Trajectory,
    integrate_amplitude,
    integrate_reduced,
    integrate_v,
    linear_benchmark_solution,
    quadratic_h,
    reduced_vector_field,
    to_u,
    to_v,
)
from stochastic_rim.models.dynamics.amplitude import CUBIC_COEFF
from stochastic_rim.models.noise import NoisePath, TimeGrid, ou_residual, shift_path, z_origin
from stochastic_rim.models.spectral import SpectralConfig, build_burgers, norms


@pytest.fixture(scope="module")
def linear():
    return SpectralConfig.linear([0.0, 3.0, 8.0, 15.0]).build()


def test_linear_decay_without_noise(linear):
    path = short_noise(0.0, horizon=2.0)
    v0 = np.array([0.5, 0.2, -0.1, 0.05])
    traj = integrate_v(linear, path, v0, 2.0, 0.01, cutoff=False)
    expected = v0[None, :] * np.exp(-np.outer(traj.times, linear.lam))
    np.testing.assert_allclose(traj.states, expected, rtol=1e-12, atol=1e-300)
    assert traj.representation == "v"


def test_linear_benchmark(linear):
    path = short_noise(0.1, seed=4, horizon=2.0, dt=0.001)
    u0 = np.array([0.5, 0.2, -0.1, 0.05])
    v0 = np.exp(-z_origin(path)) * u0
    u = to_u(integrate_v(linear, path, v0, 2.0, 0.01, cutoff=False), path)
    tolerance = 1.01 * np.expm1(ou_residual(path)) + 1e-12
    for t in (0.5, 1.0, 2.0):
        exact = linear_benchmark_solution(u0, linear.lam, path, t)
        i = u.grid.index_of(t)
        assert float(norms(linear, u.states[i] - exact)) <= tolerance * float(norms(linear, exact))


def test_energy_does_not_grow_without_noise_or_cutoff(burgers):
    path = short_noise(0.0, horizon=2.0)
    v0 = burgers.basis_vector(1, 0.3) + burgers.basis_vector(2, 0.1)
    traj = integrate_v(burgers, path, v0, 2.0, 0.01, cutoff=False)
    assert is_non_increasing(traj.norms(burgers), slack=1e-14)
    assert traj.norms(burgers)[-1] < traj.norms(burgers)[0]


def test_cutoff_is_inactive_inside_the_ball(burgers, noisy_path):
    v0 = burgers.basis_vector(1, 0.01)
    with_cut = integrate_v(burgers, noisy_path, v0, 1.0, 0.01, cutoff=True)
    without = integrate_v(burgers, noisy_path, v0, 1.0, 0.01, cutoff=False)
    assert np.max(to_u(with_cut, noisy_path).norms(burgers)) < burgers.r_cut
    np.testing.assert_array_equal(with_cut.states, without.states)


def test_representation_changes(burgers, noisy_path):
    quiet = short_noise(0.0)
    traj = integrate_v(burgers, quiet, burgers.basis_vector(1, 0.02), 1.0, 0.01)
    np.testing.assert_array_equal(to_u(traj, quiet).states, traj.states)

    traj = integrate_v(burgers, noisy_path, burgers.basis_vector(1, 0.02), 1.0, 0.01)
    u = to_u(traj, noisy_path)
    assert u.representation == "u"
    np.testing.assert_allclose(to_v(u, noisy_path).states, traj.states, rtol=1e-14)
    with pytest.raises(ConfigurationError):
        to_v(traj, noisy_path)
    with pytest.raises(ConfigurationError):
        to_u(u, noisy_path)


def test_integration_errors(burgers, noisy_path):
    with pytest.raises(BlowUpError) as err:
        integrate_v(burgers, noisy_path, burgers.basis_vector(1, 2.0), 1.0, 0.01, cutoff=False, blowup_guard=1.0)
    assert err.value.time == pytest.approx(0.01)
    with pytest.raises(ConfigurationError):
        integrate_v(burgers, noisy_path, burgers.basis_vector(1, 0.01), 1.0, 0.015)
    with pytest.raises(NoiseRangeError):
        integrate_v(burgers, noisy_path, burgers.basis_vector(1, 0.01), 5.0, 0.01)
    with pytest.raises(ConfigurationError):
        integrate_v(burgers, noisy_path, np.full(burgers.n_total, np.nan), 1.0, 0.01)


def test_trajectory_csv(tmp_path, burgers, noisy_path):
    traj = integrate_v(burgers, noisy_path, burgers.basis_vector(1, 0.02), 0.1, 0.01)
    traj.write_csv(tmp_path / "v.csv", burgers, extra={"flag": np.ones(len(traj.times))})
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0].split(",") == ["t"] + [f"a{k}" for k in range(1, 9)] + ["norm_v", "flag"]
    assert len(lines) == len(traj.times) + 1


def test_reduced_flow_at_rest(burgers, noisy_path):
    traj = integrate_reduced(burgers, noisy_path, [0.0], 1.0, 0.01)
    assert np.all(traj.states == 0.0)
    with pytest.raises(ConfigurationError):
        integrate_reduced(burgers, noisy_path, [0.01], 1.0, 0.01, mode="linear")


def test_reduced_drift_is_cubic():
    # R = 0.2 keeps the whole state inside the cut-off ball
    model = build_burgers(16, R=0.2)
    for a in (0.01, 0.05):
        v_c = model.basis_vector(1, a)
        drift = reduced_vector_field(model, v_c, quadratic_h(model, v_c, 0.0))
        assert drift[0] == pytest.approx(-CUBIC_COEFF * a ** 3, rel=0.05)
        assert np.all(drift[1:] == 0.0)


def test_exact_and_quadratic_reduced_flows_agree(burgers, noisy_path, perron_config):
    a0 = 0.02
    quad = integrate_reduced(burgers, noisy_path, [a0], 0.5, 0.01, mode="quadratic", config=perron_config)
    exact = integrate_reduced(burgers, noisy_path, [a0], 0.5, 0.01, mode="exact-LP", config=perron_config)
    gap = np.max(norms(burgers, quad.states - exact.states))
    assert gap <= a0 ** 2
    np.testing.assert_allclose(quad.states[:, 0], exact.states[:, 0], rtol=1e-3)


def _flat_path(horizon: float, dt: float) -> NoisePath:
    return NoisePath.from_function(TimeGrid.two_sided(0.0, horizon, dt), np.zeros_like)


def test_amplitude_equilibrium():
    nu0 = 0.5
    a_star = np.sqrt(12.0 * nu0)
    traj = integrate_amplitude(nu0, a_star, 2.0, 0.01, _flat_path(2.0, 0.01))
    assert isinstance(traj, Trajectory)
    assert traj.representation == "amplitude"
    np.testing.assert_allclose(traj.states[:, 0], a_star, rtol=1e-12)

    decaying = integrate_amplitude(0.0, 1.0, 2.0, 0.01, _flat_path(2.0, 0.01))
    assert is_non_increasing(decaying.states[:, 0])
    # a' = -a^3/12 from a = 1 gives a(2) = (1 + 1/3)^(-1/2)
    assert decaying.final[0] == pytest.approx((1.0 + 2.0 / 6.0) ** -0.5, rel=1e-4)


def test_amplitude_errors():
    with pytest.raises(ConfigurationError):
        integrate_amplitude(1.0, 0.5, 1.0, 0.015, _flat_path(1.0, 0.01))
    with pytest.raises(NoiseRangeError):
        integrate_amplitude(1.0, 0.5, 2.0, 0.01, _flat_path(1.0, 0.01))


def test_self_convergence_is_second_order():
    model = build_burgers(4, R=1.0)
    path = short_noise(0.0, horizon=1.0, dt=0.0025)
    v0 = model.basis_vector(1, 0.5) + model.basis_vector(2, 0.3)
    finals = [integrate_v(model, path, v0, 1.0, dt, cutoff=False).final for dt in (0.01, 0.005, 0.0025)]
    coarse = float(norms(model, finals[0] - finals[1]))
    fine = float(norms(model, finals[1] - finals[2]))
    assert np.log2(coarse / fine) >= 1.8

    first_order = [
        integrate_v(model, path, v0, 1.0, dt, cutoff=False, corrector=False).final for dt in (0.01, 0.005)
    ]
    assert float(norms(model, first_order[0] - first_order[1])) > coarse


def test_solution_map_is_a_cocycle(burgers, noisy_path):
    v0 = burgers.basis_vector(1, 0.03) + burgers.basis_vector(3, 0.01)
    whole = integrate_v(burgers, noisy_path, v0, 1.0, 0.01)
    k = whole.grid.index_of(0.4)
    shifted = shift_path(noisy_path, 0.4)
    restarted = integrate_v(burgers, shifted, whole.states[k], 0.6, 0.01)
    np.testing.assert_allclose(restarted.states, whole.states[k:], rtol=1e-10, atol=1e-16)
    np.testing.assert_allclose(to_u(restarted, shifted).states, to_u(whole, noisy_path).states[k:], rtol=1e-10, atol=1e-16)
