import numpy as np
import pytest
from scipy.optimize import minimize

from stochastic_rim.errors import ConfigurationError, DomainError
from stochastic_rim.models.spectral import (
    SpectralModel,
    apply_b,
    apply_b_cutoff,
    brute_force_b,
    build_burgers,
    check_conditions,
    compute_cb,
    compute_m_alpha_lambda,
    cutoff_lipschitz_factor,
    cutoff_profile,
    dump_tensor_csv,
    energy_residual,
    load_model_config,
    ls_inverse_bs,
    norms,
)


def test_burgers_spectrum(burgers16):
    assert burgers16.lambda_star == 3.0
    assert burgers16.n_c == 1
    assert burgers16.lam[4] == 24.0
    with pytest.raises(ConfigurationError):
        build_burgers(2)


def test_closed_form_products(burgers):
    e1, e2 = burgers.basis_vector(1), burgers.basis_vector(2)
    assert apply_b(burgers, e1)[1] == 0.5
    assert np.count_nonzero(apply_b(burgers, e1)) == 1

    expected = np.zeros(burgers.n_total)
    expected[0], expected[2] = -0.25, 0.75
    np.testing.assert_allclose(apply_b(burgers, e1, e2), expected, atol=1e-15)
    assert np.all(apply_b(burgers, np.zeros(burgers.n_total), e2) == 0.0)


def test_tensor_matches_quadrature():
    model = build_burgers(6)
    rng = np.random.Generator(np.random.Philox(3))
    for _ in range(5):
        u, v = rng.standard_normal(6), rng.standard_normal(6)
        np.testing.assert_allclose(apply_b(model, u, v), brute_force_b(u, v), atol=1e-10)


def test_symmetry_and_energy_identity(burgers16, rng):
    u0 = burgers16.basis_vector(1) + 0.3 * burgers16.basis_vector(2)
    assert abs(energy_residual(burgers16, u0)) < 1e-12

    for _ in range(1000):
        u = rng.standard_normal(16)
        u /= norms(burgers16, u)
        assert abs(energy_residual(burgers16, u)) < 1e-12
    u, v = rng.standard_normal(16), rng.standard_normal(16)
    np.testing.assert_allclose(apply_b(burgers16, u, v), apply_b(burgers16, v, u), rtol=1e-13, atol=1e-14)


def test_dimension_mismatch(burgers):
    with pytest.raises(DomainError):
        apply_b(burgers, np.zeros(3))


def test_cutoff_profile():
    r = np.array([0.0, 0.05, 0.075, 0.1, 0.3])
    np.testing.assert_allclose(cutoff_profile(r, 0.05), [1.0, 1.0, 0.5, 0.0, 0.0], atol=1e-15)
    assert cutoff_lipschitz_factor() >= 1.0


def test_cutoff_regions(burgers, rng):
    u = rng.standard_normal(burgers.n_total)
    u /= norms(burgers, u)
    inside = 0.5 * burgers.r_cut * u
    assert np.array_equal(apply_b_cutoff(burgers, inside), apply_b(burgers, inside))
    assert np.all(apply_b_cutoff(burgers, 3.0 * burgers.r_cut * u) == 0.0)


def test_cutoff_lipschitz_constant(burgers, rng):
    l_r = 2.0 * burgers.r_cut * burgers.c_b
    worst_inside, worst = 0.0, 0.0
    for _ in range(2000):
        u, v = rng.standard_normal((2, burgers.n_total))
        u *= rng.uniform(0, 2.5) * burgers.r_cut / norms(burgers, u)
        v *= rng.uniform(0, 2.5) * burgers.r_cut / norms(burgers, v)
        ratio = norms(burgers, apply_b_cutoff(burgers, u) - apply_b_cutoff(burgers, v), -burgers.alpha)
        ratio /= norms(burgers, u - v)
        worst = max(worst, ratio)
        if norms(burgers, u) <= burgers.r_cut and norms(burgers, v) <= burgers.r_cut:
            worst_inside = max(worst_inside, ratio)
    assert worst_inside <= 1.02 * l_r
    assert worst <= 1.02 * l_r * cutoff_lipschitz_factor()


def test_quadratic_prediction(burgers):
    for a in (0.01, 0.3, -2.0):
        expected = np.zeros(burgers.n_total)
        expected[1] = a * a / 6.0
        np.testing.assert_allclose(ls_inverse_bs(burgers, burgers.basis_vector(1, a)), expected, rtol=1e-14)
    xi = burgers.basis_vector(1, 0.02)
    np.testing.assert_allclose(ls_inverse_bs(burgers, 2.0 * xi), 4.0 * ls_inverse_bs(burgers, xi), rtol=1e-14)
    assert np.all(ls_inverse_bs(burgers, np.zeros(burgers.n_total)) == 0.0)


def test_norms(burgers, rng):
    assert norms(burgers, burgers.basis_vector(1)) ** 2 == pytest.approx(np.pi / 2)
    e1 = burgers.basis_vector(1)
    assert norms(burgers, e1, burgers.alpha) == pytest.approx(norms(burgers, e1))
    u = rng.standard_normal(burgers.n_total)
    assert norms(burgers, u, -burgers.alpha) <= norms(burgers, u) <= norms(burgers, u, burgers.alpha)


def test_m_alpha_lambda_single_mode():
    model = SpectralModel.from_arrays([0.0, 5.0], np.zeros((2, 2, 2)), 1, 0.75, 0.0)
    t = np.linspace(1e-6, 10.0, 200001)
    grid_max = np.max(np.exp(-(5.0 - 2.5) * t) * 6.0 ** 0.375 * t ** 0.75)
    closed = (0.75 / np.e) ** 0.75 * 2.5 ** -0.75 * 6.0 ** 0.375
    assert compute_m_alpha_lambda(model, 2.5) == pytest.approx(closed, rel=1e-12)
    assert compute_m_alpha_lambda(model, 2.5) == pytest.approx(grid_max, rel=1e-6)
    with pytest.raises(DomainError):
        compute_m_alpha_lambda(model, 5.0)


def test_cb_of_zero_tensor():
    model = SpectralModel.from_arrays([0.0, 3.0, 8.0], np.zeros((3, 3, 3)), 1, 0.75, 0.1)
    assert compute_cb(model) == 0.0


def test_cb_against_direct_search():
    model = build_burgers(4)
    c_b = model.c_b
    rng = np.random.Generator(np.random.Philox(11))

    def neg_ratio(x):
        u, v = x[:4], x[4:]
        nu, nv = norms(model, u), norms(model, v)
        if nu == 0 or nv == 0:
            return 0.0
        return -norms(model, apply_b(model, u, v), -model.alpha) / (nu * nv)

    samples = rng.standard_normal((5000, 8))
    ratios = np.array([-neg_ratio(x) for x in samples])
    assert np.max(ratios) <= c_b * (1.0 + 1e-9)
    best = max(
        -minimize(neg_ratio, samples[i], method="Nelder-Mead", options={"maxiter": 4000, "xatol": 1e-10}).fun
        for i in np.argsort(ratios)[-5:]
    )
    assert best == pytest.approx(c_b, rel=0.02)


def test_conditions_at_zero_radius(burgers16):
    report = check_conditions(burgers16.with_radius(0.0), 0.0, 1.0, 1.0, 2.5)
    assert report.contraction_bound == 0.0
    assert report.all_satisfied


def test_default_configuration_is_admissible(burgers16):
    report = check_conditions(burgers16, 0.0, 1.0, 1.0, 2.5)
    assert report.all_satisfied
    assert 0.0 < report.contraction_bound < 1.0
    assert report.to_dict()["all_satisfied"] is True


def test_contraction_margin_shrinks_with_radius(burgers16):
    margins = [check_conditions(burgers16.with_radius(r), 0.0, 1.0, 1.0, 2.5).margin1 for r in (0.01, 0.05, 0.2, 10.0)]
    assert margins == sorted(margins, reverse=True)
    assert not check_conditions(burgers16.with_radius(10.0), 0.0, 1.0, 1.0, 2.5).condition1


def test_parameter_ordering(burgers):
    with pytest.raises(ConfigurationError):
        check_conditions(burgers, 0.0, 1.0, 1.0, 3.5)
    with pytest.raises(ConfigurationError):
        check_conditions(burgers, 0.0, 2.0, 1.0, 1.5)
    with pytest.raises(ConfigurationError):
        check_conditions(burgers, 0.0, 1.0, 0.0, 2.5)


def test_model_files(tmp_path, burgers):
    rows = dump_tensor_csv(burgers, tmp_path / "tensor.csv")
    lines = (tmp_path / "tensor.csv").read_text().splitlines()
    assert lines[0] == "j,k,l,value"
    assert len(lines) == rows + 1
    assert "1,1,2,0.5" in lines

    (tmp_path / "model.yaml").write_text("kind: burgers\nn_total: 6\nr_cut: 0.1\n")
    model = load_model_config(tmp_path / "model.yaml")
    assert model.n_total == 6 and model.r_cut == 0.1

    (tmp_path / "linear.yaml").write_text("kind: linear\neigenvalues: [0.0, 2.0, 5.0]\n")
    linear = load_model_config(tmp_path / "linear.yaml")
    assert linear.name == "linear"
    assert np.all(linear.b_tensor == 0.0)

    (tmp_path / "bad.yaml").write_text("kind: burgers\nmodes: 6\n")
    with pytest.raises(ConfigurationError):
        load_model_config(tmp_path / "bad.yaml")
