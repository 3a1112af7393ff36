import numpy as np
import pytest

from _factories import random_model, reference_input, reference_model
from wienerfim import (
    GaussianInputSpec,
    LinearParams,
    NormalizationConstraint,
    SimulationPlan,
    WienerModel,
    compute_fim,
    empirical_fim,
    finite_diff_score,
    prepare,
    simulate_states,
)
from wienerfim.errors import DimensionError
from wienerfim.kernels import get_backend
from wienerfim.oracle import analytic_score, default_burn_in


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_plan_validation():
    with pytest.raises(ValueError):
        SimulationPlan(samples=0)
    with pytest.raises(ValueError):
        SimulationPlan(samples=10, burn_in=-1)
    with pytest.raises(ValueError):
        SimulationPlan(samples=10, streams=0)
    with pytest.raises(ValueError):
        SimulationPlan(samples=10, seed=2 ** 64)
    assert SimulationPlan(samples=10, streams=3).stream_sizes() == [4, 3, 3]


def test_default_burn_in():
    model = reference_model()
    assert default_burn_in(model) == 200
    slow = GaussianInputSpec.shaped([1.0], [1.0, -0.99])
    assert default_burn_in(model, slow) >= 995


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_impulse_response_is_matrix_power(backend):
    p = prepare(reference_model(), reference_input())
    A, b = p.real.A, p.real.b
    u = np.zeros(12)
    u[0] = 1.0
    X, last = get_backend(backend).state_recursion(A, b, u, np.zeros(A.shape[0]))
    for t in range(12):
        np.testing.assert_allclose(X[t], np.linalg.matrix_power(A, t) @ b, rtol=0, atol=1e-14)
    np.testing.assert_array_equal(last, X[-1])


def test_simulation_is_deterministic():
    model, inp = reference_model(), reference_input()
    plan = SimulationPlan(samples=20_000, seed=11, streams=4)
    a = empirical_fim(model, inp, plan)
    b = empirical_fim(model, inp, plan)
    np.testing.assert_array_equal(a.J_hat, b.J_hat)
    c = empirical_fim(model, inp, SimulationPlan(samples=20_000, seed=12, streams=4))
    assert not np.array_equal(a.J_hat, c.J_hat)


def test_simulate_states_shapes():
    model = reference_model()
    p = prepare(model, reference_input())
    X, u = simulate_states(p.real, reference_input(), SimulationPlan(samples=500, seed=1, streams=2), model=model)
    assert X.shape == (500, model.d) and u.shape == (500,)
    direct = GaussianInputSpec.direct(p.stats.Sigma, mean=0.3)
    X, u = simulate_states(p.real, direct, SimulationPlan(samples=500, seed=1), model=model)
    assert X.shape == (500, model.d) and u is None


def test_first_order_output_statistics():
    model = WienerModel(LinearParams([-0.6], [0.4], 1.0), [0.0, 1.0, 0.2], NormalizationConstraint([0, 1, 0]))
    inp = GaussianInputSpec.white(1.0, mean=2.0)
    rep = empirical_fim(model, inp, SimulationPlan(samples=1_000_000, seed=3))
    res = compute_fim(model, inp)
    assert abs(rep.gamma_hat - res.gamma) < 0.005 * abs(res.gamma)
    assert abs(rep.sigma_hat - res.sigma) < 0.005 * res.sigma


@pytest.mark.parametrize("kind", ["white", "shaped", "direct"])
def test_state_covariance_and_moment_matrix(kind):
    model = reference_model()
    p = prepare(model, reference_input())
    inp = {
        "white": reference_input(),
        "shaped": GaussianInputSpec.shaped([1.0, 0.5], [1.0, -0.4], mean=0.3),
        "direct": GaussianInputSpec.direct(p.stats.Sigma + 0.1 * np.eye(model.d), mean=0.3),
    }[kind]
    q = prepare(model, inp)
    rep = empirical_fim(model, inp, SimulationPlan(samples=400_000, seed=5, streams=2))
    assert _rel(rep.Sigma_hat, q.stats.Sigma) < 0.02
    m = model.m
    assert _rel(rep.J_hat[:m, :m], compute_fim(model, inp).J11) < 0.02


def test_stream_statistics_scatter():
    model, inp = reference_model(), reference_input()
    res = compute_fim(model, inp)
    rep = empirical_fim(model, inp, SimulationPlan(samples=800_000, seed=9, streams=8))
    g = np.array(rep.stream_gamma)
    s = np.array(rep.stream_sigma)
    # stream scatter is sampling noise around the closed-form values
    assert abs(g.mean() - res.gamma) < 4 * g.std(ddof=1) / np.sqrt(g.size) + 1e-3
    assert abs(s.mean() - res.sigma) < 4 * s.std(ddof=1) / np.sqrt(s.size) + 1e-3
    assert rep.gamma_hat == pytest.approx(g.mean(), rel=1e-12)


def test_error_shrinks_with_samples():
    model, inp = reference_model(), reference_input()
    J = compute_fim(model, inp).J
    small = [empirical_fim(model, inp, SimulationPlan(samples=10_000, seed=s), J_closed=J).rel_err_J for s in range(3)]
    large = [empirical_fim(model, inp, SimulationPlan(samples=1_000_000, seed=s), J_closed=J).rel_err_J for s in range(3)]
    assert np.mean(large) < 0.3 * np.mean(small)


def test_analytic_score_static_example():
    model = WienerModel(LinearParams([], [], 1.5, fir=True), [0.2, 1.0], NormalizationConstraint([0, 1]))
    u = np.array([0.3, -1.2, 0.8])
    np.testing.assert_allclose(analytic_score(model, u, 2), [1.0, 0.8])


@pytest.mark.parametrize("seed", range(5))
def test_finite_difference_score(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), fir=bool(seed % 2))
    u = 0.2 + rng.normal(size=300)
    for t in (150, 220, 299):
        assert finite_diff_score(model, u, t).max_rel_err < 1e-5


def test_finite_difference_window_error():
    with pytest.raises(DimensionError):
        finite_diff_score(reference_model(), np.zeros(10), 10)


def test_closed_form_shape_mismatch():
    with pytest.raises(DimensionError):
        empirical_fim(reference_model(), reference_input(), SimulationPlan(samples=100), J_closed=np.eye(2))
