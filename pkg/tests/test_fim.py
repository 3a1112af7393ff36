import numpy as np
import pytest

from _oracles import conditional_quadrature_fim
from _factories import matched_output_pair, r2_zero_model, random_instance, reference_input, reference_model
from wienerfim import (
    GaussianInputSpec,
    LinearParams,
    NormalizationConstraint,
    WienerModel,
    assemble_fim,
    compute_fim,
    prepare,
    schur_consistency,
)
from wienerfim.design import f_factor
from wienerfim.errors import ConditioningError


def _fir_static(eta_u=0.7, lam=1.3, g0=1.5, alpha0=0.2):
    model = WienerModel(LinearParams([], [], g0, fir=True), [alpha0, 1.0], NormalizationConstraint([0, 1]))
    return model, GaussianInputSpec.white(lam, mean=eta_u)


def test_fir_static_gain_example():
    eta_u, lam = 0.7, 1.3
    model, inp = _fir_static(eta_u, lam)
    res = compute_fim(model, inp)
    np.testing.assert_allclose(res.J, [[1, eta_u], [eta_u, eta_u ** 2 + lam]], rtol=1e-13)
    assert res.det_direct == pytest.approx(lam, rel=1e-13)
    assert res.det_factored == pytest.approx(lam, rel=1e-13)
    assert res.f == pytest.approx(1.0, rel=1e-13)
    p = prepare(model, inp)
    J = res.J
    assert J[1, 1] - J[1, 0] ** 2 / J[0, 0] == pytest.approx(lam, rel=1e-13)
    assert schur_consistency(p.model, p.real, p.stats, p.ctx).residual_closed_form < 1e-13


def test_reference_matches_quadrature_oracle():
    model, inp = reference_model(), reference_input()
    np.testing.assert_allclose(compute_fim(model, inp).J, conditional_quadrature_fim(model, inp), rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_random_instances_match_quadrature_oracle(seed):
    model, inp = random_instance(np.random.default_rng(100 + seed))
    J = compute_fim(model, inp).J
    ref = conditional_quadrature_fim(model, inp)
    assert np.linalg.norm(J - ref) <= 1e-10 * np.linalg.norm(ref)


@pytest.mark.parametrize("seed", range(20))
def test_symmetric_psd(seed):
    model, inp = random_instance(np.random.default_rng(200 + seed))
    res = compute_fim(model, inp)
    J = res.J
    np.testing.assert_array_equal(J, J.T)
    eig = np.linalg.eigvalsh(J)
    assert eig.min() >= -1e-10 * np.linalg.norm(J, 2)
    if res.identifiable:
        assert eig.min() > 0


def test_unidentifiable_constraint_gives_singular_J():
    lin = LinearParams([0.3, -0.2], [0.5, -0.2], 1.0)
    model = WienerModel(lin, [1.0, 1.0, 0.3, 0.1], NormalizationConstraint([1, 0, 0, 0]))
    res = compute_fim(model, reference_input())
    assert res.r1 == 0.0
    assert res.det_factored == 0.0
    assert not res.identifiable
    assert np.linalg.eigvalsh(res.J).min() < 1e-8 * np.linalg.norm(res.J, 2)


@pytest.mark.parametrize("s", [0.5, 2.0, 10.0])
def test_scaling_covariance(s):
    model = reference_model()
    base = prepare(model, GaussianInputSpec.white(1.0, mean=0.3))
    scaled_inp = GaussianInputSpec.white(s, mean=0.3)
    scaled = prepare(model, scaled_inp)
    np.testing.assert_allclose(scaled.stats.Sigma, s * base.stats.Sigma, rtol=1e-12)
    assert scaled.ctx.sigma == pytest.approx(s * base.ctx.sigma, rel=1e-12)
    res = compute_fim(model, scaled_inp)
    predicted = f_factor(model, base.ctx.gamma, s * base.ctx.sigma) * np.linalg.det(s * base.stats.Sigma)
    assert res.det_direct == pytest.approx(predicted, rel=1e-8)


def test_f_and_J11_depend_only_on_output_statistics():
    model, white, shaped = matched_output_pair()
    a, b = compute_fim(model, white), compute_fim(model, shaped)
    assert a.gamma == pytest.approx(b.gamma, rel=1e-14)
    assert a.sigma == pytest.approx(b.sigma, rel=1e-12)
    assert abs(a.f - b.f) < 1e-10 * abs(a.f)
    np.testing.assert_allclose(a.J11, b.J11, rtol=1e-12)
    assert abs(a.det_sigma - b.det_sigma) > 0.1 * abs(a.det_sigma)


@pytest.mark.parametrize("seed", range(10))
def test_schur_identities(seed):
    rng = np.random.default_rng(300 + seed)
    model, inp = random_instance(rng)
    while np.linalg.cond(compute_fim(model, inp).J) > 1e7:
        model, inp = random_instance(rng)
    p = prepare(model, inp)
    rep = schur_consistency(p.model, p.real, p.stats, p.ctx)
    assert rep.residual_closed_form < 1e-9
    assert rep.residual_det < 1e-9
    assert rep.residual_schur_det < 1e-9
    if rep.branch == "r2_nonzero":
        assert rep.residual_inverse < 1e-9


def test_r2_zero_branch():
    model = r2_zero_model()
    p = prepare(model, reference_input())
    res = assemble_fim(p.model, p.real, p.stats, p.ctx)
    assert res.r2 == 0.0
    assert res.r1 != 0.0
    rep = schur_consistency(p.model, p.real, p.stats, p.ctx)
    assert rep.branch == "r2_zero"
    assert rep.residual_inverse is None
    assert rep.residual_det < 1e-9
    assert rep.residual_closed_form < 1e-9


def test_ill_conditioned_moment_matrix():
    lin = LinearParams([], [], 1.0, fir=True)
    ab = np.zeros(6)
    ab[1] = 1.0
    ab[5] = 0.1
    model = WienerModel(lin, ab, NormalizationConstraint([0, 1, 0, 0, 0, 0]))
    with pytest.raises(ConditioningError):
        compute_fim(model, GaussianInputSpec.white(1.0, mean=40.0))


def test_to_dict_round_trip():
    res = compute_fim(reference_model(), reference_input())
    doc = res.to_dict()
    assert doc["m"] == 3 and doc["d"] == 5
    np.testing.assert_array_equal(np.array(doc["J"]), res.J)


def test_ill_conditioned_draws_stay_within_rounding_bound():
    # Near-dependent sensitivities make J ill-conditioned; the two determinants
    # then agree only to roughly cond(J) * eps.
    rng = np.random.default_rng(2024)
    seen = 0
    for _ in range(300):
        model, inp = random_instance(rng)
        res = compute_fim(model, inp)
        cond = np.linalg.cond(res.J)
        if cond > 1e7:
            seen += 1
            assert res.det_rel_diff() <= 100 * cond * np.finfo(float).eps
    assert seen > 0
