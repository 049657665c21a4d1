from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ivbelief import identified_set as ids, oracle
from ivbelief.errors import DegenerateConfigurationError, OutsideIdentifiedSetError

SIGMA = np.array([[3.0, 2.0, 1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 1.0]])


def test_forward_example():
    cfg = oracle.StructuralConfig(beta=1.0, pi=1.0, psi=0.0, tau=0.0, sigma_u=1.0, sigma_v=1.0,
                                  sigma_zeta=1.0, sigma_w=0.0, sigma_uv=0.0, sigma_uzeta=0.0)
    fr = oracle.forward_sigma(cfg)
    want = np.array([[3.0, 2.0, 1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 1.0]])
    np.testing.assert_allclose(fr.sigma, want, atol=1e-15)
    assert fr.kappa_tilde == 1.0 and fr.rho_uxistar == 0.0 and fr.beta_tilde == 1.0


def test_degenerate_config():
    base = oracle.synthetic_study_config()
    with pytest.raises(DegenerateConfigurationError, match="degenerate structural configuration"):
        oracle.forward_sigma(replace(base, psi=-1.0))
    with pytest.raises(DegenerateConfigurationError):
        oracle.forward_sigma(replace(base, sigma_uv=5.0))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-0.9, 2.0))
def test_psi_rescaling_is_observationally_equivalent(seed, psi_new):
    cfg = oracle.random_config(np.random.default_rng(seed))
    try:
        a = oracle.forward_sigma(cfg)
    except DegenerateConfigurationError:
        assume(False)
    b = oracle.forward_sigma(oracle.rescale_psi(cfg, psi_new))
    np.testing.assert_allclose(b.sigma, a.sigma, rtol=1e-12, atol=1e-12 * np.abs(a.sigma).max())
    assert b.kappa_tilde == pytest.approx(a.kappa_tilde, rel=1e-12)
    assert b.rho_uxistar == pytest.approx(a.rho_uxistar, abs=1e-12)
    assert b.beta_tilde == pytest.approx(a.beta_tilde, rel=1e-12)


def test_forward_binary_identities(rng):
    for _ in range(200):
        p_star = rng.uniform(0.05, 0.95)
        a0, a1 = rng.uniform(0, 0.45, 2)
        e = oracle.forward_binary(p_star, a0, a1)
        assert e.psi == pytest.approx(-(a0 + a1), abs=1e-12)
        assert e.tau == pytest.approx(a0, abs=1e-12)
        assert e.var_t == pytest.approx(e.p * (1 - e.p), abs=1e-12)
        assert abs(e.cov_w_tstar) < 1e-12


def test_sharpness_at_kappa_one_has_no_error():
    cert = oracle.sharpness_construction(SIGMA, 1.0, 0.2)
    assert cert.config.sigma_w == 0.0
    assert cert.max_error < 1e-10


def test_sharpness_targets(rng):
    for _ in range(50):
        s = oracle.random_sigma(rng)
        big_l = ids.kappa_lower_bound(*ids.correlations(s))
        k = 0.5 * (big_l + 1.0)
        cert = oracle.sharpness_construction(s, k, 0.0, psi_target=rng.uniform(-0.5, 0.5))
        assert cert.max_error < 1e-10
        assert cert.kappa_tilde == pytest.approx(k, abs=1e-10)
    with pytest.raises(OutsideIdentifiedSetError, match="target not in identified set"):
        oracle.sharpness_construction(SIGMA, 0.7, 0.0)
    with pytest.raises(OutsideIdentifiedSetError):
        oracle.sharpness_construction(SIGMA, 0.9, 1.0)


def test_lower_bound_scan(rng):
    for _ in range(200):
        r = oracle.random_correlation_triple(rng)
        assert oracle.kappa_lower_bound_scan(*r) == pytest.approx(ids.kappa_lower_bound(*r), abs=1e-6)
    assert oracle.kappa_lower_bound_scan(0.0, 0.0, 0.0) < 1e-6


def test_grid_extrema_constant_target():
    restr = ids.Restrictions(0.3, 0.9, -0.5, 0.5)
    assert oracle.grid_extrema("f_rho_uzeta", np.eye(3), restr, 100) == (0.0, 0.0)
    with pytest.raises(ValueError):
        oracle.grid_extrema("f_rho_uzeta", np.eye(3), restr, 50)
    with pytest.raises(ValueError):
        oracle.grid_extrema("nope", np.eye(3), restr, 100)


def test_grid_extrema_refines_consistently(rng):
    for _ in range(10):
        s = oracle.random_sigma(rng)
        big_l = ids.kappa_lower_bound(*ids.correlations(s))
        restr = ids.Restrictions(big_l + 0.1 * (1 - big_l), 1.0, -0.8, 0.6)
        coarse = oracle.grid_extrema("f_rho_uzeta", s, restr, 200)
        fine = oracle.grid_extrema("f_rho_uzeta", s, restr, 399)
        # the finer grid contains the coarse one, so it can only widen
        assert fine[0] <= coarse[0] + 1e-15 and fine[1] >= coarse[1] - 1e-15
        assert abs(fine[0] - coarse[0]) < 1e-2 and abs(fine[1] - coarse[1]) < 1e-2


def test_simulate_shapes_and_synthetic_config():
    cfg = oracle.synthetic_study_config(kappa=0.8, rho=0.2, beta=2.0)
    fr = oracle.forward_sigma(cfg)
    assert fr.kappa_tilde == pytest.approx(0.8) and fr.rho_uzeta == 0.0
    y, t, z, x = oracle.simulate(cfg, 100, np.random.default_rng(0), x_dim=3)
    assert y.shape == t.shape == z.shape == (100,) and x.shape == (100, 3)
