import numpy as np
import pytest

from padicfrac import base_level
from padicfrac.funcspace import (
    BallQuotient,
    fourier,
    inverse_fourier,
    mu_integral,
    random_function,
)
from padicfrac.tower import resolve_tower
from padicfrac.vladimirov import (
    apply_eigensum,
    apply_hypersingular,
    apply_spectral,
    eigenvalue_defect,
    eigenvalue_estimates,
    heat_multiplier,
    hypersingular_matrix,
    hypersingular_weights,
    kernel_constant,
    kernel_kappa,
    semigroup_apply,
    spectral_multiplier,
)

Q2 = base_level(2)
Q3 = base_level(3)
U = Q2.extend_unramified(2)
E = Q2.extend_eisenstein([-2, 0])
W = resolve_tower("factorial:p=2,depth=4").level(4)

QUOTIENTS = [
    BallQuotient(Q2, 0, 4),
    BallQuotient(Q2, -2, 2),
    BallQuotient(Q3, -1, 2),
    BallQuotient(U, 1, 3),
    BallQuotient(U, 0, 3),
    BallQuotient(E, -1, 3),
    BallQuotient(W, 2, 4),
]

ALPHAS = [0.5, 1.0, 2.0]


def test_base_field_kernel_constants():
    assert abs(kernel_constant(Q2, 1.0) - (-4.0 / 3.0)) < 1e-15
    assert abs(kernel_kappa(Q2, 1.0) - 0.5) < 1e-15


def test_kernel_constant_sign():
    for lvl in (Q2, Q3, U, E, W):
        for alpha in ALPHAS:
            assert kernel_constant(lvl, alpha) < 0
            assert kernel_kappa(lvl, alpha) > 0


def test_base_field_weights():
    q = BallQuotient(Q2, 0, 2)
    pref, w = hypersingular_weights(q, 1.0)
    assert abs(pref - (-1.0 / 3.0)) < 1e-15
    # index order: (0,0), (0,1), (1,0), (1,1); the zero coset carries no
    # weight, valuation-1 coset gets 9/2, valuation-0 cosets get 3/2
    assert np.allclose(w, [0.0, 4.5, 1.5, 1.5], atol=1e-14)


def test_base_field_multiplier_values():
    q = BallQuotient(Q2, 0, 2)
    assert spectral_multiplier(q, 1.0).tolist() == [0.0, 2.0, 4.0, 4.0]


def test_weights_vanish_outside_standard_ball():
    q = BallQuotient(U, 0, 3)  # lo = 0 < s0 = 1
    _, w = hypersingular_weights(q, 1.0)
    vals = q.val_pi_vector
    assert (w[(vals < U.s0)] == 0).all()
    assert w[0] == 0
    assert (w[(vals >= U.s0) & (np.arange(q.size) != 0)] > 0).all()


@pytest.mark.parametrize("quotient", QUOTIENTS, ids=lambda q: q.key())
@pytest.mark.parametrize("alpha", ALPHAS)
def test_characters_are_eigenvectors(quotient, alpha):
    assert eigenvalue_defect(quotient, alpha) < 1e-10


@pytest.mark.parametrize("quotient", QUOTIENTS, ids=lambda q: q.key())
def test_annihilator_labels_are_exact_kernel(quotient):
    lam_hat = eigenvalue_estimates(quotient, 1.0)
    dual_vals = quotient.dual().val_pi_vector
    dead = lam_hat[dual_vals >= 0]
    assert dead.size > 0
    assert (dead == 0).all()


@pytest.mark.parametrize("quotient", QUOTIENTS, ids=lambda q: q.key())
@pytest.mark.parametrize("alpha", ALPHAS)
def test_three_routes_agree(quotient, alpha):
    rng = np.random.default_rng(20)
    phi = random_function(quotient, rng)
    via_multiplier = apply_spectral(quotient, phi, alpha)
    via_kernel = apply_hypersingular(quotient, phi, alpha)
    via_sum = apply_eigensum(quotient, phi, alpha)
    scale = max(1.0, np.abs(via_multiplier).max())
    assert np.abs(via_multiplier - via_kernel).max() / scale < 1e-9
    assert np.abs(via_multiplier - via_sum).max() / scale < 1e-9


def test_matrix_is_cached():
    q = BallQuotient(Q2, 0, 3)
    assert hypersingular_matrix(q, 1.0) is hypersingular_matrix(q, 1.0)
    assert hypersingular_matrix(q, 1.0) is not hypersingular_matrix(q, 2.0)


@pytest.mark.parametrize("quotient", QUOTIENTS, ids=lambda q: q.key())
def test_matrix_symmetric_and_psd(quotient):
    mat = hypersingular_matrix(quotient, 1.0)
    assert np.abs(mat - mat.T).max() < 1e-12
    eigs = np.linalg.eigvalsh(mat)
    assert eigs.min() > -1e-10


def test_self_adjoint_for_mu_inner_product():
    q = BallQuotient(E, -1, 3)
    rng = np.random.default_rng(3)
    f = random_function(q, rng)
    g = random_function(q, rng)
    mass = float(q.mu_coset_mass)
    lhs = (apply_hypersingular(q, f, 1.5) * g.conj()).sum() * mass
    rhs = (f * apply_hypersingular(q, g, 1.5).conj()).sum() * mass
    assert abs(lhs - rhs) < 1e-12


def test_constants_are_killed():
    for quotient in QUOTIENTS:
        ones = np.ones(quotient.size)
        out = apply_hypersingular(quotient, ones, 1.0)
        assert np.abs(out).max() < 1e-12


def test_operator_positive_on_mean_zero():
    q = BallQuotient(Q2, -1, 3)
    rng = np.random.default_rng(11)
    f = random_function(q, rng)
    energy = (apply_hypersingular(q, f, 1.0) * f.conj()).sum()
    assert energy.real > -1e-12
    assert abs(energy.imag) < 1e-12


def test_domain_validation():
    bad = BallQuotient(U, 2, 4)  # lo = 2 > s0 = 1
    with pytest.raises(ValueError):
        hypersingular_weights(bad, 1.0)
    with pytest.raises(ValueError):
        apply_spectral(bad, np.zeros(bad.size), 1.0)


def test_alpha_scaling_of_multiplier():
    q = BallQuotient(Q2, -2, 2)
    lam1 = spectral_multiplier(q, 1.0)
    lam2 = spectral_multiplier(q, 2.0)
    assert np.allclose(lam2, lam1**2)


def test_semigroup_identity_at_time_zero():
    q = BallQuotient(U, 1, 3)
    rng = np.random.default_rng(5)
    phi = random_function(q, rng)
    out = semigroup_apply(q, phi, 1.0, 0.0)
    assert np.abs(out - phi).max() < 1e-12


def test_semigroup_composition():
    q = BallQuotient(E, -1, 3)
    rng = np.random.default_rng(6)
    phi = random_function(q, rng)
    one_step = semigroup_apply(q, phi, 0.5, 0.7)
    two_step = semigroup_apply(q, semigroup_apply(q, phi, 0.5, 0.3), 0.5, 0.4)
    assert np.abs(one_step - two_step).max() < 1e-12


def test_semigroup_is_markov():
    # nonnegative functions stay nonnegative and the mean is conserved:
    # the generator has nonnegative off-diagonal rates and zero row sums
    for quotient in (BallQuotient(Q2, 0, 3), BallQuotient(W, 2, 4)):
        rng = np.random.default_rng(9)
        phi = rng.random(quotient.size)
        out = semigroup_apply(quotient, phi, 1.0, 0.8)
        assert np.abs(out.imag).max() < 1e-12
        assert out.real.min() > -1e-12
        before = mu_integral(quotient, phi)
        after = mu_integral(quotient, out)
        assert abs(before - after) < 1e-12


def test_heat_multiplier_matches_eigenvalues():
    q = BallQuotient(Q2, 0, 2)
    hm = heat_multiplier(q, 1.0, 2.0)
    lam = spectral_multiplier(q, 1.0)
    assert np.allclose(hm, np.exp(-2.0 * lam))
    assert hm[0] == 1.0


def test_semigroup_damps_towards_projection():
    # large times kill every nonzero-eigenvalue mode, leaving the
    # average over translates of the standard ball
    q = BallQuotient(Q2, 0, 3)
    rng = np.random.default_rng(13)
    phi = random_function(q, rng)
    out = semigroup_apply(q, phi, 1.0, 60.0)
    coeffs = fourier(q, phi)
    lam = spectral_multiplier(q, 1.0)
    kept = coeffs.copy()
    kept[lam > 0] = 0.0
    assert np.abs(out - inverse_fourier(q, kept)).max() < 1e-12
