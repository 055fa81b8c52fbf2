"""The fractional diffusion operator on a level: multiplier and kernel forms.

The operator of exponent alpha acts on cylindrical functions over a level in
two equivalent ways:

* **spectral route** -- multiply each Fourier coefficient by ||b||**alpha
  (zero on the labels annihilating the standard ball), transform back;
* **hypersingular route** -- integrate the increment phi(z - x) - phi(z)
  against an explicit radial kernel over the standard ball pi^{s0} O,

and the agreement of the two on every function is the discrete form of the
classical identity between the multiplier and its hypersingular kernel.  The
kernel combines a power of the norm with the additive constant kappa that
accounts for the finite total mass of the ball.

All routes work on a BallQuotient with lo <= s0 <= s, which is exactly the
condition for the ball convolution to stay inside the quotient.
"""

from __future__ import annotations

import numpy as np

from .funcspace import fourier, inverse_fourier

__all__ = [
    "kernel_constant",
    "kernel_kappa",
    "spectral_multiplier",
    "hypersingular_weights",
    "hypersingular_matrix",
    "apply_spectral",
    "apply_hypersingular",
    "apply_eigensum",
    "eigenvalue_estimates",
    "eigenvalue_defect",
    "heat_multiplier",
    "semigroup_apply",
]


def _check_domain(quotient):
    s0 = quotient.level.s0
    if not (quotient.lo <= s0 <= quotient.s):
        raise ValueError(
            "operator needs a quotient with lo <= s0 <= s "
            f"(got lo={quotient.lo}, s0={s0}, s={quotient.s})"
        )


def kernel_constant(level, alpha):
    """Normalizing constant of the hypersingular kernel (negative for
    alpha > 0): q^(d alpha / m) (1 - q^(alpha/m)) / (1 - q^(-1-alpha/m))."""
    q = float(level.q)
    a_m = float(alpha) / level.m
    return q ** (level.d * a_m) * (1.0 - q**a_m) / (1.0 - q ** (-1.0 - a_m))


def kernel_kappa(level, alpha):
    """Additive constant of the kernel: the finite-mass correction
    (1 - 1/q) / (q^(alpha/m) - 1) * q^(-d (1 + alpha/m))."""
    q = float(level.q)
    a_m = float(alpha) / level.m
    return (1.0 - 1.0 / q) / (q**a_m - 1.0) * q ** (-level.d * (1.0 + a_m))


def spectral_multiplier(quotient, alpha):
    """Eigenvalue vector over the dual labels: ||b||**alpha, zero on labels
    of nonnegative valuation (they annihilate the standard ball)."""
    _check_domain(quotient)
    dual = quotient.dual()
    vals = dual.val_pi_vector.astype(np.float64)
    lam = np.where(
        vals < 0,
        float(quotient.level.p) ** (-vals * float(alpha) / quotient.level.e),
        0.0,
    )
    # the zero label has sentinel valuation dual.s >= 0, so it lands in the
    # zero branch with the rest of the annihilator
    return lam


def hypersingular_weights(quotient, alpha):
    """(prefactor, weights): psi_i = prefactor * sum_j w_j (phi_sub(i,j) - phi_i).

    Weights live on the cosets inside the standard ball (zero elsewhere and
    on the zero coset); the prefactor collects the kernel constant, the
    module of the level degree, and the Haar volume of one coset.
    """
    _check_domain(quotient)
    lvl = quotient.level
    p, e, m, c, d = lvl.p, lvl.e, lvl.m, lvl.c, lvl.d
    a = float(alpha)
    vals = quotient.val_pi_vector.astype(np.float64)
    radial = float(p) ** ((m + a) * (vals / e - c))
    w = np.where(
        (vals >= lvl.s0) & (np.arange(quotient.size) != 0),
        radial + kernel_kappa(lvl, alpha),
        0.0,
    )
    prefactor = (
        kernel_constant(lvl, alpha)
        * float(p) ** (c * m)
        * float(quotient.q) ** (-quotient.s)
    )
    return prefactor, w


def hypersingular_matrix(quotient, alpha):
    """Dense matrix of the kernel route (cached per quotient and alpha)."""

    def build():
        prefactor, w = hypersingular_weights(quotient, alpha)
        n = quotient.size
        sub = quotient.sub_table
        mat = np.zeros((n, n), dtype=np.float64)
        rows = np.broadcast_to(np.arange(n)[:, None], sub.shape)
        np.add.at(mat, (rows, sub), np.broadcast_to(w[None, :], sub.shape))
        mat[np.arange(n), np.arange(n)] -= w.sum()
        mat *= prefactor
        return mat

    key = ("bq", "hyp", quotient.lo, quotient.s, float(alpha))
    cache = quotient.level._cache
    if key not in cache:
        cache[key] = build()
    return cache[key]


def apply_spectral(quotient, values, alpha):
    """Multiplier route: Fourier, multiply by ||b||**alpha, invert."""
    _check_domain(quotient)
    coeffs = fourier(quotient, values)
    return inverse_fourier(quotient, spectral_multiplier(quotient, alpha) * coeffs)


def apply_hypersingular(quotient, values, alpha):
    """Kernel route: integrate increments against the radial kernel."""
    mat = hypersingular_matrix(quotient, alpha)
    return mat @ np.asarray(values, dtype=np.complex128)


def apply_eigensum(quotient, values, alpha):
    """Rank-one route: accumulate lambda_b c_b chi_b label by label."""
    _check_domain(quotient)
    U = quotient.character_matrix
    coeffs = fourier(quotient, values)
    lam = spectral_multiplier(quotient, alpha)
    out = np.zeros(quotient.size, dtype=np.complex128)
    for b in range(quotient.size):
        if lam[b] != 0.0 and coeffs[b] != 0.0:
            out += (lam[b] * coeffs[b]) * U[b, :]
    return out


def eigenvalue_estimates(quotient, alpha):
    """Eigenvalue of each character under the kernel route.

    Every character is an exact eigenvector of the kernel form, because the
    increment factors as chi_b(z - x) - chi_b(z) = chi_b(z) (chi_b(-x) - 1);
    the eigenvalue is the weighted sum of chi_b(-x_j) - 1 over the coset
    representatives.  Returns the complex vector of those sums, to be held
    against ||b||**alpha on labels of negative valuation and against zero on
    the annihilator.
    """
    prefactor, w = hypersingular_weights(quotient, alpha)
    U = quotient.character_matrix
    neg = quotient.neg_table
    return prefactor * ((U[:, neg] - 1.0) @ w)


def eigenvalue_defect(quotient, alpha):
    """Worst |kernel-route eigenvalue - multiplier| over all dual labels."""
    lam_hat = eigenvalue_estimates(quotient, alpha)
    lam = spectral_multiplier(quotient, alpha)
    return float(np.abs(lam_hat - lam).max())


def heat_multiplier(quotient, alpha, t):
    """exp(-t ||b||^alpha) on the dual labels (and 1 on the annihilator)."""
    return np.exp(-float(t) * spectral_multiplier(quotient, alpha))


def semigroup_apply(quotient, values, alpha, t):
    """Heat semigroup route: damp each coefficient by exp(-t lambda_b)."""
    _check_domain(quotient)
    coeffs = fourier(quotient, values)
    return inverse_fourier(quotient, heat_multiplier(quotient, alpha, t) * coeffs)
