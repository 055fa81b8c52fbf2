"""Closed forms for the three measures attached to the operator.

Three measures drive everything here:

* **mu** -- the translation-invariant reference measure, normalized to give
  the standard ball of each level total mass 1; its ball and cylinder
  masses are exact rationals.
* **the heat measures** -- the transition measures of the semigroup
  exp(-t D); their level marginals have a radial density given by a finite
  shell sum, from which ball, cylinder, and coset masses follow in closed
  form.
* **the jump measure** -- the symmetric Levy measure of the associated
  process; radial again, with an explicit shell mass combining a power of
  the shell radius with the finite-mass correction kappa.

A level's heat marginal is naturally expressed in the scaled coordinate
zeta = y / m, where y is the normalized-trace projection coordinate: under
the plain trace character the scaled marginal has Fourier transform
exp(-t * symbol).  The projection-coordinate density at pi-valuation w is
q**(e c) * heat_density(level, alpha, t, w - e c); its support starts at
w = s0, the valuation of the standard ball.

Cylinder sets of index N >= 1 are the pullbacks, through the projection to
a level, of pi^(N e) times the standard ball; their mu-masses q**(-N e)
shrink with the level degree while their heat masses stay bounded below,
which is the sense in which the heat measures are singular with respect to
mu on the full tower.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .funcspace import fourier
from .vladimirov import kernel_constant, kernel_kappa, spectral_multiplier

__all__ = [
    "mu_ball_mass",
    "mu_cylinder_mass",
    "heat_density",
    "heat_ball_mass",
    "heat_cylinder_mass",
    "heat_cylinder_mass_shells",
    "heat_coset_vector",
    "heat_lower_bound",
    "singularity_report",
    "levy_shell_mass",
    "levy_cutoff_valuation",
    "levy_tail_mass",
    "levy_quotient_vector",
    "levy_integral",
    "levy_integral_spectral",
    "levy_log_characteristic",
]


# ---------------------------------------------------------------------------
# the reference measure


def mu_ball_mass(level, v0):
    """Exact mass of the ball {v_pi >= v0} under the normalized measure
    (standard ball mass 1); saturates at 1 below the standard radius."""
    if v0 <= level.s0:
        return Fraction(1)
    return Fraction(1, level.q ** (v0 - level.s0))


def mu_cylinder_mass(level, N):
    """Exact mass of the index-N cylinder over this level: q**(-N e)."""
    if N < 0:
        raise ValueError("cylinder index must be nonnegative")
    return Fraction(1, level.q ** (N * level.e))


# ---------------------------------------------------------------------------
# heat measures


def _decay(level, alpha, t, j):
    # exp(-t lambda_j) for the eigenvalue attached to dual shell j
    return math.exp(-float(t) * float(level.q) ** (j * float(alpha) / level.m))


def heat_density(level, alpha, t, w):
    """Radial density of the scaled heat marginal at pi-valuation w.

    With respect to additive Haar measure normalized by vol(O) = 1, in the
    scaled coordinate zeta (see the module docstring):

        q^{-d} [ 1 + (1 - 1/q) sum_{j=1}^{w+d} q^j u_j - q^{w+d} u_{w+d+1} ]

    with u_j = exp(-t q^(j alpha / m)); zero for w < -d.  The density is
    nondecreasing in w and integrates to exactly 1.
    """
    q = float(level.q)
    d = level.d
    if w < -d:
        return 0.0
    acc = 1.0
    for j in range(1, w + d + 1):
        acc += (1.0 - 1.0 / q) * q**j * _decay(level, alpha, t, j)
    acc -= q ** (w + d) * _decay(level, alpha, t, w + d + 1)
    return q ** (-d) * acc


def heat_ball_mass(level, alpha, t, v0):
    """Heat mass of the scaled-coordinate ball {v_pi >= v0}:

        q^{-k0} [ 1 + (1 - 1/q) sum_{j=1}^{k0} q^j u_j ],   k0 = v0 + d,

    equal to 1 for v0 <= -d (the support fills the dual of O)."""
    q = float(level.q)
    k0 = v0 + level.d
    if k0 <= 0:
        return 1.0
    acc = 1.0
    for j in range(1, k0 + 1):
        acc += (1.0 - 1.0 / q) * q**j * _decay(level, alpha, t, j)
    return q ** (-k0) * acc


def heat_cylinder_mass(level, alpha, t, N):
    """Heat mass of the index-N cylinder over this level (closed form)."""
    if N < 0:
        raise ValueError("cylinder index must be nonnegative")
    return heat_ball_mass(level, alpha, t, N * level.e - level.d)


def heat_cylinder_mass_shells(level, alpha, t, N, tol=1e-12):
    """Heat mass of the index-N cylinder by direct shell summation.

    Accumulates density * shell volume over scaled-coordinate shells from
    the cylinder boundary outward, stopping once the geometric tail bound
    (the density is bounded by its limit value, shells shrink by 1/q)
    drops below tol.  Slower than the closed form but shares no algebra
    with it beyond the density itself.
    """
    q = float(level.q)
    d = level.d
    # limit of the density as w -> +inf: the telescoped term dies and the
    # series converges double-exponentially
    lim = 1.0
    j = 1
    while True:
        term = (1.0 - 1.0 / q) * q**j * _decay(level, alpha, t, j)
        lim += term
        if term < 1e-18 * lim:
            break
        j += 1
    lim *= q ** float(-d)

    acc = 0.0
    w = N * level.e - d
    while lim * q ** float(-w) >= tol:
        acc += heat_density(level, alpha, t, w) * (1.0 - 1.0 / q) * q ** float(-w)
        w += 1
    return acc


def heat_coset_vector(quotient, alpha, t):
    """Heat mass of every coset of a quotient, in quotient index order.

    Cosets are given in the projection coordinate, so the scaled density
    enters shifted by e*c; the zero coset collects the whole ball mass
    {v_pi >= s}.  For quotients with lo <= s0 the vector sums to 1.
    """
    lvl = quotient.level
    q = float(lvl.q)
    ec = lvl.e * lvl.c
    vals = quotient.val_pi_vector
    out = np.empty(quotient.size, dtype=np.float64)
    out[0] = heat_ball_mass(lvl, alpha, t, quotient.s - ec)
    cell = q ** float(-quotient.s)
    nonzero = np.arange(quotient.size) != 0
    for w in np.unique(vals[1:]):
        dens = q**ec * heat_density(lvl, alpha, t, int(w) - ec)
        out[(vals == w) & nonzero] = dens * cell
    return out


def heat_lower_bound(level, alpha, t, N):
    """Keep only the outermost shell of the cylinder mass:

        (1 - 1/q) exp(-t p^(alpha N)),

    a level-uniform floor under heat_cylinder_mass."""
    return (1.0 - 1.0 / float(level.q)) * math.exp(
        -float(t) * float(level.p) ** (float(alpha) * N)
    )


def singularity_report(tower, alpha, t, N):
    """Per-level comparison of cylinder masses under mu and under heat.

    Returns a list of dicts with the exact mu mass, the heat mass, the
    shell lower bound, and the mass ratio; the ratio grows without bound
    along any tower whose degrees go to infinity, while the mu masses
    vanish -- the two measures separate.
    """
    rows = []
    for n, lvl in enumerate(tower, start=1):
        mu = mu_cylinder_mass(lvl, N)
        pi = heat_cylinder_mass(lvl, alpha, t, N)
        ratio = pi / float(mu)
        rows.append(
            {
                "n": n,
                "degree": lvl.m,
                "mu": mu,
                "heat": pi,
                "lower_bound": heat_lower_bound(lvl, alpha, t, N),
                "ratio": ratio,
                "log10_ratio": math.log10(ratio),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# the jump measure


def levy_shell_mass(level, alpha, w):
    """Jump-measure mass of the shell {v_pi = w} in projection coordinates:

        -C (1 - 1/q) [ q^((w - ec) alpha / m) + kappa q^(ec - w) ],

    zero below the standard-ball radius s0.  The total over w >= s0
    diverges: small jumps accumulate, only tails are finite.
    """
    lvl = level
    if w < lvl.s0:
        return 0.0
    q = float(lvl.q)
    ec = lvl.e * lvl.c
    a_m = float(alpha) / lvl.m
    return (
        -kernel_constant(lvl, alpha)
        * (1.0 - 1.0 / q)
        * (q ** ((w - ec) * a_m) + kernel_kappa(lvl, alpha) * q ** float(ec - w))
    )


def levy_cutoff_valuation(level, delta):
    """Largest valuation w with delta <= p^(-w/e), i.e. the innermost shell
    still counted as a jump of size >= delta.  Exact rational comparison;
    delta must lie in (0, 1]."""
    delta = Fraction(delta)
    if not 0 < delta <= 1:
        raise ValueError("cutoff must lie in (0, 1]")
    num, den = (delta**level.e).as_integer_ratio()
    w = 0
    while num * level.p ** (w + 1) <= den:
        w += 1
    return w


def levy_tail_mass(level, alpha, delta):
    """Total jump-measure mass of {size >= delta}: the finite shell sum
    from s0 up to the cutoff valuation (0.0 when the cutoff lies inside
    the smallest shell)."""
    w_max = levy_cutoff_valuation(level, delta)
    return sum(levy_shell_mass(level, alpha, w) for w in range(level.s0, w_max + 1))


def levy_quotient_vector(quotient, alpha):
    """Jump-measure mass of every nonzero coset of a quotient.

    Shell mass splits evenly over the (q - 1) q^(s - w - 1) cosets of the
    shell.  The zero coset aggregates all jumps smaller than the quotient
    resolution, whose total mass diverges: its entry is +inf.
    """
    lvl = quotient.level
    q = float(lvl.q)
    vals = quotient.val_pi_vector
    out = np.empty(quotient.size, dtype=np.float64)
    out[0] = np.inf
    nonzero = np.arange(quotient.size) != 0
    for w in np.unique(vals[1:]):
        mass = levy_shell_mass(lvl, alpha, int(w))
        per = mass * q ** float(int(w) - quotient.s) / (1.0 - 1.0 / q)
        out[(vals == w) & nonzero] = per
    return out


def _require_zero_at_origin(values):
    values = np.asarray(values)
    if values[0] != 0:
        raise ValueError("integrand must vanish on the zero coset")
    return values


def levy_integral(quotient, alpha, values):
    """Integrate a quotient function vanishing at the origin against the
    jump measure, coset by coset."""
    values = _require_zero_at_origin(values)
    vec = levy_quotient_vector(quotient, alpha)
    return complex(np.dot(values[1:], vec[1:]))


def levy_integral_spectral(quotient, alpha, values):
    """Same integral through the Fourier side: minus the multiplier-weighted
    sum of coefficients.  Needs the integrand to vanish at the origin, so
    that its coefficients sum to zero."""
    values = _require_zero_at_origin(values)
    coeffs = fourier(quotient, values)
    lam = spectral_multiplier(quotient, alpha)
    return complex(-(lam * coeffs).sum())


def levy_log_characteristic(level, alpha, lam_valuation, t=1.0):
    """Log of the jump part of the characteristic function at a label of
    the given pi-valuation, by exact shell bookkeeping.

    Shell averages of the pairing character telescope: shells far inside
    the label's conductor average to 1, the boundary shell to -1/(q-1),
    everything outside to 0.  The result is exactly 0.0 for labels of
    nonnegative valuation and matches -t ||label||**alpha on the rest.
    """
    if lam_valuation >= 0:
        return 0.0
    L = -lam_valuation
    q = float(level.q)
    s0 = level.s0
    acc = sum(levy_shell_mass(level, alpha, w) for w in range(s0, s0 + L - 1))
    acc += q / (q - 1.0) * levy_shell_mass(level, alpha, s0 + L - 1)
    return -float(t) * acc
