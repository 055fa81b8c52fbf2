"""Cylindrical functions on finite ball quotients of extension levels.

The working model for a locally constant function with bounded support is a
vector of values on the quotient G = pi^lo O / pi^s O of a level.  Cosets are
named by digit strings (rows indexed by the power of the uniformizer, columns
by residue monomials), and the whole machinery -- additive characters, Fourier
transforms, subtraction tables, measure integrals, refinement to deeper
levels -- works on those digit strings with exact rational character angles.

The dual group of G is the quotient pi^(s0-s) O / pi^(s0-lo) O built from the
annihilator identity of the standard ball pi^{s0} O; it has the same shape
(rows x columns) as G, so characters are indexed by the digit strings of the
dual quotient in the same lexicographic order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .padic import BallCoset, ExtElement, pairing_angle, project_T

__all__ = [
    "BallQuotient",
    "CylFunction",
    "SpectralCoefficients",
    "haar_integral",
    "mu_integral",
    "fourier",
    "inverse_fourier",
    "plancherel_defect",
    "refine_function",
    "random_function",
]

MAX_CHARACTER_SIZE = 1 << 11      # largest |G| for which U is materialized
MAX_TABLE_SIZE = 1 << 12          # largest |G| for subtraction tables
MAX_LOOKUP_KEYS = 1 << 20         # largest difference-key space


class BallQuotient:
    """The finite group pi^lo O / pi^s O of a level, with digit coordinates.

    Haar measure gives each coset volume q**(-s) (normalized so the ring of
    integers has volume 1); the canonical probability measure of the standard
    ball pi^{s0} O weights each coset by q**(s0 - s) instead.
    """

    def __init__(self, level, lo, s):
        if s <= lo:
            raise ValueError("need lo < s to form a nontrivial quotient")
        self.level = level
        self.lo = int(lo)
        self.s = int(s)
        self.p = level.p
        self.q = level.q
        self.f = level.f
        self.J = self.s - self.lo
        self.D = self.J * self.f
        self.size = self.p**self.D

    # -- identification ----------------------------------------------------

    def key(self):
        return (self.level.key(), self.lo, self.s)

    def __eq__(self, other):
        return isinstance(other, BallQuotient) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return (
            f"BallQuotient({self.level!r}, lo={self.lo}, s={self.s}, "
            f"size={self.size})"
        )

    def _cache(self, name, builder):
        key = ("bq", name, self.lo, self.s)
        cache = self.level._cache
        if key not in cache:
            cache[key] = builder()
        return cache[key]

    # -- digit coordinates ---------------------------------------------------

    @property
    def digit_matrix(self):
        """All digit strings, one row per coset, lexicographic order."""

        def build():
            if self.size > MAX_TABLE_SIZE * MAX_TABLE_SIZE:
                raise ValueError("quotient too large to enumerate")
            cols = []
            for t in range(self.D):
                reps = self.p ** (self.D - 1 - t)
                block = np.repeat(np.arange(self.p), reps)
                cols.append(np.tile(block, self.size // (reps * self.p)))
            return np.stack(cols, axis=1).astype(np.int64)

        return self._cache("digits", build)

    def index_of_digits(self, digits):
        idx = 0
        for d in digits:
            idx = idx * self.p + int(d)
        return idx

    def coset(self, index):
        return BallCoset(
            self.level, self.lo, self.s, tuple(int(x) for x in self.digit_matrix[index])
        )

    def representative(self, index):
        return self.level.coset_representative(self.coset(index))

    def representatives(self):
        def build():
            return [self.representative(i) for i in range(self.size)]

        return self._cache("reps", build)

    def index_of_element(self, x):
        """Coset index of an element of pi^lo O (an ExtElement or payload)."""
        pay = x.pay if isinstance(x, ExtElement) else x
        digs = self.level.digits_in_ball(pay, self.lo, self.s)
        return self.index_of_digits(digs)

    @property
    def val_pi_vector(self):
        """Exact valuation of each coset (value of any representative that
        is outside the next smaller ball); the zero coset gets s."""

        def build():
            dig = self.digit_matrix
            rows = dig.reshape(self.size, self.J, self.f)
            nonzero = rows.any(axis=2)
            first = np.where(
                nonzero.any(axis=1), nonzero.argmax(axis=1), self.J
            )
            return self.lo + first

        return self._cache("vals", build)

    # -- dual group and characters -------------------------------------------

    def dual(self):
        s0 = self.level.s0
        return BallQuotient(self.level, s0 - self.s, s0 - self.lo)

    def _basis_elements(self, lo):
        monos = self.level._monomials()
        out = []
        for j in range(lo, lo + self.J):
            pw = self.level._pi_pow_pay(j)
            for mpay in monos:
                out.append(ExtElement(self.level, self.level._mul_pay(pw, mpay)))
        return out

    @property
    def character_matrix(self):
        """U[b, g] = chi(<b, g>) for dual label b and coset g.

        Built from the exact D x D table of basis pairing angles: the angle
        of (b, g) is bilinear in the digit strings, so a pair of integer
        matrix products modulo the common denominator gives every character
        value without rounding.
        """

        def build():
            if self.size > MAX_CHARACTER_SIZE:
                raise ValueError(
                    f"character matrix of size {self.size} refused "
                    f"(cap {MAX_CHARACTER_SIZE})"
                )
            s0 = self.level.s0
            basis = self._basis_elements(self.lo)
            dual_basis = self._basis_elements(s0 - self.s)
            theta = [
                [pairing_angle(b, g) for g in basis] for b in dual_basis
            ]
            denom = 1
            for row in theta:
                for ang in row:
                    denom = denom * ang.denominator // math.gcd(
                        denom, ang.denominator
                    )
            kappa = denom
            k = kappa
            while k % self.p == 0:
                k //= self.p
            if k != 1:
                raise AssertionError("angle denominators must be p powers")
            theta_int = np.array(
                [[int(ang * kappa) for ang in row] for row in theta],
                dtype=np.int64,
            )
            bound = (self.D * (self.p - 1)) ** 2 * kappa
            if bound >= 1 << 62:
                raise ValueError("character table would overflow int64")
            dig = self.digit_matrix
            phases = (dig @ theta_int @ dig.T) % kappa
            return np.exp((2j * np.pi / kappa) * phases)

        return self._cache("U", build)

    # -- group tables ----------------------------------------------------------

    @property
    def sub_table(self):
        """int32 table: sub_table[i, j] = index of coset(rep_i - rep_j)."""

        def build():
            if self.size > MAX_TABLE_SIZE:
                raise ValueError(
                    f"subtraction table of size {self.size} refused "
                    f"(cap {MAX_TABLE_SIZE})"
                )
            if self.level.e == 1:
                return self._sub_table_unramified()
            return self._sub_table_generic()

        return self._cache("sub", build)

    def _sub_table_unramified(self):
        # pi = p: each residue monomial carries an independent base-p integer
        # mod p^J, so subtraction never mixes columns
        p, J, f, D = self.p, self.J, self.f, self.D
        dig = self.digit_matrix
        pw = p ** np.arange(J, dtype=np.int64)
        vals = np.empty((self.size, f), dtype=np.int64)
        for mu in range(f):
            vals[:, mu] = dig[:, mu::f] @ pw
        mod = p**J
        out = np.zeros((self.size, self.size), dtype=np.int64)
        for mu in range(f):
            diff = (vals[:, None, mu] - vals[None, :, mu]) % mod
            for j in range(J):
                weight = p ** (D - 1 - j * f - mu)
                out += ((diff // p**j) % p) * weight
        return out.astype(np.int32)

    def _sub_table_generic(self):
        # differences of digit strings, one exact normalization per distinct
        # difference vector, assembled through an injective radix key
        p, D = self.p, self.D
        radix = 2 * p - 1
        total = radix**D
        if total > MAX_LOOKUP_KEYS:
            raise ValueError(
                f"difference lookup of size {total} refused (cap {MAX_LOOKUP_KEYS})"
            )
        lvl = self.level
        basis = self._basis_elements(self.lo)
        lookup = np.empty(total, dtype=np.int32)
        # enumerate difference vectors; incremental updates keep the payload
        # current as one digit changes at a time in odometer order
        digits = [0] * D  # stored shifted: actual delta = digits[t] - (p - 1)
        pay = lvl._zero_pay()
        shift = p - 1
        for t in range(D):
            if shift:
                pay = lvl._sub_pay(pay, lvl._smul_pay(shift, basis[t].pay))
        key = 0
        lookup[key] = self.index_of_digits(
            lvl.digits_in_ball(pay, self.lo, self.s)
        )
        for key in range(1, total):
            t = 0
            k = key
            while k % radix == 0:
                k //= radix
                t += 1
            # digit t increments, lower digits reset from radix-1 to 0
            digits[t] += 1
            pay = lvl._add_pay(pay, basis[t].pay)
            for u in range(t):
                digits[u] = 0
                pay = lvl._sub_pay(
                    pay, lvl._smul_pay(radix - 1, basis[u].pay)
                )
            lookup[key] = self.index_of_digits(
                lvl.digits_in_ball(pay, self.lo, self.s)
            )
        rvec = radix ** np.arange(D, dtype=np.int64)
        a = self.digit_matrix @ rvec
        offset = int(((p - 1) * rvec).sum())
        return lookup[a[:, None] - a[None, :] + offset]

    @property
    def neg_table(self):
        """neg_table[j] = index of coset(-rep_j)."""

        def build():
            return self.sub_table[0, :].copy()

        return self._cache("neg", build)

    # -- measures ------------------------------------------------------------

    @property
    def haar_coset_volume(self):
        return Fraction(self.q) ** (-self.s)

    @property
    def mu_coset_mass(self):
        return Fraction(self.q) ** (self.level.s0 - self.s)

    @property
    def mu_total_mass(self):
        return Fraction(self.q) ** (self.level.s0 - self.lo)


@dataclass
class CylFunction:
    """A cylindrical function: values on the cosets of a ball quotient."""

    quotient: BallQuotient
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.quotient.size,):
            raise ValueError("one value per coset required")


@dataclass
class SpectralCoefficients:
    """Fourier coefficients indexed by the dual quotient's cosets."""

    quotient: BallQuotient
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.quotient.size,):
            raise ValueError("one coefficient per dual label required")


def haar_integral(quotient, values):
    """Integral against additive Haar measure with vol(O) = 1."""
    return complex(np.sum(values)) * float(quotient.haar_coset_volume)


def mu_integral(quotient, values):
    """Integral against the normalized measure of the standard ball."""
    return complex(np.sum(values)) * float(quotient.mu_coset_mass)


def fourier(quotient, values):
    """Coefficients c_b = (1/|G|) sum_g conj(chi_b(g)) phi(g)."""
    U = quotient.character_matrix
    return np.conj(U) @ np.asarray(values, dtype=np.complex128) / quotient.size


def inverse_fourier(quotient, coeffs):
    """phi(g) = sum_b c_b chi_b(g)."""
    U = quotient.character_matrix
    return U.T @ np.asarray(coeffs, dtype=np.complex128)


def plancherel_defect(quotient, values):
    """|  ||phi||^2_mu  -  q^(s0-lo) sum |c_b|^2  | for the given function."""
    values = np.asarray(values, dtype=np.complex128)
    coeffs = fourier(quotient, values)
    lhs = float(quotient.mu_coset_mass) * float(np.sum(np.abs(values) ** 2))
    rhs = float(quotient.mu_total_mass) * float(np.sum(np.abs(coeffs) ** 2))
    return abs(lhs - rhs)


def refine_function(src, values, target_level):
    """Transport phi on the standard-ball quotient of one level to the
    equivalent cylindrical function on a deeper level.

    ``src`` must be a quotient of the standard ball (lo = s0) of a level that
    is a chain prefix of ``target_level``.  Returns (dst_quotient, dst_values)
    with dst_values[g] = values[index of T_n(rep_g)], the averaged projection
    identifying the two cylindrical representations.
    """
    n_level = src.level
    if src.lo != n_level.s0:
        raise ValueError("refinement expects the standard-ball quotient")
    if not n_level.is_prefix_of(target_level):
        raise ValueError("target level must extend the source level")
    values = np.asarray(values, dtype=np.complex128)
    if n_level.depth == target_level.depth:
        return src, values.copy()
    e_rel = target_level.e // n_level.e
    # smallest s with T(pi^s O_target) inside pi^{src.s} O_src; the averaged
    # projection sends the target standard ball onto the source one, and each
    # extra digit row upstairs costs e_rel rows downstairs
    t_star = target_level.s0 + e_rel * (src.s - n_level.s0)
    dst = BallQuotient(target_level, target_level.s0, t_star)

    def build_map():
        if dst.size > MAX_TABLE_SIZE * 64:
            raise ValueError("refined quotient too large")
        idx = np.empty(dst.size, dtype=np.int64)
        for g in range(dst.size):
            w = project_T(dst.representative(g), n_level)
            idx[g] = src.index_of_element(w)
        return idx

    key = ("bq", "refine", dst.lo, dst.s, n_level.depth, src.lo, src.s)
    cache = target_level._cache
    if key not in cache:
        cache[key] = build_map()
    return dst, values[cache[key]]


def random_function(quotient, rng, complex_values=True):
    """A random cylindrical function (standard normal coordinates)."""
    re = rng.standard_normal(quotient.size)
    if not complex_values:
        return re.astype(np.complex128)
    return re + 1j * rng.standard_normal(quotient.size)
