"""Spectra of the 4-d map's fixed points.

The linearization at either kind of fixed point has a reciprocal (palindromic)
characteristic polynomial

    p(x) = x^4 + a x^3 + b x^2 + a x + 1,

with (a, b) = (1/A, -2/A) at the origin and (1/A, -(6 + 2/A)) at the two
constant quadruples.  The palindromic structure forces the eigenvalues into
reciprocal pairs (lambda, 1/lambda); the substitution s = x + 1/x reduces the
quartic to

    s^2 + a s + (b - 2) = 0,

after which each s yields a pair from x^2 - s x + 1 = 0.  Solving this way
keeps the pairing exact in floating point: one root of each quadratic is taken
with the numerically stable sign, the partner is its literal reciprocal.

Whether all four roots are real is decided by a Sturm-chain criterion in the
(a, b) plane: four real roots iff one of
  1. b < -2        and  -sqrt(4+4b+b^2)/2 < a < sqrt(4+4b+b^2)/2
  2. b > 6         and  -sqrt(4+4b+b^2)/2 < a < -sqrt(4b-8)
  3. b > 6         and   sqrt(4b-8)       < a < sqrt(4+4b+b^2)/2
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .maps import ModelParams

__all__ = [
    "CRITICAL_A",
    "ReciprocalQuartic",
    "EigenSystem",
    "NonHyperbolicError",
    "characteristic_poly",
    "sturm_real_root_test",
    "discriminant",
    "classify_eigenvalues",
    "solve_reciprocal_quartic",
    "eigenvectors_at_origin",
]

# lower edge of the all-real window of the origin's spectrum
CRITICAL_A = float((-2.0 + np.sqrt(2.0)) / 4.0)

ALL_REAL = "all-real"
TWO_PAIRS_COMPLEX = "two-pairs-complex"
MIXED = "mixed"


class NonHyperbolicError(ValueError):
    """Raised when an operation needs hyperbolic (or all-real) eigenvalues."""


@dataclass(frozen=True)
class ReciprocalQuartic:
    """x^4 + a x^3 + b x^2 + a x + 1."""

    a: float
    b: float

    def __call__(self, x):
        x = np.asarray(x)
        return ((x + self.a) * x + self.b) * x**2 + self.a * x + 1.0

    def coefficients(self):
        """Monic coefficient vector, highest degree first."""
        return np.array([1.0, self.a, self.b, self.a, 1.0])


@dataclass(frozen=True)
class EigenSystem:
    """Reciprocal-paired eigenvalues: lambda3 = 1/lambda1, lambda4 = 1/lambda2.

    When hyperbolic, (lambda1, lambda2) are the stable pair ordered by
    modulus.  Eigenvectors (filled by eigenvectors_at_origin) are Vandermonde:
    w_i proportional to (1, l_i, l_i^2, l_i^3).
    """

    lambda1: complex
    lambda2: complex
    lambda3: complex
    lambda4: complex
    classification: str
    hyperbolic: bool
    w1: Optional[np.ndarray] = None
    w2: Optional[np.ndarray] = None
    w3: Optional[np.ndarray] = None
    w4: Optional[np.ndarray] = None

    def stable_pair(self):
        """The two real stable eigenvalues as floats, |l1| <= |l2|."""
        if not (self.hyperbolic and self.classification == ALL_REAL):
            raise NonHyperbolicError(
                f"need hyperbolic all-real eigenvalues, have {self.classification}"
            )
        return float(self.lambda1.real), float(self.lambda2.real)


def characteristic_poly(p: ModelParams, at="origin"):
    p.require_A()
    if at == "origin":
        return ReciprocalQuartic(1.0 / p.A, -2.0 / p.A)
    if at == "nontrivial":
        if p.epsilon * p.A >= 0.0:
            raise ValueError("nontrivial fixed points exist only for eps*A < 0")
        return ReciprocalQuartic(1.0 / p.A, -(6.0 + 2.0 / p.A))
    raise ValueError("at must be 'origin' or 'nontrivial'")


def _four_real_conditions(a, b, strict):
    lt = (lambda u, v: u < v) if strict else (lambda u, v: u <= v)
    conds = []
    if b < -2.0 or (not strict and b <= -2.0):
        h = 0.5 * np.sqrt(4.0 + 4.0 * b + b * b)
        conds.append(lt(-h, a) and lt(a, h))
    if b > 6.0 or (not strict and b >= 6.0):
        h = 0.5 * np.sqrt(4.0 + 4.0 * b + b * b)
        r = np.sqrt(4.0 * b - 8.0)
        conds.append(lt(-h, a) and lt(a, -r))
        conds.append(lt(r, a) and lt(a, h))
    return any(conds)


def sturm_real_root_test(q: ReciprocalQuartic):
    """True iff the quartic has four real roots; None on a boundary equality.

    The three lemma conditions use strict inequalities; a point where the
    strict and non-strict evaluations disagree sits exactly on a boundary
    curve, where the root count is ambiguous (multiple roots), and is
    reported as indeterminate.
    """
    strict = _four_real_conditions(q.a, q.b, strict=True)
    loose = _four_real_conditions(q.a, q.b, strict=False)
    if strict != loose:
        return None
    return strict


def discriminant(p: ModelParams, at="origin"):
    """Closed-form discriminant of the characteristic quartic."""
    p.require_A()
    A = p.A
    if at == "origin":
        return 4.0 * (-2.0 - 31.0 * A - 144.0 * A**2 - 176.0 * A**3 + 64.0 * A**5) / A**5
    if at == "nontrivial":
        return 16.0 * (1.0 + 17.0 * A + 144.0 * A**2 + 640.0 * A**3
                       + 1536.0 * A**4 + 1024.0 * A**5) / A**5
    raise ValueError("at must be 'origin' or 'nontrivial'")


def classify_eigenvalues(A, at="origin"):
    """Reality type of the four eigenvalues as a function of A alone."""
    A = float(A)
    if A == 0.0:
        raise ValueError("A must be nonzero")
    if at == "origin":
        if A < CRITICAL_A or A > 2.0:
            return TWO_PAIRS_COMPLEX
        if A < 0.0:
            return ALL_REAL
        return MIXED  # 0 < A <= 2
    if at == "nontrivial":
        if -1.0 < A < 0.0:
            return MIXED
        return ALL_REAL
    raise ValueError("at must be 'origin' or 'nontrivial'")


def _quadratic_pair(s):
    """Roots of x^2 - s x + 1: the large root by the stable formula, partner
    its exact reciprocal."""
    disc = s * s - 4.0
    sq = np.sqrt(complex(disc))
    xp = (s + sq) / 2.0
    xm = (s - sq) / 2.0
    big = xp if abs(xp) >= abs(xm) else xm
    return big, 1.0 / big


def _realify(z, tol=1e-12):
    if abs(z.imag) <= tol * max(1.0, abs(z)):
        return complex(z.real, 0.0)
    return z


def solve_reciprocal_quartic(q: ReciprocalQuartic):
    """Eigenvalues via the palindromic reduction; pairing exact by construction."""
    a, b = q.a, q.b
    sdisc = a * a - 4.0 * (b - 2.0)
    sq = np.sqrt(complex(sdisc))
    s_roots = ((-a - sq) / 2.0, (-a + sq) / 2.0)
    pairs = [_quadratic_pair(s) for s in s_roots]
    roots = [_realify(r) for pair in pairs for r in pair]

    n_real = sum(1 for r in roots if r.imag == 0.0)
    if n_real == 4:
        classification = ALL_REAL
    elif n_real == 0:
        classification = TWO_PAIRS_COMPLEX
    else:
        classification = MIXED

    hyperbolic = all(abs(abs(r) - 1.0) > 1e-12 for r in roots)
    if hyperbolic:
        stable = sorted((r for r in roots if abs(r) < 1.0), key=abs)
        l1, l2 = stable
    else:
        l1, l2 = pairs[0][0], pairs[1][0]
    return EigenSystem(
        lambda1=complex(l1),
        lambda2=complex(l2),
        lambda3=1.0 / complex(l1),
        lambda4=1.0 / complex(l2),
        classification=classification,
        hyperbolic=hyperbolic,
    )


def eigenvectors_at_origin(p: ModelParams, es: EigenSystem):
    """Fill in the Vandermonde eigenvectors (1, l, l^2, l^3) of the companion
    Jacobian at the origin, at unit scale."""
    if not es.hyperbolic:
        raise NonHyperbolicError("eigenvectors requested for non-hyperbolic spectrum")
    p.require_A()

    def vand(l):
        w = np.array([1.0, l, l * l, l**3], dtype=complex)
        return w.real.copy() if np.all(w.imag == 0.0) else w

    return replace(
        es,
        w1=vand(es.lambda1),
        w2=vand(es.lambda2),
        w3=vand(es.lambda3),
        w4=vand(es.lambda4),
    )
