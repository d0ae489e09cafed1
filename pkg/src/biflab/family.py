"""Holomorphic families of rational maps over a parameter disc."""

from dataclasses import dataclass

import numpy as np

from . import forms
from .errors import DegenerationOnDisc, OutOfDomain
from .sphere import RESULTANT_TOL, RationalMap


@dataclass(frozen=True)
class HolomorphicFamily:
    """Maps f_lambda whose coefficients are polynomials in lambda.

    ``num_poly[i, k]`` is the coefficient of lambda**k in the coefficient
    of z**i of the numerator; likewise ``den_poly``.  Parameters live in
    the closed disc of radius ``domain_radius`` about ``center``.
    """

    num_poly: np.ndarray
    den_poly: np.ndarray
    domain_radius: float
    center: complex = 0j
    name: str = ""

    def __post_init__(self):
        num = np.atleast_2d(np.asarray(self.num_poly, dtype=complex))
        den = np.atleast_2d(np.asarray(self.den_poly, dtype=complex))
        if num.shape[0] != den.shape[0]:
            raise ValueError("numerator and denominator must have the same degree")
        k = max(num.shape[1], den.shape[1])
        num = np.pad(num, ((0, 0), (0, k - num.shape[1])))
        den = np.pad(den, ((0, 0), (0, k - den.shape[1])))
        object.__setattr__(self, "num_poly", num)
        object.__setattr__(self, "den_poly", den)
        t = np.exp(2j * np.pi * np.arange(64) / 64)
        lams = np.concatenate([[self.center], self.center + self.domain_radius * t])
        P, Q = self.coefficients(lams)
        res = np.abs(forms.sylvester_resultant(P, Q))
        bad = ~(res > RESULTANT_TOL)
        if np.any(bad):
            lam = complex(lams[np.argmax(bad)])
            raise DegenerationOnDisc(f"maps degenerate at lambda = {lam:.6g}")

    @property
    def degree(self):
        return self.num_poly.shape[0] - 1

    def coefficients(self, lams, normalize=True):
        """Numerator and denominator coefficients at each parameter, (N, d+1)."""
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        powers = lams[:, None] ** np.arange(self.num_poly.shape[1])
        P = powers @ self.num_poly.T
        Q = powers @ self.den_poly.T
        if normalize:
            s = np.maximum(np.max(np.abs(P), axis=1), np.max(np.abs(Q), axis=1))
            P = P / s[:, None]
            Q = Q / s[:, None]
        return P, Q

    def coefficient_derivatives(self, lams):
        """Lambda-derivatives of the unnormalized coefficients."""
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        k = np.arange(1, self.num_poly.shape[1])
        powers = lams[:, None] ** (k - 1) * k
        return powers @ self.num_poly[:, 1:].T, powers @ self.den_poly[:, 1:].T

    def contains(self, lam, slack=1e-12):
        return abs(complex(lam) - self.center) <= self.domain_radius * (1 + slack)

    def map_at(self, lam):
        if not self.contains(lam):
            raise OutOfDomain(f"lambda = {complex(lam):.6g} lies outside the parameter disc")
        P, Q = self.coefficients([lam], normalize=False)
        return RationalMap.from_coefficients(P[0], Q[0])


def quadratic_family(domain_radius=3.0):
    """z**2 + lambda."""
    num = np.zeros((3, 2), dtype=complex)
    num[0, 1] = 1
    num[2, 0] = 1
    den = np.zeros((3, 2), dtype=complex)
    den[0, 0] = 1
    return HolomorphicFamily(num, den, domain_radius, name="quadratic")


def constant_family(f, domain_radius=1.0, center=0j):
    """The family that ignores its parameter."""
    return HolomorphicFamily(np.asarray(f.num)[:, None], np.asarray(f.den)[:, None],
                             domain_radius, center, name="constant")


def linear_family(base, direction_num, direction_den, domain_radius, center=0j):
    """f_0 + lambda * direction, applied coefficientwise."""
    d = base.degree
    dn = np.asarray(direction_num, dtype=complex)
    dd = np.asarray(direction_den, dtype=complex)
    if len(dn) > d + 1 or len(dd) > d + 1:
        raise ValueError("direction has higher degree than the base map")
    dn = np.pad(dn, (0, d + 1 - len(dn)))
    dd = np.pad(dd, (0, d + 1 - len(dd)))
    num = np.stack([np.asarray(base.num), dn], axis=1)
    den = np.stack([np.asarray(base.den), dd], axis=1)
    return HolomorphicFamily(num, den, domain_radius, center, name="linear")
