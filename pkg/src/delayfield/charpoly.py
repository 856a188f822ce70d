"""Even characteristic polynomial of the ODE attached to a fixed lambda.

For fixed complex ``lam`` every eigenfunction solves a linear ODE with
constant coefficients whose characteristic polynomial is even in ``rho``.
It is handled as a polynomial in ``s = rho**2`` with coefficients stored
in ascending order ``(s**0, s**1, ..., s**N)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateLeading, RepeatedRoots, SingularVandermonde
from .model import ModelParams, effective_coefficients

DEGENERACY_TOL = 1e-8


class Degeneracy(enum.Enum):
    IN_S = "IN_S"
    NOT_IN_S = "NOT_IN_S"


class Admissibility(enum.Enum):
    ACCEPT = "ACCEPT"
    REJECT_DEGENERATE = "REJECT(a)"  # two shifted rates share a square
    REJECT_ROOT_COLLISION = "REJECT(b)"  # the 2N roots are not distinct
    REJECT_RATE_ROOT = "REJECT(c)"  # some k_j equals +-rho_i

    @property
    def reason(self) -> str:
        return {
            "ACCEPT": "",
            "REJECT(a)": "shifted rates with equal squares",
            "REJECT(b)": "rho-collision",
            "REJECT(c)": "rate equals root",
        }[self.value]


@dataclass(frozen=True)
class PolyData:
    """Characteristic polynomial data at one ``lam``.

    Attributes
    ----------
    lam : complex
    k : ndarray
        Shifted rates ``lam + mu_i``.
    coeffs_s : ndarray
        Ascending coefficients in ``s``, defined up to a common factor.
    rho : ndarray
        One root per +- pair, with ``Re rho >= 0`` (ties ``Im rho >= 0``).
    """

    lam: complex
    k: np.ndarray
    coeffs_s: np.ndarray
    rho: np.ndarray

    def evaluate(self, rho) -> np.ndarray:
        return polyval_s(self.coeffs_s, np.asarray(rho) ** 2)


def polyval_s(coeffs_s, s):
    """Evaluate ascending coefficients at ``s``."""
    return np.polynomial.polynomial.polyval(s, np.asarray(coeffs_s))


def shifted_rates(lam: complex, p: ModelParams) -> np.ndarray:
    return complex(lam) + p.mu_array


def degeneracy_check(lam: complex, p: ModelParams, tol: float = DEGENERACY_TOL) -> Degeneracy:
    """Flag ``lam`` when two shifted rates have (nearly) equal squares."""
    k2 = shifted_rates(lam, p) ** 2
    scale = max(1.0, float(np.max(np.abs(k2))))
    for a, b in combinations(k2, 2):
        if abs(a - b) < tol * scale:
            return Degeneracy.IN_S
    return Degeneracy.NOT_IN_S


def leading_factor(lam: complex, p: ModelParams) -> complex:
    return np.exp(lam * p.tau0) * (lam + p.alpha) / 2


def closed_form_poly_batch(lams, p: ModelParams) -> np.ndarray:
    """Vectorized :func:`closed_form_poly`; returns shape ``(len(lams), N+1)``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    k = lams[:, None] + p.mu_array[None, :]
    c = effective_coefficients(p)
    m, n = k.shape

    def times_factor(poly, kj2):
        # multiply ascending coefficients by (s - kj2)
        out = np.zeros((m, poly.shape[1] + 1), dtype=complex)
        out[:, 1:] += poly
        out[:, :-1] -= kj2[:, None] * poly
        return out

    full = np.ones((m, 1), dtype=complex)
    for j in range(n):
        full = times_factor(full, k[:, j] ** 2)
    coeffs = leading_factor(lams, p)[:, None] * full
    for i in range(n):
        partial = np.ones((m, 1), dtype=complex)
        for j in range(n):
            if j != i:
                partial = times_factor(partial, k[:, j] ** 2)
        coeffs[:, :n] += (c[i] * k[:, i])[:, None] * partial
    return coeffs


def closed_form_poly(lam: complex, p: ModelParams) -> np.ndarray:
    """Coefficients of the product formula, ascending in ``s``.

    ``e^{lam tau0}(lam+alpha)/2 * prod_j (s - k_j^2) + sum_i c_i k_i prod_{j!=i} (s - k_j^2)``
    """
    lam = complex(lam)
    if lam == -p.alpha:
        raise DegenerateLeading("leading coefficient vanishes at lam = -alpha", lam=lam)
    return closed_form_poly_batch([lam], p)[0]


def roots_s_batch(coeffs) -> np.ndarray:
    """Roots in ``s`` for a stack of ascending coefficient rows."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = coeffs.shape[1] - 1
    if n == 1:
        return -coeffs[:, :1] / coeffs[:, 1:]
    if n == 2:
        c0, c1, c2 = coeffs.T
        disc = np.sqrt(c1 * c1 - 4 * c2 * c0)
        # sign choice avoids cancellation; Vieta gives the partner root
        q = np.where(np.abs(c1 + disc) >= np.abs(c1 - disc), -(c1 + disc) / 2, -(c1 - disc) / 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            other = np.where(q == 0, 0.0, c0 / np.where(q == 0, 1.0, q))
        return np.stack([q / c2, other], axis=1)
    companion = np.zeros((coeffs.shape[0], n, n), dtype=complex)
    companion[:, 1:, :-1] = np.eye(n - 1)
    companion[:, :, -1] = -coeffs[:, :-1] / coeffs[:, -1:]
    return np.linalg.eigvals(companion)


def representatives(s) -> np.ndarray:
    """Square roots normalized to ``Re >= 0`` (ties ``Im >= 0``)."""
    rho = np.sqrt(np.asarray(s, dtype=complex))
    flip = (rho.real < 0) | ((rho.real == 0) & (rho.imag < 0))
    return np.where(flip, -rho, rho)


def vandermonde_coeffs(lam: complex, p: ModelParams, tol: float = DEGENERACY_TOL):
    """Coefficients via elimination of the integral terms (Vandermonde route).

    Solves ``W zeta = -(k_i^{2N})`` with ``W[i, j] = k_i^{2j}`` and assembles
    ``beta = M^T [zeta; 1]`` where
    ``M^T = e^{lam tau0}(lam+alpha) I + 2 sum_i c_i k_i Xi_i`` and
    ``Xi_i[a, b] = k_i^{2(b-a-1)}`` for ``b > a``.

    Returns
    -------
    zeta : ndarray, shape (N,)
    beta : ndarray, shape (N+1,)
        Ascending coefficients; twice the closed form up to rounding.
    """
    lam = complex(lam)
    if degeneracy_check(lam, p, tol) is Degeneracy.IN_S:
        raise SingularVandermonde("shifted rates have equal squares", lam=lam)
    k = shifted_rates(lam, p)
    c = effective_coefficients(p)
    n = len(k)
    k2 = k**2
    W = k2[:, None] ** np.arange(n)[None, :]
    zeta = np.linalg.solve(W, -(k2**n))
    Z = np.concatenate([zeta, [1.0]])
    Mt = np.exp(lam * p.tau0) * (lam + p.alpha) * np.eye(n + 1, dtype=complex)
    a, b = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    upper = b > a
    for ci, ki in zip(c, k):
        xi = np.where(upper, ki ** (2 * np.clip(b - a - 1, 0, None)), 0.0)
        Mt = Mt + 2 * ci * ki * xi
    beta = Mt @ Z
    return zeta, beta


def rho_roots(coeffs_s, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Representatives ``rho_i`` of the 2N roots ``+-rho_i``.

    Roots in ``s`` come from the quadratic formula for ``N <= 2`` and from
    companion-matrix eigenvalues otherwise.
    """
    coeffs = np.asarray(coeffs_s, dtype=complex)
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0 or abs(coeffs[-1]) <= 1e-14 * scale:
        raise DegenerateLeading("leading coefficient is (numerically) zero")
    s = roots_s_batch(coeffs[None, :])[0]
    rho = representatives(s)
    rho = rho[np.argsort(np.abs(rho), kind="stable")]
    s_scale = max(1.0, float(np.max(np.abs(s))))
    for a, b in combinations(rho**2, 2):
        if abs(a - b) < tol * s_scale:
            raise RepeatedRoots("repeated roots in s", s=[complex(v) for v in s])
    return rho


def char_poly(lam: complex, p: ModelParams, tol: float = DEGENERACY_TOL, check_repeated: bool = True) -> PolyData:
    """Assemble :class:`PolyData` from the closed-form route."""
    coeffs = closed_form_poly(lam, p)
    rho = rho_roots(coeffs, tol if check_repeated else 0.0)
    return PolyData(complex(lam), shifted_rates(lam, p), coeffs, rho)


def admissibility(poly: PolyData, tol: float = DEGENERACY_TOL) -> Admissibility:
    """Check the three hypotheses under which det S = 0 characterizes eigenvalues.

    (a) no two ``k_i**2`` coincide, (b) the ``2N`` values ``+-rho_i`` are
    distinct, (c) no ``k_j`` equals ``+-rho_i``.  All comparisons are relative
    to ``max(1, largest modulus involved)``.
    """
    k, rho = poly.k, poly.rho
    k2 = k**2
    k_scale = max(1.0, float(np.max(np.abs(k2))))
    for a, b in combinations(k2, 2):
        if abs(a - b) < tol * k_scale:
            return Admissibility.REJECT_DEGENERATE
    roots = np.concatenate([rho, -rho])
    r_scale = max(1.0, float(np.max(np.abs(roots))))
    for a, b in combinations(roots, 2):
        if abs(a - b) < tol * r_scale:
            return Admissibility.REJECT_ROOT_COLLISION
    kr_scale = max(1.0, float(np.max(np.abs(k))), r_scale)
    if np.min(np.abs(k[:, None] - roots[None, :])) < tol * kr_scale:
        return Admissibility.REJECT_RATE_ROOT
    return Admissibility.ACCEPT
