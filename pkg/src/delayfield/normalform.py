"""Critical normal-form coefficients for Hopf and double-Hopf points.

The dual pairing with the adjoint eigenvector is never formed explicitly.
Instead the residue ``(1/2 pi i) \\oint Delta(z)^{-1} y dz`` is computed
from resolvent solutions on a small circle around the critical eigenvalue;
it is a multiple ``kappa`` of the eigenfunction and ``kappa`` is the pairing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import charpoly
from .errors import FieldError, PreconditionError, ProportionalityFailure, Resonance
from .model import ModelParams, SpatialGrid, activation_deriv, kernel_of_distance
from .resolvent import align_roots, resolve
from .spectrum import EigenData, char_det, expansion, forbidden_points, newton_batch

FIT_LIMIT = 1e-4
DEFAULT_NODES = 64
MAX_RADIUS = 0.2


@dataclass(frozen=True)
class ExponentialHistory:
    """History function ``t, x -> e^{lam t} q(x)`` with ``q`` sampled on a grid.

    Values between nodes use linear interpolation of ``q``.
    """

    lam: complex
    grid: SpatialGrid
    qsamples: np.ndarray

    @classmethod
    def of(cls, e: EigenData) -> "ExponentialHistory":
        return cls(e.lam, e.grid, e.qsamples)

    def conj(self) -> "ExponentialHistory":
        return ExponentialHistory(self.lam.conjugate(), self.grid, self.qsamples.conj())

    def profile(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        q = self.qsamples
        return np.interp(x, self.grid.nodes, q.real) + 1j * np.interp(x, self.grid.nodes, q.imag)

    def __call__(self, t, x):
        return np.exp(self.lam * np.asarray(t)) * self.profile(x)


@dataclass(frozen=True)
class Derivatives:
    """Activation derivatives at zero used by the nonlinear terms.

    The second derivative is zero for the shipped odd activation; a nonzero
    value is accepted to exercise the quadratic machinery.
    """

    second: float
    third: float

    @classmethod
    def of(cls, p: ModelParams) -> "Derivatives":
        return cls(activation_deriv(2, p.r), activation_deriv(3, p.r))


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.nodes < 16:
            raise ValueError("contour needs at least 16 nodes")

    def points(self) -> np.ndarray:
        angles = 2 * np.pi * np.arange(self.nodes) / self.nodes
        return self.center + self.radius * np.exp(1j * angles)


class HopfVerdict(enum.Enum):
    SUPERCRITICAL = "SUPERCRITICAL"
    SUBCRITICAL = "SUBCRITICAL"


@dataclass
class HopfNF:
    omega0: float
    phi: EigenData = field(repr=False)
    g21: complex
    l1: float
    verdict: HopfVerdict
    contour: ContourSpec
    fit_residual: float

    def summary(self) -> str:
        return f"{self.verdict.value}, l1 = {self.l1:.6g}"


@dataclass
class DoubleHopfNF:
    omega1: float
    omega2: float
    g2100: complex
    g1011: complex
    g1110: complex
    g0021: complex
    p: np.ndarray
    theta: float
    delta: float
    kind: str
    subtype: str
    contours: tuple
    fit_residuals: tuple
    note: str = "fifth-order coefficients (s1, s2, r1, r2) are not computed"

    def summary(self) -> str:
        return (f"{self.kind}, sub-type {self.subtype}, theta = {self.theta:.6g}, "
                f"delta = {self.delta:.6g}")


def classify_double_hopf(p_matrix) -> tuple:
    """Return ``(theta, delta, kind, subtype)`` for a real 2x2 coefficient matrix.

    Only the simple case is subdivided here: sub-type I when theta and delta
    are positive with product above one, otherwise the label records the
    sign pattern without a numbered sub-type.
    """
    P = np.asarray(p_matrix, dtype=float)
    theta = P[0, 1] / P[1, 1]
    delta = P[1, 0] / P[0, 0]
    kind = "SIMPLE" if P[0, 0] * P[1, 1] > 0 else "DIFFICULT"
    if kind == "SIMPLE" and theta > 0 and delta > 0 and theta * delta > 1:
        subtype = "I"
    elif kind == "SIMPLE":
        subtype = "other (not I)"
    else:
        subtype = "n/a"
    return float(theta), float(delta), kind, subtype


def multilinear_G(k: int, psis: Sequence[Callable], grid: SpatialGrid, p: ModelParams,
                  derivs: Derivatives | None = None) -> np.ndarray:
    """Quadratic (``k=2``) or cubic (``k=3``) form of the nonlinearity.

    ``(x) -> S^(k)(0) int J_hat(x,r) prod_i psi_i(-tau(x,r), r) dr``
    with the unscaled kernel amplitudes.
    """
    if k not in (2, 3) or len(psis) != k:
        raise ValueError("k must be 2 or 3 with k history functions")
    derivs = derivs or Derivatives.of(p)
    factor = derivs.second if k == 2 else derivs.third
    n = grid.size
    if factor == 0:
        return np.zeros(n, dtype=complex)
    dist = grid.distances()
    tau = p.tau0 + dist
    r_nodes = np.broadcast_to(grid.nodes[None, :], (n, n))
    product_ = np.ones((n, n), dtype=complex)
    for psi in psis:
        product_ = product_ * psi(-tau, r_nodes)
    kernel = kernel_of_distance(dist, p.c_hat_array, p.mu_array)
    return factor * (kernel * product_) @ grid.weights


def certify_contour(crit: EigenData, p: ModelParams, radius: float | None = None,
                    nodes: int = DEFAULT_NODES, box: float = 1.0, seeds: int = 12) -> ContourSpec:
    """Choose a circle around ``crit.lam`` free of other singular points.

    A local pre-scan collects nearby roots of the characteristic function,
    nearby collisions of polynomial roots (where the root representatives
    branch) and the fixed forbidden points.  The radius is half the distance
    to the nearest of these, capped at 0.2, or ``radius`` when given and
    compatible.
    """
    center = crit.lam
    obstacles = list(forbidden_points(p)) + list(-p.mu_array)
    grid = [center + complex(a, b) for a in np.linspace(-box, box, seeds)
            for b in np.linspace(-box, box, seeds)]
    roots, status = newton_batch(grid, p)
    obstacles += [z for z, s in zip(roots, status) if s == "OK" and abs(z - center) > 1e-6]
    obstacles += _root_collisions(grid, p)
    gap = min(abs(z - center) for z in obstacles)
    safe = min(MAX_RADIUS, gap / 2)
    if radius is None:
        radius = safe
    elif radius > safe:
        raise PreconditionError(f"radius {radius} exceeds certified {safe:.3g}", radius=radius)
    return ContourSpec(center, float(radius), nodes)


def _root_collisions(seeds, p: ModelParams) -> list:
    """Points where two of the ``2N`` roots ``+-rho_i`` meet.

    These are zeros of the discriminant in ``s`` (``rho_i = +-rho_j``) and of
    the constant coefficient (``rho_i = -rho_i = 0``); both are located by
    Newton from ``seeds``.
    """
    n = p.n_terms

    def disc(z):
        coeffs = charpoly.closed_form_poly_batch(z, p)
        s = charpoly.roots_s_batch(coeffs)
        prod_ = np.ones(len(z), dtype=complex)
        for i in range(n):
            for j in range(i + 1, n):
                prod_ *= (s[:, i] - s[:, j]) ** 2
        return prod_ * coeffs[:, -1] ** (2 * n - 2)

    def constant(z):
        return charpoly.closed_form_poly_batch(z, p)[:, 0]

    out = []
    for fn in ((disc, constant) if n >= 2 else (constant,)):
        z = np.asarray(seeds, dtype=complex)
        with np.errstate(all="ignore"):
            for _ in range(60):
                h = 1e-7 * np.maximum(1.0, np.abs(z))
                step = fn(z) / ((fn(z + h) - fn(z - h)) / (2 * h))
                step = np.where(np.isfinite(step), step, 0.0)
                step = np.where(np.abs(step) > 0.5, 0.5 * step / np.abs(step), step)
                z = z - step
            ok = np.abs(fn(z)) < 1e-10 * np.maximum(1.0, np.abs(fn(z + 1e-3)))
        out += [complex(v) for v in z[ok]]
    return out


def pairing_kappa(crit: EigenData, y, contour: ContourSpec, p: ModelParams,
                  fit_limit: float = FIT_LIMIT) -> tuple:
    """Residue of ``Delta(z)^{-1} y`` at ``crit.lam`` as a multiple of the eigenfunction.

    Returns
    -------
    kappa : complex
    fit_residual : float
        ``||f - kappa q|| / ||f||`` of the least-squares fit.
    """
    grid = crit.grid
    y = np.asarray(y, dtype=complex)
    rho_c = crit.poly.rho
    n = rho_c.size
    integral = np.zeros(2 * n, dtype=complex)
    for z in contour.points():
        res = resolve(z, y, p, grid, rho_ref=rho_c)
        # dz = i (z - center) dtheta; the 1/(2 pi i) factor leaves a plain mean
        integral += res.gamma0 * (z - contour.center)
    integral /= contour.nodes
    f = expansion(rho_c, integral, grid.nodes)
    q = crit.qsamples
    w = grid.weights
    kappa = np.sum(w * q.conj() * f) / np.sum(w * np.abs(q) ** 2)
    norm_f = math.sqrt(float(np.sum(w * np.abs(f) ** 2)))
    fit = math.sqrt(float(np.sum(w * np.abs(f - kappa * q) ** 2))) / norm_f if norm_f > 0 else 0.0
    if fit > fit_limit:
        raise ProportionalityFailure(f"contour residue not proportional to eigenfunction (fit {fit:.3e})",
                                     fit=fit)
    return complex(kappa), fit


def _lifted_resolvent(z: complex, y, p: ModelParams, grid: SpatialGrid) -> ExponentialHistory:
    """History ``e^{z t} Delta(z)^{-1} y`` for a point right-hand side."""
    y = np.asarray(y, dtype=complex)
    if not np.any(y):
        return ExponentialHistory(complex(z), grid, np.zeros(grid.size, dtype=complex))
    res = resolve(z, y, p, grid)
    return ExponentialHistory(complex(z), grid, res.qsamples)


def _check_regular(z: complex, p: ModelParams, what: str) -> None:
    try:
        value = char_det(z, p)
    except FieldError:
        return
    if abs(value) < 1e-10:
        raise Resonance(f"{what} = {z} is an eigenvalue", z=complex(z))


def hopf_h_coefficients(crit: EigenData, p: ModelParams, derivs: Derivatives | None = None) -> tuple:
    """Second-order center-manifold coefficients ``(h20, h11)`` as histories.

    ``h20 = e^{2 i w t} Delta(2 i w)^{-1} B(phi, phi)`` and
    ``h11 = Delta(0)^{-1} B(phi, conj phi)``.
    """
    derivs = derivs or Derivatives.of(p)
    grid = crit.grid
    phi = ExponentialHistory.of(crit)
    omega = crit.lam.imag
    b20 = multilinear_G(2, [phi, phi], grid, p, derivs)
    b11 = multilinear_G(2, [phi, phi.conj()], grid, p, derivs)
    if np.any(b20) or np.any(b11):
        _check_regular(2j * omega, p, "2 i omega0")
        _check_regular(0.0, p, "0")
    return _lifted_resolvent(2j * omega, b20, p, grid), _lifted_resolvent(0.0, b11, p, grid)


def hopf_g21(crit: EigenData, p: ModelParams, contour: ContourSpec | None = None,
             derivs: Derivatives | None = None) -> HopfNF:
    """Cubic coefficient ``g21`` and first Lyapunov coefficient at a Hopf point."""
    derivs = derivs or Derivatives.of(p)
    contour = contour or certify_contour(crit, p)
    grid = crit.grid
    phi = ExponentialHistory.of(crit)
    phib = phi.conj()
    h20, h11 = hopf_h_coefficients(crit, p, derivs)
    y = multilinear_G(3, [phi, phi, phib], grid, p, derivs)
    if derivs.second != 0:
        y = y + multilinear_G(2, [phib, h20], grid, p, derivs)
        y = y + 2 * multilinear_G(2, [phi, h11], grid, p, derivs)
    kappa, fit = pairing_kappa(crit, y, contour, p)
    omega = crit.lam.imag
    g21 = kappa / 2
    l1 = g21.real / omega
    verdict = HopfVerdict.SUPERCRITICAL if l1 < 0 else HopfVerdict.SUBCRITICAL
    return HopfNF(omega, crit, g21, l1, verdict, contour, fit)


def check_nonresonance(omega1: float, omega2: float, order: int = 5, tol: float = 1e-6) -> float:
    """Smallest ``|k w1 - l w2|`` over ``k, l >= 1`` with ``k + l <= order``."""
    gaps = [abs(k * omega1 - l * omega2) for k in range(1, order) for l in range(1, order - k + 1)]
    smallest = min(gaps)
    if smallest <= tol:
        raise Resonance(f"resonant frequencies {omega1}, {omega2}", gap=smallest)
    return smallest


def doublehopf_coeffs(crit1: EigenData, crit2: EigenData, p: ModelParams,
                      contours: tuple | None = None, derivs: Derivatives | None = None) -> DoubleHopfNF:
    """Cubic coefficients ``g2100, g1011, g1110, g0021`` and their classification."""
    derivs = derivs or Derivatives.of(p)
    w1, w2 = crit1.lam.imag, crit2.lam.imag
    if w1 <= 0 or w2 <= 0 or w1 == w2:
        raise PreconditionError("need two distinct positive critical frequencies")
    check_nonresonance(w1, w2)
    if contours is None:
        contours = (certify_contour(crit1, p), certify_contour(crit2, p))
    grid = crit1.grid
    f1 = ExponentialHistory.of(crit1)
    f2 = ExponentialHistory.of(crit2)
    f1b, f2b = f1.conj(), f2.conj()

    def C(a, b, c):
        return multilinear_G(3, [a, b, c], grid, p, derivs)

    y2100 = C(f1, f1, f1b)
    y1011 = C(f1, f2, f2b)
    y1110 = C(f1, f1b, f2)
    y0021 = C(f2, f2, f2b)
    if derivs.second != 0:
        def B(a, b):
            return multilinear_G(2, [a, b], grid, p, derivs)

        h1100 = _lifted_resolvent(0.0, B(f1, f1b), p, grid)
        h2000 = _lifted_resolvent(2j * w1, B(f1, f1), p, grid)
        h1010 = _lifted_resolvent(1j * (w1 + w2), B(f1, f2), p, grid)
        h1001 = _lifted_resolvent(1j * (w1 - w2), B(f1, f2b), p, grid)
        h0020 = _lifted_resolvent(2j * w2, B(f2, f2), p, grid)
        h0011 = _lifted_resolvent(0.0, B(f2, f2b), p, grid)
        y2100 = y2100 + B(h2000, f1b) + 2 * B(h1100, f1)
        y1011 = y1011 + B(h1010, f2b) + B(h1001, f2) + B(h0011, f1)
        y1110 = y1110 + B(h1100, f2) + B(h1010, f1b) + B(h1001.conj(), f1)
        y0021 = y0021 + B(h0020, f2b) + 2 * B(h0011, f2)
    k2100, fit1a = pairing_kappa(crit1, y2100, contours[0], p)
    k1011, fit1b = pairing_kappa(crit1, y1011, contours[0], p)
    k1110, fit2a = pairing_kappa(crit2, y1110, contours[1], p)
    k0021, fit2b = pairing_kappa(crit2, y0021, contours[1], p)
    g2100, g1011, g1110, g0021 = k2100 / 2, k1011, k1110, k0021 / 2
    P = np.array([[g2100.real, g1011.real], [g1110.real, g0021.real]])
    theta, delta, kind, subtype = classify_double_hopf(P)
    return DoubleHopfNF(w1, w2, g2100, g1011, g1110, g0021, P, theta, delta, kind, subtype,
                        tuple(contours), (fit1a, fit1b, fit2a, fit2b))
