"""Point spectrum: roots of the characteristic determinant and eigenfunctions.

An eigenfunction has the form ``q(x) = sum_i g_i e^{rho_i x} + g_{-i} e^{-rho_i x}``
and the coefficient vector ``Gamma = (g_1..g_N, g_{-1}..g_{-N})`` spans the
null space of the ``2N x 2N`` matrix ``S(lam)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import charpoly
from .charpoly import Admissibility, PolyData
from .errors import (
    DegenerateLeading,
    EssentialPoint,
    FieldError,
    NearSingularEntry,
    NoConvergence,
    NotAnEigenvalue,
    RegionAbort,
)
from .model import ModelParams, SpatialGrid, effective_coefficients, kernel_of_distance

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 60
FD_STEP = 1e-7
FORBIDDEN_RADIUS = 1e-6
ACCUMULATION_RADIUS = 1e-3
DEDUPE_RADIUS = 1e-6
# Trapezoid error bound for eigen-residuals, relative to max |q|.
RESIDUAL_BOUND = 1e-3


@dataclass(frozen=True)
class CharMatrix:
    lam: complex
    Sminus: np.ndarray
    Splus: np.ndarray

    @property
    def assembled(self) -> np.ndarray:
        return np.block([[self.Sminus, self.Splus], [self.Splus, self.Sminus]])


@dataclass(frozen=True)
class EigenData:
    """One point-spectrum element with its sampled eigenfunction."""

    lam: complex
    poly: PolyData
    gamma: np.ndarray
    grid: SpatialGrid
    qsamples: np.ndarray
    residual: float
    smin: float

    @property
    def rho(self) -> np.ndarray:
        return self.poly.rho

    def conjugate(self) -> "EigenData":
        """Data of the conjugate eigenvalue (real parameters only)."""
        poly = PolyData(
            self.lam.conjugate(), self.poly.k.conj(), self.poly.coeffs_s.conj(), self.poly.rho.conj()
        )
        return EigenData(
            self.lam.conjugate(), poly, self.gamma.conj(), self.grid,
            self.qsamples.conj(), self.residual, self.smin,
        )

    def with_gamma(self, gamma) -> "EigenData":
        """Same eigenvalue with a different (rescaled) coefficient vector."""
        gamma = np.asarray(gamma, dtype=complex)
        q = expansion(self.poly.rho, gamma, self.grid.nodes)
        return EigenData(self.lam, self.poly, gamma, self.grid, q, self.residual, self.smin)


@dataclass
class SpectrumRow:
    lam: complex
    status: str
    reason: str = ""
    smin: float = math.nan
    residual: float = math.nan
    eigen: EigenData | None = field(default=None, repr=False)


@dataclass
class ScanResult:
    rows: list

    @property
    def accepted(self) -> list:
        return [r for r in self.rows if r.status == "ACCEPTED"]

    @property
    def rejected(self) -> list:
        return [r for r in self.rows if r.status == "REJECTED"]

    @property
    def unresolved(self) -> list:
        return [r for r in self.rows if r.status == "UNRESOLVED"]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["re_lambda", "im_lambda", "status", "reason", "smin", "residual"])
            for row in self.rows:
                out.writerow([
                    f"{row.lam.real:.17g}", f"{row.lam.imag:.17g}", row.status, row.reason,
                    f"{row.smin:.17g}", f"{row.residual:.17g}",
                ])


def s_matrix(lam: complex, poly: PolyData, tol: float = 1e-12) -> CharMatrix:
    """Blocks ``[S-]_ji = e^{rho_i}/(k_j - rho_i)`` and ``[S+]_ji = e^{-rho_i}/(k_j + rho_i)``."""
    k = poly.k[:, None]
    rho = poly.rho[None, :]
    minus = k - rho
    plus = k + rho
    scale = max(1.0, float(np.max(np.abs(poly.k))))
    if min(np.min(np.abs(minus)), np.min(np.abs(plus))) < tol * scale:
        raise NearSingularEntry("denominator k_j -+ rho_i vanishes", lam=complex(lam))
    return CharMatrix(complex(lam), np.exp(rho) / minus, np.exp(-rho) / plus)


def _check_not_essential(lam: complex, p: ModelParams) -> None:
    if abs(lam + p.alpha) < FORBIDDEN_RADIUS:
        raise EssentialPoint("lam coincides with the essential point -alpha", lam=complex(lam))


def char_det(lam: complex, p: ModelParams) -> complex:
    """Determinant of ``S(lam)`` for the representative roots ``rho``."""
    lam = complex(lam)
    _check_not_essential(lam, p)
    poly = charpoly.char_poly(lam, p, check_repeated=False)
    return complex(np.linalg.det(s_matrix(lam, poly, tol=0.0).assembled))


def reduced_char_function_batch(lams, p: ModelParams) -> np.ndarray:
    """``det S(lam) / prod(rho_i)`` for an array of ``lam``.

    Swapping ``rho_i`` for ``-rho_i`` swaps two columns of ``S`` and flips the
    determinant, so this quotient does not depend on the root representatives
    and is analytic in ``lam``.  It has the same zeros as ``det S``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    coeffs = charpoly.closed_form_poly_batch(lams, p)
    with np.errstate(all="ignore"):
        rho = charpoly.representatives(charpoly.roots_s_batch(coeffs))
        k = lams[:, None] + p.mu_array[None, :]
        minus = np.exp(rho[:, None, :]) / (k[:, :, None] - rho[:, None, :])
        plus = np.exp(-rho[:, None, :]) / (k[:, :, None] + rho[:, None, :])
        S = np.concatenate([
            np.concatenate([minus, plus], axis=2),
            np.concatenate([plus, minus], axis=2),
        ], axis=1)
        return np.linalg.det(S) / np.prod(rho, axis=1)


def reduced_char_function(lam: complex, p: ModelParams) -> complex:
    """Scalar form of :func:`reduced_char_function_batch`."""
    return complex(reduced_char_function_batch([lam], p)[0])


def forbidden_points(p: ModelParams) -> np.ndarray:
    """The essential point and the points where two shifted rates share a square."""
    mu = p.mu_array
    pts = [-p.alpha]
    for i in range(len(mu)):
        for j in range(i + 1, len(mu)):
            pts.append(-(mu[i] + mu[j]) / 2)
    return np.array(pts, dtype=complex)


def newton_batch(seeds, p: ModelParams, tol: float = NEWTON_TOL, maxit: int = NEWTON_MAXIT,
                 max_step: float = 1.0):
    """Complex Newton iteration on :func:`reduced_char_function_batch`.

    Runs all seeds at once.  The derivative is a central difference with step
    ``1e-7 * max(1, |lam|)``; steps are capped at ``max_step``.

    Returns
    -------
    roots : ndarray of complex
    status : ndarray of str
        ``"OK"``, ``"NO_CONVERGENCE"`` or ``"REGION_ABORT"`` per seed.
    """
    lam = np.atleast_1d(np.asarray(seeds, dtype=complex)).copy()
    status = np.full(lam.shape, "RUNNING", dtype=object)
    forbidden = forbidden_points(p)
    for _ in range(maxit):
        live = status == "RUNNING"
        if not live.any():
            break
        z = lam[live]
        near = np.min(np.abs(z[:, None] - forbidden[None, :]), axis=1) < FORBIDDEN_RADIUS
        h = FD_STEP * np.maximum(1.0, np.abs(z))
        value = reduced_char_function_batch(z, p)
        slope = (reduced_char_function_batch(z + h, p) - reduced_char_function_batch(z - h, p)) / (2 * h)
        with np.errstate(all="ignore"):
            step = value / slope
        bad = ~np.isfinite(step)
        big = np.abs(step) > max_step
        step[big] *= max_step / np.abs(step[big])
        z_new = z - step
        done = np.abs(step) <= tol * np.maximum(1.0, np.abs(z_new))
        idx = np.flatnonzero(live)
        lam[idx] = np.where(bad | near, z, z_new)
        status[idx[near]] = "REGION_ABORT"
        status[idx[bad & ~near]] = "REGION_ABORT"
        status[idx[done & ~bad & ~near]] = "OK"
    status[status == "RUNNING"] = "NO_CONVERGENCE"
    return lam, status


def newton_solve(seed: complex, p: ModelParams, tol: float = NEWTON_TOL, maxit: int = NEWTON_MAXIT,
                 max_step: float = 1.0) -> complex:
    """Newton iteration from one seed; see :func:`newton_batch`."""
    lam, status = newton_batch([seed], p, tol, maxit, max_step)
    if status[0] == "REGION_ABORT":
        raise RegionAbort("iterate entered a forbidden region or evaluation failed", lam=complex(lam[0]))
    if status[0] != "OK":
        raise NoConvergence(f"no convergence from seed {seed}", seed=complex(seed))
    return complex(lam[0])


def null_vector(S: CharMatrix, rel_tol: float = 1e-6) -> tuple:
    """Right singular vector of the smallest singular value, max-norm 1.

    The entry of largest modulus is rotated to be real positive.

    Returns
    -------
    gamma : ndarray
    smin : float
        Smallest singular value relative to the largest.
    """
    A = S.assembled
    _, sv, vh = np.linalg.svd(A)
    smin = float(sv[-1] / sv[0])
    if smin > rel_tol:
        raise NotAnEigenvalue(f"smallest singular value ratio {smin:.3e} too large", lam=S.lam)
    gamma = vh[-1].conj()
    lead = gamma[np.argmax(np.abs(gamma))]
    gamma = gamma / lead
    return gamma, smin


def expansion(rho, gamma, x) -> np.ndarray:
    """Evaluate ``sum_i g_i e^{rho_i x} + g_{-i} e^{-rho_i x}`` at points ``x``."""
    rho = np.asarray(rho)
    gamma = np.asarray(gamma)
    n = rho.size
    x = np.asarray(x, dtype=float)
    grow = np.exp(np.multiply.outer(x, rho))
    return grow @ gamma[:n] + (1.0 / grow) @ gamma[n:]


def eigenfunction(e: EigenData, x):
    return expansion(e.poly.rho, e.gamma, x)


def delta_apply(lam: complex, q, grid: SpatialGrid, p: ModelParams) -> np.ndarray:
    """Trapezoid evaluation of ``(lam+alpha) q(x) - int J e^{-lam tau(x,r)} q(r) dr``."""
    q = np.asarray(q, dtype=complex)
    dist = grid.distances()
    kernel = kernel_of_distance(dist, effective_coefficients(p), p.mu_array)
    kernel *= np.exp(-lam * (p.tau0 + dist))
    return (lam + p.alpha) * q - kernel @ (grid.weights * q)


def eigen_data(lam: complex, p: ModelParams, grid: SpatialGrid | None = None,
               sv_tol: float = 1e-6) -> EigenData:
    """Null vector, sampled eigenfunction and residual at an eigenvalue."""
    grid = grid or SpatialGrid.uniform()
    lam = complex(lam)
    poly = charpoly.char_poly(lam, p, check_repeated=False)
    S = s_matrix(lam, poly)
    gamma, smin = null_vector(S, sv_tol)
    q = expansion(poly.rho, gamma, grid.nodes)
    res = float(np.max(np.abs(delta_apply(lam, q, grid, p))))
    return EigenData(lam, poly, gamma, grid, q, res, smin)


def extrapolated_residual(e: EigenData, p: ModelParams) -> float:
    """Richardson-extrapolated residual from the grid and its bisection.

    The trapezoid error is ``O(h^2)``, so ``(4 R_fine - R_coarse)/3`` removes
    the leading term and leaves what the discretization cannot explain.
    """
    fine = e.grid.refined()
    q_fine = expansion(e.poly.rho, e.gamma, fine.nodes)
    r_fine = delta_apply(e.lam, q_fine, fine, p)[0::2]
    r_coarse = delta_apply(e.lam, e.qsamples, e.grid, p)
    return float(np.max(np.abs((4 * r_fine - r_coarse) / 3)))


def classify(lam: complex, p: ModelParams, grid: SpatialGrid, tol: float = NEWTON_TOL,
             residual_bound: float = RESIDUAL_BOUND) -> SpectrumRow:
    """Decide whether a root of the determinant is a genuine eigenvalue.

    Near a spurious root the representatives split like the square root of
    the distance, so the distinctness test uses ``sqrt(tol)``.
    """
    if abs(lam + p.alpha) < ACCUMULATION_RADIUS:
        return SpectrumRow(lam, "UNRESOLVED", "accumulation near -alpha")
    try:
        poly = charpoly.char_poly(lam, p, check_repeated=False)
    except FieldError as exc:
        return SpectrumRow(lam, "REJECTED", exc.code)
    verdict = charpoly.admissibility(poly, max(charpoly.DEGENERACY_TOL, math.sqrt(tol)))
    if verdict is not Admissibility.ACCEPT:
        return SpectrumRow(lam, "REJECTED", verdict.reason)
    try:
        e = eigen_data(lam, p, grid)
    except FieldError as exc:
        return SpectrumRow(lam, "REJECTED", exc.code)
    scale = float(np.max(np.abs(e.qsamples)))
    residual = extrapolated_residual(e, p)
    if residual > residual_bound * scale:
        return SpectrumRow(lam, "REJECTED", "eigen-residual", e.smin, residual, e)
    return SpectrumRow(lam, "ACCEPTED", "", e.smin, residual, e)


def spectrum_scan(region, grid_shape, p: ModelParams, spatial: SpatialGrid | None = None,
                  tol: float = NEWTON_TOL, residual_bound: float = RESIDUAL_BOUND,
                  extra_seeds=()) -> ScanResult:
    """Newton from every seed of a rectangular grid, then dedupe and classify.

    Parameters
    ----------
    region : tuple
        ``(re_min, re_max, im_min, im_max)``.
    grid_shape : tuple
        Number of seeds ``(nx, ny)``.  For real parameters only the upper
        half-plane is seeded and conjugates are added afterwards.
    """
    spatial = spatial or SpatialGrid.uniform()
    re_min, re_max, im_min, im_max = map(float, region)
    nx, ny = grid_shape
    seed_im_min = max(im_min, 0.0) if p.is_real else im_min
    seeds = [complex(a, b) for a in np.linspace(re_min, re_max, nx)
             for b in np.linspace(seed_im_min, max(im_max, seed_im_min), ny)]
    seeds += [complex(s) for s in extra_seeds]
    margin = 1e-9 * max(1.0, abs(re_max) + abs(im_max))
    seeds = [z for z in seeds if abs(z + p.alpha) >= ACCUMULATION_RADIUS]
    found, status = newton_batch(seeds, p, tol)
    roots = []
    for lam in found[status == "OK"]:
        lam = complex(lam)
        if p.is_real and abs(lam.imag) < 1e-10:
            lam = complex(lam.real, 0.0)
        if p.is_real and lam.imag < 0:
            lam = lam.conjugate()
        inside = (re_min - margin <= lam.real <= re_max + margin
                  and seed_im_min - margin <= lam.imag <= im_max + margin)
        if inside and all(abs(lam - other) > DEDUPE_RADIUS for other in roots):
            roots.append(lam)
    rows = [classify(lam, p, spatial, tol, residual_bound) for lam in roots]
    if p.is_real:
        mirrored = []
        for row in rows:
            if row.lam.imag > 0 and im_min <= -row.lam.imag:
                mirrored.append(SpectrumRow(
                    row.lam.conjugate(), row.status, row.reason, row.smin, row.residual,
                    row.eigen.conjugate() if row.eigen is not None else None,
                ))
        rows += mirrored
    rows.sort(key=lambda r: (-r.lam.real, r.lam.imag))
    return ScanResult(rows)
