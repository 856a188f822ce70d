"""Explicit solution of ``Delta(z) q = h`` by variation of constants.

The solution is ``q(x) = h(x)/(z+alpha) + sum_i g_i(x) e^{rho_i x} + g_{-i}(x) e^{-rho_i x}``
where the coefficient functions are a constant vector ``Gamma0`` plus a
cumulative integral ``Gamma_hat(x)`` started at ``x = -1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import permutations, product
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import charpoly
from .charpoly import PolyData
from .errors import AtEigenvalue, EssentialPoint, TSingular
from .model import ModelParams, SpatialGrid, effective_coefficients, kernel_of_distance
from .spectrum import CharMatrix, delta_apply, s_matrix

COND_LIMIT = 1e12
HISTORY_TIME_NODES = 64


@dataclass(frozen=True)
class ResolventData:
    z: complex
    poly: PolyData
    T: np.ndarray
    Tinv: np.ndarray
    gamma0: np.ndarray
    gammahat: np.ndarray  # shape (grid.size, 2N), samples of Gamma_hat
    grid: SpatialGrid
    qsamples: np.ndarray
    t_cond: float
    s_cond: float

    def gammahat_at(self, x) -> np.ndarray:
        """Piecewise-linear interpolation of ``Gamma_hat`` between grid nodes."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cols = [
            np.interp(x, self.grid.nodes, col.real) + 1j * np.interp(x, self.grid.nodes, col.imag)
            for col in self.gammahat.T
        ]
        return np.stack(cols, axis=-1)


def h_from_history(z: complex, phi: Callable, grid: SpatialGrid, p: ModelParams,
                   time_nodes: int = HISTORY_TIME_NODES) -> np.ndarray:
    """Right-hand side generated by an initial history ``phi(t, x)`` on ``[-h, 0]``.

    ``h(x) = phi(0, x) + int J(x,r) int_{-tau(x,r)}^0 e^{-z(tau0 + s) - z|x-r|} phi(s, r) ds dr``
    with a trapezoid rule of ``time_nodes`` points in ``s`` for every pair.
    """
    x = grid.nodes
    dist = grid.distances()
    kernel = kernel_of_distance(dist, effective_coefficients(p), p.mu_array)
    frac = np.linspace(0.0, 1.0, time_nodes)
    tw = np.full(time_nodes, 1.0 / (time_nodes - 1))
    tw[0] = tw[-1] = tw[0] / 2
    out = np.asarray(phi(np.zeros_like(x), x), dtype=complex).copy()
    for j, xj in enumerate(x):
        tau = p.tau0 + dist[j]  # (n,)
        s = -tau[:, None] * (1.0 - frac[None, :])  # from -tau up to 0
        vals = phi(s, np.broadcast_to(x[:, None], s.shape))
        integrand = np.exp(-z * (p.tau0 + s) - z * dist[j][:, None]) * vals
        inner = tau * (integrand @ tw)
        out[j] += np.sum(grid.weights * kernel[j] * inner)
    return out


def t_matrix(z: complex, poly: PolyData) -> np.ndarray:
    """``[[T-, T+], [T+, T-]]`` with ``[T-+]_ji = 1/(k_j -+ rho_i)``."""
    k = poly.k[:, None]
    rho = poly.rho[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        tm = 1.0 / (k - rho)
        tp = 1.0 / (k + rho)
    T = np.block([[tm, tp], [tp, tm]])
    if not np.all(np.isfinite(T)):
        raise TSingular("a denominator k_j -+ rho_i vanishes", z=complex(z))
    return T


def _guarded_inverse(A: np.ndarray, error, what: str, z):
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise error(f"{what} is singular (condition {cond:.3e})", z=complex(z))
    return np.linalg.inv(A), cond


def align_roots(rho: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Reorder and re-sign ``rho`` so that ``rho[i]`` is nearest ``reference[i]``.

    Used on a small contour, where the roots move continuously away from
    their values at the center.
    """
    n = rho.size
    best, best_cost = rho, np.inf
    for perm in permutations(range(n)):
        for signs in product((1, -1), repeat=n):
            cand = np.array(signs) * rho[list(perm)]
            cost = float(np.max(np.abs(cand - reference)))
            if cost < best_cost:
                best, best_cost = cand, cost
    return best


def gamma_hat(z: complex, h, grid: SpatialGrid, poly: PolyData, Tinv: np.ndarray, alpha: float) -> np.ndarray:
    """Cumulative trapezoid samples of ``Gamma_hat`` on the grid (zero at ``x = -1``)."""
    n = poly.rho.size
    v = Tinv @ np.concatenate([-np.ones(n), np.ones(n)])
    x = grid.nodes
    weights = np.concatenate(
        [np.exp(-np.multiply.outer(x, poly.rho)), np.exp(np.multiply.outer(x, poly.rho))], axis=1
    )
    integrand = (np.asarray(h, dtype=complex) / (z + alpha))[:, None] * weights * v[None, :]
    return cumulative_trapezoid(integrand, x, axis=0, initial=0)


def gamma0(z: complex, S: CharMatrix, ghat_p1, ghat_m1) -> np.ndarray:
    """Constant coefficients making the boundary terms vanish."""
    A = S.assembled
    Sinv, _ = _guarded_inverse(A, AtEigenvalue, "S(z)", z)
    top = np.concatenate([S.Sminus, S.Splus], axis=1) @ np.asarray(ghat_p1)
    bottom = np.concatenate([S.Splus, S.Sminus], axis=1) @ np.asarray(ghat_m1)
    return -Sinv @ np.concatenate([top, bottom])


def resolve(z: complex, h, p: ModelParams, grid: SpatialGrid | None = None,
            rho_ref: np.ndarray | None = None) -> ResolventData:
    """Solve ``Delta(z) q = h`` for ``h`` sampled on ``grid``.

    Parameters
    ----------
    rho_ref : ndarray, optional
        Roots the representatives at ``z`` are aligned to (see :func:`align_roots`).
    """
    grid = grid or SpatialGrid.uniform()
    z = complex(z)
    h = np.asarray(h, dtype=complex)
    if abs(z + p.alpha) < 1e-12:
        raise EssentialPoint("z coincides with -alpha", z=z)
    poly = charpoly.char_poly(z, p)
    if rho_ref is not None:
        poly = replace(poly, rho=align_roots(poly.rho, np.asarray(rho_ref)))
    T = t_matrix(z, poly)
    Tinv, t_cond = _guarded_inverse(T, TSingular, "T(z)", z)
    S = s_matrix(z, poly)
    ghat = gamma_hat(z, h, grid, poly, Tinv, p.alpha)
    g0 = gamma0(z, S, ghat[-1], ghat[0])
    s_cond = float(np.linalg.cond(S.assembled))
    coeff = g0[None, :] + ghat
    n = poly.rho.size
    grow = np.exp(np.multiply.outer(grid.nodes, poly.rho))
    q = h / (z + p.alpha) + np.sum(coeff[:, :n] * grow, axis=1) + np.sum(coeff[:, n:] / grow, axis=1)
    return ResolventData(z, poly, T, Tinv, g0, ghat, grid, q, float(t_cond), s_cond)


def resolvent_residual(res: ResolventData, h, p: ModelParams) -> np.ndarray:
    """``Delta(z) q - h`` at the grid nodes (trapezoid quadrature)."""
    return delta_apply(res.z, res.qsamples, res.grid, p) - np.asarray(h, dtype=complex)
