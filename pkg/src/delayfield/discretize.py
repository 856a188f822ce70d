"""Trapezoid discretization of the field as a classical DDE and its integrator.

Node ``j`` sits at ``x_j = -1 + j delta`` with ``delta = 2/m`` and obeys

    dV_j/dt = -alpha V_j + (2/m) sum_i w_i J(delta |i-j|) S(V_i(t - tau0 - delta |i-j|))

with end weights ``w_0 = w_m = 1/2``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import Blowup, NoConvergence, NoCycle, StepMismatch, UnsupportedMesh
from .model import ModelParams, activation, activation_deriv, kernel_of_distance

BLOWUP_NORM = 1e6


@dataclass(frozen=True)
class DiscreteModel:
    m: int
    params: ModelParams
    nodes: np.ndarray
    weights: np.ndarray
    coupling: np.ndarray
    delays: np.ndarray

    @property
    def delta(self) -> float:
        return 2.0 / self.m

    @property
    def size(self) -> int:
        return self.m + 1


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), m+1)
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path: str | Path, sidecar: bool = True) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t"] + [f"V{j}" for j in range(self.states.shape[1])])
            for t, row in zip(self.times, self.states):
                out.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
        if sidecar:
            path.with_suffix(".json").write_text(json.dumps(self.metadata, indent=2, sort_keys=True))


@dataclass(frozen=True)
class AttractorReport:
    period: float
    amplitude_profile: np.ndarray
    converged: bool
    node: int
    previous_period: float


def build(m: int, p: ModelParams) -> DiscreteModel:
    """Mesh, trapezoid weights, coupling and delay matrices for ``m`` intervals."""
    if m < 2 or m % 2:
        raise UnsupportedMesh(f"mesh size must be even and >= 2, got {m}", m=m)
    idx = np.arange(m + 1)
    delta = 2.0 / m
    nodes = -1.0 + delta * idx
    weights = np.ones(m + 1)
    weights[0] = weights[-1] = 0.5
    dist = delta * np.abs(idx[:, None] - idx[None, :])
    kernel = kernel_of_distance(dist, p.c_hat_array, p.mu_array)
    coupling = (2.0 / m) * kernel * weights[None, :]
    if np.all(coupling.imag == 0):
        coupling = coupling.real
    return DiscreteModel(m, p, nodes, weights, coupling, p.tau0 + dist)


def _integer_ratio(a: float, b: float, what: str) -> int:
    ratio = a / b
    k = int(round(ratio))
    if abs(ratio - k) > 1e-9 * max(1.0, abs(ratio)):
        raise StepMismatch(f"{what} is not an integer multiple of the time step", ratio=ratio)
    return k


def simulate(dm: DiscreteModel, history: Callable, t_end: float, dt: float | None = None,
             dt_div: int = 4, keep_every: int = 1, tag: str = "") -> Trajectory:
    """Fixed-step RK4 by the method of steps.

    Parameters
    ----------
    history : callable
        ``history(t, x)`` on ``[-h, 0]``; vectorized over ``t`` and node
        positions ``x``.
    dt : float, optional
        Time step; defaults to ``delta / dt_div``.  Both ``delta`` and
        ``tau0`` must be integer multiples of it so delayed values fall on
        stored steps.  The half-step stages use the cubic Hermite midpoint of
        the two neighbouring stored steps.
    keep_every : int
        Store every ``keep_every``-th step in the returned trajectory.
    """
    if np.iscomplexobj(dm.coupling):
        raise StepMismatch("simulation needs a real kernel")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    p = dm.params
    dt = dm.delta / dt_div if dt is None else float(dt)
    per_cell = _integer_ratio(dm.delta, dt, "mesh spacing")
    base = _integer_ratio(p.tau0, dt, "tau0") if p.tau0 > 0 else 0
    n = dm.size
    idx = np.arange(n)
    lag = base + per_cell * np.abs(idx[:, None] - idx[None, :])
    past = int(lag.max())
    steps = int(math.ceil(t_end / dt - 1e-9))
    # buffer row `past + s` holds the state at time s * dt
    V = np.empty((past + steps + 1, n))
    F = np.empty_like(V)
    hist_t = dt * np.arange(-past, 1)
    T, X = np.meshgrid(hist_t, dm.nodes, indexing="ij")
    V[: past + 1] = np.asarray(history(T, X), dtype=float)
    if past > 0:
        F[:past + 1] = np.gradient(V[: past + 1], dt, axis=0)
    else:
        F[0] = 0.0
    # the state may have a kink at t = 0; reads ending there need the history slope
    slope_at_zero = F[past].copy()
    cols = np.broadcast_to(idx[None, :], (n, n))
    current = lag == 0
    C = dm.coupling
    alpha, r = p.alpha, p.r

    def delayed(row: int, stage: float, state: np.ndarray) -> np.ndarray:
        left = row - lag
        if stage == 0.0:
            vals = V[left, cols]
        elif stage == 1.0:
            vals = V[np.minimum(left + 1, row), cols]
        else:
            right = np.minimum(left + 1, row)
            f_right = np.where(right == past, slope_at_zero[cols], F[right, cols])
            vals = 0.5 * (V[left, cols] + V[right, cols]) + dt / 8 * (F[left, cols] - f_right)
        if current.any():
            vals = np.where(current, state[None, :], vals)
        return vals

    def rhs(row: int, stage: float, state: np.ndarray) -> np.ndarray:
        return -alpha * state + np.sum(C * activation(delayed(row, stage, state), r), axis=1)

    for s in range(steps):
        row = past + s
        y = V[row]
        k1 = rhs(row, 0.0, y)
        F[row] = k1
        k2 = rhs(row, 0.5, y + 0.5 * dt * k1)
        k3 = rhs(row, 0.5, y + 0.5 * dt * k2)
        k4 = rhs(row, 1.0, y + dt * k3)
        nxt = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > BLOWUP_NORM:
            raise Blowup(f"state norm exceeded {BLOWUP_NORM:g} at t = {(s + 1) * dt:.6g}")
        V[row + 1] = nxt
    F[past + steps] = rhs(past + steps, 0.0, V[past + steps])
    keep = np.arange(past, past + steps + 1, keep_every)
    times = dt * (keep - past)
    meta = {
        "params": p.to_dict(),
        "m": dm.m,
        "dt": dt,
        "t_end": steps * dt,
        "keep_every": keep_every,
        "initial_condition": tag,
    }
    return Trajectory(times, V[keep].copy(), meta)


def discrete_char_matrix(dm: DiscreteModel, lam: complex) -> np.ndarray:
    """Linearization at zero: ``(lam+alpha) I - S'(0) coupling * e^{-lam delays}``."""
    gain = activation_deriv(1, dm.params.r)
    return (lam + dm.params.alpha) * np.eye(dm.size) - gain * dm.coupling * np.exp(-lam * dm.delays)


def _log_det_newton(dm: DiscreteModel, seed: complex, tol: float, maxit: int, max_step: float) -> complex:
    gain = activation_deriv(1, dm.params.r)
    lam = complex(seed)
    eye = np.eye(dm.size)
    for _ in range(maxit):
        E = gain * dm.coupling * np.exp(-lam * dm.delays)
        D = (lam + dm.params.alpha) * eye - E
        dD = eye + dm.delays * E
        # d/dlam log det D = trace(D^{-1} D')
        trace = np.trace(np.linalg.solve(D, dD))
        if not np.isfinite(trace) or trace == 0:
            break
        step = 1.0 / trace
        if abs(step) > max_step:
            step *= max_step / abs(step)
        lam -= step
        if abs(step) <= tol * max(1.0, abs(lam)):
            return lam
    raise NoConvergence(f"no convergence from seed {seed}", seed=complex(seed))


def discrete_spectrum_scan(dm: DiscreteModel, region, seeds, tol: float = 1e-12, maxit: int = 60,
                           max_step: float = 0.5, dedupe: float = 1e-6) -> list:
    """Roots of ``det Delta_m`` inside ``region = (re_min, re_max, im_min, im_max)``.

    ``seeds`` is either an ``(nx, ny)`` grid shape over the region or an
    explicit iterable of complex seeds.  Newton steps use the logarithmic
    derivative of the determinant, which is exact.
    """
    re_min, re_max, im_min, im_max = map(float, region)
    if isinstance(seeds, tuple) and len(seeds) == 2 and all(isinstance(v, int) for v in seeds):
        seeds = [complex(a, b) for a in np.linspace(re_min, re_max, seeds[0])
                 for b in np.linspace(im_min, im_max, seeds[1])]
    roots = []
    for seed in seeds:
        try:
            lam = _log_det_newton(dm, seed, tol, maxit, max_step)
        except (NoConvergence, np.linalg.LinAlgError):
            continue
        if dm.params.is_real and abs(lam.imag) < 1e-10:
            lam = complex(lam.real, 0.0)
        if not (re_min <= lam.real <= re_max and im_min <= lam.imag <= im_max):
            continue
        if all(abs(lam - other) > dedupe for other in roots):
            roots.append(lam)
    roots.sort(key=lambda z: (-z.real, z.imag))
    return roots


def _upward_crossings(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    level = 0.5 * (v.max() + v.min())
    u = v - level
    hits = np.flatnonzero((u[:-1] < 0) & (u[1:] >= 0))
    frac = -u[hits] / (u[hits + 1] - u[hits])
    return t[hits] + frac * (t[hits + 1] - t[hits])


def attractor_diagnostics(tr: Trajectory, window: float, drift_tol: float = 0.01) -> AttractorReport:
    """Period and amplitude profile over the trailing ``window`` of a run.

    The period is the mean spacing of upward mid-level crossings of the node
    with the largest oscillation.  The run counts as converged when the
    period over the preceding window differs by less than ``drift_tol``.
    """
    t = tr.times
    if t[-1] - t[0] < 3 * window:
        raise ValueError("trajectory must be longer than three windows")
    last = t >= t[-1] - window
    prev = (t >= t[-1] - 2 * window) & ~last
    amp = 0.5 * (tr.states[last].max(axis=0) - tr.states[last].min(axis=0))
    node = int(np.argmax(amp))
    scale = max(1.0, float(np.max(np.abs(tr.states[last]))))
    if amp[node] <= 1e-9 * scale:
        raise NoCycle("no oscillation in the trailing window")

    def period_of(mask):
        cross = _upward_crossings(t[mask], tr.states[mask, node])
        if cross.size < 3:
            raise NoCycle("fewer than three crossings in a window")
        return float(np.mean(np.diff(cross)))

    period = period_of(last)
    previous = period_of(prev)
    converged = abs(period - previous) / period < drift_tol
    return AttractorReport(period, amp, bool(converged), node, previous)


def constant_history(eps: float) -> Callable:
    return lambda t, x: np.full(np.broadcast(t, x).shape, float(eps))


def linear_history(eps: float) -> Callable:
    return lambda t, x: eps * np.broadcast_to(x, np.broadcast(t, x).shape)
