"""Neural field instance: parameters, kernel, activation and delay geometry.

The field lives on the interval [-1, 1].  Connectivity is a finite sum of
exponentials in the distance ``|x - r|`` and signals travel at unit speed on
top of a fixed synaptic delay ``tau0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError, UnsupportedDerivative


def _as_complex(value: Any, key: str) -> complex:
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and 1 <= len(value) <= 2:
        try:
            parts = [float(v) for v in value]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"'{key}' must hold numbers, got {value!r}", key=key) from exc
        return complex(parts[0], parts[1] if len(parts) == 2 else 0.0)
    raise ConfigError(f"'{key}' must be a number or [re, im], got {value!r}", key=key)


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the delayed neural field.

    Parameters
    ----------
    alpha : float
        Intrinsic decay rate, positive.
    tau0 : float
        Fixed synaptic delay, non-negative.
    r : float
        Steepness of the sigmoidal activation, positive.
    c_hat : tuple of complex
        Amplitudes of the connectivity exponentials, all nonzero.
    mu : tuple of complex
        Spatial decay rates of the exponentials, pairwise distinct.
    """

    alpha: float
    tau0: float
    r: float
    c_hat: tuple
    mu: tuple

    def __post_init__(self):
        object.__setattr__(self, "c_hat", tuple(complex(c) for c in self.c_hat))
        object.__setattr__(self, "mu", tuple(complex(m) for m in self.mu))
        if not self.alpha > 0:
            raise ConfigError("'alpha' must be positive", key="alpha")
        if not self.tau0 >= 0:
            raise ConfigError("'tau0' must be non-negative", key="tau0")
        if not self.r > 0:
            raise ConfigError("'r' must be positive", key="r")
        if len(self.c_hat) == 0 or len(self.c_hat) != len(self.mu):
            raise ConfigError("'terms' must be a non-empty list of {c_hat, mu}", key="terms")
        if any(c == 0 for c in self.c_hat):
            raise ConfigError("every 'c_hat' must be nonzero", key="terms")
        if len(set(self.mu)) != len(self.mu):
            raise ConfigError("'mu' values must be pairwise distinct", key="terms")

    @property
    def n_terms(self) -> int:
        return len(self.mu)

    @property
    def max_delay(self) -> float:
        """Largest transmission delay, attained between the two endpoints."""
        return self.tau0 + 2.0

    @property
    def is_real(self) -> bool:
        """True when all kernel data are real, so spectra are conjugate-symmetric."""
        return all(c.imag == 0 for c in self.c_hat) and all(m.imag == 0 for m in self.mu)

    @property
    def c_hat_array(self) -> np.ndarray:
        return np.array(self.c_hat, dtype=complex)

    @property
    def mu_array(self) -> np.ndarray:
        return np.array(self.mu, dtype=complex)

    def with_overrides(self, **changes) -> "ModelParams":
        """Copy with scalar fields replaced; ``mu2`` style keys address one term.

        Keys of the form ``mu<i>`` or ``c_hat<i>`` (1-based) replace a single
        connectivity term.
        """
        c_hat = list(self.c_hat)
        mu = list(self.mu)
        scalars = {}
        for key, value in changes.items():
            if value is None:
                continue
            for name, target in (("c_hat", c_hat), ("mu", mu)):
                if key.startswith(name) and key[len(name):].isdigit():
                    idx = int(key[len(name):]) - 1
                    if not 0 <= idx < len(target):
                        raise ConfigError(f"override '{key}' addresses a missing term", key=key)
                    target[idx] = _as_complex(value, key)
                    break
            else:
                if key not in ("alpha", "tau0", "r"):
                    raise ConfigError(f"unknown override '{key}'", key=key)
                scalars[key] = float(value)
        return replace(self, c_hat=tuple(c_hat), mu=tuple(mu), **scalars)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelParams":
        if not isinstance(data, Mapping):
            raise ConfigError("model configuration must be a JSON object", key="model")
        for key in ("alpha", "tau0", "r", "terms"):
            if key not in data:
                raise ConfigError(f"missing key '{key}'", key=key)
        scalars = {}
        for key in ("alpha", "tau0", "r"):
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"'{key}' must be a real number, got {value!r}", key=key)
            scalars[key] = float(value)
        terms = data["terms"]
        if not isinstance(terms, list) or not terms:
            raise ConfigError("'terms' must be a non-empty list", key="terms")
        c_hat, mu = [], []
        for i, term in enumerate(terms):
            if not isinstance(term, Mapping) or "c_hat" not in term or "mu" not in term:
                raise ConfigError(f"'terms[{i}]' needs keys 'c_hat' and 'mu'", key=f"terms[{i}]")
            c_hat.append(_as_complex(term["c_hat"], f"terms[{i}].c_hat"))
            mu.append(_as_complex(term["mu"], f"terms[{i}].mu"))
        return cls(c_hat=tuple(c_hat), mu=tuple(mu), **scalars)

    @classmethod
    def from_json(cls, path: str | Path) -> "ModelParams":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}", key="json") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}", key="config") from exc
        return cls.from_dict(data.get("model", data) if isinstance(data, dict) else data)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "tau0": self.tau0,
            "r": self.r,
            "terms": [
                {"c_hat": [c.real, c.imag], "mu": [m.real, m.imag]}
                for c, m in zip(self.c_hat, self.mu)
            ],
        }


@dataclass(frozen=True)
class SpatialGrid:
    """Quadrature grid on [-1, 1] with composite trapezoid weights."""

    nodes: np.ndarray
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if nodes[0] != -1.0 or nodes[-1] != 1.0:
            raise ValueError("grid must include both endpoints -1 and 1")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, n: int = 401) -> "SpatialGrid":
        nodes = np.linspace(-1.0, 1.0, n)
        step = nodes[1] - nodes[0]
        weights = np.full(n, step)
        weights[0] = weights[-1] = step / 2
        return cls(nodes, weights)

    @classmethod
    def from_nodes(cls, nodes: Sequence[float]) -> "SpatialGrid":
        nodes = np.asarray(nodes, dtype=float)
        gaps = np.diff(nodes)
        weights = np.zeros_like(nodes)
        weights[:-1] += gaps / 2
        weights[1:] += gaps / 2
        return cls(nodes, weights)

    @property
    def size(self) -> int:
        return self.nodes.size

    def refined(self) -> "SpatialGrid":
        """Grid with every interval bisected (old nodes stay at even indices)."""
        mids = (self.nodes[:-1] + self.nodes[1:]) / 2
        merged = np.empty(2 * self.size - 1)
        merged[0::2] = self.nodes
        merged[1::2] = mids
        return SpatialGrid.from_nodes(merged)

    def distances(self) -> np.ndarray:
        return np.abs(self.nodes[:, None] - self.nodes[None, :])


DEFAULT_GRID_NODES = 401


def activation(v, r: float):
    """Sigmoid shifted to vanish at the origin: ``1/(1+exp(-r v)) - 1/2``.

    Written as ``tanh(r v / 2) / 2`` which is the same function and avoids
    overflow for large ``|r v|``.
    """
    return 0.5 * np.tanh(0.5 * r * np.asarray(v))


def activation_deriv(k: int, r: float) -> float:
    """Derivative of order ``k`` of the activation at zero (``k`` in 1..3)."""
    if k == 1:
        return r / 4.0
    if k == 2:
        return 0.0
    if k == 3:
        return -(r**3) / 8.0
    raise UnsupportedDerivative(f"unsupported derivative order {k}", order=k)


def connectivity(x, rr, p: ModelParams):
    """Kernel ``sum_i c_hat_i exp(-mu_i |x - rr|)``, broadcasting over inputs."""
    dist = np.abs(np.asarray(x, dtype=float) - np.asarray(rr, dtype=float))
    return kernel_of_distance(dist, p.c_hat_array, p.mu_array)


def kernel_of_distance(dist, amplitudes, rates):
    dist = np.asarray(dist, dtype=float)
    out = np.zeros(dist.shape, dtype=complex)
    for c, m in zip(amplitudes, rates):
        out = out + c * np.exp(-m * dist)
    return out


def effective_coefficients(p: ModelParams) -> np.ndarray:
    """Linearized kernel amplitudes ``S'(0) * c_hat``."""
    return activation_deriv(1, p.r) * p.c_hat_array


def delay(x, rr, p: ModelParams):
    """Transmission delay ``tau0 + |x - rr|``."""
    return p.tau0 + np.abs(np.asarray(x, dtype=float) - np.asarray(rr, dtype=float))
