"""Grid model data structures and validation.

Angles and frequencies live in the co-rotating deviation frame: the
synchronous state sits at ``omega = 0`` and the nominal frequency ``f0`` is
only added back for display.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NegativeGain,
    NonPositiveTimeConstant,
    NonSymmetricSusceptance,
)


@dataclass(frozen=True)
class NodeParams:
    """Per-node machine and controller parameters (per-unit)."""

    P_star: float
    alpha: float
    gamma: float = 0.0
    T_d: float = 1.0
    E_f: float = 1.0
    X: float = 1.0
    tau_g: float = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class GridModel:
    nodes: tuple
    B: np.ndarray
    f0: float = 50.0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        B = np.array(self.B, dtype=float)
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    @property
    def N(self) -> int:
        return len(self.nodes)

    def _column(self, name):
        return np.array([getattr(n, name) for n in self.nodes], dtype=float)

    @property
    def P_star(self):
        return self._column("P_star")

    @property
    def alpha(self):
        return self._column("alpha")

    @property
    def gamma(self):
        return self._column("gamma")

    @property
    def T_d(self):
        return self._column("T_d")

    @property
    def E_f(self):
        return self._column("E_f")

    @property
    def X(self):
        return self._column("X")

    @property
    def tau_g(self):
        return self._column("tau_g")

    @property
    def beta(self):
        return self._column("beta")

    @property
    def is_reduced(self) -> bool:
        return all(n.tau_g == 0.0 and n.beta == 0.0 for n in self.nodes)

    def with_powers(self, P) -> "GridModel":
        P = np.asarray(P, dtype=float)
        if P.shape != (self.N,):
            raise DimensionMismatch(f"expected {self.N} powers, got shape {P.shape}")
        nodes = [replace(n, P_star=float(p)) for n, p in zip(self.nodes, P)]
        return replace(self, nodes=tuple(nodes))

    def __eq__(self, other):
        if not isinstance(other, GridModel):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.f0 == other.f0
            and self.B.shape == other.B.shape
            and bool(np.array_equal(self.B, other.B))
        )

    __hash__ = None


def uniform_model(N, B, *, P_star=0.0, **params) -> GridModel:
    """Build a model whose nodes share parameters.

    Any of ``P_star`` or the NodeParams fields may be a scalar or a
    length-N sequence.
    """
    cols = {"P_star": P_star, **params}
    arrays = {}
    for key, val in cols.items():
        arr = np.broadcast_to(np.asarray(val, dtype=float), (N,))
        arrays[key] = arr
    nodes = [NodeParams(**{k: float(v[i]) for k, v in arrays.items()}) for i in range(N)]
    return GridModel(nodes=tuple(nodes), B=np.asarray(B, dtype=float))


def validate_model(model: GridModel) -> GridModel:
    """Check every type invariant; returns the model unchanged."""
    N = model.N
    if N < 1:
        raise DimensionMismatch("model has no nodes")
    B = model.B
    if B.shape != (N, N):
        raise DimensionMismatch(f"susceptance matrix has shape {B.shape}, expected {(N, N)}")
    if not np.all(np.isfinite(B)):
        raise NonSymmetricSusceptance("susceptance matrix has non-finite entries")
    asym = np.argwhere(B != B.T)
    if asym.size:
        i, j = asym[0]
        raise NonSymmetricSusceptance(
            f"B[{i}][{j}]={float(B[i, j])!r} differs from B[{j}][{i}]={float(B[j, i])!r}"
        )
    for i, node in enumerate(model.nodes):
        if not node.alpha > 0:
            raise NegativeGain(f"node {i}: alpha must be > 0, got {node.alpha}")
        if node.gamma < 0:
            raise NegativeGain(f"node {i}: gamma must be >= 0, got {node.gamma}")
        if node.beta < 0:
            raise NegativeGain(f"node {i}: beta must be >= 0, got {node.beta}")
        if not node.T_d > 0:
            raise NonPositiveTimeConstant(f"node {i}: T_d must be > 0, got {node.T_d}")
        if node.tau_g < 0:
            raise NonPositiveTimeConstant(f"node {i}: tau_g must be >= 0, got {node.tau_g}")
        if not node.E_f > 0:
            raise NegativeGain(f"node {i}: E_f must be > 0, got {node.E_f}")
    return model


def reduce_full_model(model: GridModel) -> GridModel:
    """Instantaneous controller limit: absorb the derivative gain into damping."""
    nodes = tuple(
        replace(n, alpha=n.alpha + n.beta, beta=0.0, tau_g=0.0) for n in model.nodes
    )
    return replace(model, nodes=nodes)


@dataclass
class SimState:
    theta: np.ndarray
    omega: np.ndarray
    E: np.ndarray
    u: Optional[np.ndarray] = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        if self.u is not None:
            self.u = np.asarray(self.u, dtype=float)
        n = self.theta.shape
        if self.omega.shape != n or self.E.shape != n or (self.u is not None and self.u.shape != n):
            raise DimensionMismatch("state components must share one length")

    @property
    def N(self) -> int:
        return self.theta.shape[0]

    def to_vector(self) -> np.ndarray:
        parts = [self.theta, self.omega, self.E]
        if self.u is not None:
            parts.append(self.u)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, y: Sequence[float], N: int) -> "SimState":
        y = np.asarray(y, dtype=float)
        if y.shape == (3 * N,):
            return cls(y[:N], y[N:2 * N], y[2 * N:])
        if y.shape == (4 * N,):
            return cls(y[:N], y[N:2 * N], y[2 * N:3 * N], y[3 * N:])
        raise DimensionMismatch(f"state vector of length {y.shape} does not fit N={N}")
