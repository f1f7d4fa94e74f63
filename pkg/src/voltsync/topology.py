"""Susceptance matrices for the all-to-all and common-bus networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BusEliminationSingular, InvalidTopology

# Published node powers of the 20-node heterogeneous bus network.
HETEROGENEOUS_POWERS = (
    -0.4, 0.53, -0.51, 0.56, 0.52, 0.48, -0.55, -0.45, 0.491, 0.509,
    -0.482, -0.518, -0.46, -0.64, 0.42, 0.58, -0.5, 0.5, 0.35, -0.45,
)


@dataclass(frozen=True)
class TopologySpec:
    kind: str
    N: int
    B0: float = -0.8
    B1: float = 1.0

    def __post_init__(self):
        if self.kind not in ("all_to_all", "star_bus"):
            raise InvalidTopology(f"unknown topology kind {self.kind!r}")
        if int(self.N) != self.N or self.N < 2:
            raise InvalidTopology(f"N must be an integer >= 2, got {self.N}")
        if self.B1 == 0:
            raise InvalidTopology("link susceptance B1 must be nonzero")


def all_to_all_susceptance(spec: TopologySpec) -> np.ndarray:
    if spec.kind != "all_to_all":
        raise InvalidTopology(f"expected kind 'all_to_all', got {spec.kind!r}")
    B = np.full((spec.N, spec.N), float(spec.B1))
    np.fill_diagonal(B, float(spec.B0))
    return B


def kron_eliminate(B: np.ndarray, index: int) -> np.ndarray:
    """Eliminate one passive node from a symmetric susceptance matrix."""
    pivot = B[index, index]
    if pivot == 0:
        raise BusEliminationSingular(f"self-susceptance of node {index} is zero")
    keep = [k for k in range(B.shape[0]) if k != index]
    col = B[keep, index]
    red = B[np.ix_(keep, keep)] - np.outer(col, col) / pivot
    # symmetrize bitwise: the outer product is symmetric only up to rounding
    iu = np.triu_indices(red.shape[0], 1)
    red[(iu[1], iu[0])] = red[iu]
    return red


def star_bus_susceptance(spec: TopologySpec):
    """Return ``(explicit, kron_reduced)`` for N leaves around one bus.

    The explicit matrix is (N+1)x(N+1) with the bus at index 0.
    """
    if spec.kind != "star_bus":
        raise InvalidTopology(f"expected kind 'star_bus', got {spec.kind!r}")
    n = spec.N + 1
    B = np.zeros((n, n))
    B[0, 1:] = spec.B1
    B[1:, 0] = spec.B1
    np.fill_diagonal(B, float(spec.B0))
    return B, kron_eliminate(B, 0)


def heterogeneous_case_study(controlled=True, bus_mode="explicit", *, P_dist=1.0,
                             B0=-0.8, B1=1.0, X=1.0, T_d=1.0, E_f=1.0, E0=1.14,
                             dt=0.01, t_final=200.0, sample_stride=10):
    """The 20-leaf common-bus network with power-proportional control.

    ``alpha_i = 0.2 |P_i|``, ``gamma_i = |P_i|`` (zero when uncontrolled).
    In ``explicit`` mode the bus is a zero-power dynamical node carrying the
    median leaf parameters; in ``kron`` mode it is eliminated from B.
    """
    from .dynamics import IntegratorSettings, Perturbation
    from .model import GridModel, NodeParams, SimState
    from .scenario import Scenario

    P = np.array(HETEROGENEOUS_POWERS)
    alpha = 0.2 * np.abs(P)
    gamma = np.abs(P) if controlled else np.zeros_like(P)
    leaves = [
        NodeParams(P_star=float(p), alpha=float(a), gamma=float(g), T_d=T_d, E_f=E_f, X=X)
        for p, a, g in zip(P, alpha, gamma)
    ]
    explicit, reduced = star_bus_susceptance(TopologySpec("star_bus", len(P), B0, B1))
    if bus_mode == "explicit":
        bus = NodeParams(P_star=0.0, alpha=float(np.median(alpha)), gamma=float(np.median(gamma)),
                         T_d=T_d, E_f=E_f, X=X)
        nodes, B, offset = [bus] + leaves, explicit, 1
    elif bus_mode == "kron":
        nodes, B, offset = leaves, reduced, 0
    else:
        raise InvalidTopology(f"bus_mode must be 'explicit' or 'kron', got {bus_mode!r}")
    n = len(nodes)
    model = GridModel(nodes=tuple(nodes), B=B,
                      metadata={"topology": "star_bus", "bus_mode": bus_mode, "leaf_offset": offset})
    state = SimState(np.zeros(n), np.zeros(n), np.full(n, E0))
    return Scenario(
        name="fig6_controlled" if controlled else "fig6_uncontrolled",
        model=model,
        initial_state=state,
        perturbations=(Perturbation(node=offset, t_start=40.0, t_end=42.0, P_dist=P_dist),),
        integrator=IntegratorSettings(dt=dt, t_final=t_final, sample_stride=sample_stride),
        analyses=("simulate", "bulk"),
        metadata={"bus_mode": bus_mode, "controlled": controlled},
    )
