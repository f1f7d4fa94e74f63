from __future__ import annotations

from dataclasses import dataclass, field

from .dynamics import IntegratorSettings
from .errors import ConfigError, InvalidPerturbation
from .model import GridModel, SimState

ANALYSES = ("simulate", "stability", "bulk", "return-time")


@dataclass(frozen=True)
class ReturnTimeSettings:
    T: float = 5.0
    xi: float = 1e-4


@dataclass(frozen=True)
class Scenario:
    """One runnable experiment: model, initial state, ramps, integrator."""

    name: str
    model: GridModel
    initial_state: SimState
    perturbations: tuple = ()
    integrator: IntegratorSettings = IntegratorSettings()
    analyses: tuple = ("simulate",)
    constant_voltage: bool = False
    return_time: ReturnTimeSettings = ReturnTimeSettings()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "perturbations", tuple(self.perturbations))
        object.__setattr__(self, "analyses", tuple(self.analyses))
        if not self.analyses:
            raise ConfigError(f"scenario {self.name!r}: analysis list is empty")
        for a in self.analyses:
            if a not in ANALYSES:
                raise ConfigError(f"scenario {self.name!r}: unknown analysis {a!r}")
        for k, p in enumerate(self.perturbations):
            if p.node >= self.model.N:
                raise InvalidPerturbation(
                    f"scenario {self.name!r}: perturbation {k} targets node {p.node}, "
                    f"model has {self.model.N} nodes"
                )
        if self.initial_state.N != self.model.N:
            raise ConfigError(
                f"scenario {self.name!r}: initial state has {self.initial_state.N} nodes, model {self.model.N}"
            )

    @property
    def t_perturb_end(self) -> float:
        return max((p.t_end for p in self.perturbations), default=0.0)
