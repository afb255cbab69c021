from .riemann import riemann_diagnostics, riemann_setup
from .turbulence import (FrozenFlowField, ParticleEnsemble, PopeSpectrum,
                         eulerian_setup, lagrangian_run, make_drag,
                         project_lagrangian, segregation_metric, synth_flow)

__all__ = [
    "riemann_setup", "riemann_diagnostics", "PopeSpectrum", "FrozenFlowField",
    "ParticleEnsemble", "synth_flow", "lagrangian_run", "project_lagrangian",
    "segregation_metric", "eulerian_setup", "make_drag",
]
