"""Traffic emissions, roadside ozone chemistry and pollutant dispersion."""

from ._core import (
    ConfigError,
    DomainError,
    FluxModel,
    NumericalError,
    RateConstants,
    StageError,
    __version__,
    cfl_bound_s,
    chemistry_rhs,
    compare_dispersion,
    emission_rate,
    flux,
    integrate_chemistry,
    make_flux_model,
    normalize_config,
    run_pipeline,
    step_2ctm,
    sweep_fixed_cycle,
    sweep_fixed_ratio,
    validate_emissions,
    velocity,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
