"""Bell-type stochastic processes for interior-boundary-condition Hamiltonians."""

from ._core import (
    ConfigError,
    EvolutionRecord,
    GaussianPacket,
    Hamiltonian,
    HorizonError,
    LatticeSpec,
    ModelKind,
    ModelParams,
    NodeProximityError,
    ProbeSpec,
    RobinParams,
    WaveFunction,
    bell_rates,
    build_probe,
    build_wavepacket,
    config_hash,
    continuum_limit_sweep,
    default_time_step,
    emission_velocity_model3,
    equivariance_report,
    evolve,
    inner_product,
    jump_rate_model3,
    jump_rate_model4,
    master_equation_residual,
    normalize_config,
    run,
    sample,
    velocity,
)

__all__ = [name for name in dir() if not name.startswith("_")]
