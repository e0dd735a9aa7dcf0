"""Imitation learning of linear state-feedback policies with LMI stability
and H-infinity constraints."""

from ._robustclone import (
    CertificateError,
    CertificateReport,
    Dataset,
    FitConfig,
    FitReport,
    HinfSynthesis,
    InfeasibleError,
    LinearSystem,
    LmiMap,
    PerformanceChannel,
    PolicyParams,
    SolverConfig,
    SolverFailure,
    ValidationError,
    bc_objective,
    certify_gain,
    dare,
    expert_aggressive,
    expert_lqr,
    find_feasible,
    fit_admm,
    fit_pgd,
    fit_unconstrained,
    gen_demos,
    gen_system,
    hinf_norm_lmi,
    hinf_norm_sweep,
    project,
    spectral_radius,
    synth_hinf,
)

__version__ = "0.1.0"


def fit(data, system, method="pgd", channel=None, gamma=None, config=None):
    """Fit a gain by "pgd" or "admm" under the stability LMI, or the H-infinity
    LMI at level `gamma` when a channel is given."""
    if (channel is None) != (gamma is None):
        raise ValueError("channel and gamma go together")
    lmi = LmiMap.stability(system) if channel is None else LmiMap.hinf(system, channel, gamma)
    solvers = {"pgd": fit_pgd, "admm": fit_admm}
    if method not in solvers:
        raise ValueError(f"unknown method {method!r}")
    return solvers[method](data, lmi, config if config is not None else FitConfig())
