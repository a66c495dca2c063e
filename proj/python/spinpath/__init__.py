"""Hessian descent paths for mixed spherical spin glasses (C++ core)."""

from ._spinpath import (
    ConfigError,
    Disorder,
    Mixture,
    SpectralFailure,
    analyze_hessian,
    classify_full_rsb,
    crisanti_sommers_at_xp,
    e_infinity,
    energy_benchmark,
    ldp_rate,
    parisi_density,
    q_parisi,
    rs_condition,
    run_experiment,
    run_pure_sphere,
    run_radial_path,
    sample_disorder,
    semicircle_cdf,
    sphere_contraction_constant,
    tap_rhs,
    theory_report,
    verify_trace,
)

__all__ = [name for name in dir() if not name.startswith("_")]
