//! Positive radial solutions of quasilinear p-Laplacian systems
//!
//! ```text
//! Δ_p u = f1(|x|) · g1(v) · |∇u|^α
//! Δ_p v = f2(|x|) · g2(v) · g3(|∇u|)
//! ```
//!
//! - [`model`]: system definition and validation of its structural assumptions
//! - [`profile`]: the explicit power-law profile `(Cλ r^λ, Cμ r^μ)`
//! - [`integrator`]: the singular radial initial-value problem from the origin
//! - [`verify`]: quotient functions against the profile and the checks on them

pub mod integrator;
pub mod model;
pub mod profile;
pub mod verify;

use thiserror::Error;

pub use integrator::{
    flux_consistency, integrate_radial, startup_state, GridSpec, IntegrationError,
    IntegrationOptions, State, Stepping, Trajectory,
};
pub use model::{
    build_system, eval_nonlinearity, eval_quotient_q, pure_power_system, validate_system,
    CoefficientFunction, ModelError, Nonlinearity, PowerTerm, SystemParams, ValidatedSystem,
};
pub use profile::{
    p_laplace_power, profile_eval, profile_residual, solve_amplitudes, solve_exponents,
    solve_log_amplitudes, PowerProfile, ProfileError,
};
pub use verify::{
    build_report, check_convexity_bounds, check_limit_identities, check_monotone_quotients,
    check_ordering, check_quotient_ordering, estimate_limits, quotient_series, QuotientSeries,
    Tolerances, VerificationReport, VerifyError,
};

/// Any failure raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// Everything produced by one verification run.
#[derive(Debug, Clone)]
pub struct VerificationRun {
    pub profile: PowerProfile,
    pub trajectory: Trajectory,
    pub quotients: QuotientSeries,
    pub report: VerificationReport,
}

/// Solve the profile, integrate from `(a, b)` and check the trajectory.
pub fn verify_system(
    sys: &ValidatedSystem,
    a: f64,
    b: f64,
    opts: &IntegrationOptions,
    tolerances: &Tolerances,
) -> Result<VerificationRun, Error> {
    let profile = PowerProfile::solve(sys)?;
    let trajectory = integrate_radial(sys, a, b, opts)?;
    let tolerances = Tolerances {
        integration_rtol: opts.rtol,
        integration_atol: opts.atol,
        ..tolerances.clone()
    };
    let (quotients, report) = build_report(&trajectory, sys, &profile, &tolerances);
    Ok(VerificationRun {
        profile,
        trajectory,
        quotients,
        report,
    })
}
