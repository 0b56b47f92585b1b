//! The `profile`, `integrate` and `verify` subcommands.

use std::path::Path;

use plap_core::{
    integrate_radial, profile::geometric_samples, profile_residual, verify_system,
    IntegrationOptions, PowerProfile, QuotientSeries, Tolerances, Trajectory, ValidatedSystem,
};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{csv, emit, json, num};

#[derive(Debug, Serialize)]
struct ProfileOutput {
    lambda: f64,
    mu: f64,
    #[serde(rename = "C_lambda")]
    c_lambda: f64,
    #[serde(rename = "C_mu")]
    c_mu: f64,
    #[serde(rename = "B_lambda")]
    b_lambda: f64,
    #[serde(rename = "B_mu")]
    b_mu: f64,
    residual: f64,
}

pub fn profile(sys: &ValidatedSystem, out: Option<&Path>) -> Result<(), CliError> {
    let prof = PowerProfile::solve(sys)?;
    let residual = profile_residual(&prof, sys, &geometric_samples(1e-2, 1e4, 10));
    let doc = ProfileOutput {
        lambda: prof.lambda,
        mu: prof.mu,
        c_lambda: prof.c_lambda,
        c_mu: prof.c_mu,
        b_lambda: prof.b_lambda,
        b_mu: prof.b_mu,
        residual,
    };
    emit(out, &json(&doc))
}

pub fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    let rows = traj.states.iter().map(|s| {
        [s.r, s.u, s.v, s.du, s.dv, s.flux_p, s.flux_s]
            .into_iter()
            .map(num)
            .collect()
    });
    csv(&["r", "u", "v", "du", "dv", "P", "S"], rows)
}

pub fn quotients_csv(qs: &QuotientSeries) -> Vec<u8> {
    let rows = (0..qs.grid.len()).map(|i| {
        [qs.grid[i], qs.u[i], qs.v[i], qs.w[i], qs.y[i]]
            .into_iter()
            .map(num)
            .collect()
    });
    csv(&["r", "U", "V", "W", "Y"], rows)
}

pub fn integrate(
    sys: &ValidatedSystem,
    (a, b): (f64, f64),
    opts: &IntegrationOptions,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let traj = integrate_radial(sys, a, b, opts)?;
    emit(out, &trajectory_csv(&traj))
}

pub fn verify(
    sys: &ValidatedSystem,
    (a, b): (f64, f64),
    opts: &IntegrationOptions,
    out: Option<&Path>,
    quotients: Option<&Path>,
) -> Result<(), CliError> {
    let run = verify_system(sys, a, b, opts, &Tolerances::default())?;
    emit(out, &json(&run.report))?;
    if let Some(path) = quotients {
        emit(Some(path), &quotients_csv(&run.quotients))?;
    }
    if run.report.passed() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(
            failed_checks(&run.report).join(", "),
        ))
    }
}

fn failed_checks(report: &plap_core::VerificationReport) -> Vec<&'static str> {
    let mut failed = Vec::new();
    if !report.monotonicity.pass {
        failed.push("monotonicity");
    }
    if !report.ordering.pass {
        failed.push("ordering");
    }
    if !report.convexity_bounds.pass {
        failed.push("convexity_bounds");
    }
    if report
        .limits
        .as_ref()
        .is_some_and(|l| l.asserted && !l.pass)
    {
        failed.push("limits");
    }
    if report
        .limit_identities
        .as_ref()
        .is_some_and(|l| l.asserted && !l.pass)
    {
        failed.push("limit_identities");
    }
    failed
}
