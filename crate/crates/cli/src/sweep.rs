//! Parameter sweeps: one verification run per grid point.

use plap_core::{verify_system, IntegrationOptions, PowerProfile, Tolerances};
use rayon::prelude::*;

use crate::config::{RunConfig, SweepAxis};
use crate::error::CliError;
use crate::output::{csv, num};

/// Cartesian product of the axes, first axis varying slowest.
pub fn grid(axes: &[SweepAxis]) -> Result<Vec<Vec<f64>>, CliError> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(CliError::config("sweep grid is empty"));
    }
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(points)
}

/// Summary of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub values: Vec<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub monotone_pass: Option<bool>,
    pub limit_u: Option<f64>,
    pub limit_v: Option<f64>,
    pub status: String,
}

fn run_point(
    base: &RunConfig,
    axes: &[SweepAxis],
    values: &[f64],
    opts: &IntegrationOptions,
) -> PointSummary {
    let mut summary = PointSummary {
        values: values.to_vec(),
        lambda: None,
        mu: None,
        monotone_pass: None,
        limit_u: None,
        limit_v: None,
        status: String::new(),
    };
    let cfg = axes
        .iter()
        .zip(values)
        .try_fold(base.clone(), |cfg, (axis, &v)| {
            cfg.with_param(&axis.param, v)
        });
    let sys = match cfg
        .as_ref()
        .map_err(|e| e.to_string())
        .and_then(|c| c.system().map_err(|e| e.to_string()))
    {
        Ok(sys) => sys,
        Err(msg) => {
            summary.status = msg;
            return summary;
        }
    };
    let cfg = cfg.expect("checked above");
    if let Ok(prof) = PowerProfile::solve(&sys) {
        summary.lambda = Some(prof.lambda);
        summary.mu = Some(prof.mu);
    }
    let opts = IntegrationOptions {
        rtol: cfg.tol,
        ..opts.clone()
    };
    match verify_system(&sys, cfg.a, cfg.b, &opts, &Tolerances::default()) {
        Ok(run) => {
            summary.monotone_pass = Some(run.report.monotonicity.pass);
            if let Some(l) = &run.report.limits {
                summary.limit_u = Some(l.estimates.u.value);
                summary.limit_v = Some(l.estimates.v.value);
            }
            summary.status = if run.report.passed() { "pass" } else { "fail" }.into();
        }
        Err(e) => summary.status = CliError::from(e).to_string(),
    }
    summary
}

/// Run every grid point, in parallel on at most `threads` workers, keeping grid order.
pub fn run(
    base: &RunConfig,
    opts: &IntegrationOptions,
    threads: Option<usize>,
) -> Result<Vec<PointSummary>, CliError> {
    let axes = base.sweep.as_deref().unwrap_or_default();
    let points = grid(axes)?;
    // reject unknown names up front rather than per point
    for axis in axes {
        base.with_param(&axis.param, axis.values[0])?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|values| run_point(base, axes, values, opts))
            .collect()
    }))
}

pub fn summary_csv(axes: &[SweepAxis], rows: &[PointSummary]) -> Vec<u8> {
    let mut header: Vec<&str> = axes.iter().map(|a| a.param.as_str()).collect();
    header.extend([
        "lambda",
        "mu",
        "monotone_pass",
        "limit_U",
        "limit_V",
        "status",
    ]);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let records = rows.iter().map(|row| {
        let mut rec: Vec<String> = row.values.iter().map(|&v| num(v)).collect();
        rec.push(opt(row.lambda));
        rec.push(opt(row.mu));
        rec.push(row.monotone_pass.map(|b| b.to_string()).unwrap_or_default());
        rec.push(opt(row.limit_u));
        rec.push(opt(row.limit_v));
        rec.push(row.status.clone());
        rec
    });
    csv(&header, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(param: &str, values: &[f64]) -> SweepAxis {
        SweepAxis {
            param: param.into(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn grid_order_and_size() {
        let g = grid(&[axis("k1", &[1.0, 2.0]), axis("k3", &[3.0, 4.0, 5.0])]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![1.0, 3.0]);
        assert_eq!(g[1], vec![1.0, 4.0]);
        assert_eq!(g[5], vec![2.0, 5.0]);
    }

    #[test]
    fn empty_grid_is_config_error() {
        assert!(matches!(grid(&[]), Err(CliError::Config(_))));
        assert!(matches!(grid(&[axis("k1", &[])]), Err(CliError::Config(_))));
    }
}
