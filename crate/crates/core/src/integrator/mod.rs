//! Radial initial-value problem from the origin.
//!
//! With `u(0) = a`, `v(0) = b` and `u'(0) = v'(0) = 0`, the unknowns are
//! `(u, v, P, S)` where
//!
//! ```text
//! P = r^δ (u')^{p−1−α},   P' = δ/(n−1) · r^δ f1(r) g1(v)
//! S = r^{n−1} (v')^{p−1}, S' = r^{n−1} f2(r) g2(v) g3(u')
//! ```
//!
//! Integration runs in `s = ln r` from a small startup radius `r0`, which
//! makes step sizes relative to `r` and keeps power-law growth well scaled.

mod rk;
mod startup;

use thiserror::Error;

use crate::model::ValidatedSystem;
use crate::profile::PowerProfile;

use rk::Vector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("initial data must be positive and finite, got a = {a}, b = {b}")]
    InvalidInitialData { a: f64, b: f64 },
    #[error("tolerance {0} outside [1e-13, 1e-3]")]
    InvalidTolerance(f64),
    #[error("invalid output grid: {0}")]
    InvalidGrid(String),
    #[error("step size underflow at r = {r:e} (step {step:e} in ln r); solution may blow up")]
    StepSizeUnderflow { r: f64, step: f64 },
    #[error("solution overflowed at r = {r:e}")]
    Overflow { r: f64 },
    #[error("step limit reached at r = {r:e}")]
    TooManySteps { r: f64 },
}

/// Solution values and fluxes at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub du: f64,
    pub dv: f64,
    /// `P = r^δ (u')^{p−1−α}`.
    pub flux_p: f64,
    /// `S = r^{n−1} (v')^{p−1}`.
    pub flux_s: f64,
}

impl State {
    /// Build a state, recovering `u'` and `v'` from the fluxes.
    pub fn from_fluxes(
        sys: &ValidatedSystem,
        r: f64,
        u: f64,
        v: f64,
        flux_p: f64,
        flux_s: f64,
    ) -> Self {
        let rhs = RadialRhs::new(sys);
        Self {
            r,
            u,
            v,
            du: rhs.du(r, flux_p),
            dv: rhs.dv(r, flux_s),
            flux_p,
            flux_s,
        }
    }
}

/// Free-function form of the startup expansion at `r0`.
pub fn startup_state(sys: &ValidatedSystem, a: f64, b: f64, r0: f64) -> State {
    startup::FrozenExpansion::new(sys, a, b).state(r0)
}

/// Where states are reported.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `r0 · 10^{i/points_per_decade}` up to `r_max` (which is always included).
    Geometric { points_per_decade: usize },
    /// Explicit strictly increasing radii, all `≥ r0`.
    Explicit(Vec<f64>),
}

/// Step-size strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    /// Local error control at the configured tolerances.
    Adaptive,
    /// Fixed number of equal steps in `ln r` between consecutive output radii.
    Fixed { substeps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub rtol: f64,
    /// Absolute tolerance on `u` and `v`. The fluxes are controlled relatively.
    pub atol: f64,
    /// Startup radius; defaults to `1e−6 · min(1, r_max)`.
    pub r0: Option<f64>,
    /// Overrides the system's outer radius.
    pub r_max: Option<f64>,
    pub grid: GridSpec,
    pub stepping: Stepping,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            r0: None,
            r_max: None,
            grid: GridSpec::Geometric {
                points_per_decade: 64,
            },
            stepping: Stepping::Adaptive,
            max_steps: 5_000_000,
        }
    }
}

impl IntegrationOptions {
    pub fn with_tol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }

    pub fn r_max(mut self, r_max: f64) -> Self {
        self.r_max = Some(r_max);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub a: f64,
    pub b: f64,
    pub r0: f64,
    pub rtol: f64,
    pub atol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// States on a strictly increasing radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn grid(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.r).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        &self.states[self.states.len() - 1]
    }

    /// State whose radius matches `r` to 1e−12 relative.
    pub fn state_at(&self, r: f64) -> Option<&State> {
        self.states
            .iter()
            .find(|s| (s.r - r).abs() <= 1e-12 * r.abs())
    }

    /// The explicit profile sampled as a trajectory on `grid`.
    pub fn from_profile(prof: &PowerProfile, sys: &ValidatedSystem, grid: &[f64]) -> Self {
        let q1 = sys.first_flux_exponent();
        let n1 = f64::from(sys.n() - 1);
        let states = grid
            .iter()
            .map(|&r| {
                let pt = prof.eval(r);
                State {
                    r,
                    u: pt.u,
                    v: pt.v,
                    du: pt.du,
                    dv: pt.dv,
                    flux_p: r.powf(sys.delta()) * pt.du.powf(q1),
                    flux_s: r.powf(n1) * pt.dv.powf(sys.p() - 1.0),
                }
            })
            .collect();
        Self {
            states,
            meta: TrajectoryMeta {
                a: 0.0,
                b: 0.0,
                r0: grid.first().copied().unwrap_or(0.0),
                rtol: 0.0,
                atol: 0.0,
                accepted_steps: 0,
                rejected_steps: 0,
            },
        }
    }
}

/// Right-hand side of the flux system and the derived quantities it needs.
pub(crate) struct RadialRhs<'a> {
    sys: &'a ValidatedSystem,
    delta: f64,
    n1: f64,
    inv_q1: f64,
    inv_pm1: f64,
    source_p: f64,
}

impl<'a> RadialRhs<'a> {
    pub(crate) fn new(sys: &'a ValidatedSystem) -> Self {
        let n1 = f64::from(sys.n() - 1);
        Self {
            sys,
            delta: sys.delta(),
            n1,
            inv_q1: 1.0 / sys.first_flux_exponent(),
            inv_pm1: 1.0 / (sys.p() - 1.0),
            source_p: sys.delta() / n1,
        }
    }

    pub(crate) fn du(&self, r: f64, flux_p: f64) -> f64 {
        (flux_p.max(0.0) / r.powf(self.delta)).powf(self.inv_q1)
    }

    pub(crate) fn dv(&self, r: f64, flux_s: f64) -> f64 {
        (flux_s.max(0.0) / r.powf(self.n1)).powf(self.inv_pm1)
    }

    /// `dP/dr`.
    pub(crate) fn flux_p_rate(&self, r: f64, v: f64) -> f64 {
        self.source_p * r.powf(self.delta) * self.sys.f1().eval(r) * self.sys.g1().eval(v)
    }

    /// `dS/dr`.
    pub(crate) fn flux_s_rate(&self, r: f64, v: f64, du: f64) -> f64 {
        r.powf(self.n1) * self.sys.f2().eval(r) * self.sys.g2().eval(v) * self.sys.g3().eval(du)
    }

    /// Derivatives with respect to `s = ln r` of `(u, v, P, S)`.
    fn log_derivs(&self, s: f64, y: &Vector) -> Vector {
        let r = s.exp();
        let du = self.du(r, y[2]);
        let dv = self.dv(r, y[3]);
        [
            r * du,
            r * dv,
            r * self.flux_p_rate(r, y[1]),
            r * self.flux_s_rate(r, y[1], du),
        ]
    }
}

fn output_grid(
    opts: &IntegrationOptions,
    r0: f64,
    r_max: f64,
) -> Result<Vec<f64>, IntegrationError> {
    match &opts.grid {
        GridSpec::Geometric { points_per_decade } => {
            if *points_per_decade == 0 {
                return Err(IntegrationError::InvalidGrid(
                    "points_per_decade must be positive".into(),
                ));
            }
            if !(r_max > r0) {
                return Err(IntegrationError::InvalidGrid(format!(
                    "r_max = {r_max} must exceed the startup radius {r0}"
                )));
            }
            let ppd = *points_per_decade as f64;
            let start = r0.log10();
            let mut grid = vec![r0];
            let mut i = 1usize;
            loop {
                let r = 10f64.powf(start + i as f64 / ppd);
                if r >= r_max * (1.0 - 1e-12) {
                    break;
                }
                grid.push(r);
                i += 1;
            }
            grid.push(r_max);
            Ok(grid)
        }
        GridSpec::Explicit(points) => {
            if points.is_empty() {
                return Err(IntegrationError::InvalidGrid("empty grid".into()));
            }
            if points.iter().any(|r| !r.is_finite()) || points[0] < r0 {
                return Err(IntegrationError::InvalidGrid(format!(
                    "radii must be finite and not below the startup radius {r0}"
                )));
            }
            if points.windows(2).any(|w| w[1] <= w[0]) {
                return Err(IntegrationError::InvalidGrid(
                    "radii must be strictly increasing".into(),
                ));
            }
            Ok(points.clone())
        }
    }
}

const MIN_LOG_STEP: f64 = 1e-14;
const OVERFLOW_BOUND: f64 = 1e300;

/// Integrate the flux system from the startup state to `r_max`.
pub fn integrate_radial(
    sys: &ValidatedSystem,
    a: f64,
    b: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory, IntegrationError> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(IntegrationError::InvalidInitialData { a, b });
    }
    if !(1e-13..=1e-3).contains(&opts.rtol) {
        return Err(IntegrationError::InvalidTolerance(opts.rtol));
    }
    let r_max = opts.r_max.unwrap_or(sys.r_max());
    let r0 = match (&opts.r0, &opts.grid) {
        (Some(r0), _) => *r0,
        (None, GridSpec::Explicit(points)) if !points.is_empty() => {
            points[0].min(1e-6 * r_max.min(1.0))
        }
        _ => 1e-6 * r_max.min(1.0),
    };
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(IntegrationError::InvalidGrid(format!(
            "startup radius {r0} must be positive"
        )));
    }
    let grid = output_grid(opts, r0, r_max)?;

    let rhs = RadialRhs::new(sys);
    let start = startup_state(sys, a, b, r0);
    let mut y: Vector = [start.u, start.v, start.flux_p, start.flux_s];
    let mut s = r0.ln();
    let mut f = |s: f64, y: &Vector| rhs.log_derivs(s, y);
    let mut k1 = f(s, &y);
    let atol = [opts.atol, opts.atol, 0.0, 0.0];
    let mut h = 1e-2;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut states = Vec::with_capacity(grid.len());

    for &r_out in &grid {
        let s_out = if r_out == r0 { s } else { r_out.ln() };
        match opts.stepping {
            Stepping::Fixed { substeps } => {
                let substeps = substeps.max(1);
                let span = s_out - s;
                if span > 0.0 {
                    let hs = span / substeps as f64;
                    for i in 0..substeps {
                        let t = s + i as f64 * hs;
                        let trial = rk::step(&mut f, t, &y, &k1, hs);
                        y = trial.y;
                        k1 = trial.k_last;
                        accepted += 1;
                        check_finite(&y, t.exp())?;
                    }
                    s = s_out;
                }
            }
            Stepping::Adaptive => {
                while s_out - s > 1e-15 * s_out.abs().max(1.0) {
                    if accepted + rejected >= opts.max_steps {
                        return Err(IntegrationError::TooManySteps { r: s.exp() });
                    }
                    let remaining = s_out - s;
                    let last = h >= remaining;
                    let hs = if last { remaining } else { h };
                    let trial = rk::step(&mut f, s, &y, &k1, hs);
                    let err = rk::error_norm(&trial.err, &y, &trial.y, opts.rtol, &atol);
                    let finite = err.is_finite() && trial.y.iter().all(|v| v.is_finite());
                    if finite && err <= 1.0 {
                        s = if last { s_out } else { s + hs };
                        y = trial.y;
                        k1 = trial.k_last;
                        accepted += 1;
                        check_finite(&y, s.exp())?;
                        let grow = if err == 0.0 {
                            5.0
                        } else {
                            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                        };
                        // a clamped final step says nothing about the controller's step
                        if !last || hs * grow > h {
                            h = hs * grow;
                        }
                    } else {
                        rejected += 1;
                        let shrink = if finite {
                            (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                        } else {
                            0.1
                        };
                        h = hs * shrink;
                        if h < MIN_LOG_STEP {
                            return Err(IntegrationError::StepSizeUnderflow {
                                r: s.exp(),
                                step: h,
                            });
                        }
                    }
                }
            }
        }
        states.push(State {
            r: r_out,
            u: y[0],
            v: y[1],
            du: rhs.du(r_out, y[2]),
            dv: rhs.dv(r_out, y[3]),
            flux_p: y[2],
            flux_s: y[3],
        });
    }

    Ok(Trajectory {
        states,
        meta: TrajectoryMeta {
            a,
            b,
            r0,
            rtol: opts.rtol,
            atol: opts.atol,
            accepted_steps: accepted,
            rejected_steps: rejected,
        },
    })
}

fn check_finite(y: &Vector, r: f64) -> Result<(), IntegrationError> {
    if y.iter().all(|v| v.is_finite() && v.abs() < OVERFLOW_BOUND) {
        Ok(())
    } else {
        Err(IntegrationError::Overflow { r })
    }
}

/// `d/dr (u')^{p−1−α}` and `d/dr (v')^{p−1}` from the flux equations.
pub(crate) fn gradient_power_rates(sys: &ValidatedSystem, st: &State) -> (f64, f64) {
    let rhs = RadialRhs::new(sys);
    let q1 = sys.first_flux_exponent();
    let r = st.r;
    let rate_u =
        rhs.source_p * sys.f1().eval(r) * sys.g1().eval(st.v) - rhs.delta / r * st.du.powf(q1);
    let rate_v = sys.f2().eval(r) * sys.g2().eval(st.v) * sys.g3().eval(st.du)
        - rhs.n1 / r * st.dv.powf(sys.p() - 1.0);
    (rate_u, rate_v)
}

/// Solve a dense linear system in place by Gaussian elimination with partial pivoting.
fn solve_dense<const N: usize>(mut m: [[f64; N]; N], mut rhs: [f64; N]) -> [f64; N] {
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty range");
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..N {
            let factor = m[row][col] / m[col][col];
            for k in col..N {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    x
}

/// Monomial coefficients of the degree-7 polynomial matching `vals` and
/// `ders` at the four `nodes`.
fn hermite_coefficients(nodes: [f64; 4], vals: [f64; 4], ders: [f64; 4]) -> [f64; 8] {
    let mut m = [[0.0; 8]; 8];
    let mut rhs = [0.0; 8];
    for j in 0..4 {
        let x = nodes[j];
        for k in 0..8 {
            m[j][k] = x.powi(k as i32);
            m[4 + j][k] = if k == 0 {
                0.0
            } else {
                k as f64 * x.powi(k as i32 - 1)
            };
        }
        rhs[j] = vals[j];
        rhs[4 + j] = ders[j];
    }
    solve_dense(m, rhs)
}

fn horner(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `∫_0^1 exp(q)` where `q` interpolates `ln g` (values and derivatives) on
/// the nodes, times `exp(anchor)`.
fn log_hermite_integral(nodes: [f64; 4], logs: [f64; 4], log_ders: [f64; 4], anchor: f64) -> f64 {
    let shifted = logs.map(|l| l - anchor);
    let coeffs = hermite_coefficients(nodes, shifted, log_ders);
    anchor.exp() * startup::gauss_legendre(&|x: f64| horner(&coeffs, x).exp(), 0.0, 1.0)
}

/// Largest relative defect between the stored fluxes and the cumulative
/// integral of their right-hand sides along the grid.
///
/// The integral is taken in `s = ln r`. On each interval the logarithm of
/// the integrand is Hermite-interpolated through four neighbouring grid
/// points (derivatives from the flux equations) and its exponential is
/// integrated by Gauss–Legendre, so steep power-law growth costs nothing.
pub fn flux_consistency(traj: &Trajectory, sys: &ValidatedSystem) -> f64 {
    let len = traj.len();
    if len < 2 {
        return 0.0;
    }
    let rhs = RadialRhs::new(sys);
    let q1 = sys.first_flux_exponent();
    let (f1, f2) = (sys.f1(), sys.f2());
    let (g1, g2, g3) = (sys.g1(), sys.g2(), sys.g3());
    let (delta, n1) = (rhs.delta, rhs.n1);

    // r·F and d/ds(r·F) = r·F + r²·F' for both flux integrands
    let sample = |st: &State| -> [f64; 4] {
        let r = st.r;
        let (rate_u, _) = gradient_power_rates(sys, st);
        let ddu = if st.du > 0.0 {
            rate_u / (q1 * st.du.powf(q1 - 1.0))
        } else {
            0.0
        };
        let fp = rhs.flux_p_rate(r, st.v);
        let dfp = rhs.source_p
            * (delta * r.powf(delta - 1.0) * f1.eval(r) * g1.eval(st.v)
                + r.powf(delta) * f1.derivative(r) * g1.eval(st.v)
                + r.powf(delta) * f1.eval(r) * g1.derivative(st.v) * st.dv);
        let (f2r, g2v, g3u) = (f2.eval(r), g2.eval(st.v), g3.eval(st.du));
        let fs = rhs.flux_s_rate(r, st.v, st.du);
        let dfs = n1 * r.powf(n1 - 1.0) * f2r * g2v * g3u
            + r.powf(n1)
                * (f2.derivative(r) * g2v * g3u
                    + f2r * g2.derivative(st.v) * st.dv * g3u
                    + f2r * g2v * g3.derivative(st.du) * ddu);
        [r * fp, r * fp + r * r * dfp, r * fs, r * fs + r * r * dfs]
    };
    let samples: Vec<[f64; 4]> = traj.states.iter().map(sample).collect();
    let logs: Vec<f64> = traj.states.iter().map(|st| st.r.ln()).collect();

    let first = traj.first();
    let (mut acc_p, mut acc_s) = (first.flux_p, first.flux_s);
    let mut worst = 0.0f64;
    for i in 0..len - 1 {
        let h = logs[i + 1] - logs[i];
        let (inc_p, inc_s) = if len < 4 {
            let (a, b) = (&samples[i], &samples[i + 1]);
            (
                0.5 * h * (a[0] + b[0]) + h * h / 12.0 * (a[1] - b[1]),
                0.5 * h * (a[2] + b[2]) + h * h / 12.0 * (a[3] - b[3]),
            )
        } else {
            let lo = i.saturating_sub(1).min(len - 4);
            let nodes = [0, 1, 2, 3].map(|j| (logs[lo + j] - logs[i]) / h);
            let piece = |c: usize| -> f64 {
                let vals = [0, 1, 2, 3].map(|j| samples[lo + j][c]);
                if vals.iter().all(|v| *v > 0.0 && v.is_finite()) {
                    let lg = vals.map(f64::ln);
                    let ld = [0, 1, 2, 3].map(|j| h * samples[lo + j][c + 1] / vals[j]);
                    h * log_hermite_integral(nodes, lg, ld, samples[i][c].ln())
                } else {
                    let (a, b) = (&samples[i], &samples[i + 1]);
                    0.5 * h * (a[c] + b[c]) + h * h / 12.0 * (a[c + 1] - b[c + 1])
                }
            };
            (piece(0), piece(2))
        };
        acc_p += inc_p;
        acc_s += inc_s;
        let st = &traj.states[i + 1];
        let dp = (st.flux_p - acc_p).abs() / st.flux_p.abs().max(f64::MIN_POSITIVE);
        let ds = (st.flux_s - acc_s).abs() / st.flux_s.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(dp).max(ds);
        if worst.is_nan() {
            return f64::INFINITY;
        }
    }
    worst
}
