//! Quotients `U = u/u0`, `V = v/v0`, `W = u'/u0'`, `Y = v'/v0'` of a
//! trajectory against the explicit profile, and the checks run on them:
//! monotone decrease, ordering above 1, the convexity sandwiches, and the
//! limits at large `r`.

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{gradient_power_rates, Trajectory};
use crate::model::ValidatedSystem;
use crate::profile::PowerProfile;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("trajectories share no common radii: [{a_lo}, {a_hi}] vs [{b_lo}, {b_hi}]")]
    GridMismatch {
        a_lo: f64,
        a_hi: f64,
        b_lo: f64,
        b_hi: f64,
    },
    #[error("grid spans {decades:.3} decades; limit estimation needs at least 2")]
    InsufficientRange { decades: f64 },
}

const NAMES: [&str; 4] = ["U", "V", "W", "Y"];

/// The four quotient series on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSeries {
    pub grid: Vec<f64>,
    /// `u / u0`
    pub u: Vec<f64>,
    /// `v / v0`
    pub v: Vec<f64>,
    /// `u' / u0'`
    pub w: Vec<f64>,
    /// `v' / v0'`
    pub y: Vec<f64>,
}

impl QuotientSeries {
    fn series(&self) -> [&[f64]; 4] {
        [&self.u, &self.v, &self.w, &self.y]
    }
}

/// Pointwise `u/u0, v/v0, u'/u0', v'/v0'`, formed from logarithms so profiles
/// with very large exponents do not underflow.
pub fn quotient_series(traj: &Trajectory, prof: &PowerProfile) -> QuotientSeries {
    let n = traj.len();
    let mut qs = QuotientSeries {
        grid: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    let (ll, lm) = (prof.lambda.ln(), prof.mu.ln());
    let ratio = |x: f64, log_ref: f64| (x.ln() - log_ref).exp();
    for st in &traj.states {
        let lr = st.r.ln();
        qs.grid.push(st.r);
        qs.u.push(ratio(st.u, prof.log_c_lambda + prof.lambda * lr));
        qs.v.push(ratio(st.v, prof.log_c_mu + prof.mu * lr));
        qs.w.push(ratio(
            st.du,
            ll + prof.log_c_lambda + (prof.lambda - 1.0) * lr,
        ));
        qs.y.push(ratio(st.dv, lm + prof.log_c_mu + (prof.mu - 1.0) * lr));
    }
    qs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientMonotonicity {
    pub quotient: &'static str,
    pub pass: bool,
    /// Largest `(Q[i+1] − Q[i]) / |Q[i]|`; negative for a strictly decreasing series.
    pub worst_increase: f64,
    pub at_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub pass: bool,
    pub slack: f64,
    pub quotients: Vec<QuotientMonotonicity>,
}

/// Each quotient must satisfy `Q[i+1] − Q[i] ≤ tol · |Q[i]|`.
pub fn check_monotone_quotients(qs: &QuotientSeries, tol: f64) -> MonotonicityReport {
    let quotients: Vec<_> = NAMES
        .iter()
        .zip(qs.series())
        .map(|(&name, series)| {
            let mut worst = f64::NEG_INFINITY;
            let mut at_r = f64::NAN;
            for (i, w) in series.windows(2).enumerate() {
                let inc = (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE);
                if inc > worst || inc.is_nan() {
                    worst = if inc.is_nan() { f64::INFINITY } else { inc };
                    at_r = qs.grid[i + 1];
                }
            }
            if series.len() < 2 {
                worst = 0.0;
            }
            QuotientMonotonicity {
                quotient: name,
                pass: worst <= tol,
                worst_increase: worst,
                at_r,
            }
        })
        .collect();
    MonotonicityReport {
        pass: quotients.iter().all(|q| q.pass),
        slack: tol,
        quotients,
    }
}

/// Smallest relative margins `(A − B)/|B|` of two ordered trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub pass: bool,
    pub points: usize,
    pub min_margin_u: f64,
    pub min_margin_v: f64,
    pub min_margin_du: f64,
    pub min_margin_dv: f64,
}

/// Fritsch–Carlson monotone cubic interpolant through `(xs, ys)`.
pub struct MonotoneInterpolant<'a> {
    xs: &'a [f64],
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl<'a> MonotoneInterpolant<'a> {
    pub fn new(xs: &'a [f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let secants: Vec<f64> = (0..n.saturating_sub(1))
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        if n >= 2 {
            slopes[0] = secants[0];
            slopes[n - 1] = secants[n - 2];
            for i in 1..n - 1 {
                let (d0, d1) = (secants[i - 1], secants[i]);
                slopes[i] = if d0 * d1 <= 0.0 {
                    0.0
                } else {
                    // weighted harmonic mean keeps the interpolant monotone
                    let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                    let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                    (w1 + w2) / (w1 / d0 + w2 / d1)
                };
            }
            for i in 0..n - 1 {
                let d = secants[i];
                if d == 0.0 {
                    slopes[i] = 0.0;
                    slopes[i + 1] = 0.0;
                    continue;
                }
                let (a, b) = (slopes[i] / d, slopes[i + 1] / d);
                let s = a * a + b * b;
                if s > 9.0 {
                    let t = 3.0 / s.sqrt();
                    slopes[i] = t * a * d;
                    slopes[i + 1] = t * b * d;
                }
            }
        }
        Self {
            xs,
            ys: ys.to_vec(),
            slopes,
        }
    }

    /// Value at `x`, which must lie within the node range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 {
            return self.ys[0];
        }
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

/// Strict pointwise ordering `u_A > u_B`, `v_A > v_B`, `u'_A > u'_B`, `v'_A > v'_B`.
///
/// `b` is resampled onto the radii of `a` that fall inside its range.
pub fn check_ordering(a: &Trajectory, b: &Trajectory) -> Result<OrderingReport, VerifyError> {
    let (ga, gb) = (a.grid(), b.grid());
    let mismatch = || VerifyError::GridMismatch {
        a_lo: ga.first().copied().unwrap_or(f64::NAN),
        a_hi: ga.last().copied().unwrap_or(f64::NAN),
        b_lo: gb.first().copied().unwrap_or(f64::NAN),
        b_hi: gb.last().copied().unwrap_or(f64::NAN),
    };
    if ga.is_empty() || gb.is_empty() {
        return Err(mismatch());
    }
    let (lo, hi) = (gb[0], gb[gb.len() - 1]);
    let column =
        |f: fn(&crate::integrator::State) -> f64| -> Vec<f64> { b.states.iter().map(f).collect() };
    let interps = [
        MonotoneInterpolant::new(&gb, &column(|s| s.u)),
        MonotoneInterpolant::new(&gb, &column(|s| s.v)),
        MonotoneInterpolant::new(&gb, &column(|s| s.du)),
        MonotoneInterpolant::new(&gb, &column(|s| s.dv)),
    ];
    let mut margins = [f64::INFINITY; 4];
    let mut points = 0;
    for st in a.states.iter().filter(|s| s.r >= lo && s.r <= hi) {
        points += 1;
        for (k, value) in [st.u, st.v, st.du, st.dv].into_iter().enumerate() {
            let other = interps[k].eval(st.r);
            let m = (value - other) / other.abs().max(f64::MIN_POSITIVE);
            margins[k] = margins[k].min(if m.is_nan() { f64::NEG_INFINITY } else { m });
        }
    }
    if points == 0 {
        return Err(mismatch());
    }
    Ok(OrderingReport {
        pass: margins.iter().all(|&m| m > 0.0),
        points,
        min_margin_u: margins[0],
        min_margin_v: margins[1],
        min_margin_du: margins[2],
        min_margin_dv: margins[3],
    })
}

/// Ordering of a trajectory against the profile, read off the quotients:
/// `U, V, W, Y > 1`, `W < U` and `Y < V`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientOrderingReport {
    pub pass: bool,
    pub slack: f64,
    /// Smallest `Q − 1` for `U, V, W, Y`.
    pub min_excess: [f64; 4],
    /// Smallest `(U − W)/U`.
    pub min_gap_u_w: f64,
    /// Smallest `(V − Y)/V`.
    pub min_gap_v_y: f64,
    /// True when every inequality holds strictly, without slack.
    pub strict: bool,
}

/// Inequalities pass when every margin is at least `−slack`.
pub fn check_quotient_ordering(qs: &QuotientSeries, slack: f64) -> QuotientOrderingReport {
    let min_of = |it: &mut dyn Iterator<Item = f64>| {
        it.fold(f64::INFINITY, |m, x| {
            if x.is_nan() {
                f64::NEG_INFINITY
            } else {
                m.min(x)
            }
        })
    };
    let mut min_excess = [0.0; 4];
    for (slot, series) in min_excess.iter_mut().zip(qs.series()) {
        *slot = min_of(&mut series.iter().map(|q| q - 1.0));
    }
    let min_gap_u_w = min_of(&mut qs.u.iter().zip(&qs.w).map(|(u, w)| (u - w) / u));
    let min_gap_v_y = min_of(&mut qs.v.iter().zip(&qs.y).map(|(v, y)| (v - y) / v));
    let margins: Vec<f64> = min_excess
        .iter()
        .copied()
        .chain([min_gap_u_w, min_gap_v_y])
        .collect();
    QuotientOrderingReport {
        pass: margins.iter().all(|&m| m >= -slack),
        slack,
        min_excess,
        min_gap_u_w,
        min_gap_v_y,
        strict: margins.iter().all(|&m| m > 0.0),
    }
}

/// Worst margins of one convexity sandwich, relative to the bracketed factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichMargins {
    pub pass: bool,
    /// Smallest `(rate − lower)/scale`.
    pub lower_margin: f64,
    pub lower_at_r: f64,
    /// Smallest `(upper − rate)/scale`.
    pub upper_margin: f64,
    pub upper_at_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub pass: bool,
    pub slack: f64,
    /// `(p−1−α)/(n(p−1−α)+α) · f1 g1 ≤ [(u')^{p−1−α}]' ≤ (p−1−α)/(p−1) · f1 g1`.
    pub est1: SandwichMargins,
    /// `f2 g2 g3 / n ≤ [(v')^{p−1}]' ≤ f2 g2 g3`.
    pub est2: SandwichMargins,
}

/// Check both convexity sandwiches at every grid point.
pub fn check_convexity_bounds(traj: &Trajectory, sys: &ValidatedSystem, tol: f64) -> BoundsReport {
    let (p, n, alpha) = (sys.p(), f64::from(sys.n()), sys.alpha());
    let q1 = sys.first_flux_exponent();
    let (lo1, hi1) = (q1 / (n * q1 + alpha), q1 / (p - 1.0));
    let (lo2, hi2) = (1.0 / n, 1.0);
    let mut m1 = [f64::INFINITY, f64::NAN, f64::INFINITY, f64::NAN];
    let mut m2 = m1;
    let update = |m: &mut [f64; 4], lower: f64, upper: f64, r: f64| {
        let lower = if lower.is_nan() {
            f64::NEG_INFINITY
        } else {
            lower
        };
        let upper = if upper.is_nan() {
            f64::NEG_INFINITY
        } else {
            upper
        };
        if lower < m[0] {
            m[0] = lower;
            m[1] = r;
        }
        if upper < m[2] {
            m[2] = upper;
            m[3] = r;
        }
    };
    for st in &traj.states {
        let (rate_u, rate_v) = gradient_power_rates(sys, st);
        let scale1 = sys.f1().eval(st.r) * sys.g1().eval(st.v);
        let scale2 = sys.f2().eval(st.r) * sys.g2().eval(st.v) * sys.g3().eval(st.du);
        update(&mut m1, rate_u / scale1 - lo1, hi1 - rate_u / scale1, st.r);
        update(&mut m2, rate_v / scale2 - lo2, hi2 - rate_v / scale2, st.r);
    }
    let margins = |m: [f64; 4]| SandwichMargins {
        pass: m[0] >= -tol && m[2] >= -tol,
        lower_margin: m[0],
        lower_at_r: m[1],
        upper_margin: m[2],
        upper_at_r: m[3],
    };
    let (est1, est2) = (margins(m1), margins(m2));
    BoundsReport {
        pass: est1.pass && est2.pass,
        slack: tol,
        est1,
        est2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// Algebraic decay fitted.
    Decaying,
    /// Fitted rate is not positive; no decay visible in the window.
    Degenerate,
    /// `Q − 1` is at rounding level somewhere in the window; no fit.
    Underflow,
}

/// Estimate of `lim Q` from the tail of a quotient series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    /// `1 + c · r_last^{−q}` from the fit, or `Q(r_last)` when no fit is possible.
    pub value: f64,
    /// Fitted `q` in `Q − 1 ≈ c r^{−q}`; diagnostic only.
    pub rate: Option<f64>,
    /// RMS residual of the log-log fit.
    pub fit_quality: Option<f64>,
    pub status: FitStatus,
    pub r_last: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimates {
    #[serde(rename = "U")]
    pub u: LimitEstimate,
    #[serde(rename = "V")]
    pub v: LimitEstimate,
    #[serde(rename = "W")]
    pub w: LimitEstimate,
    #[serde(rename = "Y")]
    pub y: LimitEstimate,
}

impl LimitEstimates {
    pub fn all(&self) -> [&LimitEstimate; 4] {
        [&self.u, &self.v, &self.w, &self.y]
    }
}

const FIT_DECADES: f64 = 2.0;

fn estimate_one(grid: &[f64], series: &[f64]) -> LimitEstimate {
    let last = grid.len() - 1;
    let r_last = grid[last];
    let q_last = series[last];
    let lo = r_last / 10f64.powf(FIT_DECADES);
    let window: Vec<(f64, f64)> = grid
        .iter()
        .zip(series)
        .filter(|(r, _)| **r >= lo * (1.0 - 1e-12))
        .map(|(r, q)| (*r, *q))
        .collect();
    let raw = LimitEstimate {
        value: q_last,
        rate: None,
        fit_quality: None,
        status: FitStatus::Underflow,
        r_last,
    };
    if window.len() < 3 || window.iter().any(|(_, q)| !(q - 1.0 > 1e-13 * q.abs())) {
        return raw;
    }
    let xs: Vec<f64> = window.iter().map(|(r, _)| r.ln()).collect();
    let zs: Vec<f64> = window.iter().map(|(_, q)| (q - 1.0).ln()).collect();
    let m = xs.len() as f64;
    let (mx, mz) = (xs.iter().sum::<f64>() / m, zs.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxz: f64 = xs.iter().zip(&zs).map(|(x, z)| (x - mx) * (z - mz)).sum();
    let slope = sxz / sxx;
    let intercept = mz - slope * mx;
    let rms = (xs
        .iter()
        .zip(&zs)
        .map(|(x, z)| {
            let e = z - (intercept + slope * x);
            e * e
        })
        .sum::<f64>()
        / m)
        .sqrt();
    let q = -slope;
    LimitEstimate {
        value: 1.0 + (intercept + slope * r_last.ln()).exp(),
        rate: Some(q),
        fit_quality: Some(rms),
        status: if q > 1e-6 {
            FitStatus::Decaying
        } else {
            FitStatus::Degenerate
        },
        r_last,
    }
}

/// Fit `log(Q − 1)` against `log r` over the last two decades of each series.
pub fn estimate_limits(qs: &QuotientSeries) -> Result<LimitEstimates, VerifyError> {
    let decades = match (qs.grid.first(), qs.grid.last()) {
        (Some(a), Some(b)) if *a > 0.0 => (b / a).log10(),
        _ => 0.0,
    };
    if decades < FIT_DECADES - 1e-9 {
        return Err(VerifyError::InsufficientRange { decades });
    }
    let [u, v, w, y] = qs.series().map(|s| estimate_one(&qs.grid, s));
    Ok(LimitEstimates { u, v, w, y })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitIdentityResiduals {
    /// `|U∞^{p−1−α} − V∞^{k1}|`
    pub lim1: f64,
    /// `|V∞^{p−1} − V∞^{k2} U∞^{k3}|`
    pub lim2: f64,
}

pub fn check_limit_identities(
    est: &LimitEstimates,
    sys: &ValidatedSystem,
) -> LimitIdentityResiduals {
    let (u, v) = (est.u.value, est.v.value);
    LimitIdentityResiduals {
        lim1: (u.powf(sys.first_flux_exponent()) - v.powf(sys.k1())).abs(),
        lim2: (v.powf(sys.p() - 1.0) - v.powf(sys.k2()) * u.powf(sys.k3())).abs(),
    }
}

/// Thresholds used to build a [`VerificationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub integration_rtol: f64,
    pub integration_atol: f64,
    pub monotonicity_slack: f64,
    pub ordering_slack: f64,
    pub convexity_slack: f64,
    /// Allowed `|Q∞ − 1|` for the estimated limits.
    pub limit_threshold: f64,
    /// Limits are asserted only once the run reaches this radius.
    pub limit_min_radius: f64,
    pub identity_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            integration_rtol: 1e-9,
            integration_atol: 1e-12,
            monotonicity_slack: 1e-8,
            ordering_slack: 1e-8,
            convexity_slack: 1e-8,
            limit_threshold: 1e-2,
            limit_min_radius: 1e4,
            identity_threshold: 3e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitsReport {
    pub pass: bool,
    /// Whether the limits count towards the overall verdict.
    pub asserted: bool,
    pub threshold: f64,
    pub estimates: LimitEstimates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitIdentityReport {
    pub pass: bool,
    pub asserted: bool,
    pub threshold: f64,
    pub lim1: f64,
    pub lim2: f64,
}

/// Outcome of every check on one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub monotonicity: MonotonicityReport,
    pub ordering: QuotientOrderingReport,
    pub convexity_bounds: BoundsReport,
    /// `None` when the grid spans fewer than two decades.
    pub limits: Option<LimitsReport>,
    pub limit_identities: Option<LimitIdentityReport>,
    pub tolerances: Tolerances,
}

impl VerificationReport {
    /// True iff every asserted check passes.
    pub fn passed(&self) -> bool {
        self.monotonicity.pass
            && self.ordering.pass
            && self.convexity_bounds.pass
            && self.limits.as_ref().is_none_or(|l| !l.asserted || l.pass)
            && self
                .limit_identities
                .as_ref()
                .is_none_or(|l| !l.asserted || l.pass)
    }
}

/// Run every check on `traj` against `prof`.
pub fn build_report(
    traj: &Trajectory,
    sys: &ValidatedSystem,
    prof: &PowerProfile,
    tolerances: &Tolerances,
) -> (QuotientSeries, VerificationReport) {
    let qs = quotient_series(traj, prof);
    let monotonicity = check_monotone_quotients(&qs, tolerances.monotonicity_slack);
    let ordering = check_quotient_ordering(&qs, tolerances.ordering_slack);
    let convexity_bounds = check_convexity_bounds(traj, sys, tolerances.convexity_slack);
    let (limits, limit_identities) = match estimate_limits(&qs) {
        Ok(est) => {
            let asserted = est.u.r_last >= tolerances.limit_min_radius * (1.0 - 1e-12);
            let pass = est
                .all()
                .iter()
                .all(|e| (e.value - 1.0).abs() <= tolerances.limit_threshold);
            let res = check_limit_identities(&est, sys);
            (
                Some(LimitsReport {
                    pass,
                    asserted,
                    threshold: tolerances.limit_threshold,
                    estimates: est,
                }),
                Some(LimitIdentityReport {
                    pass: res.lim1 < tolerances.identity_threshold
                        && res.lim2 < tolerances.identity_threshold,
                    asserted,
                    threshold: tolerances.identity_threshold,
                    lim1: res.lim1,
                    lim2: res.lim2,
                }),
            )
        }
        Err(_) => (None, None),
    };
    let report = VerificationReport {
        monotonicity,
        ordering,
        convexity_bounds,
        limits,
        limit_identities,
        tolerances: tolerances.clone(),
    };
    (qs, report)
}
