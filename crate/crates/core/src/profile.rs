//! Explicit power-law solution `(u0, v0) = (Cλ r^λ, Cμ r^μ)` of the limiting
//! system with pure-power nonlinearities `h_j(s) = s^{k_j}`.
//!
//! Matching powers of `r` gives a 2×2 linear system for `(λ, μ)`; matching
//! coefficients gives a second 2×2 system for `(log λCλ, log μCμ)`. Both have
//! determinant `D = (p−1−α)(p−1−k2) − k1·k3 > 0` on validated systems.

use serde::Serialize;
use thiserror::Error;

use crate::model::ValidatedSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("coefficient function {which} is not a single power c*r^m; no explicit profile")]
    NotPurePowerCoefficients { which: &'static str },
}

/// `Δ_p(C r^λ) = coeff · r^expo` for the radial power `C r^λ` in dimension `n`.
///
/// Returns `(coeff, expo)` with `coeff = |λC|^{p−2}(λC)·(λ(p−1)+n−p)` and
/// `expo = (p−1)λ − p`.
pub fn p_laplace_power(c: f64, lambda: f64, p: f64, n: u32) -> (f64, f64) {
    let slope = lambda * c;
    let flux = slope.abs().powf(p - 2.0) * slope;
    let coeff = flux * (lambda * (p - 1.0) + f64::from(n) - p);
    (coeff, (p - 1.0) * lambda - p)
}

fn pure_coefficients(sys: &ValidatedSystem) -> Result<((f64, f64), (f64, f64)), ProfileError> {
    let f1 = sys
        .f1()
        .single_term()
        .ok_or(ProfileError::NotPurePowerCoefficients { which: "f1" })?;
    let f2 = sys
        .f2()
        .single_term()
        .ok_or(ProfileError::NotPurePowerCoefficients { which: "f2" })?;
    Ok((f1, f2))
}

/// Exponents `(λ, μ)` of the explicit profile.
pub fn solve_exponents(sys: &ValidatedSystem) -> Result<(f64, f64), ProfileError> {
    let ((_, m1), (_, m2)) = pure_coefficients(sys)?;
    let (p, alpha) = (sys.p(), sys.alpha());
    let (k1, k2, k3) = (sys.k1(), sys.k2(), sys.k3());
    let d = sys.existence_margin();
    let lambda = ((p - alpha + m1) * (p - 1.0 - k2) + k1 * (p - k3 + m2)) / d;
    let mu = ((p - 1.0 - alpha) * (p + m2) + k3 * (1.0 + m1)) / d;
    Ok((lambda, mu))
}

/// Amplitudes `(Cλ, Cμ)` for given exponents, solved in logarithmic form.
///
/// Either may underflow for large exponents; [`solve_log_amplitudes`] does not.
pub fn solve_amplitudes(
    sys: &ValidatedSystem,
    lambda: f64,
    mu: f64,
) -> Result<(f64, f64), ProfileError> {
    let (lc, mc) = solve_log_amplitudes(sys, lambda, mu)?;
    Ok((lc.exp(), mc.exp()))
}

/// `(ln Cλ, ln Cμ)` for given exponents.
pub fn solve_log_amplitudes(
    sys: &ValidatedSystem,
    lambda: f64,
    mu: f64,
) -> Result<(f64, f64), ProfileError> {
    let ((c1, _), (c2, _)) = pure_coefficients(sys)?;
    let (p, n, alpha) = (sys.p(), f64::from(sys.n()), sys.alpha());
    let (k1, k2, k3) = (sys.k1(), sys.k2(), sys.k3());
    let d = sys.existence_margin();
    let b_lambda = lambda * (p - 1.0) + n - p;
    let b_mu = mu * (p - 1.0) + n - p;
    // log of c1/(μ^k1 Bλ) and c2/(μ^k2 Bμ)
    let x = c1.ln() - k1 * mu.ln() - b_lambda.ln();
    let y = c2.ln() - k2 * mu.ln() - b_mu.ln();
    let log_lambda_c = ((p - 1.0 - k2) * x + k1 * y) / d;
    let log_mu_c = ((p - 1.0 - alpha) * y + k3 * x) / d;
    Ok((log_lambda_c - lambda.ln(), log_mu_c - mu.ln()))
}

/// The explicit solution of the limiting system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerProfile {
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "C_lambda")]
    pub c_lambda: f64,
    #[serde(rename = "C_mu")]
    pub c_mu: f64,
    #[serde(rename = "B_lambda")]
    pub b_lambda: f64,
    #[serde(rename = "B_mu")]
    pub b_mu: f64,
    /// `ln Cλ`, exact even when `Cλ` underflows.
    #[serde(skip)]
    pub log_c_lambda: f64,
    #[serde(skip)]
    pub log_c_mu: f64,
}

/// `(u0, v0, u0', v0')` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub u: f64,
    pub v: f64,
    pub du: f64,
    pub dv: f64,
}

impl PowerProfile {
    /// Solve exponents and amplitudes for `sys`.
    pub fn solve(sys: &ValidatedSystem) -> Result<Self, ProfileError> {
        let (lambda, mu) = solve_exponents(sys)?;
        let (log_c_lambda, log_c_mu) = solve_log_amplitudes(sys, lambda, mu)?;
        let (p, n) = (sys.p(), f64::from(sys.n()));
        Ok(Self {
            lambda,
            mu,
            c_lambda: log_c_lambda.exp(),
            c_mu: log_c_mu.exp(),
            b_lambda: lambda * (p - 1.0) + n - p,
            b_mu: mu * (p - 1.0) + n - p,
            log_c_lambda,
            log_c_mu,
        })
    }

    pub fn eval(&self, r: f64) -> ProfilePoint {
        if r == 0.0 {
            return ProfilePoint {
                u: 0.0,
                v: 0.0,
                du: 0.0,
                dv: 0.0,
            };
        }
        let lr = r.ln();
        ProfilePoint {
            u: (self.log_c_lambda + self.lambda * lr).exp(),
            v: (self.log_c_mu + self.mu * lr).exp(),
            du: self.lambda * (self.log_c_lambda + (self.lambda - 1.0) * lr).exp(),
            dv: self.mu * (self.log_c_mu + (self.mu - 1.0) * lr).exp(),
        }
    }
}

/// Free-function form of [`PowerProfile::eval`], returning `(u0, v0, u0', v0')`.
pub fn profile_eval(prof: &PowerProfile, r: f64) -> (f64, f64, f64, f64) {
    let pt = prof.eval(r);
    (pt.u, pt.v, pt.du, pt.dv)
}

/// Largest relative defect of both limiting equations over `r_samples`.
///
/// Each side is formed in logarithmic form, so the defect
/// `|lhs − rhs| / max(|lhs|, |rhs|)` equals `1 − exp(−|log lhs − log rhs|)`.
/// Returns `+∞` if a side is not positive (the profile cannot satisfy the
/// equations there).
pub fn profile_residual(prof: &PowerProfile, sys: &ValidatedSystem, r_samples: &[f64]) -> f64 {
    let Ok(((c1, m1), (c2, m2))) = pure_coefficients(sys) else {
        return f64::INFINITY;
    };
    let (p, n, alpha) = (sys.p(), sys.n(), sys.alpha());
    let (k1, k2, k3) = (sys.k1(), sys.k2(), sys.k3());
    let (b_u, b_v) = (
        prof.lambda * (p - 1.0) + f64::from(n) - p,
        prof.mu * (p - 1.0) + f64::from(n) - p,
    );
    if !(prof.lambda > 0.0 && prof.mu > 0.0 && b_u > 0.0 && b_v > 0.0) {
        return f64::INFINITY;
    }
    let log_slope_u = prof.lambda.ln() + prof.log_c_lambda;
    let log_slope_v = prof.mu.ln() + prof.log_c_mu;
    let mut worst = 0.0f64;
    for &r in r_samples {
        let lr = r.ln();
        let log_v0 = prof.log_c_mu + prof.mu * lr;
        let log_du0 = log_slope_u + (prof.lambda - 1.0) * lr;
        // Δ_p(C r^λ) = (λC)^{p−1} B r^{(p−1)λ−p} for λC > 0
        let lhs_u = (p - 1.0) * log_slope_u + b_u.ln() + ((p - 1.0) * prof.lambda - p) * lr;
        let rhs_u = c1.ln() + m1 * lr + k1 * log_v0 + alpha * log_du0;
        let lhs_v = (p - 1.0) * log_slope_v + b_v.ln() + ((p - 1.0) * prof.mu - p) * lr;
        let rhs_v = c2.ln() + m2 * lr + k2 * log_v0 + k3 * log_du0;
        for gap in [lhs_u - rhs_u, lhs_v - rhs_v] {
            let defect = -(-gap.abs()).exp_m1();
            worst = if defect.is_nan() {
                f64::INFINITY
            } else {
                worst.max(defect)
            };
        }
    }
    worst
}

/// `count` points spaced geometrically on `[lo, hi]`.
pub fn geometric_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_system, pure_power_system};

    fn cubic() -> ValidatedSystem {
        pure_power_system(3.0, 3, 0.0, (1.0, 0.0), (1.0, 0.0), [1.0, 0.0, 1.0], 100.0).unwrap()
    }

    fn poisson() -> ValidatedSystem {
        pure_power_system(2.0, 3, 0.0, (1.0, 0.0), (1.0, 0.0), [0.0, 0.0, 0.0], 100.0).unwrap()
    }

    /// Δ_p of a radial function via r^{1−n}(r^{n−1}|u'|^{p−2}u')', differentiated
    /// numerically with a centered fourth-order stencil.
    fn radial_p_laplacian_fd(du: impl Fn(f64) -> f64, p: f64, n: u32, r: f64) -> f64 {
        let n1 = f64::from(n) - 1.0;
        let flux = |s: f64| {
            let g = du(s);
            s.powf(n1) * g.abs().powf(p - 2.0) * g
        };
        let h = 1e-3 * r;
        let d = (-flux(r + 2.0 * h) + 8.0 * flux(r + h) - 8.0 * flux(r - h) + flux(r - 2.0 * h))
            / (12.0 * h);
        d / r.powf(n1)
    }

    #[test]
    fn p_laplace_of_powers() {
        assert_eq!(p_laplace_power(1.0, 2.0, 2.0, 3), (6.0, 0.0));
        let (coeff, expo) = p_laplace_power(1.0, -1.0, 2.0, 3);
        assert_eq!(coeff, 0.0);
        assert_eq!(expo, -3.0);
        assert_eq!(p_laplace_power(1.0, 2.0, 3.0, 2), (12.0, 1.0));
    }

    #[test]
    fn p_laplace_matches_radial_formula() {
        for &(c, lambda, p, n) in &[
            (1.0, 2.0, 3.0, 2u32),
            (0.7, 2.5, 1.5, 3),
            (2.0, 1.3, 4.0, 5),
            (0.3, 3.7, 2.2, 4),
        ] {
            let (coeff, expo) = p_laplace_power(c, lambda, p, n);
            for &r in &[0.5, 1.0, 3.0] {
                let fd = radial_p_laplacian_fd(|s| lambda * c * s.powf(lambda - 1.0), p, n, r);
                let exact = coeff * r.powf(expo);
                assert!(
                    ((fd - exact) / exact).abs() < 1e-8,
                    "{c} {lambda} {p} {n} {r}"
                );
            }
        }
    }

    #[test]
    fn poisson_exponents_and_amplitudes() {
        let sys = poisson();
        assert_eq!(solve_exponents(&sys).unwrap(), (2.0, 2.0));
        let prof = PowerProfile::solve(&sys).unwrap();
        assert!((prof.c_lambda - 1.0 / 6.0).abs() < 1e-15);
        assert!((prof.c_mu - 1.0 / 6.0).abs() < 1e-15);
        let res = profile_residual(&prof, &sys, &geometric_samples(1e-2, 1e4, 10));
        assert!(res < 1e-14, "{res}");
    }

    #[test]
    fn cubic_instance_spot_values() {
        let sys = cubic();
        let (lambda, mu) = solve_exponents(&sys).unwrap();
        // hand solution of 2λ − μ = 3, 2μ − λ = 2
        assert!((lambda - 8.0 / 3.0).abs() < 1e-15);
        assert!((mu - 7.0 / 3.0).abs() < 1e-15);
        let (cl, _) = solve_amplitudes(&sys, lambda, mu).unwrap();
        let target = 243.0 / 175_616.0;
        assert!(((lambda * cl).powi(3) / target - 1.0).abs() < 1e-12);
        let prof = PowerProfile::solve(&sys).unwrap();
        assert!((prof.b_lambda - 16.0 / 3.0).abs() < 1e-14);
        assert!((prof.b_mu - 14.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn residual_detects_perturbation() {
        let sys = cubic();
        let prof = PowerProfile::solve(&sys).unwrap();
        let samples = geometric_samples(1e-2, 1e4, 10);
        assert!(profile_residual(&prof, &sys, &samples) < 1e-10);
        let bent = PowerProfile {
            log_c_lambda: prof.log_c_lambda + 1.01f64.ln(),
            ..prof
        };
        assert!(profile_residual(&bent, &sys, &samples) > 1e-3);
    }

    #[test]
    fn origin_behaviour() {
        let prof = PowerProfile::solve(&cubic()).unwrap();
        assert_eq!(profile_eval(&prof, 0.0), (0.0, 0.0, 0.0, 0.0));
        let (u, v, du, dv) = profile_eval(&prof, 1.0);
        assert_eq!((u, v), (prof.c_lambda, prof.c_mu));
        assert!((du - prof.lambda * prof.c_lambda).abs() < 1e-15);
        assert!((dv - prof.mu * prof.c_mu).abs() < 1e-15);
        for &r in &[1e-2, 1e-4, 1e-8] {
            let pt = prof.eval(r);
            assert!((pt.u / pt.du - r / prof.lambda).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn multi_term_coefficients_rejected() {
        let sys = build_system(
            2.0,
            3,
            0.0,
            1.0,
            &[[1.0, 0.0], [1.0, 1.0]],
            &[[1.0, 0.0]],
            &[[1.0, 1.0]],
            &[[1.0, 0.0]],
            &[[1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(
            solve_exponents(&sys),
            Err(ProfileError::NotPurePowerCoefficients { which: "f1" })
        );
    }

    #[test]
    fn exponents_invariant_under_coefficient_scaling() {
        let base = cubic();
        let scaled =
            pure_power_system(3.0, 3, 0.0, (7.5, 0.0), (1.0, 0.0), [1.0, 0.0, 1.0], 100.0).unwrap();
        assert_eq!(solve_exponents(&base), solve_exponents(&scaled));
        let a = PowerProfile::solve(&base).unwrap();
        let b = PowerProfile::solve(&scaled).unwrap();
        // D·log(λCλ) gains (p−1−k2)·log σ, D·log(μCμ) gains k3·log σ
        let d = base.existence_margin();
        assert!(((b.c_lambda / a.c_lambda).ln() - 2.0 * 7.5f64.ln() / d).abs() < 1e-12);
        assert!(((b.c_mu / a.c_mu).ln() - 7.5f64.ln() / d).abs() < 1e-12);
    }
}
