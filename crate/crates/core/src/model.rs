//! Problem definition for the radial system
//!
//! ```text
//! Δ_p u = f1(|x|) · g1(v) · |∇u|^α
//! Δ_p v = f2(|x|) · g2(v) · g3(|∇u|)
//! ```
//!
//! Coefficient functions `f_i` and nonlinearities `g_j` are finite sums of
//! non-negative powers with non-negative coefficients. A nonlinearity carries
//! its leading exponent `k` with unit leading coefficient, so `g(s)/s^k` is
//! non-increasing and tends to 1. Every structural assumption the comparison
//! theorems rely on is checked once, in [`validate_system`].

use serde::Serialize;
use thiserror::Error;

/// Errors raised while building or validating a system.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid coefficient function {which}: {reason}")]
    InvalidCoefficientFunction { which: &'static str, reason: String },

    #[error("malformed nonlinearity {which}: {reason}")]
    MalformedNonlinearity { which: &'static str, reason: String },

    /// `α ≥ p − 1`: no non-constant positive radial solution exists.
    #[error(
        "gradient exponent alpha = {alpha} is not below p - 1 = {limit}; \
         no non-constant positive radial solution exists (nonexistence gate)"
    )]
    GradientExponentTooLarge { alpha: f64, limit: f64 },

    /// `(p−1−α)(p−1−k2) ≤ k1·k3`.
    #[error(
        "existence condition violated: (p-1-alpha)(p-1-k2) = {lhs} is not greater than k1*k3 = {rhs}"
    )]
    ExistenceConditionViolated { lhs: f64, rhs: f64 },
}

/// `x^e` with the convention `0^0 = 1`.
#[inline]
pub(crate) fn pow0(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

/// One term `coeff · x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }
}

fn check_terms(terms: &[PowerTerm]) -> Result<Vec<PowerTerm>, String> {
    if terms.is_empty() {
        return Err("at least one term is required".into());
    }
    for t in terms {
        if !t.coeff.is_finite() || !t.exponent.is_finite() {
            return Err(format!("non-finite term ({}, {})", t.coeff, t.exponent));
        }
        if t.coeff < 0.0 {
            return Err(format!("negative coefficient {}", t.coeff));
        }
        if t.exponent < 0.0 {
            return Err(format!("negative exponent {}", t.exponent));
        }
    }
    // merge like powers and drop vanishing terms; keep ascending exponent order
    let mut merged: Vec<PowerTerm> = Vec::with_capacity(terms.len());
    let mut sorted = terms.to_vec();
    sorted.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
    for t in sorted {
        match merged.last_mut() {
            Some(last) if last.exponent == t.exponent => last.coeff += t.coeff,
            _ => merged.push(t),
        }
    }
    merged.retain(|t| t.coeff > 0.0);
    if merged.is_empty() {
        return Err("all coefficients are zero".into());
    }
    Ok(merged)
}

fn eval_terms(terms: &[PowerTerm], x: f64) -> f64 {
    terms.iter().map(|t| t.coeff * pow0(x, t.exponent)).sum()
}

fn eval_terms_derivative(terms: &[PowerTerm], x: f64) -> f64 {
    terms
        .iter()
        .filter(|t| t.exponent != 0.0)
        .map(|t| t.coeff * t.exponent * pow0(x, t.exponent - 1.0))
        .sum()
}

/// `r ↦ Σ c · r^m` with `c, m ≥ 0` and at least one positive `c`.
///
/// Such a function is continuous, non-decreasing on `[0, ∞)` and positive on
/// `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientFunction {
    terms: Vec<PowerTerm>,
}

impl CoefficientFunction {
    pub fn new(terms: Vec<PowerTerm>) -> Result<Self, ModelError> {
        Self::named("f", terms)
    }

    pub(crate) fn named(which: &'static str, terms: Vec<PowerTerm>) -> Result<Self, ModelError> {
        check_terms(&terms)
            .map(|terms| Self { terms })
            .map_err(|reason| ModelError::InvalidCoefficientFunction { which, reason })
    }

    /// `c · r^m`.
    pub fn power(c: f64, m: f64) -> Result<Self, ModelError> {
        Self::new(vec![PowerTerm::new(c, m)])
    }

    /// The constant function 1.
    pub fn one() -> Self {
        Self {
            terms: vec![PowerTerm::new(1.0, 0.0)],
        }
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// `(c, m)` when the function is a single power `c · r^m`.
    pub fn single_term(&self) -> Option<(f64, f64)> {
        match self.terms.as_slice() {
            [t] => Some((t.coeff, t.exponent)),
            _ => None,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        eval_terms(&self.terms, r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        eval_terms_derivative(&self.terms, r)
    }
}

/// `s ↦ Σ a · s^e` with unit coefficient on the leading power `s^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nonlinearity {
    terms: Vec<PowerTerm>,
    leading_exponent: f64,
}

impl Nonlinearity {
    pub fn new(terms: Vec<PowerTerm>) -> Result<Self, ModelError> {
        Self::named("g", terms)
    }

    pub(crate) fn named(which: &'static str, terms: Vec<PowerTerm>) -> Result<Self, ModelError> {
        let malformed = |reason: String| ModelError::MalformedNonlinearity { which, reason };
        let terms = check_terms(&terms).map_err(malformed)?;
        let lead = *terms.last().expect("non-empty after check");
        if lead.coeff != 1.0 {
            return Err(malformed(format!(
                "leading coefficient of s^{} is {}, expected exactly 1",
                lead.exponent, lead.coeff
            )));
        }
        Ok(Self {
            leading_exponent: lead.exponent,
            terms,
        })
    }

    /// The pure power `s^k`.
    pub fn power(k: f64) -> Result<Self, ModelError> {
        Self::new(vec![PowerTerm::new(1.0, k)])
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// Leading exponent `k`.
    pub fn k(&self) -> f64 {
        self.leading_exponent
    }

    pub fn is_constant(&self) -> bool {
        self.leading_exponent == 0.0
    }

    pub fn is_pure_power(&self) -> bool {
        self.terms.len() == 1
    }

    /// `g(s)` for `s ≥ 0`.
    pub fn eval(&self, s: f64) -> f64 {
        eval_terms(&self.terms, s)
    }

    /// `g'(s)` for `s > 0`.
    pub fn derivative(&self, s: f64) -> f64 {
        eval_terms_derivative(&self.terms, s)
    }

    /// `Q(s, t) = g(s·t) / t^k`, the quotient against the paired power `h(t) = t^k`.
    pub fn quotient(&self, s: f64, t: f64) -> f64 {
        self.eval(s * t) / pow0(t, self.leading_exponent)
    }
}

/// Free-function form of [`Nonlinearity::eval`].
pub fn eval_nonlinearity(g: &Nonlinearity, s: f64) -> f64 {
    g.eval(s)
}

/// Free-function form of [`Nonlinearity::quotient`].
pub fn eval_quotient_q(g: &Nonlinearity, s: f64, t: f64) -> f64 {
    g.quotient(s, t)
}

/// Scalars and coefficient functions of the problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    pub p: f64,
    pub n: u32,
    pub alpha: f64,
    pub f1: CoefficientFunction,
    pub f2: CoefficientFunction,
    pub r_max: f64,
}

impl SystemParams {
    fn check(&self) -> Result<(), ModelError> {
        let bad = |name, reason: &str| {
            Err(ModelError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.p.is_finite() && self.p > 1.0) {
            return bad("p", "must be finite and greater than 1");
        }
        if self.n < 2 {
            return bad("n", "must be at least 2");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha", "must be finite and non-negative");
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return bad("r_max", "must be finite and positive");
        }
        Ok(())
    }
}

/// A system that passed every structural check, together with `δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedSystem {
    params: SystemParams,
    g1: Nonlinearity,
    g2: Nonlinearity,
    g3: Nonlinearity,
    delta: f64,
}

impl ValidatedSystem {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn g1(&self) -> &Nonlinearity {
        &self.g1
    }

    pub fn g2(&self) -> &Nonlinearity {
        &self.g2
    }

    pub fn g3(&self) -> &Nonlinearity {
        &self.g3
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn n(&self) -> u32 {
        self.params.n
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn f1(&self) -> &CoefficientFunction {
        &self.params.f1
    }

    pub fn f2(&self) -> &CoefficientFunction {
        &self.params.f2
    }

    pub fn r_max(&self) -> f64 {
        self.params.r_max
    }

    /// `δ = (n−1)(p−1−α)/(p−1)`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `p − 1 − α`, the exponent carried by the first flux.
    pub fn first_flux_exponent(&self) -> f64 {
        self.params.p - 1.0 - self.params.alpha
    }

    /// `(p−1−α)(p−1−k2) − k1·k3`, strictly positive for a validated system.
    pub fn existence_margin(&self) -> f64 {
        existence_margin(
            self.params.p,
            self.params.alpha,
            self.k1(),
            self.k2(),
            self.k3(),
        )
    }

    pub fn k1(&self) -> f64 {
        self.g1.k()
    }

    pub fn k2(&self) -> f64 {
        self.g2.k()
    }

    pub fn k3(&self) -> f64 {
        self.g3.k()
    }

    /// Same system with every `g_j` replaced by its paired power `s^{k_j}`.
    pub fn limiting_system(&self) -> ValidatedSystem {
        let pure = |g: &Nonlinearity| Nonlinearity::power(g.k()).expect("k is valid");
        ValidatedSystem {
            params: self.params.clone(),
            g1: pure(&self.g1),
            g2: pure(&self.g2),
            g3: pure(&self.g3),
            delta: self.delta,
        }
    }

    /// Copy with a different outer radius.
    pub fn with_r_max(&self, r_max: f64) -> Result<ValidatedSystem, ModelError> {
        let mut params = self.params.clone();
        params.r_max = r_max;
        validate_system(params, self.g1.clone(), self.g2.clone(), self.g3.clone())
    }
}

fn existence_margin(p: f64, alpha: f64, k1: f64, k2: f64, k3: f64) -> f64 {
    (p - 1.0 - alpha) * (p - 1.0 - k2) - k1 * k3
}

/// Check every structural assumption and compute `δ`.
///
/// Rejects `α ≥ p − 1` and systems with `(p−1−α)(p−1−k2) ≤ k1·k3`; both
/// inequalities are strict.
pub fn validate_system(
    params: SystemParams,
    g1: Nonlinearity,
    g2: Nonlinearity,
    g3: Nonlinearity,
) -> Result<ValidatedSystem, ModelError> {
    params.check()?;
    let limit = params.p - 1.0;
    if params.alpha >= limit {
        return Err(ModelError::GradientExponentTooLarge {
            alpha: params.alpha,
            limit,
        });
    }
    let lhs = (params.p - 1.0 - params.alpha) * (params.p - 1.0 - g2.k());
    let rhs = g1.k() * g3.k();
    if !(lhs > rhs) {
        return Err(ModelError::ExistenceConditionViolated { lhs, rhs });
    }
    let delta = f64::from(params.n - 1) * (params.p - 1.0 - params.alpha) / (params.p - 1.0);
    Ok(ValidatedSystem {
        params,
        g1,
        g2,
        g3,
        delta,
    })
}

/// Raw `(coeff, exponent)` pairs, the layout used by configuration files.
pub fn terms_from_pairs(pairs: &[[f64; 2]]) -> Vec<PowerTerm> {
    pairs.iter().map(|&[c, e]| PowerTerm::new(c, e)).collect()
}

/// Build and validate a system from raw term lists.
#[allow(clippy::too_many_arguments)]
pub fn build_system(
    p: f64,
    n: u32,
    alpha: f64,
    r_max: f64,
    f1: &[[f64; 2]],
    f2: &[[f64; 2]],
    g1: &[[f64; 2]],
    g2: &[[f64; 2]],
    g3: &[[f64; 2]],
) -> Result<ValidatedSystem, ModelError> {
    let params = SystemParams {
        p,
        n,
        alpha,
        f1: CoefficientFunction::named("f1", terms_from_pairs(f1))?,
        f2: CoefficientFunction::named("f2", terms_from_pairs(f2))?,
        r_max,
    };
    validate_system(
        params,
        Nonlinearity::named("g1", terms_from_pairs(g1))?,
        Nonlinearity::named("g2", terms_from_pairs(g2))?,
        Nonlinearity::named("g3", terms_from_pairs(g3))?,
    )
}

/// Pure-power system `f_i = c_i r^{m_i}`, `g_j = s^{k_j}`.
#[allow(clippy::too_many_arguments)]
pub fn pure_power_system(
    p: f64,
    n: u32,
    alpha: f64,
    (c1, m1): (f64, f64),
    (c2, m2): (f64, f64),
    [k1, k2, k3]: [f64; 3],
    r_max: f64,
) -> Result<ValidatedSystem, ModelError> {
    build_system(
        p,
        n,
        alpha,
        r_max,
        &[[c1, m1]],
        &[[c2, m2]],
        &[[1.0, k1]],
        &[[1.0, k2]],
        &[[1.0, k3]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(pairs: &[[f64; 2]]) -> Nonlinearity {
        Nonlinearity::new(terms_from_pairs(pairs)).unwrap()
    }

    #[test]
    fn delta_for_cubic_instance() {
        let sys =
            pure_power_system(3.0, 3, 0.0, (1.0, 0.0), (1.0, 0.0), [1.0, 0.0, 1.0], 1.0).unwrap();
        // (n−1)(p−1−α)/(p−1) = 2·2/2
        assert_eq!(sys.delta(), 2.0);
        assert_eq!(sys.existence_margin(), 3.0);
    }

    #[test]
    fn existence_condition_rejection() {
        let err = pure_power_system(2.0, 3, 0.0, (1.0, 0.0), (1.0, 0.0), [1.0, 0.0, 2.0], 1.0)
            .unwrap_err();
        assert!(
            matches!(err, ModelError::ExistenceConditionViolated { lhs, rhs } if lhs == 1.0 && rhs == 2.0)
        );
    }

    #[test]
    fn nonexistence_gate() {
        let err = pure_power_system(2.0, 3, 1.5, (1.0, 0.0), (1.0, 0.0), [0.0, 0.0, 0.0], 1.0)
            .unwrap_err();
        assert!(matches!(err, ModelError::GradientExponentTooLarge { .. }));
        assert!(err.to_string().contains("nonexistence"));
        // the threshold itself is rejected
        let err = pure_power_system(2.0, 3, 1.0, (1.0, 0.0), (1.0, 0.0), [0.0, 0.0, 0.0], 1.0)
            .unwrap_err();
        assert!(matches!(err, ModelError::GradientExponentTooLarge { .. }));
    }

    #[test]
    fn malformed_nonlinearities() {
        for pairs in [
            vec![[2.0, 2.0]],
            vec![[1.0, 2.0], [-1.0, 1.0]],
            vec![[1.0, 1.0], [0.5, 2.0]],
            vec![],
            vec![[0.0, 1.0]],
            vec![[1.0, f64::NAN]],
            vec![[1.0, -1.0]],
        ] {
            let err = Nonlinearity::new(terms_from_pairs(&pairs)).unwrap_err();
            assert!(
                matches!(err, ModelError::MalformedNonlinearity { .. }),
                "{pairs:?}"
            );
        }
        // like powers are merged before the leading coefficient is checked
        let g = poly(&[[0.5, 2.0], [0.5, 2.0], [3.0, 1.0]]);
        assert_eq!(g.k(), 2.0);
        assert_eq!(g.terms().len(), 2);
    }

    #[test]
    fn invalid_scalars() {
        let f = CoefficientFunction::one;
        for (p, n, alpha, r_max) in [
            (1.0, 3, 0.0, 1.0),
            (2.0, 1, 0.0, 1.0),
            (2.0, 3, -0.1, 1.0),
            (2.0, 3, 0.0, 0.0),
            (f64::NAN, 3, 0.0, 1.0),
        ] {
            let params = SystemParams {
                p,
                n,
                alpha,
                f1: f(),
                f2: f(),
                r_max,
            };
            let err = validate_system(
                params,
                poly(&[[1.0, 0.0]]),
                poly(&[[1.0, 0.0]]),
                poly(&[[1.0, 0.0]]),
            )
            .unwrap_err();
            assert!(matches!(err, ModelError::InvalidParameter { .. }));
        }
        assert!(CoefficientFunction::new(vec![]).is_err());
        assert!(CoefficientFunction::new(terms_from_pairs(&[[0.0, 1.0]])).is_err());
    }

    #[test]
    fn nonlinearity_values() {
        assert_eq!(poly(&[[1.0, 2.0]]).eval(3.0), 9.0);
        let g = poly(&[[1.0, 2.0], [2.0, 1.0]]);
        assert_eq!(g.eval(1.0), 3.0);
        assert_eq!(g.eval(0.0), 0.0);
        assert_eq!(poly(&[[1.0, 2.0], [1.0, 0.0]]).eval(0.0), 1.0);
        let ratio = g.eval(1e8) / 1e16;
        assert!((ratio - 1.0).abs() < 1e-7);
        assert_eq!(g.derivative(1.0), 4.0);
    }

    #[test]
    fn quotient_values() {
        assert_eq!(poly(&[[1.0, 2.0]]).quotient(2.0, 5.0), 4.0);
        let g = poly(&[[1.0, 2.0], [1.0, 1.0]]);
        assert_eq!(g.quotient(2.0, 1.0), 6.0);
        assert!((g.quotient(2.0, 1e9) - 4.0).abs() < 1e-8);
    }

    #[test]
    fn validation_boundary_grid() {
        // p = 3, alpha = 0: margin 2(2 - k2) - k1 k3
        for &k1 in &[0.0, 0.5, 1.0, 2.0, 4.0] {
            for &k3 in &[0.0, 0.5, 1.0, 2.0] {
                for &k2 in &[0.0, 0.5, 1.0, 1.5, 2.0] {
                    let margin = 2.0 * (2.0 - k2) - k1 * k3;
                    let res =
                        pure_power_system(3.0, 3, 0.0, (1.0, 0.0), (1.0, 0.0), [k1, k2, k3], 1.0);
                    assert_eq!(res.is_ok(), margin > 0.0, "k = ({k1}, {k2}, {k3})");
                }
            }
        }
    }

    fn arb_poly() -> impl Strategy<Value = Nonlinearity> {
        (
            0.0f64..3.0,
            prop::collection::vec((0.0f64..4.0, 0.0f64..1.0), 0..4),
        )
            .prop_map(|(k, lower)| {
                let mut pairs = vec![[1.0, k]];
                if k >= 0.5 {
                    pairs.extend(lower.into_iter().map(|(a, frac)| [a, frac * k * 0.5]));
                }
                poly(&pairs)
            })
    }

    proptest! {
        #[test]
        fn quotient_monotone_and_bounded(g in arb_poly(), s in 1.0f64..5.0) {
            let k = g.k();
            let mut prev = f64::INFINITY;
            for i in -8..=12 {
                let t = 10f64.powf(f64::from(i) * 0.5);
                let q = g.quotient(s, t);
                let floor = s.powf(k);
                prop_assert!(q >= floor * (1.0 - 1e-12), "Q below s^k at t={t}");
                prop_assert!(q <= prev * (1.0 + 1e-12), "Q increased at t={t}");
                prev = q;
            }
            // tends to s^k
            let far = g.quotient(s, 1e60);
            prop_assert!((far / s.powf(k) - 1.0).abs() < 1e-6);
        }

        #[test]
        fn nonlinearity_monotone_and_dominates_power(g in arb_poly(), s1 in 0.0f64..1e3, ds in 1e-3f64..1e3) {
            let s2 = s1 + ds;
            let (g1, g2) = (g.eval(s1), g.eval(s2));
            if g.is_constant() {
                prop_assert_eq!(g1, g2);
            } else {
                prop_assert!(g1 < g2);
            }
            for i in -6..=6 {
                let t = 10f64.powi(i);
                prop_assert!(g.eval(t) >= t.powf(g.k()) * (1.0 - 1e-14));
            }
        }
    }
}
