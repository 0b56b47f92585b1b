//! Leading-order state near the origin.
//!
//! The integral form of the flux equations is evaluated with the
//! `g`-arguments frozen at their origin values `v = b` (and `u' ` given by the
//! frozen first flux), which is accurate to leading order for small `r0`.

use crate::model::ValidatedSystem;

use super::State;

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// `∫_0^r f(s) ds` for integrands that behave like a non-negative power near 0,
/// using 8-point Gauss–Legendre panels on `[r/2^{j+1}, r/2^j]`.
pub(crate) fn integrate_from_origin<F: Fn(f64) -> f64>(f: F, r: f64) -> f64 {
    let mut total = 0.0;
    let mut hi = r;
    for level in 0..1100 {
        let lo = 0.5 * hi;
        let part = gauss_legendre(&f, lo, hi);
        total += part;
        if level >= 4 && part.abs() <= 1e-18 * total.abs() {
            break;
        }
        hi = lo;
        if hi == 0.0 {
            break;
        }
    }
    total
}

pub(crate) struct FrozenExpansion<'a> {
    sys: &'a ValidatedSystem,
    a: f64,
    b: f64,
}

impl<'a> FrozenExpansion<'a> {
    pub(crate) fn new(sys: &'a ValidatedSystem, a: f64, b: f64) -> Self {
        Self { sys, a, b }
    }

    /// `P(r) ≈ δ/(n−1) · g1(b) · Σ c r^{δ+m+1}/(δ+m+1)`.
    pub(crate) fn flux_p(&self, r: f64) -> f64 {
        let delta = self.sys.delta();
        let n1 = f64::from(self.sys.n() - 1);
        let sum: f64 = self
            .sys
            .f1()
            .terms()
            .iter()
            .map(|t| {
                let e = delta + t.exponent + 1.0;
                t.coeff * r.powf(e) / e
            })
            .sum();
        delta / n1 * self.sys.g1().eval(self.b) * sum
    }

    pub(crate) fn du(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let q1 = self.sys.first_flux_exponent();
        (self.flux_p(r) / r.powf(self.sys.delta())).powf(1.0 / q1)
    }

    /// `S(r) ≈ g2(b) · ∫_0^r s^{n−1} f2(s) g3(u'(s)) ds` with the frozen `u'`.
    pub(crate) fn flux_s(&self, r: f64) -> f64 {
        let n1 = f64::from(self.sys.n() - 1);
        let integrand =
            |s: f64| s.powf(n1) * self.sys.f2().eval(s) * self.sys.g3().eval(self.du(s));
        self.sys.g2().eval(self.b) * integrate_from_origin(integrand, r)
    }

    pub(crate) fn dv(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let n1 = f64::from(self.sys.n() - 1);
        (self.flux_s(r) / r.powf(n1)).powf(1.0 / (self.sys.p() - 1.0))
    }

    pub(crate) fn state(&self, r0: f64) -> State {
        let flux_p = self.flux_p(r0);
        let flux_s = self.flux_s(r0);
        State::from_fluxes(
            self.sys,
            r0,
            self.a + integrate_from_origin(|s| self.du(s), r0),
            self.b + integrate_from_origin(|s| self.dv(s), r0),
            flux_p,
            flux_s,
        )
    }
}
