//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use plap_core::{build_system, pure_power_system, ValidatedSystem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `p = 3, n = 3, α = 0, k1 = k3 = 1, k2 = 0, f ≡ 1`.
pub fn cubic(r_max: f64) -> ValidatedSystem {
    pure_power_system(3.0, 3, 0.0, (1.0, 0.0), (1.0, 0.0), [1.0, 0.0, 1.0], r_max).unwrap()
}

/// `p = 2, n = 3`, every nonlinearity constant, `f ≡ 1`.
pub fn poisson(r_max: f64) -> ValidatedSystem {
    pure_power_system(2.0, 3, 0.0, (1.0, 0.0), (1.0, 0.0), [0.0, 0.0, 0.0], r_max).unwrap()
}

/// Radial p-Laplacian of `C r^e` written out from
/// `r^{1−n} (r^{n−1} |w'|^{p−2} w')'`, as `(coefficient, exponent)`.
pub fn radial_p_laplacian_of_power(c: f64, e: f64, p: f64, n: u32) -> (f64, f64) {
    let slope = c * e;
    let flux_coeff = slope.abs().powf(p - 2.0) * slope;
    let flux_expo = (e - 1.0) * (p - 1.0) + f64::from(n) - 1.0;
    (flux_coeff * flux_expo, flux_expo - f64::from(n))
}

/// Random validated system with pure-power coefficients and optional lower
/// order terms in the nonlinearities, kept away from the existence boundary.
pub fn random_system(rng: &mut ChaCha8Rng, r_max: f64) -> ValidatedSystem {
    loop {
        let p: f64 = rng.gen_range(1.5..4.0);
        let n: u32 = rng.gen_range(2..=5);
        let alpha = rng.gen_range(0.0..0.6) * (p - 1.0);
        let k2 = rng.gen_range(0.0..0.6) * (p - 1.0);
        let k1: f64 = rng.gen_range(0.2..2.5);
        let k3: f64 = rng.gen_range(0.2..2.5);
        let base = (p - 1.0 - alpha) * (p - 1.0 - k2);
        if base - k1 * k3 < 0.2 * base {
            continue;
        }
        let (m1, m2) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let (c1, c2) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let mut g = |k: f64| {
            let mut terms = vec![[1.0, k]];
            if k > 0.0 && rng.gen_bool(0.5) {
                terms.push([rng.gen_range(0.0..2.0), rng.gen_range(0.0..k)]);
            }
            terms
        };
        let (g1, g2, g3) = (g(k1), g(k2), g(k3));
        return build_system(p, n, alpha, r_max, &[[c1, m1]], &[[c2, m2]], &g1, &g2, &g3).unwrap();
    }
}

/// Composite Simpson rule on `[lo, hi]` with `2m` panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Adaptive Simpson quadrature with a relative stopping tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, rel: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = simpson(f, lo, hi, 64).abs();
    step(f, lo, hi, fa, fm, fb, whole, rel * scale, 48)
}
