//! Dormand–Prince 5(4) stepper with FSAL and an RMS error norm.

pub(crate) const DIM: usize = 4;
pub(crate) type Vector = [f64; DIM];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb(y: &Vector, h: f64, terms: &[(f64, &Vector)]) -> Vector {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Result of one trial step.
pub(crate) struct Trial {
    pub y: Vector,
    /// Derivative at the new point (first stage of the next step).
    pub k_last: Vector,
    /// Local error estimate, componentwise.
    pub err: Vector,
}

/// One Dormand–Prince step from `(t, y)` with first stage `k1 = f(t, y)`.
pub(crate) fn step<F>(f: &mut F, t: f64, y: &Vector, k1: &Vector, h: f64) -> Trial
where
    F: FnMut(f64, &Vector) -> Vector,
{
    let k2 = f(t + C2 * h, &comb(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &comb(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(
        t + C4 * h,
        &comb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    );
    let k5 = f(
        t + C5 * h,
        &comb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &comb(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y_new = comb(
        y,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; DIM];
    for i in 0..DIM {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Trial {
        y: y_new,
        k_last: k7,
        err,
    }
}

/// RMS of `err_i / (atol_i + rtol·max(|y_i|, |y_new_i|))`.
pub(crate) fn error_norm(
    err: &Vector,
    y: &Vector,
    y_new: &Vector,
    rtol: f64,
    atol: &Vector,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..DIM {
        let scale = atol[i] + rtol * y[i].abs().max(y_new[i].abs());
        let scale = if scale > 0.0 {
            scale
        } else {
            f64::MIN_POSITIVE
        };
        let e = err[i] / scale;
        sum += e * e;
    }
    (sum / DIM as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifth_order_on_exponential() {
        // y' = y componentwise; global error at t = 1 should drop by ~2^5 per halving
        let mut f = |_t: f64, y: &Vector| *y;
        let run = |steps: usize, f: &mut dyn FnMut(f64, &Vector) -> Vector| {
            let h = 1.0 / steps as f64;
            let mut y = [1.0; DIM];
            let mut t = 0.0;
            for _ in 0..steps {
                let k1 = f(t, &y);
                let mut g = |t: f64, y: &Vector| f(t, y);
                y = step(&mut g, t, &y, &k1, h).y;
                t += h;
            }
            (y[0] - 1f64.exp()).abs()
        };
        let e1 = run(8, &mut f);
        let e2 = run(16, &mut f);
        let order = (e1 / e2).log2();
        assert!(order > 4.8 && order < 5.5, "{order}");
    }

    #[test]
    fn error_estimate_is_small_for_smooth_problem() {
        let mut f = |t: f64, _y: &Vector| [t.cos(), 0.0, 0.0, 0.0];
        let y = [0.0; DIM];
        let k1 = f(0.0, &y);
        let trial = step(&mut f, 0.0, &y, &k1, 0.1);
        assert!((trial.y[0] - 0.1f64.sin()).abs() < 1e-10);
        assert!(trial.err[0].abs() < 1e-8);
    }
}
