//! Small quadrature and special-function helpers shared by the propagator
//! and spectrum modules.

use crate::C64;

/// Composite Simpson rule over uniformly spaced samples.
///
/// `values.len()` must be odd (an even number of panels).
pub(crate) fn simpson(values: &[f64], h: f64) -> f64 {
    debug_assert!(values.len() >= 3 && values.len() % 2 == 1);
    let n = values.len() - 1;
    let mut acc = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Cumulative composite Simpson rule over uniformly spaced samples.
///
/// Even nodes accumulate full Simpson panels; odd nodes use the
/// three-point half-panel rule `h/12 * (5 f_{j-1} + 8 f_j - f_{j+1})`,
/// so every prefix is fourth-order accurate. `start` seeds the running
/// value (used to chain segments of differing step size).
pub(crate) fn cumulative_simpson<T>(values: &[T], h: f64, start: T) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    debug_assert!(values.len() % 2 == 1);
    let mut out = Vec::with_capacity(values.len());
    out.push(start);
    for j in 1..values.len() {
        if j % 2 == 0 {
            let panel = (values[j - 2] + values[j - 1] * 4.0 + values[j]) * (h / 3.0);
            out.push(out[j - 2] + panel);
        } else {
            let half =
                (values[j - 1] * 5.0 + values[j] * 8.0 + values[j + 1] * (-1.0)) * (h / 12.0);
            out.push(out[j - 1] + half);
        }
    }
    out
}

/// `phi1(z) = (e^z - 1)/z`, switching to the Taylor series for small `|z|`
/// where the direct form suffers catastrophic cancellation.
pub(crate) fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        // 1 + z/2 + z^2/6 + z^3/24 + z^4/120; truncation error < 1.4e-18.
        let z2 = z * z;
        C64::new(1.0, 0.0) + z * 0.5 + z2 / 6.0 + z2 * z / 24.0 + z2 * z2 / 120.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `∫_0^t e^{z s} ds = t * phi1(z t)` with the removable singularity at
/// `z = 0` handled by the series branch of [`phi1`].
pub(crate) fn exp_integral(z: C64, t: f64) -> C64 {
    phi1(z * t) * t
}
