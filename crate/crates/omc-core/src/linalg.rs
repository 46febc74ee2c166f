//! In-house dense helpers that keep the quadrature backend independent of
//! the eigendecomposition path.

use ndarray::Array2;

use crate::C64;

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
///
/// Dimensions here are tiny (a few tens), so the plain series after
/// scaling `||A|| <= 0.5` converges to machine precision well before the
/// fixed term cap.
pub(crate) fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|v| v / 2f64.powi(squarings as i32));

    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=24 {
        term = term.dot(&scaled) / C64::new(k as f64, 0.0);
        result += &term;
        let term_norm = term.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if term_norm < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Frobenius norm.
pub(crate) fn fro_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
