//! Finite-difference gradient verification.
//!
//! Central differences of a scalar loss are an oracle that is independent
//! of every analytic backward pass in this crate: they only ever call the
//! forward path. The layer tests and the acceptance suite both drive their
//! checks through these helpers.

/// Relative error as used by every gradient check:
/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central-difference gradient of `f` at `at`, one coordinate at a time.
pub fn central_difference<F>(mut f: F, at: &[f64], epsilon: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = at.to_vec();
    let mut grad = Vec::with_capacity(at.len());
    for i in 0..at.len() {
        let original = probe[i];
        probe[i] = original + epsilon;
        let plus = f(&probe);
        probe[i] = original - epsilon;
        let minus = f(&probe);
        probe[i] = original;
        grad.push((plus - minus) / (2.0 * epsilon));
    }
    grad
}

/// Worst relative error between an analytic gradient and its
/// finite-difference counterpart.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_recovered() {
        // f(x) = sum x_i^2 has gradient 2x
        let at = vec![0.5, -1.25, 3.0];
        let numeric = central_difference(|x| x.iter().map(|v| v * v).sum(), &at, 1e-5);
        let analytic: Vec<f64> = at.iter().map(|v| 2.0 * v).collect();
        assert!(max_relative_error(&analytic, &numeric) <= 1e-9);
    }

    #[test]
    fn relative_error_uses_absolute_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1e-12, 0.0) < 1e-3);
    }
}
