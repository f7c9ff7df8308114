//! Finite differences on uniform grids.

/// Derivative by fourth-order central differences in the interior,
/// second-order central one step from the boundary and one-sided at the
/// two endpoints.
pub fn central_gradient(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "need at least three samples");
    let mut out = vec![0.0; n];
    out[0] = (values[1] - values[0]) / h;
    out[n - 1] = (values[n - 1] - values[n - 2]) / h;
    for i in 1..n - 1 {
        out[i] = if i >= 2 && i + 2 < n {
            (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h)
        } else {
            (values[i + 1] - values[i - 1]) / (2.0 * h)
        };
    }
    out
}
