//! Uniform-grid quadrature used by the energy and Lyapunov functionals.

/// Composite Simpson rule over `values` sampled on a uniform grid with spacing `h`.
///
/// `values.len() - 1` must be even; callers guarantee this through
/// [`crate::certificate::StateFunction`].
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n >= 2 && n.is_multiple_of(2), "simpson needs an even number of intervals");
    let mut odd = 0.0;
    let mut even = 0.0;
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + 4.0 * odd + 2.0 * even + values[n])
}

/// Running trapezoid integral: `out[k] = ∫_0^{x_k} f`.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}
