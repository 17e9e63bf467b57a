//! Finite-difference derivatives of sampled series and fields.
//!
//! All stencils keep the output length equal to the input length; the ends
//! use one-sided stencils of the same accuracy instead of trimming.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which first-derivative estimator to apply to a time series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDerivative {
    /// Second-order central stencil, one-sided second-order at the ends.
    Central,
    /// First-order forward difference `(f[i+1]-f[i])/h`; the last sample
    /// reuses the backward difference.
    Forward,
}

fn check(series: &[f64], step: f64, min_len: usize) -> Result<()> {
    if series.len() < min_len {
        return Err(Error::InvalidArgument(format!(
            "series length {} < {min_len}",
            series.len()
        )));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    Ok(())
}

/// `(f[i+1] - 2 f[i] + f[i-1]) / h^2` inside, one-sided second-order at the ends
/// (first-order when only three samples exist).
pub fn central_second_derivative(series: &[f64], h: f64) -> Result<Vec<f64>> {
    check(series, h, 3)?;
    let n = series.len();
    let h2 = h * h;
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (series[i + 1] - 2.0 * series[i] + series[i - 1]) / h2;
    }
    if n >= 4 {
        let f = series;
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    } else {
        out[0] = out[1];
        out[n - 1] = out[1];
    }
    Ok(out)
}

/// `(f[i+1] - f[i-1]) / 2h` inside, three-point one-sided at the ends.
pub fn central_first_derivative(series: &[f64], h: f64) -> Result<Vec<f64>> {
    check(series, h, 3)?;
    let mut out = vec![0.0; series.len()];
    central_first_derivative_into(series, h, &mut out);
    Ok(out)
}

/// Allocation-free kernel behind [`central_first_derivative`]; `series.len() >= 3`.
pub fn central_first_derivative_into(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let inv = 0.5 / h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv;
    }
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv;
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv;
}

/// First-order forward difference; needs at least two samples.
pub fn forward_first_derivative(series: &[f64], h: f64) -> Result<Vec<f64>> {
    check(series, h, 2)?;
    let mut out = vec![0.0; series.len()];
    forward_first_derivative_into(series, h, &mut out);
    Ok(out)
}

pub fn forward_first_derivative_into(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let inv = 1.0 / h;
    for i in 0..n - 1 {
        out[i] = (f[i + 1] - f[i]) * inv;
    }
    out[n - 1] = out[n - 2];
}

/// Dispatch on [`TimeDerivative`] writing into `out`.
pub fn time_derivative_into(kind: TimeDerivative, f: &[f64], h: f64, out: &mut [f64]) {
    match kind {
        TimeDerivative::Central => central_first_derivative_into(f, h, out),
        TimeDerivative::Forward => forward_first_derivative_into(f, h, out),
    }
}

/// Derivatives from a three-point Lagrange interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilResult {
    pub first_derivative: f64,
    pub second_derivative: f64,
    /// Truncation order of the first-derivative estimate.
    pub truncation_order: u32,
}

/// Derivatives of the parabola through `(ω_i, ω_{i+1}, ω_{i+2})` with spacings
/// `h1`, `h2`, evaluated at `η_{i+1} + s·h1`.
///
/// `s = -1`, `0`, `h2/h1` select the three nodes. With `h1 == h2` and `s = -1`
/// this is the three-point forward difference.
pub fn lagrange_three_point(w0: f64, w1: f64, w2: f64, h1: f64, h2: f64, s: f64) -> Result<StencilResult> {
    if !(h1 > 0.0 && h2 > 0.0) || !h1.is_finite() || !h2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "steps must be positive, got h1={h1}, h2={h2}"
        )));
    }
    if !s.is_finite() {
        return Err(Error::InvalidArgument("evaluation offset must be finite".into()));
    }
    let hs = h1 + h2;
    // Derivatives of the Lagrange basis polynomials at x = s*h1, nodes at -h1, 0, h2.
    let c0 = (2.0 * s * h1 - h2) / (h1 * hs);
    let c1 = -((2.0 * s + 1.0) * h1 - h2) / (h1 * h2);
    let c2 = (2.0 * s + 1.0) * h1 / (h2 * hs);
    let first = c0 * w0 + c1 * w1 + c2 * w2;
    let second = 2.0 * (h2 * w0 - hs * w1 + h1 * w2) / (h1 * h2 * hs);
    Ok(StencilResult {
        first_derivative: first,
        second_derivative: second,
        truncation_order: 2,
    })
}

/// Finite-difference weights for the `m`-th derivative at `x0` over arbitrary
/// distinct `nodes` (Fornberg's recursion).
pub fn fd_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    // c[j][k]: weight of node j for derivative k.
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Spatial derivatives of orders `1..=max_order` of a field stored node-major
/// (`n` nodes × `n_t` samples, row `i` is node `i`).
///
/// Interior rows use centred stencils of second-order accuracy; rows too close
/// to the boundary use the nearest window of `order + 2` nodes.
/// Returns one grid per order, same layout as the input.
pub fn field_spatial_derivatives(
    field: &[f64],
    n: usize,
    n_t: usize,
    dx: f64,
    max_order: usize,
) -> Result<Vec<Vec<f64>>> {
    if !(1..=4).contains(&max_order) {
        return Err(Error::InvalidArgument(format!("max_order must be in 1..=4, got {max_order}")));
    }
    if n < max_order + 1 {
        return Err(Error::InvalidArgument(format!(
            "grid of {n} nodes too small for derivative order {max_order}"
        )));
    }
    if field.len() != n * n_t {
        return Err(Error::InvalidArgument("field length does not match n × n_t".into()));
    }
    if !(dx > 0.0) {
        return Err(Error::InvalidArgument(format!("dx must be positive, got {dx}")));
    }
    let mut out = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        // Centred half-width giving second-order accuracy.
        let half = (order + 1) / 2;
        let width = (order + 2).min(n);
        let mut grid = vec![0.0; n * n_t];
        for i in 0..n {
            let (lo, hi) = if i >= half && i + half < n {
                (i - half, i + half)
            } else {
                let lo = i.saturating_sub(width / 2).min(n - width);
                (lo, lo + width - 1)
            };
            let nodes: Vec<f64> = (lo..=hi).map(|j| j as f64).collect();
            let w = fd_weights(i as f64, &nodes, order);
            let scale = dx.powi(order as i32);
            let row = &mut grid[i * n_t..(i + 1) * n_t];
            for (k, j) in (lo..=hi).enumerate() {
                let wk = w[k] / scale;
                if wk == 0.0 {
                    continue;
                }
                let src = &field[j * n_t..(j + 1) * n_t];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += wk * s;
                }
            }
        }
        out.push(grid);
    }
    Ok(out)
}
