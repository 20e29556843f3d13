//! Quadrature on the uniform periodic grid `x_k = k / N`, `k = 0..N`.
//!
//! Smooth periodic integrands use the rectangle rule, which coincides with
//! the trapezoid rule on periodic data and converges spectrally. Running
//! integrals use cell integrals of the local cubic interpolant, fourth order
//! in `1/N`; on a uniform periodic grid their cell weights sum to the
//! rectangle rule exactly, so `F(1)` agrees with [`integrate_periodic`].
//!
//! A function with one jump at `d` is integrated piece by piece, with the
//! break inserted as an extra node carrying the one-sided limits.

use super::NumericsError;

/// A single discontinuity on the torus with the one-sided limits there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Break {
    pub d: f64,
    /// Limit from the left, `f(d⁻)`.
    pub left: f64,
    /// Limit from the right, `f(d⁺)`.
    pub right: f64,
}

/// Grid nodes closer than this fraction of a cell to the break are dropped
/// from their piece, keeping interpolation weights bounded.
const MERGE_FRACTION: f64 = 0.05;

/// Mean of periodic samples, i.e. the rectangle rule on `[0, 1)`.
pub fn integrate_periodic(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Integral of the function equal to `left` on `[0, d)` and `right` on
/// `[d, 1)`, where both slices are full-grid samples of their branch.
///
/// Nodes in `[0, d)` take their value from `left`, the others from `right`;
/// `right[0]` supplies the value at `1⁻` and `brk` the branch values at `d`.
pub fn integrate_piecewise(left: &[f64], right: &[f64], brk: &Break) -> Result<f64, NumericsError> {
    if left.len() != right.len() {
        return Err(NumericsError::LengthMismatch {
            expected: left.len(),
            found: right.len(),
        });
    }
    if left.len() < 4 {
        return Err(NumericsError::GridTooSmall(left.len()));
    }
    let combined = combine(left, right, brk.d)?;
    let running = cumulative_with_break(&combined, brk, right[0])?;
    Ok(*running.last().unwrap_or(&0.0))
}

/// Merges two branch sample sets at `d`: `left` below it, `right` from it on.
pub fn combine(left: &[f64], right: &[f64], d: f64) -> Result<Vec<f64>, NumericsError> {
    check_break_point(d)?;
    let n = left.len();
    Ok((0..n)
        .map(|k| if node(k, n) < d { left[k] } else { right[k] })
        .collect())
}

/// Running integral `F(x_k) = ∫_0^{x_k} f` at the `N + 1` points
/// `x_0 = 0, ..., x_N = 1`.
///
/// Without a break the samples are treated as one smooth periodic function.
/// With a break, `[0, d]` and `[d, 1]` are integrated as separate pieces with
/// the one-sided limits inserted at `d`; the function is taken continuous
/// across `x = 0`, so `samples[0]` also closes the second piece at `1⁻`.
pub fn cumulative_integral(samples: &[f64], brk: Option<&Break>) -> Result<Vec<f64>, NumericsError> {
    let n = samples.len();
    if n < 4 {
        return Err(NumericsError::GridTooSmall(n));
    }
    match brk {
        None => Ok(cumulative_periodic(samples)),
        Some(b) => cumulative_with_break(samples, b, samples[0]),
    }
}

fn node(k: usize, n: usize) -> f64 {
    k as f64 / n as f64
}

fn check_break_point(d: f64) -> Result<(), NumericsError> {
    if !(0.0..1.0).contains(&d) {
        return Err(NumericsError::BreakOutOfRange(d));
    }
    Ok(())
}

fn cumulative_periodic(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..n {
        let fm = f[(k + n - 1) % n];
        let f0 = f[k];
        let f1 = f[(k + 1) % n];
        let f2 = f[(k + 2) % n];
        acc += h / 24.0 * (13.0 * (f0 + f1) - (fm + f2));
        out.push(acc);
    }
    out
}

fn cumulative_with_break(f: &[f64], brk: &Break, end_value: f64) -> Result<Vec<f64>, NumericsError> {
    check_break_point(brk.d)?;
    let n = f.len();
    let h = 1.0 / n as f64;
    let d = brk.d;
    let near_break = |x: f64| (x - d).abs() < MERGE_FRACTION * h;

    // Piece [0, d]: grid nodes below d plus the left limit at d.
    let (mut t1, mut v1) = (Vec::new(), Vec::new());
    if d > 0.0 {
        for k in 0..n {
            let x = node(k, n);
            if x >= d {
                break;
            }
            if k == 0 || !near_break(x) {
                t1.push(x);
                v1.push(f[k]);
            }
        }
        t1.push(d);
        v1.push(brk.left);
    }
    // Piece [d, 1]: right limit at d, grid nodes above d, value at 1⁻.
    let (mut t2, mut v2) = (vec![d], vec![brk.right]);
    for k in 0..n {
        let x = node(k, n);
        if x > d && !near_break(x) {
            t2.push(x);
            v2.push(f[k]);
        }
    }
    t2.push(1.0);
    v2.push(end_value);

    let run1 = cumulative_on_points(&t1, &v1);
    let run2 = cumulative_on_points(&t2, &v2);
    let head = run1.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let x = node(k, n);
        out.push(if x < d {
            integral_to(&t1, &v1, &run1, x)
        } else {
            head + integral_to(&t2, &v2, &run2, x)
        });
    }
    out.push(head + run2.last().copied().unwrap_or(0.0));
    Ok(out)
}

/// Running integral over arbitrary increasing points, using on each cell the
/// cubic through the four nearest points (fewer if the piece is short).
pub(crate) fn cumulative_on_points(t: &[f64], v: &[f64]) -> Vec<f64> {
    let m = t.len();
    let mut out = Vec::with_capacity(m);
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..m.saturating_sub(1) {
        acc += cell_integral(t, v, i, t[i], t[i + 1]);
        out.push(acc);
    }
    out
}

/// Integral of the interpolant of cell `i` over `[a, b] ⊆ [t_i, t_{i+1}]`.
fn cell_integral(t: &[f64], v: &[f64], i: usize, a: f64, b: f64) -> f64 {
    let m = t.len();
    let width = m.min(4);
    let start = i.saturating_sub(1).min(m - width);
    let pts = &t[start..start + width];
    let vals = &v[start..start + width];
    // Two-point Gauss-Legendre is exact for cubics.
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let off = half / 3f64.sqrt();
    half * (lagrange(pts, vals, mid - off) + lagrange(pts, vals, mid + off))
}

fn integral_to(t: &[f64], v: &[f64], running: &[f64], x: f64) -> f64 {
    let i = match t.iter().rposition(|&ti| ti <= x) {
        Some(i) if i + 1 < t.len() => i,
        Some(i) => return running[i],
        None => return 0.0,
    };
    running[i] + cell_integral(t, v, i, t[i], x)
}

fn lagrange(pts: &[f64], vals: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    for (i, (&xi, &yi)) in pts.iter().zip(vals).enumerate() {
        let mut w = 1.0;
        for (k, &xk) in pts.iter().enumerate() {
            if k != i {
                w *= (x - xk) / (xi - xk);
            }
        }
        sum += w * yi;
    }
    sum
}
