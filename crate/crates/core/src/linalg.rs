//! Small dense row-major helpers for the d x d matrices that appear on the hot
//! path. Everything writes into caller-owned buffers so simulating a path does
//! not allocate once the buffers have grown.

use crate::error::{Error, Result};

/// Inverts the row-major `d x d` matrix `a` into `out` by Gauss-Jordan
/// elimination with partial pivoting. `work` must hold `d * d` entries.
pub fn invert_into(a: &[f64], d: usize, out: &mut [f64], work: &mut [f64]) -> Result<()> {
    debug_assert_eq!(a.len(), d * d);
    if d == 1 {
        let v = a[0];
        if v == 0.0 || !v.is_finite() || !(1.0 / v).is_finite() {
            return Err(Error::SingularMatrix);
        }
        out[0] = 1.0 / v;
        return Ok(());
    }
    work[..d * d].copy_from_slice(a);
    for (r, row) in out[..d * d].chunks_mut(d).enumerate() {
        row.fill(0.0);
        row[r] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularMatrix);
    }
    for col in 0..d {
        let pivot_row = (col..d)
            .max_by(|&i, &j| work[i * d + col].abs().total_cmp(&work[j * d + col].abs()))
            .unwrap_or(col);
        let pivot = work[pivot_row * d + col];
        if pivot.abs() <= 1e-13 * scale {
            return Err(Error::SingularMatrix);
        }
        if pivot_row != col {
            for k in 0..d {
                work.swap(pivot_row * d + k, col * d + k);
                out.swap(pivot_row * d + k, col * d + k);
            }
        }
        let inv = 1.0 / pivot;
        for k in 0..d {
            work[col * d + k] *= inv;
            out[col * d + k] *= inv;
        }
        for row in 0..d {
            if row == col {
                continue;
            }
            let f = work[row * d + col];
            if f != 0.0 {
                for k in 0..d {
                    work[row * d + k] -= f * work[col * d + k];
                    out[row * d + k] -= f * out[col * d + k];
                }
            }
        }
    }
    Ok(())
}

/// Allocating convenience wrapper around [`invert_into`].
pub fn invert(a: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; d * d];
    let mut work = vec![0.0; d * d];
    invert_into(a, d, &mut out, &mut work)?;
    Ok(out)
}

pub fn transpose_into(a: &[f64], d: usize, out: &mut [f64]) {
    for r in 0..d {
        for c in 0..d {
            out[c * d + r] = a[r * d + c];
        }
    }
}

/// `out = a * b^T` for row-major `d x d` inputs. With `b = a` this is `a a^T`.
pub fn mul_transpose_into(a: &[f64], b: &[f64], d: usize, out: &mut [f64]) {
    for r in 0..d {
        for c in 0..d {
            out[r * d + c] = (0..d).map(|k| a[r * d + k] * b[c * d + k]).sum();
        }
    }
}

/// `out = a * v`.
pub fn mat_vec_into(a: &[f64], v: &[f64], d: usize, out: &mut [f64]) {
    for r in 0..d {
        out[r] = (0..d).map(|k| a[r * d + k] * v[k]).sum();
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `v^T a v`.
pub fn quadratic_form(a: &[f64], v: &[f64], d: usize) -> f64 {
    (0..d)
        .map(|r| v[r] * (0..d).map(|c| a[r * d + c] * v[c]).sum::<f64>())
        .sum()
}

/// `Tr(a b)`.
pub fn trace_of_product(a: &[f64], b: &[f64], d: usize) -> f64 {
    (0..d)
        .map(|r| (0..d).map(|k| a[r * d + k] * b[k * d + r]).sum::<f64>())
        .sum()
}
