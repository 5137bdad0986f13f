use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 8;
pub const MAX_PRECISION: u32 = 12;

/// `round(x * 10^p)`, rounding half away from zero.
pub fn quantize(x: f64, p: u32) -> Result<i64> {
    let scaled = (x * 10f64.powi(p as i32)).round();
    if !scaled.is_finite() || scaled.abs() >= 9.0e18 {
        return Err(Error::NumericFailure(format!("{x} cannot be quantized at precision {p}")));
    }
    Ok(scaled as i64)
}

pub fn dequantize(q: i64, p: u32) -> f64 {
    q as f64 / 10f64.powi(p as i32)
}

/// Row-major integer image of a matrix.
pub(crate) fn quantize_rows(m: &DMatrix<f64>, p: u32) -> Result<Vec<Vec<i64>>> {
    if p > MAX_PRECISION {
        return Err(crate::error::invalid(format!("precision {p} exceeds {MAX_PRECISION}")));
    }
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| quantize(m[(r, c)], p)).collect())
        .collect()
}

pub(crate) fn abs_row(row: &[i64]) -> Vec<i64> {
    row.iter().map(|x| x.abs()).collect()
}

/// Elementwise product; exact for any pair of quantized entries.
pub(crate) fn product(a: &[i64], b: &[i64]) -> Vec<i128> {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).collect()
}
