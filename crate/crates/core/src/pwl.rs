//! Piecewise-linear sigmoid: coefficient tables, evaluation, and error scans.
//!
//! The approximation splits the positive axis [0, 8] into segments of width
//! `k` and stores one slope/intercept pair per segment (the hardware keeps
//! these in two small BRAMs). Outside [-8, 8] the function saturates to 0/1;
//! negative inputs are served by mirroring the positive table.

use crate::error::{Error, Result};
use crate::nn::sigmoid_exact;

/// Segment widths that keep 8/k an exact integer and x/k an exact division.
pub const VALID_SEGMENT_WIDTHS: [f64; 7] = [8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.125];

/// Slope/intercept tables for the piecewise-linear sigmoid.
///
/// Segment `i` covers `[i*k, (i+1)*k)` and evaluates as `a[i]*x + b[i]`.
/// `b[0]` is exactly 0.5 so the two linear branches agree at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlTable {
    k: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PwlTable {
    pub fn segment_width(&self) -> f64 {
        self.k
    }

    pub fn segments(&self) -> usize {
        self.a.len()
    }

    pub fn slopes(&self) -> &[f64] {
        &self.a
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.b
    }

    /// CSV dump of the table: one row per segment with its covered interval.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment_index,x_lo,x_hi,a,b\n");
        for i in 0..self.segments() {
            let x_lo = i as f64 * self.k;
            let x_hi = (i + 1) as f64 * self.k;
            out.push_str(&format!("{i},{x_lo},{x_hi},{},{}\n", self.a[i], self.b[i]));
        }
        out
    }
}

/// Builds the coefficient tables by chord interpolation of the exact sigmoid
/// at segment endpoints. Chords make the table continuous across interior
/// boundaries by construction.
pub fn build_pwl_table(k: f64) -> Result<PwlTable> {
    if !VALID_SEGMENT_WIDTHS.contains(&k) {
        return Err(Error::InvalidSegmentWidth(k));
    }
    let segments = (8.0 / k).round() as usize;
    let mut a = Vec::with_capacity(segments);
    let mut b = Vec::with_capacity(segments);
    for i in 0..segments {
        let x_lo = i as f64 * k;
        let x_hi = (i + 1) as f64 * k;
        let slope = (sigmoid_exact(x_hi) - sigmoid_exact(x_lo)) / k;
        a.push(slope);
        b.push(sigmoid_exact(x_lo) - slope * x_lo);
    }
    debug_assert!(a.iter().all(|&s| s > 0.0));
    debug_assert_eq!(b[0], 0.5);
    Ok(PwlTable { k, a, b })
}

/// Evaluates the four-branch piecewise-linear sigmoid.
///
/// Branches: 0 for x <= -8; 1 for x > 8; `a[floor(x/k)]*x + b[floor(x/k)]`
/// for 0 < x <= 8; `1 + a[floor(-x/k)]*x - b[floor(-x/k)]` for -8 < x <= 0.
/// At x == 8 the index would overrun the table by one; it clamps to the last
/// segment, which keeps the value on the chord through sigmoid(8).
pub fn pwl_sigmoid(table: &PwlTable, x: f64) -> f64 {
    if x <= -8.0 {
        return 0.0;
    }
    if x > 8.0 {
        return 1.0;
    }
    let last = table.segments() - 1;
    if x > 0.0 {
        let idx = ((x / table.k).floor() as usize).min(last);
        table.a[idx] * x + table.b[idx]
    } else {
        let idx = (((-x) / table.k).floor() as usize).min(last);
        1.0 + table.a[idx] * x - table.b[idx]
    }
}

/// Slope of the piecewise approximation at `x` (zero in the saturated
/// regions). This is the almost-everywhere derivative of `pwl_sigmoid`.
pub fn pwl_slope(table: &PwlTable, x: f64) -> f64 {
    if x <= -8.0 || x > 8.0 {
        return 0.0;
    }
    let last = table.segments() - 1;
    let idx = ((x.abs() / table.k).floor() as usize).min(last);
    table.a[idx]
}

/// Dense uniform scan of [-10, 10] against the exact sigmoid.
///
/// Returns the largest |pwl - exact| and the x where it occurred. `samples`
/// must be at least 1000 so the scan cannot miss a whole segment.
pub fn pwl_max_error(table: &PwlTable, samples: usize) -> (f64, f64) {
    assert!(samples >= 1000, "error scan needs at least 1000 samples");
    let mut max_err = 0.0;
    let mut argmax = -10.0;
    for i in 0..samples {
        let x = -10.0 + 20.0 * i as f64 / (samples - 1) as f64;
        let err = (pwl_sigmoid(table, x) - sigmoid_exact(x)).abs();
        if err > max_err {
            max_err = err;
            argmax = x;
        }
    }
    (max_err, argmax)
}

/// Activation applied at the end of a forward pass.
///
/// `Linear` (no activation) exists for test composability; the hardware path
/// uses the piecewise table and references use the exact sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Linear,
    ExactSigmoid,
    PwlSigmoid(PwlTable),
}

impl Activation {
    pub fn apply_f64(&self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::ExactSigmoid => sigmoid_exact(x),
            Activation::PwlSigmoid(t) => pwl_sigmoid(t, x),
        }
    }

    /// f32 entry point for the tensor paths; evaluation happens in f64 and
    /// rounds once on the way out.
    pub fn apply_f32(&self, x: f32) -> f32 {
        match self {
            Activation::Linear => x,
            _ => self.apply_f64(x as f64) as f32,
        }
    }
}
