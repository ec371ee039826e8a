//! Float helpers shared by every module.
//!
//! Threshold comparisons carry a relative tolerance so that multiplying every
//! distance by a constant never flips a tie. All radii in the constructions
//! are ratios times a distance, so the tolerance is relative, never absolute.

use alloc::vec::Vec;

/// Relative slack used by every threshold comparison.
pub const REL_TOL: f64 = 1e-9;

/// `d ≤ r` up to relative tolerance (closed-ball membership).
#[inline]
pub fn le(d: f64, r: f64) -> bool {
    d <= r * (1.0 + REL_TOL)
}

/// `d < r` up to relative tolerance (open-ball membership).
#[inline]
pub fn lt(d: f64, r: f64) -> bool {
    d < r * (1.0 - REL_TOL)
}

/// `d ≥ r` up to relative tolerance.
#[inline]
pub fn ge(d: f64, r: f64) -> bool {
    !lt(d, r)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Ratio of the geometric search grids used by the estimators.
pub fn grid_ratio() -> f64 {
    powf(2.0, 0.25)
}

/// Rank of each value after merging runs of sorted values that agree up to
/// relative tolerance. Equal ranks mark ties that scaling may reorder.
pub fn tie_ranks(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = alloc::vec![0; xs.len()];
    let mut rank = 0;
    for w in 0..idx.len() {
        if w > 0 && lt(xs[idx[w - 1]], xs[idx[w]]) {
            rank += 1;
        }
        ranks[idx[w]] = rank;
    }
    ranks
}
