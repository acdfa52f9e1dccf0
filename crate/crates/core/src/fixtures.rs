//! Synthetic test images used by the tests, the benchmarks and the CLI demos.

use crate::grid::{GrayImage, Mask};

/// Centered square hole of side `hole` in an `n`×`n` grid.
pub fn centered_hole(n: usize, hole: usize) -> Mask {
    let lo = (n - hole) / 2;
    let hi = lo + hole;
    Mask::from_fn(n, n, |i, j| (lo..hi).contains(&i) && (lo..hi).contains(&j))
}

/// Two-tone image: a vertical band of width `max(n/16, 4)` (intensity 0.8) on
/// a 0.2 background, crossing a centered square hole. The hole is filled with 0.
pub fn stripe(n: usize, hole: usize) -> (GrayImage, Mask) {
    let mask = centered_hole(n, hole);
    let w = (n / 16).max(4);
    let lo = (n - w) / 2;
    let img = GrayImage::from_fn(n, n, |i, j| {
        if mask.get(i, j) {
            0.0
        } else if (lo..lo + w).contains(&j) {
            0.8
        } else {
            0.2
        }
    });
    (img, mask)
}

/// Linear ramp `0.1 + 0.8 (i + 2j) / (3 (n - 1))` around a centered hole.
pub fn ramp(n: usize, hole: usize) -> (GrayImage, Mask) {
    let mask = centered_hole(n, hole);
    let d = 3.0 * (n - 1) as f64;
    let img = GrayImage::from_fn(n, n, |i, j| {
        if mask.get(i, j) {
            0.0
        } else {
            0.1 + 0.8 * (i + 2 * j) as f64 / d
        }
    });
    (img, mask)
}

/// `n`×`n` checkerboard of `cell`×`cell` squares alternating 0.25 and 0.75.
pub fn checker(n: usize, cell: usize) -> GrayImage {
    GrayImage::from_fn(n, n, |i, j| if (i / cell + j / cell).is_multiple_of(2) { 0.25 } else { 0.75 })
}
