use crate::error::{InpaintError, Result};
use crate::grid::{GrayImage, InpaintDomain};

/// Fills Ω with the discrete harmonic extension of the surrounding pixels.
///
/// Gauss-Seidel sweeps in natural order with over-relaxation `omega` until the
/// largest update of a sweep drops below `tol`. The starting guess is the mean
/// of the pixels adjacent to Ω, so the result does not depend on whatever the
/// input held inside the hole.
pub fn sor_fill(
    image: &GrayImage,
    domain: &InpaintDomain,
    omega: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<GrayImage> {
    if image.shape() != domain.shape() {
        return Err(InpaintError::ShapeMismatch {
            expected: domain.shape(),
            found: image.shape(),
        });
    }
    if !(omega > 0.0 && omega < 2.0) {
        return Err(InpaintError::InvalidConfig(format!(
            "SOR relaxation must lie in (0, 2), got {omega}"
        )));
    }

    let mut out = image.clone();
    let mut sum = 0.0;
    let mut count = 0usize;
    for &(i, j) in domain.omega_prime() {
        if domain.contains(i, j) {
            continue;
        }
        let touches = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            .iter()
            .any(|&(a, b)| domain.contains(a, b));
        if touches {
            sum += image.get(i, j);
            count += 1;
        }
    }
    let guess = if count > 0 { sum / count as f64 } else { 0.0 };
    for &(i, j) in domain.omega() {
        out.set(i, j, guess);
    }

    let mut last_update = f64::INFINITY;
    for _ in 0..max_sweeps {
        let mut max_update = 0.0f64;
        for &(i, j) in domain.omega() {
            let avg = 0.25 * (out.get(i - 1, j) + out.get(i + 1, j) + out.get(i, j - 1) + out.get(i, j + 1));
            let old = out.get(i, j);
            let new = old + omega * (avg - old);
            out.set(i, j, new);
            max_update = max_update.max((new - old).abs());
        }
        if !max_update.is_finite() {
            return Err(InpaintError::NonFiniteValues { iter: 0 });
        }
        last_update = max_update;
        if max_update < tol {
            return Ok(out);
        }
    }
    Err(InpaintError::SorDidNotConverge {
        iters: max_sweeps,
        last_update,
    })
}
