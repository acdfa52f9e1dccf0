//! Relative condition numbers in the `H^k` metrics `<u, (I - Lap)^k v>` and the
//! spectral check of the resolvent on a square region.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{InpaintError, Result};
use crate::precond::PreconditionerFactorization;

/// How the gradient norm enters the relative condition number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaFormula {
    /// `sqrt(<g, (I - Lap)^{-k} g>) * ‖u‖_{H^k} / E`
    #[default]
    Rooted,
    /// `<g, (I - Lap)^{-k} g> * ‖u‖_{H^k} / E`, without the square root.
    PaperFormula,
}

impl fmt::Display for KappaFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaFormula::Rooted => f.write_str("rooted"),
            KappaFormula::PaperFormula => f.write_str("paper-formula"),
        }
    }
}

impl FromStr for KappaFormula {
    type Err = InpaintError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rooted" => Ok(KappaFormula::Rooted),
            "paper-formula" => Ok(KappaFormula::PaperFormula),
            other => Err(InpaintError::InvalidConfig(format!(
                "unknown condition formula {other:?}"
            ))),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_order(k: u32) -> Result<()> {
    if k > 3 {
        return Err(InpaintError::InvalidConfig(format!(
            "metric order must be 0..=3, got {k}"
        )));
    }
    Ok(())
}

/// `<u0, (I - Lap)^k u0>`.
pub fn hk_norm_squared(u0: &[f64], fact: &PreconditionerFactorization, k: u32) -> Result<f64> {
    check_order(k)?;
    Ok(dot(u0, &fact.matrix().apply_pow(u0, k)?))
}

/// `<g, (I - Lap)^{-k} g>`, the squared `H^k` norm of the `H^k` gradient.
pub fn hk_gradient_norm_squared(
    g_el: &[f64],
    fact: &PreconditionerFactorization,
    k: u32,
) -> Result<f64> {
    check_order(k)?;
    Ok(dot(g_el, &fact.solve_k(g_el, k)?))
}

/// Combines precomputed inner products into the relative condition number.
pub fn kappa_from_products(
    grad_sq: f64,
    x_sq: f64,
    energy: f64,
    formula: KappaFormula,
) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(InpaintError::ZeroEnergy);
    }
    let grad = match formula {
        KappaFormula::Rooted => grad_sq.max(0.0).sqrt(),
        KappaFormula::PaperFormula => grad_sq,
    };
    Ok(grad * x_sq.max(0.0).sqrt() / energy)
}

pub fn relative_condition(
    u0: &[f64],
    g_el: &[f64],
    fact: &PreconditionerFactorization,
    k: u32,
    energy: f64,
    formula: KappaFormula,
) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(InpaintError::ZeroEnergy);
    }
    let grad_sq = hk_gradient_norm_squared(g_el, fact, k)?;
    let x_sq = hk_norm_squared(u0, fact, k)?;
    kappa_from_products(grad_sq, x_sq, energy, formula)
}

/// Condition numbers of one state in all four metrics, index = `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub iter: usize,
    pub kappa_rel: [f64; 4],
    pub hk_grad_norm: [f64; 4],
    pub x_hk_norm: [f64; 4],
    pub energy: f64,
}

pub fn condition_report(
    iter: usize,
    u0: &[f64],
    g_el: &[f64],
    fact: &PreconditionerFactorization,
    energy: f64,
    formula: KappaFormula,
) -> Result<ConditionReport> {
    let mut kappa_rel = [0.0; 4];
    let mut hk_grad_norm = [0.0; 4];
    let mut x_hk_norm = [0.0; 4];
    let mut pre = g_el.to_vec();
    let mut fwd = u0.to_vec();
    for k in 0..4u32 {
        if k > 0 {
            pre = fact.solve(&pre)?;
            fwd = fact.matrix().apply(&fwd)?;
        }
        let grad_sq = dot(g_el, &pre);
        let x_sq = dot(u0, &fwd);
        hk_grad_norm[k as usize] = grad_sq.max(0.0).sqrt();
        x_hk_norm[k as usize] = x_sq.max(0.0).sqrt();
        kappa_rel[k as usize] = kappa_from_products(grad_sq, x_sq, energy, formula)?;
    }
    Ok(ConditionReport {
        iter,
        kappa_rel,
        hk_grad_norm,
        x_hk_norm,
        energy,
    })
}

/// Dirichlet eigenvalue of `-Lap` on an `n x n` square for mode `(p, q)`, 1-based.
pub fn dirichlet_eigenvalue(n: usize, p: usize, q: usize) -> f64 {
    let h = PI / (2.0 * (n + 1) as f64);
    4.0 * (p as f64 * h).sin().powi(2) + 4.0 * (q as f64 * h).sin().powi(2)
}

/// Eigenvector `(p, q)` sampled in natural (column-major) order on the square.
pub fn dirichlet_mode(n: usize, p: usize, q: usize) -> Vec<f64> {
    let s = PI / (n + 1) as f64;
    let mut v = Vec::with_capacity(n * n);
    for col in 0..n {
        for row in 0..n {
            v.push((p as f64 * s * (row + 1) as f64).sin() * (q as f64 * s * (col + 1) as f64).sin());
        }
    }
    v
}

/// Max over all modes of `‖solve_k(v) - v / (1 + λ)^k‖ / ‖v / (1 + λ)^k‖`.
///
/// `fact` must belong to an `n x n` square region.
pub fn spectral_attenuation_check(fact: &PreconditionerFactorization, k: u32, n: usize) -> Result<f64> {
    if fact.dim() != n * n {
        return Err(InpaintError::InvalidDomain(format!(
            "factorization has dimension {}, expected a {n}x{n} square",
            fact.dim()
        )));
    }
    let mut worst = 0.0f64;
    for p in 1..=n {
        for q in 1..=n {
            let v = dirichlet_mode(n, p, q);
            let factor = (1.0 + dirichlet_eigenvalue(n, p, q)).powi(-(k as i32));
            let got = fact.solve_k(&v, k)?;
            let mut num = 0.0;
            let mut den = 0.0;
            for (g, x) in got.iter().zip(&v) {
                let want = x * factor;
                num += (g - want).powi(2);
                den += want * want;
            }
            worst = worst.max((num / den).sqrt());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{extract_domain, GrayImage, InpaintDomain, Mask};
    use crate::precond::factor_preconditioner;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> InpaintDomain {
        let size = n + 6;
        extract_domain(
            &GrayImage::filled(size, size, 0.0),
            &Mask::from_fn(size, size, |i, j| (3..n + 3).contains(&i) && (3..n + 3).contains(&j)),
        )
        .unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn order_zero_is_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fact = factor_preconditioner(&square(5)).unwrap();
        let u = random_vec(&mut rng, 25);
        let g = random_vec(&mut rng, 25);
        let e = 0.37;
        let want = dot(&g, &g).sqrt() * dot(&u, &u).sqrt() / e;
        let got = relative_condition(&u, &g, &fact, 0, e, KappaFormula::Rooted).unwrap();
        assert!((got - want).abs() <= 1e-14 * want);
        let paper = relative_condition(&u, &g, &fact, 0, e, KappaFormula::PaperFormula).unwrap();
        assert!((paper - dot(&g, &g) * dot(&u, &u).sqrt() / e).abs() <= 1e-13 * paper);
    }

    #[test]
    fn zero_energy_is_an_error() {
        let fact = factor_preconditioner(&square(2)).unwrap();
        assert!(matches!(
            relative_condition(&[1.0; 4], &[1.0; 4], &fact, 1, 0.0, KappaFormula::Rooted),
            Err(InpaintError::ZeroEnergy)
        ));
        assert!(relative_condition(&[1.0; 4], &[1.0; 4], &fact, 4, 1.0, KappaFormula::Rooted).is_err());
    }

    #[test]
    fn resolvent_contracts_and_attenuates_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fact = factor_preconditioner(&square(7)).unwrap();
        for _ in 0..20 {
            let g = random_vec(&mut rng, 49);
            let mut prev = dot(&g, &g);
            for k in 1..=3 {
                let cur = hk_gradient_norm_squared(&g, &fact, k).unwrap();
                assert!(cur <= prev);
                assert!(cur > 0.0);
                prev = cur;
            }
        }
    }

    #[test]
    fn matches_dense_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = square(8);
        let fact = factor_preconditioner(&d).unwrap();
        let n = fact.dim();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|c| {
                let mut e = vec![0.0; n];
                e[c] = 1.0;
                fact.matrix().apply(&e).unwrap()
            })
            .collect();
        let eig = DMatrix::from_fn(n, n, |r, c| cols[c][r]).symmetric_eigen();
        let u = DVector::from_vec(random_vec(&mut rng, n));
        let g = DVector::from_vec(random_vec(&mut rng, n));
        let uc = eig.eigenvectors.transpose() * &u;
        let gc = eig.eigenvectors.transpose() * &g;
        let e = 0.05;
        for k in 0..=3i32 {
            let gs: f64 = gc.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c * c * l.powi(-k)).sum();
            let xs: f64 = uc.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c * c * l.powi(k)).sum();
            let want = gs.sqrt() * xs.sqrt() / e;
            let got = relative_condition(u.as_slice(), g.as_slice(), &fact, k as u32, e, KappaFormula::Rooted).unwrap();
            assert!((got - want).abs() <= 1e-10 * want, "k = {k}");
        }
        let report = condition_report(0, u.as_slice(), g.as_slice(), &fact, e, KappaFormula::Rooted).unwrap();
        for k in 0..4u32 {
            let direct = relative_condition(u.as_slice(), g.as_slice(), &fact, k, e, KappaFormula::Rooted).unwrap();
            assert!((report.kappa_rel[k as usize] - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn lowest_mode_factor() {
        let fact = factor_preconditioner(&square(8)).unwrap();
        let lam = 8.0 * (PI / 18.0).sin().powi(2);
        assert!((dirichlet_eigenvalue(8, 1, 1) - lam).abs() < 1e-15);
        let v = dirichlet_mode(8, 1, 1);
        let got = fact.solve(&v).unwrap();
        for (g, x) in got.iter().zip(&v) {
            assert!((g - x / (1.0 + lam)).abs() < 1e-12);
        }
    }

    #[test]
    fn attenuation_check_on_eight_by_eight() {
        let fact = factor_preconditioner(&square(8)).unwrap();
        for k in 1..=3 {
            assert!(spectral_attenuation_check(&fact, k, 8).unwrap() <= 1e-10);
        }
        assert!(spectral_attenuation_check(&fact, 1, 7).is_err());
    }

    #[test]
    fn constant_is_not_a_dirichlet_mode() {
        let fact = factor_preconditioner(&square(6)).unwrap();
        let c = vec![1.0; 36];
        let got = fact.solve(&c).unwrap();
        let ratios: Vec<f64> = got.iter().map(|g| g / 1.0).collect();
        let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) - ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-3);
    }
}
