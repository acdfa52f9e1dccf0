//! Image grid, inpainting region and the index maps shared by every operator.
//!
//! Coordinates are `(i, j)` with `i` the row and `j` the column. Vectors over
//! the region use the natural ordering: primary key `j`, secondary key `i`, so
//! `(i + 1, j)` directly follows `(i, j)` when both belong to the set.

use crate::error::{InpaintError, Result};

/// Minimum distance between a region pixel and the image border.
pub const BORDER_MARGIN: usize = 3;

/// Manhattan radius of the dilation that turns the region into its extended set.
pub const DILATION_RADIUS: usize = 2;

/// Dense grayscale image with intensities stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
    /// Value that a normalized intensity of 1 maps back to when written as 8-bit.
    scale: f64,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(InpaintError::LengthMismatch {
                expected: height * width,
                found: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
            scale: 255.0,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
            scale: 255.0,
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            data,
            scale: 255.0,
        }
    }

    /// Divides every intensity by the maximum so that the brightest pixel is 1.
    ///
    /// The previous maximum times the current scale becomes the new scale, so
    /// denormalizing recovers the original 8-bit values.
    pub fn normalize_max(&mut self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(InpaintError::UnsupportedFormat("non-finite intensity".into()));
        }
        let max = self.data.iter().copied().fold(0.0f64, f64::max);
        if max <= 0.0 {
            return Err(InpaintError::AllZeroImage);
        }
        for v in &mut self.data {
            *v /= max;
        }
        self.scale *= max;
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) {
        self.scale = scale;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.width + j] = value;
    }

    /// 8-bit values `round(scale * clamp(u, 0, 1))`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&u| {
                let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
                (self.scale * u).round().clamp(0.0, 255.0) as u8
            })
            .collect()
    }
}

/// Binary mask; `true` marks a pixel to be inpainted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(InpaintError::LengthMismatch {
                expected: height * width,
                found: bits.len(),
            });
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                bits.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            bits,
        }
    }

    /// Any nonzero pixel marks the region.
    pub fn from_image(image: &GrayImage) -> Self {
        Self {
            height: image.height,
            width: image.width,
            bits: image.data.iter().map(|&v| v != 0.0).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.width + j]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

const NO_INDEX: usize = usize::MAX;

/// Which of the two index sets a vector lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Omega,
    OmegaPrime,
}

/// The inpainting region, its radius-2 dilation and the natural-ordering maps.
#[derive(Debug, Clone)]
pub struct InpaintDomain {
    height: usize,
    width: usize,
    omega: Vec<(usize, usize)>,
    omega_prime: Vec<(usize, usize)>,
    idx_omega: Vec<usize>,
    idx_omega_prime: Vec<usize>,
}

impl InpaintDomain {
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn omega(&self) -> &[(usize, usize)] {
        &self.omega
    }

    pub fn omega_prime(&self) -> &[(usize, usize)] {
        &self.omega_prime
    }

    pub fn len_omega(&self) -> usize {
        self.omega.len()
    }

    pub fn len_omega_prime(&self) -> usize {
        self.omega_prime.len()
    }

    pub fn index_omega(&self, i: usize, j: usize) -> Option<usize> {
        match self.idx_omega[i * self.width + j] {
            NO_INDEX => None,
            k => Some(k),
        }
    }

    pub fn index_omega_prime(&self, i: usize, j: usize) -> Option<usize> {
        match self.idx_omega_prime[i * self.width + j] {
            NO_INDEX => None,
            k => Some(k),
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.idx_omega[i * self.width + j] != NO_INDEX
    }

    /// For each entry of Ω, its position in the Ω′ vector.
    pub fn omega_in_prime(&self) -> Vec<usize> {
        self.omega
            .iter()
            .map(|&(i, j)| self.idx_omega_prime[i * self.width + j])
            .collect()
    }

    fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if shape != (self.height, self.width) {
            return Err(InpaintError::ShapeMismatch {
                expected: (self.height, self.width),
                found: shape,
            });
        }
        Ok(())
    }

    /// Embeds an Ω-vector into an Ω′-vector, zero on the boundary ring.
    pub fn embed(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.omega.len() {
            return Err(InpaintError::LengthMismatch {
                expected: self.omega.len(),
                found: values.len(),
            });
        }
        let mut out = vec![0.0; self.omega_prime.len()];
        for (&p, &v) in self.omega_in_prime().iter().zip(values) {
            out[p] = v;
        }
        Ok(out)
    }
}

/// Extracts Ω from the nonzero mask pixels and dilates it into Ω′.
pub fn extract_domain(image: &GrayImage, mask: &Mask) -> Result<InpaintDomain> {
    if mask.shape() != image.shape() {
        return Err(InpaintError::ShapeMismatch {
            expected: image.shape(),
            found: mask.shape(),
        });
    }
    let (height, width) = image.shape();
    let mut omega = Vec::new();
    for j in 0..width {
        for i in 0..height {
            if mask.get(i, j) {
                omega.push((i, j));
            }
        }
    }
    if omega.is_empty() {
        return Err(InpaintError::EmptyMask);
    }
    for &(i, j) in &omega {
        if i < BORDER_MARGIN
            || j < BORDER_MARGIN
            || i + BORDER_MARGIN >= height
            || j + BORDER_MARGIN >= width
        {
            return Err(InpaintError::MaskTouchesBorder {
                row: i,
                col: j,
                margin: BORDER_MARGIN,
            });
        }
    }

    let r = DILATION_RADIUS as isize;
    let mut in_prime = vec![false; height * width];
    for &(i, j) in &omega {
        for di in -r..=r {
            let rest = r - di.abs();
            for dj in -rest..=rest {
                let ii = (i as isize + di) as usize;
                let jj = (j as isize + dj) as usize;
                in_prime[ii * width + jj] = true;
            }
        }
    }

    let mut idx_omega = vec![NO_INDEX; height * width];
    for (k, &(i, j)) in omega.iter().enumerate() {
        idx_omega[i * width + j] = k;
    }
    let mut omega_prime = Vec::new();
    let mut idx_omega_prime = vec![NO_INDEX; height * width];
    for j in 0..width {
        for i in 0..height {
            if in_prime[i * width + j] {
                idx_omega_prime[i * width + j] = omega_prime.len();
                omega_prime.push((i, j));
            }
        }
    }

    Ok(InpaintDomain {
        height,
        width,
        omega,
        omega_prime,
        idx_omega,
        idx_omega_prime,
    })
}

/// Reads the image on Ω (`u0`) or Ω′ (`u'`) in natural ordering.
pub fn restrict(image: &GrayImage, domain: &InpaintDomain, which: Region) -> Result<Vec<f64>> {
    domain.check_shape(image.shape())?;
    let coords = match which {
        Region::Omega => &domain.omega,
        Region::OmegaPrime => &domain.omega_prime,
    };
    Ok(coords.iter().map(|&(i, j)| image.get(i, j)).collect())
}

/// Copy of `image` with the Ω pixels replaced by `values`.
pub fn scatter(values: &[f64], domain: &InpaintDomain, image: &GrayImage) -> Result<GrayImage> {
    domain.check_shape(image.shape())?;
    if values.len() != domain.omega.len() {
        return Err(InpaintError::LengthMismatch {
            expected: domain.omega.len(),
            found: values.len(),
        });
    }
    let mut out = image.clone();
    for (&(i, j), &v) in domain.omega.iter().zip(values) {
        out.set(i, j, v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn single(h: usize, w: usize, pi: usize, pj: usize) -> Mask {
        Mask::from_fn(h, w, |i, j| i == pi && j == pj)
    }

    fn brute_force_prime(mask: &Mask) -> BTreeSet<(usize, usize)> {
        let (h, w) = mask.shape();
        let mut set = BTreeSet::new();
        for i in 0..h {
            for j in 0..w {
                for k in 0..h {
                    for l in 0..w {
                        if mask.get(k, l) && i.abs_diff(k) + j.abs_diff(l) <= 2 {
                            set.insert((i, j));
                        }
                    }
                }
            }
        }
        set
    }

    #[test]
    fn single_pixel_dilates_to_thirteen() {
        let img = GrayImage::filled(9, 9, 0.5);
        let d = extract_domain(&img, &single(9, 9, 4, 4)).unwrap();
        assert_eq!(d.len_omega(), 1);
        assert_eq!(d.len_omega_prime(), 13);
        for &(i, j) in d.omega_prime() {
            assert!(i.abs_diff(4) + j.abs_diff(4) <= 2);
        }
    }

    #[test]
    fn empty_mask_is_rejected() {
        let img = GrayImage::filled(9, 9, 0.5);
        let mask = Mask::from_fn(9, 9, |_, _| false);
        assert!(matches!(
            extract_domain(&img, &mask),
            Err(InpaintError::EmptyMask)
        ));
    }

    #[test]
    fn border_and_shape_errors() {
        let img = GrayImage::filled(9, 9, 0.5);
        assert!(matches!(
            extract_domain(&img, &single(9, 9, 2, 4)),
            Err(InpaintError::MaskTouchesBorder { .. })
        ));
        assert!(matches!(
            extract_domain(&img, &single(9, 9, 4, 6)),
            Err(InpaintError::MaskTouchesBorder { .. })
        ));
        assert!(extract_domain(&img, &single(9, 9, 5, 5)).is_ok());
        assert!(matches!(
            extract_domain(&img, &single(10, 9, 4, 4)),
            Err(InpaintError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn square_block_matches_pairwise_oracle() {
        let img = GrayImage::filled(50, 50, 0.5);
        let mask = Mask::from_fn(50, 50, |i, j| (20..30).contains(&i) && (20..30).contains(&j));
        let d = extract_domain(&img, &mask).unwrap();
        assert_eq!(d.len_omega(), 100);
        let oracle = brute_force_prime(&mask);
        let got: BTreeSet<_> = d.omega_prime().iter().copied().collect();
        assert_eq!(got, oracle);
        // 14x14 square minus the four 2-pixel corner triangles (3 pixels each)
        assert_eq!(d.len_omega_prime(), oracle.len());
    }

    #[test]
    fn restrict_follows_column_major_order() {
        let w = 9;
        let img = GrayImage::from_fn(9, w, |i, j| (i + j * w) as f64);
        let mask = Mask::from_fn(9, w, |i, j| (i, j) == (4, 5) || (i, j) == (5, 4) || (i, j) == (3, 5));
        let d = extract_domain(&img, &mask).unwrap();
        let mut coords = [(4, 5), (5, 4), (3, 5)];
        coords.sort_by_key(|&(i, j)| (j, i));
        let expected: Vec<f64> = coords.iter().map(|&(i, j)| (i + j * w) as f64).collect();
        assert_eq!(restrict(&img, &d, Region::Omega).unwrap(), expected);
        assert_eq!(expected, vec![41.0, 48.0, 49.0]);
    }

    #[test]
    fn constant_image_restricts_to_constant() {
        let img = GrayImage::filled(12, 12, 0.25);
        let mask = Mask::from_fn(12, 12, |i, j| (4..8).contains(&i) && (3..9).contains(&j));
        let d = extract_domain(&img, &mask).unwrap();
        assert!(restrict(&img, &d, Region::OmegaPrime)
            .unwrap()
            .iter()
            .all(|&v| v == 0.25));
    }

    #[test]
    fn scatter_replaces_exactly_omega() {
        let img = GrayImage::from_fn(12, 12, |i, j| (i * 12 + j) as f64 / 200.0);
        let mask = Mask::from_fn(12, 12, |i, j| (4..8).contains(&i) && (5..7).contains(&j));
        let d = extract_domain(&img, &mask).unwrap();
        let zeroed = scatter(&vec![0.0; d.len_omega()], &d, &img).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                if d.contains(i, j) {
                    assert_eq!(zeroed.get(i, j), 0.0);
                } else {
                    assert_eq!(zeroed.get(i, j).to_bits(), img.get(i, j).to_bits());
                }
            }
        }
        let back = scatter(&restrict(&img, &d, Region::Omega).unwrap(), &d, &img).unwrap();
        assert_eq!(back, img);
        assert!(matches!(
            scatter(&[1.0], &d, &img),
            Err(InpaintError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn normalization_divides_by_max() {
        let mut img = GrayImage::new(1, 3, vec![0.0, 128.0, 255.0]).unwrap();
        img.set_scale(1.0);
        img.normalize_max().unwrap();
        assert_eq!(img.data(), &[0.0, 128.0 / 255.0, 1.0]);
        assert_eq!(img.to_u8(), vec![0, 128, 255]);
        let mut zero = GrayImage::filled(2, 2, 0.0);
        assert!(matches!(zero.normalize_max(), Err(InpaintError::AllZeroImage)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_mask() -> impl Strategy<Value = Mask> {
            (7usize..=32, 7usize..=32).prop_flat_map(|(h, w)| {
                proptest::collection::vec(proptest::bool::weighted(0.2), (h - 6) * (w - 6))
                    .prop_map(move |inner| {
                        Mask::from_fn(h, w, |i, j| {
                            i >= 3 && j >= 3 && i + 3 < h && j + 3 < w && inner[(i - 3) * (w - 6) + (j - 3)]
                        })
                    })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn dilation_matches_brute_force(mask in arb_mask()) {
                prop_assume!(mask.count() > 0);
                let (h, w) = mask.shape();
                let img = GrayImage::filled(h, w, 1.0);
                let d = extract_domain(&img, &mask).unwrap();
                let got: BTreeSet<_> = d.omega_prime().iter().copied().collect();
                prop_assert_eq!(got, brute_force_prime(&mask));
                for &(i, j) in d.omega() {
                    prop_assert!(d.index_omega_prime(i, j).is_some());
                }
            }

            #[test]
            fn orderings_are_strict_and_bijective(mask in arb_mask()) {
                prop_assume!(mask.count() > 0);
                let (h, w) = mask.shape();
                let img = GrayImage::filled(h, w, 1.0);
                let d = extract_domain(&img, &mask).unwrap();
                for pair in d.omega().windows(2) {
                    prop_assert!((pair[0].1, pair[0].0) < (pair[1].1, pair[1].0));
                }
                for pair in d.omega_prime().windows(2) {
                    prop_assert!((pair[0].1, pair[0].0) < (pair[1].1, pair[1].0));
                }
                for (k, &(i, j)) in d.omega().iter().enumerate() {
                    prop_assert_eq!(d.index_omega(i, j), Some(k));
                }
                for (k, &(i, j)) in d.omega_prime().iter().enumerate() {
                    prop_assert_eq!(d.index_omega_prime(i, j), Some(k));
                }
            }

            #[test]
            fn restrict_scatter_round_trip(mask in arb_mask(), seed in any::<u64>()) {
                prop_assume!(mask.count() > 0);
                let (h, w) = mask.shape();
                let img = GrayImage::from_fn(h, w, |i, j| ((i * 31 + j * 17) as u64 ^ seed) as f64 % 97.0 / 97.0);
                let d = extract_domain(&img, &mask).unwrap();
                let values: Vec<f64> = (0..d.len_omega()).map(|k| (k as f64 * 0.37).sin()).collect();
                let out = scatter(&values, &d, &img).unwrap();
                prop_assert_eq!(restrict(&out, &d, Region::Omega).unwrap(), values);
                let back = scatter(&restrict(&img, &d, Region::Omega).unwrap(), &d, &img).unwrap();
                prop_assert_eq!(back, img);
            }
        }
    }
}
