//! SIRT + Otsu comparison baseline and shape metrics.

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::projector::SystemMatrix;
use crate::solver::norm_sq;

const OTSU_BINS: usize = 256;

/// Simultaneous iterative reconstruction from a zero image, clamped to [0, 1]
/// after every sweep:
/// `u ← clamp(u + ω C Aᵀ R (b - A u))` with `R`, `C` the inverse row and
/// column sums (zero for empty rows or columns).
pub fn sirt(a: &SystemMatrix, b: &[f64], iterations: usize, relaxation: f64) -> Result<Vec<f64>> {
    sirt_from(a, b, vec![0.0; a.cols()], iterations, relaxation)
}

pub fn sirt_from(
    a: &SystemMatrix,
    b: &[f64],
    mut u: Vec<f64>,
    iterations: usize,
    relaxation: f64,
) -> Result<Vec<f64>> {
    if iterations == 0 {
        return Err(Error::invalid("SIRT needs at least one iteration"));
    }
    if !(relaxation > 0.0 && relaxation < 2.0) {
        return Err(Error::invalid(format!("SIRT relaxation must lie in (0, 2), got {relaxation}")));
    }
    if b.len() != a.rows() {
        return Err(Error::invalid("sinogram length does not match system rows"));
    }
    let inv = |s: f64| if s > 0.0 { 1.0 / s } else { 0.0 };
    let row_w: Vec<f64> = a.row_sums().into_iter().map(inv).collect();
    let col_w: Vec<f64> = a.col_sums().into_iter().map(inv).collect();
    for _ in 0..iterations {
        let au = a.apply(&u)?;
        let weighted: Vec<f64> = b.iter().zip(&au).zip(&row_w).map(|((bi, ai), w)| w * (bi - ai)).collect();
        let back = a.apply_transpose(&weighted)?;
        for ((up, bp), cw) in u.iter_mut().zip(&back).zip(&col_w) {
            *up = (*up + relaxation * cw * bp).clamp(0.0, 1.0);
        }
    }
    Ok(u)
}

/// Otsu binarization over a 256-bin histogram spanning the image's value
/// range. Returns the mask and the chosen bin: pixels in bins above it are
/// foreground. Ties pick the lower bin; a constant image gives an empty mask.
pub fn otsu_threshold(u: &[f64]) -> Result<(Mask, Option<usize>)> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("image contains non-finite values"));
    }
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if u.is_empty() || !(hi > lo) {
        return Ok((Mask::empty(u.len()), None));
    }
    let width = (hi - lo) / OTSU_BINS as f64;
    let bin_of = |v: f64| (((v - lo) / width) as usize).min(OTSU_BINS - 1);
    let bins: Vec<usize> = u.iter().map(|&v| bin_of(v)).collect();
    let mut hist = [0usize; OTSU_BINS];
    bins.iter().for_each(|&k| hist[k] += 1);

    let total = u.len() as f64;
    let level = |k: usize| k as f64 + 0.5;
    let sum_all: f64 = hist.iter().enumerate().map(|(k, &h)| h as f64 * level(k)).sum();
    let mut best: Option<(usize, f64)> = None;
    let (mut w0, mut sum0) = (0.0, 0.0);
    for (t, &h) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        w0 += h as f64;
        sum0 += h as f64 * level(t);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1).powi(2);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((t, between));
        }
    }
    match best {
        Some((t, _)) => Ok((Mask::new(bins.iter().map(|&k| k > t).collect()), Some(t))),
        None => Ok((Mask::empty(u.len()), None)),
    }
}

/// Shape and data-fit scores of one reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub jaccard: f64,
    pub pixel_error_fraction: f64,
    /// `√(‖A u - b‖² / M)`; absent when no measurements were supplied.
    pub sinogram_rmse: Option<f64>,
}

/// `|X ∩ Y| / |X ∪ Y|`, with two empty masks scoring 1.
pub fn jaccard(x: &Mask, y: &Mask) -> Result<f64> {
    let union = x.union_count(y)?;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(x.intersection_count(y)? as f64 / union as f64)
}

pub fn pixel_error_fraction(x: &Mask, y: &Mask) -> Result<f64> {
    let wrong = x.mismatch_count(y)?;
    Ok(if x.is_empty() { 0.0 } else { wrong as f64 / x.len() as f64 })
}

pub fn sinogram_rmse(a: &SystemMatrix, u: &[f64], b: &[f64]) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(Error::invalid("sinogram length does not match system rows"));
    }
    if b.is_empty() {
        return Ok(0.0);
    }
    let mut r = a.apply(u)?;
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    Ok((norm_sq(&r) / b.len() as f64).sqrt())
}

/// Mask-only comparison.
pub fn compare_masks(est: &Mask, truth: &Mask) -> Result<MetricReport> {
    Ok(MetricReport {
        jaccard: jaccard(est, truth)?,
        pixel_error_fraction: pixel_error_fraction(est, truth)?,
        sinogram_rmse: None,
    })
}

/// All metrics; the data residual is that of the estimated mask.
pub fn compare(est: &Mask, truth: &Mask, a: &SystemMatrix, b: &[f64]) -> Result<MetricReport> {
    let mut report = compare_masks(est, truth)?;
    report.sinogram_rmse = Some(sinogram_rmse(a, &est.to_image(), b)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn one_by_one() -> SystemMatrix {
        SystemMatrix::from_rows(1, vec![vec![(0, 1.0)]]).unwrap()
    }

    #[test]
    fn sirt_zero_data_stays_zero() {
        let a = SystemMatrix::from_rows(3, vec![vec![(0, 1.0), (1, 2.0)], vec![(2, 1.0)]]).unwrap();
        assert_eq!(sirt(&a, &[0.0, 0.0], 10, 1.0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn sirt_scalar_recursion() {
        // u_k = 1 - (1 - ω)^k
        for &omega in &[0.3, 0.7, 1.0] {
            for k in 1..6 {
                let u = sirt(&one_by_one(), &[1.0], k, omega).unwrap()[0];
                let expected = 1.0 - (1.0f64 - omega).powi(k as i32);
                assert!((u - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sirt_zero_matrix_is_noop() {
        let a = SystemMatrix::from_rows(2, vec![vec![], vec![]]).unwrap();
        assert_eq!(sirt(&a, &[1.0, 2.0], 5, 1.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn sirt_argument_checks() {
        assert!(sirt(&one_by_one(), &[1.0], 0, 1.0).is_err());
        assert!(sirt(&one_by_one(), &[1.0], 1, 0.0).is_err());
        assert!(sirt(&one_by_one(), &[1.0], 1, 2.0).is_err());
    }

    #[test]
    fn otsu_on_binary_and_constant() {
        let u = vec![0.0, 1.0, 1.0, 0.0, 1.0];
        let (m, _) = otsu_threshold(&u).unwrap();
        assert_eq!(m.to_image(), u);
        let (m, t) = otsu_threshold(&[0.4; 9]).unwrap();
        assert_eq!(m.count(), 0);
        assert_eq!(t, None);
        assert!(otsu_threshold(&[0.0, f64::NAN]).is_err());
    }

    /// Exhaustive scan: class variances computed from raw pixel values per cut.
    fn otsu_oracle(u: &[f64]) -> usize {
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = (hi - lo) / 256.0;
        let bin = |v: f64| (((v - lo) / w) as usize).min(255);
        let mut best = (0, -1.0);
        for t in 0..255 {
            let (low, high): (Vec<f64>, Vec<f64>) = u.iter().partition(|&&v| bin(v) <= t);
            if low.is_empty() || high.is_empty() {
                continue;
            }
            let mean = |s: &[f64]| s.iter().map(|&v| bin(v) as f64 + 0.5).sum::<f64>() / s.len() as f64;
            let score = low.len() as f64 * high.len() as f64 * (mean(&low) - mean(&high)).powi(2);
            if score > best.1 {
                best = (t, score);
            }
        }
        best.0
    }

    #[test]
    fn otsu_bimodal_matches_exhaustive_scan() {
        let mut u = vec![0.1; 40];
        u.extend(vec![0.9; 25]);
        u.extend([0.15, 0.12, 0.85, 0.5]);
        let (m, t) = otsu_threshold(&u).unwrap();
        let t = t.unwrap();
        assert_eq!(t, otsu_oracle(&u));
        let cut = 0.1 + (t as f64 + 1.0) * 0.8 / 256.0;
        assert!(cut > 0.15 && cut <= 0.85, "cut {cut}");
        assert!(m.bits()[..40].iter().all(|&b| !b));
        assert!(m.bits()[40..65].iter().all(|&b| b));
    }

    #[test]
    fn metric_cases() {
        let x = Mask::new(vec![true, true, false, false]);
        let r = compare_masks(&x, &x).unwrap();
        assert_eq!((r.jaccard, r.pixel_error_fraction), (1.0, 0.0));
        let y = Mask::new(vec![false, false, true, true]);
        assert_eq!(jaccard(&x, &y).unwrap(), 0.0);
        assert_eq!(pixel_error_fraction(&x, &y).unwrap(), 1.0);
        // |X| = |Y| = 2k, |X ∩ Y| = k with k = 3
        let x = Mask::new((0..9).map(|p| p < 6).collect());
        let y = Mask::new((0..9).map(|p| p >= 3).collect());
        assert!((jaccard(&x, &y).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&Mask::empty(4), &Mask::empty(4)).unwrap(), 1.0);
        assert!(jaccard(&Mask::empty(3), &Mask::empty(4)).is_err());
    }

    #[test]
    fn compare_reports_residual_of_estimate() {
        let a = SystemMatrix::from_rows(2, vec![vec![(0, 1.0), (1, 1.0)]]).unwrap();
        let est = Mask::new(vec![true, false]);
        let r = compare(&est, &est, &a, &[3.0]).unwrap();
        assert_eq!(r.sinogram_rmse, Some(2.0));
    }

    proptest! {
        #[test]
        fn jaccard_symmetric(bits in prop::collection::vec((any::<bool>(), any::<bool>()), 1..64)) {
            let x = Mask::new(bits.iter().map(|b| b.0).collect());
            let y = Mask::new(bits.iter().map(|b| b.1).collect());
            let j = jaccard(&x, &y).unwrap();
            prop_assert_eq!(j, jaccard(&y, &x).unwrap());
            prop_assert!((0.0..=1.0).contains(&j));
            prop_assert_eq!(j == 1.0, x == y);
        }

        #[test]
        fn otsu_affine_invariant(u in prop::collection::vec(0.0f64..1.0, 2..200), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(hi - lo > 1e-6);
            // Interior values sitting on a bin edge may legitimately move bins.
            let w = (hi - lo) / 256.0;
            prop_assume!(u.iter().all(|&x| {
                let pos = (x - lo) / w;
                x == lo || x == hi || (pos - pos.round()).abs() > 1e-6
            }));
            let v: Vec<f64> = u.iter().map(|x| scale * x + shift).collect();
            let (mu, tu) = otsu_threshold(&u).unwrap();
            let (mv, tv) = otsu_threshold(&v).unwrap();
            prop_assert_eq!(tu, tv);
            prop_assert_eq!(mu, mv);
        }
    }
}
