//! Image domain discretization and parallel-beam scan geometry.
//!
//! Pixels are indexed row-major, `p = j * nx + i`, with `i` running along x
//! and `j` along y. The grid is centered on the physical origin, as is the
//! detector array.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Square-pixel image grid centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGrid {
    nx: usize,
    ny: usize,
    pixel_size: f64,
    origin: [f64; 2],
}

impl ImageGrid {
    pub fn new(nx: usize, ny: usize, pixel_size: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid(format!("grid size must be positive, got {nx}x{ny}")));
        }
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::invalid(format!("pixel_size must be positive, got {pixel_size}")));
        }
        let origin = [-(nx as f64) * pixel_size / 2.0, -(ny as f64) * pixel_size / 2.0];
        Ok(ImageGrid { nx, ny, pixel_size, origin })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    /// Physical coordinates of the lower-left grid corner.
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Number of unknowns N.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.pixel_size
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.pixel_size
    }

    /// Upper-right grid corner.
    pub fn max_corner(&self) -> [f64; 2] {
        [self.origin[0] + self.width(), self.origin[1] + self.height()]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.pixel_size,
            self.origin[1] + (j as f64 + 0.5) * self.pixel_size,
        ]
    }

    pub fn center_of(&self, p: usize) -> [f64; 2] {
        self.pixel_center(p % self.nx, p / self.nx)
    }

    /// All pixel centers in index order.
    pub fn centers(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |p| self.center_of(p))
    }

    /// Pixel containing a physical point, using floor semantics so that a point
    /// on a seam belongs to the greater index. `None` outside the half-open box.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.origin[0]) / self.pixel_size).floor();
        let fj = ((y - self.origin[1]) / self.pixel_size).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Length of the grid diagonal.
    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Detector count that covers the whole grid at every angle when bins are
    /// one pixel wide.
    pub fn default_detector_count(&self) -> usize {
        (SQRT_2 * self.nx.max(self.ny) as f64).ceil() as usize
    }
}

/// A straight line `point + t * direction`, `direction` of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub point: [f64; 2],
    pub direction: [f64; 2],
}

/// Parallel-beam acquisition: one ray per detector bin and angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGeometry {
    angles: Vec<f64>,
    n_det: usize,
    det_spacing: f64,
}

impl ScanGeometry {
    pub fn new(angles: Vec<f64>, n_det: usize, det_spacing: f64) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::invalid("angle list is empty"));
        }
        if let Some(a) = angles.iter().find(|a| !(0.0..TWO_PI).contains(*a)) {
            return Err(Error::invalid(format!("angle {a} outside [0, 2pi)")));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("angles must be strictly increasing"));
        }
        if n_det == 0 {
            return Err(Error::invalid("detector count must be positive"));
        }
        if !(det_spacing > 0.0 && det_spacing.is_finite()) {
            return Err(Error::invalid(format!("det_spacing must be positive, got {det_spacing}")));
        }
        Ok(ScanGeometry { angles, n_det, det_spacing })
    }

    /// Geometry with the default detector layout for `grid`: bins one pixel
    /// wide, enough of them to cover the grid diagonal.
    pub fn for_grid(grid: &ImageGrid, angles: Vec<f64>) -> Result<Self> {
        Self::new(angles, grid.default_detector_count(), grid.pixel_size())
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_det(&self) -> usize {
        self.n_det
    }

    pub fn det_spacing(&self) -> f64 {
        self.det_spacing
    }

    /// Measurement count M.
    pub fn len(&self) -> usize {
        self.angles.len() * self.n_det
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed offset of detector bin `d` from the rotation center.
    pub fn detector_offset(&self, d: usize) -> f64 {
        (d as f64 - (self.n_det as f64 - 1.0) / 2.0) * self.det_spacing
    }

    /// The ray measured by bin `d` at angle index `a`.
    ///
    /// The detector axis is `(cos θ, sin θ)` and rays travel along
    /// `(-sin θ, cos θ)`, so at θ = 0 rays are vertical and bin offsets are x
    /// positions. Direction components within 1e-12 of zero are snapped so
    /// that axis-aligned angles produce exactly axis-aligned rays.
    pub fn ray(&self, a: usize, d: usize) -> Ray {
        let theta = self.angles[a];
        let (s, c) = snapped_sin_cos(theta);
        let offset = self.detector_offset(d);
        Ray { point: [offset * c, offset * s], direction: [-s, c] }
    }
}

fn snapped_sin_cos(theta: f64) -> (f64, f64) {
    let (mut s, mut c) = theta.sin_cos();
    if s.abs() < 1e-12 {
        s = 0.0;
        c = c.signum();
    } else if c.abs() < 1e-12 {
        c = 0.0;
        s = s.signum();
    }
    (s, c)
}

/// `count` equally spaced angles on the half-open range `[start, end)`.
pub fn uniform_angles(count: usize, range_start: f64, range_end: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("angle count must be positive"));
    }
    if !(range_end > range_start) || !range_start.is_finite() || !range_end.is_finite() {
        return Err(Error::invalid(format!("empty angle range [{range_start}, {range_end})")));
    }
    let step = (range_end - range_start) / count as f64;
    Ok((0..count).map(|k| range_start + k as f64 * step).collect())
}

/// `count` equally spaced angles on `[0, range_end)`, for limited-angle scans.
pub fn limited_angles(count: usize, range_end: f64) -> Result<Vec<f64>> {
    if !(range_end > 0.0 && range_end <= TWO_PI) {
        return Err(Error::invalid(format!("limited range end {range_end} outside (0, 2pi]")));
    }
    uniform_angles(count, 0.0, range_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_is_centered() {
        let g = ImageGrid::new(1, 1, 1.0).unwrap();
        assert_eq!(g.pixel_center(0, 0), [0.0, 0.0]);
    }

    #[test]
    fn grid_size_and_offsets() {
        assert_eq!(ImageGrid::new(64, 64, 1.0).unwrap().len(), 4096);
        let g = ImageGrid::new(2, 3, 0.5).unwrap();
        assert_eq!(g.pixel_center(0, 0), [-0.25, -0.5]);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(ImageGrid::new(0, 4, 1.0).is_err());
        assert!(ImageGrid::new(4, 0, 1.0).is_err());
        assert!(ImageGrid::new(4, 4, 0.0).is_err());
        assert!(ImageGrid::new(4, 4, -1.0).is_err());
    }

    #[test]
    fn centers_sum_to_zero() {
        for &(nx, ny, ps) in &[(7, 5, 0.3), (64, 64, 1.0), (3, 8, 2.5)] {
            let g = ImageGrid::new(nx, ny, ps).unwrap();
            let mut pts: Vec<[f64; 2]> = g.centers().collect();
            let sx: f64 = pts.iter().map(|c| c[0]).sum();
            let sy: f64 = pts.iter().map(|c| c[1]).sum();
            assert!(sx.abs() < 1e-9 && sy.abs() < 1e-9);
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pts.dedup();
            assert_eq!(pts.len(), nx * ny);
        }
    }

    #[test]
    fn four_views_over_half_turn() {
        let a = uniform_angles(4, 0.0, PI).unwrap();
        assert_eq!(a, vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]);
        assert_eq!(uniform_angles(1, 0.0, PI).unwrap(), vec![0.0]);
        let a = uniform_angles(8, 0.0, PI).unwrap();
        for (k, t) in a.iter().enumerate() {
            assert!((t - k as f64 * PI / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn limited_ranges() {
        for end in [PI / 2.0, 2.0 * PI / 3.0] {
            let a = limited_angles(30, end).unwrap();
            assert_eq!(a.len(), 30);
            assert!(a.iter().all(|&t| (0.0..end).contains(&t)));
        }
        assert_eq!(limited_angles(1, PI).unwrap(), vec![0.0]);
        assert!(limited_angles(3, 0.0).is_err());
        assert!(limited_angles(3, 7.0).is_err());
    }

    #[test]
    fn empty_range_is_rejected() {
        assert!(uniform_angles(4, 1.0, 1.0).is_err());
        assert!(uniform_angles(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(ScanGeometry::new(vec![], 3, 1.0).is_err());
        assert!(ScanGeometry::new(vec![0.5, 0.2], 3, 1.0).is_err());
        assert!(ScanGeometry::new(vec![7.0], 3, 1.0).is_err());
        let g = ScanGeometry::new(vec![0.0, 1.0], 91, 1.0).unwrap();
        assert_eq!(g.len(), 182);
        assert_eq!(g.detector_offset(45), 0.0);
    }

    #[test]
    fn default_detector_count_covers_diagonal() {
        let g = ImageGrid::new(64, 64, 1.0).unwrap();
        assert_eq!(g.default_detector_count(), 91);
    }

    #[test]
    fn axis_aligned_rays_are_exact() {
        let g = ScanGeometry::new(uniform_angles(4, 0.0, PI).unwrap(), 3, 1.0).unwrap();
        assert_eq!(g.ray(0, 2).direction, [0.0, 1.0]);
        assert_eq!(g.ray(0, 2).point, [1.0, 0.0]);
        assert_eq!(g.ray(2, 0).direction, [-1.0, 0.0]);
        assert_eq!(g.ray(2, 0).point, [0.0, -1.0]);
    }

    proptest::proptest! {
        #[test]
        fn uniform_angles_strictly_increasing(count in 1usize..200, start in -3.0f64..3.0, width in 1e-3f64..7.0) {
            let a = uniform_angles(count, start, start + width).unwrap();
            proptest::prop_assert_eq!(a.len(), count);
            proptest::prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
            proptest::prop_assert!(a.iter().all(|&t| t < start + width));
        }
    }
}
