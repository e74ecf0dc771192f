//! Exact ray–pixel intersection lengths and the sparse system matrix.
//!
//! Each ray is clipped to the grid box, then split at every interior pixel
//! boundary it crosses. Segment midpoints identify the pixel, so a ray lying
//! exactly on a seam is attributed to the pixel with the greater index, and a
//! ray on the box's upper edge misses the grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, Ray, ScanGeometry};

/// Pixels crossed by `ray`, in ray order, with their intersection lengths.
///
/// `ray.direction` must be a unit vector. A ray that misses the grid yields an
/// empty list.
pub fn trace_ray(grid: &ImageGrid, ray: &Ray) -> Vec<(usize, f64)> {
    let lo = grid.origin();
    let hi = grid.max_corner();
    let counts = [grid.nx(), grid.ny()];
    let ps = grid.pixel_size();

    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for axis in 0..2 {
        let p = ray.point[axis];
        let d = ray.direction[axis];
        if d == 0.0 {
            if p < lo[axis] || p >= hi[axis] {
                return Vec::new();
            }
        } else {
            let t0 = (lo[axis] - p) / d;
            let t1 = (hi[axis] - p) / d;
            t_enter = t_enter.max(t0.min(t1));
            t_exit = t_exit.min(t0.max(t1));
        }
    }
    if !(t_exit > t_enter) {
        return Vec::new();
    }

    let mut ts = Vec::with_capacity(counts[0] + counts[1] + 1);
    ts.push(t_enter);
    for axis in 0..2 {
        let d = ray.direction[axis];
        if d == 0.0 {
            continue;
        }
        for k in 1..counts[axis] {
            let plane = lo[axis] + k as f64 * ps;
            let t = (plane - ray.point[axis]) / d;
            if t > t_enter && t < t_exit {
                ts.push(t);
            }
        }
    }
    ts.push(t_exit);
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let mut out: Vec<(usize, f64)> = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let x = ray.point[0] + tm * ray.direction[0];
        let y = ray.point[1] + tm * ray.direction[1];
        let i = clamp_cell(x, lo[0], ps, counts[0]);
        let j = clamp_cell(y, lo[1], ps, counts[1]);
        let pixel = grid.index(i, j);
        match out.last_mut() {
            Some((last, acc)) if *last == pixel => *acc += len,
            _ => out.push((pixel, len)),
        }
    }
    out
}

fn clamp_cell(coord: f64, lo: f64, ps: f64, n: usize) -> usize {
    let f = ((coord - lo) / ps).floor();
    if f <= 0.0 {
        0
    } else {
        (f as usize).min(n - 1)
    }
}

/// Sparse M×N matrix of intersection lengths in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SystemMatrix {
    /// Assemble from per-row `(column, weight)` lists.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in &rows {
            for &(c, w) in row {
                if c >= cols {
                    return Err(Error::invalid(format!("column {c} out of range for {cols} columns")));
                }
                col_idx.push(c);
                values.push(w);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SystemMatrix { rows: rows.len(), cols, row_ptr, col_idx, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and weights of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (c, w) in self.col_idx.iter().zip(&self.values) {
            sums[*c] += w;
        }
        sums
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|w| *w *= factor);
        out
    }

    /// Dense row-major copy. Only sensible for small systems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in dense.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (c, w) in cols.iter().zip(vals) {
                row[*c] += w;
            }
        }
        dense
    }

    /// `A u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.cols {
            return Err(Error::invalid(format!(
                "image length {} does not match {} columns",
                u.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(c, w)| w * u[*c]).sum()
            })
            .collect())
    }

    /// `Aᵀ r`.
    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.rows {
            return Err(Error::invalid(format!(
                "sinogram length {} does not match {} rows",
                r.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &rv) in r.iter().enumerate() {
            if rv == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(row);
            for (c, w) in cols.iter().zip(vals) {
                out[*c] += w * rv;
            }
        }
        Ok(out)
    }
}

/// Measurement vector b, angle-major then detector bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    n_angles: usize,
    n_det: usize,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(n_angles: usize, n_det: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_angles * n_det {
            return Err(Error::invalid(format!(
                "sinogram has {} values, expected {n_angles}x{n_det}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sinogram contains non-finite values"));
        }
        Ok(Sinogram { n_angles, n_det, values })
    }

    pub fn zeros(n_angles: usize, n_det: usize) -> Self {
        Sinogram { n_angles, n_det, values: vec![0.0; n_angles * n_det] }
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_det(&self) -> usize {
        self.n_det
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, angle: usize, det: usize) -> f64 {
        self.values[angle * self.n_det + det]
    }

    /// Detector profile measured at one angle.
    pub fn angle_row(&self, angle: usize) -> &[f64] {
        &self.values[angle * self.n_det..(angle + 1) * self.n_det]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// System matrix for `geom` on `grid`; row `a * n_det + d` holds the trace
/// of the ray at angle `a`, bin `d`. Rows are traced in parallel.
pub fn build_system_matrix(grid: &ImageGrid, geom: &ScanGeometry) -> SystemMatrix {
    let n_det = geom.n_det();
    let rows: Vec<Vec<(usize, f64)>> = (0..geom.len())
        .into_par_iter()
        .map(|r| trace_ray(grid, &geom.ray(r / n_det, r % n_det)))
        .collect();
    SystemMatrix::from_rows(grid.len(), rows).expect("traced pixels lie inside the grid")
}

/// Projection `b = A u` shaped by `geom`.
pub fn forward(a: &SystemMatrix, geom: &ScanGeometry, u: &[f64]) -> Result<Sinogram> {
    if a.rows() != geom.len() {
        return Err(Error::invalid("system matrix rows do not match geometry"));
    }
    Sinogram::new(geom.n_angles(), geom.n_det(), a.apply(u)?)
}

/// Backprojection `Aᵀ r`.
pub fn adjoint(a: &SystemMatrix, r: &[f64]) -> Result<Vec<f64>> {
    a.apply_transpose(r)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, SQRT_2};

    use super::*;
    use crate::geometry::uniform_angles;

    /// Arc length per pixel by dense sampling along the ray.
    fn sampled_lengths(grid: &ImageGrid, ray: &Ray, step: f64) -> Vec<f64> {
        let mut acc = vec![0.0; grid.len()];
        let reach = grid.diagonal();
        let n = (2.0 * reach / step) as usize;
        for k in 0..n {
            let t = -reach + (k as f64 + 0.5) * step;
            let x = ray.point[0] + t * ray.direction[0];
            let y = ray.point[1] + t * ray.direction[1];
            if let Some((i, j)) = grid.locate(x, y) {
                acc[grid.index(i, j)] += step;
            }
        }
        acc
    }

    #[test]
    fn unit_pixel_horizontal() {
        let g = ImageGrid::new(1, 1, 1.0).unwrap();
        let ray = Ray { point: [0.0, 0.0], direction: [1.0, 0.0] };
        assert_eq!(trace_ray(&g, &ray), vec![(0, 1.0)]);
    }

    #[test]
    fn diagonal_of_two_by_two() {
        let g = ImageGrid::new(2, 2, 1.0).unwrap();
        let ray = Ray { point: [0.0, 0.0], direction: [1.0 / SQRT_2, 1.0 / SQRT_2] };
        let hits = trace_ray(&g, &ray);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].0, 0);
        assert_eq!(hits[1].0, 3);
        for (_, len) in &hits {
            assert!((len - SQRT_2).abs() < 1e-12);
        }
        let oracle = sampled_lengths(&g, &ray, 1e-5);
        for (p, len) in hits {
            assert!((oracle[p] - len).abs() < 1e-4, "pixel {p}: {} vs {len}", oracle[p]);
        }
    }

    #[test]
    fn seam_goes_to_greater_row() {
        let g = ImageGrid::new(4, 4, 1.0).unwrap();
        // y = 0 is the seam between rows 1 and 2.
        let ray = Ray { point: [0.0, 0.0], direction: [1.0, 0.0] };
        let hits = trace_ray(&g, &ray);
        let total: f64 = hits.iter().map(|h| h.1).sum();
        assert_eq!(total, 4.0);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![8, 9, 10, 11]);
        // Lower box edge belongs to row 0, upper edge misses.
        let low = Ray { point: [0.0, -2.0], direction: [1.0, 0.0] };
        assert_eq!(trace_ray(&g, &low).iter().map(|h| h.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let high = Ray { point: [0.0, 2.0], direction: [-1.0, 0.0] };
        assert!(trace_ray(&g, &high).is_empty());
    }

    #[test]
    fn reverse_direction_visits_in_ray_order() {
        let g = ImageGrid::new(4, 4, 1.0).unwrap();
        let ray = Ray { point: [0.0, 0.5], direction: [-1.0, 0.0] };
        let hits: Vec<usize> = trace_ray(&g, &ray).iter().map(|h| h.0).collect();
        assert_eq!(hits, vec![11, 10, 9, 8]);
    }

    #[test]
    fn missing_ray_is_empty() {
        let g = ImageGrid::new(4, 4, 1.0).unwrap();
        let ray = Ray { point: [10.0, 0.0], direction: [0.0, 1.0] };
        assert!(trace_ray(&g, &ray).is_empty());
        let ray = Ray { point: [5.0, 0.0], direction: [1.0 / SQRT_2, 1.0 / SQRT_2] };
        assert!(trace_ray(&g, &ray).is_empty());
    }

    #[test]
    fn oblique_rays_match_sampling_oracle() {
        let g = ImageGrid::new(5, 3, 0.7).unwrap();
        for &(theta, s) in &[(0.3, 0.2), (1.1, -0.55), (2.5, 0.9), (4.0, 0.05)] {
            let (sn, cs) = f64::sin_cos(theta);
            let ray = Ray { point: [s * cs, s * sn], direction: [-sn, cs] };
            let hits = trace_ray(&g, &ray);
            let oracle = sampled_lengths(&g, &ray, 1e-5);
            let mut exact = vec![0.0; g.len()];
            for (p, l) in hits {
                assert!(l > 0.0);
                exact[p] += l;
            }
            for p in 0..g.len() {
                assert!((exact[p] - oracle[p]).abs() < 1e-3, "theta {theta} pixel {p}");
            }
        }
    }

    #[test]
    fn trivial_system() {
        let g = ImageGrid::new(1, 1, 1.0).unwrap();
        let geom = ScanGeometry::new(vec![0.0], 1, 1.0).unwrap();
        let a = build_system_matrix(&g, &geom);
        assert_eq!(a.to_dense(), vec![vec![1.0]]);
        assert_eq!(adjoint(&a, &[2.5]).unwrap(), vec![2.5]);
    }

    #[test]
    fn system_shape() {
        let g = ImageGrid::new(64, 64, 1.0).unwrap();
        let geom = ScanGeometry::for_grid(&g, uniform_angles(4, 0.0, PI).unwrap()).unwrap();
        let a = build_system_matrix(&g, &geom);
        assert_eq!((a.rows(), a.cols()), (364, 4096));
        for r in 0..a.rows() {
            assert!(a.row(r).0.len() <= 64 + 64 + 1);
            assert!(a.row(r).1.iter().all(|&w| w > 0.0));
            assert!(a.row(r).1.iter().sum::<f64>() <= g.diagonal() + 1e-9);
        }
    }

    #[test]
    fn vertical_row_sums_are_column_heights() {
        let g = ImageGrid::new(6, 4, 1.0).unwrap();
        let geom = ScanGeometry::new(vec![0.0], 9, 1.0).unwrap();
        let a = build_system_matrix(&g, &geom);
        // Offsets -4..=4 on a box spanning x in [-3, 3): bins at -3..=2 cross it.
        let expected = [0.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 0.0, 0.0];
        assert_eq!(a.row_sums(), expected.to_vec());
        let ones = vec![1.0; g.len()];
        assert_eq!(forward(&a, &geom, &ones).unwrap().values(), &expected);
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let g = ImageGrid::new(8, 8, 1.0).unwrap();
        let geom = ScanGeometry::for_grid(&g, uniform_angles(3, 0.0, PI).unwrap()).unwrap();
        let a = build_system_matrix(&g, &geom);
        assert!(forward(&a, &geom, &vec![0.0; 64]).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(adjoint(&a, &vec![0.0; a.rows()]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_mismatch_errors() {
        let g = ImageGrid::new(4, 4, 1.0).unwrap();
        let geom = ScanGeometry::for_grid(&g, vec![0.0]).unwrap();
        let a = build_system_matrix(&g, &geom);
        assert!(matches!(forward(&a, &geom, &[0.0; 3]), Err(Error::InvalidArgument(_))));
        assert!(matches!(adjoint(&a, &[0.0; 2]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn assembly_is_deterministic() {
        let g = ImageGrid::new(16, 16, 1.0).unwrap();
        let geom = ScanGeometry::for_grid(&g, uniform_angles(7, 0.0, PI).unwrap()).unwrap();
        assert_eq!(build_system_matrix(&g, &geom), build_system_matrix(&g, &geom));
    }
}
