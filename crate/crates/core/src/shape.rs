//! Parametric level-set image model.
//!
//! The level-set field is a weighted sum of Gaussian radial basis functions
//! centered on a coarse sub-grid, `f(x) = Σ αᵢ exp(-β‖x - xᵢ‖²)`, and the image
//! blends an interior and an exterior gray value through a smoothed Heaviside
//! of `f`. The shape parameter is tied to the Gaussian width by
//! `β = 1 / (√2 σ)`; a direct override is available.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ImageGrid;
use crate::mask::Mask;

/// Default Heaviside smoothing width, in level-set units.
pub const DEFAULT_EPS: f64 = 0.5;

/// Default Gaussian width as a multiple of the physical center spacing.
pub const DEFAULT_SIGMA_FACTOR: f64 = 1.5;

/// Gaussian dictionary evaluated at every pixel center.
#[derive(Debug, Clone)]
pub struct RbfDictionary {
    grid: ImageGrid,
    spacing: usize,
    centers: Vec<[f64; 2]>,
    sigma: f64,
    beta: f64,
    /// Row-major N×n, `basis[p * n + i] = μᵢ(x_p)`.
    basis: Vec<f64>,
}

/// Gaussian width used when none is configured.
pub fn default_sigma(grid: &ImageGrid, center_spacing: usize) -> f64 {
    DEFAULT_SIGMA_FACTOR * center_spacing as f64 * grid.pixel_size()
}

/// `β = 1 / (√2 σ)`.
pub fn beta_from_sigma(sigma: f64) -> f64 {
    1.0 / (SQRT_2 * sigma)
}

/// Dictionary with centers every `center_spacing` pixels and `β` derived from `sigma`.
pub fn make_dictionary(grid: &ImageGrid, center_spacing: usize, sigma: f64) -> Result<RbfDictionary> {
    RbfDictionary::new(grid, center_spacing, sigma, None)
}

impl RbfDictionary {
    /// Centers form a lattice of `nx / spacing` by `ny / spacing` points with
    /// pitch `spacing` pixels, centered on the grid (inset half a pitch from
    /// the border when the spacing divides the grid size).
    pub fn new(
        grid: &ImageGrid,
        center_spacing: usize,
        sigma: f64,
        beta_override: Option<f64>,
    ) -> Result<Self> {
        if center_spacing == 0 {
            return Err(Error::invalid("center spacing must be at least 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        let beta = match beta_override {
            Some(b) if !(b > 0.0 && b.is_finite()) => {
                return Err(Error::invalid(format!("beta must be positive, got {b}")));
            }
            Some(b) => b,
            None => beta_from_sigma(sigma),
        };
        let cx = grid.nx() / center_spacing;
        let cy = grid.ny() / center_spacing;
        if cx == 0 || cy == 0 {
            return Err(Error::invalid(format!(
                "center spacing {center_spacing} leaves no centers on a {}x{} grid",
                grid.nx(),
                grid.ny()
            )));
        }
        let pitch = center_spacing as f64 * grid.pixel_size();
        let mut centers = Vec::with_capacity(cx * cy);
        for j in 0..cy {
            for i in 0..cx {
                centers.push([
                    (i as f64 - (cx as f64 - 1.0) / 2.0) * pitch,
                    (j as f64 - (cy as f64 - 1.0) / 2.0) * pitch,
                ]);
            }
        }
        let n = centers.len();
        let mut basis = vec![0.0; grid.len() * n];
        basis.par_chunks_mut(n).enumerate().for_each(|(p, row)| {
            let x = grid.center_of(p);
            for (b, c) in row.iter_mut().zip(&centers) {
                let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                *b = (-beta * d2).exp();
            }
        });
        Ok(RbfDictionary { grid: *grid, spacing: center_spacing, centers, sigma, beta, basis })
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn center_spacing(&self) -> usize {
        self.spacing
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    /// Number of basis functions n.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Number of pixels N.
    pub fn pixels(&self) -> usize {
        self.grid.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Basis values at pixel `p`, one per center.
    pub fn basis_row(&self, p: usize) -> &[f64] {
        let n = self.len();
        &self.basis[p * n..(p + 1) * n]
    }

    pub fn basis(&self, p: usize, i: usize) -> f64 {
        self.basis[p * self.len() + i]
    }

    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.pixels(), self.len(), &self.basis)
    }

    fn check_alpha(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.len() {
            return Err(Error::invalid(format!(
                "weight vector has length {}, dictionary has {} centers",
                alpha.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// Level-set field `f = B α` at every pixel.
pub fn eval_levelset(dict: &RbfDictionary, alpha: &[f64]) -> Result<Vec<f64>> {
    dict.check_alpha(alpha)?;
    Ok((0..dict.pixels())
        .map(|p| dict.basis_row(p).iter().zip(alpha).map(|(b, a)| b * a).sum())
        .collect())
}

/// Arctan-smoothed Heaviside and its derivative:
/// `H(t) = ½(1 + (2/π) atan(t/ε))`, `δ(t) = (ε/π) / (ε² + t²)`.
pub fn smoothed_heaviside(t: f64, eps: f64) -> (f64, f64) {
    let h = 0.5 * (1.0 + (2.0 / PI) * (t / eps).atan());
    let d = (eps / PI) / (eps * eps + t * t);
    (h, d)
}

/// Interior/exterior gray values and the Heaviside width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageLevels {
    u_in: f64,
    u_ex: f64,
    eps: f64,
}

impl ImageLevels {
    pub fn new(u_in: f64, u_ex: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be positive, got {eps}")));
        }
        if !u_in.is_finite() || !u_ex.is_finite() || u_in == u_ex {
            return Err(Error::invalid(format!("u_in ({u_in}) and u_ex ({u_ex}) must be finite and differ")));
        }
        Ok(ImageLevels { u_in, u_ex, eps })
    }

    /// `u_in = 1`, `u_ex = 0`.
    pub fn binary(eps: f64) -> Result<Self> {
        Self::new(1.0, 0.0, eps)
    }

    pub fn u_in(&self) -> f64 {
        self.u_in
    }

    pub fn u_ex(&self) -> f64 {
        self.u_ex
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn contrast(&self) -> f64 {
        self.u_in - self.u_ex
    }
}

impl Default for ImageLevels {
    fn default() -> Self {
        ImageLevels { u_in: 1.0, u_ex: 0.0, eps: DEFAULT_EPS }
    }
}

/// Weights plus gray levels: everything needed to synthesize an image.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeParams {
    pub alpha: Vec<f64>,
    pub levels: ImageLevels,
}

impl ShapeParams {
    pub fn new(alpha: Vec<f64>, levels: ImageLevels) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        Ok(ShapeParams { alpha, levels })
    }

    pub fn u_in(&self) -> f64 {
        self.levels.u_in
    }

    pub fn u_ex(&self) -> f64 {
        self.levels.u_ex
    }

    pub fn eps(&self) -> f64 {
        self.levels.eps
    }
}

/// `u = u_ex + (u_in - u_ex) H_ε(B α)`.
pub fn synthesize_image(dict: &RbfDictionary, params: &ShapeParams) -> Result<Vec<f64>> {
    let lv = params.levels;
    Ok(eval_levelset(dict, &params.alpha)?
        .into_iter()
        .map(|f| lv.u_ex + lv.contrast() * smoothed_heaviside(f, lv.eps).0)
        .collect())
}

/// Dense N×n Jacobian `∂u_p/∂α_i = (u_in - u_ex) δ_ε(f_p) B[p, i]`.
pub fn shape_jacobian(dict: &RbfDictionary, params: &ShapeParams) -> Result<DMatrix<f64>> {
    let model = LevelSetModel::new(dict, params.levels);
    let (_, w) = model.image_with_sensitivity(&params.alpha)?;
    let n = dict.len();
    Ok(DMatrix::from_fn(dict.pixels(), n, |p, i| w[p] * dict.basis(p, i)))
}

/// Hard readout: interior where `f ≥ 0`.
pub fn binarize(dict: &RbfDictionary, params: &ShapeParams) -> Result<Mask> {
    Ok(Mask::new(eval_levelset(dict, &params.alpha)?.into_iter().map(|f| f >= 0.0).collect()))
}

/// A map from dictionary weights to an image whose Jacobian factors as
/// `∂u_p/∂α_i = w_p B[p, i]` for a per-pixel sensitivity `w`.
pub trait ImageModel {
    fn dictionary(&self) -> &RbfDictionary;

    /// Image and sensitivity `w` at `alpha`.
    fn image_with_sensitivity(&self, alpha: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;

    fn image(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        Ok(self.image_with_sensitivity(alpha)?.0)
    }
}

/// Smoothed-Heaviside level-set image.
#[derive(Debug, Clone, Copy)]
pub struct LevelSetModel<'d> {
    dict: &'d RbfDictionary,
    levels: ImageLevels,
}

impl<'d> LevelSetModel<'d> {
    pub fn new(dict: &'d RbfDictionary, levels: ImageLevels) -> Self {
        LevelSetModel { dict, levels }
    }

    pub fn levels(&self) -> ImageLevels {
        self.levels
    }
}

impl ImageModel for LevelSetModel<'_> {
    fn dictionary(&self) -> &RbfDictionary {
        self.dict
    }

    fn image_with_sensitivity(&self, alpha: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let lv = self.levels;
        let f = eval_levelset(self.dict, alpha)?;
        let mut u = Vec::with_capacity(f.len());
        let mut w = Vec::with_capacity(f.len());
        for fp in f {
            let (h, d) = smoothed_heaviside(fp, lv.eps);
            u.push(lv.u_ex + lv.contrast() * h);
            w.push(lv.contrast() * d);
        }
        Ok((u, w))
    }
}

/// `u = B α` with no Heaviside. Makes the least-squares problem linear, which
/// is useful for checking the solver against a closed-form solution.
#[derive(Debug, Clone, Copy)]
pub struct LinearModel<'d> {
    dict: &'d RbfDictionary,
}

impl<'d> LinearModel<'d> {
    pub fn new(dict: &'d RbfDictionary) -> Self {
        LinearModel { dict }
    }
}

impl ImageModel for LinearModel<'_> {
    fn dictionary(&self) -> &RbfDictionary {
        self.dict
    }

    fn image_with_sensitivity(&self, alpha: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = eval_levelset(self.dict, alpha)?;
        Ok((f, vec![1.0; self.dict.pixels()]))
    }
}
