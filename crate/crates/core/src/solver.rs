//! Damped Gauss-Newton reconstruction of the level-set weights.
//!
//! Minimizes `F(α) = ‖A u(α) - b‖²` with the update `α ← α + λ Δα`, where
//! `Δα` solves the Levenberg-Marquardt normal equations built from the
//! residual Jacobian `Ĵ = A J_u` and `λ` comes from Armijo backtracking.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::projector::SystemMatrix;
use crate::shape::{binarize, ImageLevels, ImageModel, LevelSetModel, RbfDictionary, ShapeParams};

/// Default initial circle radius as a fraction of the smaller grid extent.
pub const DEFAULT_SEED_RADIUS_FRACTION: f64 = 0.3;

const TAU_MIN: f64 = 1e-12;
const TAU_MAX: f64 = 1e12;
const DAMPING_ESCALATIONS: usize = 10;

/// Starting shape for the weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Seed {
    /// Circle centered on the grid; `None` uses the default radius.
    Circle { radius: Option<f64> },
    Constant(f64),
    FromMask(Mask),
}

impl Default for Seed {
    fn default() -> Self {
        Seed::Circle { radius: None }
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seed::Circle { radius: None } => write!(f, "circle"),
            Seed::Circle { radius: Some(r) } => write!(f, "circle:{r}"),
            Seed::Constant(v) => write!(f, "constant:{v}"),
            Seed::FromMask(_) => write!(f, "mask"),
        }
    }
}

/// Parses `circle`, `circle:R` and `constant:V`. Mask seeds need image data
/// and are built directly.
impl FromStr for Seed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::invalid(format!("seed '{s}' needs a value")))?;
            a.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::invalid(format!("seed '{s}': '{a}' is not a number")))
        };
        match kind {
            "circle" => Ok(Seed::Circle { radius: arg.map(|a| number(Some(a))).transpose()? }),
            "constant" => Ok(Seed::Constant(number(arg)?)),
            _ => Err(Error::invalid(format!("unknown seed kind '{kind}'"))),
        }
    }
}

/// Collocation initialization: each weight is the seed's signed function at
/// its center.
pub fn init_alpha(dict: &RbfDictionary, seed: &Seed) -> Result<Vec<f64>> {
    let grid = dict.grid();
    match seed {
        Seed::Circle { radius } => {
            let r = radius.unwrap_or(DEFAULT_SEED_RADIUS_FRACTION * grid.width().min(grid.height()));
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("seed radius must be non-negative, got {r}")));
            }
            Ok(dict.centers().iter().map(|c| r - c[0].hypot(c[1])).collect())
        }
        Seed::Constant(v) => Ok(vec![*v; dict.len()]),
        Seed::FromMask(mask) => {
            if mask.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "seed mask has {} pixels, grid has {}",
                    mask.len(),
                    grid.len()
                )));
            }
            let (nx, ny) = (grid.nx(), grid.ny());
            let signed: Vec<f64> = mask.bits().iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            let blurred = |i: usize, j: usize| {
                let mut sum = 0.0;
                let mut count = 0.0;
                for jj in j.saturating_sub(1)..=(j + 1).min(ny - 1) {
                    for ii in i.saturating_sub(1)..=(i + 1).min(nx - 1) {
                        sum += signed[grid.index(ii, jj)];
                        count += 1.0;
                    }
                }
                sum / count
            };
            Ok(dict
                .centers()
                .iter()
                .map(|c| {
                    let (i, j) = grid.locate(c[0], c[1]).unwrap_or((nx - 1, ny - 1));
                    blurred(i, j)
                })
                .collect())
        }
    }
}

/// Armijo backtracking constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOptions {
    pub c: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchOptions {
    fn default() -> Self {
        LineSearchOptions { c: 1e-4, shrink: 0.5, max_backtracks: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when `‖∇F‖∞` drops below this; `None` means `1e-6 · M`.
    pub grad_tol: Option<f64>,
    /// Stop when the relative objective decrease stays below this for
    /// `stall_iters` consecutive iterations.
    pub rel_obj_tol: f64,
    pub stall_iters: usize,
    pub lm_damping_init: f64,
    pub line_search: LineSearchOptions,
    pub init: Seed,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 200,
            grad_tol: None,
            rel_obj_tol: 1e-6,
            stall_iters: 3,
            lm_damping_init: 1e-3,
            line_search: LineSearchOptions::default(),
            init: Seed::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(t) = self.grad_tol {
            positive("grad_tol", t)?;
        }
        positive("rel_obj_tol", self.rel_obj_tol)?;
        positive("lm_damping_init", self.lm_damping_init)?;
        positive("armijo c", self.line_search.c)?;
        if !(self.line_search.c < 1.0) {
            return Err(Error::invalid("armijo c must be below 1"));
        }
        if !(self.line_search.shrink > 0.0 && self.line_search.shrink < 1.0) {
            return Err(Error::invalid(format!(
                "line search shrink must lie in (0, 1), got {}",
                self.line_search.shrink
            )));
        }
        if self.stall_iters == 0 {
            return Err(Error::invalid("stall_iters must be at least 1"));
        }
        Ok(())
    }

    pub fn grad_tol_for(&self, measurements: usize) -> f64 {
        self.grad_tol.unwrap_or(1e-6 * measurements as f64)
    }
}

/// One row of the iteration log. Row 0 describes the initial point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub lambda: f64,
    pub tau: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub iter: usize,
    pub tau: f64,
    pub trace: Vec<TraceRecord>,
}

impl SolverState {
    pub fn grad_norm(&self) -> f64 {
        max_abs(&self.gradient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    GradientTolerance,
    ObjectiveStalled,
    /// No step along the Gauss-Newton or gradient direction decreased the
    /// objective. Reported as success.
    LineSearchStagnation,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxIterations => "max-iterations",
            StopReason::GradientTolerance => "gradient-tolerance",
            StopReason::ObjectiveStalled => "objective-stalled",
            StopReason::LineSearchStagnation => "line-search-stagnation",
        })
    }
}

/// Result of a damped normal-equation solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonStep {
    pub delta: Vec<f64>,
    /// Damping actually used, after any escalation.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearchOutcome {
    Accepted {
        lambda: f64,
        alpha: Vec<f64>,
        objective: f64,
        backtracks: usize,
        /// The steepest-descent fallback produced this step.
        gradient_fallback: bool,
    },
    Stagnated,
}

/// Largest `λ = shrink^k`, `k ≤ max_backtracks`, with
/// `F(λ) ≤ f0 + c λ slope` and `F(λ) < f0`. Returns `(λ, F(λ), k)`.
pub fn armijo_backtrack(
    f0: f64,
    slope: f64,
    opts: &LineSearchOptions,
    mut eval: impl FnMut(f64) -> Result<f64>,
) -> Result<Option<(f64, f64, usize)>> {
    if !(slope < 0.0) {
        return Ok(None);
    }
    let mut lambda = 1.0;
    for k in 0..=opts.max_backtracks {
        let f = eval(lambda)?;
        if f <= f0 + opts.c * lambda * slope && f < f0 {
            return Ok(Some((lambda, f, k)));
        }
        lambda *= opts.shrink;
    }
    Ok(None)
}

/// `min ‖A u(α) - b‖²` for an image model.
pub struct LeastSquares<'a, M> {
    a: &'a SystemMatrix,
    b: &'a [f64],
    model: M,
}

impl<'a, M: ImageModel> LeastSquares<'a, M> {
    pub fn new(a: &'a SystemMatrix, b: &'a [f64], model: M) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::invalid(format!(
                "system has {} rows but sinogram has {} values",
                a.rows(),
                b.len()
            )));
        }
        if a.cols() != model.dictionary().pixels() {
            return Err(Error::invalid(format!(
                "system has {} columns but the dictionary grid has {} pixels",
                a.cols(),
                model.dictionary().pixels()
            )));
        }
        Ok(LeastSquares { a, b, model })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn measurements(&self) -> usize {
        self.b.len()
    }

    fn residual_of(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.a.apply(u)?;
        r.iter_mut().zip(self.b).for_each(|(ri, bi)| *ri -= bi);
        Ok(r)
    }

    pub fn objective(&self, alpha: &[f64]) -> Result<f64> {
        let u = self.model.image(alpha)?;
        let f = norm_sq(&self.residual_of(&u)?);
        check_finite(f)?;
        Ok(f)
    }

    /// `2 J_uᵀ Aᵀ (A u - b)`, using the backprojection of the residual.
    pub fn gradient(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        Ok(self.objective_and_gradient(alpha)?.1)
    }

    pub fn objective_and_gradient(&self, alpha: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (u, w) = self.model.image_with_sensitivity(alpha)?;
        let r = self.residual_of(&u)?;
        let f = norm_sq(&r);
        check_finite(f)?;
        let back = self.a.apply_transpose(&r)?;
        let dict = self.model.dictionary();
        let mut g = vec![0.0; dict.len()];
        for (p, (bp, wp)) in back.iter().zip(&w).enumerate() {
            let s = 2.0 * bp * wp;
            if s == 0.0 {
                continue;
            }
            for (gi, bi) in g.iter_mut().zip(dict.basis_row(p)) {
                *gi += s * bi;
            }
        }
        Ok((f, g))
    }

    /// Residual Jacobian `Ĵ = A J_u`, M×n.
    pub fn residual_jacobian(&self, alpha: &[f64]) -> Result<DMatrix<f64>> {
        let (_, w) = self.model.image_with_sensitivity(alpha)?;
        let dict = self.model.dictionary();
        let n = dict.len();
        let mut rows = vec![0.0; self.a.rows() * n];
        for (m, out) in rows.chunks_mut(n).enumerate() {
            let (cols, vals) = self.a.row(m);
            for (p, a_mp) in cols.iter().zip(vals) {
                let s = a_mp * w[*p];
                for (o, bi) in out.iter_mut().zip(dict.basis_row(*p)) {
                    *o += s * bi;
                }
            }
        }
        Ok(DMatrix::from_row_slice(self.a.rows(), n, &rows))
    }

    /// Solves `(ĴᵀĴ + τ diag(ĴᵀĴ) + τ μ I) Δα = -½ ∇F` with
    /// `μ = 1e-12 · trace(ĴᵀĴ) / n`, multiplying τ by 10 (up to ten times)
    /// when the factorization fails.
    pub fn gauss_newton_step(&self, alpha: &[f64], grad: &[f64], tau: f64) -> Result<GaussNewtonStep> {
        let n = self.model.dictionary().len();
        if grad.len() != n {
            return Err(Error::invalid("gradient length does not match dictionary"));
        }
        if grad.iter().all(|&g| g == 0.0) {
            return Ok(GaussNewtonStep { delta: vec![0.0; n], tau });
        }
        let jhat = self.residual_jacobian(alpha)?;
        let normal = jhat.tr_mul(&jhat);
        let floor = 1e-12 * normal.trace() / n as f64;
        let rhs = DVector::from_iterator(n, grad.iter().map(|g| -0.5 * g));
        let mut tau = tau;
        for attempt in 0..=DAMPING_ESCALATIONS {
            if attempt > 0 {
                tau *= 10.0;
            }
            let mut damped = normal.clone();
            for i in 0..n {
                damped[(i, i)] += tau * normal[(i, i)] + tau * floor;
            }
            if let Some(chol) = Cholesky::new(damped) {
                let delta = chol.solve(&rhs);
                if delta.iter().all(|d| d.is_finite()) {
                    return Ok(GaussNewtonStep { delta: delta.iter().copied().collect(), tau });
                }
            }
        }
        Err(Error::Singular { tau })
    }

    /// Armijo search along `delta`, falling back to `-grad` when `delta` is
    /// not a descent direction or yields no acceptable step.
    pub fn line_search(
        &self,
        alpha: &[f64],
        f0: f64,
        grad: &[f64],
        delta: &[f64],
        opts: &LineSearchOptions,
    ) -> Result<LineSearchOutcome> {
        let trial = |dir: &[f64], lambda: f64| -> Vec<f64> {
            alpha.iter().zip(dir).map(|(a, d)| a + lambda * d).collect()
        };
        let slope = dot(grad, delta);
        if let Some((lambda, f, k)) =
            armijo_backtrack(f0, slope, opts, |l| self.objective(&trial(delta, l)))?
        {
            return Ok(LineSearchOutcome::Accepted {
                lambda,
                alpha: trial(delta, lambda),
                objective: f,
                backtracks: k,
                gradient_fallback: false,
            });
        }
        let steepest: Vec<f64> = grad.iter().map(|g| -g).collect();
        if steepest.as_slice() == delta {
            return Ok(LineSearchOutcome::Stagnated);
        }
        let slope = dot(grad, &steepest);
        match armijo_backtrack(f0, slope, opts, |l| self.objective(&trial(&steepest, l)))? {
            Some((lambda, f, k)) => Ok(LineSearchOutcome::Accepted {
                lambda,
                alpha: trial(&steepest, lambda),
                objective: f,
                backtracks: k,
                gradient_fallback: true,
            }),
            None => Ok(LineSearchOutcome::Stagnated),
        }
    }

    /// Runs the damped Gauss-Newton iteration from `alpha0`.
    pub fn solve(&self, alpha0: Vec<f64>, options: &SolverOptions) -> Result<(SolverState, StopReason)> {
        self.solve_observed(alpha0, options, |_| {})
    }

    /// As [`solve`](Self::solve), reporting each trace record as it is produced.
    pub fn solve_observed(
        &self,
        alpha0: Vec<f64>,
        options: &SolverOptions,
        mut observe: impl FnMut(&TraceRecord),
    ) -> Result<(SolverState, StopReason)> {
        options.validate()?;
        if alpha0.len() != self.model.dictionary().len() {
            return Err(Error::invalid("initial weights do not match dictionary"));
        }
        let grad_tol = options.grad_tol_for(self.measurements());
        let (f, g) = self.objective_and_gradient(&alpha0)?;
        let tau = options.lm_damping_init.clamp(TAU_MIN, TAU_MAX);
        let mut state = SolverState {
            trace: vec![TraceRecord { iter: 0, objective: f, grad_norm: max_abs(&g), lambda: 0.0, tau, backtracks: 0 }],
            alpha: alpha0,
            objective: f,
            gradient: g,
            iter: 0,
            tau,
        };
        observe(&state.trace[0]);
        let mut stalled = 0;
        let mut stop = StopReason::MaxIterations;
        while state.iter < options.max_iters {
            if state.grad_norm() < grad_tol {
                stop = StopReason::GradientTolerance;
                break;
            }
            let step = self.gauss_newton_step(&state.alpha, &state.gradient, state.tau)?;
            state.tau = step.tau;
            let outcome =
                self.line_search(&state.alpha, state.objective, &state.gradient, &step.delta, &options.line_search)?;
            let LineSearchOutcome::Accepted { lambda, alpha, backtracks, gradient_fallback, .. } = outcome
            else {
                stop = StopReason::LineSearchStagnation;
                break;
            };
            let full_step = backtracks == 0 && !gradient_fallback;
            state.tau = if full_step { state.tau / 3.0 } else { state.tau * 2.0 }.clamp(TAU_MIN, TAU_MAX);

            let previous = state.objective;
            let (f, g) = self.objective_and_gradient(&alpha)?;
            state.alpha = alpha;
            state.objective = f;
            state.gradient = g;
            state.iter += 1;
            let record = TraceRecord {
                iter: state.iter,
                objective: f,
                grad_norm: state.grad_norm(),
                lambda,
                tau: state.tau,
                backtracks,
            };
            observe(&record);
            state.trace.push(record);

            if (previous - f) < options.rel_obj_tol * previous {
                stalled += 1;
                if stalled >= options.stall_iters {
                    stop = StopReason::ObjectiveStalled;
                    break;
                }
            } else {
                stalled = 0;
            }
        }
        Ok((state, stop))
    }
}

/// Final shape, its binary readout and the solver history.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub params: ShapeParams,
    pub mask: Mask,
    pub state: SolverState,
    pub stop: StopReason,
}

/// `‖A u(α) - b‖²` for the level-set image.
pub fn objective(a: &SystemMatrix, b: &[f64], dict: &RbfDictionary, params: &ShapeParams) -> Result<f64> {
    LeastSquares::new(a, b, LevelSetModel::new(dict, params.levels))?.objective(&params.alpha)
}

/// `∇F(α) = 2 J_uᵀ Aᵀ (A u(α) - b)` for the level-set image.
pub fn gradient(a: &SystemMatrix, b: &[f64], dict: &RbfDictionary, params: &ShapeParams) -> Result<Vec<f64>> {
    LeastSquares::new(a, b, LevelSetModel::new(dict, params.levels))?.gradient(&params.alpha)
}

/// Initializes from `options.init` and runs the solver on the level-set model.
pub fn reconstruct(
    a: &SystemMatrix,
    b: &[f64],
    dict: &RbfDictionary,
    levels: ImageLevels,
    options: &SolverOptions,
) -> Result<Reconstruction> {
    let problem = LeastSquares::new(a, b, LevelSetModel::new(dict, levels))?;
    let alpha0 = init_alpha(dict, &options.init)?;
    let (state, stop) = problem.solve(alpha0, options)?;
    let params = ShapeParams::new(state.alpha.clone(), levels)?;
    let mask = binarize(dict, &params)?;
    Ok(Reconstruction { params, mask, state, stop })
}

fn check_finite(f: f64) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalFailure(format!("objective evaluated to {f}")))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
