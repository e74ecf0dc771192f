//! End-to-end pipelines behind the command-line subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::baseline::{compare_masks, otsu_threshold, sinogram_rmse, sirt, MetricReport};
use crate::config::{ExperimentConfig, InitSpec, PhantomSpec};
use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, ScanGeometry};
use crate::io::{self, MetricsRow};
use crate::mask::Mask;
use crate::phantom::{make_phantom, Disk};
use crate::projector::{build_system_matrix, forward, Sinogram, SystemMatrix};
use crate::shape::{binarize, synthesize_image, ImageLevels, LevelSetModel, RbfDictionary, ShapeParams};
use crate::solver::{init_alpha, LeastSquares, Reconstruction, Seed, TraceRecord};

pub const TRUTH_PGM: &str = "truth.pgm";
pub const TRUTH_MASK_CSV: &str = "truth_mask.csv";
pub const SINOGRAM_CSV: &str = "sinogram.csv";
pub const RECON_MASK_PGM: &str = "recon_mask.pgm";
pub const RECON_SOFT_PGM: &str = "recon_soft.pgm";
pub const TRACE_CSV: &str = "trace.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const SIRT_PGM: &str = "sirt.pgm";
pub const OTSU_MASK_PGM: &str = "otsu_mask.pgm";
pub const BASELINE_METRICS_CSV: &str = "baseline_metrics.csv";
pub const EFFECTIVE_CONFIG: &str = "effective.cfg";

/// Everything derived from a config before any data is touched.
pub struct Setup {
    pub grid: ImageGrid,
    pub geometry: ScanGeometry,
    pub system: SystemMatrix,
    pub dictionary: RbfDictionary,
    pub levels: ImageLevels,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let geometry = cfg.geometry(&grid)?;
        let system = build_system_matrix(&grid, &geometry);
        let dictionary = cfg.dictionary(&grid)?;
        Ok(Setup { grid, geometry, system, dictionary, levels: cfg.levels()? })
    }
}

/// Weights of a circle collocated on the dictionary centers.
pub fn rbf_disk_alpha(dict: &RbfDictionary, disk: &Disk) -> Vec<f64> {
    dict.centers().iter().map(|c| disk.r - (c[0] - disk.cx).hypot(c[1] - disk.cy)).collect()
}

pub fn truth_mask(cfg: &ExperimentConfig, setup: &Setup) -> Result<Mask> {
    match &cfg.phantom {
        PhantomSpec::Geometric(kind) => Ok(make_phantom(kind, &setup.grid)?.mask),
        PhantomSpec::RbfDisk(disk) => {
            let params = ShapeParams::new(rbf_disk_alpha(&setup.dictionary, disk), setup.levels)?;
            binarize(&setup.dictionary, &params)
        }
    }
}

/// Image that is projected to make synthetic data: the binary truth, or the
/// model's own image for dictionary phantoms.
pub fn projection_image(cfg: &ExperimentConfig, setup: &Setup, truth: &Mask) -> Result<Vec<f64>> {
    match &cfg.phantom {
        PhantomSpec::RbfDisk(disk) => {
            let params = ShapeParams::new(rbf_disk_alpha(&setup.dictionary, disk), setup.levels)?;
            synthesize_image(&setup.dictionary, &params)
        }
        PhantomSpec::Geometric(_) => {
            let (u_in, u_ex) = (setup.levels.u_in(), setup.levels.u_ex());
            Ok(truth.bits().iter().map(|&b| if b { u_in } else { u_ex }).collect())
        }
    }
}

/// `A u` plus optional i.i.d. Gaussian noise drawn from a ChaCha8 stream
/// seeded with `cfg.seed`.
pub fn simulate_sinogram(cfg: &ExperimentConfig, setup: &Setup, image: &[f64]) -> Result<Sinogram> {
    let mut sino = forward(&setup.system, &setup.geometry, image)?;
    if cfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for v in sino.values_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(sino)
}

pub fn check_sinogram_shape(setup: &Setup, sino: &Sinogram) -> Result<()> {
    if sino.n_angles() != setup.geometry.n_angles() || sino.n_det() != setup.geometry.n_det() {
        return Err(Error::invalid(format!(
            "sinogram is {}x{} but the geometry expects {}x{}",
            sino.n_angles(),
            sino.n_det(),
            setup.geometry.n_angles(),
            setup.geometry.n_det()
        )));
    }
    Ok(())
}

fn seed_for(cfg: &ExperimentConfig, setup: &Setup) -> Result<Seed> {
    match &cfg.init {
        InitSpec::Seed(s) => Ok(s.clone()),
        InitSpec::MaskFile(path) => {
            let mask = read_mask(path)?;
            if mask.len() != setup.grid.len() {
                return Err(Error::invalid(format!("seed mask {} does not match the grid", path.display())));
            }
            Ok(Seed::FromMask(mask))
        }
    }
}

/// Output of a level-set reconstruction run.
pub struct LevelSetRun {
    pub reconstruction: Reconstruction,
    /// Smoothed-Heaviside image at the final weights.
    pub soft_image: Vec<f64>,
    pub report: MetricReport,
    pub row: MetricsRow,
}

/// Output of a failed run: the error and the trace recorded before it.
pub struct FailedRun {
    pub error: Error,
    pub trace: Vec<TraceRecord>,
}

pub fn run_levelset(
    cfg: &ExperimentConfig,
    setup: &Setup,
    sino: &Sinogram,
    truth: Option<&Mask>,
) -> std::result::Result<LevelSetRun, FailedRun> {
    let fail = |error: Error| FailedRun { error, trace: Vec::new() };
    check_sinogram_shape(setup, sino).map_err(fail)?;
    let start = Instant::now();
    let mut options = cfg.solver.clone();
    options.init = seed_for(cfg, setup).map_err(fail)?;
    let model = LevelSetModel::new(&setup.dictionary, setup.levels);
    let problem = LeastSquares::new(&setup.system, sino.values(), model).map_err(fail)?;
    let alpha0 = init_alpha(&setup.dictionary, &options.init).map_err(fail)?;
    let mut log = Vec::new();
    let (state, stop) = problem
        .solve_observed(alpha0, &options, |r| log.push(*r))
        .map_err(|error| FailedRun { error, trace: log.clone() })?;
    let seconds = start.elapsed().as_secs_f64();

    let finish = || -> Result<LevelSetRun> {
        let params = ShapeParams::new(state.alpha.clone(), setup.levels)?;
        let mask = binarize(&setup.dictionary, &params)?;
        let soft_image = synthesize_image(&setup.dictionary, &params)?;
        let mut report = match truth {
            Some(t) => compare_masks(&mask, t)?,
            None => MetricReport { jaccard: f64::NAN, pixel_error_fraction: f64::NAN, sinogram_rmse: None },
        };
        report.sinogram_rmse = Some(sinogram_rmse(&setup.system, &soft_image, sino.values())?);
        let row = metrics_row(cfg, setup, "levelset", &report, truth.is_some(), state.iter, seconds);
        Ok(LevelSetRun { reconstruction: Reconstruction { params, mask, state: state.clone(), stop }, soft_image, report, row })
    };
    finish().map_err(|error| FailedRun { error, trace: state.trace.clone() })
}

/// Output of the SIRT + Otsu baseline.
pub struct BaselineRun {
    pub image: Vec<f64>,
    pub mask: Mask,
    pub report: MetricReport,
    pub row: MetricsRow,
}

pub fn run_baseline(cfg: &ExperimentConfig, setup: &Setup, sino: &Sinogram, truth: Option<&Mask>) -> Result<BaselineRun> {
    check_sinogram_shape(setup, sino)?;
    let start = Instant::now();
    let image = sirt(&setup.system, sino.values(), cfg.baseline_iterations, cfg.baseline_relaxation)?;
    let (mask, _) = otsu_threshold(&image)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut report = match truth {
        Some(t) => compare_masks(&mask, t)?,
        None => MetricReport { jaccard: f64::NAN, pixel_error_fraction: f64::NAN, sinogram_rmse: None },
    };
    report.sinogram_rmse = Some(sinogram_rmse(&setup.system, &image, sino.values())?);
    let row = metrics_row(cfg, setup, "sirt-otsu", &report, truth.is_some(), cfg.baseline_iterations, seconds);
    Ok(BaselineRun { image, mask, report, row })
}

fn metrics_row(
    cfg: &ExperimentConfig,
    setup: &Setup,
    method: &str,
    report: &MetricReport,
    has_truth: bool,
    iters: usize,
    seconds: f64,
) -> MetricsRow {
    MetricsRow {
        experiment: cfg.experiment.clone(),
        method: method.to_string(),
        views: setup.geometry.n_angles(),
        angle_range: cfg.angles.span(),
        jaccard: has_truth.then_some(report.jaccard),
        pixel_error: has_truth.then_some(report.pixel_error_fraction),
        sinogram_rmse: report.sinogram_rmse,
        iters,
        seconds,
    }
}

/// Maps gray levels onto [0, 1] for display, interior at 1.
pub fn normalize_levels(u: &[f64], levels: &ImageLevels) -> Vec<f64> {
    u.iter().map(|v| ((v - levels.u_ex()) / levels.contrast()).clamp(0.0, 1.0)).collect()
}

/// Reads a PGM as a mask, foreground above mid-gray.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let img = io::read_pgm(path)?;
    Ok(Mask::from_threshold(&img.values, 0.5))
}

fn read_mask_for(setup: &Setup, path: &Path) -> Result<Mask> {
    let img = io::read_pgm(path)?;
    if img.width != setup.grid.nx() || img.height != setup.grid.ny() {
        return Err(Error::invalid(format!(
            "{} is {}x{}, grid is {}x{}",
            path.display(),
            img.width,
            img.height,
            setup.grid.nx(),
            setup.grid.ny()
        )));
    }
    Ok(Mask::from_threshold(&img.values, 0.5))
}

fn prepare_output(cfg: &ExperimentConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join(EFFECTIVE_CONFIG), cfg.to_config_string()?)?;
    Ok(cfg.output_dir.clone())
}

/// Writes the truth PGM and mask CSV.
pub fn cmd_phantom(cfg: &ExperimentConfig) -> Result<Mask> {
    let setup = Setup::new(cfg)?;
    let mask = truth_mask(cfg, &setup)?;
    let out = prepare_output(cfg)?;
    io::write_pgm(out.join(TRUTH_PGM), setup.grid.nx(), setup.grid.ny(), &mask.to_image())?;
    fs::write(out.join(TRUTH_MASK_CSV), io::encode_mask_csv(setup.grid.nx(), &mask))?;
    Ok(mask)
}

/// Projects the truth image (with optional noise) into the sinogram CSV.
pub fn cmd_project(cfg: &ExperimentConfig) -> Result<Sinogram> {
    let setup = Setup::new(cfg)?;
    let truth = read_mask_for(&setup, &cfg.truth_path())?;
    let image = projection_image(cfg, &setup, &truth)?;
    let sino = simulate_sinogram(cfg, &setup, &image)?;
    let out = prepare_output(cfg)?;
    io::write_sinogram_csv(out.join(SINOGRAM_CSV), &sino)?;
    Ok(sino)
}

fn load_inputs(cfg: &ExperimentConfig, setup: &Setup) -> Result<(Sinogram, Option<Mask>)> {
    let sino = io::read_sinogram_csv(cfg.sinogram_path())?;
    check_sinogram_shape(setup, &sino)?;
    let truth_path = cfg.truth_path();
    let truth = if truth_path.exists() { Some(read_mask_for(setup, &truth_path)?) } else { None };
    Ok((sino, truth))
}

/// Runs the level-set reconstruction and writes mask, soft image, trace and
/// metrics. On solver failure the partial trace is still written.
pub fn cmd_reconstruct(cfg: &ExperimentConfig) -> Result<LevelSetRun> {
    let setup = Setup::new(cfg)?;
    let (sino, truth) = load_inputs(cfg, &setup)?;
    let out = prepare_output(cfg)?;
    let run = match run_levelset(cfg, &setup, &sino, truth.as_ref()) {
        Ok(run) => run,
        Err(FailedRun { error, trace }) => {
            fs::write(out.join(TRACE_CSV), io::encode_trace_csv(&trace))?;
            return Err(error);
        }
    };
    let (nx, ny) = (setup.grid.nx(), setup.grid.ny());
    io::write_pgm(out.join(RECON_MASK_PGM), nx, ny, &run.reconstruction.mask.to_image())?;
    io::write_pgm(out.join(RECON_SOFT_PGM), nx, ny, &normalize_levels(&run.soft_image, &setup.levels))?;
    fs::write(out.join(TRACE_CSV), io::encode_trace_csv(&run.reconstruction.state.trace))?;
    fs::write(out.join(METRICS_CSV), io::encode_metrics_csv(std::slice::from_ref(&run.row)))?;
    Ok(run)
}

/// Runs SIRT + Otsu and writes its image, mask and metrics.
pub fn cmd_baseline(cfg: &ExperimentConfig) -> Result<BaselineRun> {
    let setup = Setup::new(cfg)?;
    let (sino, truth) = load_inputs(cfg, &setup)?;
    let out = prepare_output(cfg)?;
    let run = run_baseline(cfg, &setup, &sino, truth.as_ref())?;
    let (nx, ny) = (setup.grid.nx(), setup.grid.ny());
    io::write_pgm(out.join(SIRT_PGM), nx, ny, &run.image)?;
    io::write_pgm(out.join(OTSU_MASK_PGM), nx, ny, &run.mask.to_image())?;
    fs::write(out.join(BASELINE_METRICS_CSV), io::encode_metrics_csv(std::slice::from_ref(&run.row)))?;
    Ok(run)
}

/// Compares two mask PGMs. With a config, the sinogram residual of the
/// estimate is included as well.
pub fn cmd_evaluate(est: &Path, truth: &Path, cfg: Option<&ExperimentConfig>) -> Result<(MetricReport, MetricsRow)> {
    let est_img = io::read_pgm(est)?;
    let true_img = io::read_pgm(truth)?;
    if (est_img.width, est_img.height) != (true_img.width, true_img.height) {
        return Err(Error::invalid(format!(
            "size mismatch: {}x{} vs {}x{}",
            est_img.width, est_img.height, true_img.width, true_img.height
        )));
    }
    let est_mask = Mask::from_threshold(&est_img.values, 0.5);
    let true_mask = Mask::from_threshold(&true_img.values, 0.5);
    let mut report = compare_masks(&est_mask, &true_mask)?;
    let mut row = MetricsRow {
        experiment: "evaluate".into(),
        method: "mask".into(),
        views: 0,
        angle_range: 0.0,
        jaccard: Some(report.jaccard),
        pixel_error: Some(report.pixel_error_fraction),
        sinogram_rmse: None,
        iters: 0,
        seconds: 0.0,
    };
    if let Some(cfg) = cfg {
        let setup = Setup::new(cfg)?;
        let sinogram_path = cfg.sinogram_path();
        if sinogram_path.exists() {
            let sino = io::read_sinogram_csv(&sinogram_path)?;
            check_sinogram_shape(&setup, &sino)?;
            if est_mask.len() != setup.grid.len() {
                return Err(Error::invalid("estimate does not match the configured grid"));
            }
            report.sinogram_rmse = Some(sinogram_rmse(&setup.system, &est_mask.to_image(), sino.values())?);
        }
        row.experiment = cfg.experiment.clone();
        row.views = setup.geometry.n_angles();
        row.angle_range = cfg.angles.span();
        row.sinogram_rmse = report.sinogram_rmse;
    }
    Ok((report, row))
}
