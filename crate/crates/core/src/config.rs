//! Flat `key = value` experiment configuration.
//!
//! One entry per line, `#` starts a comment. Angles accept plain radians or
//! multiples of pi such as `pi/2`, `5pi/6` or `2*pi/3`. Unknown keys are
//! rejected. [`ExperimentConfig::to_config_string`] writes every resolved
//! setting back in the same syntax.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::{uniform_angles, ImageGrid, ScanGeometry};
use crate::phantom::{Disk, PhantomKind};
use crate::shape::{default_sigma, ImageLevels, RbfDictionary, DEFAULT_EPS};
use crate::solver::{LineSearchOptions, Seed, SolverOptions};

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "grid.nx",
    "grid.ny",
    "grid.pixel_size",
    "geometry.views",
    "geometry.range_start",
    "geometry.range_end",
    "geometry.angles",
    "geometry.n_det",
    "geometry.det_spacing",
    "dictionary.center_spacing",
    "dictionary.sigma",
    "dictionary.beta",
    "heaviside.eps",
    "levels.u_in",
    "levels.u_ex",
    "solver.max_iters",
    "solver.grad_tol",
    "solver.rel_obj_tol",
    "solver.stall_iters",
    "solver.lm_damping_init",
    "solver.armijo_c",
    "solver.armijo_shrink",
    "solver.max_backtracks",
    "solver.init",
    "phantom",
    "noise_sigma",
    "seed",
    "baseline.iterations",
    "baseline.relaxation",
    "input.sinogram",
    "input.truth",
    "output_dir",
];

/// Which projection angles to use.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSpec {
    Uniform { views: usize, start: f64, end: f64 },
    Explicit(Vec<f64>),
}

impl AngleSpec {
    pub fn angles(&self) -> Result<Vec<f64>> {
        match self {
            AngleSpec::Uniform { views, start, end } => uniform_angles(*views, *start, *end),
            AngleSpec::Explicit(list) => Ok(list.clone()),
        }
    }

    /// Width of the angular range covered, for reporting.
    pub fn span(&self) -> f64 {
        match self {
            AngleSpec::Uniform { start, end, .. } => end - start,
            AngleSpec::Explicit(list) => match (list.first(), list.last()) {
                (Some(a), Some(b)) if list.len() > 1 => {
                    b - a + (b - a) / (list.len() - 1) as f64
                }
                _ => 0.0,
            },
        }
    }
}

/// Ground-truth shape for synthetic runs.
#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSpec {
    Geometric(PhantomKind),
    /// Circle collocated onto the dictionary centers, so the truth is exactly
    /// representable by the model. Projections of it use the model image.
    RbfDisk(Disk),
}

impl PhantomSpec {
    fn describe(&self) -> String {
        let disk = |d: &Disk| format!("{},{},{}", d.cx, d.cy, d.r);
        match self {
            PhantomSpec::Geometric(PhantomKind::Disk(d)) => format!("disk:{}", disk(d)),
            PhantomSpec::Geometric(PhantomKind::TwoDisks) => "two-disks".into(),
            PhantomSpec::Geometric(PhantomKind::Annulus { r_in, r_out }) => format!("annulus:{r_in},{r_out}"),
            PhantomSpec::Geometric(PhantomKind::BlobUnion(ds)) => {
                format!("blobs:{}", ds.iter().map(disk).collect::<Vec<_>>().join(";"))
            }
            PhantomSpec::RbfDisk(d) => format!("rbf-disk:{}", disk(d)),
        }
    }
}

/// Solver seed as configured; mask seeds are loaded later from a PGM file.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Seed(Seed),
    MaskFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub nx: usize,
    pub ny: usize,
    pub pixel_size: f64,
    pub angles: AngleSpec,
    pub n_det: Option<usize>,
    pub det_spacing: Option<f64>,
    pub center_spacing: usize,
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub eps: f64,
    pub u_in: f64,
    pub u_ex: f64,
    pub solver: SolverOptions,
    pub init: InitSpec,
    pub phantom: PhantomSpec,
    pub noise_sigma: f64,
    pub seed: u64,
    pub baseline_iterations: usize,
    pub baseline_relaxation: f64,
    pub sinogram_path: Option<PathBuf>,
    pub truth_path: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "experiment".into(),
            nx: 64,
            ny: 64,
            pixel_size: 1.0,
            angles: AngleSpec::Uniform { views: 4, start: 0.0, end: PI },
            n_det: None,
            det_spacing: None,
            center_spacing: 8,
            sigma: None,
            beta: None,
            eps: DEFAULT_EPS,
            u_in: 1.0,
            u_ex: 0.0,
            solver: SolverOptions::default(),
            init: InitSpec::Seed(Seed::default()),
            phantom: PhantomSpec::Geometric(PhantomKind::TwoDisks),
            noise_sigma: 0.0,
            seed: 0,
            baseline_iterations: 200,
            baseline_relaxation: 1.0,
            sinogram_path: None,
            truth_path: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// `1.5`, `pi`, `-pi/4`, `5pi/6`, `2*pi/3`.
pub fn parse_radians(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().ok().filter(|d| *d != 0.0)?),
        None => (t, 1.0),
    };
    let coeff = num.strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    let c = match coeff {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let v = c * PI / den;
    v.is_finite().then_some(v)
}

fn parse_disk(text: &str) -> Option<Disk> {
    let v: Vec<f64> = text.split(',').map(|s| s.trim().parse::<f64>().ok()).collect::<Option<_>>()?;
    match v.as_slice() {
        [cx, cy, r] => Some(Disk { cx: *cx, cy: *cy, r: *r }),
        _ => None,
    }
}

pub fn parse_phantom(text: &str) -> Result<PhantomSpec> {
    let bad = || Error::invalid(format!("phantom: cannot parse '{text}'"));
    let (kind, arg) = match text.split_once(':') {
        Some((k, a)) => (k.trim(), a.trim()),
        None => (text.trim(), ""),
    };
    let spec = match kind {
        "two-disks" => PhantomSpec::Geometric(PhantomKind::TwoDisks),
        "disk" => PhantomSpec::Geometric(PhantomKind::Disk(parse_disk(arg).ok_or_else(bad)?)),
        "rbf-disk" => PhantomSpec::RbfDisk(parse_disk(arg).ok_or_else(bad)?),
        "annulus" => {
            let v: Vec<f64> =
                arg.split(',').map(|s| s.trim().parse::<f64>().ok()).collect::<Option<_>>().ok_or_else(bad)?;
            match v.as_slice() {
                [r_in, r_out] => PhantomSpec::Geometric(PhantomKind::Annulus { r_in: *r_in, r_out: *r_out }),
                _ => return Err(bad()),
            }
        }
        "blobs" | "blob-union" => {
            let disks: Vec<Disk> = arg.split(';').map(parse_disk).collect::<Option<_>>().ok_or_else(bad)?;
            PhantomSpec::Geometric(PhantomKind::BlobUnion(disks))
        }
        other => return Err(Error::invalid(format!("phantom: unknown kind '{other}'"))),
    };
    Ok(spec)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected 'key = value', found '{content}'")))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::parse(line, format!("unknown key '{key}'")));
            }
            if entries.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(Error::parse(line, format!("duplicate key '{key}'")));
            }
        }
        Self::from_entries(&entries)
    }

    fn from_entries(entries: &BTreeMap<String, (usize, String)>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let get = |key: &str| entries.get(key).map(|(l, v)| (*l, v.as_str()));
        fn num<T: std::str::FromStr>(key: &str, (line, v): (usize, &str)) -> Result<T> {
            v.parse::<T>().map_err(|_| Error::parse(line, format!("{key}: invalid value '{v}'")))
        }
        let float = |key: &str, e: (usize, &str)| -> Result<f64> {
            let v: f64 = num(key, e)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(e.0, format!("{key}: value must be finite")))
            }
        };
        let radians = |key: &str, (line, v): (usize, &str)| {
            parse_radians(v).ok_or_else(|| Error::parse(line, format!("{key}: invalid angle '{v}'")))
        };

        if let Some((_, v)) = get("experiment") {
            cfg.experiment = v.to_string();
        }
        if let Some(e) = get("grid.nx") {
            cfg.nx = num("grid.nx", e)?;
        }
        if let Some(e) = get("grid.ny") {
            cfg.ny = num("grid.ny", e)?;
        }
        if let Some(e) = get("grid.pixel_size") {
            cfg.pixel_size = float("grid.pixel_size", e)?;
        }

        if let Some((line, v)) = get("geometry.angles") {
            for key in ["geometry.views", "geometry.range_start", "geometry.range_end"] {
                if entries.contains_key(key) {
                    return Err(Error::parse(line, format!("geometry.angles cannot be combined with {key}")));
                }
            }
            let list = v
                .split(',')
                .map(|t| parse_radians(t).ok_or_else(|| Error::parse(line, format!("geometry.angles: invalid angle '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            cfg.angles = AngleSpec::Explicit(list);
        } else {
            let (mut views, mut start, mut end) = (4, 0.0, PI);
            if let Some(e) = get("geometry.views") {
                views = num("geometry.views", e)?;
            }
            if let Some(e) = get("geometry.range_start") {
                start = radians("geometry.range_start", e)?;
            }
            if let Some(e) = get("geometry.range_end") {
                end = radians("geometry.range_end", e)?;
            }
            cfg.angles = AngleSpec::Uniform { views, start, end };
        }
        if let Some(e) = get("geometry.n_det") {
            cfg.n_det = Some(num("geometry.n_det", e)?);
        }
        if let Some(e) = get("geometry.det_spacing") {
            cfg.det_spacing = Some(float("geometry.det_spacing", e)?);
        }

        if let Some(e) = get("dictionary.center_spacing") {
            cfg.center_spacing = num("dictionary.center_spacing", e)?;
        }
        if let Some(e) = get("dictionary.sigma") {
            cfg.sigma = Some(float("dictionary.sigma", e)?);
        }
        if let Some(e) = get("dictionary.beta") {
            cfg.beta = Some(float("dictionary.beta", e)?);
        }
        if let Some(e) = get("heaviside.eps") {
            cfg.eps = float("heaviside.eps", e)?;
        }
        if let Some(e) = get("levels.u_in") {
            cfg.u_in = float("levels.u_in", e)?;
        }
        if let Some(e) = get("levels.u_ex") {
            cfg.u_ex = float("levels.u_ex", e)?;
        }

        let s = &mut cfg.solver;
        if let Some(e) = get("solver.max_iters") {
            s.max_iters = num("solver.max_iters", e)?;
        }
        if let Some(e) = get("solver.grad_tol") {
            s.grad_tol = Some(float("solver.grad_tol", e)?);
        }
        if let Some(e) = get("solver.rel_obj_tol") {
            s.rel_obj_tol = float("solver.rel_obj_tol", e)?;
        }
        if let Some(e) = get("solver.stall_iters") {
            s.stall_iters = num("solver.stall_iters", e)?;
        }
        if let Some(e) = get("solver.lm_damping_init") {
            s.lm_damping_init = float("solver.lm_damping_init", e)?;
        }
        let mut ls = LineSearchOptions::default();
        if let Some(e) = get("solver.armijo_c") {
            ls.c = float("solver.armijo_c", e)?;
        }
        if let Some(e) = get("solver.armijo_shrink") {
            ls.shrink = float("solver.armijo_shrink", e)?;
        }
        if let Some(e) = get("solver.max_backtracks") {
            ls.max_backtracks = num("solver.max_backtracks", e)?;
        }
        s.line_search = ls;
        if let Some((line, v)) = get("solver.init") {
            cfg.init = match v.strip_prefix("mask:") {
                Some(path) => InitSpec::MaskFile(PathBuf::from(path.trim())),
                None => InitSpec::Seed(v.parse().map_err(|e: Error| Error::parse(line, format!("solver.init: {e}")))?),
            };
        }

        if let Some((line, v)) = get("phantom") {
            cfg.phantom = parse_phantom(v).map_err(|e| Error::parse(line, e.to_string()))?;
        }
        if let Some(e) = get("noise_sigma") {
            cfg.noise_sigma = float("noise_sigma", e)?;
        }
        if let Some(e) = get("seed") {
            cfg.seed = num("seed", e)?;
        }
        if let Some(e) = get("baseline.iterations") {
            cfg.baseline_iterations = num("baseline.iterations", e)?;
        }
        if let Some(e) = get("baseline.relaxation") {
            cfg.baseline_relaxation = float("baseline.relaxation", e)?;
        }
        if let Some((_, v)) = get("input.sinogram") {
            cfg.sinogram_path = Some(PathBuf::from(v));
        }
        if let Some((_, v)) = get("input.truth") {
            cfg.truth_path = Some(PathBuf::from(v));
        }
        if let Some((_, v)) = get("output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every setting by building the objects it describes.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.geometry(&grid)?;
        self.levels()?;
        self.solver.validate()?;
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid(format!("noise_sigma must be non-negative, got {}", self.noise_sigma)));
        }
        if self.baseline_iterations == 0 {
            return Err(Error::invalid("baseline.iterations must be at least 1"));
        }
        if !(self.baseline_relaxation > 0.0 && self.baseline_relaxation < 2.0) {
            return Err(Error::invalid("baseline.relaxation must lie in (0, 2)"));
        }
        if self.center_spacing == 0 || self.nx / self.center_spacing == 0 || self.ny / self.center_spacing == 0 {
            return Err(Error::invalid(format!(
                "dictionary.center_spacing {} leaves no centers on a {}x{} grid",
                self.center_spacing, self.nx, self.ny
            )));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::invalid(format!("dictionary.sigma must be positive, got {s}")));
            }
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(Error::invalid(format!("dictionary.beta must be positive, got {b}")));
            }
        }
        if self.experiment.contains(',') || self.experiment.is_empty() {
            return Err(Error::invalid("experiment name must be non-empty and contain no commas"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<ImageGrid> {
        ImageGrid::new(self.nx, self.ny, self.pixel_size)
    }

    pub fn geometry(&self, grid: &ImageGrid) -> Result<ScanGeometry> {
        ScanGeometry::new(
            self.angles.angles()?,
            self.n_det.unwrap_or_else(|| grid.default_detector_count()),
            self.det_spacing.unwrap_or(grid.pixel_size()),
        )
    }

    pub fn sigma_for(&self, grid: &ImageGrid) -> f64 {
        self.sigma.unwrap_or_else(|| default_sigma(grid, self.center_spacing))
    }

    pub fn dictionary(&self, grid: &ImageGrid) -> Result<RbfDictionary> {
        RbfDictionary::new(grid, self.center_spacing, self.sigma_for(grid), self.beta)
    }

    pub fn levels(&self) -> Result<ImageLevels> {
        ImageLevels::new(self.u_in, self.u_ex, self.eps)
    }

    pub fn sinogram_path(&self) -> PathBuf {
        self.sinogram_path.clone().unwrap_or_else(|| self.output_dir.join("sinogram.csv"))
    }

    pub fn truth_path(&self) -> PathBuf {
        self.truth_path.clone().unwrap_or_else(|| self.output_dir.join("truth.pgm"))
    }

    /// Every setting with defaults resolved, in config syntax.
    pub fn to_config_string(&self) -> Result<String> {
        let grid = self.grid()?;
        let geom = self.geometry(&grid)?;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("experiment", self.experiment.clone());
        kv("grid.nx", self.nx.to_string());
        kv("grid.ny", self.ny.to_string());
        kv("grid.pixel_size", self.pixel_size.to_string());
        match &self.angles {
            AngleSpec::Uniform { views, start, end } => {
                kv("geometry.views", views.to_string());
                kv("geometry.range_start", start.to_string());
                kv("geometry.range_end", end.to_string());
            }
            AngleSpec::Explicit(list) => {
                kv("geometry.angles", list.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
            }
        }
        kv("geometry.n_det", geom.n_det().to_string());
        kv("geometry.det_spacing", geom.det_spacing().to_string());
        kv("dictionary.center_spacing", self.center_spacing.to_string());
        kv("dictionary.sigma", self.sigma_for(&grid).to_string());
        if let Some(b) = self.beta {
            kv("dictionary.beta", b.to_string());
        }
        kv("heaviside.eps", self.eps.to_string());
        kv("levels.u_in", self.u_in.to_string());
        kv("levels.u_ex", self.u_ex.to_string());
        let s = &self.solver;
        kv("solver.max_iters", s.max_iters.to_string());
        if let Some(t) = s.grad_tol {
            kv("solver.grad_tol", t.to_string());
        }
        kv("solver.rel_obj_tol", s.rel_obj_tol.to_string());
        kv("solver.stall_iters", s.stall_iters.to_string());
        kv("solver.lm_damping_init", s.lm_damping_init.to_string());
        kv("solver.armijo_c", s.line_search.c.to_string());
        kv("solver.armijo_shrink", s.line_search.shrink.to_string());
        kv("solver.max_backtracks", s.line_search.max_backtracks.to_string());
        kv(
            "solver.init",
            match &self.init {
                InitSpec::Seed(seed) => seed.to_string(),
                InitSpec::MaskFile(p) => format!("mask:{}", p.display()),
            },
        );
        kv("phantom", self.phantom.describe());
        kv("noise_sigma", self.noise_sigma.to_string());
        kv("seed", self.seed.to_string());
        kv("baseline.iterations", self.baseline_iterations.to_string());
        kv("baseline.relaxation", self.baseline_relaxation.to_string());
        if let Some(p) = &self.sinogram_path {
            kv("input.sinogram", p.display().to_string());
        }
        if let Some(p) = &self.truth_path {
            kv("input.truth", p.display().to_string());
        }
        kv("output_dir", self.output_dir.display().to_string());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radians_expressions() {
        assert_eq!(parse_radians("1.25"), Some(1.25));
        assert_eq!(parse_radians("pi"), Some(PI));
        assert_eq!(parse_radians("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_radians("5pi/6"), Some(5.0 * PI / 6.0));
        assert_eq!(parse_radians("2*pi/3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_radians("7 pi / 12"), Some(7.0 * PI / 12.0));
        assert_eq!(parse_radians("-pi/4"), Some(-PI / 4.0));
        assert_eq!(parse_radians("pie"), None);
        assert_eq!(parse_radians("pi/0"), None);
        assert_eq!(parse_radians("inf"), None);
    }

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::parse("# sparse\nexperiment = demo\ngeometry.views = 8 # eight\nsolver.init = circle:10\n").unwrap();
        assert_eq!(cfg.experiment, "demo");
        assert_eq!(cfg.angles, AngleSpec::Uniform { views: 8, start: 0.0, end: PI });
        assert_eq!(cfg.init, InitSpec::Seed(Seed::Circle { radius: Some(10.0) }));
        let grid = cfg.grid().unwrap();
        assert_eq!(cfg.geometry(&grid).unwrap().n_det(), 91);
        assert_eq!(cfg.sigma_for(&grid), 12.0);
    }

    #[test]
    fn unknown_and_malformed_entries() {
        let line_of = |t: &str| match ExperimentConfig::parse(t) {
            Err(Error::Parse { line, message }) => (line, message),
            other => panic!("expected parse error, got {other:?}"),
        };
        let (line, msg) = line_of("grid.nx = 32\ngrid.nz = 4\n");
        assert_eq!(line, 2);
        assert!(msg.contains("grid.nz"));
        assert_eq!(line_of("grid.nx 32\n").0, 1);
        assert_eq!(line_of("grid.nx = -3\n").0, 1);
        assert_eq!(line_of("grid.nx = 3\ngrid.nx = 4\n").0, 2);
        let (_, msg) = line_of("phantom = square:1\n");
        assert!(msg.contains("square"));
        assert!(line_of("solver.init = triangle\n").1.contains("triangle"));
        assert!(line_of("geometry.angles = 0,1\ngeometry.views = 3\n").1.contains("combined"));
        assert!(ExperimentConfig::parse("geometry.range_end = 0\n").is_err());
        assert!(ExperimentConfig::parse("heaviside.eps = 0\n").is_err());
        assert!(ExperimentConfig::parse("dictionary.center_spacing = 100\n").is_err());
    }

    #[test]
    fn phantom_specs() {
        assert_eq!(parse_phantom("two-disks").unwrap(), PhantomSpec::Geometric(PhantomKind::TwoDisks));
        assert_eq!(
            parse_phantom("blobs: 0,-2,14; -8,8,9").unwrap(),
            PhantomSpec::Geometric(PhantomKind::BlobUnion(vec![
                Disk { cx: 0.0, cy: -2.0, r: 14.0 },
                Disk { cx: -8.0, cy: 8.0, r: 9.0 }
            ]))
        );
        assert_eq!(parse_phantom("rbf-disk:1,2,3").unwrap(), PhantomSpec::RbfDisk(Disk { cx: 1.0, cy: 2.0, r: 3.0 }));
        assert!(parse_phantom("disk:1,2").is_err());
        assert!(parse_phantom("annulus:1").is_err());
    }

    #[test]
    fn dump_round_trips() {
        let text = "experiment = rt\ngeometry.angles = 0, pi/7, 1.3\ndictionary.beta = 0.2\nsolver.grad_tol = 1e-9\nphantom = blobs:0,-2,14;-8,8,9\nnoise_sigma = 0.01\nseed = 42\ninput.sinogram = /tmp/x.csv\nsolver.init = mask:seed.pgm\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let dump = cfg.to_config_string().unwrap();
        let again = ExperimentConfig::parse(&dump).unwrap();
        assert_eq!(again.to_config_string().unwrap(), dump);
        assert_eq!(again.angles, cfg.angles);
        assert_eq!(again.phantom, cfg.phantom);
        assert_eq!(again.solver, cfg.solver);
        assert_eq!(again.init, cfg.init);
        assert_eq!(again.sigma_for(&again.grid().unwrap()), 12.0);
    }
}
