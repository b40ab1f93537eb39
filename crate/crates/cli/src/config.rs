//! Run and sweep configuration files (TOML), their validation, and the
//! seeded initial-data generators.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use ksc_core::diagnostics::DiagnosticsConfig;
use ksc_core::dynamics::{PhysParams, RecordCadence, SolverConfig};
use ksc_core::expr::Expr;
use ksc_core::grid::{Field, Grid};
use ksc_core::motility::MotilitySpec;
use ksc_core::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub grid: GridBlock,
    pub params: ParamsBlock,
    pub initial: InitialBlock,
    pub eps: f64,
    pub solver: SolverBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default)]
    pub output: Option<OutputBlock>,
    #[serde(default)]
    pub analysis: AnalysisBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    /// Optional; must agree with the number of axes when given.
    #[serde(default)]
    pub dim: Option<usize>,
    pub cells: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub motility: MotilityBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotilityBlock {
    /// "power" or "custom"
    pub family: String,
    pub alpha: f64,
    #[serde(default)]
    pub s0: Option<f64>,
    /// Custom family: expressions in `s` for phi and its two derivatives.
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub dphi: Option<String>,
    #[serde(default)]
    pub d2phi: Option<String>,
    #[serde(default)]
    pub domain_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub u: InitialData,
    pub v: InitialData,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Constant {
        value: f64,
    },
    /// `base + amplitude * prod_axis cos(mode_a pi x_a / L_a)`
    Cosine {
        base: f64,
        amplitude: f64,
        modes: Vec<u32>,
    },
    /// `base + amplitude * exp(-|x - center|^2 / (2 width^2))`
    Gaussian {
        base: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// i.i.d. uniform(lo, hi), reproducible from the seed
    Random {
        lo: f64,
        hi: f64,
        seed: u64,
    },
    /// a field snapshot file
    File {
        path: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_linear_tol")]
    pub linear_tol: f64,
    #[serde(default = "default_max_linear_iters")]
    pub max_linear_iters: usize,
    #[serde(default)]
    pub record_dt: Option<f64>,
    #[serde(default)]
    pub record_steps: Option<usize>,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default = "default_blowup_guard")]
    pub blowup_guard: f64,
    #[serde(default = "default_upwind_order")]
    pub upwind_order: u8,
}

fn default_cfl() -> f64 {
    0.45
}
fn default_dt_max() -> f64 {
    1e-2
}
fn default_dt_min() -> f64 {
    1e-12
}
fn default_linear_tol() -> f64 {
    1e-10
}
fn default_max_linear_iters() -> usize {
    50_000
}
fn default_blowup_guard() -> f64 {
    1e12
}
fn default_upwind_order() -> u8 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsBlock {
    #[serde(default = "default_lp")]
    pub lp_exponents: Vec<f64>,
    #[serde(default = "default_pairs")]
    pub quasi_energy_pairs: Vec<[f64; 2]>,
}

fn default_lp() -> Vec<f64> {
    vec![2.0, 3.0]
}
fn default_pairs() -> Vec<[f64; 2]> {
    vec![[2.0, 4.0]]
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        DiagnosticsBlock {
            lp_exponents: default_lp(),
            quasi_energy_pairs: default_pairs(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Dimension for the threshold report; defaults to the grid dimension.
    #[serde(default)]
    pub n: Option<u32>,
    /// Override for the gradient-estimate constant; defaults to alpha^2.
    #[serde(default)]
    pub lambda_phi: Option<f64>,
}

/// Everything a run needs, in core types.
#[derive(Debug, Clone)]
pub struct BuiltRun {
    pub grid: Grid<f64>,
    pub params: PhysParams<f64>,
    pub u0: Field<f64>,
    pub v0: Field<f64>,
    pub eps: f64,
    pub solver: SolverConfig<f64>,
    pub diagnostics: DiagnosticsConfig,
    pub output_dir: Option<PathBuf>,
    pub analysis_n: u32,
    pub lambda_phi: Option<f64>,
}

/// Maps a byte offset of a parse error to a 1-based line number.
fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

pub fn parse_run_config(src: &str) -> Result<RunConfigFile> {
    toml::from_str::<RunConfigFile>(src).map_err(|e| {
        let loc = e
            .span()
            .map(|s| format!(" at line {}", line_of(src, s.start)))
            .unwrap_or_default();
        Error::Config(format!("{}{loc}", e.message()))
    })
}

pub fn load_run_config(path: &Path) -> Result<(RunConfigFile, String)> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = parse_run_config(&src)?;
    Ok((cfg, src))
}

impl MotilityBlock {
    pub fn build(&self) -> Result<MotilitySpec<f64>> {
        match self.family.as_str() {
            "power" => {
                if self.phi.is_some() || self.dphi.is_some() || self.d2phi.is_some() {
                    return Err(Error::Config(
                        "params.motility: expression fields are only valid for family = \"custom\""
                            .into(),
                    ));
                }
                match self.s0 {
                    Some(s0) => MotilitySpec::power_law_with_s0(self.alpha, s0),
                    None => MotilitySpec::power_law(self.alpha),
                }
            }
            "custom" => {
                let get = |name: &str, field: &Option<String>| -> Result<Expr> {
                    let text = field.as_ref().ok_or_else(|| {
                        Error::Config(format!(
                            "params.motility.{name} is required for family = \"custom\""
                        ))
                    })?;
                    Expr::parse(text)
                        .map_err(|e| Error::Config(format!("params.motility.{name}: {e}")))
                };
                let phi = get("phi", &self.phi)?;
                let dphi = get("dphi", &self.dphi)?;
                let d2phi = get("d2phi", &self.d2phi)?;
                MotilitySpec::custom(phi, dphi, d2phi, self.alpha, self.s0, self.domain_max)
            }
            other => Err(Error::Config(format!(
                "params.motility.family must be \"power\" or \"custom\", got \"{other}\""
            ))),
        }
    }
}

impl InitialData {
    pub fn generate(&self, grid: &Grid<f64>, which: &str) -> Result<Field<f64>> {
        let field = match self {
            InitialData::Constant { value } => Field::constant(grid, *value),
            InitialData::Cosine {
                base,
                amplitude,
                modes,
            } => {
                if modes.len() != grid.dim() {
                    return Err(Error::Config(format!(
                        "initial.{which}: cosine modes must list one mode per axis"
                    )));
                }
                let modes = modes.clone();
                let lengths = grid.lengths().to_vec();
                Field::from_fn(grid, |x, y| {
                    let mut c = (modes[0] as f64 * std::f64::consts::PI * x / lengths[0]).cos();
                    if modes.len() == 2 {
                        c *= (modes[1] as f64 * std::f64::consts::PI * y / lengths[1]).cos();
                    }
                    base + amplitude * c
                })
            }
            InitialData::Gaussian {
                base,
                amplitude,
                center,
                width,
            } => {
                if center.len() != grid.dim() {
                    return Err(Error::Config(format!(
                        "initial.{which}: gaussian center must have one coordinate per axis"
                    )));
                }
                if !(*width > 0.0) {
                    return Err(Error::Config(format!(
                        "initial.{which}: gaussian width must be positive"
                    )));
                }
                let center = center.clone();
                let w2 = 2.0 * width * width;
                Field::from_fn(grid, |x, y| {
                    let mut r2 = (x - center[0]) * (x - center[0]);
                    if center.len() == 2 {
                        r2 += (y - center[1]) * (y - center[1]);
                    }
                    base + amplitude * (-r2 / w2).exp()
                })
            }
            InitialData::Random { lo, hi, seed } => {
                if !(*lo > 0.0 && hi > lo) {
                    return Err(Error::Config(format!(
                        "initial.{which}: random bounds need 0 < lo < hi"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = (0..grid.total_cells())
                    .map(|_| rng.gen_range(*lo..*hi))
                    .collect();
                Field::new(grid.clone(), values)?
            }
            InitialData::File { path } => {
                let file = std::fs::File::open(path).map_err(|e| {
                    Error::Config(format!("initial.{which}: cannot open {path}: {e}"))
                })?;
                let mut reader = std::io::BufReader::new(file);
                let (field, _) = Field::read_csv(&mut reader)?;
                if field.grid() != grid {
                    return Err(Error::Config(format!(
                        "initial.{which}: field file {path} does not match the configured grid"
                    )));
                }
                field
            }
        };
        let min = field.min();
        if !(min > 0.0) {
            return Err(Error::Config(format!(
                "initial.{which}: initial data must be strictly positive everywhere (min = {min})"
            )));
        }
        if !field.is_finite() {
            return Err(Error::Config(format!(
                "initial.{which}: initial data must be finite"
            )));
        }
        Ok(field)
    }
}

impl RunConfigFile {
    /// Validates the file and builds the core-typed run description.
    pub fn build(&self) -> Result<BuiltRun> {
        if let Some(dim) = self.grid.dim {
            if dim != self.grid.cells.len() {
                return Err(Error::Config(format!(
                    "grid: dim = {dim} disagrees with {} configured axes",
                    self.grid.cells.len()
                )));
            }
        }
        let grid = Grid::new(&self.grid.cells, &self.grid.lengths)
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        let motility = self.params.motility.build()?;
        let params = PhysParams::new(self.params.a, self.params.b, self.params.gamma, motility)
            .map_err(|e| Error::Config(format!("params: {e}")))?;
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!(
                "eps must lie in [0, 1), got {}",
                self.eps
            )));
        }
        let u0 = self.initial.u.generate(&grid, "u")?;
        let v0 = self.initial.v.generate(&grid, "v")?;

        let s = &self.solver;
        let cadence = match (s.record_dt, s.record_steps) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "solver: set record_dt or record_steps, not both".into(),
                ))
            }
            (Some(dt), None) => RecordCadence::Time(dt),
            (None, Some(k)) => RecordCadence::Steps(k),
            (None, None) => RecordCadence::Time(s.t_end / 200.0),
        };
        let solver = SolverConfig {
            cfl_safety: s.cfl_safety,
            dt_max: s.dt_max,
            dt_min: s.dt_min,
            t_end: s.t_end,
            linear_tol: s.linear_tol,
            max_linear_iters: s.max_linear_iters,
            cadence,
            snapshots: s.snapshots,
            blowup_guard: s.blowup_guard,
            upwind_order: s.upwind_order,
        };
        solver
            .validate()
            .map_err(|e| Error::Config(format!("solver: {e}")))?;

        let d = &self.diagnostics;
        for &p in &d.lp_exponents {
            if !(p >= 1.0) {
                return Err(Error::Config(format!(
                    "diagnostics: lp exponents need p >= 1, got {p}"
                )));
            }
        }
        for &[p, q] in &d.quasi_energy_pairs {
            if !(p > 1.0) || !(q >= 2.0) {
                return Err(Error::Config(format!(
                    "diagnostics: quasi-energy pairs need p > 1 and q >= 2, got ({p}, {q})"
                )));
            }
        }
        let diagnostics = DiagnosticsConfig {
            lp_exponents: d.lp_exponents.clone(),
            quasi_energy_pairs: d.quasi_energy_pairs.iter().map(|&[p, q]| (p, q)).collect(),
        };

        Ok(BuiltRun {
            analysis_n: self.analysis.n.unwrap_or(grid.dim() as u32),
            lambda_phi: self.analysis.lambda_phi,
            grid,
            params,
            u0,
            v0,
            eps: self.eps,
            solver,
            diagnostics,
            output_dir: self.output.as_ref().map(|o| o.dir.clone()),
        })
    }
}

// --- sweep -----------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfigFile {
    pub base: RunConfigFile,
    pub sweep: SweepBlock,
    pub output: OutputBlock,
}

/// Cross-product axes; an omitted axis keeps the base value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    /// cells per axis (applied to every axis)
    #[serde(default)]
    pub cells: Option<Vec<usize>>,
}

/// One sweep point, in cross-product order `b x alpha x eps x cells`.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub b: f64,
    pub alpha: f64,
    pub eps: f64,
    pub cells: usize,
    pub config: RunConfigFile,
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfigFile> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read sweep config {}: {e}", path.display())))?;
    toml::from_str::<SweepConfigFile>(&src).map_err(|e| {
        let loc = e
            .span()
            .map(|s| format!(" at line {}", line_of(&src, s.start)))
            .unwrap_or_default();
        Error::Config(format!("{}{loc}", e.message()))
    })
}

impl SweepConfigFile {
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let bs = self
            .sweep
            .b
            .clone()
            .unwrap_or_else(|| vec![self.base.params.b]);
        let alphas = self
            .sweep
            .alpha
            .clone()
            .unwrap_or_else(|| vec![self.base.params.motility.alpha]);
        let epss = self
            .sweep
            .eps
            .clone()
            .unwrap_or_else(|| vec![self.base.eps]);
        let cells = self
            .sweep
            .cells
            .clone()
            .unwrap_or_else(|| vec![self.base.grid.cells[0]]);
        let mut points = Vec::new();
        let mut index = 0;
        for &b in &bs {
            for &alpha in &alphas {
                for &eps in &epss {
                    for &n in &cells {
                        let mut config = self.base.clone();
                        config.params.b = b;
                        config.params.motility.alpha = alpha;
                        config.eps = eps;
                        config.grid.cells = vec![n; config.grid.cells.len()];
                        config.output = None;
                        // each point must itself be a valid run configuration
                        config.build().map_err(|e| {
                            Error::Config(format!(
                                "sweep point {index} (b={b}, alpha={alpha}, eps={eps}, cells={n}): {e}"
                            ))
                        })?;
                        points.push(SweepPoint {
                            index,
                            b,
                            alpha,
                            eps,
                            cells: n,
                            config,
                        });
                        index += 1;
                    }
                }
            }
        }
        Ok(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const GOOD: &str = r#"
eps = 1e-3

[grid]
cells = [64]
lengths = [1.0]

[params]
a = 1.0
b = 1.0
gamma = 2.0

[params.motility]
family = "power"
alpha = 2.0

[initial.u]
kind = "constant"
value = 1.0

[initial.v]
kind = "cosine"
base = 1.0
amplitude = 0.2
modes = [1]

[solver]
t_end = 0.5
record_dt = 0.05
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = parse_run_config(GOOD).unwrap();
        let built = cfg.build().unwrap();
        assert_eq!(built.grid.total_cells(), 64);
        assert_eq!(built.analysis_n, 1);
        assert!(built.output_dir.is_none());
        assert!(built.v0.min() > 0.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = GOOD.replace("alpha = 2.0", "alpha = \"two\"");
        let err = parse_run_config(&bad).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        // unknown fields are rejected
        let bad = format!("{GOOD}\n[solver2]\nx = 1\n");
        assert!(parse_run_config(&bad).is_err());
    }

    #[test]
    fn nonpositive_initial_data_rejected() {
        // cosine dips below zero near the wall
        let bad = GOOD.replace("amplitude = 0.2", "amplitude = 1.5");
        let cfg = parse_run_config(&bad).unwrap();
        let err = cfg.build().unwrap_err().to_string();
        assert!(err.contains("strictly positive"), "{err}");
    }

    #[test]
    fn random_initial_data_is_seeded() {
        let src = GOOD.replace(
            "kind = \"constant\"\nvalue = 1.0",
            "kind = \"random\"\nlo = 0.5\nhi = 1.5\nseed = 42",
        );
        let cfg = parse_run_config(&src).unwrap();
        let a = cfg.build().unwrap();
        let b = cfg.build().unwrap();
        assert_eq!(a.u0, b.u0, "same seed, same field");
    }

    #[test]
    fn custom_motility_from_expressions() {
        let src = GOOD.replace(
            "family = \"power\"\nalpha = 2.0",
            "family = \"custom\"\nalpha = 1.0\nphi = \"s*(1+s)\"\ndphi = \"1+2*s\"\nd2phi = \"2\"",
        );
        let cfg = parse_run_config(&src).unwrap();
        let built = cfg.build().unwrap();
        built
            .params
            .motility
            .verify_derivative_consistency()
            .unwrap();
        // missing derivative expression is a config error
        let src = GOOD.replace(
            "family = \"power\"\nalpha = 2.0",
            "family = \"custom\"\nalpha = 1.0\nphi = \"s\"",
        );
        let err = parse_run_config(&src)
            .unwrap()
            .build()
            .unwrap_err()
            .to_string();
        assert!(err.contains("dphi"), "{err}");
    }

    #[test]
    fn scheme_flags_and_dim_validated() {
        // only first-order upwinding exists in v1
        let src = GOOD.replace(
            "record_dt = 0.05",
            "record_dt = 0.05
upwind_order = 2",
        );
        let err = parse_run_config(&src)
            .unwrap()
            .build()
            .unwrap_err()
            .to_string();
        assert!(err.contains("first-order"), "{err}");

        // declared dim must match the axis count
        let src = GOOD.replace(
            "cells = [64]",
            "dim = 2
cells = [64]",
        );
        let err = parse_run_config(&src)
            .unwrap()
            .build()
            .unwrap_err()
            .to_string();
        assert!(err.contains("disagrees"), "{err}");
        let src = GOOD.replace(
            "cells = [64]",
            "dim = 1
cells = [64]",
        );
        assert!(parse_run_config(&src).unwrap().build().is_ok());
    }

    #[test]
    fn file_initial_data_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::line(64, 1.0).unwrap();
        let field = Field::from_fn(&grid, |x: f64, _| 1.0 + 0.5 * (3.0 * x).sin().abs());
        let path = dir.path().join("u0.csv");
        let mut buf = Vec::new();
        field.write_csv(&mut buf, None).unwrap();
        std::fs::write(&path, buf).unwrap();

        let src = GOOD.replace(
            "kind = \"constant\"\nvalue = 1.0",
            &format!("kind = \"file\"\npath = \"{}\"", path.display()),
        );
        let built = parse_run_config(&src).unwrap().build().unwrap();
        assert_eq!(built.u0, field);

        // grid mismatch is a config error
        let src = src.replace("cells = [64]", "cells = [32]");
        let err = parse_run_config(&src)
            .unwrap()
            .build()
            .unwrap_err()
            .to_string();
        assert!(err.contains("does not match"), "{err}");
    }

    #[test]
    fn sweep_cross_product_order_and_count() {
        let src = format!(
            "[base]\n{}\n[sweep]\nb = [0.5, 1.0]\nalpha = [1.0, 2.0, 3.0]\n\n[output]\ndir = \"out\"\n",
            GOOD.replace("[grid]", "[base.grid]")
                .replace("[params]", "[base.params]")
                .replace("[params.motility]", "[base.params.motility]")
                .replace("[initial.u]", "[base.initial.u]")
                .replace("[initial.v]", "[base.initial.v]")
                .replace("[solver]", "[base.solver]")
        );
        let cfg: SweepConfigFile = toml::from_str(&src).unwrap();
        let points = cfg.points().unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[0].b, 0.5);
        assert_eq!(points[0].alpha, 1.0);
        assert_eq!(points[1].alpha, 2.0);
        assert_eq!(points[3].b, 1.0);
        for (k, p) in points.iter().enumerate() {
            assert_eq!(p.index, k);
        }
    }
}
