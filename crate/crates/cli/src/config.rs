//! Run configuration: input documents, flag parsing, and overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use hirota_rh::types::{SolitonSpec, SpecDocument};
use hirota_rh::{Complex, GridSpec, Reduction, SignConvention};
use serde::Deserialize;
use serde_json::Value;

/// Outcome classes; each maps to exactly one process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unparseable or invalid spec / configuration.
    Spec(String),
    Io(String),
    Verify(String),
    Scatter(String),
    Roundtrip(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Spec(_) => 2,
            Failure::Io(_) => 3,
            Failure::Verify(_) => 4,
            Failure::Scatter(_) => 5,
            Failure::Roundtrip(_) => 6,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (class, msg) = match self {
            Failure::Spec(m) => ("spec error", m),
            Failure::Io(m) => ("i/o error", m),
            Failure::Verify(m) => ("verification failed", m),
            Failure::Scatter(m) => ("scattering failed", m),
            Failure::Roundtrip(m) => ("round trip failed", m),
        };
        write!(f, "{class}: {msg}")
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// `x0:x1:nx,t0:t1:nt`.
pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let (xs, ts) = s
        .split_once(',')
        .ok_or_else(|| format!("grid `{s}` must look like x0:x1:nx,t0:t1:nt"))?;
    let (x0, x1, nx) = parse_triple(xs)?;
    let (t0, t1, nt) = parse_triple(ts)?;
    GridSpec::new(x0, x1, nx, t0, t1, nt).map_err(|e| format!("grid `{s}`: {e}"))
}

/// `lmin:lmax:count`.
pub fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (min, max, count) = parse_triple(s)?;
    if count == 0 || !(max >= min) {
        return Err(format!("sweep `{s}` needs lmin <= lmax and count >= 1"));
    }
    Ok(Sweep { min, max, count })
}

fn parse_triple(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("`{s}` must have the form a:b:n"));
    }
    let a = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("`{}`: {e}", parts[0]))?;
    let b = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("`{}`: {e}", parts[1]))?;
    let n = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("`{}`: {e}", parts[2]))?;
    Ok((a, b, n))
}

/// Optional `"run"` object inside the spec file; flags override every field.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub grid: Option<String>,
    pub sweep: Option<String>,
    pub levels: Option<u32>,
    pub format: Option<Format>,
    pub perturb: Option<f64>,
}

/// Gaussian test potential accepted by `scatter`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianDocument {
    pub amplitudes: Vec<Complex>,
    #[serde(default)]
    pub center: f64,
    pub width: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianFile {
    components: usize,
    #[serde(default = "regularized")]
    convention: SignConvention,
    gaussian: GaussianDocument,
}

fn regularized() -> SignConvention {
    SignConvention::Regularized
}

#[derive(Clone, Debug)]
pub enum Input {
    Soliton(SolitonSpec),
    Gaussian {
        components: usize,
        reduction: Reduction,
        gaussian: GaussianDocument,
    },
}

#[derive(Clone, Debug)]
pub struct LoadedInput {
    pub input: Input,
    pub run: RunSection,
    /// The input document without its `"run"` section, echoed into sidecars.
    pub echo: Value,
}

fn typed<T: serde::de::DeserializeOwned>(value: Value, what: &str) -> Outcome<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Failure::Spec(format!("{what}: field `{path}`: {}", e.inner()))
    })
}

pub fn load_input(path: &Path) -> Outcome<LoadedInput> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let mut value: Value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        Failure::Spec(format!(
            "{}: malformed JSON at `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Failure::Spec(format!("{}: top level must be an object", path.display())))?;
    let run = match obj.remove("run") {
        Some(v) => typed::<RunSection>(v, "run section")?,
        None => RunSection::default(),
    };
    let echo = value.clone();
    let input = if value.get("gaussian").is_some() {
        let g: GaussianFile = typed(value, "gaussian document")?;
        if g.gaussian.amplitudes.len() != g.components {
            return Err(Failure::Spec(format!(
                "gaussian document: field `gaussian.amplitudes` has {} entries, `components` is {}",
                g.gaussian.amplitudes.len(),
                g.components
            )));
        }
        if !(g.gaussian.width > 0.0) {
            return Err(Failure::Spec(
                "gaussian document: field `gaussian.width` must be positive".into(),
            ));
        }
        Input::Gaussian {
            components: g.components,
            reduction: g.convention.reduction(),
            gaussian: g.gaussian,
        }
    } else {
        let doc: SpecDocument = typed(value, "spec")?;
        let spec = SolitonSpec::from_document(doc);
        hirota_rh::spectral::validate_spec(&spec)
            .into_result()
            .map_err(|e| Failure::Spec(e.to_string()))?;
        Input::Soliton(spec)
    };
    Ok(LoadedInput { input, run, echo })
}

/// Fully resolved configuration of one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec_path: PathBuf,
    pub output_path: PathBuf,
    pub format: Format,
    pub grid: Option<GridSpec>,
    pub lambda_sweep: Option<Sweep>,
    pub refine_levels: u32,
    pub perturb: f64,
    pub force: bool,
}

/// Values given on the command line (all optional except the paths).
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub format: Option<Format>,
    pub grid: Option<GridSpec>,
    pub sweep: Option<Sweep>,
    pub levels: Option<u32>,
    pub perturb: Option<f64>,
}

pub fn resolve(
    spec_path: PathBuf,
    output_path: PathBuf,
    force: bool,
    flags: Overrides,
    run: &RunSection,
) -> Outcome<RunConfig> {
    if spec_path.as_os_str().is_empty() || output_path.as_os_str().is_empty() {
        return Err(Failure::Spec("--spec and --out must be non-empty".into()));
    }
    let grid = match flags.grid {
        Some(g) => Some(g),
        None => run
            .grid
            .as_deref()
            .map(parse_grid)
            .transpose()
            .map_err(|e| Failure::Spec(format!("run section: field `run.grid`: {e}")))?,
    };
    let lambda_sweep = match flags.sweep {
        Some(s) => Some(s),
        None => run
            .sweep
            .as_deref()
            .map(parse_sweep)
            .transpose()
            .map_err(|e| Failure::Spec(format!("run section: field `run.sweep`: {e}")))?,
    };
    let refine_levels = flags.levels.or(run.levels).unwrap_or(3);
    if refine_levels < 1 {
        return Err(Failure::Spec("--levels must be at least 1".into()));
    }
    let perturb = flags.perturb.or(run.perturb).unwrap_or(0.0);
    if !(perturb >= 0.0) || !perturb.is_finite() {
        return Err(Failure::Spec("--perturb must be a finite non-negative number".into()));
    }
    Ok(RunConfig {
        spec_path,
        output_path,
        format: flags.format.or(run.format).unwrap_or(Format::Csv),
        grid,
        lambda_sweep,
        refine_levels,
        perturb,
        force,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_sweep_syntax() {
        let g = parse_grid("-10:10:401,0:1:11").unwrap();
        assert_eq!((g.nx, g.nt, g.x0, g.t1), (401, 11, -10.0, 1.0));
        assert!(parse_grid("-10:10:401").is_err());
        assert!(parse_grid("a:10:401,0:1:11").is_err());
        let s = parse_sweep("-3:3:61").unwrap();
        assert_eq!((s.min, s.max, s.count), (-3.0, 3.0, 61));
        assert!(parse_sweep("3:-3:61").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let run = RunSection {
            grid: Some("-5:5:11,0:1:3".into()),
            levels: Some(2),
            format: Some(Format::Json),
            ..Default::default()
        };
        let flags = Overrides {
            levels: Some(4),
            ..Default::default()
        };
        let cfg = resolve("a".into(), "b".into(), false, flags, &run).unwrap();
        assert_eq!(cfg.refine_levels, 4);
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.grid.unwrap().nx, 11);
    }
}
