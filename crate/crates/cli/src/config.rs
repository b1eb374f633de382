//! Run configuration: `[section]` headers with `key = value` lines, `#`
//! comments and quoted expression strings.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sonine_core::expr::Expr;
use sonine_core::kernels::{exponent_preset, weight_preset, KernelPair, Normalization, Weight};
use sonine_core::quadrature::{default_grading, Mesh, DEFAULT_JACOBI_NODES};
use sonine_core::sonine::{CONTINUITY_TOLERANCE, IDENTITY_TOLERANCE};

use crate::CliError;

const MAX_STEPS: usize = 1 << 16;
const MAX_INTERIOR: usize = 4096;
const MAX_JACOBI: usize = 200;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub weight: WeightSection,
    pub forcing: Option<ForcingSection>,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub preset: Option<String>,
    /// Parameter of the `abel-const` preset.
    pub value: Option<f64>,
    pub alpha: Option<String>,
    #[serde(default = "unit")]
    pub horizon: f64,
    #[serde(default = "plain")]
    pub normalization: String,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            preset: None,
            value: None,
            alpha: None,
            horizon: 1.0,
            normalization: plain(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    pub preset: Option<String>,
    pub w: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    pub f: Option<String>,
    pub exact: Option<String>,
    /// Build `f` from `exact` (VIE kinds) or from `time`·`space` (pde).
    #[serde(default)]
    pub manufactured: bool,
    #[serde(default)]
    pub c: f64,
    pub time: Option<String>,
    pub space: Option<String>,
    pub initial: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub n: Option<usize>,
    pub grading: Option<f64>,
    #[serde(default)]
    pub uniform: bool,
    /// Interior spatial nodes (pde).
    pub interior: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub jacobi_n: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(default = "csc_tol")]
    pub csc: f64,
    #[serde(default = "continuity_tol")]
    pub continuity: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection {
            csc: csc_tol(),
            continuity: continuity_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "out_dir")]
    pub dir: PathBuf,
    #[serde(default = "csv_only")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: out_dir(),
            formats: csv_only(),
        }
    }
}

fn unit() -> f64 {
    1.0
}
fn plain() -> String {
    "plain".into()
}
fn csc_tol() -> f64 {
    IDENTITY_TOLERANCE
}
fn continuity_tol() -> f64 {
    CONTINUITY_TOLERANCE
}
fn out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn csv_only() -> Vec<String> {
    vec!["csv".into()]
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn parse_expr(field: &str, text: &str) -> Result<Expr, CliError> {
    Expr::parse(text).map_err(|e| bad(format!("{field} = \"{text}\": {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let k = &self.kernel;
        if !(k.horizon > 0.0 && k.horizon.is_finite()) {
            return Err(bad(format!("kernel.horizon must be positive, got {}", k.horizon)));
        }
        if let Some(n) = self.mesh.n {
            if n == 0 || n > MAX_STEPS {
                return Err(bad(format!("mesh.n must be in 1..={MAX_STEPS}, got {n}")));
            }
        }
        if let Some(r) = self.mesh.grading {
            if !(1.0..=20.0).contains(&r) {
                return Err(bad(format!("mesh.grading must be in [1, 20], got {r}")));
            }
        }
        if let Some(m) = self.mesh.interior {
            if m == 0 || m > MAX_INTERIOR {
                return Err(bad(format!("mesh.interior must be in 1..={MAX_INTERIOR}, got {m}")));
            }
        }
        if let Some(n) = self.quadrature.jacobi_n {
            if n == 0 || n > MAX_JACOBI {
                return Err(bad(format!("quadrature.jacobi_n must be in 1..={MAX_JACOBI}, got {n}")));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [("csc", t.csc), ("continuity", t.continuity)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(bad(format!("output format `{f}` is not one of csv, json")));
            }
        }
        // surface expression errors before any work is done
        self.pair()?;
        self.weight()?;
        if let Some(forcing) = &self.forcing {
            for (name, text) in [
                ("forcing.f", &forcing.f),
                ("forcing.exact", &forcing.exact),
                ("forcing.time", &forcing.time),
                ("forcing.space", &forcing.space),
                ("forcing.initial", &forcing.initial),
            ] {
                if let Some(text) = text {
                    parse_expr(name, text)?;
                }
            }
        }
        Ok(())
    }

    pub fn normalization(&self) -> Result<Normalization, CliError> {
        match self.kernel.normalization.as_str() {
            "plain" => Ok(Normalization::Plain),
            "gamma" => Ok(Normalization::Gamma),
            other => Err(bad(format!("kernel.normalization `{other}` is not one of plain, gamma"))),
        }
    }

    pub fn pair(&self) -> Result<KernelPair, CliError> {
        let k = &self.kernel;
        let alpha = match (&k.preset, &k.alpha) {
            (Some(_), Some(_)) => return Err(bad("kernel: give either preset or alpha, not both")),
            (Some(p), None) => exponent_preset(p, k.value).map_err(|e| bad(format!("kernel.preset: {e}")))?,
            (None, Some(a)) => parse_expr("kernel.alpha", a)?,
            (None, None) => return Err(bad("kernel: preset or alpha is required")),
        };
        KernelPair::from_expr(alpha, k.horizon, self.normalization()?).map_err(|e| bad(format!("kernel: {e}")))
    }

    pub fn weight(&self) -> Result<Weight, CliError> {
        let w = match (&self.weight.preset, &self.weight.w) {
            (Some(_), Some(_)) => return Err(bad("weight: give either preset or w, not both")),
            (Some(p), None) => weight_preset(p).map_err(|e| bad(format!("weight.preset: {e}")))?,
            (None, Some(w)) => parse_expr("weight.w", w)?,
            (None, None) => Expr::constant(1.0),
        };
        Weight::new(w, self.kernel.horizon).map_err(|e| bad(format!("weight: {e}")))
    }

    pub fn forcing(&self) -> Result<&ForcingSection, CliError> {
        self.forcing.as_ref().ok_or_else(|| bad("the [forcing] section is required"))
    }

    pub fn exact(&self) -> Result<Option<Expr>, CliError> {
        match &self.forcing {
            Some(ForcingSection { exact: Some(e), .. }) => Ok(Some(parse_expr("forcing.exact", e)?)),
            _ => Ok(None),
        }
    }

    pub fn steps(&self) -> usize {
        self.mesh.n.unwrap_or(128)
    }

    pub fn interior(&self) -> usize {
        self.mesh.interior.unwrap_or(32)
    }

    pub fn jacobi_n(&self) -> usize {
        self.quadrature.jacobi_n.unwrap_or(DEFAULT_JACOBI_NODES)
    }

    /// Time mesh with `steps` panels on `[0, b]`.
    pub fn mesh(&self, steps: usize, alpha0: f64) -> Result<Mesh, CliError> {
        let b = self.kernel.horizon;
        let mesh = if self.mesh.uniform {
            Mesh::uniform(b, steps)
        } else {
            Mesh::graded(b, steps, self.mesh.grading.unwrap_or_else(|| default_grading(alpha0)))
        };
        mesh.map_err(|e| bad(format!("mesh: {e}")))
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}
