//! Flat TOML experiment configuration.

use std::fmt;
use std::path::Path;

use ergolab::hyptimes::Inequality;
use ergolab::observables::{Axis, Observable};
use ergolab::systems::{BumpParams, System};
use ergolab::SystemSpec;
use serde::{Deserialize, Serialize};

/// Config rejected before any work is done.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigInvalid {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConfigInvalid: `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigInvalid {}

fn invalid(field: &str, message: impl Into<String>) -> ConfigInvalid {
    ConfigInvalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub system: String,
    pub gamma: f64,
    pub da_width: f64,
    pub da_center_factor: f64,
    pub bump_theta_radius: f64,
    pub bump_z_scale: f64,
    pub bump_depth: f64,

    pub seed: u64,
    pub c_u: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_s: Option<f64>,
    pub strict: bool,

    pub horizon: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub orbits: usize,
    pub batches: usize,
    pub n_max: usize,
    pub phi: String,
    pub psi: String,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub pliss_c1: Option<f64>,

    pub block_js: Vec<usize>,

    pub ref_length: usize,
    pub ref_burn_in: usize,
    pub cloud_size: usize,
    pub grid_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_ergodic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_geometric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_topological: Option<f64>,

    pub holonomy_pairs: usize,
    pub truncations: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holonomy_c_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holonomy_eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holonomy_sigma_s: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        let bump = BumpParams::default();
        Config {
            system: "cat-map".into(),
            gamma: 0.5,
            da_width: 0.05,
            da_center_factor: 1.1,
            bump_theta_radius: bump.theta_radius,
            bump_z_scale: bump.z_scale,
            bump_depth: bump.depth,
            seed: 1,
            c_u: 0.5,
            c_s: None,
            sigma: None,
            sigma_s: None,
            strict: false,
            horizon: 1000,
            samples: 10_000,
            burn_in: 100,
            orbits: 100,
            batches: 50,
            n_max: 50,
            phi: "cos-x1".into(),
            psi: "cos-x1".into(),
            pliss_c1: None,
            block_js: vec![8, 16, 32, 64],
            ref_length: 200_000,
            ref_burn_in: 1000,
            cloud_size: 20_000,
            grid_points: 1000,
            tol_ergodic: None,
            tol_geometric: None,
            tol_topological: None,
            holonomy_pairs: 100,
            truncations: vec![8, 16, 32],
            holonomy_c_j: None,
            holonomy_eta: None,
            holonomy_sigma_s: None,
        }
    }
}

pub const SCHEMA: &str = r#"# ergolab experiment config (flat TOML). Every key is optional.
# Unknown keys are rejected.

# --- system ---------------------------------------------------------------
system = "cat-map"          # cat-map | derived-anosov-t2 | intermittent-circle
                            # | solenoid | modified-solenoid
gamma = 0.5                 # intermittency exponent, in (0, 1)
da_width = 0.05             # derived-anosov-t2: Gaussian width of the perturbation
da_center_factor = 1.1      # derived-anosov-t2: unstable factor kept at the fixed point
bump_theta_radius = 0.02    # modified-solenoid: base radius of the neutral bump
bump_z_scale = 0.05         # modified-solenoid: fiber scale of the bump
bump_depth = 1.0            # modified-solenoid: 1 makes the period-2 orbit neutral

# --- rates and detectors --------------------------------------------------
seed = 1                    # master seed; --seed overrides
c_u = 0.5                   # expansion rate (nats/iterate); must be below the
                            # cu exponent where that is known in closed form
# c_s = 1.0                 # contraction rate; enables inverse/reverse defaults
# sigma = 0.6               # hyperbolic-time sigma, default exp(-7 c_u / 8)
# sigma_s = 0.4             # inverse/reverse sigma, default exp(-7 c_s / 8),
                            # falling back to sigma
strict = false              # true scores ties sum = k log sigma as misses

# --- sizes ----------------------------------------------------------------
horizon = 1000              # orbit length / tail horizon / density horizon
samples = 10000             # Monte-Carlo starts (tail, correlate, block)
burn_in = 100               # push-forward iterates for the SRB surrogate
orbits = 100                # lyapunov: independent orbits
batches = 50                # correlate: batch-means groups
n_max = 50                  # correlate: largest lag
phi = "cos-x1"              # correlate: observables, one of cos-x1 sin-x1
psi = "cos-x1"              #   cos2-x1 cos-x2 sin-x2 re-z im-z abs2-z

# --- pliss ----------------------------------------------------------------
# pliss_c1 = 0.25           # threshold c1, default c_u / 2 (c2 = c_u,
                            # L = sup of -phi_cu)

# --- block ----------------------------------------------------------------
block_js = [8, 16, 32, 64]  # block truncations J (burn_in must be >= max J)

# --- basin ----------------------------------------------------------------
ref_length = 200000         # reference orbit length (>= 10000)
ref_burn_in = 1000
cloud_size = 20000          # attractor cloud points kept from the reference
grid_points = 1000          # grid size (torus: rounded to a square)
# tol_ergodic = 0.01        # default 5 * max stderr * sqrt(ref_length / horizon)
# tol_geometric = 0.01      # default 2 * cloud covering radius
# tol_topological = 0.01    # default 2 * cloud covering radius

# --- holonomy (solenoids) -------------------------------------------------
holonomy_pairs = 100        # fiber pairs (near the bump when there is one)
truncations = [8, 16, 32]   # truncations N; rho is also computed at 2N
# holonomy_c_j = 0.5        # Hoelder constant, default from the bump
# holonomy_eta = 1.0
# holonomy_sigma_s = 0.37   # default exp(-7 c_s / 8) for the system's c_s
"#;

pub fn load(path: Option<&Path>) -> Result<Config, ConfigInvalid> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Config, ConfigInvalid> {
    toml::from_str(text).map_err(|e| {
        // the key is whatever precedes `=` on the offending line
        let field = e
            .span()
            .and_then(|sp| {
                let start = text[..sp.start].rfind('\n').map_or(0, |i| i + 1);
                let line = text[start..].lines().next()?;
                let (key, _) = line.split_once('=')?;
                Some(key.trim().to_string())
            })
            .unwrap_or_else(|| "<document>".into());
        invalid(&field, e.message())
    })
}

fn positive(field: &str, v: usize) -> Result<(), ConfigInvalid> {
    if v == 0 {
        Err(invalid(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn unit_interval(field: &str, v: Option<f64>) -> Result<(), ConfigInvalid> {
    match v {
        Some(s) if !(s > 0.0 && s < 1.0) => Err(invalid(field, format!("{s} not in (0, 1)"))),
        _ => Ok(()),
    }
}

impl Config {
    pub fn spec(&self) -> Result<SystemSpec, ConfigInvalid> {
        Ok(match self.system.as_str() {
            "cat-map" => SystemSpec::CatMap,
            "derived-anosov-t2" => SystemSpec::DerivedAnosovT2 {
                width: self.da_width,
                center_factor: self.da_center_factor,
            },
            "intermittent-circle" => SystemSpec::IntermittentCircle { gamma: self.gamma },
            "solenoid" => SystemSpec::Solenoid { gamma: self.gamma },
            "modified-solenoid" => SystemSpec::ModifiedSolenoid {
                gamma: self.gamma,
                bump: BumpParams {
                    theta_radius: self.bump_theta_radius,
                    z_scale: self.bump_z_scale,
                    depth: self.bump_depth,
                },
            },
            other => return Err(invalid("system", format!("unknown system `{other}`"))),
        })
    }

    /// Check every field and build the system.
    pub fn validate(&self) -> Result<System, ConfigInvalid> {
        for (f, v) in [
            ("horizon", self.horizon),
            ("samples", self.samples),
            ("burn_in", self.burn_in),
            ("orbits", self.orbits),
            ("batches", self.batches),
            ("ref_length", self.ref_length),
            ("ref_burn_in", self.ref_burn_in),
            ("cloud_size", self.cloud_size),
            ("grid_points", self.grid_points),
            ("holonomy_pairs", self.holonomy_pairs),
        ] {
            positive(f, v)?;
        }
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(invalid("gamma", format!("{} not in (0, 1)", self.gamma)));
        }
        let sys = self.spec()?.build().map_err(|e| invalid("system", e.to_string()))?;
        if !(self.c_u > 0.0 && self.c_u.is_finite()) {
            return Err(invalid("c_u", format!("{} must be positive", self.c_u)));
        }
        if let Some(lambda) = sys.analytic_cu_exponent() {
            if self.c_u >= lambda {
                return Err(invalid(
                    "c_u",
                    format!("{} is not below the cu exponent {lambda}", self.c_u),
                ));
            }
        }
        if let Some(c) = self.c_s {
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid("c_s", format!("{c} must be positive")));
            }
        }
        unit_interval("sigma", self.sigma)?;
        unit_interval("sigma_s", self.sigma_s)?;
        unit_interval("holonomy_sigma_s", self.holonomy_sigma_s)?;
        if let Some(c1) = self.pliss_c1 {
            if !(c1 > 0.0 && c1 < self.c_u) {
                return Err(invalid("pliss_c1", format!("{c1} not in (0, c_u)")));
            }
        }
        if self.block_js.is_empty() || self.block_js.contains(&0) {
            return Err(invalid("block_js", "needs positive truncations"));
        }
        if self.truncations.is_empty() || self.truncations.contains(&0) {
            return Err(invalid("truncations", "needs positive truncations"));
        }
        if self.ref_length < ergolab::basins::MIN_REFERENCE_LENGTH {
            return Err(invalid(
                "ref_length",
                format!("must be at least {}", ergolab::basins::MIN_REFERENCE_LENGTH),
            ));
        }
        observable("phi", &self.phi)?;
        observable("psi", &self.psi)?;
        Ok(sys)
    }

    pub fn inequality(&self) -> Inequality {
        if self.strict {
            Inequality::Strict
        } else {
            Inequality::NonStrict
        }
    }

    pub fn sigma_u(&self) -> f64 {
        self.sigma.unwrap_or((-7.0 * self.c_u / 8.0).exp())
    }

    pub fn sigma_cs(&self) -> f64 {
        self.sigma_s
            .or(self.c_s.map(|c| (-7.0 * c / 8.0).exp()))
            .unwrap_or_else(|| self.sigma_u())
    }
}

pub fn observable(field: &str, name: &str) -> Result<Observable, ConfigInvalid> {
    use Axis::*;
    Ok(match name {
        "cos-x1" => Observable::cos(First),
        "sin-x1" => Observable::sin(First),
        "cos2-x1" => Observable::Cos {
            axis: First,
            freq: 2,
        },
        "cos-x2" => Observable::cos(Second),
        "sin-x2" => Observable::sin(Second),
        "re-z" => Observable::FiberRe,
        "im-z" => Observable::FiberIm,
        "abs2-z" => Observable::FiberAbs2,
        other => return Err(invalid(field, format!("unknown observable `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_documents_every_key() {
        let full = Config {
            c_s: Some(1.0),
            sigma: Some(0.5),
            sigma_s: Some(0.5),
            pliss_c1: Some(0.2),
            tol_ergodic: Some(0.1),
            tol_geometric: Some(0.1),
            tol_topological: Some(0.1),
            holonomy_c_j: Some(0.1),
            holonomy_eta: Some(1.0),
            holonomy_sigma_s: Some(0.3),
            ..Config::default()
        };
        let v = toml::Value::try_from(&full).unwrap();
        for key in v.as_table().unwrap().keys() {
            assert!(
                SCHEMA.lines().any(|l| l.trim_start_matches("# ").starts_with(&format!("{key} ="))),
                "{key} missing from schema"
            );
        }
    }

    #[test]
    fn schema_parses_to_defaults() {
        assert_eq!(parse(SCHEMA).unwrap(), Config::default());
    }

    #[test]
    fn field_level_errors() {
        let e = parse("c_uu = 1").unwrap_err();
        assert!(e.message.contains("c_uu"), "{e}");
        let e = parse("horizon = -3").unwrap_err();
        assert!(e.to_string().contains("horizon"), "{e}");
        let c = parse("system = \"cat-map\"\nc_u = 0.97").unwrap();
        assert_eq!(c.validate().unwrap_err().field, "c_u");
        let c = parse("gamma = 1.5\nsystem = \"solenoid\"").unwrap();
        assert_eq!(c.validate().unwrap_err().field, "gamma");
        let c = parse("samples = 0").unwrap();
        assert_eq!(c.validate().unwrap_err().field, "samples");
        let c = parse("phi = \"tan\"").unwrap();
        assert_eq!(c.validate().unwrap_err().field, "phi");
    }
}
