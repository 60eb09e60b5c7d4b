use std::path::{Path, PathBuf};

use magrobin::coarea::{Quadrature, VerifyConfig};
use magrobin::fem::{EigenOptions, MeshResolution};
use magrobin::geometry::{SubordinacyOptions, X0Policy};
use magrobin::radial::RadialConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "MAGROBIN_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Eigen-residual tolerance of the FEM iteration.
    pub eigen: f64,
    /// Relative tolerance for the transplant to reproduce a disk.
    pub quadrature: f64,
    /// Convexity, symmetry, containment and roundness tests.
    pub geometry: f64,
    /// Relative band of the level-moment test.
    pub subordinacy: f64,
    /// Bisection bracket for the critical parameter, relative to `R³b²/16`.
    pub beta_critical: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eigen: 1e-8, quadrature: 1e-3, geometry: 1e-3, subordinacy: 1e-2, beta_critical: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub radial_n: usize,
    /// Distance-field spacing; `R/256` when absent.
    pub field_h: Option<f64>,
    pub levels: usize,
    pub mesh_n_r: usize,
    pub mesh_n_theta: usize,
    /// Boundary points generated from the radius samples of star domains.
    pub star_samples: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { radial_n: 2048, field_h: None, levels: 64, mesh_n_r: 32, mesh_n_theta: 128, star_samples: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub grids: Grids,
    pub x0: X0Policy,
    pub quadrature: Quadrature,
    /// Run the FEM cross-check in `verify`.
    pub fem: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerances: Tolerances::default(),
            grids: Grids::default(),
            x0: X0Policy::Centroid,
            quadrature: Quadrature::Simpson,
            fem: true,
            out: None,
            format: Format::Json,
            threads: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML config file (falls back to $MAGROBIN_CONFIG)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for reports and tables; stdout when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Nodes per radial fiber
    #[arg(long, global = true)]
    pub radial_n: Option<usize>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true)]
    pub field_h: Option<f64>,
    #[arg(long, global = true)]
    pub mesh_n_r: Option<usize>,
    #[arg(long, global = true)]
    pub mesh_n_theta: Option<usize>,
    #[arg(long, global = true)]
    pub eigen_tol: Option<f64>,
    /// `centroid`, `optimize` or a point `x,y`
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Skip the FEM cross-check in `verify`
    #[arg(long, global = true)]
    pub no_fem: bool,
}

pub fn parse_x0(s: &str) -> Result<X0Policy, CliError> {
    match s.trim() {
        "centroid" => Ok(X0Policy::Centroid),
        "optimize" => Ok(X0Policy::Optimize),
        other => {
            let parts: Vec<&str> = other.split(',').collect();
            let coords: Vec<f64> = parts.iter().filter_map(|p| p.trim().parse().ok()).collect();
            if parts.len() != 2 || coords.len() != 2 || coords.iter().any(|c| !c.is_finite()) {
                return Err(CliError::Input(format!("x0 must be `centroid`, `optimize` or `x,y`, got `{other}`")));
            }
            Ok(X0Policy::Fixed([coords[0], coords[1]]))
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Defaults, then the config file (`--config` or `$MAGROBIN_CONFIG`),
    /// then command-line values.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let file = o.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let mut c = match file {
            Some(p) => Self::load(&p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &o.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = o.format {
            c.format = v;
        }
        if let Some(v) = o.threads {
            c.threads = Some(v);
        }
        if let Some(v) = o.radial_n {
            c.grids.radial_n = v;
        }
        if let Some(v) = o.levels {
            c.grids.levels = v;
        }
        if let Some(v) = o.field_h {
            c.grids.field_h = Some(v);
        }
        if let Some(v) = o.mesh_n_r {
            c.grids.mesh_n_r = v;
        }
        if let Some(v) = o.mesh_n_theta {
            c.grids.mesh_n_theta = v;
        }
        if let Some(v) = o.eigen_tol {
            c.tolerances.eigen = v;
        }
        if let Some(v) = &o.x0 {
            c.x0 = parse_x0(v)?;
        }
        if o.no_fem {
            c.fem = false;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("eigen", t.eigen),
            ("quadrature", t.quadrature),
            ("geometry", t.geometry),
            ("subordinacy", t.subordinacy),
            ("beta_critical", t.beta_critical),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Input(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        let g = &self.grids;
        for (name, v, min) in [
            ("radial_n", g.radial_n, 8),
            ("levels", g.levels, 4),
            ("mesh_n_r", g.mesh_n_r, 8),
            ("mesh_n_theta", g.mesh_n_theta, 32),
            ("star_samples", g.star_samples, 16),
        ] {
            if v < min {
                return Err(CliError::Input(format!("grid size `{name}` = {v} is below the minimum {min}")));
            }
        }
        if let Some(h) = g.field_h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Input(format!("field_h must be positive, got {h}")));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Input("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn radial(&self) -> RadialConfig {
        RadialConfig { n: self.grids.radial_n }
    }

    pub fn mesh(&self) -> MeshResolution {
        MeshResolution { n_r: self.grids.mesh_n_r, n_theta: self.grids.mesh_n_theta }
    }

    pub fn eigen(&self) -> EigenOptions {
        EigenOptions { tol: self.tolerances.eigen, ..EigenOptions::default() }
    }

    pub fn subordinacy(&self) -> SubordinacyOptions {
        SubordinacyOptions {
            h: self.grids.field_h,
            levels: self.grids.levels,
            x0_policy: self.x0,
            rel_tol: self.tolerances.subordinacy,
            geometry_tol: self.tolerances.geometry,
        }
    }

    pub fn verify(&self) -> VerifyConfig {
        VerifyConfig {
            radial: self.radial(),
            subordinacy: self.subordinacy(),
            quadrature: self.quadrature,
            fem: self.fem.then(|| self.mesh()),
            eigen: self.eigen(),
            equality_tol: self.tolerances.quadrature,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("[grids]\nradial_n = 512\n").unwrap();
        assert_eq!(c.grids.radial_n, 512);
        assert_eq!(c.grids.levels, 64);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[grids]\nradial = 512\n").is_err());
    }

    #[test]
    fn x0_forms() {
        let c = RunConfig::from_toml("x0 = { policy = \"fixed\", point = [0.5, -1.0] }\n").unwrap();
        assert_eq!(c.x0, X0Policy::Fixed([0.5, -1.0]));
        assert_eq!(parse_x0("optimize").unwrap(), X0Policy::Optimize);
        assert_eq!(parse_x0("-0.25, 1").unwrap(), X0Policy::Fixed([-0.25, 1.0]));
        assert!(parse_x0("1,2,3").is_err());
    }

    #[test]
    fn flags_override_the_file() {
        let dir = std::env::temp_dir().join(format!("magrobin-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "fem = false\n[grids]\nradial_n = 512\nlevels = 32\n").unwrap();
        let o = Overrides { config: Some(path), levels: Some(16), ..Overrides::default() };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!((c.grids.radial_n, c.grids.levels, c.fem), (512, 16, false));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn minima_are_enforced() {
        let mut c = RunConfig::default();
        c.grids.mesh_n_theta = 16;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.tolerances.eigen = 0.0;
        assert!(c.validate().is_err());
    }
}
