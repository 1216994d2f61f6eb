//! TOML run configuration.
//!
//! ```toml
//! problem = "bratu"
//! action = "cont"
//! session = "runs/bratu"
//!
//! [params]          # preset parameters; unknown names are rejected
//! h = 0.05
//!
//! [mesh]            # optional: lx, ly, nx, ny  or  import = "mesh.txt"
//! lx = 0.5
//! ly = 0.5
//! nx = 21
//! ny = 21
//!
//! [settings]        # any continuation setting
//! nsteps = 50
//!
//! [args]            # action arguments
//! from = "runs/bratu/p10"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cont::Settings;
use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::problem::Params;
use crate::problems::MeshSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Init,
    Cont,
    Pmcont,
    Swibra,
    Findbif,
    Tint,
    Plot,
    Meshcheck,
    Jaccheck,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Init => "init",
            Action::Cont => "cont",
            Action::Pmcont => "pmcont",
            Action::Swibra => "swibra",
            Action::Findbif => "findbif",
            Action::Tint => "tint",
            Action::Plot => "plot",
            Action::Meshcheck => "meshcheck",
            Action::Jaccheck => "jaccheck",
        }
    }
}

/// Either a structured rectangle or a mesh file in the text format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub import: Option<PathBuf>,
}

impl MeshConfig {
    /// `None` when the preset's default mesh should be used.
    pub fn build(&self, base_dir: &Path) -> Result<Option<Mesh>> {
        let dims = [self.lx.is_some(), self.ly.is_some(), self.nx.is_some(), self.ny.is_some()];
        match (&self.import, dims.iter().filter(|&&d| d).count()) {
            (Some(_), n) if n > 0 => Err(Error::Config("mesh: give either import or lx/ly/nx/ny, not both".into())),
            (Some(path), _) => Ok(Some(Mesh::import(&base_dir.join(path))?)),
            (None, 0) => Ok(None),
            (None, 4) => {
                let spec = MeshSpec {
                    lx: self.lx.unwrap(),
                    ly: self.ly.unwrap(),
                    nx: self.nx.unwrap(),
                    ny: self.ny.unwrap(),
                };
                if !(spec.lx > 0.0 && spec.ly > 0.0 && spec.nx >= 2 && spec.ny >= 2) {
                    return Err(Error::Config(format!("mesh: invalid dimensions {spec:?}")));
                }
                Ok(Some(spec.build()?))
            }
            _ => Err(Error::Config("mesh: lx, ly, nx and ny must be given together".into())),
        }
    }
}

/// Per-action arguments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionArgs {
    /// Point file to start from (cont, pmcont, tint, meshcheck, jaccheck, plot).
    pub from: Option<PathBuf>,
    /// Bifurcation point file (swibra).
    pub bifpoint: Option<PathBuf>,
    /// File-name prefix of points written by this run.
    pub prefix: Option<String>,
    /// Initial step after switching; defaults to `settings.ds`.
    pub ds: Option<f64>,
    /// Time step and step count (tint).
    pub tint_h: Option<f64>,
    pub tint_steps: Option<usize>,
    /// 1-based component for solution plots.
    pub component: Option<usize>,
    /// Branch files to overlay (plot); defaults to the session's branch.
    #[serde(default)]
    pub branches: Vec<PathBuf>,
    /// Branch column on the vertical axis (plot); defaults to the first output.
    pub column: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub action: Action,
    pub session: PathBuf,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub mesh: MeshConfig,
    /// Explicit continuation settings; they override the preset's (or the
    /// loaded point's) values key by key.
    #[serde(default)]
    pub settings: toml::Table,
    #[serde(default)]
    pub args: ActionArgs,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        crate::problems::preset(&self.problem).map_err(|e| Error::Config(e.to_string()))?;
        self.settings_over(&Settings::default())?;
        if let Some(h) = self.args.tint_h {
            if !(h > 0.0) {
                return Err(Error::Config(format!("tint_h must be positive, got {h}")));
            }
        }
        if self.args.component == Some(0) {
            return Err(Error::Config("component is 1-based".into()));
        }
        Ok(())
    }

    /// `base` with the explicitly configured keys replaced, validated.
    pub fn settings_over(&self, base: &Settings) -> Result<Settings> {
        let mut table = match toml::Table::try_from(base) {
            Ok(t) => t,
            Err(e) => return Err(Error::Config(format!("settings: {e}"))),
        };
        for (k, v) in &self.settings {
            table.insert(k.clone(), v.clone());
        }
        let s: Settings = table.try_into().map_err(|e: toml::de::Error| Error::Config(format!("settings: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn session_dir(&self) -> PathBuf {
        self.resolve(&self.session)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BRATU: &str = r#"
problem = "bratu"
action = "cont"
session = "out"
[settings]
nsteps = 5
[args]
prefix = "q"
"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse(BRATU).unwrap();
        assert_eq!(c.action, Action::Cont);
        let base = Settings {
            dsmax: 0.3,
            ..Settings::default()
        };
        let s = c.settings_over(&base).unwrap();
        assert_eq!(s.nsteps, 5);
        assert_eq!(s.dsmax, 0.3);
        assert_eq!(c.args.prefix.as_deref(), Some("q"));
        assert!(c.mesh.build(Path::new(".")).unwrap().is_none());
    }

    #[test]
    fn rejects_unknown_keys_everywhere() {
        for bad in [
            "bogus = 1\n",
            "[settings]\nnstep = 3\n",
            "[args]\nfrm = \"x\"\n",
            "[mesh]\nnz = 3\n",
        ] {
            let text = format!("problem = \"bratu\"\naction = \"cont\"\nsession = \"s\"\n{bad}");
            assert!(matches!(RunConfig::parse(&text), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn rejects_out_of_range_settings_and_unknown_problem() {
        let t = "problem = \"bratu\"\naction = \"cont\"\nsession = \"s\"\n[settings]\ndsmin = -1.0\n";
        assert!(matches!(RunConfig::parse(t), Err(Error::Config(_))));
        let t = "problem = \"gp\"\naction = \"cont\"\nsession = \"s\"\n";
        assert!(matches!(RunConfig::parse(t), Err(Error::Config(_))));
    }

    #[test]
    fn partial_mesh_is_an_error() {
        let m = MeshConfig {
            lx: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(m.build(Path::new(".")), Err(Error::Config(_))));
        let m = MeshConfig {
            lx: Some(1.0),
            ly: Some(1.0),
            nx: Some(3),
            ny: Some(4),
            import: None,
        };
        assert_eq!(m.build(Path::new(".")).unwrap().unwrap().n_points(), 12);
    }
}
