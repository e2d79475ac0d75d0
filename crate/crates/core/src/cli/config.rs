//! TOML run configuration. Every section is optional and defaults to the
//! two-obstacle scene at k = 800; unknown keys are rejected.

use crate::error::{Error, Result};
use crate::geometry::{Curve, Scene, Shape, Vec2};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "MSBIE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Bin,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Bin => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Circle {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation_deg: f64,
    },
    TrigRadius {
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation_deg: f64,
    },
}

impl ObstacleConfig {
    pub fn to_curve(&self) -> Result<Curve> {
        let (shape, center, rot) = match self.clone() {
            ObstacleConfig::Circle { radius, center } => (Shape::Circle { radius }, center, 0.0),
            ObstacleConfig::Ellipse { a, b, center, rotation_deg } => (Shape::Ellipse { a, b }, center, rotation_deg),
            ObstacleConfig::TrigRadius { r0, cos, sin, center, rotation_deg } => {
                (Shape::TrigRadius { r0, cos, sin }, center, rotation_deg)
            }
        };
        Curve::new(shape, Vec2::new(center[0], center[1]), rot.to_radians())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub obstacle: Vec<ObstacleConfig>,
    /// Direction of incidence, degrees counterclockwise from +x.
    pub alpha_deg: f64,
    pub sequence: Vec<usize>,
    pub k: f64,
    /// Wavenumbers for the sweep commands (`scaling`, `go`).
    pub k_list: Vec<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            obstacle: vec![
                ObstacleConfig::Circle { radius: 0.5, center: [0.0, 0.0] },
                ObstacleConfig::Ellipse { a: 0.25, b: 1.0, center: [0.4, -1.3], rotation_deg: -60.0 },
            ],
            alpha_deg: 0.0,
            sequence: vec![0, 1],
            k: 800.0,
            k_list: vec![100.0, 200.0, 400.0],
        }
    }
}

impl SceneConfig {
    pub fn to_scene(&self) -> Result<Scene> {
        let curves = self.obstacle.iter().map(|o| o.to_curve()).collect::<Result<Vec<_>>>()?;
        Scene::new(curves, Vec2::from_angle(self.alpha_deg.to_radians()), self.k, self.sequence.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    /// Points per wavelength on the boundary.
    pub ppw: f64,
    /// Lower bound on the number of nodes per obstacle.
    pub min_n: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { ppw: crate::bie::DEFAULT_PPW, min_n: crate::bie::MIN_NODES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Last iteration index M; records 0..=M are written.
    pub iterations: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { iterations: 21, out: PathBuf::from("out"), format: OutputFormat::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RaysSection {
    pub m: usize,
    pub nodes: usize,
}

impl Default for RaysSection {
    fn default() -> Self {
        Self { m: 1, nodes: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MieSection {
    pub radius: f64,
    pub k: f64,
    pub nodes: usize,
}

impl Default for MieSection {
    fn default() -> Self {
        Self { radius: 0.5, k: 50.0, nodes: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoSection {
    pub m: usize,
    /// Evaluation points; when empty, the centre of the illuminated arc of
    /// the obstacle hit at iteration `m + 1`.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub mie_radius: f64,
    pub mie_k: f64,
    pub mie_nodes: usize,
    /// Coarse and fine N for the convergence-ratio check.
    pub spectral_nodes: [usize; 2],
    pub scaling_k_list: Vec<f64>,
    pub ray_nodes: usize,
    pub ray_max_m: usize,
    pub sp_k_list: Vec<f64>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            mie_radius: 0.5,
            mie_k: 50.0,
            mie_nodes: 512,
            spectral_nodes: [128, 160],
            scaling_k_list: vec![100.0, 200.0, 400.0],
            ray_nodes: 1024,
            ray_max_m: 5,
            sp_k_list: vec![100.0, 200.0, 400.0, 800.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub discretization: Discretization,
    pub run: RunSection,
    pub rays: RaysSection,
    pub mie: MieSection,
    pub scaling: ScalingSection,
    pub go: GoSection,
    pub validate: ValidateSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().replace('\n', " ")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Scalar sanity checks; geometric validation happens in `to_scene`.
    pub fn check(&self) -> Result<()> {
        let d = &self.discretization;
        if !(d.ppw > 0.0) || !d.ppw.is_finite() {
            return Err(Error::Config(format!("discretization.ppw must be positive, got {}", d.ppw)));
        }
        if !(self.scene.k > 0.0) || !self.scene.k.is_finite() {
            return Err(Error::Config(format!("scene.k must be positive, got {}", self.scene.k)));
        }
        for list in [&self.scene.k_list, &self.validate.scaling_k_list, &self.validate.sp_k_list] {
            if list.is_empty() || list.iter().any(|k| !(*k > 0.0)) || list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(format!("k lists must be positive and increasing, got {list:?}")));
            }
        }
        if self.scene.obstacle.is_empty() || self.scene.sequence.is_empty() {
            return Err(Error::Config("scene needs at least one obstacle and a sequence".into()));
        }
        if !self.mie.nodes.is_multiple_of(2)
            || !self.validate.mie_nodes.is_multiple_of(2)
            || self.validate.spectral_nodes.iter().any(|n| n % 2 != 0)
        {
            return Err(Error::Config("node counts must be even".into()));
        }
        Ok(())
    }

    /// Output directory: the command-line flag, then the environment
    /// override, then the config file.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.run.out.clone(),
        }
    }
}
