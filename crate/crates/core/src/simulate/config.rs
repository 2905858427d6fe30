//! TOML run configuration.
//!
//! Sections: `[mesh]`, `[materials.<tag>]`, `[phase]`, `[forcing]`,
//! `[controller]`, `[time]`, `[dirichlet]`, `[output]`, `[solver]`.
//! Unknown keys are rejected. See `configs/` for complete examples.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::scenario::WellSite;
use crate::linalg::CgSettings;
use crate::mesh::{BoxMeshSpec, Point, Tag};
use crate::physics::{
    ColumnController, ColumnMode, Material, MaterialTable, PhaseModel, SeasonalForcing,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Region override applied to cells whose centroid lies in `[min, max]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaintBox {
    pub region: Tag,
    pub min: Point,
    pub max: Point,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// Gmsh MSH 2.2 ASCII file; relative paths resolve against the config file.
    File { path: PathBuf },
    /// Kuhn box with optional painted regions (later boxes win).
    Box {
        extents: [f64; 3],
        divisions: [usize; 3],
        #[serde(default = "default_region")]
        region: Tag,
        #[serde(default)]
        paint: Vec<PaintBox>,
    },
    /// Graded well-site block with well and column cutouts.
    WellSite(WellSite),
}

fn default_region() -> Tag {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default = "default_mode")]
    pub mode: ColumnMode,
    #[serde(default)]
    pub column_tags: Vec<Tag>,
    #[serde(default)]
    pub literal_paper_rule: bool,
    #[serde(default)]
    pub column_temperature: Option<f64>,
    /// Point whose nearest node off the column walls supplies the reference
    /// ground temperature.
    #[serde(default)]
    pub probe: Option<Point>,
}

fn default_mode() -> ColumnMode {
    ColumnMode::AlwaysOff
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            mode: ColumnMode::AlwaysOff,
            column_tags: Vec::new(),
            literal_paper_rule: false,
            column_temperature: None,
            probe: None,
        }
    }
}

impl ControllerSection {
    pub fn controller(&self) -> ColumnController {
        ColumnController {
            column_tags: self.column_tags.clone(),
            mode: self.mode,
            literal_paper_rule: self.literal_paper_rule,
            column_temperature: self.column_temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Step length, seconds.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// End time, seconds.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t0")]
    pub initial_temperature: f64,
    /// Restart dump to start from instead of the uniform initial field.
    #[serde(default)]
    pub restart: Option<PathBuf>,
}

fn default_tau() -> f64 {
    86400.0
}

fn default_t_max() -> f64 {
    5.0 * 365.0 * 86400.0
}

fn default_t0() -> f64 {
    -5.0
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            t_max: default_t_max(),
            initial_temperature: default_t0(),
            restart: None,
        }
    }
}

/// Value held on a Dirichlet tag: a constant, or `"air"` for the current air temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryValue {
    Constant(f64),
    Air,
}

impl<'de> Deserialize<'de> for BoundaryValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(BoundaryValue::Constant(v)),
            Raw::Text(s) if s == "air" => Ok(BoundaryValue::Air),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "boundary value must be a number or \"air\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceCondition {
    /// Zero flux.
    None,
    /// Held at the air temperature.
    Air,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSection {
    /// Always-active tags, e.g. the well at the oil temperature.
    #[serde(default)]
    pub tags: BTreeMap<String, BoundaryValue>,
    #[serde(default = "default_surface")]
    pub surface: SurfaceCondition,
    #[serde(default = "default_surface_tag")]
    pub surface_tag: Tag,
}

fn default_surface() -> SurfaceCondition {
    SurfaceCondition::None
}

fn default_surface_tag() -> Tag {
    6
}

impl Default for DirichletSection {
    fn default() -> Self {
        Self {
            tags: BTreeMap::new(),
            surface: SurfaceCondition::None,
            surface_tag: 6,
        }
    }
}

impl DirichletSection {
    /// Fixed tags in ascending tag order.
    pub fn fixed(&self) -> Result<Vec<(Tag, BoundaryValue)>, ConfigError> {
        let mut out = Vec::new();
        for (key, &value) in &self.tags {
            let tag: Tag = key.trim().parse().map_err(|_| {
                ConfigError(format!("dirichlet.tags: `{key}` is not an integer tag"))
            })?;
            if let BoundaryValue::Constant(v) = value {
                if !v.is_finite() {
                    return Err(ConfigError(format!("dirichlet.tags.{key} must be finite")));
                }
            }
            out.push((tag, value));
        }
        out.sort_by_key(|&(t, _)| t);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write outputs every `cadence` steps (plus the initial state).
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub probes: Vec<Point>,
    #[serde(default = "yes")]
    pub vtk: bool,
    #[serde(default = "yes")]
    pub restart: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_cadence() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            cadence: 1,
            probes: Vec::new(),
            vtk: true,
            restart: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Worker threads for assembly and the solver; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn default_tol() -> f64 {
    CgSettings::default().tol
}

fn default_max_iter() -> usize {
    CgSettings::default().max_iter
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            workers: 0,
        }
    }
}

impl SolverSection {
    pub fn cg(&self) -> CgSettings {
        CgSettings {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub mesh: MeshSource,
    pub materials: BTreeMap<String, Material>,
    #[serde(default)]
    pub phase: PhaseModel,
    #[serde(default)]
    pub forcing: SeasonalForcing,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub dirichlet: DirichletSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub solver: SolverSection,
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file and resolves relative mesh and restart paths against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let MeshSource::File { path: p } = &mut cfg.mesh {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = &mut cfg.time.restart {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks everything that does not need the mesh.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        let t = &self.time;
        if !(t.tau > 0.0 && t.tau.is_finite()) {
            return err(format!("time.tau must be positive, got {}", t.tau));
        }
        if !(t.t_max >= t.tau) || !t.t_max.is_finite() {
            return err(format!("time.t_max must be at least tau, got {}", t.t_max));
        }
        if !t.initial_temperature.is_finite() {
            return err("time.initial_temperature must be finite".into());
        }
        if self.output.cadence == 0 {
            return err("output.cadence must be at least 1".into());
        }
        if !(self.solver.tol > 0.0) {
            return err("solver.tol must be positive".into());
        }
        if self.solver.max_iter == 0 {
            return err("solver.max_iter must be at least 1".into());
        }
        self.phase
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        self.forcing
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        self.controller
            .controller()
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.controller.mode == ColumnMode::Seasonal && self.controller.probe.is_none() {
            return err("controller.probe is required for seasonal mode".into());
        }
        self.material_table()?;
        self.dirichlet.fixed()?;
        match &self.mesh {
            MeshSource::Box {
                extents, divisions, ..
            } => BoxMeshSpec::new(*extents, *divisions)
                .validate()
                .map_err(|e| ConfigError(e.to_string()))?,
            MeshSource::WellSite(w) => w.validate()?,
            MeshSource::File { .. } => {}
        }
        Ok(())
    }

    pub fn material_table(&self) -> Result<MaterialTable, ConfigError> {
        let mut map = BTreeMap::new();
        for (key, mat) in &self.materials {
            let tag: Tag = key.trim().parse().map_err(|_| {
                ConfigError(format!("materials.{key}: region must be an integer tag"))
            })?;
            map.insert(tag, *mat);
        }
        MaterialTable::new(map, self.phase).map_err(|e| ConfigError(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [mesh]
        kind = "box"
        extents = [1.0, 1.0, 1.0]
        divisions = [2, 2, 2]

        [materials.1]
        kind = "single_phase"
        capacity = 2.0e6
        conductivity = 2.0
    "#;

    #[test]
    fn minimal_defaults() {
        let cfg = SimulationConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.time.tau, 86400.0);
        assert_eq!(cfg.time.initial_temperature, -5.0);
        assert_eq!(cfg.phase.latent_volumetric, 1.04e8);
        assert_eq!(cfg.forcing.amplitude, 41.0);
        assert_eq!(cfg.solver.tol, 1e-8);
        assert_eq!(cfg.solver.max_iter, 5000);
        assert_eq!(cfg.dirichlet.surface, SurfaceCondition::None);
        assert!(matches!(cfg.mesh, MeshSource::Box { region: 1, .. }));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\n[time]\ntau = 10.0\nbogus = 1\n");
        assert!(SimulationConfig::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}\n[nonsense]\na = 1\n");
        assert!(SimulationConfig::from_toml_str(&text).is_err());
        let text = MINIMAL.replace("conductivity = 2.0", "conductivity = 2.0\nporosity = 0.2");
        assert!(SimulationConfig::from_toml_str(&text).is_err());
        let text = MINIMAL.replace("divisions", "region = 2\nspacing = 1.0\ndivisions");
        assert!(SimulationConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn dirichlet_values() {
        let text = format!(
            "{MINIMAL}\n[dirichlet]\nsurface = \"air\"\n[dirichlet.tags]\n1 = 20.0\n2 = \"air\"\n"
        );
        let cfg = SimulationConfig::from_toml_str(&text).unwrap();
        assert_eq!(
            cfg.dirichlet.fixed().unwrap(),
            vec![(1, BoundaryValue::Constant(20.0)), (2, BoundaryValue::Air)]
        );
        let bad = format!("{MINIMAL}\n[dirichlet.tags]\n1 = \"hot\"\n");
        assert!(SimulationConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for extra in [
            "[time]\ntau = 0.0",
            "[time]\ntau = 10.0\nt_max = 5.0",
            "[time]\ninitial_temperature = nan",
            "[output]\ncadence = 0",
            "[phase]\ndelta = 0.0",
            "[controller]\nmode = \"seasonal\"\ncolumn_tags = [2]",
            "[controller]\nmode = \"always_on\"",
        ] {
            let text = format!("{MINIMAL}\n{extra}\n");
            assert!(SimulationConfig::from_toml_str(&text).is_err(), "{extra}");
        }
    }
}
