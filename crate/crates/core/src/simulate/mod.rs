//! The time loop.
//!
//! Each step advances the clock, keeps the previous field, updates the air
//! temperature, decides whether the freezing columns run, assembles from the
//! previous field, solves, and writes outputs on the configured cadence.

pub mod config;
pub mod scenario;

pub use config::{
    BoundaryValue, ConfigError, MeshSource, PaintBox, SimulationConfig, SurfaceCondition,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::fem::{
    collect_dirichlet, implicit_step, DirichletSet, Discretization, FemError, TemperatureField,
};
use crate::io::{self, IoError, ProbeWriter};
use crate::linalg::{CgSettings, SolveReport};
use crate::mesh::{generate_box, read_msh, BoxMeshSpec, Mesh, MeshError, Point, Tag, TensorGrid};
use crate::physics::{
    air_temperature, columns_active, ColumnController, MaterialTable, PhysicsError, SeasonalForcing,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("output error: {0}")]
    Io(#[from] IoError),
    #[error(
        "solver did not converge at step {} (t = {} s): residual {:.3e} after {} iterations",
        .0.step, .0.t_cur, .0.report.relative_residual, .0.report.iterations
    )]
    Solver(Box<StepRecord>),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

impl SimError {
    /// Whether the error stems from the configuration or its inputs (mesh, materials).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            SimError::Config(_) | SimError::Mesh(_) | SimError::Physics(_)
        ) || matches!(
            self,
            SimError::Fem(FemError::UnknownTag(_) | FemError::Physics(_) | FemError::Mesh(_))
        )
    }
}

/// Diagnostics for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t_cur: f64,
    pub t_air: f64,
    pub columns_active: bool,
    pub report: SolveReport,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Builds the configured mesh.
pub fn load_mesh(config: &SimulationConfig) -> Result<Mesh, SimError> {
    Ok(match &config.mesh {
        MeshSource::File { path } => read_msh(path)?,
        MeshSource::Box {
            extents,
            divisions,
            region,
            paint,
        } => {
            let spec = BoxMeshSpec::new(*extents, *divisions);
            if paint.is_empty() {
                generate_box(&spec, *region)?
            } else {
                spec.validate()?;
                TensorGrid::uniform(&spec).build(
                    |c| {
                        paint
                            .iter()
                            .rev()
                            .find(|b| (0..3).all(|d| c[d] >= b.min[d] && c[d] <= b.max[d]))
                            .map_or(*region, |b| b.region)
                    },
                    |_| None,
                )?
            }
        }
        MeshSource::WellSite(site) => site.build_mesh()?,
    })
}

/// Mesh and initial field: uniform `T_0`, or the restart dump when configured.
pub fn initialize(config: &SimulationConfig) -> Result<(Mesh, TemperatureField), SimError> {
    config.validate()?;
    let mesh = load_mesh(config)?;
    let field = match &config.time.restart {
        Some(path) => io::snapshot_read(path, mesh.num_nodes())?,
        None => TemperatureField::uniform(mesh.num_nodes(), config.time.initial_temperature)?,
    };
    Ok((mesh, field))
}

type SourceFn = dyn Fn(Point, f64) -> f64 + Send + Sync;

/// A running simulation.
pub struct Simulation {
    disc: Discretization,
    table: MaterialTable,
    forcing: SeasonalForcing,
    controller: ColumnController,
    fixed: Vec<(Tag, BoundaryValue)>,
    surface: Option<Tag>,
    reference_node: Option<usize>,
    probe_nodes: Vec<usize>,
    tau: f64,
    t_start: f64,
    /// Step number of the initial state: `t_start / tau` when that is whole, else 0.
    first_step: usize,
    total_steps: usize,
    settings: CgSettings,
    pool: rayon::ThreadPool,
    field: TemperatureField,
    step_index: usize,
    source: Option<Box<SourceFn>>,
    output: config::OutputSection,
}

impl Simulation {
    pub fn new(config: &SimulationConfig) -> Result<Self, SimError> {
        let (mesh, field) = initialize(config)?;
        Self::with_mesh(config, mesh, field)
    }

    /// Uses an already built mesh and initial field; `config.mesh` is ignored.
    pub fn with_mesh(
        config: &SimulationConfig,
        mesh: Mesh,
        field: TemperatureField,
    ) -> Result<Self, SimError> {
        config.validate()?;
        field.check_len(&mesh)?;
        let table = config.material_table()?;
        table.covers(&mesh.region_tags())?;

        let fixed = config.dirichlet.fixed()?;
        let surface = (config.dirichlet.surface == SurfaceCondition::Air)
            .then_some(config.dirichlet.surface_tag);
        let tags = mesh.facet_tags();
        let known = |t: Tag| tags.binary_search(&t).is_ok();
        let controller = config.controller.controller();
        for t in fixed
            .iter()
            .map(|(t, _)| *t)
            .chain(surface)
            .chain(controller.column_tags.iter().copied())
        {
            if !known(t) {
                return Err(FemError::UnknownTag(t).into());
            }
        }

        // Column walls carry the imposed temperature while active, so the
        // soil reference must come from a node off the walls.
        let mut on_column = vec![false; mesh.num_nodes()];
        for (f, t) in mesh.boundary_facets().iter().zip(mesh.facet_tag()) {
            if controller.column_tags.contains(t) {
                for &n in f {
                    on_column[n] = true;
                }
            }
        }
        let reference_node = config
            .controller
            .probe
            .map(|p| nearest_free_node(&mesh, p, &on_column));
        let probe_nodes = config
            .output
            .probes
            .iter()
            .map(|&p| mesh.nearest_node(p))
            .collect();

        let t_start = field.time;
        let offset = t_start / config.time.tau;
        let first_step = if (offset - offset.round()).abs() < 1e-9 {
            offset.round() as usize
        } else {
            0
        };
        let span = (config.time.t_max - t_start) / config.time.tau;
        let total_steps = if (span - span.round()).abs() < 1e-9 {
            span.round()
        } else {
            span.ceil()
        }
        .max(0.0) as usize;

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.solver.workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        let disc = pool.install(|| Discretization::new(mesh))?;

        Ok(Self {
            disc,
            table,
            forcing: config.forcing,
            controller,
            fixed,
            surface,
            reference_node,
            probe_nodes,
            tau: config.time.tau,
            t_start,
            first_step,
            total_steps,
            settings: config.solver.cg(),
            pool,
            field,
            step_index: first_step,
            source: None,
            output: config.output.clone(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.disc.mesh()
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn table(&self) -> &MaterialTable {
        &self.table
    }

    pub fn field(&self) -> &TemperatureField {
        &self.field
    }

    pub fn set_field(&mut self, field: TemperatureField) -> Result<(), SimError> {
        field.check_len(self.mesh())?;
        self.field = field;
        Ok(())
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Steps needed to reach `t_max` from the start time.
    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    /// Steps are numbered from `t = 0`, so a run resumed from a restart dump
    /// continues the numbering of the run that wrote it.
    /// Node whose temperature stands in for the soil in the seasonal rule.
    pub fn reference_node(&self) -> Option<usize> {
        self.reference_node
    }

    pub fn first_step(&self) -> usize {
        self.first_step
    }

    pub fn is_finished(&self) -> bool {
        self.step_index >= self.first_step + self.total_steps
    }

    /// Adds a volumetric heat source `f(x, t)` (W/m³), evaluated at the new time level.
    pub fn set_source<F>(&mut self, f: F)
    where
        F: Fn(Point, f64) -> f64 + Send + Sync + 'static,
    {
        self.source = Some(Box::new(f));
    }

    pub fn probe_values(&self) -> Vec<f64> {
        self.probe_nodes
            .iter()
            .map(|&n| self.field.values[n])
            .collect()
    }

    /// Runs `f` on this simulation's worker pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Prescribed temperatures at time `t`.
    pub fn dirichlet_at(&self, t: f64, columns_on: bool) -> Result<DirichletSet, SimError> {
        let air = air_temperature(t, &self.forcing);
        let mut tags: Vec<(Tag, f64)> = self
            .fixed
            .iter()
            .map(|&(tag, v)| {
                let value = match v {
                    BoundaryValue::Constant(c) => c,
                    BoundaryValue::Air => air,
                };
                (tag, value)
            })
            .collect();
        if columns_on {
            let imposed = self.controller.imposed_temperature(t, &self.forcing);
            tags.extend(
                self.controller
                    .column_tags
                    .iter()
                    .map(|&tag| (tag, imposed)),
            );
        }
        if let Some(tag) = self.surface {
            tags.push((tag, air));
        }
        Ok(collect_dirichlet(self.mesh(), &tags)?)
    }

    fn record(&self, step: usize, t_cur: f64, active: bool, report: SolveReport) -> StepRecord {
        let (min, max, mean) = self.field.stats();
        StepRecord {
            step,
            t_cur,
            t_air: air_temperature(t_cur, &self.forcing),
            columns_active: active,
            report,
            min,
            max,
            mean,
        }
    }

    /// Record describing the current state without stepping.
    pub fn initial_record(&self) -> StepRecord {
        let report = SolveReport {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
            wall_time: 0.0,
        };
        self.record(self.step_index, self.field.time, false, report)
    }

    /// Advances one step. On solver failure the field is left unchanged and
    /// the failing step's record is returned inside the error.
    pub fn step(&mut self) -> Result<StepRecord, SimError> {
        let step = self.step_index + 1;
        let t_cur = self.t_start + (step - self.first_step) as f64 * self.tau;
        let prev = &self.field;
        let soil_ref = self.reference_node.map_or(f64::NAN, |n| prev.values[n]);
        let active = columns_active(t_cur, soil_ref, &self.controller, &self.forcing);
        let dirichlet = self.dirichlet_at(t_cur, active)?;

        let source: Option<Vec<f64>> = self
            .source
            .as_ref()
            .map(|f| self.mesh().nodes().iter().map(|&p| f(p, t_cur)).collect());
        let started = Instant::now();
        let (mut next, mut report) = self.pool.install(|| {
            implicit_step(
                &self.disc,
                prev,
                &self.table,
                self.tau,
                &dirichlet,
                source.as_deref(),
                &self.settings,
            )
        })?;
        report.wall_time = started.elapsed().as_secs_f64();
        next.time = t_cur;

        if !report.converged {
            let mut rec = self.record(step, t_cur, active, report);
            let (min, max, mean) = next.stats();
            (rec.min, rec.max, rec.mean) = (min, max, mean);
            return Err(SimError::Solver(Box::new(rec)));
        }
        self.field = next;
        self.step_index = step;
        Ok(self.record(step, t_cur, active, report))
    }

    /// Runs to `t_max`, writing outputs into `out_dir` when given.
    ///
    /// The initial state and every `cadence`-th step are written as a VTK
    /// snapshot, a probe row and (if enabled) a restart dump.
    pub fn run_to_end(&mut self, out_dir: Option<&Path>) -> Result<Vec<StepRecord>, SimError> {
        self.run_to_end_with(out_dir, |_| {})
    }

    /// As [`Simulation::run_to_end`], calling `on_step` after every completed step.
    pub fn run_to_end_with(
        &mut self,
        out_dir: Option<&Path>,
        mut on_step: impl FnMut(&StepRecord),
    ) -> Result<Vec<StepRecord>, SimError> {
        let cadence = self.output.cadence;
        let mut writer = match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|source| IoError::Io {
                    path: dir.display().to_string(),
                    source,
                })?;
                Some(ProbeWriter::create(
                    io::probes_path(dir),
                    self.probe_nodes.len(),
                )?)
            }
            None => None,
        };
        let initial = self.initial_record();
        if let (Some(dir), Some(w)) = (out_dir, writer.as_mut()) {
            self.write_outputs(dir, w, &initial)?;
        }

        let mut records = Vec::with_capacity(self.total_steps);
        while !self.is_finished() {
            match self.step() {
                Ok(rec) => {
                    on_step(&rec);
                    if let (Some(dir), Some(w)) = (out_dir, writer.as_mut()) {
                        if rec.step.is_multiple_of(cadence) {
                            self.write_outputs(dir, w, &rec)?;
                        }
                    }
                    records.push(rec);
                }
                Err(e) => {
                    if let Some(w) = writer.as_mut() {
                        w.flush()?;
                    }
                    return Err(e);
                }
            }
        }
        if let Some(w) = writer.as_mut() {
            w.flush()?;
        }
        Ok(records)
    }

    fn write_outputs(
        &self,
        dir: &Path,
        w: &mut ProbeWriter,
        rec: &StepRecord,
    ) -> Result<(), SimError> {
        w.write_row(rec, &self.probe_values())?;
        if self.output.vtk {
            io::write_vtk(self.mesh(), &self.field, io::vtk_path(dir, rec.step))?;
        }
        if self.output.restart {
            io::snapshot_write(&self.field, io::restart_path(dir, rec.step))?;
        }
        Ok(())
    }

    pub fn output_dir(&self) -> &Path {
        &self.output.dir
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub output_dir: PathBuf,
    pub final_field: TemperatureField,
}

fn nearest_free_node(mesh: &Mesh, p: Point, excluded: &[bool]) -> usize {
    let dist = |x: &Point| (0..3).map(|d| (x[d] - p[d]).powi(2)).sum::<f64>();
    mesh.nodes()
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded[*i])
        .min_by(|a, b| dist(a.1).total_cmp(&dist(b.1)))
        .map_or_else(|| mesh.nearest_node(p), |(i, _)| i)
}

/// Runs a configuration end to end, writing into `config.output.dir`.
pub fn run(config: &SimulationConfig) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(config)?;
    let dir = config.output.dir.clone();
    let records = sim.run_to_end(Some(&dir))?;
    Ok(RunOutput {
        records,
        output_dir: dir,
        final_field: sim.field().clone(),
    })
}
