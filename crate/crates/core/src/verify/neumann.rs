//! One-phase melting of a half-space held at a wall temperature, against the
//! classical similarity solution.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use super::erf::erf;
use super::VerifyError;
use crate::fem::{collect_dirichlet, implicit_step, Discretization, TemperatureField};
use crate::linalg::CgSettings;
use crate::mesh::{generate_box, BoxMeshSpec, Mesh};
use crate::physics::{Material, MaterialTable, PhaseModel};

const BRACKET: (f64, f64) = (1e-8, 5.0);

fn similarity_residual(lambda: f64, beta: f64) -> f64 {
    PI.sqrt() * lambda * (lambda * lambda).exp() * erf(lambda) - beta
}

/// Similarity constant of the front `X(t) = 2 λ √(a t)` for Stefan number `beta`.
///
/// Bisection on `[1e-8, 5]` until the residual is below 1e-12.
pub fn neumann_lambda(beta: f64) -> Result<f64, VerifyError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(VerifyError::Stefan(beta));
    }
    let (mut lo, mut hi) = BRACKET;
    let (f_lo, f_hi) = (similarity_residual(lo, beta), similarity_residual(hi, beta));
    if f_lo.signum() == f_hi.signum() {
        return Err(VerifyError::Stefan(beta));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let f = similarity_residual(mid, beta);
        if f.abs() <= 1e-12 || hi - lo <= f64::EPSILON * mid {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Melting half-space `x > 0`, initially at the melting point, wall at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannCase {
    /// Thermal diffusivity of the melt, m²/s.
    pub diffusivity: f64,
    pub wall_temperature: f64,
    pub melt_temperature: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl NeumannCase {
    pub fn new(
        diffusivity: f64,
        wall_temperature: f64,
        melt_temperature: f64,
        beta: f64,
    ) -> Result<Self, VerifyError> {
        if !(diffusivity > 0.0) || !(wall_temperature > melt_temperature) {
            return Err(VerifyError::Setup(format!(
                "need positive diffusivity and a wall above the melting point, got a = {diffusivity}, \
                 wall {wall_temperature}, melt {melt_temperature}"
            )));
        }
        Ok(Self {
            diffusivity,
            wall_temperature,
            melt_temperature,
            beta,
            lambda: neumann_lambda(beta)?,
        })
    }

    pub fn front(&self, t: f64) -> f64 {
        2.0 * self.lambda * (self.diffusivity * t).sqrt()
    }

    /// Time at which the front reaches `x`.
    pub fn time_to_reach(&self, x: f64) -> f64 {
        let s = x / (2.0 * self.lambda);
        s * s / self.diffusivity
    }

    /// Melt temperature profile; the melting point beyond the front.
    pub fn temperature(&self, x: f64, t: f64) -> f64 {
        if x >= self.front(t) {
            return self.melt_temperature;
        }
        let eta = x / (2.0 * (self.diffusivity * t).sqrt());
        self.wall_temperature
            - (self.wall_temperature - self.melt_temperature) * erf(eta) / erf(self.lambda)
    }
}

/// Bar length of the benchmark, m.
pub const BAR_LENGTH: f64 = 1.0;
/// Fraction of the bar the exact front covers by the end of the run.
pub const FRONT_REACH: f64 = 0.6;
const CAPACITY: f64 = 2.0e6;
const CONDUCTIVITY: f64 = 2.0;
const OVERHEAT: f64 = 10.0;
const MELT: f64 = 0.0;
const SAMPLES: usize = 10;

/// Front position at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSample {
    pub step: usize,
    pub time: f64,
    pub simulated: f64,
    pub exact: f64,
    pub relative_error: f64,
}

/// Outcome of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannReport {
    pub cells: usize,
    pub tau: f64,
    pub delta: f64,
    pub case: NeumannCase,
    pub steps: usize,
    /// Simulated front after every step, starting with the initial state.
    pub fronts: Vec<f64>,
    pub samples: Vec<FrontSample>,
    pub max_relative_error: f64,
    pub wall_time: f64,
}

impl NeumannReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,t_seconds,front_simulated,front_exact,relative_error\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.step, s.time, s.simulated, s.exact, s.relative_error
            ));
        }
        out
    }

    pub fn front_is_monotone(&self) -> bool {
        self.fronts.windows(2).all(|w| w[1] >= w[0])
    }
}

/// The benchmark case for Stefan number `beta`: a = 1e-6 m²/s, wall 10 °C
/// above the melting point of 0 °C.
pub fn benchmark_case(beta: f64) -> Result<NeumannCase, VerifyError> {
    NeumannCase::new(CONDUCTIVITY / CAPACITY, MELT + OVERHEAT, MELT, beta)
}

/// Run length: the exact front reaches [`FRONT_REACH`] of the bar.
pub fn benchmark_duration(beta: f64) -> Result<f64, VerifyError> {
    Ok(benchmark_case(beta)?.time_to_reach(FRONT_REACH * BAR_LENGTH))
}

/// Smoothing half-width for a given resolution: 0.5 °C at 40 cells, scaled with
/// the cell size so the mushy zone keeps spanning about two cells.
pub fn default_delta(cells: usize) -> f64 {
    0.5 * 40.0 / cells as f64
}

/// Step for a given resolution: 400 steps over the run at 40 cells, scaled
/// with the cell size. The latent capacity lags one step behind, so the
/// step has to stay short while the front is fast early in the run.
pub fn default_tau(cells: usize, beta: f64) -> Result<f64, VerifyError> {
    Ok(benchmark_duration(beta)? / (400.0 * cells as f64 / 40.0))
}

/// Three levels `(cells, tau, delta)`, halving cell size, step and smoothing.
pub fn refinement_levels(beta: f64) -> Result<[(usize, f64, f64); 3], VerifyError> {
    let mut levels = [(40, 0.0, 0.0), (80, 0.0, 0.0), (160, 0.0, 0.0)];
    for level in &mut levels {
        *level = (level.0, default_tau(level.0, beta)?, default_delta(level.0));
    }
    Ok(levels)
}

/// `cells × 2 × 2` cubic cells along x.
pub fn bar_mesh(cells: usize) -> Result<Mesh, VerifyError> {
    let h = BAR_LENGTH / cells as f64;
    Ok(generate_box(
        &BoxMeshSpec::new([BAR_LENGTH, 2.0 * h, 2.0 * h], [cells, 2, 2]),
        1,
    )?)
}

fn uniform_material() -> Material {
    Material::FreezingPorous {
        porosity: 0.3,
        skeleton_capacity: CAPACITY,
        water_capacity: CAPACITY,
        ice_capacity: CAPACITY,
        skeleton_conductivity: CONDUCTIVITY,
        water_conductivity: CONDUCTIVITY,
        ice_conductivity: CONDUCTIVITY,
    }
}

/// Nodes on the bar edge `y = z = 0`, ordered by x.
pub fn axis_nodes(mesh: &Mesh) -> Vec<usize> {
    let tol = 1e-9 * BAR_LENGTH;
    let mut nodes: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&i| {
            let p = mesh.nodes()[i];
            p[1].abs() < tol && p[2].abs() < tol
        })
        .collect();
    nodes.sort_by(|&a, &b| mesh.nodes()[a][0].total_cmp(&mesh.nodes()[b][0]));
    nodes
}

/// First crossing of `level` along the ordered nodes, linearly interpolated.
pub fn front_position(mesh: &Mesh, line: &[usize], values: &[f64], level: f64) -> f64 {
    let x = |i: usize| mesh.nodes()[line[i]][0];
    let v = |i: usize| values[line[i]];
    if line.is_empty() || v(0) < level {
        return line.first().map_or(0.0, |_| x(0));
    }
    for i in 0..line.len() - 1 {
        if v(i + 1) < level {
            let s = (v(i) - level) / (v(i) - v(i + 1));
            return x(i) + s * (x(i + 1) - x(i));
        }
    }
    x(line.len() - 1)
}

/// Runs the melting bar and compares the simulated front with the exact one
/// at ten times spread over the last 90% of the run.
///
/// The bar starts at the lower edge of the smoothing interval, fully frozen,
/// so that melting absorbs the whole latent heat.
pub fn run_neumann_benchmark(
    cells: usize,
    tau: f64,
    delta: f64,
    beta: f64,
) -> Result<NeumannReport, VerifyError> {
    let started = Instant::now();
    let case = benchmark_case(beta)?;
    if cells < 2 || !(tau > 0.0) {
        return Err(VerifyError::Setup(format!(
            "need at least 2 cells and a positive step, got {cells} cells, tau {tau}"
        )));
    }
    let t_end = benchmark_duration(beta)?;
    let steps = (t_end / tau).round() as usize;
    if steps < SAMPLES {
        return Err(VerifyError::Setup(format!(
            "tau {tau} s gives {steps} steps, need at least {SAMPLES}"
        )));
    }

    let latent = CAPACITY * OVERHEAT / beta;
    let phase = PhaseModel::new(MELT, delta, latent)?;
    let table = MaterialTable::new(BTreeMap::from([(1, uniform_material())]), phase)?;
    let mesh = bar_mesh(cells)?;
    let dirichlet = collect_dirichlet(&mesh, &[(1, case.wall_temperature)])?;
    let line = axis_nodes(&mesh);
    let disc = Discretization::new(mesh)?;
    let settings = CgSettings {
        tol: 1e-10,
        max_iter: 10_000,
    };

    let sample_steps: Vec<usize> = (1..=SAMPLES)
        .map(|k| ((0.1 + 0.9 * k as f64 / SAMPLES as f64) * steps as f64).ceil() as usize)
        .map(|s| s.min(steps))
        .collect();

    let mut field = TemperatureField::uniform(disc.mesh().num_nodes(), MELT - delta)?;
    let mut fronts = vec![front_position(disc.mesh(), &line, &field.values, MELT)];
    let mut samples = Vec::with_capacity(SAMPLES);
    for step in 1..=steps {
        let (next, report) =
            implicit_step(&disc, &field, &table, tau, &dirichlet, None, &settings)?;
        if !report.converged {
            return Err(VerifyError::NotConverged { step });
        }
        field = next;
        field.time = step as f64 * tau;
        let front = front_position(disc.mesh(), &line, &field.values, MELT);
        fronts.push(front);
        if sample_steps.contains(&step) {
            let exact = case.front(field.time);
            samples.push(FrontSample {
                step,
                time: field.time,
                simulated: front,
                exact,
                relative_error: (front - exact).abs() / exact,
            });
        }
    }
    let max_relative_error = samples.iter().map(|s| s.relative_error).fold(0.0, f64::max);
    Ok(NeumannReport {
        cells,
        tau,
        delta,
        case,
        steps,
        fronts,
        samples,
        max_relative_error,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Pure diffusion (no latent heat) in the same bar from a uniform start at
/// the melting point; returns the largest nodal deviation from the erf
/// profile at `t_end`, relative to the wall overheat.
pub fn run_diffusion_benchmark(cells: usize, steps: usize, t_end: f64) -> Result<f64, VerifyError> {
    let case = benchmark_case(1.0)?;
    let table = MaterialTable::new(
        BTreeMap::from([(
            1,
            Material::SinglePhase {
                capacity: CAPACITY,
                conductivity: CONDUCTIVITY,
            },
        )]),
        PhaseModel::default(),
    )?;
    let mesh = bar_mesh(cells)?;
    let dirichlet = collect_dirichlet(&mesh, &[(1, case.wall_temperature)])?;
    let disc = Discretization::new(mesh)?;
    let settings = CgSettings {
        tol: 1e-12,
        max_iter: 10_000,
    };
    let tau = t_end / steps as f64;
    let mut field = TemperatureField::uniform(disc.mesh().num_nodes(), MELT)?;
    for step in 1..=steps {
        let (next, report) =
            implicit_step(&disc, &field, &table, tau, &dirichlet, None, &settings)?;
        if !report.converged {
            return Err(VerifyError::NotConverged { step });
        }
        field = next;
    }
    let scale = 2.0 * (case.diffusivity * t_end).sqrt();
    let worst = disc
        .mesh()
        .nodes()
        .iter()
        .zip(&field.values)
        .map(|(p, &v)| {
            let exact = case.wall_temperature - OVERHEAT * erf(p[0] / scale);
            (v - exact).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst / OVERHEAT)
}
