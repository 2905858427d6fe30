//! Manufactured solutions for the constant-coefficient heat equation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::VerifyError;
use crate::fem::{implicit_step, DirichletSet, Discretization, TemperatureField};
use crate::linalg::CgSettings;
use crate::mesh::{generate_box, BoxMeshSpec, Mesh, Point};
use crate::physics::{Material, MaterialTable, PhaseModel};

/// `T = offset + A cos(πx/Lx) cos(πy/Ly) cos(πz/Lz) e^{-t/t₀}` on `[0,L]³`.
///
/// The normal derivative vanishes on every face of the box, so the problem is
/// posed with insulated boundaries and needs no boundary data. `offset − A`
/// is kept above the smoothing interval so the coefficients stay constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub amplitude: f64,
    pub offset: f64,
    pub decay_time: f64,
    pub extents: [f64; 3],
    pub capacity: f64,
    pub conductivity: f64,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        Self {
            amplitude: 5.0,
            offset: 10.0,
            decay_time: 5.0e4,
            extents: [1.0; 3],
            capacity: 2.0e6,
            conductivity: 2.0,
        }
    }
}

impl ManufacturedSolution {
    fn shape(&self, p: Point) -> f64 {
        (0..3)
            .map(|d| (PI * p[d] / self.extents[d]).cos())
            .product()
    }

    pub fn exact(&self, p: Point, t: f64) -> f64 {
        self.offset + self.amplitude * self.shape(p) * (-t / self.decay_time).exp()
    }

    /// `cρ ∂T/∂t − λ ΔT`, W/m³.
    pub fn source(&self, p: Point, t: f64) -> f64 {
        let curvature: f64 = self.extents.iter().map(|l| PI * PI / (l * l)).sum();
        self.amplitude
            * self.shape(p)
            * (-t / self.decay_time).exp()
            * (self.conductivity * curvature - self.capacity / self.decay_time)
    }

    /// Source interpolated at the mesh nodes.
    pub fn nodal_source(&self, mesh: &Mesh, t: f64) -> Vec<f64> {
        mesh.nodes().iter().map(|&p| self.source(p, t)).collect()
    }

    pub fn material(&self) -> Material {
        Material::SinglePhase {
            capacity: self.capacity,
            conductivity: self.conductivity,
        }
    }

    /// Smallest value the solution takes.
    pub fn minimum(&self) -> f64 {
        self.offset - self.amplitude.abs()
    }
}

/// Error of one manufactured-solution run.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsRun {
    pub divisions: usize,
    pub steps: usize,
    pub field: TemperatureField,
    /// Lumped L2 error against the exact solution at the final time.
    pub l2_error: f64,
}

/// `sqrt(Σ_i V_i (a_i − b_i)²)` with the lumped nodal volumes.
pub fn lumped_l2(disc: &Discretization, a: &[f64], b: &[f64]) -> f64 {
    disc.nodal_volume()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(v, (x, y))| v * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn mms_setup(
    sol: &ManufacturedSolution,
    divisions: usize,
) -> Result<(Discretization, MaterialTable), VerifyError> {
    let phase = PhaseModel::default();
    if sol.minimum() <= phase.t_star + phase.delta {
        return Err(VerifyError::Setup(format!(
            "solution dips to {} inside the smoothing interval",
            sol.minimum()
        )));
    }
    let mesh = generate_box(&BoxMeshSpec::new(sol.extents, [divisions; 3]), 1)?;
    let table = MaterialTable::new(BTreeMap::from([(1, sol.material())]), phase)?;
    Ok((Discretization::new(mesh)?, table))
}

/// Integrates from the exact initial state to `t_end` in `steps` steps on a
/// `divisions³` box.
pub fn run_mms(
    sol: &ManufacturedSolution,
    divisions: usize,
    steps: usize,
    t_end: f64,
) -> Result<MmsRun, VerifyError> {
    let (disc, table) = mms_setup(sol, divisions)?;
    let field = integrate(sol, &disc, &table, steps, t_end)?;
    let exact: Vec<f64> = disc
        .mesh()
        .nodes()
        .iter()
        .map(|&p| sol.exact(p, t_end))
        .collect();
    let l2_error = lumped_l2(&disc, &field.values, &exact);
    Ok(MmsRun {
        divisions,
        steps,
        field,
        l2_error,
    })
}

fn integrate(
    sol: &ManufacturedSolution,
    disc: &Discretization,
    table: &MaterialTable,
    steps: usize,
    t_end: f64,
) -> Result<TemperatureField, VerifyError> {
    if steps == 0 || !(t_end > 0.0) {
        return Err(VerifyError::Setup(format!(
            "need at least one step over a positive time, got {steps} steps to {t_end}"
        )));
    }
    let settings = CgSettings {
        tol: 1e-13,
        max_iter: 10_000,
    };
    let tau = t_end / steps as f64;
    let mesh = disc.mesh();
    let initial = mesh.nodes().iter().map(|&p| sol.exact(p, 0.0)).collect();
    let mut field = TemperatureField::new(initial, 0.0)?;
    let none = DirichletSet::default();
    for step in 1..=steps {
        let t = step as f64 * tau;
        let f = sol.nodal_source(mesh, t);
        let (next, report) = implicit_step(disc, &field, table, tau, &none, Some(&f), &settings)?;
        if !report.converged {
            return Err(VerifyError::NotConverged { step });
        }
        field = next;
        field.time = t;
    }
    Ok(field)
}

/// Errors over a refinement sequence and the observed orders between
/// consecutive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    /// `(h or τ, error)` per level, coarse to fine.
    pub levels: Vec<(f64, f64)>,
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    fn new(levels: Vec<(f64, f64)>) -> Self {
        let orders = levels
            .windows(2)
            .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
            .collect();
        Self { levels, orders }
    }

    /// Order between the two finest levels.
    pub fn observed_order(&self) -> f64 {
        self.orders.last().copied().unwrap_or(f64::NAN)
    }

    pub fn is_monotone(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// Spatial study: the box is refined by 2 per level and the step by 4, so
/// the first-order time error shrinks as fast as the second-order space error.
pub fn spatial_study(
    sol: &ManufacturedSolution,
    divisions: &[usize],
    coarse_steps: usize,
    t_end: f64,
) -> Result<ConvergenceStudy, VerifyError> {
    let base = divisions.first().copied().unwrap_or(1) as f64;
    let levels = divisions
        .iter()
        .map(|&n| {
            let ratio = n as f64 / base;
            let steps = (coarse_steps as f64 * ratio * ratio).round() as usize;
            let run = run_mms(sol, n, steps, t_end)?;
            Ok((sol.extents[0] / n as f64, run.l2_error))
        })
        .collect::<Result<_, VerifyError>>()?;
    Ok(ConvergenceStudy::new(levels))
}

/// Temporal study on a fixed mesh. The error of each step size is measured
/// against a run on the same mesh with `reference_steps` steps, which
/// isolates the time discretization error from the fixed space error.
pub fn temporal_study(
    sol: &ManufacturedSolution,
    divisions: usize,
    steps: &[usize],
    reference_steps: usize,
    t_end: f64,
) -> Result<ConvergenceStudy, VerifyError> {
    let (disc, table) = mms_setup(sol, divisions)?;
    let reference = integrate(sol, &disc, &table, reference_steps, t_end)?;
    let levels = steps
        .iter()
        .map(|&s| {
            let field = integrate(sol, &disc, &table, s, t_end)?;
            Ok((
                t_end / s as f64,
                lumped_l2(&disc, &field.values, &reference.values),
            ))
        })
        .collect::<Result<_, VerifyError>>()?;
    Ok(ConvergenceStudy::new(levels))
}

/// Steady linear profile between two faces held at `left` and `right`:
/// starting from the exact profile, `steps` steps must leave it unchanged.
/// Returns the largest nodal deviation.
pub fn affine_exactness(
    divisions: usize,
    steps: usize,
    left: f64,
    right: f64,
) -> Result<f64, VerifyError> {
    let sol = ManufacturedSolution::default();
    let mesh = generate_box(&BoxMeshSpec::new([1.0; 3], [divisions; 3]), 1)?;
    let table = MaterialTable::new(BTreeMap::from([(1, sol.material())]), PhaseModel::default())?;
    let profile = |p: Point| left + (right - left) * p[0];
    let dirichlet = crate::fem::collect_dirichlet(&mesh, &[(1, left), (2, right)])?;
    let initial = mesh.nodes().iter().map(|&p| profile(p)).collect();
    let disc = Discretization::new(mesh)?;
    let settings = CgSettings {
        tol: 1e-14,
        max_iter: 10_000,
    };
    let mut field = TemperatureField::new(initial, 0.0)?;
    for step in 1..=steps {
        let (next, report) =
            implicit_step(&disc, &field, &table, 3600.0, &dirichlet, None, &settings)?;
        if !report.converged {
            return Err(VerifyError::NotConverged { step });
        }
        field = next;
    }
    Ok(disc
        .mesh()
        .nodes()
        .iter()
        .zip(&field.values)
        .map(|(&p, v)| (v - profile(p)).abs())
        .fold(0.0, f64::max))
}
