//! P1 finite elements for the linearized implicit heat step.
//!
//! One step solves `(M/τ + K) Tⁿ⁺¹ = (M/τ) Tⁿ`, where `M` is the row-sum
//! lumped capacity matrix and `K` the conductivity matrix. Both use one
//! coefficient per cell, evaluated at the cell-mean temperature of the
//! previous level.

mod assembly;
mod dirichlet;

pub use assembly::{assemble, Discretization, LinearSystem};
pub use dirichlet::{apply_dirichlet, collect_dirichlet, DirichletSet};

use crate::linalg::{CgSettings, LinalgError, SolveReport};
use crate::mesh::{det3, Mesh, MeshError, Point, Tag};
use crate::physics::{conductivity, effective_capacity, MaterialTable, PhysicsError};

#[derive(Debug, thiserror::Error)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("boundary tag {0} does not occur on the mesh")]
    UnknownTag(Tag),
    #[error("field has {actual} values but the mesh has {expected} nodes")]
    FieldLength { expected: usize, actual: usize },
    #[error("non-finite temperature at node {0}")]
    NonFinite(usize),
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("source has {actual} values but the mesh has {expected} nodes")]
    SourceLength { expected: usize, actual: usize },
}

/// Nodal temperatures (°C) at one time level (seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    pub values: Vec<f64>,
    pub time: f64,
}

impl TemperatureField {
    pub fn new(values: Vec<f64>, time: f64) -> Result<Self, FemError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FemError::NonFinite(i));
        }
        Ok(Self { values, time })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self, FemError> {
        Self::new(vec![value; n], 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, mesh: &Mesh) -> Result<(), FemError> {
        if self.values.len() != mesh.num_nodes() {
            return Err(FemError::FieldLength {
                expected: mesh.num_nodes(),
                actual: self.values.len(),
            });
        }
        Ok(())
    }

    /// `(min, max, mean)` of the nodal values.
    pub fn stats(&self) -> (f64, f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let mean = (sum / self.values.len() as f64).clamp(lo, hi);
        (lo, hi, mean)
    }
}

/// Volume and constant P1 basis gradients of a cell.
pub fn cell_geometry(mesh: &Mesh, cell: usize) -> Result<(f64, [Point; 4]), MeshError> {
    let volume = mesh.tet_volume(cell)?;
    let c = mesh.cells()[cell];
    let x = mesh.nodes();
    let e = |k: usize| -> Point {
        [
            x[c[k]][0] - x[c[0]][0],
            x[c[k]][1] - x[c[0]][1],
            x[c[k]][2] - x[c[0]][2],
        ]
    };
    let (a, b, d) = (e(1), e(2), e(3));
    let det = det3(&a, &b, &d);
    let cross = |u: &Point, v: &Point| -> Point {
        [
            (u[1] * v[2] - u[2] * v[1]) / det,
            (u[2] * v[0] - u[0] * v[2]) / det,
            (u[0] * v[1] - u[1] * v[0]) / det,
        ]
    };
    let g1 = cross(&b, &d);
    let g2 = cross(&d, &a);
    let g3 = cross(&a, &b);
    let g0 = [
        -g1[0] - g2[0] - g3[0],
        -g1[1] - g2[1] - g3[1],
        -g1[2] - g2[2] - g3[2],
    ];
    Ok((volume, [g0, g1, g2, g3]))
}

/// `K_ij = λ V ∇φ_i·∇φ_j`
pub fn element_stiffness(
    mesh: &Mesh,
    cell: usize,
    conductivity: f64,
) -> Result<[[f64; 4]; 4], MeshError> {
    let (v, g) = cell_geometry(mesh, cell)?;
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            k[i][j] =
                conductivity * v * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
        }
    }
    Ok(k)
}

/// Row-sum lumped capacity: `c V / 4` at each vertex.
pub fn element_lumped_mass(mesh: &Mesh, cell: usize, capacity: f64) -> Result<[f64; 4], MeshError> {
    let v = mesh.tet_volume(cell)?;
    Ok([capacity * v / 4.0; 4])
}

/// Effective capacity and conductivity of a cell at the mean of its previous nodal temperatures.
pub fn cell_coefficients(
    mesh: &Mesh,
    cell: usize,
    field_prev: &TemperatureField,
    table: &MaterialTable,
) -> Result<(f64, f64), FemError> {
    let c = mesh.cells()[cell];
    let v = &field_prev.values;
    let t_cell = 0.25 * (v[c[0]] + v[c[1]] + v[c[2]] + v[c[3]]);
    let mat = table.get(mesh.cell_region()[cell])?;
    let phase = table.phase();
    Ok((
        effective_capacity(t_cell, mat, phase),
        conductivity(t_cell, mat, phase),
    ))
}

/// One linearized backward-Euler step.
///
/// `source`, when given, holds nodal values of a volumetric heat source
/// (W/m³) at the new time level. Non-convergence is reported, not raised.
pub fn implicit_step(
    disc: &Discretization,
    field_prev: &TemperatureField,
    table: &MaterialTable,
    tau: f64,
    dirichlet: &DirichletSet,
    source: Option<&[f64]>,
    settings: &CgSettings,
) -> Result<(TemperatureField, SolveReport), FemError> {
    let system = disc.assemble(field_prev, table, tau, source)?;
    let system = apply_dirichlet(system, dirichlet)?;
    let mut x0 = field_prev.values.clone();
    for &(node, value) in dirichlet.entries() {
        x0[node] = value;
    }
    let (x, report) = crate::linalg::cg_solve(
        &system.matrix,
        &system.rhs,
        &x0,
        settings.tol,
        settings.max_iter,
    )?;
    let field = TemperatureField::new(x, field_prev.time + tau)?;
    Ok((field, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{Material, PhaseModel};
    use std::collections::BTreeMap;

    pub(crate) fn reference_tet() -> Mesh {
        Mesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            vec![[0, 1, 2, 3]],
            vec![1],
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn reference_stiffness() {
        let k = element_stiffness(&reference_tet(), 0, 1.0).unwrap();
        assert!((k[0][0] - 0.5).abs() < 1e-15);
        assert!((k[0][1] + 1.0 / 6.0).abs() < 1e-15);
        for i in 0..4 {
            assert!(k[i].iter().sum::<f64>().abs() < 1e-15);
            for j in 0..4 {
                assert_eq!(k[i][j], k[j][i]);
            }
        }
    }

    #[test]
    fn skewed_stiffness_rows_sum_to_zero() {
        let m = Mesh::new(
            vec![
                [0.1, -0.3, 0.2],
                [1.7, 0.2, -0.1],
                [0.4, 1.3, 0.5],
                [-0.2, 0.6, 2.1],
            ],
            vec![[0, 1, 2, 3]],
            vec![1],
            vec![],
            vec![],
        )
        .unwrap();
        let k = element_stiffness(&m, 0, 2.5).unwrap();
        for row in k {
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
        }
    }

    #[test]
    fn lumped_mass() {
        let m = reference_tet();
        assert!(element_lumped_mass(&m, 0, 1.0)
            .unwrap()
            .iter()
            .all(|&v| (v - 1.0 / 24.0).abs() < 1e-16));
        assert_eq!(element_lumped_mass(&m, 0, 0.0).unwrap(), [0.0; 4]);
        let total: f64 = element_lumped_mass(&m, 0, 3.0).unwrap().iter().sum();
        assert!((total - 0.5).abs() < 1e-15);
    }

    fn soil_table(regions: &[Tag]) -> MaterialTable {
        let soil = Material::FreezingPorous {
            porosity: 0.3,
            skeleton_capacity: 2.17e6,
            water_capacity: 2.42e6,
            ice_capacity: 1.93e6,
            skeleton_conductivity: 2.43,
            water_conductivity: 2.22,
            ice_conductivity: 2.25,
        };
        let map: BTreeMap<_, _> = regions.iter().map(|&r| (r, soil)).collect();
        MaterialTable::new(map, PhaseModel::default()).unwrap()
    }

    #[test]
    fn frozen_cell_coefficients() {
        let m = reference_tet();
        let table = soil_table(&[1]);
        let field = TemperatureField::uniform(4, -10.0).unwrap();
        let (c, l) = cell_coefficients(&m, 0, &field, &table).unwrap();
        let expect = crate::physics::frozen_thawed_coeffs(table.get(1).unwrap());
        assert_eq!(c, expect.frozen_capacity);
        assert_eq!(l, expect.frozen_conductivity);
    }

    #[test]
    fn cell_at_melting_point_carries_latent_spike() {
        let m = reference_tet();
        let table = soil_table(&[1]);
        let field = TemperatureField::uniform(4, 0.0).unwrap();
        let (c, _) = cell_coefficients(&m, 0, &field, &table).unwrap();
        let coeffs = crate::physics::frozen_thawed_coeffs(table.get(1).unwrap());
        let expected = 0.5 * (coeffs.frozen_capacity + coeffs.thawed_capacity) + 1.04e8 / 2.0;
        assert!((c - expected).abs() < 1e-6);
    }

    #[test]
    fn unknown_region_names_tag() {
        let m = Mesh::new(
            reference_tet().nodes().to_vec(),
            vec![[0, 1, 2, 3]],
            vec![99],
            vec![],
            vec![],
        )
        .unwrap();
        let err = cell_coefficients(
            &m,
            0,
            &TemperatureField::uniform(4, 0.0).unwrap(),
            &soil_table(&[1]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("99"));
    }

    #[test]
    fn field_rejects_nan() {
        assert!(matches!(
            TemperatureField::new(vec![0.0, f64::NAN], 0.0),
            Err(FemError::NonFinite(1))
        ));
    }
}
