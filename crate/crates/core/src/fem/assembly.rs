use rayon::prelude::*;

use super::{cell_coefficients, cell_geometry, FemError, TemperatureField};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::physics::MaterialTable;

/// Rows per parallel assembly block.
const ROW_BLOCK: usize = 512;

/// Matrix and right-hand side of one implicit step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Diagonal of the lumped capacity matrix `M`, J/°C.
    pub capacity: Vec<f64>,
}

/// Mesh plus everything about it that does not change between steps:
/// cell volumes, gradient products, the sparsity pattern and the
/// node-to-cell incidence used to gather contributions row by row.
///
/// Each global entry is summed over incident cells in increasing cell
/// order, so assembled values do not depend on the worker count.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    volumes: Vec<f64>,
    /// `V ∇φ_i·∇φ_j`, row-major per cell.
    shape_stiffness: Vec<[f64; 16]>,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    /// Value-array position of local entry `(i, j)` per cell.
    slots: Vec<[usize; 16]>,
    incidence_offsets: Vec<usize>,
    /// `(cell, local vertex)` pairs per node, cells ascending.
    incidence: Vec<(usize, usize)>,
    nodal_volume: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Result<Self, FemError> {
        let n = mesh.num_nodes();
        let ncells = mesh.num_cells();

        let geometry: Vec<_> = (0..ncells)
            .into_par_iter()
            .map(|c| cell_geometry(&mesh, c))
            .collect::<Result<_, _>>()?;
        let volumes: Vec<f64> = geometry.iter().map(|(v, _)| *v).collect();
        let shape_stiffness: Vec<[f64; 16]> = geometry
            .iter()
            .map(|(v, g)| {
                let mut s = [0.0; 16];
                for i in 0..4 {
                    for j in 0..4 {
                        s[4 * i + j] =
                            v * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
                    }
                }
                s
            })
            .collect();

        let mut counts = vec![0usize; n + 1];
        for cell in mesh.cells() {
            for &v in cell {
                counts[v + 1] += 1;
            }
        }
        let mut incidence_offsets = counts;
        for i in 0..n {
            incidence_offsets[i + 1] += incidence_offsets[i];
        }
        let mut fill = incidence_offsets.clone();
        let mut incidence = vec![(0, 0); incidence_offsets[n]];
        for (c, cell) in mesh.cells().iter().enumerate() {
            for (local, &v) in cell.iter().enumerate() {
                incidence[fill[v]] = (c, local);
                fill[v] += 1;
            }
        }

        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        let mut neighbours = Vec::new();
        for v in 0..n {
            neighbours.clear();
            for &(c, _) in &incidence[incidence_offsets[v]..incidence_offsets[v + 1]] {
                neighbours.extend_from_slice(&mesh.cells()[c]);
            }
            neighbours.sort_unstable();
            neighbours.dedup();
            col_indices.extend_from_slice(&neighbours);
            row_offsets.push(col_indices.len());
        }

        let slots = mesh
            .cells()
            .par_iter()
            .map(|cell| {
                let mut s = [0usize; 16];
                for i in 0..4 {
                    let row = &col_indices[row_offsets[cell[i]]..row_offsets[cell[i] + 1]];
                    for j in 0..4 {
                        let k = row
                            .binary_search(&cell[j])
                            .expect("pattern contains every cell pair");
                        s[4 * i + j] = row_offsets[cell[i]] + k;
                    }
                }
                s
            })
            .collect();

        let nodal_volume = (0..n)
            .map(|v| {
                incidence[incidence_offsets[v]..incidence_offsets[v + 1]]
                    .iter()
                    .map(|&(c, _)| volumes[c] / 4.0)
                    .sum()
            })
            .collect();

        Ok(Self {
            mesh,
            volumes,
            shape_stiffness,
            row_offsets,
            col_indices,
            slots,
            incidence_offsets,
            incidence,
            nodal_volume,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Lumped volume per node, `Σ V/4` over incident cells.
    pub fn nodal_volume(&self) -> &[f64] {
        &self.nodal_volume
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    fn check_field(&self, field: &TemperatureField) -> Result<(), FemError> {
        field.check_len(&self.mesh)
    }

    /// Per-cell `(capacity, conductivity)` at the previous level.
    pub fn coefficients(
        &self,
        field_prev: &TemperatureField,
        table: &MaterialTable,
    ) -> Result<Vec<(f64, f64)>, FemError> {
        self.check_field(field_prev)?;
        (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| cell_coefficients(&self.mesh, c, field_prev, table))
            .collect()
    }

    /// Diagonal of the lumped capacity matrix.
    pub fn lumped_capacity(
        &self,
        field_prev: &TemperatureField,
        table: &MaterialTable,
    ) -> Result<Vec<f64>, FemError> {
        let coeffs = self.coefficients(field_prev, table)?;
        Ok(self.gather_capacity(&coeffs))
    }

    fn gather_capacity(&self, coeffs: &[(f64, f64)]) -> Vec<f64> {
        (0..self.mesh.num_nodes())
            .into_par_iter()
            .map(|v| {
                self.incident(v)
                    .iter()
                    .map(|&(c, _)| coeffs[c].0 * self.volumes[c] / 4.0)
                    .sum()
            })
            .collect()
    }

    fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.incidence[self.incidence_offsets[v]..self.incidence_offsets[v + 1]]
    }

    /// Conductivity matrix `K` with coefficients from `field_prev`.
    pub fn assemble_stiffness(
        &self,
        field_prev: &TemperatureField,
        table: &MaterialTable,
    ) -> Result<CsrMatrix, FemError> {
        let coeffs = self.coefficients(field_prev, table)?;
        Ok(self.gather_stiffness(&coeffs))
    }

    fn gather_stiffness(&self, coeffs: &[(f64, f64)]) -> CsrMatrix {
        let n = self.mesh.num_nodes();
        let mut values = vec![0.0; self.col_indices.len()];

        let mut blocks: Vec<(usize, usize, &mut [f64])> = Vec::new();
        let mut rest: &mut [f64] = &mut values;
        let mut row = 0;
        while row < n {
            let end = (row + ROW_BLOCK).min(n);
            let len = self.row_offsets[end] - self.row_offsets[row];
            let (head, tail) = rest.split_at_mut(len);
            blocks.push((row, end, head));
            rest = tail;
            row = end;
        }

        blocks.into_par_iter().for_each(|(first, end, vals)| {
            let base = self.row_offsets[first];
            for v in first..end {
                for &(c, li) in self.incident(v) {
                    let lambda = coeffs[c].1;
                    let s = &self.shape_stiffness[c];
                    let slot = &self.slots[c];
                    for lj in 0..4 {
                        vals[slot[4 * li + lj] - base] += lambda * s[4 * li + lj];
                    }
                }
            }
        });

        CsrMatrix::new(
            n,
            self.row_offsets.clone(),
            self.col_indices.clone(),
            values,
        )
        .expect("assembled pattern is valid CSR")
    }

    /// `A = M/τ + K`, `b = (M/τ) Tⁿ + M_vol f`.
    ///
    /// `source` holds nodal heat-source values (W/m³), lumped with the
    /// geometric nodal volumes.
    pub fn assemble(
        &self,
        field_prev: &TemperatureField,
        table: &MaterialTable,
        tau: f64,
        source: Option<&[f64]>,
    ) -> Result<LinearSystem, FemError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(FemError::InvalidTimeStep(tau));
        }
        let n = self.mesh.num_nodes();
        if let Some(s) = source {
            if s.len() != n {
                return Err(FemError::SourceLength {
                    expected: n,
                    actual: s.len(),
                });
            }
        }
        let coeffs = self.coefficients(field_prev, table)?;
        let mut matrix = self.gather_stiffness(&coeffs);
        let capacity = self.gather_capacity(&coeffs);

        let mut rhs = vec![0.0; n];
        for v in 0..n {
            let m_tau = capacity[v] / tau;
            let diag = matrix.position(v, v).expect("diagonal is in the pattern");
            matrix.values_mut()[diag] += m_tau;
            rhs[v] = m_tau * field_prev.values[v];
            if let Some(s) = source {
                rhs[v] += self.nodal_volume[v] * s[v];
            }
        }
        Ok(LinearSystem {
            matrix,
            rhs,
            capacity,
        })
    }
}

/// Builds a [`Discretization`] for `mesh` and assembles one step.
pub fn assemble(
    mesh: &Mesh,
    field_prev: &TemperatureField,
    table: &MaterialTable,
    tau: f64,
) -> Result<LinearSystem, FemError> {
    Discretization::new(mesh.clone())?.assemble(field_prev, table, tau, None)
}
