//! Shared fixtures for the kernel benchmarks.

use std::collections::BTreeMap;

use frostsim::fem::{collect_dirichlet, DirichletSet, Discretization, TemperatureField};
use frostsim::mesh::{generate_box, BoxMeshSpec};
use frostsim::physics::{MaterialTable, PhaseModel};
use frostsim::simulate::scenario::default_materials;

/// Frozen soil cube with `n³` hexes, one warm face, and a field straddling
/// the melting point so the latent term is active.
pub struct Fixture {
    pub disc: Discretization,
    pub table: MaterialTable,
    pub field: TemperatureField,
    pub dirichlet: DirichletSet,
}

impl Fixture {
    pub fn soil_cube(n: usize) -> Self {
        let mesh = generate_box(&BoxMeshSpec::new([10.0; 3], [n; 3]), 1).expect("valid box");
        let soil = default_materials()["1"];
        let table = MaterialTable::new(BTreeMap::from([(1, soil)]), PhaseModel::default())
            .expect("valid materials");
        let dirichlet = collect_dirichlet(&mesh, &[(1, 20.0)]).expect("face tag exists");
        let values = mesh.nodes().iter().map(|p| -5.0 + 0.8 * p[0]).collect();
        let field = TemperatureField::new(values, 0.0).expect("finite field");
        let disc = Discretization::new(mesh).expect("valid mesh");
        Self {
            disc,
            table,
            field,
            dirichlet,
        }
    }
}
