use serde::Deserialize;

use super::{exterior_faces, Mesh, MeshError, Point, Tag};

/// Axis-aligned box `[0, extents]` split into `divisions` hexahedra per axis.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxMeshSpec {
    pub extents: [f64; 3],
    pub divisions: [usize; 3],
}

impl BoxMeshSpec {
    pub fn new(extents: [f64; 3], divisions: [usize; 3]) -> Self {
        Self { extents, divisions }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(MeshError::InvalidBox(format!(
                "extents must be positive, got {:?}",
                self.extents
            )));
        }
        if self.divisions.contains(&0) {
            return Err(MeshError::InvalidBox(format!(
                "divisions must be at least 1, got {:?}",
                self.divisions
            )));
        }
        Ok(())
    }
}

/// Kuhn-subdivided box mesh with every cell in `region`.
///
/// Boundary facets are tagged 1..6 for the faces -x, +x, -y, +y, -z, +z.
pub fn generate_box(spec: &BoxMeshSpec, region: Tag) -> Result<Mesh, MeshError> {
    spec.validate()?;
    TensorGrid::uniform(spec).build(|_| region, |_| None)
}

/// Tensor-product grid lines, one strictly increasing coordinate list per axis.
///
/// Each hexahedron is split into the 6 tetrahedra of the Kuhn (Freudenthal)
/// subdivision along its main diagonal, which is conforming across hexes.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    pub lines: [Vec<f64>; 3],
}

// Axis orders of the 6 monotone lattice paths from corner (0,0,0) to (1,1,1).
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl TensorGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, zs: Vec<f64>) -> Result<Self, MeshError> {
        let lines = [xs, ys, zs];
        for (axis, l) in lines.iter().enumerate() {
            if l.len() < 2 {
                return Err(MeshError::InvalidBox(format!(
                    "axis {axis} needs at least two grid lines"
                )));
            }
            if l.windows(2).any(|w| !(w[1] > w[0])) || l.iter().any(|v| !v.is_finite()) {
                return Err(MeshError::InvalidBox(format!(
                    "axis {axis} grid lines must be finite and strictly increasing"
                )));
            }
        }
        Ok(Self { lines })
    }

    pub fn uniform(spec: &BoxMeshSpec) -> Self {
        let axis = |d: usize| -> Vec<f64> {
            let n = spec.divisions[d];
            (0..=n)
                .map(|i| spec.extents[d] * i as f64 / n as f64)
                .collect()
        };
        Self {
            lines: [axis(0), axis(1), axis(2)],
        }
    }

    /// Number of hexahedra per axis.
    pub fn divisions(&self) -> [usize; 3] {
        [
            self.lines[0].len() - 1,
            self.lines[1].len() - 1,
            self.lines[2].len() - 1,
        ]
    }

    /// Meshes the grid.
    ///
    /// `paint` maps a hex centroid to its region tag. `cutout` marks hexes that
    /// are removed from the domain; the faces they expose are tagged with the
    /// returned tag. Nodes used only by removed hexes are dropped.
    pub fn build<P, C>(&self, paint: P, cutout: C) -> Result<Mesh, MeshError>
    where
        P: Fn(Point) -> Tag,
        C: Fn(Point) -> Option<Tag>,
    {
        let [nx, ny, nz] = self.divisions();
        let lattice = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
        let hex_index = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);

        let mut removed: Vec<Option<Tag>> = vec![None; nx * ny * nz];
        let mut cells = Vec::new();
        let mut cell_region = Vec::new();
        let mut cell_hex = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let centre = [
                        0.5 * (self.lines[0][i] + self.lines[0][i + 1]),
                        0.5 * (self.lines[1][j] + self.lines[1][j + 1]),
                        0.5 * (self.lines[2][k] + self.lines[2][k + 1]),
                    ];
                    if let Some(tag) = cutout(centre) {
                        removed[hex_index(i, j, k)] = Some(tag);
                        continue;
                    }
                    let region = paint(centre);
                    for path in KUHN_PATHS {
                        let mut corner = [i, j, k];
                        let mut tet = [lattice(i, j, k); 4];
                        for (step, &axis) in path.iter().enumerate() {
                            corner[axis] += 1;
                            tet[step + 1] = lattice(corner[0], corner[1], corner[2]);
                        }
                        cells.push(tet);
                        cell_region.push(region);
                        cell_hex.push([i, j, k]);
                    }
                }
            }
        }

        let ijk = |v: usize| -> [usize; 3] {
            let i = v % (nx + 1);
            let j = (v / (nx + 1)) % (ny + 1);
            let k = v / ((nx + 1) * (ny + 1));
            [i, j, k]
        };
        let dims = [nx, ny, nz];
        let mut facets = Vec::new();
        let mut facet_tag = Vec::new();
        for (face, owner, _) in exterior_faces(&cells) {
            let idx = face.map(ijk);
            let hex = cell_hex[owner];
            // Exterior faces of a Kuhn mesh lie in a grid plane.
            let axis = (0..3)
                .find(|&d| idx[0][d] == idx[1][d] && idx[1][d] == idx[2][d])
                .expect("exterior Kuhn face lies in a grid plane");
            let plane = idx[0][axis];
            let high = plane == hex[axis] + 1;
            let tag = if (!high && plane == 0) || (high && plane == dims[axis]) {
                (2 * axis + usize::from(high) + 1) as Tag
            } else {
                let mut nb = hex;
                if high {
                    nb[axis] += 1;
                } else {
                    nb[axis] -= 1;
                }
                removed[hex_index(nb[0], nb[1], nb[2])]
                    .expect("interior exterior-face borders a removed hex")
            };
            facets.push(face);
            facet_tag.push(tag);
        }

        // Drop nodes not referenced by any remaining cell.
        let total = (nx + 1) * (ny + 1) * (nz + 1);
        let mut renumber = vec![usize::MAX; total];
        for cell in &cells {
            for &v in cell {
                renumber[v] = 0;
            }
        }
        let mut nodes = Vec::new();
        for (v, slot) in renumber.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = nodes.len();
                let [i, j, k] = ijk(v);
                nodes.push([self.lines[0][i], self.lines[1][j], self.lines[2][k]]);
            }
        }
        for cell in &mut cells {
            for v in cell.iter_mut() {
                *v = renumber[*v];
            }
        }
        for f in &mut facets {
            for v in f.iter_mut() {
                *v = renumber[*v];
            }
        }
        Mesh::new(nodes, cells, cell_region, facets, facet_tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_counts() {
        let m = generate_box(&BoxMeshSpec::new([1.0; 3], [1, 1, 1]), 3).unwrap();
        assert_eq!(m.num_nodes(), 8);
        assert_eq!(m.num_cells(), 6);
        assert_eq!(m.boundary_facets().len(), 12);
        assert!(m.cell_region().iter().all(|&r| r == 3));
        assert_eq!(m.facet_tags(), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn two_by_two_by_two_counts() {
        let m = generate_box(&BoxMeshSpec::new([1.0; 3], [2, 2, 2]), 1).unwrap();
        assert_eq!(m.num_nodes(), 27);
        assert_eq!(m.num_cells(), 48);
        // 6 faces x 4 squares x 2 triangles
        assert_eq!(m.boundary_facets().len(), 48);
    }

    #[test]
    fn face_tags_match_planes() {
        let m = generate_box(&BoxMeshSpec::new([2.0, 3.0, 4.0], [2, 3, 2]), 1).unwrap();
        for (f, &tag) in m.boundary_facets().iter().zip(m.facet_tag()) {
            let axis = ((tag - 1) / 2) as usize;
            let value = if tag % 2 == 1 {
                0.0
            } else {
                [2.0, 3.0, 4.0][axis]
            };
            for &v in f {
                assert_eq!(m.nodes()[v][axis], value);
            }
        }
    }

    #[test]
    fn rejects_zero_divisions() {
        let err = generate_box(&BoxMeshSpec::new([1.0; 3], [1, 0, 1]), 1).unwrap_err();
        assert!(matches!(err, MeshError::InvalidBox(_)));
        let err = generate_box(&BoxMeshSpec::new([1.0, -1.0, 1.0], [1, 1, 1]), 1).unwrap_err();
        assert!(matches!(err, MeshError::InvalidBox(_)));
    }

    #[test]
    fn cutout_faces_are_tagged_and_orphans_dropped() {
        // 3x3x1 grid, centre hex removed: a square hole through the slab.
        let grid = TensorGrid::new(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        let m = grid
            .build(
                |_| 1,
                |c| (c[0] > 1.0 && c[0] < 2.0 && c[1] > 1.0 && c[1] < 2.0).then_some(9),
            )
            .unwrap();
        assert_eq!(m.num_cells(), 8 * 6);
        assert_eq!(m.num_nodes(), 32);
        let hole = m.facet_tag().iter().filter(|&&t| t == 9).count();
        assert_eq!(hole, 4 * 2);

        // A 3x3 removed block leaves its interior lattice line orphaned.
        let grid = TensorGrid::new(
            (0..=5).map(f64::from).collect(),
            (0..=5).map(f64::from).collect(),
            vec![0.0, 1.0],
        )
        .unwrap();
        let m = grid
            .build(
                |_| 1,
                |c| (c[0] > 1.0 && c[0] < 4.0 && c[1] > 1.0 && c[1] < 4.0).then_some(9),
            )
            .unwrap();
        assert_eq!(m.num_nodes(), 36 * 2 - 4 * 2);
    }
}
