//! Unstructured tetrahedral meshes with region and boundary labelling.
//!
//! A [`Mesh`] holds linear (tet4) cells tagged with a region id, plus the
//! triangular boundary facets tagged with a boundary id. Dirichlet parts of
//! the boundary are selected by facet tag.

mod msh;
mod structured;

pub use msh::{parse_msh, read_msh, write_msh};
pub use structured::{generate_box, BoxMeshSpec, TensorGrid};

use std::collections::HashMap;

/// A point in 3D space, meters.
pub type Point = [f64; 3];

/// Region (cell) or boundary (facet) label.
pub type Tag = i32;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("failed to read mesh file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported MSH format version {0} (only 2.2 ASCII is read)")]
    UnsupportedVersion(String),
    #[error("element {element}: unsupported element type {kind}")]
    UnsupportedElement { element: usize, kind: u32 },
    #[error("element {element} references unknown node {node}")]
    DanglingNode { element: usize, node: usize },
    #[error("cell {cell} references node {node} but the mesh has {nodes} nodes")]
    NodeOutOfRange {
        cell: usize,
        node: usize,
        nodes: usize,
    },
    #[error("degenerate (zero-volume) tetrahedron at cell {cell}")]
    DegenerateCell { cell: usize },
    #[error("boundary facet {facet} is a face of {owners} cells (expected exactly one)")]
    FacetOwnership { facet: usize, owners: usize },
    #[error("{what} has length {actual}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        actual: usize,
        expected: usize,
    },
    #[error("invalid box mesh: {0}")]
    InvalidBox(String),
}

/// Linear tetrahedral mesh.
///
/// Cells are always positively oriented; construction swaps two nodes of any
/// cell with negative signed volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    cells: Vec<[usize; 4]>,
    cell_region: Vec<Tag>,
    boundary_facets: Vec<[usize; 3]>,
    facet_tag: Vec<Tag>,
}

impl Mesh {
    /// Builds a mesh, reorienting inverted cells and checking every invariant.
    pub fn new(
        nodes: Vec<Point>,
        mut cells: Vec<[usize; 4]>,
        cell_region: Vec<Tag>,
        boundary_facets: Vec<[usize; 3]>,
        facet_tag: Vec<Tag>,
    ) -> Result<Self, MeshError> {
        if cell_region.len() != cells.len() {
            return Err(MeshError::LengthMismatch {
                what: "cell_region",
                actual: cell_region.len(),
                expected: cells.len(),
            });
        }
        if facet_tag.len() != boundary_facets.len() {
            return Err(MeshError::LengthMismatch {
                what: "facet_tag",
                actual: facet_tag.len(),
                expected: boundary_facets.len(),
            });
        }
        let n = nodes.len();
        for (c, cell) in cells.iter_mut().enumerate() {
            if let Some(&node) = cell.iter().find(|&&v| v >= n) {
                return Err(MeshError::NodeOutOfRange {
                    cell: c,
                    node,
                    nodes: n,
                });
            }
            let vol = signed_volume(&nodes, cell);
            if is_degenerate(&nodes, cell, vol) {
                return Err(MeshError::DegenerateCell { cell: c });
            }
            if vol < 0.0 {
                cell.swap(2, 3);
            }
        }
        for facet in &boundary_facets {
            if let Some(&node) = facet.iter().find(|&&v| v >= n) {
                return Err(MeshError::NodeOutOfRange {
                    cell: usize::MAX,
                    node,
                    nodes: n,
                });
            }
        }

        let mesh = Self {
            nodes,
            cells,
            cell_region,
            boundary_facets,
            facet_tag,
        };
        mesh.check_facet_ownership()?;
        Ok(mesh)
    }

    fn check_facet_ownership(&self) -> Result<(), MeshError> {
        if self.boundary_facets.is_empty() {
            return Ok(());
        }
        let mut owners: HashMap<[usize; 3], usize> = self
            .boundary_facets
            .iter()
            .map(|f| (sorted3(*f), 0))
            .collect();
        for cell in &self.cells {
            for face in cell_faces(cell) {
                if let Some(count) = owners.get_mut(&sorted3(face)) {
                    *count += 1;
                }
            }
        }
        for (i, f) in self.boundary_facets.iter().enumerate() {
            let count = owners[&sorted3(*f)];
            if count != 1 {
                return Err(MeshError::FacetOwnership {
                    facet: i,
                    owners: count,
                });
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn cell_region(&self) -> &[Tag] {
        &self.cell_region
    }

    pub fn boundary_facets(&self) -> &[[usize; 3]] {
        &self.boundary_facets
    }

    pub fn facet_tag(&self) -> &[Tag] {
        &self.facet_tag
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Positive volume of a cell, `|det(edges)| / 6`.
    pub fn tet_volume(&self, cell: usize) -> Result<f64, MeshError> {
        let c = &self.cells[cell];
        let vol = signed_volume(&self.nodes, c);
        if is_degenerate(&self.nodes, c, vol) {
            return Err(MeshError::DegenerateCell { cell });
        }
        Ok(vol.abs())
    }

    /// Signed volume of a cell; positive for every cell of a constructed mesh.
    pub fn signed_volume(&self, cell: usize) -> f64 {
        signed_volume(&self.nodes, &self.cells[cell])
    }

    /// Sorted distinct region tags.
    pub fn region_tags(&self) -> Vec<Tag> {
        let mut tags = self.cell_region.clone();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    /// Sorted distinct facet tags.
    pub fn facet_tags(&self) -> Vec<Tag> {
        let mut tags = self.facet_tag.clone();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    /// Index of the node closest to `p`. Ties go to the lowest index.
    pub fn nearest_node(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, x) in self.nodes.iter().enumerate() {
            let d = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.nodes {
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }
}

/// The four triangular faces of a tet; face `k` is opposite local node `k`.
pub fn cell_faces(cell: &[usize; 4]) -> [[usize; 3]; 4] {
    [
        [cell[1], cell[2], cell[3]],
        [cell[0], cell[2], cell[3]],
        [cell[0], cell[1], cell[3]],
        [cell[0], cell[1], cell[2]],
    ]
}

/// Faces that belong to exactly one cell, as `(face, owning cell, local face index)`,
/// ordered by owning cell then local face.
pub fn exterior_faces(cells: &[[usize; 4]]) -> Vec<([usize; 3], usize, usize)> {
    let mut seen: HashMap<[usize; 3], (usize, usize, usize)> = HashMap::new();
    for (c, cell) in cells.iter().enumerate() {
        for (k, face) in cell_faces(cell).into_iter().enumerate() {
            seen.entry(sorted3(face))
                .and_modify(|e| e.2 += 1)
                .or_insert((c, k, 1));
        }
    }
    let mut out: Vec<_> = seen
        .into_values()
        .filter(|&(_, _, count)| count == 1)
        .map(|(c, k, _)| (cell_faces(&cells[c])[k], c, k))
        .collect();
    out.sort_unstable_by_key(|&(_, c, k)| (c, k));
    out
}

pub(crate) fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn det3(a: &Point, b: &Point, c: &Point) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn signed_volume(nodes: &[Point], cell: &[usize; 4]) -> f64 {
    let p0 = &nodes[cell[0]];
    let e1 = sub(&nodes[cell[1]], p0);
    let e2 = sub(&nodes[cell[2]], p0);
    let e3 = sub(&nodes[cell[3]], p0);
    det3(&e1, &e2, &e3) / 6.0
}

// Zero volume relative to the cube of the longest edge.
fn is_degenerate(nodes: &[Point], cell: &[usize; 4], vol: f64) -> bool {
    let mut longest: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let e = sub(&nodes[cell[i]], &nodes[cell[j]]);
            longest = longest.max((e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt());
        }
    }
    !(vol.abs() > 1e-14 * longest.powi(3))
}
