use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{FemError, LinearSystem};
use crate::mesh::{Mesh, Tag};

/// Prescribed nodal temperatures, one entry per node, sorted by node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirichletSet {
    entries: Vec<(usize, f64)>,
}

impl DirichletSet {
    /// Deduplicates by node; the first value given for a node wins.
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (node, value) in entries {
            map.entry(node).or_insert(value);
        }
        Self {
            entries: map.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, node: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&node, |&(n, _)| n)
            .ok()
            .map(|k| self.entries[k].1)
    }
}

/// Nodes of all facets whose tag is listed, with that tag's value.
///
/// Tags are given in priority order: a node on facets of several listed
/// tags takes the value of the earliest.
pub fn collect_dirichlet(mesh: &Mesh, tags: &[(Tag, f64)]) -> Result<DirichletSet, FemError> {
    let present = mesh.facet_tags();
    for &(tag, _) in tags {
        if present.binary_search(&tag).is_err() {
            return Err(FemError::UnknownTag(tag));
        }
    }
    let mut entries = Vec::new();
    for &(tag, value) in tags {
        for (f, &t) in mesh.boundary_facets().iter().zip(mesh.facet_tag()) {
            if t == tag {
                entries.extend(f.iter().map(|&v| (v, value)));
            }
        }
    }
    Ok(DirichletSet::new(entries))
}

/// Symmetric elimination of prescribed values.
///
/// Free rows move `A_ji g_i` to the right-hand side and drop the column;
/// constrained rows become identity rows. The sparsity pattern is kept.
pub fn apply_dirichlet(
    mut system: LinearSystem,
    d: &DirichletSet,
) -> Result<LinearSystem, FemError> {
    let n = system.matrix.dim();
    if let Some(&(node, _)) = d.entries().iter().find(|&&(v, _)| v >= n) {
        return Err(FemError::FieldLength {
            expected: n,
            actual: node + 1,
        });
    }
    if d.is_empty() {
        return Ok(system);
    }
    let mut prescribed = vec![None; n];
    for &(node, value) in d.entries() {
        prescribed[node] = Some(value);
    }

    let offsets = system.matrix.row_offsets().to_vec();
    let cols = system.matrix.col_indices().to_vec();
    let values = system.matrix.values_mut();

    let mut rows: Vec<(usize, &mut [f64], &mut f64)> = Vec::with_capacity(n);
    let mut rest: &mut [f64] = values;
    for (i, b) in system.rhs.iter_mut().enumerate() {
        let (head, tail) = rest.split_at_mut(offsets[i + 1] - offsets[i]);
        rows.push((i, head, b));
        rest = tail;
    }
    rows.par_iter_mut().for_each(|(i, vals, b)| {
        let cols = &cols[offsets[*i]..offsets[*i + 1]];
        match prescribed[*i] {
            Some(g) => {
                for (&j, v) in cols.iter().zip(vals.iter_mut()) {
                    *v = if j == *i { 1.0 } else { 0.0 };
                }
                **b = g;
            }
            None => {
                for (&j, v) in cols.iter().zip(vals.iter_mut()) {
                    if let Some(g) = prescribed[j] {
                        **b -= *v * g;
                        *v = 0.0;
                    }
                }
            }
        }
    });
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::mesh::{generate_box, BoxMeshSpec};

    fn system(rows: &[Vec<f64>], rhs: Vec<f64>) -> LinearSystem {
        LinearSystem {
            matrix: CsrMatrix::from_dense(rows).unwrap(),
            capacity: vec![0.0; rhs.len()],
            rhs,
        }
    }

    #[test]
    fn one_by_one() {
        let s = apply_dirichlet(
            system(&[vec![3.0]], vec![1.0]),
            &DirichletSet::new([(0, 5.0)]),
        )
        .unwrap();
        assert_eq!(s.matrix.to_dense(), vec![vec![1.0]]);
        assert_eq!(s.rhs, vec![5.0]);
    }

    #[test]
    fn two_by_two_elimination() {
        let s = apply_dirichlet(
            system(&[vec![2.0, -1.0], vec![-1.0, 2.0]], vec![0.0, 0.0]),
            &DirichletSet::new([(0, 1.0)]),
        )
        .unwrap();
        assert_eq!(s.matrix.to_dense(), vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(s.rhs, vec![1.0, 1.0]);
    }

    #[test]
    fn constrain_everything() {
        let s = apply_dirichlet(
            system(
                &[
                    vec![4.0, 1.0, 0.0],
                    vec![1.0, 4.0, 1.0],
                    vec![0.0, 1.0, 4.0],
                ],
                vec![9.0, 9.0, 9.0],
            ),
            &DirichletSet::new([(0, 1.0), (1, 2.0), (2, 3.0)]),
        )
        .unwrap();
        assert_eq!(
            s.matrix.to_dense(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        assert_eq!(s.rhs, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn collect_counts_and_dedup() {
        let mesh = generate_box(&BoxMeshSpec::new([1.0; 3], [3, 4, 2]), 1).unwrap();
        assert!(collect_dirichlet(&mesh, &[]).unwrap().is_empty());
        let top = collect_dirichlet(&mesh, &[(6, -20.0)]).unwrap();
        assert_eq!(top.len(), 4 * 5);
        assert!(top.entries().iter().all(|&(_, v)| v == -20.0));

        // Faces -x and -y share an edge of 3 nodes.
        let both = collect_dirichlet(&mesh, &[(1, 1.0), (3, 1.0)]).unwrap();
        assert_eq!(both.len(), 5 * 3 + 4 * 3 - 3);
    }

    #[test]
    fn earlier_tag_wins() {
        let mesh = generate_box(&BoxMeshSpec::new([1.0; 3], [1, 1, 1]), 1).unwrap();
        let d = collect_dirichlet(&mesh, &[(1, 7.0), (3, -7.0)]).unwrap();
        let origin = mesh.nearest_node([0.0; 3]);
        assert_eq!(d.value(origin), Some(7.0));
    }

    #[test]
    fn unknown_tag() {
        let mesh = generate_box(&BoxMeshSpec::new([1.0; 3], [1, 1, 1]), 1).unwrap();
        assert!(matches!(
            collect_dirichlet(&mesh, &[(42, 0.0)]),
            Err(FemError::UnknownTag(42))
        ));
    }
}
