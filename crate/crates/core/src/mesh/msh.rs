//! Gmsh MSH 2.2 ASCII subset: `$MeshFormat`, `$Nodes`, `$Elements`.
//!
//! Element type 4 (tet4) becomes a cell, type 2 (tri3) a boundary facet. The
//! first tag of an element is its physical tag. Other sections are skipped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Mesh, MeshError, Point, Tag};

const TRIANGLE: u32 = 2;
const TETRAHEDRON: u32 = 4;

pub fn read_msh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_msh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                self.line = i + 1;
                return Some(l);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, MeshError> {
        self.next_nonempty().ok_or_else(|| MeshError::Parse {
            line: self.line,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn error(&self, message: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn expect_end(&mut self, section: &str) -> Result<(), MeshError> {
        let end = format!("$End{section}");
        let l = self.expect(&end)?;
        if l != end {
            return Err(self.error(format!("expected {end}, found `{l}`")));
        }
        Ok(())
    }

    fn count(&mut self, section: &str) -> Result<usize, MeshError> {
        let l = self.expect(&format!("{section} count"))?;
        l.parse()
            .map_err(|_| self.error(format!("invalid {section} count `{l}`")))
    }
}

struct RawElement {
    id: usize,
    kind: u32,
    tag: Tag,
    nodes: Vec<usize>,
}

/// Parses MSH 2.2 ASCII text.
pub fn parse_msh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };

    let head = lines.expect("$MeshFormat")?;
    if head != "$MeshFormat" {
        return Err(lines.error(format!("expected $MeshFormat, found `{head}`")));
    }
    let format = lines.expect("format line")?;
    let mut fields = format.split_whitespace();
    let version = fields.next().unwrap_or_default();
    if version != "2.2" {
        return Err(MeshError::UnsupportedVersion(version.to_string()));
    }
    if fields.next() != Some("0") {
        return Err(MeshError::UnsupportedVersion(format!("{version} (binary)")));
    }
    lines.expect_end("MeshFormat")?;

    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut nodes: Vec<Point> = Vec::new();
    let mut elements: Vec<RawElement> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some(header) = lines.next_nonempty() {
        let Some(name) = header.strip_prefix('$') else {
            return Err(lines.error(format!("expected a section header, found `{header}`")));
        };
        match name {
            "Nodes" => {
                if seen_nodes {
                    return Err(lines.error("duplicate $Nodes section"));
                }
                seen_nodes = true;
                let n = lines.count("node")?;
                nodes.reserve(n);
                for _ in 0..n {
                    let l = lines.expect("node line")?;
                    let vals: Vec<&str> = l.split_whitespace().collect();
                    if vals.len() != 4 {
                        return Err(lines.error(format!("malformed node line `{l}`")));
                    }
                    let id: usize = vals[0]
                        .parse()
                        .map_err(|_| lines.error(format!("invalid node id `{}`", vals[0])))?;
                    let mut p = [0.0; 3];
                    for d in 0..3 {
                        p[d] = vals[d + 1].parse().map_err(|_| {
                            lines.error(format!("invalid coordinate `{}`", vals[d + 1]))
                        })?;
                    }
                    if node_ids.insert(id, nodes.len()).is_some() {
                        return Err(lines.error(format!("duplicate node id {id}")));
                    }
                    nodes.push(p);
                }
                lines.expect_end("Nodes")?;
            }
            "Elements" => {
                if seen_elements {
                    return Err(lines.error("duplicate $Elements section"));
                }
                seen_elements = true;
                let n = lines.count("element")?;
                elements.reserve(n);
                for _ in 0..n {
                    let l = lines.expect("element line")?;
                    let vals: Result<Vec<usize>, _> =
                        l.split_whitespace().map(str::parse::<usize>).collect();
                    let vals =
                        vals.map_err(|_| lines.error(format!("malformed element line `{l}`")))?;
                    if vals.len() < 3 {
                        return Err(lines.error(format!("malformed element line `{l}`")));
                    }
                    let (id, kind, ntags) = (vals[0], vals[1] as u32, vals[2]);
                    let expected_nodes = match kind {
                        TRIANGLE => 3,
                        TETRAHEDRON => 4,
                        _ => return Err(MeshError::UnsupportedElement { element: id, kind }),
                    };
                    if vals.len() != 3 + ntags + expected_nodes {
                        return Err(lines.error(format!(
                            "element {id}: expected {ntags} tags and {expected_nodes} nodes"
                        )));
                    }
                    let tag = if ntags > 0 { vals[3] as Tag } else { 0 };
                    elements.push(RawElement {
                        id,
                        kind,
                        tag,
                        nodes: vals[3 + ntags..].to_vec(),
                    });
                }
                lines.expect_end("Elements")?;
            }
            other => {
                let end = format!("$End{other}");
                loop {
                    let l = lines.expect(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
        }
    }
    if !seen_nodes {
        return Err(lines.error("missing $Nodes section"));
    }
    if !seen_elements {
        return Err(lines.error("missing $Elements section"));
    }

    let mut cells = Vec::new();
    let mut cell_region = Vec::new();
    let mut facets = Vec::new();
    let mut facet_tag = Vec::new();
    for e in elements {
        let mut resolved = Vec::with_capacity(e.nodes.len());
        for &v in &e.nodes {
            let idx = node_ids.get(&v).ok_or(MeshError::DanglingNode {
                element: e.id,
                node: v,
            })?;
            resolved.push(*idx);
        }
        if e.kind == TETRAHEDRON {
            cells.push([resolved[0], resolved[1], resolved[2], resolved[3]]);
            cell_region.push(e.tag);
        } else {
            facets.push([resolved[0], resolved[1], resolved[2]]);
            facet_tag.push(e.tag);
        }
    }
    Mesh::new(nodes, cells, cell_region, facets, facet_tag)
}

/// Writes the mesh as MSH 2.2 ASCII with 17 significant digits per coordinate.
pub fn write_msh(mesh: &Mesh, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, format_msh(mesh))
}

pub(crate) fn format_msh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.num_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {:.16e} {:.16e} {:.16e}", i + 1, p[0], p[1], p[2]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.boundary_facets().len() + mesh.num_cells());
    let mut id = 1;
    for (f, tag) in mesh.boundary_facets().iter().zip(mesh.facet_tag()) {
        let _ = writeln!(
            s,
            "{id} 2 2 {tag} {tag} {} {} {}",
            f[0] + 1,
            f[1] + 1,
            f[2] + 1
        );
        id += 1;
    }
    for (c, tag) in mesh.cells().iter().zip(mesh.cell_region()) {
        let _ = writeln!(
            s,
            "{id} 4 2 {tag} {tag} {} {} {} {}",
            c[0] + 1,
            c[1] + 1,
            c[2] + 1,
            c[3] + 1
        );
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE_TET: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n\
        $Nodes\n4\n10 0 0 0\n11 1 0 0\n12 0 1 0\n13 0 0 1\n$EndNodes\n\
        $Elements\n1\n1 4 2 7 1 10 11 12 13\n$EndElements\n";

    #[test]
    fn single_tet() {
        let m = parse_msh(SINGLE_TET).unwrap();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.cell_region(), &[7]);
        assert_eq!(m.num_nodes(), 4);
    }

    #[test]
    fn line_element_rejected() {
        let text = SINGLE_TET.replace("1\n1 4 2 7 1 10 11 12 13", "1\n5 1 2 7 1 10 11");
        let err = parse_msh(&text).unwrap_err();
        assert!(matches!(
            err,
            MeshError::UnsupportedElement {
                element: 5,
                kind: 1
            }
        ));
        assert!(err.to_string().contains("type 1"));
    }

    #[test]
    fn version_4_rejected() {
        let text = SINGLE_TET.replace("2.2 0 8", "4.1 0 8");
        assert!(matches!(
            parse_msh(&text).unwrap_err(),
            MeshError::UnsupportedVersion(v) if v == "4.1"
        ));
    }

    #[test]
    fn binary_rejected() {
        let text = SINGLE_TET.replace("2.2 0 8", "2.2 1 8");
        assert!(matches!(
            parse_msh(&text).unwrap_err(),
            MeshError::UnsupportedVersion(_)
        ));
    }

    #[test]
    fn dangling_node_rejected() {
        let text = SINGLE_TET.replace("10 11 12 13\n$End", "10 11 12 99\n$End");
        assert!(matches!(
            parse_msh(&text).unwrap_err(),
            MeshError::DanglingNode {
                element: 1,
                node: 99
            }
        ));
    }

    #[test]
    fn malformed_section_end() {
        let text = SINGLE_TET.replace("$EndNodes", "$EndNode");
        assert!(matches!(
            parse_msh(&text).unwrap_err(),
            MeshError::Parse { .. }
        ));
    }

    #[test]
    fn unknown_sections_skipped() {
        let text = SINGLE_TET.replace(
            "$Nodes",
            "$PhysicalNames\n1\n3 7 \"soil\"\n$EndPhysicalNames\n$Nodes",
        );
        assert_eq!(parse_msh(&text).unwrap().num_cells(), 1);
    }

    #[test]
    fn untagged_element_gets_region_zero() {
        let text = SINGLE_TET.replace("1 4 2 7 1 10", "1 4 0 10");
        assert_eq!(parse_msh(&text).unwrap().cell_region(), &[0]);
    }
}
